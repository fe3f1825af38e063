//! Synthetic character-level domains and the schedule that introduces them.
//!
//! Each of the ten families is a small template grammar: templates are
//! strings with `{w}` (lexicon word), `{W}` (capitalized lexicon word),
//! `{U}` (upper-cased lexicon word), `{f}` (shared English filler) and `{n}`
//! (digit) slots; any other text is
//! literal. Units are joined with family-specific extra punctuation at a
//! family-specific rate, and a sample is a 32-character window of the
//! resulting text. Everything is printable ASCII.
//!
//! Example strings (variant 0, seed 0):
//!
//! | family     | samples |
//! |------------|---------|
//! | scientific | `um-enzyme at 4.7x10^-8 the quant` / `] ~94 electron-molecule at 3.5x1` |
//! | news       | `rm Officials Said Coalition Woul` / `Officials Said Reform Would Summ` |
//! | dialog     | `k later... a: wait wut?? . b: ok` / `sorry tho? a: idk with coffee a:` |
//! | medical    | ` +ve, tachycardia -ve; / Hx biop` / ` +ve, amoxicillin -ve; Hx hypert` |
//! | code       | `_result(x: i32) -> i32 { x + 2 }` / `fer = vec![1, 7]; fn index_token` |
//! | poetry     | `d ember / hollow / , the whisper` / `river and sky / moon / / the sor` |
//! | financial  | `estor $2.8B vs $1.0B est; Divide` / `-2.0%, earnings $93M; Q6 earning` |
//! | sports     | `per 72' WHAT A League!!! Goalkee` / `3 Referee!! GOAL!! Goalkeeper 35` |
//! | math       | `ntegral: 8/0 = 0.13 matrix: 3/1 ` / `9 = 0.07 tensor: 9/4 = 0.85 inte` |
//! | legal      | `3: HEREIN HEREIN; the defendant ` / `HEREFORE, THE STATUTE AND ARBITR` |
//!
//! Variants above 0 re-draw 30% of the family lexicon from a reserve list,
//! re-weight the templates, rescale the punctuation rate and glue two
//! variant-specific marks onto lexicon words; sibling variants use disjoint
//! marks. A medical variant, for instance:
//! `x: tachycardia; Rx: fatigue 90mg` / ` amoxicillin= x9d; BP 156/80; HR`

use std::fmt;
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Example, Input};
use crate::rng;

pub const VOCAB: usize = 128;
pub const SEQ_LEN: usize = 32;

/// XOR-ed into the run seed to obtain the held-out namespace.
pub const EVAL_SEED_SALT: u64 = 0x5EED_E7A1_0000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Scientific,
    News,
    Dialog,
    Medical,
    Code,
    Poetry,
    Financial,
    Sports,
    Math,
    Legal,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::Scientific,
        Family::News,
        Family::Dialog,
        Family::Medical,
        Family::Code,
        Family::Poetry,
        Family::Financial,
        Family::Sports,
        Family::Math,
        Family::Legal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Scientific => "scientific",
            Family::News => "news",
            Family::Dialog => "dialog",
            Family::Medical => "medical",
            Family::Code => "code",
            Family::Poetry => "poetry",
            Family::Financial => "financial",
            Family::Sports => "sports",
            Family::Math => "math",
            Family::Legal => "legal",
        }
    }

    fn grammar(self) -> &'static Grammar {
        &GRAMMARS[self as usize]
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

struct Grammar {
    templates: &'static [&'static str],
    lexicon: &'static [&'static str],
    reserve: &'static [&'static str],
    marks: &'static [u8],
    mark_rate: f64,
}

const FILLER: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "is", "that", "for", "with", "on", "as", "was", "it",
    "by", "at", "from", "this", "be", "or",
];

static GRAMMARS: [Grammar; 10] = [
    Grammar {
        templates: &[
            "the {w} of {w} (n={n}{n}) ",
            "{w}-{w} at {n}.{n}x10^-{n} ",
            "{w} [{n}] ~{n}{n} ",
            "observed {f} {w} ({w}, p<0.0{n}) ",
        ],
        lexicon: &[
            "hypothesis", "electron", "quantum", "molecule", "spectrum", "protein", "catalyst",
            "neutron", "entropy", "isotope", "enzyme", "photon", "lattice", "plasma",
        ],
        reserve: &[
            "genome", "polymer", "reagent", "kinetics", "orbital", "membrane", "colloid", "boson",
            "crystal", "nucleus",
        ],
        marks: b"()[",
        mark_rate: 0.2,
    },
    Grammar {
        templates: &[
            "{W} Officials Said {W} Would {W}, ",
            "\"{W} {W},\" Reporters Said. ",
            "BREAKING: {W} In {W} Capital. ",
            "The {W} Announced A {W} Monday. ",
        ],
        lexicon: &[
            "government", "election", "minister", "parliament", "protest", "senator", "coalition",
            "reform", "campaign", "scandal", "summit", "embassy", "verdict", "ministry",
        ],
        reserve: &[
            "cabinet", "president", "diplomat", "rally", "mayor", "spokesman", "referendum",
            "treaty", "council", "governor",
        ],
        marks: b",\"",
        mark_rate: 0.25,
    },
    Grammar {
        templates: &[
            "a: hey {w} u? b: yeah lol {w}! ",
            "b: ok ok {w}... a: wait wut?? ",
            "a: omg {w}!! b: haha ",
            "b: {w} tho? a: idk {f} {w} ",
        ],
        lexicon: &[
            "yeah", "okay", "pizza", "tonight", "movie", "weekend", "dude", "honestly", "totally",
            "awesome", "later", "maybe", "coffee", "sorry",
        ],
        reserve: &[
            "bro", "party", "literally", "seriously", "nope", "snacks", "gonna", "wanna",
            "kinda", "whatever",
        ],
        marks: b"?!.",
        mark_rate: 0.35,
    },
    Grammar {
        templates: &[
            "Pt c/o {w} x{n}d; BP 1{n}{n}/{n}0; HR {n}{n}; ",
            "Dx: {w}; Rx: {w} {n}0mg PO BID; ",
            "{W} +ve, {w} -ve; ",
            "Hx {w}; r/o {w}; ",
        ],
        lexicon: &[
            "nausea", "fever", "fatigue", "dyspnea", "tachycardia", "edema", "hypertension",
            "insulin", "amoxicillin", "lesion", "biopsy", "sepsis", "anemia", "migraine",
        ],
        reserve: &[
            "asthma", "warfarin", "syncope", "pneumonia", "metformin", "rash", "vertigo",
            "angina", "diabetes", "heparin",
        ],
        marks: b";/",
        mark_rate: 0.3,
    },
    Grammar {
        templates: &[
            "fn {w}_{w}(x: i32) -> i32 { x + {n} } ",
            "if ({w} == {n}) { {w}_{w}++; } ",
            "let {w} = vec![{n}, {n}]; ",
            "for i in 0..{n} { {w}[i] = 0; } ",
        ],
        lexicon: &[
            "count", "buffer", "index", "node", "result", "value", "parse", "handle", "config",
            "stack", "queue", "token", "iter", "cache",
        ],
        reserve: &[
            "ptr", "len", "self", "args", "data", "tmp", "offset", "state", "ctx", "flags",
        ],
        marks: b";}",
        mark_rate: 0.3,
    },
    Grammar {
        templates: &[
            "the {w} / {w} in the {w} / ",
            "o {w}, soft {w} of {w} / ",
            "{w} and {w} / {w} / ",
            "where {f} {w} sleeps / ",
        ],
        lexicon: &[
            "moon", "silver", "willow", "river", "whisper", "dusk", "rose", "ember", "sorrow",
            "meadow", "dream", "hollow", "gentle", "sky",
        ],
        reserve: &[
            "petal", "twilight", "ivy", "longing", "sparrow", "frost", "amber", "lantern", "tide",
            "wren",
        ],
        marks: b"/,",
        mark_rate: 0.3,
    },
    Grammar {
        templates: &[
            "{W} +{n}.{n}% to ${n}{n}.{n}{n}; ",
            "Q{n} {w} ${n}.{n}B vs ${n}.{n}B est; ",
            "EPS ${n}.{n}{n}, {w} {n}{n}%; ",
            "{W} -{n}.{n}%, {w} ${n}{n}M; ",
        ],
        lexicon: &[
            "revenue", "dividend", "equity", "earnings", "bond", "portfolio", "hedge", "yield",
            "capital", "futures", "liquidity", "asset", "inflation", "investor",
        ],
        reserve: &[
            "treasury", "stock", "credit", "forex", "margin", "option", "index", "fund", "debt",
            "broker",
        ],
        marks: b"%$",
        mark_rate: 0.3,
    },
    Grammar {
        templates: &[
            "GOAL!! {W} {n}{n}' ",
            "FT: {W} {n}-{n} {W}!! ",
            "{W} vs {W} - {w} {w}! ",
            "WHAT A {W}!!! ",
        ],
        lexicon: &[
            "striker", "goalkeeper", "penalty", "league", "match", "tackle", "champion", "derby",
            "coach", "stadium", "referee", "season", "playoff", "keeper",
        ],
        reserve: &[
            "midfield", "corner", "header", "trophy", "fans", "winger", "offside", "volley",
            "captain", "rival",
        ],
        marks: b"!-",
        mark_rate: 0.35,
    },
    Grammar {
        templates: &[
            "x = {n}y^2 + {n}z - {n} ",
            "f(x) = {n}x^{n} - {n}x + {n} ",
            "{w}: {n}/{n} = 0.{n}{n} ",
            "sum_{i=1}^{n} i^2 = {n}{n} ",
        ],
        lexicon: &[
            "theorem", "lemma", "integral", "matrix", "proof", "prime", "vector", "limit",
            "series", "derivative", "sigma", "modulo", "axiom", "tensor",
        ],
        reserve: &[
            "kernel", "norm", "field", "ring", "group", "basis", "root", "graph", "log", "bound",
        ],
        marks: b"=+",
        mark_rate: 0.35,
    },
    Grammar {
        templates: &[
            "WHEREAS THE {U} SHALL {U} PURSUANT TO SECTION {n}.{n}; ",
            "the {w} {f} (hereinafter \"{U}\") SHALL ",
            "NOW, THEREFORE, THE {U} AND {U} AGREE: ",
            "ARTICLE {n}: {U} HEREIN; ",
        ],
        lexicon: &[
            "party", "agreement", "clause", "tenant", "liability", "plaintiff", "defendant",
            "covenant", "lessor", "warranty", "arbitration", "statute", "jurisdiction", "herein",
        ],
        reserve: &[
            "licensee", "indemnity", "breach", "remedy", "lessee", "easement", "assignee",
            "tribunal", "counsel", "estoppel",
        ],
        marks: b";:",
        mark_rate: 0.25,
    },
];

const VARIANT_REDRAW: f64 = 0.3;
const VARIANT_EXTRA_MARKS: usize = 2;
const VARIANT_MARKS: &[u8] = b"#&*@|~<>^+=%$!?";

/// One synthetic domain: a family, a variant and the class it is labeled with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSpec {
    pub family: Family,
    pub variant: usize,
    pub label: usize,
    pub seed: u64,
}

impl DomainSpec {
    pub fn new(family: Family, variant: usize, label: usize, seed: u64) -> Self {
        Self {
            family,
            variant,
            label,
            seed,
        }
    }

    pub fn name(&self) -> String {
        format!("{}/v{}", self.family, self.variant)
    }

    /// Lexicon, template mix and punctuation profile for this variant.
    ///
    /// Variant 0 is the family's base grammar. Later variants re-draw part
    /// of the lexicon from the reserve, re-weight the templates, rescale the
    /// family mark rate and adopt a couple of variant-specific marks.
    fn realize(&self) -> Realized {
        let g = self.family.grammar();
        let mut lexicon: Vec<&'static str> = g.lexicon.to_vec();
        let mut mark_rate = g.mark_rate;
        let mut weights = vec![1.0; g.templates.len()];
        let mut extra_marks = Vec::new();
        let mut extra_rate = 0.0;
        if self.variant > 0 {
            let mut r = rng::stream(self.seed, &[0x7A1A, self.variant as u64]);
            let k = (VARIANT_REDRAW * lexicon.len() as f64).round() as usize;
            let slots: Vec<usize> = rand::seq::index::sample(&mut r, lexicon.len(), k).into_vec();
            let picks: Vec<&'static str> = g.reserve.choose_multiple(&mut r, k).copied().collect();
            for (slot, word) in slots.into_iter().zip(picks) {
                lexicon[slot] = word;
            }
            mark_rate *= r.gen_range(0.4..1.6);
            for w in &mut weights {
                *w = r.gen_range(0.05f64..1.0).powi(2);
            }
            // Sibling variants take disjoint slices of the pool so they stay
            // distinguishable from each other, not just from the base grammar.
            let pool: Vec<u8> = VARIANT_MARKS
                .iter()
                .copied()
                .filter(|m| !g.marks.contains(m))
                .collect();
            let start = (self.family as usize * 3 + (self.variant - 1) * VARIANT_EXTRA_MARKS) % pool.len();
            extra_marks = (0..VARIANT_EXTRA_MARKS)
                .map(|i| pool[(start + i) % pool.len()])
                .collect();
            extra_rate = r.gen_range(0.6..0.9);
        }
        Realized {
            templates: g.templates,
            template_pick: WeightedIndex::new(&weights).expect("positive template weights"),
            lexicon,
            marks: g.marks,
            mark_rate,
            extra_marks,
            extra_rate,
        }
    }

    /// `n` samples from the stream identified by `seed`.
    pub fn generate(&self, seed: u64, n: usize) -> Vec<Sample> {
        let real = self.realize();
        let mut r = rng::stream(seed, &[self.seed, self.label as u64]);
        (0..n).map(|_| real.sample(&mut r, self.label)).collect()
    }

    pub fn sample_with(&self, r: &mut impl Rng) -> Sample {
        self.realize().sample(r, self.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Realized {
    templates: &'static [&'static str],
    template_pick: WeightedIndex<f64>,
    lexicon: Vec<&'static str>,
    marks: &'static [u8],
    mark_rate: f64,
    extra_marks: Vec<u8>,
    extra_rate: f64,
}

impl Realized {
    /// Variant-specific mark glued to the end of a lexicon word.
    fn variant_mark(&self, r: &mut impl Rng, out: &mut Vec<u8>) {
        if !self.extra_marks.is_empty() && r.gen_bool(self.extra_rate) {
            out.push(*self.extra_marks.choose(r).unwrap());
        }
    }

    fn unit(&self, r: &mut impl Rng, out: &mut Vec<u8>) {
        let template = self.templates[self.template_pick.sample(r)];
        let t = template.as_bytes();
        let mut i = 0;
        while i < t.len() {
            if t[i] == b'{' && i + 2 < t.len() && t[i + 2] == b'}' {
                match t[i + 1] {
                    b'w' => {
                        out.extend_from_slice(self.lexicon.choose(r).unwrap().as_bytes());
                        self.variant_mark(r, out);
                        i += 3;
                        continue;
                    }
                    b'W' => {
                        let w = self.lexicon.choose(r).unwrap().as_bytes();
                        out.push(w[0].to_ascii_uppercase());
                        out.extend_from_slice(&w[1..]);
                        self.variant_mark(r, out);
                        i += 3;
                        continue;
                    }
                    b'U' => {
                        let w = self.lexicon.choose(r).unwrap().as_bytes();
                        out.extend(w.iter().map(|c| c.to_ascii_uppercase()));
                        self.variant_mark(r, out);
                        i += 3;
                        continue;
                    }
                    b'f' => {
                        out.extend_from_slice(FILLER.choose(r).unwrap().as_bytes());
                        i += 3;
                        continue;
                    }
                    b'n' => {
                        out.push(b'0' + r.gen_range(0..10u8));
                        i += 3;
                        continue;
                    }
                    _ => {}
                }
            }
            out.push(t[i]);
            i += 1;
        }
        if r.gen_bool(self.mark_rate.min(1.0)) {
            out.push(*self.marks.choose(r).unwrap());
            out.push(b' ');
        }

    }

    fn sample(&self, r: &mut impl Rng, label: usize) -> Sample {
        let offset = r.gen_range(0..SEQ_LEN / 2);
        let mut text = Vec::with_capacity(SEQ_LEN * 3);
        while text.len() < offset + SEQ_LEN {
            self.unit(r, &mut text);
        }
        Sample {
            tokens: text[offset..offset + SEQ_LEN].to_vec(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub tokens: Vec<u8>,
    pub label: usize,
}

impl Sample {
    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.tokens).into_owned()
    }

    pub fn to_example(&self) -> Example {
        Example {
            input: Input::Tokens(self.tokens.clone()),
            label: self.label,
        }
    }
}

/// How a training batch is drawn once several domains have been introduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Only the most recently introduced domain.
    Current,
    /// Uniformly over every domain introduced so far.
    Cumulative,
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "current" => Ok(Sampling::Current),
            "cumulative" => Ok(Sampling::Cumulative),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampling '{other}' (expected current|cumulative)"
            ))),
        }
    }
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampling::Current => "current",
            Sampling::Cumulative => "cumulative",
        })
    }
}

/// Ordered domains, each introduced `phase_length` steps after the previous.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSchedule {
    pub domains: Vec<DomainSpec>,
    pub phase_length: usize,
    pub sampling: Sampling,
    realized: Vec<Realized>,
}

impl DomainSchedule {
    pub fn new(domains: Vec<DomainSpec>, phase_length: usize, sampling: Sampling) -> Result<Self> {
        if domains.is_empty() || phase_length == 0 {
            return Err(Error::InvalidConfig(
                "schedule needs at least one domain and a positive phase length".into(),
            ));
        }
        // Cached so batch generation does not redo the variant draw.
        let realized = domains.iter().map(DomainSpec::realize).collect();
        Ok(Self {
            domains,
            phase_length,
            sampling,
            realized,
        })
    }

    /// `families x variants` domains in variant-major order: all base
    /// families first, then the first variant of each family, and so on.
    pub fn families(
        n_domains: usize,
        phase_length: usize,
        sampling: Sampling,
        seed: u64,
    ) -> Result<Self> {
        let domains = (0..n_domains)
            .map(|label| {
                let family = Family::ALL[label % Family::ALL.len()];
                let variant = label / Family::ALL.len();
                let dseed = rng::derive(seed, &[0xD0, family as u64, variant as u64]);
                DomainSpec::new(family, variant, label, dseed)
            })
            .collect();
        Self::new(domains, phase_length, sampling)
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        self.domains.len() * self.phase_length
    }

    pub fn intro_step(&self, domain: usize) -> usize {
        domain * self.phase_length
    }

    /// Index of the most recently introduced domain at `step`.
    pub fn active_domain(&self, step: usize) -> usize {
        (step / self.phase_length).min(self.domains.len() - 1)
    }

    /// A training batch for `step`.
    pub fn batch(&self, step: usize, batch_size: usize, r: &mut impl Rng) -> Result<Vec<Sample>> {
        if step >= self.total_steps() {
            return Err(Error::ScheduleExhausted {
                step,
                total: self.total_steps(),
            });
        }
        let active = self.active_domain(step);
        let current = &self.realized[active];
        let mut out = Vec::with_capacity(batch_size);
        match self.sampling {
            Sampling::Current => {
                for _ in 0..batch_size {
                    out.push(current.sample(r, self.domains[active].label));
                }
            }
            Sampling::Cumulative => {
                for _ in 0..batch_size {
                    let d = r.gen_range(0..=active);
                    out.push(self.realized[d].sample(r, self.domains[d].label));
                }
            }
        }
        Ok(out)
    }

    /// Held-out samples for domains `0..=up_to_domain`, `per_domain` each,
    /// drawn from the evaluation seed namespace.
    pub fn eval_set(&self, up_to_domain: usize, per_domain: usize, seed: u64) -> Vec<Sample> {
        let last = up_to_domain.min(self.domains.len() - 1);
        (0..=last)
            .flat_map(|d| self.eval_domain(d, per_domain, seed))
            .collect()
    }

    pub fn eval_domain(&self, domain: usize, per_domain: usize, seed: u64) -> Vec<Sample> {
        let real = &self.realized[domain];
        let mut r = rng::stream(seed ^ EVAL_SEED_SALT, &[domain as u64]);
        (0..per_domain)
            .map(|_| real.sample(&mut r, self.domains[domain].label))
            .collect()
    }
}

/// Writes `label<TAB>text` lines.
pub fn dump_tsv(w: &mut impl Write, samples: &[Sample]) -> Result<()> {
    for s in samples {
        writeln!(w, "{}\t{}", s.label, s.text())?;
    }
    Ok(())
}
