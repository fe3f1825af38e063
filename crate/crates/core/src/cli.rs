//! Experiment front-end: presets, the key=value config format, experiment
//! drivers, acceptance-band checks and artifact writing.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::clustering::{self, ClusterConfig, LayerPurity};
use crate::detector::{DetectorConfig, SustainedConfig};
use crate::domains::{self, Sampling};
use crate::error::{Error, Result};
use crate::ingest::{self, EmbeddingStream, DEFAULT_EMBED_PHASE, DEFAULT_HOLDOUT};
use crate::plot;
use crate::trainer::{self, Mode, RunReport, TaskStream, TrainConfig, TrainedRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// 10 domains: dynamic vs fixed-large vs fixed-small.
    Exp1,
    /// Per-domain forgetting of the exp1 runs.
    Exp2,
    /// Adapter ablation of the exp1 dynamic model.
    Exp3,
    /// Confirmation window K=1 vs K=3.
    Exp4,
    /// 50 domains from a narrow base width.
    Exp5,
    /// PCA + online clustering purity per layer.
    ClusterSweep,
    /// Dynamic classifier on precomputed embedding vectors.
    RealEmbed,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Debug, Parser)]
#[command(name = "lace", about = "Loss-spike driven capacity expansion experiments")]
pub struct Args {
    /// Experiment to run.
    #[arg(long, value_enum)]
    pub exp: Experiment,
    /// key=value file overriding the experiment preset (`#` starts a comment).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra key=value override, applied after the config file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed; overrides any seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Existing directory that receives every artifact.
    #[arg(long)]
    pub out: PathBuf,
    /// Check the experiment's acceptance bands; exit 1 if any fails.
    #[arg(long)]
    pub check: bool,
    /// Write the held-out corpus as `corpus.tsv` instead of training.
    #[arg(long)]
    pub dump_corpus: bool,
    /// LACT activation files: one per layer (cluster-sweep) or one per
    /// domain / a single labeled file (real-embed).
    #[arg(long = "input", value_name = "FILE")]
    pub inputs: Vec<PathBuf>,
}

/// Everything an experiment needs beyond its id.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub exp: Experiment,
    pub train: TrainConfig,
    pub n_domains: usize,
    pub phase_length: usize,
    pub sampling: Sampling,
    pub cluster: ClusterConfig,
    pub holdout: f64,
    pub embed_phase: usize,
}

/// Sustained-loss settings used by the 50-domain preset.
pub const EXP5_SUSTAINED: SustainedConfig = SustainedConfig {
    threshold: 1.0,
    steps: 50,
};

pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "d_base",
    "d_max",
    "d_emb",
    "batch_size",
    "lr",
    "sigma",
    "window",
    "spike_ratio",
    "confirm",
    "cooldown",
    "warmup",
    "sustained",
    "n_domains",
    "phase_length",
    "sampling",
    "eval_interval",
    "eval_per_domain",
    "d_pca",
    "cluster_threshold",
    "holdout",
    "embed_phase",
];

impl ExperimentConfig {
    pub fn preset(exp: Experiment) -> Self {
        let mut cfg = Self {
            exp,
            train: TrainConfig::default(),
            n_domains: 10,
            phase_length: 200,
            sampling: Sampling::Cumulative,
            cluster: ClusterConfig::default(),
            holdout: DEFAULT_HOLDOUT,
            embed_phase: DEFAULT_EMBED_PHASE,
        };
        match exp {
            Experiment::Exp5 => {
                cfg.n_domains = 50;
                cfg.train.d_base = 8;
                cfg.train.d_max = 48;
                cfg.train.detector.sustained = Some(EXP5_SUSTAINED);
            }
            Experiment::RealEmbed => {
                cfg.train.d_base = 32;
                cfg.train.d_max = 128;
            }
            _ => {}
        }
        cfg
    }

    /// Applies one `key=value` pair; `line` is used for error messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        fn num<T: std::str::FromStr>(v: &str, key: &str, line: usize) -> Result<T> {
            v.parse().map_err(|_| Error::Config {
                line,
                msg: format!("invalid value '{v}' for {key}"),
            })
        }
        let t = &mut self.train;
        let det: &mut DetectorConfig = &mut t.detector;
        match key {
            "seed" => t.seed = num(value, key, line)?,
            "d_base" => t.d_base = num(value, key, line)?,
            "d_max" => t.d_max = num(value, key, line)?,
            "d_emb" => t.d_emb = num(value, key, line)?,
            "batch_size" => t.batch_size = num(value, key, line)?,
            "lr" => t.lr = num(value, key, line)?,
            "sigma" => t.sigma = num(value, key, line)?,
            "window" => det.window = num(value, key, line)?,
            "spike_ratio" => det.spike_ratio = num(value, key, line)?,
            "confirm" => det.confirm = num(value, key, line)?,
            "cooldown" => det.cooldown = num(value, key, line)?,
            "warmup" => det.warmup = num(value, key, line)?,
            "sustained" => {
                det.sustained = if value == "off" {
                    None
                } else {
                    let (th, s) = value.split_once(',').ok_or_else(|| Error::Config {
                        line,
                        msg: "sustained expects 'off' or '<threshold>,<steps>'".into(),
                    })?;
                    Some(SustainedConfig {
                        threshold: num(th.trim(), key, line)?,
                        steps: num(s.trim(), key, line)?,
                    })
                }
            }
            "n_domains" => self.n_domains = num(value, key, line)?,
            "phase_length" => self.phase_length = num(value, key, line)?,
            "sampling" => {
                self.sampling = value.parse().map_err(|e: Error| Error::Config {
                    line,
                    msg: e.to_string(),
                })?
            }
            "eval_interval" => t.eval_interval = num(value, key, line)?,
            "eval_per_domain" => t.eval_per_domain = num(value, key, line)?,
            "d_pca" => self.cluster.d_pca = num(value, key, line)?,
            "cluster_threshold" => self.cluster.threshold = num(value, key, line)?,
            "holdout" => self.holdout = num(value, key, line)?,
            "embed_phase" => self.embed_phase = num(value, key, line)?,
            other => {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key '{other}' (known: {})", CONFIG_KEYS.join(", ")),
                })
            }
        }
        Ok(())
    }

    /// Applies a config file body: `key = value` lines, `#` comments and
    /// blank lines.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                msg: format!("expected key=value, got '{line}'"),
            })?;
            self.set(k.trim(), v.trim(), i + 1)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.n_domains == 0 || self.phase_length == 0 || self.embed_phase == 0 {
            return Err(Error::InvalidConfig(
                "n_domains, phase_length and embed_phase must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::InvalidConfig("holdout must lie in [0, 1)".into()));
        }
        if self.cluster.d_pca == 0 || self.cluster.threshold.is_nan() || self.cluster.threshold < 0.0 {
            return Err(Error::InvalidConfig(
                "d_pca must be positive and cluster_threshold non-negative".into(),
            ));
        }
        Ok(())
    }

    /// The preset for `args.exp` with the config file, `--set` overrides and
    /// `--seed` applied in that order.
    pub fn from_args(args: &Args) -> Result<Self> {
        let mut cfg = Self::preset(args.exp);
        if let Some(path) = &args.config {
            cfg.apply_text(&fs::read_to_string(path)?)?;
        }
        for (i, kv) in args.overrides.iter().enumerate() {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                msg: format!("--set expects KEY=VALUE, got '{kv}'"),
            })?;
            cfg.set(k.trim(), v.trim(), i + 1)?;
        }
        if let Some(seed) = args.seed {
            cfg.train.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn schedule(&self) -> Result<domains::DomainSchedule> {
        trainer::synthetic_schedule(self.n_domains, self.phase_length, self.sampling, self.train.seed)
    }
}

/// One acceptance band and whether it held.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_string(out: &Path, name: &str, body: &str) -> Result<()> {
    fs::write(out.join(name), body)?;
    Ok(())
}

fn label(mode: Mode) -> &'static str {
    match mode {
        Mode::Dynamic => "lace",
        Mode::FixedLarge => "fixed_large",
        Mode::FixedSmall => "fixed_small",
    }
}

/// Summary row plus report, per-domain, events CSVs, both figures and the
/// final weights as a checkpoint.
fn write_run(out: &Path, name: &str, run: &TrainedRun, summary: &mut impl Write) -> Result<()> {
    let r = &run.report;
    writeln!(summary, "{}", trainer::summary_row(name, r))?;
    trainer::write_report_csv(&mut create(out, &format!("{name}_report.csv"))?, r)?;
    trainer::write_perdomain_csv(&mut create(out, &format!("{name}_perdomain.csv"))?, r)?;
    trainer::write_events_csv(&mut create(out, &format!("{name}_events.csv"))?, r)?;
    write_string(out, &format!("{name}_curves.svg"), &plot::training_curves(r, name))?;
    write_string(out, &format!("{name}_accuracy.svg"), &plot::accuracy_strip(r, name))?;
    let mut ckpt = create(out, &format!("{name}_model.bin"))?;
    run.model.save(&mut ckpt)?;
    ckpt.flush()?;
    Ok(())
}

fn find(runs: &[TrainedRun], mode: Mode) -> &TrainedRun {
    runs.iter().find(|r| r.report.mode == mode).expect("all modes run")
}

/// Largest per-domain drop from peak to final accuracy.
pub fn worst_forgetting(r: &RunReport) -> f64 {
    trainer::forgetting(r).into_iter().flatten().fold(0.0, f64::max)
}

pub fn exp1_checks(runs: &[TrainedRun]) -> Vec<Check> {
    let (lace, fl, fs) = (
        &find(runs, Mode::Dynamic).report,
        &find(runs, Mode::FixedLarge).report,
        &find(runs, Mode::FixedSmall).report,
    );
    vec![
        Check::new("exp1 lace accuracy >= 0.98", lace.final_accuracy >= 0.98, format!("{:.4}", lace.final_accuracy)),
        Check::new("exp1 fixed_large accuracy >= 0.98", fl.final_accuracy >= 0.98, format!("{:.4}", fl.final_accuracy)),
        Check::new("exp1 fixed_small accuracy >= 0.97", fs.final_accuracy >= 0.97, format!("{:.4}", fs.final_accuracy)),
        Check::new(
            "exp1 boundary precision = 1.0",
            lace.boundary_precision == 1.0 && !lace.precision_vacuous,
            format!("{:.3} over {} events", lace.boundary_precision, lace.events.len()),
        ),
        Check::new(
            "exp1 expansions in [5, 20]",
            (5..=20).contains(&lace.events.len()),
            lace.events.len().to_string(),
        ),
        Check::new(
            "exp1 d_avg < d_max",
            lace.d_avg < lace.d_max as f64,
            format!("{:.2} < {}", lace.d_avg, lace.d_max),
        ),
    ]
}

pub fn exp2_checks(runs: &[TrainedRun]) -> Vec<Check> {
    [Mode::Dynamic, Mode::FixedLarge]
        .iter()
        .map(|&m| {
            let w = worst_forgetting(&find(runs, m).report);
            Check::new(format!("exp2 {} forgetting <= 0.05", label(m)), w <= 0.05, format!("worst {w:.3}"))
        })
        .collect()
}

pub fn exp3_checks(rows: &[trainer::AblationRow]) -> Vec<Check> {
    use trainer::AblationCondition as C;
    let base = rows.iter().find(|r| r.condition == C::Baseline).map(|r| r.drop);
    let all = rows.iter().find(|r| r.condition == C::AllAdapters).map(|r| r.drop);
    let max_single = rows
        .iter()
        .filter(|r| matches!(r.condition, C::Dim(_)))
        .map(|r| r.drop)
        .fold(f64::NEG_INFINITY, f64::max);
    let all = all.unwrap_or(f64::NAN);
    vec![
        Check::new("exp3 collective drop >= 0.01", all >= 0.01, format!("{all:.4}")),
        Check::new(
            "exp3 collective drop >= max individual",
            all >= max_single,
            format!("{all:.4} vs {max_single:.4}"),
        ),
        Check::new("exp3 baseline drop = 0", base == Some(0.0), format!("{base:?}")),
    ]
}

/// `(k, run)` pairs from the confirmation comparison.
pub fn exp4_checks(runs: &[(usize, TrainedRun)], replayed: &[(usize, usize)]) -> Vec<Check> {
    let mut out = Vec::new();
    for (k, r) in runs {
        let r = &r.report;
        out.push(Check::new(
            format!("exp4 K={k} precision = 1.0"),
            r.boundary_precision == 1.0 && !r.precision_vacuous,
            format!("{:.3} over {} events", r.boundary_precision, r.events.len()),
        ));
        out.push(Check::new(
            format!("exp4 K={k} accuracy >= 0.98"),
            r.final_accuracy >= 0.98,
            format!("{:.4}", r.final_accuracy),
        ));
    }
    let count = |k: usize| replayed.iter().find(|(kk, _)| *kk == k).map(|(_, n)| *n);
    if let (Some(n1), Some(n3)) = (count(1), count(3)) {
        out.push(Check::new(
            "exp4 replayed expansions K=3 <= K=1",
            n3 <= n1,
            format!("{n3} <= {n1}"),
        ));
    }
    out
}

pub fn exp5_checks(runs: &[TrainedRun]) -> Vec<Check> {
    let (lace, fl, fs) = (
        &find(runs, Mode::Dynamic).report,
        &find(runs, Mode::FixedLarge).report,
        &find(runs, Mode::FixedSmall).report,
    );
    let (a, l, s) = (lace.final_accuracy, fl.final_accuracy, fs.final_accuracy);
    vec![
        Check::new("exp5 fixed_small + 0.10 <= lace", s + 0.10 <= a, format!("{s:.4} + 0.10 <= {a:.4}")),
        Check::new("exp5 lace <= fixed_large + 0.02", a <= l + 0.02, format!("{a:.4} <= {l:.4} + 0.02")),
        Check::new("exp5 fixed_small <= 0.7 x fixed_large", s <= 0.7 * l, format!("{s:.4} <= 0.7 x {l:.4}")),
        Check::new(
            "exp5 lace d_final in (d_base, d_max]",
            lace.d_final > lace.d_base && lace.d_final <= lace.d_max,
            format!("{} in ({}, {}]", lace.d_final, lace.d_base, lace.d_max),
        ),
    ]
}

fn run_modes(cfg: &ExperimentConfig, stream: &dyn TaskStream, out: &Path) -> Result<Vec<TrainedRun>> {
    let runs = trainer::run_baselines(&cfg.train, stream)?;
    let mut summary = create(out, "summary.csv")?;
    writeln!(summary, "{}", trainer::SUMMARY_HEADER)?;
    for r in &runs {
        write_run(out, label(r.report.mode), r, &mut summary)?;
    }
    summary.flush()?;
    Ok(runs)
}

fn write_forgetting(out: &Path, runs: &[TrainedRun]) -> Result<()> {
    let mut w = create(out, "forgetting.csv")?;
    writeln!(w, "mode,domain,peak,final,drop")?;
    for r in runs {
        let curves = trainer::forgetting_curves(&r.report);
        let n = r.report.evals.first().map_or(0, |e| e.per_domain.len());
        for d in 0..n {
            let accs: Vec<f64> = r.report.evals.iter().filter_map(|e| e.per_domain[d]).collect();
            let (Some(&last), Some(drop)) = (accs.last(), curves.last().and_then(|c| c[d])) else {
                continue;
            };
            let peak = accs.iter().cloned().fold(f64::MIN, f64::max);
            writeln!(w, "{},{d},{peak:.4},{last:.4},{drop:.4}", label(r.report.mode))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cluster_sets(cfg: &ExperimentConfig, inputs: &[PathBuf]) -> Result<Vec<clustering::ActivationSet>> {
    if inputs.is_empty() {
        return Ok(clustering::blob_layers(4, 3, 200, 64, cfg.train.seed));
    }
    inputs.iter().map(ingest::read_lact).collect()
}

fn embedding_stream(cfg: &ExperimentConfig, inputs: &[PathBuf]) -> Result<EmbeddingStream> {
    let seed = cfg.train.seed;
    match inputs {
        [] => {
            let sets = ingest::pseudo_embeddings(3, 200, 768, 0.5, seed);
            EmbeddingStream::from_domain_sets(&sets, &[cfg.embed_phase; 3], cfg.holdout, seed)
        }
        [one] => {
            let set = ingest::read_lact(one)?;
            EmbeddingStream::from_labeled_set(&set, cfg.embed_phase, cfg.holdout, seed)
        }
        many => {
            let sets = many.iter().map(ingest::read_lact).collect::<Result<Vec<_>>>()?;
            EmbeddingStream::from_domain_sets(&sets, &vec![cfg.embed_phase; sets.len()], cfg.holdout, seed)
        }
    }
}

/// Runs one experiment, writing artifacts into `out`. Returns the
/// acceptance checks that apply to it (empty when none do).
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, inputs: &[PathBuf]) -> Result<Vec<Check>> {
    match cfg.exp {
        Experiment::Exp1 | Experiment::Exp2 | Experiment::Exp3 | Experiment::Exp5 => {
            let sched = cfg.schedule()?;
            let runs = run_modes(cfg, &sched, out)?;
            Ok(match cfg.exp {
                Experiment::Exp1 => exp1_checks(&runs),
                Experiment::Exp2 => {
                    write_forgetting(out, &runs)?;
                    exp2_checks(&runs)
                }
                Experiment::Exp3 => {
                    let lace = find(&runs, Mode::Dynamic);
                    let rows = trainer::ablation_sweep(&lace.model, &lace.eval_samples())?;
                    trainer::write_ablation_csv(&mut create(out, "ablation.csv")?, &rows)?;
                    write_string(out, "ablation.svg", &plot::ablation_bars(&rows, "adapter ablation"))?;
                    exp3_checks(&rows)
                }
                _ => exp5_checks(&runs),
            })
        }
        Experiment::Exp4 => {
            let sched = cfg.schedule()?;
            let runs = trainer::compare_confirmation(&cfg.train, &[1, 3], &sched)?;
            let mut summary = create(out, "summary.csv")?;
            writeln!(summary, "{}", trainer::SUMMARY_HEADER)?;
            for (k, r) in &runs {
                write_run(out, &format!("k{k}"), r, &mut summary)?;
            }
            summary.flush()?;
            // Both windows judged on the K=1 run's loss stream.
            let shared = &runs.iter().find(|(k, _)| *k == 1).expect("K=1 run").1.report.losses;
            let mut w = create(out, "confirmation.csv")?;
            writeln!(w, "confirm,expansions_in_run,expansions_on_shared_stream")?;
            let mut replayed = Vec::new();
            for (k, r) in &runs {
                let det = DetectorConfig {
                    confirm: *k,
                    ..cfg.train.detector
                };
                let n = trainer::replay_expansions(det, shared)?.len();
                writeln!(w, "{k},{},{n}", r.report.events.len())?;
                replayed.push((*k, n));
            }
            w.flush()?;
            Ok(exp4_checks(&runs, &replayed))
        }
        Experiment::ClusterSweep => {
            let sets = cluster_sets(cfg, inputs)?;
            let rows: Vec<LayerPurity> = clustering::layer_sweep(&sets, &cfg.cluster)?;
            clustering::write_sweep_csv(&mut create(out, "summary.csv")?, &rows)?;
            write_string(out, "purity.svg", &plot::purity_curve(&rows, "purity by layer"))?;
            Ok(if inputs.is_empty() {
                let worst = rows.iter().map(|r| r.report.purity).fold(1.0, f64::min);
                vec![Check::new("cluster-sweep blob purity >= 0.99", worst >= 0.99, format!("min {worst:.4}"))]
            } else {
                Vec::new()
            })
        }
        Experiment::RealEmbed => {
            let stream = embedding_stream(cfg, inputs)?;
            let runs = run_modes(cfg, &stream, out)?;
            let lace = &find(&runs, Mode::Dynamic).report;
            Ok(if inputs.is_empty() {
                vec![
                    Check::new(
                        "real-embed pseudo fixture expansions = 2",
                        lace.events.len() == 2,
                        lace.events.len().to_string(),
                    ),
                    Check::new(
                        "real-embed pseudo fixture precision = 1.0",
                        lace.boundary_precision == 1.0 && !lace.precision_vacuous,
                        format!("{:.3}", lace.boundary_precision),
                    ),
                ]
            } else {
                Vec::new()
            })
        }
    }
}

/// Writes the held-out text corpus of a synthetic-text experiment.
pub fn dump_corpus(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let sched = cfg.schedule()?;
    let samples = sched.eval_set(sched.len() - 1, cfg.train.eval_per_domain, cfg.train.seed);
    let mut w = create(out, "corpus.tsv")?;
    domains::dump_tsv(&mut w, &samples)?;
    w.flush()?;
    Ok(())
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Full command-line behavior; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    if !args.out.is_dir() {
        eprintln!("error: output directory {} does not exist", args.out.display());
        return EXIT_USAGE;
    }
    let cfg = match ExperimentConfig::from_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if args.dump_corpus {
        if matches!(cfg.exp, Experiment::ClusterSweep | Experiment::RealEmbed) {
            eprintln!("error: --dump-corpus applies only to the synthetic text experiments");
            return EXIT_USAGE;
        }
        return match dump_corpus(&cfg, &args.out) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        };
    }
    let checks = match run_experiment(&cfg, &args.out, &args.inputs) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Ok(s) = fs::read_to_string(args.out.join("summary.csv")) {
        print!("{s}");
    }
    if args.check {
        for c in &checks {
            println!("{c}");
        }
        if checks.iter().any(|c| !c.pass) {
            return EXIT_CHECK_FAILED;
        }
    }
    EXIT_OK
}
