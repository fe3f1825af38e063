//! The training loop and its metrics.
//!
//! Per step: draw a batch from the stream, take one Adam step, feed the loss
//! to the detector, and (dynamic mode only) expand the projection when the
//! detector asks and budget remains. The loss joins the detector window after
//! the decision.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::detector::{Decision, Detector, DetectorConfig, Signal};
use crate::domains::{DomainSchedule, Sampling};
use crate::error::{Error, Result};
use crate::model::{AblationMask, DynamicModel, Example, ModelConfig};
use crate::rng;

/// A sequence of labeled domains introduced at known steps.
pub trait TaskStream: Sync {
    fn num_domains(&self) -> usize;
    fn total_steps(&self) -> usize;
    /// Step at which `domain` is introduced.
    fn intro_step(&self, domain: usize) -> usize;
    fn active_domain(&self, step: usize) -> usize;
    fn batch(&self, step: usize, size: usize, rng: &mut rng::Rng) -> Result<Vec<Example>>;
    /// Held-out examples of a single domain.
    fn eval_domain(&self, domain: usize, per_domain: usize, seed: u64) -> Result<Vec<Example>>;
    /// Model input shape: `(vocab, d_emb)`. Vocab is zero for feature inputs.
    fn input_shape(&self, d_emb: usize) -> (usize, usize);

    /// Introduction steps of every domain after the first.
    fn boundaries(&self) -> Vec<usize> {
        (1..self.num_domains()).map(|d| self.intro_step(d)).collect()
    }
}

impl TaskStream for DomainSchedule {
    fn num_domains(&self) -> usize {
        self.len()
    }

    fn total_steps(&self) -> usize {
        DomainSchedule::total_steps(self)
    }

    fn intro_step(&self, domain: usize) -> usize {
        DomainSchedule::intro_step(self, domain)
    }

    fn active_domain(&self, step: usize) -> usize {
        DomainSchedule::active_domain(self, step)
    }

    fn batch(&self, step: usize, size: usize, rng: &mut rng::Rng) -> Result<Vec<Example>> {
        Ok(DomainSchedule::batch(self, step, size, rng)?
            .iter()
            .map(|s| s.to_example())
            .collect())
    }

    fn eval_domain(&self, domain: usize, per_domain: usize, seed: u64) -> Result<Vec<Example>> {
        Ok(DomainSchedule::eval_domain(self, domain, per_domain, seed)
            .iter()
            .map(|s| s.to_example())
            .collect())
    }

    fn input_shape(&self, d_emb: usize) -> (usize, usize) {
        (crate::domains::VOCAB, d_emb)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Dynamic,
    FixedLarge,
    FixedSmall,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Dynamic, Mode::FixedLarge, Mode::FixedSmall];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Dynamic => "dynamic",
            Mode::FixedLarge => "fixed_large",
            Mode::FixedSmall => "fixed_small",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(Mode::Dynamic),
            "fixed_large" => Ok(Mode::FixedLarge),
            "fixed_small" => Ok(Mode::FixedSmall),
            other => Err(Error::InvalidConfig(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub d_base: usize,
    pub d_max: usize,
    pub d_emb: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seq_len: usize,
    /// Standard deviation of a freshly activated projection row.
    pub sigma: f64,
    pub detector: DetectorConfig,
    pub mode: Mode,
    pub seed: u64,
    pub eval_interval: usize,
    pub eval_per_domain: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d_base: 64,
            d_max: 84,
            d_emb: 128,
            batch_size: 64,
            lr: 3e-4,
            seq_len: crate::domains::SEQ_LEN,
            sigma: 0.01,
            detector: DetectorConfig::default(),
            mode: Mode::Dynamic,
            seed: 0,
            eval_interval: 20,
            eval_per_domain: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_base > self.d_max {
            return Err(Error::InvalidConfig(format!(
                "d_base {} > d_max {}",
                self.d_base, self.d_max
            )));
        }
        if self.batch_size == 0 || self.eval_interval == 0 || self.eval_per_domain == 0 {
            return Err(Error::InvalidConfig(
                "batch_size, eval_interval and eval_per_domain must be positive".into(),
            ));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        self.detector.validate()
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionEvent {
    pub step: usize,
    pub d_before: usize,
    pub d_after: usize,
    pub signal: Signal,
}

/// Per-domain held-out accuracy at one evaluation step. Entries are `None`
/// for domains not yet introduced.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub step: usize,
    pub per_domain: Vec<Option<f64>>,
    /// Balanced accuracy over the introduced domains.
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub final_accuracy: f64,
    pub evals: Vec<EvalPoint>,
    pub events: Vec<ExpansionEvent>,
    pub d_base: usize,
    pub d_max: usize,
    pub d_final: usize,
    pub d_avg: f64,
    pub boundary_precision: f64,
    /// True when there were no events and precision is reported as 1.0.
    pub precision_vacuous: bool,
    pub losses: Vec<f64>,
    pub d_trace: Vec<usize>,
    pub decisions: Vec<Decision>,
    /// Rolling-window baseline seen by the detector; `None` before the first loss.
    pub baselines: Vec<Option<f64>>,
    pub boundaries: Vec<usize>,
    pub phase_window: usize,
}

pub struct TrainedRun {
    pub report: RunReport,
    pub model: DynamicModel,
    pub eval_sets: Vec<Vec<Example>>,
}

impl TrainedRun {
    /// The balanced held-out set over every domain.
    pub fn eval_samples(&self) -> Vec<Example> {
        self.eval_sets.iter().flatten().cloned().collect()
    }
}

/// Executes one run over `stream`.
pub fn run(config: &TrainConfig, stream: &dyn TaskStream) -> Result<TrainedRun> {
    config.validate()?;
    let (vocab, d_emb) = stream.input_shape(config.d_emb);
    let d_base = match config.mode {
        Mode::FixedLarge => config.d_max,
        _ => config.d_base,
    };
    let model_cfg = ModelConfig {
        vocab,
        d_emb,
        d_base,
        d_max: config.d_max,
        num_classes: stream.num_domains(),
        seq_len: config.seq_len,
        lr: config.lr,
    };
    let mut init_rng = rng::stream(config.seed, &[0x1417]);
    let mut data_rng = rng::stream(config.seed, &[0xDA7A]);
    let mut grow_rng = rng::stream(config.seed, &[0x6E0F]);
    let mut model = DynamicModel::new(&model_cfg, &mut init_rng)?;
    let mut detector = Detector::new(config.detector)?;

    let eval_sets: Vec<Vec<Example>> = (0..stream.num_domains())
        .map(|d| stream.eval_domain(d, config.eval_per_domain, config.seed))
        .collect::<Result<_>>()?;

    let total = stream.total_steps();
    let mut losses = Vec::with_capacity(total);
    let mut d_trace = Vec::with_capacity(total);
    let mut decisions = Vec::with_capacity(total);
    let mut baselines = Vec::with_capacity(total);
    let mut events = Vec::new();
    let mut evals = Vec::new();

    for step in 0..total {
        let batch = stream.batch(step, config.batch_size, &mut data_rng)?;
        let loss = model.train_step(&batch)?;
        let row = detector.observe_traced(loss)?;
        let decision = match config.mode {
            Mode::Dynamic => row.decision,
            Mode::FixedLarge | Mode::FixedSmall => Decision::None,
        };
        if let Decision::Expand(signal) = decision {
            if model.d_active() < model.d_max() {
                let g = model.expand(config.sigma, &mut grow_rng)?;
                events.push(ExpansionEvent {
                    step,
                    d_before: g.d_before,
                    d_after: g.d_after,
                    signal,
                });
            }
        }
        losses.push(loss);
        decisions.push(decision);
        baselines.push(row.baseline);
        d_trace.push(model.d_active());

        if (step + 1) % config.eval_interval == 0 || step + 1 == total {
            evals.push(evaluate(&model, &eval_sets, stream.active_domain(step), step)?);
        }
    }

    let final_accuracy = evals.last().map(|e| e.overall).unwrap_or(0.0);
    let boundaries = stream.boundaries();
    let phase_window = phase_window(stream);
    let (boundary_precision, precision_vacuous) =
        boundary_precision(&events, &boundaries, phase_window);
    let d_avg = d_trace.iter().sum::<usize>() as f64 / d_trace.len().max(1) as f64;
    let report = RunReport {
        mode: config.mode,
        final_accuracy,
        evals,
        d_base,
        d_max: config.d_max,
        d_final: model.d_active(),
        d_avg,
        boundary_precision,
        precision_vacuous,
        events,
        losses,
        d_trace,
        decisions,
        baselines,
        boundaries,
        phase_window,
    };
    Ok(TrainedRun {
        report,
        model,
        eval_sets,
    })
}

/// Shortest gap between consecutive introductions (the full run length for a
/// single-domain stream).
fn phase_window(stream: &dyn TaskStream) -> usize {
    (1..stream.num_domains())
        .map(|d| stream.intro_step(d) - stream.intro_step(d - 1))
        .min()
        .unwrap_or(stream.total_steps())
}

fn evaluate(
    model: &DynamicModel,
    eval_sets: &[Vec<Example>],
    active: usize,
    step: usize,
) -> Result<EvalPoint> {
    let mut per_domain = vec![None; eval_sets.len()];
    let mut sum = 0.0;
    for (d, set) in eval_sets.iter().enumerate().take(active + 1) {
        let acc = model.accuracy(set)?;
        per_domain[d] = Some(acc);
        sum += acc;
    }
    Ok(EvalPoint {
        step,
        per_domain,
        overall: sum / (active + 1) as f64,
    })
}

/// Fraction of events that follow a domain introduction by less than
/// `window` steps: an event at `t` counts iff some boundary lies in
/// `(t - window, t]`. With no events the precision is 1.0 and the flag is set.
pub fn boundary_precision(
    events: &[ExpansionEvent],
    boundaries: &[usize],
    window: usize,
) -> (f64, bool) {
    if events.is_empty() {
        return (1.0, true);
    }
    let hits = events
        .iter()
        .filter(|e| {
            boundaries
                .iter()
                .any(|&b| b <= e.step && e.step < b + window)
        })
        .count();
    (hits as f64 / events.len() as f64, false)
}

/// Per-domain accuracy matrix, one row per evaluation point.
pub fn forgetting_curves(report: &RunReport) -> Vec<Vec<Option<f64>>> {
    report.evals.iter().map(|e| e.per_domain.clone()).collect()
}

/// For each domain: the drop from its best accuracy after introduction to its
/// final accuracy. `None` if the domain was never evaluated.
pub fn forgetting(report: &RunReport) -> Vec<Option<f64>> {
    let n = report.evals.first().map_or(0, |e| e.per_domain.len());
    let last = report.evals.last();
    (0..n)
        .map(|d| {
            let peak = report
                .evals
                .iter()
                .filter_map(|e| e.per_domain[d])
                .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |m| m.max(a))))?;
            let fin = last?.per_domain[d]?;
            Some(peak - fin)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationCondition {
    Baseline,
    Dim(usize),
    AllAdapters,
}

impl fmt::Display for AblationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AblationCondition::Baseline => f.write_str("baseline"),
            AblationCondition::Dim(d) => write!(f, "dim_{d}"),
            AblationCondition::AllAdapters => f.write_str("all_adapters"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub condition: AblationCondition,
    pub accuracy: f64,
    pub drop: f64,
}

/// Accuracy with every adapter dimension removed individually and together.
pub fn ablation_sweep(model: &DynamicModel, samples: &[Example]) -> Result<Vec<AblationRow>> {
    let (base, active) = (model.d_base(), model.d_active());
    if active <= base {
        return Err(Error::NoAdapters { d_base: base });
    }
    let baseline = model.accuracy(samples)?;
    let mut rows = vec![AblationRow {
        condition: AblationCondition::Baseline,
        accuracy: baseline,
        drop: 0.0,
    }];
    for dim in base..active {
        let acc = model.accuracy_ablated(samples, &AblationMask::single(dim))?;
        rows.push(AblationRow {
            condition: AblationCondition::Dim(dim),
            accuracy: acc,
            drop: baseline - acc,
        });
    }
    let acc = model.accuracy_ablated(samples, &AblationMask::range(base..active))?;
    rows.push(AblationRow {
        condition: AblationCondition::AllAdapters,
        accuracy: acc,
        drop: baseline - acc,
    });
    Ok(rows)
}

/// One run per confirmation window, otherwise identical configuration.
pub fn compare_confirmation(
    config: &TrainConfig,
    confirms: &[usize],
    stream: &dyn TaskStream,
) -> Result<Vec<(usize, TrainedRun)>> {
    if confirms.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least two confirmation windows to compare".into(),
        ));
    }
    use rayon::prelude::*;
    confirms
        .par_iter()
        .map(|&k| {
            let mut cfg = config.clone();
            cfg.detector.confirm = k;
            run(&cfg, stream).map(|r| (k, r))
        })
        .collect()
}

/// Dynamic, fixed-large and fixed-small runs of the same configuration.
pub fn run_baselines(config: &TrainConfig, stream: &dyn TaskStream) -> Result<Vec<TrainedRun>> {
    use rayon::prelude::*;
    Mode::ALL
        .par_iter()
        .map(|&m| run(&config.with_mode(m), stream))
        .collect()
}

pub fn synthetic_schedule(
    n_domains: usize,
    phase_length: usize,
    sampling: Sampling,
    seed: u64,
) -> Result<DomainSchedule> {
    DomainSchedule::families(n_domains, phase_length, sampling, seed)
}

// ---- CSV output ----

pub fn write_report_csv(w: &mut impl Write, r: &RunReport) -> Result<()> {
    writeln!(w, "step,loss,d_active,decision")?;
    for (i, ((l, d), dec)) in r.losses.iter().zip(&r.d_trace).zip(&r.decisions).enumerate() {
        writeln!(w, "{i},{l:.6},{d},{dec}")?;
    }
    Ok(())
}

pub fn write_perdomain_csv(w: &mut impl Write, r: &RunReport) -> Result<()> {
    writeln!(w, "eval_step,domain,accuracy")?;
    for e in &r.evals {
        for (d, acc) in e.per_domain.iter().enumerate() {
            if let Some(a) = acc {
                writeln!(w, "{},{d},{a:.4}", e.step)?;
            }
        }
    }
    Ok(())
}

pub fn write_events_csv(w: &mut impl Write, r: &RunReport) -> Result<()> {
    writeln!(w, "step,d_before,d_after,signal")?;
    for e in &r.events {
        writeln!(w, "{},{},{},{}", e.step, e.d_before, e.d_after, e.signal)?;
    }
    Ok(())
}

pub const SUMMARY_HEADER: &str = "label,mode,accuracy,expansions,d_final,d_avg,precision";

pub fn summary_row(label: &str, r: &RunReport) -> String {
    let (exp, precision) = match r.mode {
        Mode::Dynamic => (
            r.events.len().to_string(),
            format!("{:.3}", r.boundary_precision),
        ),
        _ => ("-".to_string(), "-".to_string()),
    };
    format!(
        "{label},{},{:.4},{exp},{},{:.2},{precision}",
        r.mode, r.final_accuracy, r.d_final, r.d_avg
    )
}

pub fn write_ablation_csv(w: &mut impl Write, rows: &[AblationRow]) -> Result<()> {
    writeln!(w, "condition,accuracy,drop")?;
    for r in rows {
        writeln!(w, "{},{:.4},{:.4}", r.condition, r.accuracy, r.drop)?;
    }
    Ok(())
}

/// Expansion steps a detector would produce on a recorded loss stream.
pub fn replay_expansions(config: DetectorConfig, losses: &[f64]) -> Result<Vec<usize>> {
    Ok(crate::detector::replay(config, losses)?
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_expand())
        .map(|(i, _)| i)
        .collect())
}
