//! Acceptance report: one PASS/FAIL line per criterion, at the stated
//! tolerances. Runs as a plain binary so the lines appear in `cargo test`
//! output. It reports rather than gates: a FAIL line does not abort the run.
//! Crashes and setup errors still fail the target.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lace::cli::{self, Check};
use lace::clustering::{self, blob_layers, purity, ActivationSet, ClusterConfig};
use lace::detector::{replay, Decision, DetectorConfig, SustainedConfig};
use lace::domains::Sampling;
use lace::model::{DynamicModel, Example, Input, ModelConfig};
use lace::nn::Matrix;
use lace::trainer::{self, Mode, RunReport, TrainConfig, TrainedRun};

const SEED: u64 = 0;

struct Report {
    lines: Vec<Check>,
}

impl Report {
    fn add(&mut self, c: Check) {
        println!("{c}");
        self.lines.push(c);
    }

    fn extend(&mut self, cs: Vec<Check>) {
        cs.into_iter().for_each(|c| self.add(c));
    }
}

/// Boundary precision recomputed from scratch: an event counts when some
/// boundary `b` satisfies `b <= step < b + window`.
fn independent_precision(r: &RunReport) -> f64 {
    let hits = r
        .events
        .iter()
        .filter(|e| r.boundaries.iter().any(|&b| b <= e.step && e.step < b + r.phase_window))
        .count();
    hits as f64 / r.events.len() as f64
}

fn mode(runs: &[TrainedRun], m: Mode) -> &TrainedRun {
    runs.iter().find(|r| r.report.mode == m).unwrap()
}

fn experiments(rep: &mut Report) {
    let cfg = TrainConfig {
        seed: SEED,
        ..Default::default()
    };
    let sched = trainer::synthetic_schedule(10, 200, Sampling::Cumulative, SEED).unwrap();
    let runs = trainer::run_baselines(&cfg, &sched).unwrap();
    for r in &runs {
        println!("  {}", trainer::summary_row("exp1", &r.report));
    }
    rep.extend(cli::exp1_checks(&runs));
    let lace = &mode(&runs, Mode::Dynamic).report;
    let p = independent_precision(lace);
    rep.add(Check::new(
        "exp1 precision recomputed independently = 1.0",
        p == 1.0,
        format!("{p:.3}"),
    ));

    rep.extend(cli::exp2_checks(&runs));

    let lace_run = mode(&runs, Mode::Dynamic);
    let rows = trainer::ablation_sweep(&lace_run.model, &lace_run.eval_samples()).unwrap();
    rep.extend(cli::exp3_checks(&rows));

    // K=1 is the exp1 dynamic run; only K=3 needs training.
    let k3_cfg = TrainConfig {
        detector: DetectorConfig {
            confirm: 3,
            ..cfg.detector
        },
        ..cfg.clone()
    };
    let k3 = trainer::run(&k3_cfg, &sched).unwrap();
    println!("  {}", trainer::summary_row("exp4-k3", &k3.report));
    let shared = &lace.losses;
    let replayed: Vec<(usize, usize)> = [1, 3]
        .iter()
        .map(|&k| {
            let det = DetectorConfig {
                confirm: k,
                ..cfg.detector
            };
            (k, trainer::replay_expansions(det, shared).unwrap().len())
        })
        .collect();
    let k1 = TrainedRun {
        report: lace.clone(),
        model: lace_run.model.clone(),
        eval_sets: lace_run.eval_sets.clone(),
    };
    rep.extend(cli::exp4_checks(&[(1, k1), (3, k3)], &replayed));

    let cfg5 = cli::ExperimentConfig::preset(cli::Experiment::Exp5);
    let sched5 = cfg5.schedule().unwrap();
    let runs5 = trainer::run_baselines(&cfg5.train, &sched5).unwrap();
    for r in &runs5 {
        println!("  {}", trainer::summary_row("exp5", &r.report));
    }
    rep.extend(cli::exp5_checks(&runs5));
}

fn random_stream(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut level: f64 = r.gen_range(0.05..5.0);
    (0..len)
        .map(|_| {
            if r.gen_bool(0.01) {
                level = r.gen_range(0.05..5.0);
            }
            let noise = level * r.gen_range(0.7..1.3);
            if r.gen_bool(0.03) {
                noise * r.gen_range(1.0..8.0)
            } else {
                noise
            }
        })
        .collect()
}

fn random_detector(r: &mut ChaCha8Rng, sustained: bool) -> DetectorConfig {
    DetectorConfig {
        window: r.gen_range(1..60),
        spike_ratio: r.gen_range(1.05..4.0),
        confirm: r.gen_range(1..5),
        cooldown: r.gen_range(0..80),
        warmup: r.gen_range(0..150),
        sustained: sustained.then(|| SustainedConfig {
            threshold: r.gen_range(0.1..4.0),
            steps: r.gen_range(1..40),
        }),
    }
}

fn detector_suite(rep: &mut Report) {
    let n = 1000;
    let mut r = ChaCha8Rng::seed_from_u64(0xDE7);
    let (mut scale_ok, mut spacing_ok, mut warm_ok, mut det_ok) = (0, 0, 0, 0);
    for _ in 0..n {
        let len = r.gen_range(50..600);
        let losses = random_stream(&mut r, len);
        let with_sus = r.gen_bool(0.5);
        let cfg = random_detector(&mut r, with_sus);

        let spike_cfg = DetectorConfig {
            sustained: None,
            ..cfg
        };
        let c: f64 = if r.gen_bool(0.5) {
            r.gen_range(1e-3..1e3)
        } else {
            2f64.powi(r.gen_range(-10..10))
        };
        let scaled: Vec<f64> = losses.iter().map(|l| l * c).collect();
        scale_ok += (replay(spike_cfg, &losses).unwrap() == replay(spike_cfg, &scaled).unwrap()) as usize;

        let d = replay(cfg, &losses).unwrap();
        let expands: Vec<usize> = (0..d.len()).filter(|&i| d[i].is_expand()).collect();
        spacing_ok += expands.windows(2).all(|w| w[1] - w[0] >= cfg.cooldown) as usize;
        let armed_from = cfg.warmup.max(cfg.window);
        warm_ok += d.iter().take(armed_from).all(|x| *x == Decision::None) as usize;
        det_ok += (d == replay(cfg, &losses).unwrap()) as usize;
    }
    for (name, ok) in [
        ("scale invariance of spike decisions", scale_ok),
        ("expansion spacing >= cooldown", spacing_ok),
        ("no decisions before warmup / full window", warm_ok),
        ("determinism", det_ok),
    ] {
        rep.add(Check::new(format!("detector {name}"), ok == n, format!("{ok}/{n} streams")));
    }
}

fn fd_model(r: &mut ChaCha8Rng) -> DynamicModel {
    let cfg = ModelConfig {
        vocab: 4,
        d_emb: 3,
        d_base: 2,
        d_max: 3,
        num_classes: 3,
        seq_len: 2,
        lr: 1e-3,
    };
    let mut m = DynamicModel::new(&cfg, r).unwrap();
    if r.gen_bool(0.5) {
        m.expand(0.5, r).unwrap();
    }
    m
}

fn entry(m: &mut DynamicModel, which: usize, i: usize) -> &mut f64 {
    let mat = match which {
        0 => &mut m.embed,
        1 => &mut m.proj,
        _ => &mut m.head,
    };
    &mut mat.data_mut()[i]
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter entry.
fn fd_error(m: &mut DynamicModel, batch: &[Example]) -> f64 {
    let (_, g) = m.loss_and_grads(batch).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for which in 0..3 {
        let grad: &Matrix = [&g.embed, &g.proj, &g.head][which];
        for i in 0..grad.data().len() {
            let orig = *entry(m, which, i);
            *entry(m, which, i) = orig + h;
            let up = m.loss_and_grads(batch).unwrap().0;
            *entry(m, which, i) = orig - h;
            let down = m.loss_and_grads(batch).unwrap().0;
            *entry(m, which, i) = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grad.data()[i];
            let err = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
            // Kinks of the ReLU make central differences meaningless when a
            // pre-activation sits within h of zero; such draws are rare and
            // show up as huge errors on a handful of entries.
            worst = worst.max(if (numeric - analytic).abs() < 1e-9 { 0.0 } else { err });
        }
    }
    worst
}

fn numeric_suite(rep: &mut Report) {
    let mut r = ChaCha8Rng::seed_from_u64(0xFD);
    let n = 200;
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let mut m = fd_model(&mut r);
        let bs = r.gen_range(1..4);
        let batch: Vec<Example> = (0..bs)
            .map(|_| Example {
                input: Input::Tokens(vec![r.gen_range(0..4u8), r.gen_range(0..4u8)]),
                label: r.gen_range(0..3),
            })
            .collect();
        let e = fd_error(&mut m, &batch);
        worst = worst.max(e);
        ok += (e < 1e-4) as usize;
    }
    rep.add(Check::new(
        "numeric finite differences rel. err < 1e-4 (full pipeline, vocab 4, seq 2, d 3)",
        ok == n,
        format!("{ok}/{n} instances, worst {worst:.2e}"),
    ));

    let mut zero_ok = 0;
    let mut masked_ok = 0;
    let trials = 200;
    for _ in 0..trials {
        let mut m = fd_model(&mut r);
        let probes: Vec<Input> = (0..5)
            .map(|_| Input::Tokens(vec![r.gen_range(0..4u8), r.gen_range(0..4u8)]))
            .collect();
        let before: Vec<Vec<f64>> = probes.iter().map(|p| m.logits(p).unwrap()).collect();
        let batch: Vec<Example> = probes
            .iter()
            .map(|p| Example {
                input: p.clone(),
                label: r.gen_range(0..3),
            })
            .collect();
        let (_, g) = m.loss_and_grads(&batch).unwrap();
        let active = m.d_active();
        let masked_zero = (active..m.d_max()).all(|row| {
            g.proj.row(row).iter().all(|&x| x == 0.0)
                && (0..m.num_classes()).all(|c| g.head.get(c, row) == 0.0)
        });
        masked_ok += masked_zero as usize;
        if active < m.d_max() {
            m.expand(0.0, &mut r).unwrap();
            let after: Vec<Vec<f64>> = probes.iter().map(|p| m.logits(p).unwrap()).collect();
            let bitwise = before.iter().zip(&after).all(|(a, b)| {
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            });
            zero_ok += bitwise as usize;
        } else {
            zero_ok += 1;
        }
    }
    rep.add(Check::new(
        "numeric sigma=0 expansion leaves logits bitwise unchanged",
        zero_ok == trials,
        format!("{zero_ok}/{trials}"),
    ));
    rep.add(Check::new(
        "numeric masked rows receive exactly zero gradient",
        masked_ok == trials,
        format!("{masked_ok}/{trials}"),
    ));
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

fn counting_purity(assign: &[usize], labels: &[usize]) -> f64 {
    let k = assign.iter().max().unwrap() + 1;
    let l = labels.iter().max().unwrap() + 1;
    let mut hits = 0;
    for c in 0..k {
        let mut best = 0;
        for d in 0..l {
            let count = assign.iter().zip(labels).filter(|(&a, &b)| a == c && b == d).count();
            best = best.max(count);
        }
        hits += best;
    }
    hits as f64 / assign.len() as f64
}

fn clustering_suite(rep: &mut Report) {
    let mut r = ChaCha8Rng::seed_from_u64(0xC1);
    let n = 1000;
    let mut ok = 0;
    for _ in 0..n {
        let len = r.gen_range(1..60);
        let k = r.gen_range(1..8);
        let l = r.gen_range(1..6);
        let assign: Vec<usize> = (0..len).map(|_| r.gen_range(0..k)).collect();
        let labels: Vec<usize> = (0..len).map(|_| r.gen_range(0..l)).collect();
        let got = purity(&assign, &labels).unwrap().purity;
        ok += (got == counting_purity(&assign, &labels)) as usize;
    }
    rep.add(Check::new("clustering purity equals counting oracle", ok == n, format!("{ok}/{n} instances")));

    let mut worst: f64 = 0.0;
    let trials = 30;
    for t in 0..trials {
        let d = [2, 5, 16, 33, 64][t % 5];
        let rows = r.gen_range(d + 1..2 * d + 10);
        let values = Matrix::from_fn(rows, d, |_, c| r.gen_range(-1.0..1.0) * (1.0 + c as f64 * 0.1));
        let set = ActivationSet::new(values.clone(), None, None).unwrap();
        let pca = clustering::fit_pca(&set, 1).unwrap();
        // Explicit covariance built independently of the library.
        let mean: Vec<f64> = (0..d).map(|c| (0..rows).map(|i| values.get(i, c)).sum::<f64>() / rows as f64).collect();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| {
                        (0..rows)
                            .map(|i| (values.get(i, a) - mean[a]) * (values.get(i, b) - mean[b]))
                            .sum::<f64>()
                            / (rows - 1) as f64
                    })
                    .collect()
            })
            .collect();
        let top = jacobi_eigenvalues(cov).into_iter().fold(f64::MIN, f64::max);
        worst = worst.max((pca.eigenvalues[0] - top).abs() / top.abs());
    }
    rep.add(Check::new(
        "clustering PCA top eigenvalue matches dense Jacobi solve (rel < 1e-8)",
        worst < 1e-8,
        format!("worst rel. err {worst:.2e} over {trials} matrices up to 64 dims"),
    ));

    let layers = blob_layers(6, 3, 200, 64, SEED);
    let sweep = clustering::layer_sweep(&layers, &ClusterConfig::default()).unwrap();
    let min = sweep.iter().map(|s| s.report.purity).fold(1.0, f64::min);
    let ks: BTreeMap<usize, usize> = sweep.iter().map(|s| (s.layer, s.report.k)).collect();
    rep.add(Check::new(
        "clustering 3-blob layer sweep purity >= 0.99",
        min >= 0.99,
        format!("min purity {min:.4}, clusters per layer {ks:?}"),
    ));
}

fn main() {
    // Respect libtest's filter conventions enough to be skippable.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let mut rep = Report { lines: Vec::new() };
    detector_suite(&mut rep);
    numeric_suite(&mut rep);
    clustering_suite(&mut rep);
    experiments(&mut rep);
    let passed = rep.lines.iter().filter(|c| c.pass).count();
    println!("acceptance: {passed}/{} criteria passed", rep.lines.len());
    for c in rep.lines.iter().filter(|c| !c.pass) {
        println!("  not met: {}", c.name);
    }
}
