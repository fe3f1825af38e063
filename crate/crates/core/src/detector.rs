//! Loss-stream novelty detector.
//!
//! Each step the incoming loss is compared against the mean of the previous
//! `window` losses. A loss above `spike_ratio` times that baseline is a spike;
//! `confirm` consecutive spikes request an expansion. A secondary signal fires
//! when the baseline itself stays above an absolute threshold for a number of
//! consecutive steps. Both signals share one cooldown, and nothing fires
//! before `warmup` steps or before the window is full.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SustainedConfig {
    /// Absolute baseline level that counts as "high".
    pub threshold: f64,
    /// Consecutive high-baseline steps needed to fire.
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub window: usize,
    pub spike_ratio: f64,
    pub confirm: usize,
    pub cooldown: usize,
    pub warmup: usize,
    pub sustained: Option<SustainedConfig>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window: 50,
            spike_ratio: 2.5,
            confirm: 1,
            cooldown: 60,
            warmup: 100,
            sustained: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be >= 1".into()));
        }
        if !self.spike_ratio.is_finite() || self.spike_ratio <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "spike_ratio must be > 1, got {}",
                self.spike_ratio
            )));
        }
        if self.confirm == 0 {
            return Err(Error::InvalidConfig("confirm must be >= 1".into()));
        }
        if let Some(s) = self.sustained {
            if s.steps == 0 || !s.threshold.is_finite() {
                return Err(Error::InvalidConfig(
                    "sustained signal needs steps >= 1 and a finite threshold".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Which rule requested an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    Spike,
    Sustained,
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signal::Spike => "spike",
            Signal::Sustained => "sustained",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    None,
    Spike,
    Expand(Signal),
}

impl Decision {
    pub fn is_expand(self) -> bool {
        matches!(self, Decision::Expand(_))
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::None => f.write_str("none"),
            Decision::Spike => f.write_str("spike"),
            Decision::Expand(s) => write!(f, "expand_{s}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorState {
    pub loss_history: VecDeque<f64>,
    pub spike_streak: usize,
    pub cooldown_remaining: usize,
    pub sustained_count: usize,
    pub step: usize,
}

/// One row of the decision trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    /// `None` while the history is empty.
    pub baseline: Option<f64>,
    pub decision: Decision,
    pub cooldown_remaining: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    config: DetectorConfig,
    state: DetectorState,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: DetectorState::default(),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    /// Mean of the losses currently in the window.
    pub fn baseline(&self) -> Result<f64> {
        baseline(&self.state)
    }

    /// Feeds one loss and returns the decision for this step. The loss joins
    /// the window only after it has been judged.
    pub fn observe(&mut self, loss: f64) -> Result<Decision> {
        Ok(self.observe_traced(loss)?.decision)
    }

    pub fn observe_traced(&mut self, loss: f64) -> Result<TraceRow> {
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::BadLoss(loss));
        }
        let cfg = &self.config;
        let st = &mut self.state;
        let seen = (!st.loss_history.is_empty())
            .then(|| st.loss_history.iter().sum::<f64>() / st.loss_history.len() as f64);
        // Unarmed until the window is full, so the placeholder is never compared.
        let base = seen.unwrap_or(0.0);
        let armed = st.step >= cfg.warmup
            && st.cooldown_remaining == 0
            && st.loss_history.len() >= cfg.window;
        let cooldown_at_entry = st.cooldown_remaining;

        let mut decision = Decision::None;
        if armed {
            if loss > cfg.spike_ratio * base {
                st.spike_streak += 1;
                decision = if st.spike_streak >= cfg.confirm {
                    Decision::Expand(Signal::Spike)
                } else {
                    Decision::Spike
                };
            } else {
                st.spike_streak = 0;
            }
            if let Some(sus) = cfg.sustained {
                if base > sus.threshold {
                    st.sustained_count += 1;
                } else {
                    st.sustained_count = 0;
                }
                if !decision.is_expand() && st.sustained_count >= sus.steps {
                    decision = Decision::Expand(Signal::Sustained);
                }
            }
        } else {
            st.spike_streak = 0;
            st.sustained_count = 0;
        }

        if decision.is_expand() {
            st.spike_streak = 0;
            st.sustained_count = 0;
            st.cooldown_remaining = cfg.cooldown;
        } else if st.cooldown_remaining > 0 {
            st.cooldown_remaining -= 1;
        }

        st.loss_history.push_back(loss);
        while st.loss_history.len() > cfg.window {
            st.loss_history.pop_front();
        }
        let row = TraceRow {
            step: st.step,
            loss,
            baseline: seen,
            decision,
            cooldown_remaining: cooldown_at_entry,
        };
        st.step += 1;
        Ok(row)
    }
}

pub fn baseline(state: &DetectorState) -> Result<f64> {
    if state.loss_history.is_empty() {
        return Err(Error::NoBaseline);
    }
    Ok(state.loss_history.iter().sum::<f64>() / state.loss_history.len() as f64)
}

/// Runs a fresh detector over a recorded loss stream.
pub fn replay(config: DetectorConfig, losses: &[f64]) -> Result<Vec<Decision>> {
    let mut det = Detector::new(config)?;
    losses.iter().map(|&l| det.observe(l)).collect()
}

/// Writes `step,loss,baseline,decision,cooldown_remaining` rows.
pub fn write_trace_csv(w: &mut impl Write, rows: &[TraceRow]) -> Result<()> {
    writeln!(w, "step,loss,baseline,decision,cooldown_remaining")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{},{},{}",
            r.step,
            r.loss,
            r.baseline.map(|b| format!("{b:.6}")).unwrap_or_default(),
            r.decision,
            r.cooldown_remaining
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand_steps(decisions: &[Decision]) -> Vec<usize> {
        decisions
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_expand())
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn baseline_is_plain_mean() {
        let mut st = DetectorState::default();
        assert!(matches!(baseline(&st), Err(Error::NoBaseline)));
        st.loss_history.extend([2.0, 4.0]);
        assert_eq!(baseline(&st).unwrap(), 3.0);
        st.loss_history = std::iter::repeat_n(1.7, 10).collect();
        assert!((baseline(&st).unwrap() - 1.7).abs() < 1e-15);
    }

    #[test]
    fn baseline_matches_summation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut det = Detector::new(DetectorConfig::default()).unwrap();
        let losses: Vec<f64> = (0..80).map(|_| rng.gen_range(0.0..3.0)).collect();
        for &l in &losses {
            det.observe(l).unwrap();
        }
        let mut acc = 0.0;
        for l in &losses[30..] {
            acc += l;
        }
        assert!((det.baseline().unwrap() - acc / 50.0).abs() < 1e-12);
    }

    #[test]
    fn constant_loss_never_expands() {
        let d = replay(DetectorConfig::default(), &vec![1.0; 2000]).unwrap();
        assert!(d.iter().all(|&x| x == Decision::None));
    }

    #[test]
    fn single_spike_after_warmup_expands() {
        let mut losses = vec![1.0; 150];
        losses.push(2.6);
        let d = replay(DetectorConfig::default(), &losses).unwrap();
        assert_eq!(expand_steps(&d), vec![150]);
        assert_eq!(d[150], Decision::Expand(Signal::Spike));
    }

    #[test]
    fn spike_before_warmup_ignored() {
        let mut losses = vec![1.0; 99];
        losses.push(10.0);
        let d = replay(DetectorConfig::default(), &losses).unwrap();
        assert!(expand_steps(&d).is_empty());
    }

    #[test]
    fn confirm_three_needs_three_in_a_row() {
        let cfg = DetectorConfig {
            confirm: 3,
            ..Default::default()
        };
        let mut losses = vec![1.0; 150];
        losses.extend([5.0, 5.0, 1.0, 9.0, 9.0, 9.0]);
        let d = replay(cfg, &losses).unwrap();
        assert_eq!(d[150], Decision::Spike);
        assert_eq!(d[151], Decision::Spike);
        assert_eq!(d[152], Decision::None);
        assert_eq!(d[153], Decision::Spike);
        assert_eq!(d[154], Decision::Spike);
        // baseline now includes 5,5,1,9,9 among 45 ones: mean 1.48, 9 > 3.7
        assert_eq!(d[155], Decision::Expand(Signal::Spike));
    }

    #[test]
    fn cooldown_blocks_and_expires() {
        let cfg = DetectorConfig::default();
        let mut losses = vec![1.0; 150];
        losses.push(100.0);
        losses.extend(vec![1.0; 59]);
        // last blocked step of the cooldown
        losses.push(100.0);
        losses.extend(vec![1.0; 89]);
        losses.push(100.0);
        let d = replay(cfg, &losses).unwrap();
        assert_eq!(d[210], Decision::None);
        let ex = expand_steps(&d);
        assert_eq!(ex, vec![150, 300]);
        assert!(ex.windows(2).all(|w| w[1] - w[0] >= cfg.cooldown));
    }

    #[test]
    fn sustained_disabled_by_default() {
        let d = replay(DetectorConfig::default(), &vec![50.0; 400]).unwrap();
        assert!(expand_steps(&d).is_empty());
    }

    #[test]
    fn sustained_fires_on_fifth_qualifying_step() {
        let cfg = DetectorConfig {
            sustained: Some(SustainedConfig {
                threshold: 1.5,
                steps: 5,
            }),
            ..Default::default()
        };
        let d = replay(cfg, &vec![2.0; 200]).unwrap();
        let ex = expand_steps(&d);
        assert_eq!(ex[0], 104);
        assert_eq!(d[104], Decision::Expand(Signal::Sustained));
        // re-fires after cooldown (60 blocked steps) plus 5 qualifying steps
        assert_eq!(ex[1], 104 + 61 + 4);
    }

    #[test]
    fn sustained_below_threshold_stays_zero() {
        let cfg = DetectorConfig {
            sustained: Some(SustainedConfig {
                threshold: 1.5,
                steps: 5,
            }),
            ..Default::default()
        };
        let mut det = Detector::new(cfg).unwrap();
        for _ in 0..300 {
            det.observe(1.0).unwrap();
            assert_eq!(det.state().sustained_count, 0);
        }
    }

    #[test]
    fn bad_loss_rejected_without_state_change() {
        let mut det = Detector::new(DetectorConfig::default()).unwrap();
        det.observe(1.0).unwrap();
        let snapshot = det.clone();
        assert!(det.observe(f64::NAN).is_err());
        assert!(det.observe(-1.0).is_err());
        assert!(det.observe(f64::INFINITY).is_err());
        assert_eq!(det, snapshot);
    }

    #[test]
    fn config_validation() {
        let bad = DetectorConfig {
            spike_ratio: 1.0,
            ..Default::default()
        };
        assert!(Detector::new(bad).is_err());
        let bad = DetectorConfig {
            window: 0,
            ..Default::default()
        };
        assert!(Detector::new(bad).is_err());
    }

    #[test]
    fn trace_csv_header() {
        let mut det = Detector::new(DetectorConfig::default()).unwrap();
        let rows = vec![det.observe_traced(0.5).unwrap(), det.observe_traced(0.4).unwrap()];
        let mut out = Vec::new();
        write_trace_csv(&mut out, &rows).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("step,loss,baseline,decision,cooldown_remaining\n0,0.500000,,none,0\n"));
    }
}
