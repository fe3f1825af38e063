//! Activation files and the embedding task stream built on them.
//!
//! An activation file ("LACT") holds one layer's mean-pooled vectors:
//!
//! | bytes     | content                                  |
//! |-----------|------------------------------------------|
//! | 4         | magic `LACT`                             |
//! | 4         | format version, u32 LE (currently 1)     |
//! | 4         | layer index, u32 LE                      |
//! | 4         | `n`, u32 LE                              |
//! | 4         | `d`, u32 LE                              |
//! | 4·n·d     | values, f32 LE, row-major                |
//! | n         | domain label per row, `0xFF` = unlabeled |
//!
//! A file is either fully labeled or fully unlabeled.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::clustering::ActivationSet;
use crate::error::{Error, Result};
use crate::model::{Example, Input};
use crate::nn::Matrix;
use crate::rng;
use crate::trainer::TaskStream;

pub const LACT_MAGIC: &[u8; 4] = b"LACT";
pub const LACT_VERSION: u32 = 1;
pub const UNLABELED: u8 = 0xFF;
const HEADER_LEN: usize = 20;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, at: usize, msg: impl Into<String>) -> Error {
        Error::Format {
            offset: at as u64,
            msg: msg.into(),
        }
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(self.err(
                self.bytes.len(),
                format!("truncated {what}: need {len} bytes at offset {}", self.pos),
            )),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }
}

/// Parses an activation file held in memory.
pub fn parse_lact(bytes: &[u8]) -> Result<ActivationSet> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != LACT_MAGIC {
        return Err(c.err(0, "bad magic, expected \"LACT\""));
    }
    let version = c.u32("version")?;
    if version != LACT_VERSION {
        return Err(c.err(4, format!("unsupported version {version}")));
    }
    let layer = c.u32("layer")? as usize;
    let n = c.u32("row count")? as usize;
    let d = c.u32("width")? as usize;
    let count = n
        .checked_mul(d)
        .filter(|c| c.checked_mul(4).is_some())
        .ok_or_else(|| c.err(12, "n x d overflows"))?;
    let start = c.pos;
    let raw = c.take(count * 4, "values")?;
    let mut values = Vec::with_capacity(count);
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(c.err(start + 4 * i, format!("non-finite value {v}")));
        }
        values.push(v as f64);
    }
    let label_start = c.pos;
    let raw_labels = c.take(n, "labels")?;
    if c.pos != bytes.len() {
        return Err(c.err(c.pos, format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    let unlabeled = raw_labels.iter().filter(|&&b| b == UNLABELED).count();
    let labels = if n > 0 && unlabeled == n {
        None
    } else if unlabeled == 0 {
        Some(raw_labels.iter().map(|&b| b as usize).collect())
    } else {
        let first = raw_labels.iter().position(|&b| b == UNLABELED).expect("some unlabeled");
        return Err(c.err(label_start + first, "file mixes labeled and unlabeled rows"));
    };
    ActivationSet::new(Matrix::from_vec(n, d, values)?, labels, Some(layer))
}

pub fn read_lact(path: impl AsRef<Path>) -> Result<ActivationSet> {
    parse_lact(&fs::read(path)?)
}

/// Serializes `set`; values are narrowed to f32. A missing layer index is
/// written as 0.
pub fn encode_lact(set: &ActivationSet) -> Result<Vec<u8>> {
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("{what} {v} exceeds u32")))
    };
    let (n, d) = (set.n(), set.d());
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n * d + n);
    out.extend_from_slice(LACT_MAGIC);
    out.extend_from_slice(&LACT_VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(set.layer.unwrap_or(0), "layer")?.to_le_bytes());
    out.extend_from_slice(&to_u32(n, "row count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(d, "width")?.to_le_bytes());
    for &v in set.values.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    match &set.labels {
        Some(labels) => {
            for &l in labels {
                if l >= UNLABELED as usize {
                    return Err(Error::InvalidConfig(format!(
                        "label {l} does not fit a label byte (max 254)"
                    )));
                }
                out.push(l as u8);
            }
        }
        None => out.extend(std::iter::repeat_n(UNLABELED, n)),
    }
    Ok(out)
}

pub fn write_lact(path: impl AsRef<Path>, set: &ActivationSet) -> Result<()> {
    let bytes = encode_lact(set)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Default phase length, in steps, of each embedding domain.
pub const DEFAULT_EMBED_PHASE: usize = 300;
/// Fraction of each domain's rows held out for evaluation.
pub const DEFAULT_HOLDOUT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
struct EmbedDomain {
    train: Vec<Vec<f64>>,
    held_out: Vec<Vec<f64>>,
}

/// Precomputed embedding vectors presented domain by domain. The embedding
/// layer is bypassed: each vector is the pooled input. Batches sample
/// uniformly over every domain introduced so far.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStream {
    domains: Vec<EmbedDomain>,
    intro: Vec<usize>,
    total: usize,
    width: usize,
}

impl EmbeddingStream {
    /// One activation set per domain, in presentation order. Labels inside
    /// the sets are ignored.
    pub fn from_domain_sets(
        sets: &[ActivationSet],
        phases: &[usize],
        holdout: f64,
        seed: u64,
    ) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InsufficientData { need: 1, got: 0 });
        }
        if phases.len() != sets.len() {
            return Err(Error::LengthMismatch(sets.len(), phases.len()));
        }
        if phases.contains(&0) {
            return Err(Error::InvalidConfig("phase lengths must be positive".into()));
        }
        if !(0.0..1.0).contains(&holdout) {
            return Err(Error::InvalidConfig(format!("holdout fraction {holdout} not in [0, 1)")));
        }
        let width = sets[0].d();
        let mut domains = Vec::with_capacity(sets.len());
        for (i, set) in sets.iter().enumerate() {
            if set.d() != width {
                return Err(Error::shape(width, set.d()));
            }
            if set.n() < 2 {
                return Err(Error::InsufficientData { need: 2, got: set.n() });
            }
            let mut rows: Vec<Vec<f64>> = (0..set.n()).map(|r| set.values.row(r).to_vec()).collect();
            rows.shuffle(&mut rng::stream(seed, &[0x5B17, i as u64]));
            let keep = ((holdout * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
            let train = rows.split_off(keep);
            domains.push(EmbedDomain {
                train,
                held_out: rows,
            });
        }
        let mut intro = Vec::with_capacity(phases.len());
        let mut total = 0;
        for &p in phases {
            intro.push(total);
            total += p;
        }
        Ok(Self {
            domains,
            intro,
            total,
            width,
        })
    }

    /// A single labeled set, split into domains by ascending label.
    pub fn from_labeled_set(set: &ActivationSet, phase: usize, holdout: f64, seed: u64) -> Result<Self> {
        let labels = set
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("a single embedding file must be labeled".into()))?;
        let mut ids: Vec<usize> = labels.clone();
        ids.sort_unstable();
        ids.dedup();
        let sets = ids
            .iter()
            .map(|&id| {
                let rows: Vec<usize> = (0..set.n()).filter(|&r| labels[r] == id).collect();
                let data = rows.iter().flat_map(|&r| set.values.row(r).iter().copied()).collect();
                ActivationSet::new(Matrix::from_vec(rows.len(), set.d(), data)?, None, set.layer)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_domain_sets(&sets, &vec![phase; sets.len()], holdout, seed)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn held_out_len(&self, domain: usize) -> usize {
        self.domains[domain].held_out.len()
    }
}

impl TaskStream for EmbeddingStream {
    fn num_domains(&self) -> usize {
        self.domains.len()
    }

    fn total_steps(&self) -> usize {
        self.total
    }

    fn intro_step(&self, domain: usize) -> usize {
        self.intro[domain]
    }

    fn active_domain(&self, step: usize) -> usize {
        self.intro.partition_point(|&s| s <= step).saturating_sub(1)
    }

    fn batch(&self, step: usize, size: usize, r: &mut rng::Rng) -> Result<Vec<Example>> {
        if step >= self.total {
            return Err(Error::ScheduleExhausted {
                step,
                total: self.total,
            });
        }
        let active = self.active_domain(step);
        Ok((0..size)
            .map(|_| {
                let d = r.gen_range(0..=active);
                let row = self.domains[d].train.choose(r).expect("non-empty train split");
                Example {
                    input: Input::Features(row.clone()),
                    label: d,
                }
            })
            .collect())
    }

    /// The first `per_domain` held-out rows; the split is fixed at
    /// construction, so `seed` is unused.
    fn eval_domain(&self, domain: usize, per_domain: usize, _seed: u64) -> Result<Vec<Example>> {
        Ok(self.domains[domain]
            .held_out
            .iter()
            .take(per_domain)
            .map(|row| Example {
                input: Input::Features(row.clone()),
                label: domain,
            })
            .collect())
    }

    fn input_shape(&self, _d_emb: usize) -> (usize, usize) {
        (0, self.width)
    }
}

/// Synthetic stand-in for precomputed embeddings: one Gaussian blob per
/// domain around a random unit-variance center, with isotropic `noise`.
pub fn pseudo_embeddings(
    n_domains: usize,
    per_domain: usize,
    width: usize,
    noise: f64,
    seed: u64,
) -> Vec<ActivationSet> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n_domains)
        .map(|d| {
            let mut r = rng::stream(seed, &[0xE3B, d as u64]);
            let center: Vec<f64> = (0..width).map(|_| unit.sample(&mut r)).collect();
            let values = Matrix::from_fn(per_domain, width, |_, k| center[k] + noise * unit.sample(&mut r));
            ActivationSet::new(values, Some(vec![d; per_domain]), Some(0)).expect("finite values")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set(labels: Option<Vec<usize>>) -> ActivationSet {
        let m = Matrix::from_vec(3, 2, vec![0.5, -1.25, 3.0, 0.0, 1e-3, 7.0]).unwrap();
        ActivationSet::new(m, labels, Some(4)).unwrap()
    }

    #[test]
    fn round_trip_is_exact_for_f32_values() {
        for labels in [None, Some(vec![0, 2, 1])] {
            let set = small_set(labels);
            let bytes = encode_lact(&set).unwrap();
            assert_eq!(bytes.len(), HEADER_LEN + 24 + 3);
            let back = parse_lact(&bytes).unwrap();
            assert_eq!(back.labels, set.labels);
            assert_eq!(back.layer, Some(4));
            for (a, b) in back.values.data().iter().zip(set.values.data()) {
                assert_eq!(*a, *b as f32 as f64);
            }
            assert_eq!(encode_lact(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn errors_cite_offsets() {
        let bytes = encode_lact(&small_set(Some(vec![0, 1, 1]))).unwrap();
        let offset = |b: &[u8]| match parse_lact(b) {
            Err(Error::Format { offset, .. }) => offset,
            other => panic!("expected format error, got {other:?}"),
        };
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(offset(&bad), 0);
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(offset(&bad), 4);
        assert_eq!(offset(&bytes[..30]), 30);
        let mut bad = bytes.clone();
        bad.push(0);
        assert_eq!(offset(&bad), bytes.len() as u64);
        let mut bad = bytes.clone();
        bad[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert_eq!(offset(&bad), HEADER_LEN as u64);
        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] = UNLABELED;
        assert_eq!(offset(&bad), last as u64);
    }

    #[test]
    fn label_255_is_rejected_on_write() {
        assert!(encode_lact(&small_set(Some(vec![0, 255, 1]))).is_err());
    }

    #[test]
    fn stream_schedule_and_split() {
        let rows = |c: f64| Matrix::from_fn(10, 2, |r, k| c + (r * 2 + k) as f64);
        let sets: Vec<ActivationSet> = [0.0, 100.0]
            .iter()
            .map(|&c| ActivationSet::new(rows(c), None, None).unwrap())
            .collect();
        let s = EmbeddingStream::from_domain_sets(&sets, &[5, 7], 0.2, 1).unwrap();
        assert_eq!(s.total_steps(), 12);
        assert_eq!(s.boundaries(), vec![5]);
        assert_eq!((s.active_domain(4), s.active_domain(5), s.active_domain(11)), (0, 1, 1));
        assert_eq!(s.held_out_len(0), 2);
        assert_eq!(s.input_shape(32), (0, 2));
        let mut r = rng::stream(0, &[]);
        assert!(s.batch(3, 16, &mut r).unwrap().iter().all(|e| e.label == 0));
        assert!(s.batch(12, 1, &mut r).is_err());
        let held: Vec<Example> = s.eval_domain(0, 100, 0).unwrap();
        let train = &s.domains[0].train;
        for e in &held {
            let Input::Features(f) = &e.input else { unreachable!() };
            assert!(!train.contains(f));
        }
    }

    #[test]
    fn labeled_file_groups_by_label() {
        let m = Matrix::from_fn(6, 1, |r, _| r as f64 + 1.0);
        let set = ActivationSet::new(m, Some(vec![7, 3, 7, 3, 7, 3]), None).unwrap();
        let s = EmbeddingStream::from_labeled_set(&set, 4, 0.3, 0).unwrap();
        assert_eq!(s.num_domains(), 2);
        // Label 3 (rows 2, 4, 6) comes first.
        let all: Vec<f64> = s.domains[0].train.iter().chain(&s.domains[0].held_out).map(|v| v[0]).collect();
        let mut sorted = all.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![2.0, 4.0, 6.0]);
    }
}
