//! Unsupervised activation analysis: batch PCA, threshold-spawning online
//! K-means under cosine distance, and cluster purity.
//!
//! Clustering here is a diagnostic. It never drives expansion.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DynamicModel, Example};
use crate::nn::{dot, Matrix};
use crate::rng;

pub const DEFAULT_D_PCA: usize = 32;
pub const DEFAULT_THRESHOLD: f64 = 0.15;

/// `n` activation vectors of width `d`, optionally labeled by domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    pub values: Matrix,
    pub labels: Option<Vec<usize>>,
    pub layer: Option<usize>,
}

impl ActivationSet {
    pub fn new(values: Matrix, labels: Option<Vec<usize>>, layer: Option<usize>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != values.rows() {
                return Err(Error::LengthMismatch(values.rows(), l.len()));
            }
        }
        if values.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("activation values must be finite".into()));
        }
        Ok(Self {
            values,
            labels,
            layer,
        })
    }

    /// Hidden states of `model` on `examples`, labeled by example label.
    /// Only the active width is kept.
    pub fn from_hidden(model: &DynamicModel, examples: &[Example]) -> Result<Self> {
        let d = model.d_active();
        let mut data = Vec::with_capacity(examples.len() * d);
        for ex in examples {
            data.extend_from_slice(&model.forward(&ex.input)?.hidden[..d]);
        }
        let labels = examples.iter().map(|e| e.label).collect();
        Self::new(Matrix::from_vec(examples.len(), d, data)?, Some(labels), None)
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }
}

/// Mean vector and the leading principal directions of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `d × d_pca`; column `j` is the `j`-th direction.
    pub basis: Matrix,
    /// Sample-covariance eigenvalues matching the basis columns, descending.
    pub eigenvalues: Vec<f64>,
}

impl Pca {
    pub fn d_pca(&self) -> usize {
        self.basis.cols()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::LengthMismatch(self.mean.len(), x.len()));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.basis.matvec_t(&centered)
    }

    /// Maps a projected vector back into the input space.
    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.d_pca() {
            return Err(Error::LengthMismatch(self.d_pca(), z.len()));
        }
        Ok((0..self.mean.len())
            .map(|i| self.mean[i] + dot(self.basis.row(i), z))
            .collect())
    }
}

/// Sample covariance (divisor `n - 1`, or 1 for a single sample).
pub fn covariance(values: &Matrix) -> (Vec<f64>, DMatrix<f64>) {
    let (n, d) = (values.rows(), values.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(values.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n.max(1) as f64);
    let centered = DMatrix::from_fn(n, d, |r, c| values.get(r, c) - mean[c]);
    let cov = centered.transpose() * &centered / n.saturating_sub(1).max(1) as f64;
    (mean, cov)
}

/// Fits the top `d_pca` principal directions. Each direction's
/// largest-magnitude component is made positive.
pub fn fit_pca(set: &ActivationSet, d_pca: usize) -> Result<Pca> {
    let (n, d) = (set.n(), set.d());
    if d_pca == 0 || d_pca > d {
        return Err(Error::InvalidConfig(format!(
            "d_pca must lie in 1..={d}, got {d_pca}"
        )));
    }
    if n < d_pca {
        return Err(Error::InsufficientData { need: d_pca, got: n });
    }
    let (mean, cov) = covariance(&set.values);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut basis = Matrix::zeros(d, d_pca);
    let mut eigenvalues = Vec::with_capacity(d_pca);
    for (j, &k) in order.iter().take(d_pca).enumerate() {
        let col = eig.eigenvectors.column(k);
        let pivot = (0..d)
            .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a)))
            .expect("d > 0");
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            basis.set(i, j, sign * col[i]);
        }
        eigenvalues.push(eig.eigenvalues[k]);
    }
    Ok(Pca {
        mean,
        basis,
        eigenvalues,
    })
}

/// `1 - cos(a, b)`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (dot(a, a).sqrt(), dot(b, b).sqrt());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(1.0 - dot(a, b) / (na * nb))
}

/// Online K-means that spawns a new center whenever no existing center is
/// within the cosine-distance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub threshold: f64,
    pub centers: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
}

impl ClusterModel {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            centers: Vec::new(),
            counts: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Assigns `x` and updates the chosen center as a running mean.
    pub fn assign(&mut self, x: &[f64]) -> Result<usize> {
        if dot(x, x) == 0.0 {
            return Err(Error::ZeroVector);
        }
        if let Some(c) = self.centers.first() {
            if c.len() != x.len() {
                return Err(Error::LengthMismatch(c.len(), x.len()));
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.centers.iter().enumerate() {
            // Members of a center lie in a cone narrower than a right angle,
            // so their mean is never zero.
            let dist = cosine_distance(x, c)?;
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((i, dist));
            }
        }
        match best {
            Some((i, dist)) if dist <= self.threshold => {
                self.counts[i] += 1;
                let n = self.counts[i] as f64;
                for (c, v) in self.centers[i].iter_mut().zip(x) {
                    *c += (v - *c) / n;
                }
                Ok(i)
            }
            _ => {
                self.centers.push(x.to_vec());
                self.counts.push(1);
                Ok(self.centers.len() - 1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub d_pca: usize,
    pub threshold: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            d_pca: DEFAULT_D_PCA,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// PCA-reduces `set` and streams it through a fresh cluster model in row
/// order. `d_pca` is capped at the input width.
pub fn cluster(set: &ActivationSet, cfg: &ClusterConfig) -> Result<(ClusterModel, Vec<usize>)> {
    let pca = fit_pca(set, cfg.d_pca.min(set.d()))?;
    let mut model = ClusterModel::new(cfg.threshold);
    let assignments = (0..set.n())
        .map(|r| model.assign(&pca.project(set.values.row(r))?))
        .collect::<Result<Vec<_>>>()?;
    Ok((model, assignments))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    pub majority: usize,
    pub majority_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PurityReport {
    pub purity: f64,
    pub k: usize,
    pub clusters: Vec<ClusterSummary>,
}

/// Fraction of samples that carry their cluster's majority label. Ties go to
/// the smallest label.
pub fn purity(assignments: &[usize], labels: &[usize]) -> Result<PurityReport> {
    if assignments.len() != labels.len() {
        return Err(Error::LengthMismatch(assignments.len(), labels.len()));
    }
    if assignments.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    let mut tallies: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&c, &l) in assignments.iter().zip(labels) {
        *tallies.entry(c).or_default().entry(l).or_default() += 1;
    }
    let clusters: Vec<ClusterSummary> = tallies
        .into_iter()
        .map(|(cluster, t)| {
            let (majority, majority_count) = t
                .iter()
                .fold((0, 0), |best, (&l, &n)| if n > best.1 { (l, n) } else { best });
            ClusterSummary {
                cluster,
                size: t.values().sum(),
                majority,
                majority_count,
            }
        })
        .collect();
    let hits: usize = clusters.iter().map(|c| c.majority_count).sum();
    Ok(PurityReport {
        purity: hits as f64 / assignments.len() as f64,
        k: clusters.len(),
        clusters,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerPurity {
    pub layer: usize,
    pub report: PurityReport,
}

/// Clusters every layer independently. Layers without an index are
/// numbered by position.
pub fn layer_sweep(sets: &[ActivationSet], cfg: &ClusterConfig) -> Result<Vec<LayerPurity>> {
    if sets.is_empty() {
        return Err(Error::InsufficientData { need: 1, got: 0 });
    }
    sets.par_iter()
        .enumerate()
        .map(|(i, set)| {
            let labels = set.labels.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!("layer {} has no domain labels", set.layer.unwrap_or(i)))
            })?;
            let (_, assignments) = cluster(set, cfg)?;
            Ok(LayerPurity {
                layer: set.layer.unwrap_or(i),
                report: purity(&assignments, labels)?,
            })
        })
        .collect()
}

/// `layer,purity,k` rows.
pub fn write_sweep_csv(w: &mut impl std::io::Write, rows: &[LayerPurity]) -> Result<()> {
    writeln!(w, "layer,purity,k")?;
    for r in rows {
        writeln!(w, "{},{:.6},{}", r.layer, r.report.purity, r.report.k)?;
    }
    Ok(())
}

/// Synthetic layers of well-separated Gaussian blobs, one blob per label,
/// presented in shuffled order. Every layer draws fresh centers.
pub fn blob_layers(
    n_layers: usize,
    blobs: usize,
    per_blob: usize,
    width: usize,
    seed: u64,
) -> Vec<ActivationSet> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n_layers)
        .map(|layer| {
            let mut r = rng::stream(seed, &[0xB10B, layer as u64]);
            let centers: Vec<Vec<f64>> = (0..blobs)
                .map(|_| (0..width).map(|_| 3.0 * unit.sample(&mut r)).collect())
                .collect();
            let mut order: Vec<usize> = (0..blobs * per_blob).map(|i| i % blobs).collect();
            order.shuffle(&mut r);
            let data = order
                .iter()
                .flat_map(|&b| centers[b].iter().map(|c| c + unit.sample(&mut r)).collect::<Vec<_>>())
                .collect();
            let values = Matrix::from_vec(order.len(), width, data).expect("sized data");
            ActivationSet::new(values, Some(order), Some(layer)).expect("finite values")
        })
        .collect()
}
