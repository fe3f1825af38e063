//! The expandable classifier: mean-pooled embedding, a masked projection of
//! width `d_max` with `d_active` live rows, and a linear head.
//!
//! Expansion activates the next pre-allocated projection row, overwriting it
//! with `N(0, sigma^2)` samples. Rows at or beyond `d_active` are masked out of
//! the forward pass, so they never receive gradient.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::{adam_step, dot, softmax_xent, AdamState, Matrix};

/// Model input: either a token sequence (embedded and mean-pooled) or a
/// precomputed feature vector that bypasses the embedding table.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Tokens(Vec<u8>),
    Features(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Input,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Embedding rows. Zero for feature-input models.
    pub vocab: usize,
    pub d_emb: usize,
    pub d_base: usize,
    pub d_max: usize,
    pub num_classes: usize,
    pub seq_len: usize,
    pub lr: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab: 128,
            d_emb: 32,
            d_base: 64,
            d_max: 84,
            num_classes: 10,
            seq_len: 32,
            lr: 3e-4,
        }
    }
}

/// Dimensions disabled at evaluation time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AblationMask {
    pub disabled_dims: BTreeSet<usize>,
}

impl AblationMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(dim: usize) -> Self {
        Self {
            disabled_dims: BTreeSet::from([dim]),
        }
    }

    pub fn range(dims: std::ops::Range<usize>) -> Self {
        Self {
            disabled_dims: dims.collect(),
        }
    }
}

/// Width change produced by one expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Growth {
    pub d_before: usize,
    pub d_after: usize,
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub pooled: Vec<f64>,
    pub pre_activation: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Gradients of the mean batch loss.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub embed: Matrix,
    pub proj: Matrix,
    pub head: Matrix,
}

#[derive(Debug, Clone)]
pub struct DynamicModel {
    pub embed: Matrix,
    pub proj: Matrix,
    pub head: Matrix,
    mask: Vec<bool>,
    d_active: usize,
    d_base: usize,
    d_max: usize,
    seq_len: usize,
    embed_opt: AdamState,
    proj_opt: AdamState,
    head_opt: AdamState,
}

impl DynamicModel {
    /// Builds a model with `d_active = d_base`. Embeddings are `N(0, 1)`,
    /// projection rows `N(0, 2/d_emb)`, head `N(0, 1/d_max)`.
    pub fn new(cfg: &ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        if cfg.d_base > cfg.d_max {
            return Err(Error::InvalidConfig(format!(
                "d_base {} exceeds d_max {}",
                cfg.d_base, cfg.d_max
            )));
        }
        if cfg.d_emb == 0 || cfg.num_classes == 0 || cfg.d_max == 0 {
            return Err(Error::InvalidConfig(
                "d_emb, d_max and num_classes must be positive".into(),
            ));
        }
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        // Unit-normal embeddings, He-normal projection rows (ReLU follows)
        // and a head scaled to keep initial logits near unit variance.
        let proj_scale = (2.0 / cfg.d_emb as f64).sqrt();
        let head_scale = (1.0 / cfg.d_max as f64).sqrt();
        let embed = Matrix::from_fn(cfg.vocab, cfg.d_emb, |_, _| unit.sample(rng));
        let proj = Matrix::from_fn(cfg.d_max, cfg.d_emb, |_, _| proj_scale * unit.sample(rng));
        let head = Matrix::from_fn(cfg.num_classes, cfg.d_max, |_, _| {
            head_scale * unit.sample(rng)
        });
        Ok(Self::from_parts(embed, proj, head, cfg.d_base, cfg.d_base, cfg.seq_len, cfg.lr))
    }

    fn from_parts(
        embed: Matrix,
        proj: Matrix,
        head: Matrix,
        d_base: usize,
        d_active: usize,
        seq_len: usize,
        lr: f64,
    ) -> Self {
        let d_max = proj.rows();
        let embed_opt = AdamState::new(embed.rows(), embed.cols(), lr);
        let proj_opt = AdamState::new(proj.rows(), proj.cols(), lr);
        let head_opt = AdamState::new(head.rows(), head.cols(), lr);
        Self {
            mask: (0..d_max).map(|i| i < d_active).collect(),
            embed,
            proj,
            head,
            d_active,
            d_base,
            d_max,
            seq_len,
            embed_opt,
            proj_opt,
            head_opt,
        }
    }

    pub fn d_active(&self) -> usize {
        self.d_active
    }

    pub fn d_base(&self) -> usize {
        self.d_base
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Expansion budget `d_max - d_base`.
    pub fn d_adapt(&self) -> usize {
        self.d_max - self.d_base
    }

    pub fn d_emb(&self) -> usize {
        self.proj.cols()
    }

    pub fn vocab(&self) -> usize {
        self.embed.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.head.rows()
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn set_seq_len(&mut self, seq_len: usize) {
        self.seq_len = seq_len;
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.embed_opt.lr = lr;
        self.proj_opt.lr = lr;
        self.head_opt.lr = lr;
    }

    pub fn proj_optimizer(&self) -> &AdamState {
        &self.proj_opt
    }

    fn pool(&self, input: &Input) -> Result<Vec<f64>> {
        match input {
            Input::Tokens(tokens) => {
                if tokens.len() != self.seq_len || tokens.is_empty() {
                    return Err(Error::shape(
                        format!("sequence of {}", self.seq_len),
                        tokens.len(),
                    ));
                }
                let mut x = vec![0.0; self.d_emb()];
                for &t in tokens {
                    let t = t as usize;
                    if t >= self.vocab() {
                        return Err(Error::Index {
                            index: t,
                            limit: self.vocab(),
                        });
                    }
                    for (xi, e) in x.iter_mut().zip(self.embed.row(t)) {
                        *xi += e;
                    }
                }
                let inv = 1.0 / tokens.len() as f64;
                x.iter_mut().for_each(|v| *v *= inv);
                Ok(x)
            }
            Input::Features(f) => {
                if f.len() != self.d_emb() {
                    return Err(Error::shape(self.d_emb(), f.len()));
                }
                Ok(f.clone())
            }
        }
    }

    fn pass(&self, input: &Input, disabled: Option<&BTreeSet<usize>>) -> Result<ForwardPass> {
        let pooled = self.pool(input)?;
        let mut pre_activation = vec![0.0; self.d_max];
        let mut hidden = vec![0.0; self.d_max];
        for i in 0..self.d_active {
            if disabled.is_some_and(|d| d.contains(&i)) {
                continue;
            }
            let z = dot(self.proj.row(i), &pooled);
            pre_activation[i] = z;
            hidden[i] = z.max(0.0);
        }
        let logits = (0..self.num_classes())
            .map(|c| dot(&self.head.row(c)[..self.d_active], &hidden[..self.d_active]))
            .collect();
        Ok(ForwardPass {
            pooled,
            pre_activation,
            hidden,
            logits,
        })
    }

    /// Full forward pass: `hidden = ReLU(proj x) * mask`, `logits = head hidden`.
    pub fn forward(&self, input: &Input) -> Result<ForwardPass> {
        self.pass(input, None)
    }

    pub fn logits(&self, input: &Input) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.logits)
    }

    /// Forward pass with the dimensions in `ablation` additionally masked.
    pub fn forward_ablated(&self, input: &Input, ablation: &AblationMask) -> Result<Vec<f64>> {
        if let Some(&dim) = ablation.disabled_dims.iter().find(|&&d| d >= self.d_active) {
            return Err(Error::InvalidAblation {
                dim,
                d_active: self.d_active,
            });
        }
        Ok(self.pass(input, Some(&ablation.disabled_dims))?.logits)
    }

    pub fn predict(&self, input: &Input) -> Result<usize> {
        Ok(argmax(&self.logits(input)?))
    }

    /// Mean batch loss and its gradients with respect to every parameter.
    pub fn loss_and_grads(&self, batch: &[Example]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::InsufficientData { need: 1, got: 0 });
        }
        let mut g = Gradients {
            embed: Matrix::zeros(self.embed.rows(), self.embed.cols()),
            proj: Matrix::zeros(self.proj.rows(), self.proj.cols()),
            head: Matrix::zeros(self.head.rows(), self.head.cols()),
        };
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for ex in batch {
            let fp = self.forward(&ex.input)?;
            let (loss, g_logits) = softmax_xent(&fp.logits, ex.label)?;
            total += loss;
            g.head.add_outer(scale, &g_logits, &fp.hidden);
            let mut g_pre = self.head.matvec_t(&g_logits)?;
            for (i, gz) in g_pre.iter_mut().enumerate() {
                if !(self.mask[i] && fp.pre_activation[i] > 0.0) {
                    *gz = 0.0;
                }
            }
            g.proj.add_outer(scale, &g_pre, &fp.pooled);
            if let Input::Tokens(tokens) = &ex.input {
                let g_x = self.proj.matvec_t(&g_pre)?;
                let s = scale / tokens.len() as f64;
                for &t in tokens {
                    for (ge, gx) in g.embed.row_mut(t as usize).iter_mut().zip(&g_x) {
                        *ge += s * gx;
                    }
                }
            }
        }
        Ok((total * scale, g))
    }

    /// One Adam step on the mean loss of `batch`; returns that loss.
    pub fn train_step(&mut self, batch: &[Example]) -> Result<f64> {
        let (loss, g) = self.loss_and_grads(batch)?;
        if self.embed.rows() > 0 {
            adam_step(&mut self.embed, &g.embed, &mut self.embed_opt)?;
        }
        adam_step(&mut self.proj, &g.proj, &mut self.proj_opt)?;
        adam_step(&mut self.head, &g.head, &mut self.head_opt)?;
        Ok(loss)
    }

    /// Activates projection row `d_active` with fresh `N(0, sigma^2)` weights
    /// and zeroed optimizer moments.
    pub fn expand(&mut self, sigma: f64, rng: &mut impl Rng) -> Result<Growth> {
        if self.d_active >= self.d_max {
            return Err(Error::CapacityExhausted { d_max: self.d_max });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        let row = self.d_active;
        let dist = Normal::new(0.0, sigma).expect("validated sigma");
        for w in self.proj.row_mut(row) {
            *w = dist.sample(rng);
        }
        self.proj_opt.reset_row(row);
        self.mask[row] = true;
        self.d_active += 1;
        Ok(Growth {
            d_before: row,
            d_after: self.d_active,
        })
    }

    pub fn accuracy(&self, samples: &[Example]) -> Result<f64> {
        self.accuracy_ablated(samples, &AblationMask::none())
    }

    pub fn accuracy_ablated(&self, samples: &[Example], ablation: &AblationMask) -> Result<f64> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0usize;
        for ex in samples {
            if argmax(&self.forward_ablated(&ex.input, ablation)?) == ex.label {
                correct += 1;
            }
        }
        Ok(correct as f64 / samples.len() as f64)
    }

    /// Writes a weights-only checkpoint. Optimizer state is not saved.
    pub fn save(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        for v in [
            CHECKPOINT_VERSION,
            self.d_base as u32,
            self.d_active as u32,
            self.d_max as u32,
            self.vocab() as u32,
            self.d_emb() as u32,
            self.num_classes() as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for m in [&self.embed, &self.proj, &self.head] {
            w.write_all(&(m.rows() as u32).to_le_bytes())?;
            w.write_all(&(m.cols() as u32).to_le_bytes())?;
            for &x in m.data() {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a checkpoint written by [`DynamicModel::save`]. The sequence
    /// length is not stored and defaults to 32.
    pub fn load(r: &mut impl Read, lr: f64) -> Result<Self> {
        let mut rd = ByteReader { inner: r, offset: 0 };
        let mut magic = [0u8; 4];
        rd.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format {
                offset: 0,
                msg: "bad magic, expected LACE".into(),
            });
        }
        let version = rd.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format {
                offset: 4,
                msg: format!("unsupported version {version}"),
            });
        }
        let d_base = rd.u32()? as usize;
        let d_active = rd.u32()? as usize;
        let d_max = rd.u32()? as usize;
        let vocab = rd.u32()? as usize;
        let d_emb = rd.u32()? as usize;
        let num_classes = rd.u32()? as usize;
        if !(d_base <= d_active && d_active <= d_max) {
            return Err(Error::Format {
                offset: 8,
                msg: format!("inconsistent widths {d_base} <= {d_active} <= {d_max} violated"),
            });
        }
        let embed = rd.matrix((vocab, d_emb))?;
        let proj = rd.matrix((d_max, d_emb))?;
        let head = rd.matrix((num_classes, d_max))?;
        Ok(Self::from_parts(embed, proj, head, d_base, d_active, 32, lr))
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"LACE";
const CHECKPOINT_VERSION: u32 = 1;

struct ByteReader<'a, R> {
    inner: &'a mut R,
    offset: u64,
}

impl<R: Read> ByteReader<'_, R> {
    fn read_exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| Error::Format {
            offset: self.offset,
            msg: format!("truncated: {e}"),
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn matrix(&mut self, expected: (usize, usize)) -> Result<Matrix> {
        let at = self.offset;
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        if (rows, cols) != expected {
            return Err(Error::Format {
                offset: at,
                msg: format!("matrix {rows}x{cols}, expected {}x{}", expected.0, expected.1),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        let mut b = [0u8; 4];
        for _ in 0..rows * cols {
            self.read_exact(&mut b)?;
            data.push(f32::from_le_bytes(b) as f64);
        }
        Matrix::from_vec(rows, cols, data)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
