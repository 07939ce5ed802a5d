//! The three-branch regression network: dense (scalars), LSTM (sequences)
//! and convolutional (images) branches, concatenated into the embedding and
//! followed by dropout and a fully connected head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::bundle::Projection;
use crate::features::{BundleLayout, FeatureBundle, FeatureSet};

use super::layers::*;
use super::{HeadKind, NetworkConfig};

/// Input dimensions after projection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSpec {
    pub n_scalars: usize,
    pub seq_channels: usize,
    pub seq_len: usize,
    pub img_channels: usize,
    pub img_h: usize,
    pub img_w: usize,
}

impl InputSpec {
    pub fn from_layout(layout: &BundleLayout, seq_len: usize) -> Result<Self> {
        let (img_h, img_w) = layout.images.first().map_or((0, 0), |s| (s.rows, s.cols));
        for s in &layout.images {
            if (s.rows, s.cols) != (img_h, img_w) {
                return Err(Error::Shape {
                    slot: s.name.clone(),
                    expected: format!("{img_h}x{img_w}"),
                    found: format!("{}x{}", s.rows, s.cols),
                });
            }
        }
        Ok(Self {
            n_scalars: layout.scalars.len(),
            seq_channels: layout.sequences.len(),
            seq_len: if layout.sequences.is_empty() { 0 } else { seq_len },
            img_channels: layout.images.len(),
            img_h,
            img_w,
        })
    }
}

/// Network-ready input of one sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Prepared {
    pub scalars: Vec<f64>,
    /// Time-major `[seq_len][channels]`.
    pub seq: Vec<Vec<f64>>,
    /// `[channels x h x w]`.
    pub image: Vec<f64>,
}

/// Linear interpolation of `x` onto `n` evenly spaced points.
pub fn resample_linear(x: &[f64], n: usize) -> Vec<f64> {
    match (x.len(), n) {
        (_, 0) => Vec::new(),
        (0, _) => vec![0.0; n],
        (1, _) => vec![x[0]; n],
        (len, 1) => vec![x[len / 2]],
        (len, _) => (0..n)
            .map(|i| {
                let pos = i as f64 * (len - 1) as f64 / (n - 1) as f64;
                let k = (pos.floor() as usize).min(len - 2);
                let frac = pos - k as f64;
                x[k] * (1.0 - frac) + x[k + 1] * frac
            })
            .collect(),
    }
}

const INPUT_CLAMP: f64 = 8.0;

/// Element-wise z-scoring fitted on training inputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Normalizer {
    pub scalar_mean: Vec<f64>,
    pub scalar_std: Vec<f64>,
    pub seq_mean: Vec<f64>,
    pub seq_std: Vec<f64>,
    pub img_mean: Vec<f64>,
    pub img_std: Vec<f64>,
}

fn raw_input(b: &FeatureBundle, spec: &InputSpec) -> Prepared {
    let resampled: Vec<Vec<f64>> = b.sequences.iter().map(|s| resample_linear(s, spec.seq_len)).collect();
    let seq = (0..spec.seq_len)
        .map(|t| resampled.iter().map(|s| s[t]).collect())
        .collect();
    let image = b.images.iter().flat_map(|m| m.data.iter().copied()).collect();
    Prepared {
        scalars: b.scalars.clone(),
        seq,
        image,
    }
}

fn moments(columns: usize, rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len().max(1) as f64;
    let mut mean = vec![0.0; columns];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; columns];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    let std = var
        .iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, std)
}

impl Normalizer {
    pub fn fit(bundles: &[&FeatureBundle], spec: &InputSpec) -> Self {
        let raws: Vec<Prepared> = bundles.iter().map(|b| raw_input(b, spec)).collect();
        let scal: Vec<Vec<f64>> = raws.iter().map(|r| r.scalars.clone()).collect();
        let seq: Vec<Vec<f64>> = raws.iter().map(|r| r.seq.concat()).collect();
        let img: Vec<Vec<f64>> = raws.iter().map(|r| r.image.clone()).collect();
        let (scalar_mean, scalar_std) = moments(spec.n_scalars, &scal);
        let (seq_mean, seq_std) = moments(spec.seq_len * spec.seq_channels, &seq);
        let (img_mean, img_std) = moments(spec.img_channels * spec.img_h * spec.img_w, &img);
        Self {
            scalar_mean,
            scalar_std,
            seq_mean,
            seq_std,
            img_mean,
            img_std,
        }
    }

    /// Identity transform for the given dimensions.
    pub fn identity(spec: &InputSpec) -> Self {
        let n_seq = spec.seq_len * spec.seq_channels;
        let n_img = spec.img_channels * spec.img_h * spec.img_w;
        Self {
            scalar_mean: vec![0.0; spec.n_scalars],
            scalar_std: vec![1.0; spec.n_scalars],
            seq_mean: vec![0.0; n_seq],
            seq_std: vec![1.0; n_seq],
            img_mean: vec![0.0; n_img],
            img_std: vec![1.0; n_img],
        }
    }

    fn apply(&self, mut p: Prepared) -> Prepared {
        let z = |v: &mut f64, m: f64, s: f64| *v = ((*v - m) / s).clamp(-INPUT_CLAMP, INPUT_CLAMP);
        for ((v, m), s) in p.scalars.iter_mut().zip(&self.scalar_mean).zip(&self.scalar_std) {
            z(v, *m, *s);
        }
        let c = p.seq.first().map_or(0, |r| r.len());
        for (t, row) in p.seq.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                z(v, self.seq_mean[t * c + k], self.seq_std[t * c + k]);
            }
        }
        for ((v, m), s) in p.image.iter_mut().zip(&self.img_mean).zip(&self.img_std) {
            z(v, *m, *s);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Dense,
    Lstm,
    Conv,
    Head,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub branch: Branch,
    pub offset: usize,
    pub shape: Vec<usize>,
    /// Weights are prunable, biases are not.
    pub is_weight: bool,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Indices {
    dense: Vec<(usize, usize)>,
    lstm: Option<(usize, usize)>,
    conv: Vec<(usize, usize)>,
    head: Vec<(usize, usize)>,
}

/// Network parameters, prune mask and input preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: NetworkConfig,
    pub feature_set: FeatureSet,
    pub source_layout: BundleLayout,
    pub spec: InputSpec,
    pub normalizer: Normalizer,
    pub tensors: Vec<TensorInfo>,
    pub params: Vec<f64>,
    /// `true` where the parameter is active.
    pub mask: Vec<bool>,
    pub fingerprint: Option<String>,
    /// Set once the model has been fine-tuned for a target.
    pub personalized: bool,
    projection: Projection,
    idx: Indices,
}

/// Activations of one forward pass kept for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    dense_io: Vec<Vec<f64>>,
    lstm: Option<LstmCache>,
    /// Per conv layer: input, post-ReLU output, dropout scale of the pooled map.
    conv_in: Vec<Vec<f64>>,
    conv_out: Vec<Vec<f64>>,
    conv_drop: Vec<Option<Vec<f64>>>,
    conv_dims: Vec<(usize, usize, usize)>,
    head_drop: Option<Vec<f64>>,
    head_io: Vec<Vec<f64>>,
    pub embedding: Vec<f64>,
    pub output: Vec<f64>,
}

fn dropout_scales(rng: &mut ChaCha8Rng, n: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..n)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

impl Model {
    /// Fresh model for bundles of `source_layout`, restricted to `feature_set`.
    pub fn new(config: NetworkConfig, source_layout: &BundleLayout, feature_set: FeatureSet) -> Result<Self> {
        config.validate()?;
        let projection = source_layout.projection(feature_set);
        let spec = InputSpec::from_layout(&projection.layout, config.seq_len)?;
        if spec.n_scalars + spec.seq_channels + spec.img_channels == 0 {
            return Err(Error::Shape {
                slot: "bundle".into(),
                expected: "at least one slot".into(),
                found: "none".into(),
            });
        }
        let mut tensors = Vec::new();
        let mut idx = Indices::default();
        let mut offset = 0usize;
        let mut add = |name: String, branch: Branch, shape: Vec<usize>, is_weight: bool| -> usize {
            let t = TensorInfo { name, branch, offset, shape, is_weight };
            offset += t.len();
            tensors.push(t);
            tensors.len() - 1
        };
        let mut emb = 0;
        if spec.n_scalars > 0 {
            let mut fan_in = spec.n_scalars;
            for (l, &width) in config.dense_widths.iter().enumerate() {
                let w = add(format!("dense{l}.weight"), Branch::Dense, vec![width, fan_in], true);
                let b = add(format!("dense{l}.bias"), Branch::Dense, vec![width], false);
                idx.dense.push((w, b));
                fan_in = width;
            }
            emb += fan_in;
        }
        if spec.seq_channels > 0 {
            let h = config.lstm_units;
            let w = add("lstm.weight".into(), Branch::Lstm, vec![4 * h, spec.seq_channels + h], true);
            let b = add("lstm.bias".into(), Branch::Lstm, vec![4 * h], false);
            idx.lstm = Some((w, b));
            emb += h;
        }
        if spec.img_channels > 0 {
            let (mut c, mut hh, mut ww) = (spec.img_channels, spec.img_h, spec.img_w);
            for (l, &co) in config.conv_channels.iter().enumerate() {
                let w = add(format!("conv{l}.weight"), Branch::Conv, vec![co, c, 3, 3], true);
                let b = add(format!("conv{l}.bias"), Branch::Conv, vec![co], false);
                idx.conv.push((w, b));
                c = co;
                hh /= 2;
                ww /= 2;
            }
            if hh == 0 || ww == 0 {
                return Err(Error::Shape {
                    slot: "images".into(),
                    expected: format!("at least {0}x{0} for {1} pooling layers", 1 << config.conv_channels.len(), config.conv_channels.len()),
                    found: format!("{}x{}", spec.img_h, spec.img_w),
                });
            }
            emb += c * hh * ww;
        }
        let mut fan_in = emb;
        let out_dim = config.head.output_dim();
        let widths: Vec<usize> = config.head_widths.iter().copied().chain([out_dim]).collect();
        for (l, &width) in widths.iter().enumerate() {
            let w = add(format!("head{l}.weight"), Branch::Head, vec![width, fan_in], true);
            let b = add(format!("head{l}.bias"), Branch::Head, vec![width], false);
            idx.head.push((w, b));
            fan_in = width;
        }
        let total = offset;
        let mut model = Self {
            normalizer: Normalizer::identity(&spec),
            config,
            feature_set,
            source_layout: source_layout.clone(),
            spec,
            tensors,
            params: vec![0.0; total],
            mask: vec![true; total],
            fingerprint: None,
            personalized: false,
            projection,
            idx,
        };
        model.initialize();
        Ok(model)
    }

    /// Uniform fan-in initialization from the configured seed.
    fn initialize(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let h = self.config.lstm_units;
        for t in self.tensors.clone() {
            let range = t.range();
            if t.is_weight {
                let fan_in = match t.branch {
                    Branch::Conv => t.shape[1] * 9,
                    _ => t.shape[1],
                } as f64;
                let relu_follows = !(t.branch == Branch::Lstm || self.is_output_tensor(&t));
                let limit = if relu_follows { (6.0 / fan_in).sqrt() } else { (3.0 / fan_in).sqrt() };
                for p in &mut self.params[range] {
                    *p = rng.gen_range(-limit..limit);
                }
            } else if t.branch == Branch::Lstm {
                // forget gate bias 1
                for p in &mut self.params[t.offset + h..t.offset + 2 * h] {
                    *p = 1.0;
                }
            }
        }
    }

    fn is_output_tensor(&self, t: &TensorInfo) -> bool {
        self.idx
            .head
            .last()
            .is_some_and(|&(w, b)| self.tensors[w].name == t.name || self.tensors[b].name == t.name)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn embedding_dim(&self) -> usize {
        let (w, _) = self.idx.head[0];
        self.tensors[w].shape[1]
    }

    /// Layout of the bundles the network actually consumes.
    pub fn input_layout(&self) -> &BundleLayout {
        &self.projection.layout
    }

    fn p(&self, t: usize) -> &[f64] {
        &self.params[self.tensors[t].range()]
    }

    /// Output bias set to the given values (label means for regression).
    pub fn set_output_bias(&mut self, bias: &[f64]) {
        let (_, b) = *self.idx.head.last().expect("head");
        let r = self.tensors[b].range();
        self.params[r].copy_from_slice(bias);
    }

    pub fn fit_normalizer(&mut self, bundles: &[&FeatureBundle]) -> Result<()> {
        let projected: Vec<FeatureBundle> = bundles
            .iter()
            .map(|b| self.project(b))
            .collect::<Result<_>>()?;
        let refs: Vec<&FeatureBundle> = projected.iter().collect();
        self.normalizer = Normalizer::fit(&refs, &self.spec);
        Ok(())
    }

    fn project(&self, b: &FeatureBundle) -> Result<FeatureBundle> {
        b.check(&self.source_layout)?;
        Ok(self.projection.apply(b))
    }

    /// Validate, project, resample and normalize a bundle.
    pub fn prepare(&self, b: &FeatureBundle) -> Result<Prepared> {
        let projected = self.project(b)?;
        Ok(self.normalizer.apply(raw_input(&projected, &self.spec)))
    }

    /// Forward pass; dropout is active when `dropout_rng` is given.
    pub fn forward(&self, x: &Prepared, mut dropout_rng: Option<&mut ChaCha8Rng>) -> Trace {
        let mut tr = Trace::default();
        let mut emb = Vec::new();
        if !self.idx.dense.is_empty() {
            let mut a = x.scalars.clone();
            tr.dense_io.push(a.clone());
            for &(w, b) in &self.idx.dense {
                let mut y = vec![0.0; self.tensors[b].len()];
                dense_forward(self.p(w), self.p(b), &a, &mut y);
                relu_in_place(&mut y);
                tr.dense_io.push(y.clone());
                a = y;
            }
            emb.extend_from_slice(&a);
        }
        if let Some((w, b)) = self.idx.lstm {
            let cache = lstm_forward(self.p(w), self.p(b), &x.seq, self.config.lstm_units);
            emb.extend_from_slice(&cache.h_last);
            tr.lstm = Some(cache);
        }
        if !self.idx.conv.is_empty() {
            let (mut c, mut h, mut wd) = (self.spec.img_channels, self.spec.img_h, self.spec.img_w);
            let mut a = x.image.clone();
            for &(w, b) in &self.idx.conv {
                let co = self.tensors[b].len();
                let mut y = conv3_forward(self.p(w), self.p(b), &a, c, h, wd, co);
                relu_in_place(&mut y);
                let mut pooled = avgpool2_forward(&y, co, h, wd);
                let drop = dropout_rng.as_deref_mut().filter(|_| self.config.conv_dropout > 0.0).map(|rng| {
                    let s = dropout_scales(rng, pooled.len(), self.config.conv_dropout);
                    for (v, k) in pooled.iter_mut().zip(&s) {
                        *v *= k;
                    }
                    s
                });
                tr.conv_in.push(a);
                tr.conv_out.push(y);
                tr.conv_drop.push(drop);
                tr.conv_dims.push((c, h, wd));
                a = pooled;
                c = co;
                h /= 2;
                wd /= 2;
            }
            emb.extend_from_slice(&a);
        }
        tr.embedding = emb.clone();
        let mut a = emb;
        if let Some(rng) = dropout_rng.filter(|_| self.config.dropout_rate > 0.0) {
            let s = dropout_scales(rng, a.len(), self.config.dropout_rate);
            for (v, k) in a.iter_mut().zip(&s) {
                *v *= k;
            }
            tr.head_drop = Some(s);
        }
        tr.head_io.push(a.clone());
        let last = self.idx.head.len() - 1;
        for (l, &(w, b)) in self.idx.head.iter().enumerate() {
            let mut y = vec![0.0; self.tensors[b].len()];
            dense_forward(self.p(w), self.p(b), &a, &mut y);
            if l < last {
                relu_in_place(&mut y);
            }
            tr.head_io.push(y.clone());
            a = y;
        }
        tr.output = a;
        tr
    }

    /// Accumulate parameter gradients of `dout . output` into `grad`.
    pub fn backward(&self, tr: &Trace, dout: &[f64], grad: &mut [f64]) {
        let mut d = dout.to_vec();
        let last = self.idx.head.len() - 1;
        for l in (0..=last).rev() {
            let (w, b) = self.idx.head[l];
            if l < last {
                relu_backward(&tr.head_io[l + 1], &mut d);
            }
            let x = &tr.head_io[l];
            let mut dx = vec![0.0; x.len()];
            let (gw, gb) = split_two(grad, &self.tensors[w], &self.tensors[b]);
            dense_backward(self.p(w), x, &d, gw, gb, Some(&mut dx));
            d = dx;
        }
        if let Some(s) = &tr.head_drop {
            for (g, k) in d.iter_mut().zip(s) {
                *g *= k;
            }
        }
        let mut at = 0;
        if !self.idx.dense.is_empty() {
            let width = tr.dense_io.last().map_or(0, |v| v.len());
            let mut dd = d[at..at + width].to_vec();
            at += width;
            for l in (0..self.idx.dense.len()).rev() {
                let (w, b) = self.idx.dense[l];
                relu_backward(&tr.dense_io[l + 1], &mut dd);
                let x = &tr.dense_io[l];
                let (gw, gb) = split_two(grad, &self.tensors[w], &self.tensors[b]);
                if l > 0 {
                    let mut dx = vec![0.0; x.len()];
                    dense_backward(self.p(w), x, &dd, gw, gb, Some(&mut dx));
                    dd = dx;
                } else {
                    dense_backward(self.p(w), x, &dd, gw, gb, None);
                }
            }
        }
        if let (Some((w, b)), Some(cache)) = (self.idx.lstm, &tr.lstm) {
            let h = self.config.lstm_units;
            let dh = &d[at..at + h];
            at += h;
            let (gw, gb) = split_two(grad, &self.tensors[w], &self.tensors[b]);
            lstm_backward(self.p(w), cache, h, dh, gw, gb);
        }
        if !self.idx.conv.is_empty() {
            let mut dd = d[at..].to_vec();
            for l in (0..self.idx.conv.len()).rev() {
                let (w, b) = self.idx.conv[l];
                let (c, h, wd) = tr.conv_dims[l];
                let co = self.tensors[b].len();
                if let Some(s) = &tr.conv_drop[l] {
                    for (g, k) in dd.iter_mut().zip(s) {
                        *g *= k;
                    }
                }
                let mut dy = avgpool2_backward(&dd, co, h, wd);
                relu_backward(&tr.conv_out[l], &mut dy);
                let (gw, gb) = split_two(grad, &self.tensors[w], &self.tensors[b]);
                if l > 0 {
                    let mut dx = vec![0.0; c * h * wd];
                    conv3_backward(self.p(w), &tr.conv_in[l], &dy, c, h, wd, co, gw, gb, Some(&mut dx));
                    dd = dx;
                } else {
                    conv3_backward(self.p(w), &tr.conv_in[l], &dy, c, h, wd, co, gw, gb, None);
                }
            }
        }
    }

    /// Inference: `(output, embedding)`.
    pub fn predict(&self, b: &FeatureBundle) -> Result<(Vec<f64>, Vec<f64>)> {
        let tr = self.forward(&self.prepare(b)?, None);
        Ok((tr.output, tr.embedding))
    }

    /// Fraction of prunable weights still active.
    pub fn retained_weights(&self) -> (usize, usize) {
        let mut active = 0;
        let mut total = 0;
        for t in self.tensors.iter().filter(|t| t.is_weight) {
            total += t.len();
            active += self.mask[t.range()].iter().filter(|m| **m).count();
        }
        (active, total)
    }

    /// Zero every masked parameter.
    pub fn apply_mask(&mut self) {
        for (p, m) in self.params.iter_mut().zip(&self.mask) {
            if !m {
                *p = 0.0;
            }
        }
    }

    pub(crate) fn rebuild(
        config: NetworkConfig,
        source_layout: BundleLayout,
        feature_set: FeatureSet,
        normalizer: Normalizer,
        params: Vec<f64>,
        mask: Vec<bool>,
        fingerprint: Option<String>,
    ) -> Result<Self> {
        let mut m = Self::new(config, &source_layout, feature_set)?;
        if params.len() != m.params.len() || mask.len() != m.params.len() {
            return Err(Error::LengthMismatch {
                expected: m.params.len(),
                found: params.len(),
            });
        }
        m.normalizer = normalizer;
        m.params = params;
        m.mask = mask;
        m.fingerprint = fingerprint;
        Ok(m)
    }

    pub fn head(&self) -> HeadKind {
        self.config.head
    }
}

/// Disjoint mutable views of a weight and a bias tensor in the flat gradient.
fn split_two<'a>(grad: &'a mut [f64], w: &TensorInfo, b: &TensorInfo) -> (&'a mut [f64], &'a mut [f64]) {
    debug_assert_eq!(w.offset + w.len(), b.offset);
    let (left, right) = grad.split_at_mut(b.offset);
    (&mut left[w.range()], &mut right[..b.len()])
}
