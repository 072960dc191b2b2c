//! Two-tier transformer detector.
//!
//! Every SU's covariance sequence is cut into non-overlapping tubes, embedded
//! and passed through a shared SU encoder stack. The post-encoder token
//! sequences of all SUs are max-pooled elementwise across the SU axis and fed
//! to a collaborative encoder stack. Both tiers end in attention-based
//! sequence pooling and an MLP head producing `(p(H0), p(H1))`.
//!
//! Parameter names carry their tier as a prefix (`su.` or `collab.`), which is
//! how training freezes one tier.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{to_channel_planes, ChannelLayout, CssSample, Standardizer};
use crate::error::{Error, Result};
use crate::rng::{self, DOMAIN_INIT};
use crate::tensor::{Gradients, Graph, Tensor, Var};

pub const SU_TIER: &str = "su";
pub const COLLAB_TIER: &str = "collab";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub su_count: usize,
    pub sequence_len: usize,
    /// Side of the square input planes; CMs are zero-padded up to it.
    pub side: usize,
    pub layout: ChannelLayout,
    /// Maps every plane value `v` to `sign(v) ln(1 + |v|)` before
    /// standardization.
    pub log_compress: bool,
    /// Tube extent `(t, h, w)`.
    pub tube: [usize; 3],
    pub embed_dim: usize,
    pub heads: usize,
    pub su_layers: usize,
    pub collab_layers: usize,
    /// Encoder MLP widths; the last entry must equal `embed_dim`.
    pub encoder_mlp: Vec<usize>,
    pub head_units: Vec<usize>,
    pub ln_eps: f64,
    pub init_std: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ModelConfig {
    /// Input (20,16,16,3), tubes (20,1,1), d=24, 4 heads, 5 + 4 layers,
    /// encoder MLP [48,24], head MLP [128,64].
    pub fn paper() -> Self {
        Self {
            su_count: 3,
            sequence_len: 20,
            side: 16,
            layout: ChannelLayout::RealImagMagnitude,
            log_compress: true,
            tube: [20, 1, 1],
            embed_dim: 24,
            heads: 4,
            su_layers: 5,
            collab_layers: 4,
            encoder_mlp: vec![48, 24],
            head_units: vec![128, 64],
            ln_eps: 1e-5,
            init_std: 0.02,
        }
    }

    pub fn desk() -> Self {
        Self {
            sequence_len: 10,
            side: 8,
            tube: [10, 1, 1],
            ..Self::paper()
        }
    }

    /// Smallest configuration that still exercises every component.
    pub fn micro() -> Self {
        Self {
            su_count: 2,
            sequence_len: 2,
            side: 4,
            layout: ChannelLayout::RealImagMagnitude,
            log_compress: true,
            tube: [2, 1, 1],
            embed_dim: 8,
            heads: 2,
            su_layers: 1,
            collab_layers: 1,
            encoder_mlp: vec![16, 8],
            head_units: vec![12, 6],
            ln_eps: 1e-5,
            init_std: 0.02,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [t, h, w] = self.tube;
        if self.su_count == 0 || self.sequence_len == 0 || self.side == 0 || self.embed_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.heads == 0 || !self.embed_dim.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "embedding dimension {} is not divisible by {} heads",
                self.embed_dim, self.heads
            )));
        }
        if t == 0 || h == 0 || w == 0 || !self.sequence_len.is_multiple_of(t) || !self.side.is_multiple_of(h) || !self.side.is_multiple_of(w) {
            return Err(Error::Config(format!(
                "tube {:?} does not tile the ({}, {}, {}) input",
                self.tube, self.sequence_len, self.side, self.side
            )));
        }
        if self.encoder_mlp.last() != Some(&self.embed_dim) || self.encoder_mlp.contains(&0) {
            return Err(Error::Config(format!(
                "encoder MLP {:?} must end at the embedding dimension {}",
                self.encoder_mlp, self.embed_dim
            )));
        }
        if self.head_units.contains(&0) {
            return Err(Error::Config("head units must be positive".into()));
        }
        if !(self.ln_eps > 0.0) || !(self.init_std > 0.0) {
            return Err(Error::Config("ln_eps and init_std must be positive".into()));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.layout.channels()
    }

    pub fn token_count(&self) -> usize {
        let [t, h, w] = self.tube;
        (self.sequence_len / t) * (self.side / h) * (self.side / w)
    }

    pub fn tube_volume(&self) -> usize {
        self.tube.iter().product::<usize>() * self.channels()
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.heads
    }

    fn layers(&self, tier: &str) -> usize {
        if tier == SU_TIER {
            self.su_layers
        } else {
            self.collab_layers
        }
    }
}

/// Ordered, named parameter tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        let name = name.into();
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.tensors.push(tensor);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index_of(name).map(move |i| &mut self.tensors[i])
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.tensors[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn count_scalars(&self, prefix: &str) -> usize {
        self.iter()
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, t)| t.len())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

/// Which parameters receive gradients in a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trainable {
    Nothing,
    Everything,
    Tier(&'static str),
}

impl Trainable {
    fn includes(self, name: &str) -> bool {
        match self {
            Self::Nothing => false,
            Self::Everything => true,
            Self::Tier(t) => name.starts_with(t) && name.as_bytes().get(t.len()) == Some(&b'.'),
        }
    }
}

/// Gradients keyed by parameter index.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub grads: Vec<Option<Tensor>>,
}

impl ParamGrads {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self {
            grads: vec![None; params.len()],
        }
    }

    /// `self += scale * other`, in parameter order.
    pub fn accumulate(&mut self, other: &ParamGrads, scale: f64) {
        for (dst, src) in self.grads.iter_mut().zip(&other.grads) {
            let Some(src) = src else { continue };
            match dst {
                Some(d) => {
                    for (a, b) in d.data_mut().iter_mut().zip(src.data()) {
                        *a += scale * b;
                    }
                }
                None => {
                    let mut t = src.clone();
                    t.data_mut().iter_mut().for_each(|v| *v *= scale);
                    *dst = Some(t);
                }
            }
        }
    }
}

/// One forward pass over a parameter set, with optional gradient tracking.
pub struct Session<'p> {
    pub graph: Graph,
    params: &'p ParamSet,
    bound: HashMap<usize, Var>,
    trainable: Trainable,
    /// Attention probabilities `[heads, N, N]` of every layer, in order.
    pub attention_maps: Vec<Var>,
    /// Sequence-pooling weights `[1, N]`, in order.
    pub pool_weights: Vec<Var>,
}

impl<'p> Session<'p> {
    pub fn new(params: &'p ParamSet, trainable: Trainable) -> Self {
        Self {
            graph: Graph::new(),
            params,
            bound: HashMap::new(),
            trainable,
            attention_maps: Vec::new(),
            pool_weights: Vec::new(),
        }
    }

    pub fn param(&mut self, name: &str) -> Result<Var> {
        let idx = self
            .params
            .index_of(name)
            .ok_or_else(|| Error::Contract(format!("unknown parameter {name}")))?;
        if let Some(v) = self.bound.get(&idx) {
            return Ok(*v);
        }
        let v = self
            .graph
            .leaf(self.params.tensor(idx).clone(), self.trainable.includes(name));
        self.bound.insert(idx, v);
        Ok(v)
    }

    /// Runs the reverse pass and maps leaf gradients back to parameter slots.
    pub fn gradients(mut self, loss: Var) -> Result<ParamGrads> {
        let grads: Gradients = self.graph.backward(loss)?;
        let mut out = ParamGrads::zeros_like(self.params);
        for (idx, var) in &self.bound {
            if let Some(g) = grads.get(*var) {
                out.grads[*idx] = Some(g.clone());
            }
        }
        Ok(out)
    }
}

fn truncated_normal<R: Rng + ?Sized>(shape: &[usize], std: f64, rng: &mut R) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() <= 2.0 {
                break z * std;
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches")
}

/// Builds the initial parameter set: truncated-normal weights, zero biases,
/// unit layer-norm gains.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<ParamSet> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, DOMAIN_INIT, 0);
    let d = cfg.embed_dim;
    let nt = cfg.token_count();
    let mut p = ParamSet::default();
    let mut weight = |p: &mut ParamSet, name: String, shape: &[usize]| {
        p.push(name, truncated_normal(shape, cfg.init_std, &mut rng));
    };
    for tier in [SU_TIER, COLLAB_TIER] {
        if tier == SU_TIER {
            weight(&mut p, format!("{tier}.embed.w"), &[cfg.tube_volume(), d]);
            p.push(format!("{tier}.embed.b"), Tensor::zeros(&[d]));
        } else {
            weight(&mut p, format!("{tier}.proj.w"), &[d, d]);
            p.push(format!("{tier}.proj.b"), Tensor::zeros(&[d]));
        }
        weight(&mut p, format!("{tier}.pos"), &[nt, d]);
        for l in 0..cfg.layers(tier) {
            let pre = format!("{tier}.layer{l}");
            p.push(format!("{pre}.ln1.g"), Tensor::filled(&[d], 1.0));
            p.push(format!("{pre}.ln1.b"), Tensor::zeros(&[d]));
            for m in ["wq", "wk", "wv", "wo"] {
                weight(&mut p, format!("{pre}.attn.{m}"), &[d, d]);
            }
            p.push(format!("{pre}.attn.bo"), Tensor::zeros(&[d]));
            p.push(format!("{pre}.ln2.g"), Tensor::filled(&[d], 1.0));
            p.push(format!("{pre}.ln2.b"), Tensor::zeros(&[d]));
            let mut fan_in = d;
            for (i, &units) in cfg.encoder_mlp.iter().enumerate() {
                weight(&mut p, format!("{pre}.mlp.w{i}"), &[fan_in, units]);
                p.push(format!("{pre}.mlp.b{i}"), Tensor::zeros(&[units]));
                fan_in = units;
            }
        }
        // softmax is shift invariant, so the pooling scorer carries no bias
        weight(&mut p, format!("{tier}.pool.w"), &[d, 1]);
        let mut fan_in = d;
        for (i, &units) in cfg.head_units.iter().chain(std::iter::once(&2)).enumerate() {
            weight(&mut p, format!("{tier}.head.w{i}"), &[fan_in, units]);
            p.push(format!("{tier}.head.b{i}"), Tensor::zeros(&[units]));
            fan_in = units;
        }
    }
    Ok(p)
}

/// Extracts `[N_t, t*h*w*C]` tube vectors from `[lambda, H, H, C]` planes.
/// Tokens are ordered (time, row, column); features (dt, di, dj, channel).
pub fn extract_tubes(cfg: &ModelConfig, planes: &Tensor) -> Result<Tensor> {
    let (lambda, side, c) = (cfg.sequence_len, cfg.side, cfg.channels());
    if planes.shape() != [lambda, side, side, c] {
        return Err(Error::Config(format!(
            "planes of shape {:?} do not match the model input [{lambda}, {side}, {side}, {c}]",
            planes.shape()
        )));
    }
    let [t, h, w] = cfg.tube;
    let vol = cfg.tube_volume();
    let src = planes.data();
    let mut out = Vec::with_capacity(cfg.token_count() * vol);
    for a in 0..lambda / t {
        for i in 0..side / h {
            for j in 0..side / w {
                for dt in 0..t {
                    for di in 0..h {
                        for dj in 0..w {
                            let base = (((a * t + dt) * side + i * h + di) * side + j * w + dj) * c;
                            out.extend_from_slice(&src[base..base + c]);
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::new(vec![cfg.token_count(), vol], out)?)
}

/// Tube embedding plus positional embedding: `[N_t, d]`.
pub fn tokenize(cfg: &ModelConfig, s: &mut Session, planes: &Tensor) -> Result<Var> {
    let tubes = s.graph.constant(extract_tubes(cfg, planes)?);
    let w = s.param("su.embed.w")?;
    let b = s.param("su.embed.b")?;
    let pos = s.param("su.pos")?;
    let e = s.graph.affine(tubes, w, b)?;
    Ok(s.graph.add(e, pos)?)
}

/// Splits `[N, d]` into `[heads, N, d/heads]`.
fn split_heads(g: &mut Graph, x: Var, heads: usize, dk: usize, n: usize) -> Result<Var> {
    let xt = g.transpose(x)?;
    let r = g.reshape(xt, &[heads, dk, n])?;
    Ok(g.transpose(r)?)
}

/// Multi-head self-attention: per head
/// `softmax(Q_i K_i^T / sqrt(d_k)) V_i`, heads concatenated and projected by
/// `W^O`.
pub fn self_attention(cfg: &ModelConfig, s: &mut Session, z: Var, prefix: &str) -> Result<Var> {
    let (n, d) = (s.graph.shape(z)[0], cfg.embed_dim);
    let (heads, dk) = (cfg.heads, cfg.head_dim());
    let wq = s.param(&format!("{prefix}.attn.wq"))?;
    let wk = s.param(&format!("{prefix}.attn.wk"))?;
    let wv = s.param(&format!("{prefix}.attn.wv"))?;
    let wo = s.param(&format!("{prefix}.attn.wo"))?;
    let bo = s.param(&format!("{prefix}.attn.bo"))?;
    let g = &mut s.graph;
    let q = g.matmul(z, wq)?;
    let k = g.matmul(z, wk)?;
    let v = g.matmul(z, wv)?;
    let qh = split_heads(g, q, heads, dk, n)?;
    let vh = split_heads(g, v, heads, dk, n)?;
    let kt = g.transpose(k)?;
    let kt = g.reshape(kt, &[heads, dk, n])?;
    let scores = g.matmul(qh, kt)?;
    let scores = g.scale(scores, 1.0 / (dk as f64).sqrt());
    let attn = g.softmax_lastdim(scores)?;
    let ctx = g.matmul(attn, vh)?;
    let ctx = g.transpose(ctx)?;
    let ctx = g.reshape(ctx, &[d, n])?;
    let merged = g.transpose(ctx)?;
    let out = g.affine(merged, wo, bo)?;
    s.attention_maps.push(attn);
    Ok(out)
}

/// Pre-norm encoder layer: `c = MSA(LN(z)) + z`, `z' = MLP(LN(c)) + c`.
pub fn encoder_layer(cfg: &ModelConfig, s: &mut Session, z: Var, prefix: &str) -> Result<Var> {
    let g1 = s.param(&format!("{prefix}.ln1.g"))?;
    let b1 = s.param(&format!("{prefix}.ln1.b"))?;
    let n1 = s.graph.layernorm(z, g1, b1, cfg.ln_eps)?;
    let a = self_attention(cfg, s, n1, prefix)?;
    let c = s.graph.add(a, z)?;
    let g2 = s.param(&format!("{prefix}.ln2.g"))?;
    let b2 = s.param(&format!("{prefix}.ln2.b"))?;
    let mut h = s.graph.layernorm(c, g2, b2, cfg.ln_eps)?;
    let last = cfg.encoder_mlp.len() - 1;
    for i in 0..=last {
        let w = s.param(&format!("{prefix}.mlp.w{i}"))?;
        let b = s.param(&format!("{prefix}.mlp.b{i}"))?;
        h = s.graph.affine(h, w, b)?;
        if i < last {
            h = s.graph.gelu(h);
        }
    }
    Ok(s.graph.add(h, c)?)
}

/// Attention-weighted average of the tokens: `softmax(g(z)^T) z`, `[1, d]`.
pub fn sequence_pool(s: &mut Session, z: Var, tier: &str) -> Result<Var> {
    let w = s.param(&format!("{tier}.pool.w"))?;
    let scores = s.graph.matmul(z, w)?;
    let scores = s.graph.transpose(scores)?;
    let weights = s.graph.softmax_lastdim(scores)?;
    s.pool_weights.push(weights);
    Ok(s.graph.matmul(weights, z)?)
}

/// Head MLP with GELU between layers, ending in a 2-way softmax.
fn classify(cfg: &ModelConfig, s: &mut Session, pooled: Var, tier: &str) -> Result<Var> {
    let mut h = pooled;
    let last = cfg.head_units.len();
    for i in 0..=last {
        let w = s.param(&format!("{tier}.head.w{i}"))?;
        let b = s.param(&format!("{tier}.head.b{i}"))?;
        h = s.graph.affine(h, w, b)?;
        if i < last {
            h = s.graph.gelu(h);
        }
    }
    let probs = s.graph.softmax_lastdim(h)?;
    Ok(s.graph.reshape(probs, &[2])?)
}

fn encoder_stack(cfg: &ModelConfig, s: &mut Session, mut z: Var, tier: &str) -> Result<Var> {
    for l in 0..cfg.layers(tier) {
        z = encoder_layer(cfg, s, z, &format!("{tier}.layer{l}"))?;
    }
    Ok(z)
}

pub struct SuOutput {
    /// `(p(H0), p(H1))` from the SU-level head.
    pub probs: Var,
    /// Post-encoder token sequence `[N_t, d]`.
    pub tokens: Var,
}

pub fn su_forward(cfg: &ModelConfig, s: &mut Session, planes: &Tensor) -> Result<SuOutput> {
    let z = tokenize(cfg, s, planes)?;
    let tokens = encoder_stack(cfg, s, z, SU_TIER)?;
    let pooled = sequence_pool(s, tokens, SU_TIER)?;
    let probs = classify(cfg, s, pooled, SU_TIER)?;
    Ok(SuOutput { probs, tokens })
}

/// Elementwise maximum across SUs of equally shaped token sequences.
pub fn fuse(s: &mut Session, tokens: &[Var]) -> Result<Var> {
    let first = tokens
        .first()
        .ok_or_else(|| Error::Contract("fuse needs at least one SU".into()))?;
    let shape = s.graph.shape(*first).to_vec();
    let mut stacked = Vec::with_capacity(tokens.len());
    for t in tokens {
        if s.graph.shape(*t) != shape.as_slice() {
            return Err(Error::Contract(format!(
                "fuse: token shapes {:?} and {shape:?} differ",
                s.graph.shape(*t)
            )));
        }
        let mut lead = vec![1];
        lead.extend(&shape);
        stacked.push(s.graph.reshape(*t, &lead)?);
    }
    let all = s.graph.concat(&stacked, 0)?;
    Ok(s.graph.max_leading(all)?)
}

/// Input projection, positional embedding, collaborative encoders, pooling
/// and head.
pub fn collaborative_forward(cfg: &ModelConfig, s: &mut Session, fused: Var) -> Result<Var> {
    let w = s.param("collab.proj.w")?;
    let b = s.param("collab.proj.b")?;
    let pos = s.param("collab.pos")?;
    let z = s.graph.affine(fused, w, b)?;
    let z = s.graph.add(z, pos)?;
    let z = encoder_stack(cfg, s, z, COLLAB_TIER)?;
    let pooled = sequence_pool(s, z, COLLAB_TIER)?;
    classify(cfg, s, pooled, COLLAB_TIER)
}

pub struct ForwardOutput {
    pub group_probs: Var,
    pub su_probs: Vec<Var>,
    pub su_tokens: Vec<Var>,
}

/// Full two-tier pass over one sample's standardized planes (one per SU).
pub fn forward(cfg: &ModelConfig, s: &mut Session, planes: &[Tensor]) -> Result<ForwardOutput> {
    if planes.len() != cfg.su_count {
        return Err(Error::Config(format!(
            "model expects {} SUs, got {}",
            cfg.su_count,
            planes.len()
        )));
    }
    let mut su_probs = Vec::with_capacity(planes.len());
    let mut su_tokens = Vec::with_capacity(planes.len());
    for p in planes {
        let out = su_forward(cfg, s, p)?;
        su_probs.push(out.probs);
        su_tokens.push(out.tokens);
    }
    let fused = fuse(s, &su_tokens)?;
    let group_probs = collaborative_forward(cfg, s, fused)?;
    Ok(ForwardOutput {
        group_probs,
        su_probs,
        su_tokens,
    })
}

/// Model configuration, parameters and the input standardization fitted on
/// the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct TieredDetector {
    pub config: ModelConfig,
    pub params: ParamSet,
    pub standardizer: Standardizer,
    pub seed: u64,
}

impl TieredDetector {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = init_params(&config, seed)?;
        let standardizer = Standardizer::identity(config.channels());
        Ok(Self {
            config,
            params,
            standardizer,
            seed,
        })
    }

    /// Standardized planes of every SU; `noise_power` normalizes the CMs.
    pub fn prepare(&self, sample: &CssSample, noise_power: f64) -> Result<Vec<Tensor>> {
        sample
            .per_su
            .iter()
            .map(|seq| {
                let mut p = to_channel_planes(seq, self.config.side, self.config.layout, noise_power)?;
                if self.config.log_compress {
                    p.data_mut().iter_mut().for_each(|v| *v = v.signum() * v.abs().ln_1p());
                }
                self.standardizer.apply(&mut p);
                Ok(p)
            })
            .collect()
    }

    pub fn predict(&self, planes: &[Tensor]) -> Result<[f64; 2]> {
        let mut s = Session::new(&self.params, Trainable::Nothing);
        let out = forward(&self.config, &mut s, planes)?;
        let p = s.graph.value(out.group_probs).data();
        Ok([p[0], p[1]])
    }

    /// SU-tier post-encoder tokens for one SU.
    pub fn su_tokens(&self, planes: &Tensor) -> Result<Tensor> {
        let mut s = Session::new(&self.params, Trainable::Nothing);
        let out = su_forward(&self.config, &mut s, planes)?;
        Ok(s.graph.value(out.tokens).clone())
    }

    pub fn su_predict(&self, planes: &Tensor) -> Result<[f64; 2]> {
        let mut s = Session::new(&self.params, Trainable::Nothing);
        let out = su_forward(&self.config, &mut s, planes)?;
        let p = s.graph.value(out.probs).data();
        Ok([p[0], p[1]])
    }

    /// Collaborative-tier prediction from precomputed SU tokens.
    pub fn predict_from_tokens(&self, tokens: &[Tensor]) -> Result<[f64; 2]> {
        let mut s = Session::new(&self.params, Trainable::Nothing);
        let vars: Vec<Var> = tokens.iter().map(|t| s.graph.constant(t.clone())).collect();
        let fused = fuse(&mut s, &vars)?;
        let probs = collaborative_forward(&self.config, &mut s, fused)?;
        let p = s.graph.value(probs).data();
        Ok([p[0], p[1]])
    }

    /// Parameter counts grouped by tier and component.
    pub fn parameter_breakdown(&self) -> Vec<(String, String, usize)> {
        let mut rows: Vec<(String, String, usize)> = Vec::new();
        for (name, t) in self.params.iter() {
            let mut parts = name.split('.');
            let tier = parts.next().unwrap_or_default().to_string();
            let comp = parts.next().unwrap_or_default();
            let comp = if comp.starts_with("layer") { "encoder" } else { comp }.to_string();
            match rows.iter_mut().find(|(a, b, _)| *a == tier && *b == comp) {
                Some(r) => r.2 += t.len(),
                None => rows.push((tier, comp, t.len())),
            }
        }
        rows
    }
}

const CKPT_MAGIC: &[u8; 8] = b"CSSCKPT1";
const CKPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointHeader {
    format_version: u32,
    model: ModelConfig,
    standardizer: Standardizer,
    seed: u64,
    meta: serde_json::Value,
}

/// Serialized detector plus arbitrary metadata and extra named tensors.
///
/// ```text
/// magic "CSSCKPT1" | u32 hlen | JSON header | u32 ntensors |
/// ntensors x { u16 name_len, name, u8 rank, rank x u64 dims, f64 data }
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub detector: TieredDetector,
    pub meta: serde_json::Value,
    pub extra: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = CheckpointHeader {
            format_version: CKPT_VERSION,
            model: self.detector.config.clone(),
            standardizer: self.detector.standardizer.clone(),
            seed: self.detector.seed,
            meta: self.meta.clone(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(CKPT_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        let tensors: Vec<(&str, &Tensor)> = self
            .detector
            .params
            .iter()
            .chain(self.extra.iter().map(|(n, t)| (n.as_str(), t)))
            .collect();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.shape().len() as u8);
            for d in t.shape() {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a checkpoint; with `expected`, rejects a different model config.
    pub fn from_bytes(bytes: &[u8], expected: Option<&ModelConfig>) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let end = pos.checked_add(n).filter(|&e| e <= bytes.len());
            let end = end.ok_or_else(|| Error::Parse(format!("checkpoint truncated at byte {pos}")))?;
            let s = &bytes[pos..end];
            pos = end;
            Ok(s)
        };
        if take(8)? != CKPT_MAGIC {
            return Err(Error::Parse("not a checkpoint (bad magic)".into()));
        }
        let hlen = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let header: CheckpointHeader =
            serde_json::from_slice(take(hlen)?).map_err(|e| Error::Parse(format!("checkpoint header: {e}")))?;
        if header.format_version != CKPT_VERSION {
            return Err(Error::Version(format!("unsupported checkpoint format {}", header.format_version)));
        }
        if let Some(cfg) = expected {
            if *cfg != header.model {
                return Err(Error::Version("checkpoint model config differs from the requested one".into()));
            }
        }
        let reference = init_params(&header.model, 0)?;
        let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut params = ParamSet::default();
        let mut extra = Vec::new();
        for _ in 0..count {
            let nlen = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
            let name = String::from_utf8(take(nlen)?.to_vec())
                .map_err(|_| Error::Parse("tensor name is not UTF-8".into()))?;
            let rank = take(1)?[0] as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
            }
            let numel = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let numel = numel.ok_or_else(|| Error::Parse(format!("tensor {name} is too large")))?;
            let raw = take(numel.checked_mul(8).ok_or_else(|| Error::Parse("tensor too large".into()))?)?;
            let data = raw.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            let t = Tensor::new(shape, data).map_err(|e| Error::Parse(format!("tensor {name}: {e}")))?;
            if reference.index_of(&name).is_some() {
                params.push(name, t);
            } else {
                extra.push((name, t));
            }
        }
        if pos != bytes.len() {
            return Err(Error::Parse("trailing bytes after the last tensor".into()));
        }
        if params.len() != reference.len()
            || reference.iter().any(|(n, t)| params.get(n).map(Tensor::shape) != Some(t.shape()))
        {
            return Err(Error::Version("checkpoint parameters do not match its model config".into()));
        }
        Ok(Self {
            detector: TieredDetector {
                config: header.model,
                params,
                standardizer: header.standardizer,
                seed: header.seed,
            },
            meta: header.meta,
            extra,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path, expected: Option<&ModelConfig>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, expected)
    }
}
