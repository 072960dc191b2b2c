//! Two-stage supervised training with Adam.
//!
//! Stage 1 trains the SU tier and its head on individual SU sequences
//! labelled with the shared PU state. Stage 2 freezes the SU tier, caches the
//! post-encoder tokens of every SU and trains the collaborative tier on group
//! labels.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::model::{
    collaborative_forward, forward, fuse, su_forward, Checkpoint, ModelConfig, ParamGrads, ParamSet, Session,
    TieredDetector, Trainable, COLLAB_TIER, SU_TIER,
};
use crate::rng::{self, DOMAIN_SHUFFLE};
use crate::scenario::ScenarioConfig;
use crate::tensor::{Graph, Tensor, Var};

/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    /// Stage-1 epochs.
    pub epochs: usize,
    pub stage2_epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Trailing fraction of the dataset held out for validation.
    pub val_fraction: f64,
    /// Stage 2 also updates the SU tier.
    pub joint_finetune: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl TrainConfig {
    pub fn paper() -> Self {
        Self {
            lr: 1e-5,
            batch: 16,
            epochs: 100,
            stage2_epochs: 100,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 2024,
            val_fraction: 0.1,
            joint_finetune: false,
        }
    }

    pub fn desk() -> Self {
        Self {
            lr: 1e-3,
            epochs: 5,
            stage2_epochs: 6,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::Config("Adam moments must lie in [0, 1) and eps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
        }
    }
}

/// Graph node for `-log max(p_label, floor)` of a 2-vector of probabilities.
pub fn cross_entropy(g: &mut Graph, probs: Var, label: u8) -> Result<Var> {
    let mut onehot = Tensor::zeros(&[2]);
    onehot.data_mut()[usize::from(label.min(1))] = 1.0;
    let onehot = g.constant(onehot);
    let picked = g.mul(probs, onehot)?;
    let p = g.sum(picked);
    let logp = g.log_clamped(p, PROB_FLOOR)?;
    Ok(g.scale(logp, -1.0))
}

/// Mean cross-entropy of a batch of `(p(H0), p(H1))` predictions.
pub fn cross_entropy_value(probs: &[[f64; 2]], labels: &[u8]) -> f64 {
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &b)| -p[usize::from(b.min(1))].clamp(PROB_FLOOR, 1.0).ln())
        .sum();
    total / probs.len().max(1) as f64
}

/// Bias-corrected Adam moments, aligned with a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        let zeros: Vec<Tensor> = (0..params.len()).map(|i| Tensor::zeros(params.tensor(i).shape())).collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One Adam update over every parameter that has a gradient.
pub fn adam_step(params: &mut ParamSet, grads: &ParamGrads, state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    for (i, g) in grads.grads.iter().enumerate() {
        if let Some(g) = g {
            if !g.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient for {} at step {}",
                    params.name(i),
                    state.step + 1
                )));
            }
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, g) in grads.grads.iter().enumerate() {
        let Some(g) = g else { continue };
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let p = params.tensor_mut(i).data_mut();
        for k in 0..p.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g.data()[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g.data()[k] * g.data()[k];
            p[k] -= cfg.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub stage: Stage,
    pub epochs: Vec<EpochRecord>,
    pub wall_time_s: f64,
    pub checkpoint_hash: String,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_accuracy,val_accuracy\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{:.10},{:.6},{:.6}\n", e.epoch, e.loss, e.train_accuracy, e.val_accuracy));
        }
        out
    }
}

/// Training metadata stored in the checkpoint header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub stage: Stage,
    pub epochs_done: usize,
    pub stage1_complete: bool,
    pub dataset_hash: String,
    pub scenario_hash: String,
    pub train: TrainConfig,
    pub history: Vec<EpochRecord>,
    pub adam_step: u64,
}

/// Rejects a model that cannot consume samples of this scenario.
pub fn check_compatible(model: &ModelConfig, scenario: &ScenarioConfig) -> Result<()> {
    if model.su_count != scenario.su_count || model.sequence_len != scenario.sequence_len {
        return Err(Error::Version(format!(
            "model expects S={} lambda={}, data has S={} lambda={}",
            model.su_count, model.sequence_len, scenario.su_count, scenario.sequence_len
        )));
    }
    if scenario.antennas > model.side {
        return Err(Error::Version(format!(
            "{} antennas do not fit {}x{} planes",
            scenario.antennas, model.side, model.side
        )));
    }
    Ok(())
}

/// `(train, val)` index split: the trailing `val_fraction` is validation.
pub fn split_indices(n: usize, val_fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let val = ((n as f64) * val_fraction).round() as usize;
    let val = val.min(n.saturating_sub(1));
    ((0..n - val).collect(), (n - val..n).collect())
}

/// Standardized planes of every sample plus labels.
pub struct PreparedData {
    pub planes: Vec<Vec<Tensor>>,
    pub labels: Vec<u8>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

impl PreparedData {
    /// Fits the detector's standardizer on the training split when `fit` is
    /// set, then standardizes every sample.
    pub fn build(det: &mut TieredDetector, ds: &Dataset, val_fraction: f64, fit: bool) -> Result<Self> {
        check_compatible(&det.config, &ds.scenario)?;
        let noise = ds.scenario.noise_power_mw();
        let (train, val) = split_indices(ds.samples.len(), val_fraction);
        if train.is_empty() {
            return Err(Error::Config("dataset has no training samples".into()));
        }
        let raw = Self::raw_planes(det, ds, noise)?;
        if fit {
            let channels = det.config.channels();
            det.standardizer = Standardizer::fit(train.iter().flat_map(|&i| raw[i].iter()), channels);
        }
        let planes = raw
            .into_par_iter()
            .map(|mut su| {
                su.iter_mut().for_each(|p| det.standardizer.apply(p));
                su
            })
            .collect();
        Ok(Self {
            planes,
            labels: ds.samples.iter().map(|s| s.label).collect(),
            train,
            val,
        })
    }

    fn raw_planes(det: &TieredDetector, ds: &Dataset, noise: f64) -> Result<Vec<Vec<Tensor>>> {
        let unit = TieredDetector {
            standardizer: Standardizer::identity(det.config.channels()),
            ..det.clone()
        };
        ds.samples.par_iter().map(|s| unit.prepare(s, noise)).collect()
    }
}

struct ItemResult {
    loss: f64,
    correct: bool,
    grads: ParamGrads,
}

fn predicted(probs: &[f64]) -> u8 {
    u8::from(probs[1] > probs[0])
}

/// Runs a stage over prepared data, epoch by epoch, with resumable state.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub stage: Stage,
    pub detector: TieredDetector,
    pub adam: AdamState,
    pub epochs_done: usize,
    pub history: Vec<EpochRecord>,
    pub dataset_hash: String,
    pub scenario_hash: String,
    stage1_complete: bool,
    /// Cached frozen SU tokens per sample (stage 2 without fine-tuning).
    tokens: Vec<Vec<Tensor>>,
}

impl Trainer {
    /// Starts stage 1 on a fresh detector or stage 2 on a stage-1 detector.
    pub fn new(
        cfg: TrainConfig,
        stage: Stage,
        detector: TieredDetector,
        dataset_hash: String,
        scenario_hash: String,
    ) -> Result<Self> {
        cfg.validate()?;
        let adam = AdamState::new(&detector.params);
        Ok(Self {
            cfg,
            stage,
            detector,
            adam,
            epochs_done: 0,
            history: Vec::new(),
            dataset_hash,
            scenario_hash,
            stage1_complete: stage == Stage::Two,
            tokens: Vec::new(),
        })
    }

    /// Restores a trainer from a checkpoint written mid-stage or at the end
    /// of a stage.
    pub fn resume(ck: Checkpoint) -> Result<Self> {
        let meta: TrainingMeta = serde_json::from_value(ck.meta.clone())
            .map_err(|e| Error::Parse(format!("checkpoint training metadata: {e}")))?;
        let mut adam = AdamState::new(&ck.detector.params);
        adam.step = meta.adam_step;
        for (name, t) in &ck.extra {
            let (slot, pname) = if let Some(p) = name.strip_prefix("adam.m.") {
                (&mut adam.m, p)
            } else if let Some(p) = name.strip_prefix("adam.v.") {
                (&mut adam.v, p)
            } else {
                continue;
            };
            let i = ck
                .detector
                .params
                .index_of(pname)
                .ok_or_else(|| Error::Parse(format!("optimizer state for unknown parameter {pname}")))?;
            slot[i] = t.clone();
        }
        Ok(Self {
            cfg: meta.train,
            stage: meta.stage,
            detector: ck.detector,
            adam,
            epochs_done: meta.epochs_done,
            history: meta.history,
            dataset_hash: meta.dataset_hash,
            scenario_hash: meta.scenario_hash,
            stage1_complete: meta.stage1_complete,
            tokens: Vec::new(),
        })
    }

    fn trainable(&self) -> Trainable {
        match (self.stage, self.cfg.joint_finetune) {
            (Stage::One, _) => Trainable::Tier(SU_TIER),
            (Stage::Two, false) => Trainable::Tier(COLLAB_TIER),
            (Stage::Two, true) => Trainable::Everything,
        }
    }

    fn uses_cached_tokens(&self) -> bool {
        self.stage == Stage::Two && !self.cfg.joint_finetune
    }

    fn ensure_tokens(&mut self, data: &PreparedData) -> Result<()> {
        if !self.uses_cached_tokens() || self.tokens.len() == data.planes.len() {
            return Ok(());
        }
        let det = &self.detector;
        self.tokens = data
            .planes
            .par_iter()
            .map(|su| su.iter().map(|p| det.su_tokens(p)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Items of one epoch: stage 1 iterates `(sample, su)` pairs, stage 2
    /// whole samples.
    fn items(&self, data: &PreparedData) -> Vec<(usize, usize)> {
        let s = self.detector.config.su_count;
        match self.stage {
            Stage::One => data.train.iter().flat_map(|&i| (0..s).map(move |k| (i, k))).collect(),
            Stage::Two => data.train.iter().map(|&i| (i, 0)).collect(),
        }
    }

    fn item_step(&self, data: &PreparedData, (i, k): (usize, usize)) -> Result<ItemResult> {
        let cfg = &self.detector.config;
        let label = data.labels[i];
        let mut s = Session::new(&self.detector.params, self.trainable());
        let probs = match self.stage {
            Stage::One => su_forward(cfg, &mut s, &data.planes[i][k])?.probs,
            Stage::Two if self.uses_cached_tokens() => {
                let vars: Vec<Var> = self.tokens[i].iter().map(|t| s.graph.constant(t.clone())).collect();
                let fused = fuse(&mut s, &vars)?;
                collaborative_forward(cfg, &mut s, fused)?
            }
            Stage::Two => forward(cfg, &mut s, &data.planes[i])?.group_probs,
        };
        let p = s.graph.value(probs).data().to_vec();
        let loss = cross_entropy(&mut s.graph, probs, label)?;
        let loss_value = s.graph.value(loss).item();
        let grads = s.gradients(loss)?;
        Ok(ItemResult {
            loss: loss_value,
            correct: predicted(&p) == label,
            grads,
        })
    }

    fn check_frozen(&self, grads: &ParamGrads) -> Result<()> {
        if let Trainable::Tier(t) = self.trainable() {
            for (i, g) in grads.grads.iter().enumerate() {
                let name = self.detector.params.name(i);
                if g.is_some() && !name.starts_with(&format!("{t}.")) {
                    return Err(Error::Contract(format!("gradient reached frozen parameter {name}")));
                }
            }
        }
        Ok(())
    }

    fn val_accuracy(&self, data: &PreparedData) -> Result<f64> {
        if data.val.is_empty() {
            return Ok(f64::NAN);
        }
        let det = &self.detector;
        let stage = self.stage;
        let hits: Vec<usize> = data
            .val
            .par_iter()
            .map(|&i| -> Result<usize> {
                let label = data.labels[i];
                Ok(match stage {
                    Stage::One => data.planes[i]
                        .iter()
                        .map(|p| det.su_predict(p).map(|q| usize::from(predicted(&q) == label)))
                        .sum::<Result<usize>>()?,
                    Stage::Two => usize::from(predicted(&det.predict(&data.planes[i])?) == label),
                })
            })
            .collect::<Result<_>>()?;
        let per = if stage == Stage::One { det.config.su_count } else { 1 };
        Ok(hits.iter().sum::<usize>() as f64 / (data.val.len() * per) as f64)
    }

    /// One pass over the shuffled training items.
    pub fn run_epoch(&mut self, data: &PreparedData) -> Result<EpochRecord> {
        self.ensure_tokens(data)?;
        let mut items = self.items(data);
        let mut rng = rng::stream(self.cfg.seed, DOMAIN_SHUFFLE, self.epochs_done as u64 * 2 + u64::from(self.stage.number()));
        items.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in items.chunks(self.cfg.batch) {
            let results: Vec<ItemResult> = batch
                .par_iter()
                .map(|&it| self.item_step(data, it))
                .collect::<Result<_>>()?;
            let mut grads = ParamGrads::zeros_like(&self.detector.params);
            let scale = 1.0 / batch.len() as f64;
            for r in &results {
                grads.accumulate(&r.grads, scale);
                loss_sum += r.loss;
                correct += usize::from(r.correct);
            }
            if !loss_sum.is_finite() {
                return Err(Error::Numeric(format!("loss diverged in epoch {}", self.epochs_done + 1)));
            }
            self.check_frozen(&grads)?;
            adam_step(&mut self.detector.params, &grads, &mut self.adam, &self.cfg)?;
        }
        self.epochs_done += 1;
        if self.cfg.joint_finetune {
            self.tokens.clear();
        }
        let record = EpochRecord {
            epoch: self.epochs_done,
            loss: loss_sum / items.len() as f64,
            train_accuracy: correct as f64 / items.len() as f64,
            val_accuracy: self.val_accuracy(data)?,
        };
        self.history.push(record.clone());
        Ok(record)
    }

    /// Trains until the stage's epoch count is reached and reports this call.
    pub fn run(&mut self, data: &PreparedData, mut on_epoch: impl FnMut(&EpochRecord)) -> Result<TrainReport> {
        let start = Instant::now();
        let first = self.epochs_done;
        while self.epochs_done < self.target_epochs() {
            let r = self.run_epoch(data)?;
            on_epoch(&r);
        }
        if self.stage == Stage::One {
            self.stage1_complete = true;
        }
        let checkpoint_hash = hex::encode(Sha256::digest(self.checkpoint().to_bytes()));
        Ok(TrainReport {
            stage: self.stage,
            epochs: self.history[first..].to_vec(),
            wall_time_s: start.elapsed().as_secs_f64(),
            checkpoint_hash,
        })
    }

    pub fn target_epochs(&self) -> usize {
        match self.stage {
            Stage::One => self.cfg.epochs,
            Stage::Two => self.cfg.stage2_epochs,
        }
    }

    pub fn stage1_complete(&self) -> bool {
        self.stage1_complete
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let meta = TrainingMeta {
            stage: self.stage,
            epochs_done: self.epochs_done,
            stage1_complete: self.stage1_complete,
            dataset_hash: self.dataset_hash.clone(),
            scenario_hash: self.scenario_hash.clone(),
            train: self.cfg.clone(),
            history: self.history.clone(),
            adam_step: self.adam.step,
        };
        let mut extra = Vec::new();
        for i in 0..self.detector.params.len() {
            let name = self.detector.params.name(i);
            extra.push((format!("adam.m.{name}"), self.adam.m[i].clone()));
            extra.push((format!("adam.v.{name}"), self.adam.v[i].clone()));
        }
        Checkpoint {
            detector: self.detector.clone(),
            meta: serde_json::to_value(meta).expect("metadata serializes"),
            extra,
        }
    }
}

/// Parses the training metadata of a checkpoint.
pub fn training_meta(ck: &Checkpoint) -> Result<TrainingMeta> {
    serde_json::from_value(ck.meta.clone()).map_err(|e| Error::Parse(format!("checkpoint training metadata: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_values() {
        assert!(cross_entropy_value(&[[0.0, 1.0]], &[1]).abs() < 1e-15);
        let ln2 = 2f64.ln();
        assert!((cross_entropy_value(&[[0.5, 0.5]], &[0]) - ln2).abs() < 1e-15);
        assert!((cross_entropy_value(&[[0.5, 0.5]], &[1]) - ln2).abs() < 1e-15);
        // clamped: a confidently wrong prediction is finite
        let worst = cross_entropy_value(&[[1.0, 0.0]], &[1]);
        assert!((worst + PROB_FLOOR.ln()).abs() < 1e-9);

        let mut g = Graph::new();
        let p = g.constant(Tensor::vector(vec![0.25, 0.75]));
        let l = cross_entropy(&mut g, p, 1).unwrap();
        assert!((g.value(l).item() + 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn minimizing_cross_entropy_maximizes_likelihood() {
        // p(H1 | x) = sigmoid(theta * x) on a fixed 3-sample batch
        let xs = [0.8, -1.3, 0.4];
        let labels = [1u8, 0, 0];
        let probs = |theta: f64| -> Vec<[f64; 2]> {
            xs.iter()
                .map(|x| {
                    let p1 = 1.0 / (1.0 + (-theta * x).exp());
                    [1.0 - p1, p1]
                })
                .collect()
        };
        let grid: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.01).collect();
        let argmin = grid
            .iter()
            .copied()
            .min_by(|a, b| cross_entropy_value(&probs(*a), &labels).total_cmp(&cross_entropy_value(&probs(*b), &labels)))
            .unwrap();
        let likelihood = |t: f64| -> f64 {
            probs(t).iter().zip(&labels).map(|(p, &b)| p[b as usize]).product()
        };
        let argmax = grid.iter().copied().max_by(|a, b| likelihood(*a).total_cmp(&likelihood(*b))).unwrap();
        assert_eq!(argmin, argmax);
    }

    fn scalar_params(w: f64) -> ParamSet {
        let mut p = ParamSet::default();
        p.push("w", Tensor::scalar(w));
        p
    }

    fn bowl_grad(params: &ParamSet) -> ParamGrads {
        let w = params.tensor(0).item();
        ParamGrads {
            grads: vec![Some(Tensor::scalar(2.0 * w))],
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar_params(0.7);
        let mut st = AdamState::new(&p);
        let g = ParamGrads {
            grads: vec![Some(Tensor::scalar(0.0))],
        };
        adam_step(&mut p, &g, &mut st, &TrainConfig::paper()).unwrap();
        assert_eq!(p.tensor(0).item(), 0.7);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn quadratic_bowl_converges() {
        let cfg = TrainConfig {
            lr: 1e-2,
            ..TrainConfig::paper()
        };
        let mut p = scalar_params(1.0);
        let mut st = AdamState::new(&p);
        for _ in 0..5000 {
            let g = bowl_grad(&p);
            adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        }
        assert!(p.tensor(0).item().abs() < 1e-3, "{}", p.tensor(0).item());
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut p = scalar_params(1.0);
            let mut st = AdamState::new(&p);
            for _ in 0..10 {
                let g = bowl_grad(&p);
                adam_step(&mut p, &g, &mut st, &TrainConfig::desk()).unwrap();
            }
            p.tensor(0).item().to_bits()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = scalar_params(1.0);
        let mut st = AdamState::new(&p);
        let g = ParamGrads {
            grads: vec![Some(Tensor::scalar(f64::NAN))],
        };
        let err = adam_step(&mut p, &g, &mut st, &TrainConfig::paper()).unwrap_err();
        assert!(matches!(err, Error::Numeric(ref m) if m.contains('w')));
        assert_eq!(p.tensor(0).item(), 1.0);
    }

    #[test]
    fn config_validation() {
        TrainConfig::paper().validate().unwrap();
        assert!(TrainConfig { lr: 0.0, ..TrainConfig::paper() }.validate().is_err());
        assert!(TrainConfig { batch: 0, ..TrainConfig::paper() }.validate().is_err());
    }

    #[test]
    fn split_is_trailing() {
        let (t, v) = split_indices(100, 0.1);
        assert_eq!(t, (0..90).collect::<Vec<_>>());
        assert_eq!(v, (90..100).collect::<Vec<_>>());
        let (t, v) = split_indices(1, 0.5);
        assert_eq!((t.len(), v.len()), (1, 0));
    }
}
