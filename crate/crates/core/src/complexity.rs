//! Closed-form inference complexity of the two-tier detector and two CNN
//! comparison architectures, per-layer MAC accounting of the concrete model,
//! and wall-clock latency measurement.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_period, SignalMatrix};
use crate::dataset::{covariance, CssSample, SampleSequence};
use crate::error::{Error, Result};
use crate::mobility::{simulate_trajectory, MobilityParams};
use crate::model::{init_params, ModelConfig, TieredDetector, COLLAB_TIER, SU_TIER};
use crate::rng::{self, DOMAIN_EVAL};
use crate::scenario::ScenarioConfig;

/// Spectrum evacuation bound in milliseconds.
pub const EVACUATION_BOUND_MS: f64 = 2000.0;

/// Published totals, used only for side-by-side reporting.
pub const PUBLISHED_TRANSFORMER_FLOPS: u64 = 23_519_168;
pub const PUBLISHED_CNN_LSTM_FLOPS: u64 = 9_830_400;
pub const PUBLISHED_CNN3D_FLOPS: u64 = 203_836_544;
pub const PUBLISHED_SU_PARAMS: u64 = 42_667;
pub const PUBLISHED_COLLAB_PARAMS: u64 = 31_747;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnLstmInputs {
    pub lambda: u64,
    pub m: u64,
    pub s: u64,
    /// Kernel count of the convolution.
    pub n_f1: u64,
    /// Spatial kernel size.
    pub n_s1: u64,
    /// LSTM gate dimension.
    pub n_l: u64,
    pub n_fc1: u64,
    pub n_fc2: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnn3dInputs {
    pub lambda: u64,
    pub m: u64,
    pub s: u64,
    pub n_f1: u64,
    pub n_f2: u64,
    pub m_s1: u64,
    pub m_s2: u64,
    pub d_fc1: u64,
    pub d_fc2: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformerInputs {
    pub lambda: u64,
    pub m: u64,
    pub l1: u64,
    pub l2: u64,
    pub h_att1: u64,
    pub h_att2: u64,
    pub d_emb1: u64,
    pub d_emb2: u64,
    pub d_fc1: u64,
    pub d_fc2: u64,
}

impl CnnLstmInputs {
    /// Comparison configuration: 32 kernels of 3x3, 32 LSTM units, dense
    /// 128 and 2, on 20 CMs of side 16 from 3 SUs.
    pub fn published() -> Self {
        Self {
            lambda: 20,
            m: 16,
            s: 3,
            n_f1: 32,
            n_s1: 3,
            n_l: 32,
            n_fc1: 128,
            n_fc2: 2,
        }
    }

    pub fn ones() -> Self {
        Self {
            lambda: 1,
            m: 1,
            s: 1,
            n_f1: 1,
            n_s1: 1,
            n_l: 1,
            n_fc1: 1,
            n_fc2: 1,
        }
    }
}

impl Cnn3dInputs {
    /// Comparison configuration: 32 then 24 kernels of 3x3x3, dense 64 and 2.
    pub fn published() -> Self {
        Self {
            lambda: 20,
            m: 16,
            s: 3,
            n_f1: 32,
            n_f2: 24,
            m_s1: 3,
            m_s2: 3,
            d_fc1: 64,
            d_fc2: 2,
        }
    }

    pub fn ones() -> Self {
        Self {
            lambda: 1,
            m: 1,
            s: 1,
            n_f1: 1,
            n_f2: 1,
            m_s1: 1,
            m_s2: 1,
            d_fc1: 1,
            d_fc2: 1,
        }
    }
}

impl TransformerInputs {
    pub fn from_model(cfg: &ModelConfig) -> Self {
        let fc = cfg.encoder_mlp.first().copied().unwrap_or(cfg.embed_dim) as u64;
        Self {
            lambda: cfg.sequence_len as u64,
            m: cfg.side as u64,
            l1: cfg.su_layers as u64,
            l2: cfg.collab_layers as u64,
            h_att1: cfg.heads as u64,
            h_att2: cfg.heads as u64,
            d_emb1: cfg.embed_dim as u64,
            d_emb2: cfg.embed_dim as u64,
            d_fc1: fc,
            d_fc2: fc,
        }
    }

    pub fn ones() -> Self {
        Self {
            lambda: 1,
            m: 1,
            l1: 1,
            l2: 1,
            h_att1: 1,
            h_att2: 1,
            d_emb1: 1,
            d_emb2: 1,
            d_fc1: 1,
            d_fc2: 1,
        }
    }

    /// Exchanges the tier-1 and tier-2 parameters.
    pub fn swapped(self) -> Self {
        Self {
            l1: self.l2,
            l2: self.l1,
            h_att1: self.h_att2,
            h_att2: self.h_att1,
            d_emb1: self.d_emb2,
            d_emb2: self.d_emb1,
            d_fc1: self.d_fc2,
            d_fc2: self.d_fc1,
            ..self
        }
    }
}

/// Named additive terms of a closed-form complexity expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms(pub Vec<(String, u64)>);

impl Terms {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|(_, v)| v).sum()
    }
}

/// `lambda M^2 n_f1 n_s1^2 S + 4 lambda n_l (n_f1 + n_l) + n_f1 n_fc1 + n_l n_fc2`.
pub fn complexity_cnn_lstm(i: &CnnLstmInputs) -> Terms {
    Terms(vec![
        ("convolution".into(), i.lambda * i.m * i.m * i.n_f1 * i.n_s1 * i.n_s1 * i.s),
        ("lstm".into(), 4 * i.lambda * i.n_l * (i.n_f1 + i.n_l)),
        ("dense 1".into(), i.n_f1 * i.n_fc1),
        ("dense 2".into(), i.n_l * i.n_fc2),
    ])
}

/// `lambda M^2 (n_f1 m_s1^3 S + n_f1 n_f2 m_s2^3) + n_f2 d_fc1 + d_fc1 d_fc2`.
pub fn complexity_3dcnn(i: &Cnn3dInputs) -> Terms {
    let vol = i.lambda * i.m * i.m;
    Terms(vec![
        ("convolution 1".into(), vol * i.n_f1 * i.m_s1.pow(3) * i.s),
        ("convolution 2".into(), vol * i.n_f1 * i.n_f2 * i.m_s2.pow(3)),
        ("dense 1".into(), i.n_f2 * i.d_fc1),
        ("dense 2".into(), i.d_fc1 * i.d_fc2),
    ])
}

/// `L1 h1 M^2 lambda d1 + L1 M fc1 + L2 h2 M^2 lambda d2 + L2 M fc2`.
pub fn complexity_transformer(i: &TransformerInputs) -> Terms {
    let plane = i.m * i.m * i.lambda;
    Terms(vec![
        ("su attention".into(), i.l1 * i.h_att1 * plane * i.d_emb1),
        ("su mlp".into(), i.l1 * i.m * i.d_fc1),
        ("collaborative attention".into(), i.l2 * i.h_att2 * plane * i.d_emb2),
        ("collaborative mlp".into(), i.l2 * i.m * i.d_fc2),
    ])
}

/// One row of the per-layer MAC table. `multiplicity` is the number of
/// encoder layers for encoder rows and 1 otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsRow {
    pub name: String,
    pub macs: u64,
    pub multiplicity: u64,
    /// Published figure for this row at the published configuration.
    pub published: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierFlops {
    pub tier: String,
    pub rows: Vec<FlopsRow>,
    pub params: u64,
    pub published_total: Option<u64>,
    pub published_params: Option<u64>,
}

impl TierFlops {
    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.macs * r.multiplicity).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsBreakdown {
    pub tiers: Vec<TierFlops>,
    /// Complex MACs to form every CM of one sample: `S lambda M^2 N`.
    pub preprocessing_complex_macs: u64,
}

impl FlopsBreakdown {
    pub fn total(&self) -> u64 {
        self.tiers.iter().map(TierFlops::total).sum()
    }

    pub fn params(&self) -> u64 {
        self.tiers.iter().map(|t| t.params).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tier,row,macs,multiplicity,total_macs,published\n");
        for t in &self.tiers {
            for r in &t.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    t.tier,
                    r.name,
                    r.macs,
                    r.multiplicity,
                    r.macs * r.multiplicity,
                    r.published.map(|v| v.to_string()).unwrap_or_default()
                ));
            }
            out.push_str(&format!(
                "{},Total FLOPs,{},1,{},{}\n",
                t.tier,
                t.total(),
                t.total(),
                t.published_total.map(|v| v.to_string()).unwrap_or_default()
            ));
            out.push_str(&format!(
                "{},Parameters,{},1,{},{}\n",
                t.tier,
                t.params,
                t.params,
                t.published_params.map(|v| v.to_string()).unwrap_or_default()
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<28} {:>14} {:>6} {:>14} {:>14} {:>14}\n",
            "row", "macs", "x", "total", "published", "delta"
        );
        for t in &self.tiers {
            out.push_str(&format!("[{}]\n", t.tier));
            let line = |name: &str, macs: u64, mult: u64, published: Option<u64>| {
                let total = macs * mult;
                let (p, d) = match published {
                    Some(p) => (p.to_string(), (total as i64 - (p * mult) as i64).to_string()),
                    None => ("-".into(), "-".into()),
                };
                format!("{name:<28} {macs:>14} {mult:>6} {total:>14} {p:>14} {d:>14}\n")
            };
            for r in &t.rows {
                out.push_str(&line(&r.name, r.macs, r.multiplicity, r.published));
            }
            out.push_str(&line("Total FLOPs", t.total(), 1, t.published_total));
            out.push_str(&line("Parameters", t.params, 1, t.published_params));
        }
        out.push_str(&format!(
            "{:<28} {:>14}\n{:<28} {:>14} (published {})\n",
            "CM preprocessing (complex)",
            self.preprocessing_complex_macs,
            "Model total",
            self.total(),
            PUBLISHED_TRANSFORMER_FLOPS
        ));
        out
    }
}

fn is_published_shape(cfg: &ModelConfig) -> bool {
    cfg.sequence_len == 20
        && cfg.side == 16
        && cfg.tube == [20, 1, 1]
        && cfg.embed_dim == 24
        && cfg.heads == 4
        && cfg.su_layers == 5
        && cfg.collab_layers == 4
        && cfg.encoder_mlp == [48, 24]
        && cfg.head_units == [128, 64]
}

/// Multiply-accumulates per layer of the concrete architecture for one
/// sample, per tier. The SU tier is counted once (per SU).
///
/// Conventions: attention counts the Q/K/V/O projections and both `N x N`
/// products; layer normalization counts two MACs per element for each of the
/// two norms; sequence pooling counts scoring and the weighted sum.
pub fn count_model_flops(cfg: &ModelConfig, samples_per_period: usize) -> Result<FlopsBreakdown> {
    cfg.validate()?;
    let n = cfg.token_count() as u64;
    let d = cfg.embed_dim as u64;
    let published = is_published_shape(cfg);
    let mlp: u64 = {
        let mut fan_in = d;
        let mut total = 0;
        for &u in &cfg.encoder_mlp {
            total += n * fan_in * u as u64;
            fan_in = u as u64;
        }
        total
    };
    let head: u64 = {
        let mut fan_in = d;
        let mut total = 0;
        for &u in cfg.head_units.iter().chain(std::iter::once(&2)) {
            total += fan_in * u as u64;
            fan_in = u as u64;
        }
        total
    };
    let params = init_params(cfg, 0)?;
    let mut tiers = Vec::new();
    for tier in [SU_TIER, COLLAB_TIER] {
        let su = tier == SU_TIER;
        let layers = if su { cfg.su_layers } else { cfg.collab_layers } as u64;
        let embed = if su { n * d * cfg.tube_volume() as u64 } else { n * d * d };
        let pick = |a: u64, b: u64| if published { Some(if su { a } else { b }) } else { None };
        let rows = vec![
            FlopsRow {
                name: "Patch Embedding".into(),
                macs: embed,
                multiplicity: 1,
                published: pick(245_760, 576),
            },
            FlopsRow {
                name: "MSA".into(),
                macs: 4 * n * d * d + 2 * n * n * d,
                multiplicity: layers,
                published: pick(1_376_256, 1_376_256),
            },
            FlopsRow {
                name: "MLP in Encoder".into(),
                macs: mlp,
                multiplicity: layers,
                published: pick(1_179_648, 1_179_648),
            },
            FlopsRow {
                name: "Layer Normalization".into(),
                macs: 4 * n * d,
                multiplicity: layers,
                published: pick(24_576, 24_576),
            },
            FlopsRow {
                name: "Sequence Pooling".into(),
                macs: 2 * n * d,
                multiplicity: 1,
                published: pick(12_864, 12_864),
            },
            FlopsRow {
                name: "MLP Head".into(),
                macs: head,
                multiplicity: 1,
                published: pick(11_392, 11_392),
            },
        ];
        tiers.push(TierFlops {
            tier: if su { "su" } else { "collaborative" }.into(),
            rows,
            params: params.count_scalars(&format!("{tier}.")) as u64,
            published_total: pick(13_172_416, 10_346_752),
            published_params: pick(PUBLISHED_SU_PARAMS, PUBLISHED_COLLAB_PARAMS),
        });
    }
    let m = cfg.side as u64;
    Ok(FlopsBreakdown {
        tiers,
        preprocessing_complex_macs: cfg.su_count as u64
            * cfg.sequence_len as u64
            * m
            * m
            * samples_per_period as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub median_ms: f64,
    pub p95_ms: f64,
    pub reps: usize,
    /// A single measurement carries no spread information.
    pub low_confidence: bool,
}

impl LatencyStats {
    pub fn from_samples(mut ms: Vec<f64>) -> Result<Self> {
        if ms.is_empty() {
            return Err(Error::Config("latency statistics need at least one repetition".into()));
        }
        ms.sort_by(f64::total_cmp);
        let q = |p: f64| ms[((p * (ms.len() - 1) as f64).round() as usize).min(ms.len() - 1)];
        Ok(Self {
            median_ms: q(0.5),
            p95_ms: q(0.95),
            reps: ms.len(),
            low_confidence: ms.len() == 1,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub preprocessing: LatencyStats,
    pub inference: LatencyStats,
    pub within_evacuation_bound: bool,
    pub published_preprocessing_ms: f64,
    pub published_inference_ms: f64,
}

pub const BENCH_WARMUP: usize = 10;

/// Raw signal matrices of one sample, `[su][period]`.
pub fn bench_signals(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Vec<SignalMatrix>>> {
    let mut rng = rng::stream(seed, DOMAIN_EVAL, 0xbe);
    let params = MobilityParams::from_scenario(cfg);
    let traj = simulate_trajectory(&params, cfg.su_count, cfg.sequence_len, cfg.period_s, &mut rng);
    let active = rng.random::<bool>();
    let mut per_su = vec![Vec::with_capacity(cfg.sequence_len); cfg.su_count];
    for (u, pos) in traj.iter().enumerate() {
        for (s, y) in generate_period(cfg, pos, active, u as u64, &mut rng)?.into_iter().enumerate() {
            per_su[s].push(y);
        }
    }
    Ok(per_su)
}

/// Per-sample latency of preprocessing (CMs and planes) and of a full
/// two-tier prediction, after `BENCH_WARMUP` untimed iterations.
pub fn bench_inference(
    det: &TieredDetector,
    signals: &[Vec<SignalMatrix>],
    noise_power: f64,
    reps: usize,
) -> Result<BenchReport> {
    if reps == 0 {
        return Err(Error::Config("bench needs at least one repetition".into()));
    }
    let preprocess = || -> Result<Vec<crate::tensor::Tensor>> {
        let per_su = signals
            .iter()
            .map(|ys| {
                let cms = ys.iter().map(covariance).collect::<Result<Vec<_>>>()?;
                Ok(SampleSequence { cms, label: 0 })
            })
            .collect::<Result<Vec<_>>>()?;
        det.prepare(&CssSample { per_su, label: 0 }, noise_power)
    };
    let planes = preprocess()?;
    for _ in 0..BENCH_WARMUP {
        std::hint::black_box(preprocess()?);
        std::hint::black_box(det.predict(&planes)?);
    }
    let mut pre = Vec::with_capacity(reps);
    let mut inf = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        let p = std::hint::black_box(preprocess()?);
        pre.push(t.elapsed().as_secs_f64() * 1e3);
        let t = Instant::now();
        std::hint::black_box(det.predict(&p)?);
        inf.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let preprocessing = LatencyStats::from_samples(pre)?;
    let inference = LatencyStats::from_samples(inf)?;
    Ok(BenchReport {
        within_evacuation_bound: preprocessing.median_ms + inference.median_ms < EVACUATION_BOUND_MS,
        preprocessing,
        inference,
        published_preprocessing_ms: 0.099,
        published_inference_ms: 2.46,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_inputs() {
        assert_eq!(complexity_cnn_lstm(&CnnLstmInputs::ones()).total(), 11);
        // 1*(1*1*1 + 1*1*1) + 1 + 1
        assert_eq!(complexity_3dcnn(&Cnn3dInputs::ones()).total(), 4);
        assert_eq!(complexity_transformer(&TransformerInputs::ones()).total(), 4);
    }

    #[test]
    fn doubling_lambda_doubles_lambda_terms() {
        let a = CnnLstmInputs::published();
        let b = CnnLstmInputs { lambda: 2 * a.lambda, ..a };
        let (ta, tb) = (complexity_cnn_lstm(&a), complexity_cnn_lstm(&b));
        for k in 0..4 {
            let factor = if k < 2 { 2 } else { 1 };
            assert_eq!(tb.0[k].1, factor * ta.0[k].1);
        }
    }

    #[test]
    fn transformer_swap_symmetry() {
        let i = TransformerInputs {
            l2: 3,
            h_att2: 2,
            d_emb2: 16,
            d_fc2: 40,
            ..TransformerInputs::from_model(&ModelConfig::paper())
        };
        assert_eq!(complexity_transformer(&i).total(), complexity_transformer(&i.swapped()).total());
    }

    #[test]
    fn published_configuration_values() {
        assert_eq!(complexity_cnn_lstm(&CnnLstmInputs::published()).total(), 4_423_680 + 163_840 + 4096 + 64);
        assert_eq!(complexity_3dcnn(&Cnn3dInputs::published()).total(), 119_439_360 + 1536 + 128);
        let t = TransformerInputs::from_model(&ModelConfig::paper());
        assert_eq!(complexity_transformer(&t).total(), 2_457_600 + 3840 + 1_966_080 + 3072);
    }

    #[test]
    fn two_channel_patch_embedding() {
        let cfg = ModelConfig {
            layout: crate::dataset::ChannelLayout::RealImag,
            ..ModelConfig::paper()
        };
        let f = count_model_flops(&cfg, 100).unwrap();
        assert_eq!(f.tiers[0].rows[0].macs, 256 * 24 * 40);
        assert_eq!(f.tiers[0].rows[0].macs, 245_760);
    }

    #[test]
    fn breakdown_rows_sum_to_total() {
        let f = count_model_flops(&ModelConfig::paper(), 100).unwrap();
        for t in &f.tiers {
            let sum: u64 = t.rows.iter().map(|r| r.macs * r.multiplicity).sum();
            assert_eq!(t.total(), sum);
        }
        assert_eq!(f.total(), f.tiers[0].total() + f.tiers[1].total());
        assert_eq!(f.tiers[0].rows[5].macs, 11_392);
        assert_eq!(f.tiers[0].rows[3].macs, 24_576);
        assert_eq!(f.preprocessing_complex_macs, 3 * 20 * 256 * 100);
        let text = f.to_text();
        for row in ["Patch Embedding", "MSA", "MLP in Encoder", "Layer Normalization", "Sequence Pooling", "MLP Head", "Total FLOPs"] {
            assert!(text.contains(row));
            assert!(f.to_csv().contains(row));
        }
    }

    #[test]
    fn zero_layer_config() {
        let cfg = ModelConfig {
            su_layers: 0,
            collab_layers: 0,
            ..ModelConfig::paper()
        };
        let f = count_model_flops(&cfg, 100).unwrap();
        for t in &f.tiers {
            for r in &t.rows {
                let contributes = r.macs * r.multiplicity > 0;
                let expected = matches!(r.name.as_str(), "Patch Embedding" | "Sequence Pooling" | "MLP Head");
                assert_eq!(contributes, expected, "{}", r.name);
            }
        }
    }

    #[test]
    fn latency_order_statistics() {
        let s = LatencyStats::from_samples(vec![5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.median_ms, 3.0);
        assert!(s.median_ms <= s.p95_ms);
        assert!(!s.low_confidence);
        let one = LatencyStats::from_samples(vec![2.0]).unwrap();
        assert!(one.low_confidence);
        assert_eq!(one.median_ms, one.p95_ms);
        assert!(LatencyStats::from_samples(Vec::new()).is_err());
    }

    #[test]
    fn bench_runs_on_micro_model() {
        let mut sc = ScenarioConfig::desk();
        sc.su_count = 2;
        sc.sensing_fading_scale.truncate(2);
        sc.reporting_fading_scale.truncate(2);
        sc.antennas = 4;
        sc.sequence_len = 2;
        let det = TieredDetector::new(ModelConfig::micro(), 0).unwrap();
        let sig = bench_signals(&sc, 1).unwrap();
        let r = bench_inference(&det, &sig, sc.noise_power_mw(), 3).unwrap();
        assert_eq!(r.inference.reps, 3);
        assert!(r.within_evacuation_bound);
        assert!(r.inference.median_ms <= r.inference.p95_ms);
    }

    proptest! {
        #[test]
        fn evaluators_are_monotone(base in prop::array::uniform10(1u64..20), k in 0usize..10) {
            let bump = |mut v: [u64; 10]| { v[k] += 1; v };
            let lstm = |v: [u64; 10]| complexity_cnn_lstm(&CnnLstmInputs {
                lambda: v[0], m: v[1], s: v[2], n_f1: v[3], n_s1: v[4], n_l: v[5], n_fc1: v[6], n_fc2: v[7],
            }).total();
            let cnn = |v: [u64; 10]| complexity_3dcnn(&Cnn3dInputs {
                lambda: v[0], m: v[1], s: v[2], n_f1: v[3], n_f2: v[4], m_s1: v[5], m_s2: v[6], d_fc1: v[7], d_fc2: v[8],
            }).total();
            let tr = |v: [u64; 10]| complexity_transformer(&TransformerInputs {
                lambda: v[0], m: v[1], l1: v[2], l2: v[3], h_att1: v[4], h_att2: v[5], d_emb1: v[6], d_emb2: v[7], d_fc1: v[8], d_fc2: v[9],
            }).total();
            prop_assert!(lstm(bump(base)) >= lstm(base));
            prop_assert!(cnn(bump(base)) >= cnn(base));
            prop_assert!(tr(bump(base)) >= tr(base));
        }
    }
}
