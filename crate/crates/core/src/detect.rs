//! Neyman-Pearson detection: log-odds statistic, Monte-Carlo threshold
//! calibration on H0-only data, ROC curves, sensing metrics and the
//! energy-detection baseline.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, LabelPolicy, SampleSequence};
use crate::error::{Error, Result};
use crate::model::TieredDetector;
use crate::rng::{self, derive_seed, DOMAIN_EVAL};
use crate::scenario::ScenarioConfig;
use crate::train::{check_compatible, PROB_FLOOR};

/// Operating point highlighted in reports.
pub const REFERENCE_PFA: f64 = 0.09;

/// `log p(H1) - log p(H0)`, with both probabilities floored.
pub fn test_statistic(probs: [f64; 2]) -> f64 {
    probs[1].max(PROB_FLOOR).ln() - probs[0].max(PROB_FLOOR).ln()
}

/// H1 iff the statistic exceeds the threshold; ties decide H0.
pub fn decide(stat: f64, gamma: f64) -> bool {
    stat > gamma
}

/// Sorted H0 statistics from which thresholds are read.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    sorted: Vec<f64>,
}

impl ThresholdTable {
    pub fn new(mut stats: Vec<f64>) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::Contract("threshold table needs at least one H0 statistic".into()));
        }
        if stats.iter().any(|s| !s.is_finite()) {
            return Err(Error::Numeric("non-finite H0 statistic".into()));
        }
        stats.sort_by(f64::total_cmp);
        Ok(Self { sorted: stats })
    }

    pub fn count(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// 1-based index `round(Q (1 - pfa))`, clamped to `[1, Q]`.
    pub fn index(&self, pfa: f64) -> usize {
        let q = self.sorted.len();
        let raw = (q as f64 * (1.0 - pfa)).round();
        if raw < 1.0 || raw > q as f64 {
            log::warn!("threshold index {raw} for pfa {pfa} clamped to [1, {q}]");
        }
        (raw.max(1.0) as usize).min(q)
    }

    pub fn threshold(&self, pfa: f64) -> f64 {
        if pfa > 0.0 && (self.sorted.len() as f64) < 1.0 / pfa {
            log::warn!("{} H0 samples are too few for pfa {pfa}", self.sorted.len());
        }
        self.sorted[self.index(pfa) - 1]
    }
}

/// `{0.01, ..., 0.30}` plus the reference operating point.
pub fn default_pfa_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=30).map(|k| k as f64 / 100.0).collect();
    if !grid.iter().any(|p| (p - REFERENCE_PFA).abs() < 1e-12) {
        grid.push(REFERENCE_PFA);
    }
    grid.sort_by(f64::total_cmp);
    grid
}

pub fn fraction_above(stats: &[f64], gamma: f64) -> f64 {
    if stats.is_empty() {
        return 0.0;
    }
    stats.iter().filter(|&&s| decide(s, gamma)).count() as f64 / stats.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pfa: f64,
    pub threshold: f64,
    pub pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC on a pfa grid (thresholds calibrated on `h0`). The AUC is the
/// trapezoid rule over the calibrated curve at `pfa = 0, 0.01, ..., 1`.
pub fn roc_curve(h0: &[f64], h1: &[f64], grid: &[f64]) -> Result<Roc> {
    if h1.is_empty() {
        return Err(Error::Contract("ROC needs at least one H1 statistic".into()));
    }
    let table = ThresholdTable::new(h0.to_vec())?;
    let point = |pfa: f64| {
        let threshold = table.threshold(pfa);
        RocPoint {
            pfa,
            threshold,
            pd: fraction_above(h1, threshold),
        }
    };
    let points = grid.iter().map(|&p| point(p)).collect();
    let dense: Vec<RocPoint> = (0..=100).map(|k| point(k as f64 / 100.0)).collect();
    let auc = dense
        .windows(2)
        .map(|w| (w[1].pfa - w[0].pfa) * (w[0].pd + w[1].pd) / 2.0)
        .sum();
    Ok(Roc { points, auc })
}

/// Standard deviation of the AUC under random relabelling of the pooled
/// statistics.
pub fn chance_auc_sigma(h0: &[f64], h1: &[f64], reps: usize, seed: u64) -> Result<f64> {
    let mut pooled: Vec<f64> = h0.iter().chain(h1).copied().collect();
    let mut rng = rng::stream(seed, DOMAIN_EVAL, 0xa0c);
    let mut aucs = Vec::with_capacity(reps);
    for _ in 0..reps {
        pooled.shuffle(&mut rng);
        let (a, b) = pooled.split_at(h0.len());
        aucs.push(roc_curve(a, b, &[])?.auc);
    }
    let mean = aucs.iter().sum::<f64>() / reps as f64;
    Ok((aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (reps.max(2) - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingMetrics {
    pub sensing_error: f64,
    pub accuracy: f64,
    pub pd: f64,
    pub pfa: f64,
}

/// Sensing error `(P_md + P_fa) / 2`, accuracy and the two rates. A class
/// absent from `labels` contributes a rate of 0.
pub fn sensing_metrics(decisions: &[bool], labels: &[u8]) -> Result<SensingMetrics> {
    if decisions.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} decisions for {} labels",
            decisions.len(),
            labels.len()
        )));
    }
    let (mut tp, mut p, mut fp, mut n) = (0usize, 0usize, 0usize, 0usize);
    for (&d, &l) in decisions.iter().zip(labels) {
        if l == 1 {
            p += 1;
            tp += usize::from(d);
        } else {
            n += 1;
            fp += usize::from(d);
        }
    }
    let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let pd = if p == 0 { 1.0 } else { rate(tp, p) };
    let pfa = rate(fp, n);
    let correct = tp + (n - fp);
    Ok(SensingMetrics {
        sensing_error: ((1.0 - pd) + pfa) / 2.0,
        accuracy: rate(correct, decisions.len()),
        pd,
        pfa,
    })
}

/// Average per-antenna power: mean CM trace over the sequence, over `M`.
pub fn energy_statistic(seq: &SampleSequence) -> f64 {
    let m = seq.dim().max(1) as f64;
    seq.cms.iter().map(|c| c.trace()).sum::<f64>() / (seq.cms.len().max(1) as f64 * m)
}

/// Group energy statistic: mean of the per-SU statistics.
pub fn group_energy_statistic(per_su: &[SampleSequence]) -> f64 {
    per_su.iter().map(energy_statistic).sum::<f64>() / per_su.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub n0_dbm_per_hz: Vec<f64>,
    /// Empty means the default grid.
    pub pfa: Vec<f64>,
    pub calibration_samples: usize,
    pub test_samples: usize,
    pub seed: u64,
    pub energy_baseline: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n0_dbm_per_hz: vec![-150.0, -147.5, -145.0],
            pfa: Vec::new(),
            calibration_samples: 5000,
            test_samples: 1000,
            seed: 7,
            energy_baseline: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0_dbm_per_hz.is_empty() || self.n0_dbm_per_hz.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("at least one finite noise level is required".into()));
        }
        if self.pfa.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("pfa values must lie in [0, 1]".into()));
        }
        if self.calibration_samples == 0 || self.test_samples < 2 {
            return Err(Error::Config("need calibration samples and at least two test samples".into()));
        }
        Ok(())
    }

    /// The requested grid (default grid when empty), always including the
    /// reference operating point.
    pub fn pfa_grid(&self) -> Vec<f64> {
        if self.pfa.is_empty() {
            return default_pfa_grid();
        }
        let mut g = self.pfa.clone();
        if !g.iter().any(|p| (p - REFERENCE_PFA).abs() < 1e-12) {
            g.push(REFERENCE_PFA);
        }
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Transformer,
    Energy,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Transformer => "transformer",
            Self::Energy => "energy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub n0_dbm_per_hz: f64,
    pub pfa: f64,
    pub threshold: f64,
    pub pd: f64,
    pub empirical_pfa: f64,
    pub sensing_error: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub method: Method,
    pub n0_dbm_per_hz: f64,
    pub auc: f64,
    pub chance_auc_sigma: f64,
    pub pd_at_reference: f64,
    pub sensing_error_at_reference: f64,
    pub accuracy_at_reference: f64,
    pub roc: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub calibration_samples: usize,
    pub test_samples: usize,
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<NoiseSummary>,
}

pub const REPORT_COLUMNS: &str = "method,n0_dbm_per_hz,pfa,threshold,pd,empirical_pfa,sensing_error,accuracy";

impl DetectionReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_COLUMNS}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.method.name(),
                r.n0_dbm_per_hz,
                r.pfa,
                r.threshold,
                r.pd,
                r.empirical_pfa,
                r.sensing_error,
                r.accuracy
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// ROC points of every method at one noise level.
    pub fn roc_csv(&self, n0: f64) -> String {
        let mut out = String::from("method,pfa,threshold,pd\n");
        for s in self.summaries.iter().filter(|s| s.n0_dbm_per_hz == n0) {
            for p in &s.roc {
                out.push_str(&format!("{},{},{},{}\n", s.method.name(), p.pfa, p.threshold, p.pd));
            }
        }
        out
    }

    /// Per method and noise level: AUC and the metrics at the reference pfa.
    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("method,n0_dbm_per_hz,auc,chance_auc_sigma,pd_at_0.09,sensing_error_at_0.09,accuracy_at_0.09\n");
        for s in &self.summaries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.method.name(),
                s.n0_dbm_per_hz,
                s.auc,
                s.chance_auc_sigma,
                s.pd_at_reference,
                s.sensing_error_at_reference,
                s.accuracy_at_reference
            ));
        }
        out
    }

    pub fn summary(&self, method: Method, n0: f64) -> Option<&NoiseSummary> {
        self.summaries.iter().find(|s| s.method == method && s.n0_dbm_per_hz == n0)
    }
}

/// Statistics of a method over every sample of a dataset.
pub fn statistics(det: Option<&TieredDetector>, ds: &Dataset, method: Method) -> Result<Vec<f64>> {
    let noise = ds.scenario.noise_power_mw();
    ds.samples
        .par_iter()
        .map(|s| match method {
            Method::Energy => Ok(group_energy_statistic(&s.per_su)),
            Method::Transformer => {
                let det = det.ok_or_else(|| Error::Contract("transformer statistics need a model".into()))?;
                Ok(test_statistic(det.predict(&det.prepare(s, noise)?)?))
            }
        })
        .collect()
}

fn method_rows(
    method: Method,
    n0: f64,
    h0_cal: &[f64],
    test_stats: &[f64],
    labels: &[u8],
    grid: &[f64],
    seed: u64,
) -> Result<(Vec<ReportRow>, NoiseSummary)> {
    let table = ThresholdTable::new(h0_cal.to_vec())?;
    let test_h0: Vec<f64> = test_stats.iter().zip(labels).filter(|(_, &l)| l == 0).map(|(s, _)| *s).collect();
    let test_h1: Vec<f64> = test_stats.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(s, _)| *s).collect();
    let mut rows = Vec::with_capacity(grid.len());
    for &pfa in grid {
        let gamma = table.threshold(pfa);
        let decisions: Vec<bool> = test_stats.iter().map(|&s| decide(s, gamma)).collect();
        let m = sensing_metrics(&decisions, labels)?;
        rows.push(ReportRow {
            method,
            n0_dbm_per_hz: n0,
            pfa,
            threshold: gamma,
            pd: m.pd,
            empirical_pfa: m.pfa,
            sensing_error: m.sensing_error,
            accuracy: m.accuracy,
        });
    }
    let roc = roc_curve(h0_cal, &test_h1, grid)?;
    let sigma = chance_auc_sigma(&test_h0, &test_h1, 200, seed)?;
    let reference = {
        let gamma = table.threshold(REFERENCE_PFA);
        let decisions: Vec<bool> = test_stats.iter().map(|&s| decide(s, gamma)).collect();
        sensing_metrics(&decisions, labels)?
    };
    Ok((
        rows,
        NoiseSummary {
            method,
            n0_dbm_per_hz: n0,
            auc: roc.auc,
            chance_auc_sigma: sigma,
            pd_at_reference: reference.pd,
            sensing_error_at_reference: reference.sensing_error,
            accuracy_at_reference: reference.accuracy,
            roc: roc.points,
        },
    ))
}

/// Scenario at another noise level with a fixed data seed.
pub fn scenario_at(base: &ScenarioConfig, n0: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n0_dbm_per_hz: n0,
        seed,
        ..base.clone()
    }
}

/// Calibrates on fresh H0-only data and tests on fresh balanced data at
/// every noise level. Both draws reuse the same seeds across noise levels.
pub fn evaluate(det: &TieredDetector, base: &ScenarioConfig, cfg: &EvalConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    check_compatible(&det.config, base)?;
    let grid = cfg.pfa_grid();
    let cal_seed = derive_seed(cfg.seed, DOMAIN_EVAL ^ 0xca1);
    let test_seed = derive_seed(cfg.seed, DOMAIN_EVAL ^ 0x7e57);
    let mut methods = vec![Method::Transformer];
    if cfg.energy_baseline {
        methods.push(Method::Energy);
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &n0 in &cfg.n0_dbm_per_hz {
        let sc_cal = scenario_at(base, n0, cal_seed);
        let sc_test = scenario_at(base, n0, test_seed);
        let cal = Dataset::generate(&sc_cal, cfg.calibration_samples, LabelPolicy::AllH0, cal_seed)?;
        let test = Dataset::generate(&sc_test, cfg.test_samples, LabelPolicy::Alternating, test_seed)?;
        let labels: Vec<u8> = test.samples.iter().map(|s| s.label).collect();
        for &method in &methods {
            let h0 = statistics(Some(det), &cal, method)?;
            let stats = statistics(Some(det), &test, method)?;
            let (r, s) = method_rows(method, n0, &h0, &stats, &labels, &grid, cfg.seed)?;
            rows.extend(r);
            summaries.push(s);
        }
    }
    Ok(DetectionReport {
        calibration_samples: cfg.calibration_samples,
        test_samples: cfg.test_samples,
        rows,
        summaries,
    })
}
