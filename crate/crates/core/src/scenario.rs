//! Physical and simulation constants of a sensing scenario.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reporting {
    /// Reporting channel gain 1, no fusion-centre noise.
    Perfect,
    /// Rayleigh reporting gain plus fusion-centre noise.
    Imperfect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub pause_s: f64,
    /// Duration of one sensing period; also the mobility time step.
    pub period_s: f64,
    pub su_count: usize,
    pub antennas: usize,
    pub samples_per_period: usize,
    pub sequence_len: usize,
    pub pt_dbm: f64,
    pub alpha: f64,
    /// Path-loss constant, linear.
    pub beta: f64,
    pub n0_dbm_per_hz: f64,
    pub bw_hz: f64,
    /// Distances below this are clamped before path loss is evaluated.
    pub min_distance_m: f64,
    pub sensing_fading_scale: Vec<f64>,
    pub reporting_fading_scale: Vec<f64>,
    pub reporting: Reporting,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ScenarioConfig {
    /// Published simulation constants: 1000 m square, 20-25 m/s, 1 ms pause,
    /// S=3, M=15, N=100, lambda=20, Pt=200 mW, alpha=3.8, beta=10^3.453,
    /// N0=-150 dBm/Hz, BW=10 MHz.
    pub fn paper() -> Self {
        let su_count = 3;
        Self {
            area_width_m: 1000.0,
            area_height_m: 1000.0,
            v_min_mps: 20.0,
            v_max_mps: 25.0,
            pause_s: 1e-3,
            period_s: 10e-3,
            su_count,
            antennas: 15,
            samples_per_period: 100,
            sequence_len: 20,
            pt_dbm: 10.0 * 200f64.log10(),
            alpha: 3.8,
            beta: 10f64.powf(3.453),
            n0_dbm_per_hz: -150.0,
            bw_hz: 10e6,
            min_distance_m: 1.0,
            sensing_fading_scale: default_sensing_scales(su_count),
            reporting_fading_scale: default_reporting_scales(su_count),
            reporting: Reporting::Imperfect,
            seed: 2024,
        }
    }

    /// Reduced geometry for desk-scale runs: M=8 antennas, lambda=10.
    pub fn desk() -> Self {
        Self {
            antennas: 8,
            sequence_len: 10,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_width_m", self.area_width_m),
            ("area_height_m", self.area_height_m),
            ("v_min_mps", self.v_min_mps),
            ("v_max_mps", self.v_max_mps),
            ("pause_s", self.pause_s),
            ("period_s", self.period_s),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("bw_hz", self.bw_hz),
            ("min_distance_m", self.min_distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.pt_dbm.is_finite() || !self.n0_dbm_per_hz.is_finite() {
            return Err(Error::Config("pt_dbm and n0_dbm_per_hz must be finite".into()));
        }
        if self.v_min_mps > self.v_max_mps {
            return Err(Error::Config(format!(
                "v_min_mps {} exceeds v_max_mps {}",
                self.v_min_mps, self.v_max_mps
            )));
        }
        for (name, v) in [
            ("su_count", self.su_count),
            ("antennas", self.antennas),
            ("samples_per_period", self.samples_per_period),
            ("sequence_len", self.sequence_len),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        for (name, scales) in [
            ("sensing_fading_scale", &self.sensing_fading_scale),
            ("reporting_fading_scale", &self.reporting_fading_scale),
        ] {
            if scales.len() != self.su_count {
                return Err(Error::Config(format!(
                    "{name} has {} entries for {} SUs",
                    scales.len(),
                    self.su_count
                )));
            }
            if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::Config(format!("{name} entries must be positive")));
            }
        }
        Ok(())
    }

    /// Noise power `N0 * BW` in milliwatts.
    pub fn noise_power_mw(&self) -> f64 {
        dbm_to_mw(self.n0_dbm_per_hz) * self.bw_hz
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Resizes the per-SU fading vectors to the current `su_count`.
    pub fn with_su_count(mut self, su_count: usize) -> Self {
        self.su_count = su_count;
        self.sensing_fading_scale = default_sensing_scales(su_count);
        self.reporting_fading_scale = default_reporting_scales(su_count);
        self
    }
}

fn default_sensing_scales(s: usize) -> Vec<f64> {
    [1.0, 0.8, 1.2].iter().copied().cycle().take(s).collect()
}

fn default_reporting_scales(s: usize) -> Vec<f64> {
    [1.0, 0.9, 1.1].iter().copied().cycle().take(s).collect()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
