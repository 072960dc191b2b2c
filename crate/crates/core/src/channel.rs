//! Path loss, Rayleigh fading and per-period received-signal synthesis.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mobility::Positions;
use crate::scenario::{dbm_to_mw, Reporting, ScenarioConfig};

/// Received PU power in dBm: `Pt - (10 log10(beta) + 10 alpha log10(d))`.
pub fn received_power_dbm(pt_dbm: f64, distance_m: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance_m}")));
    }
    Ok(pt_dbm - (10.0 * beta.log10() + 10.0 * alpha * distance_m.log10()))
}

pub fn noise_power_dbm(n0_dbm_per_hz: f64, bw_hz: f64) -> f64 {
    n0_dbm_per_hz + 10.0 * bw_hz.log10()
}

/// Linear SNR `Pr / (N0 * BW)`.
pub fn instantaneous_snr(pr_dbm: f64, n0_dbm_per_hz: f64, bw_hz: f64) -> f64 {
    dbm_to_mw(pr_dbm - noise_power_dbm(n0_dbm_per_hz, bw_hz))
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Rayleigh channel gain: each component has standard deviation
/// `scale / sqrt(2)`, so `|h|` is Rayleigh and `E|h|^2 = scale^2`.
pub fn draw_channel_gain<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Complex64 {
    complex_gaussian(scale * scale, rng)
}

/// Complex `M x N` samples received from one SU in one sensing period.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major: antenna `m`, sample `n` at `m * cols + n`.
    pub entries: Vec<Complex64>,
    pub su_index: usize,
    pub period_index: u64,
    pub label: u8,
}

impl SignalMatrix {
    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.entries[m * self.cols..(m + 1) * self.cols]
    }
}

/// Synthesizes the received signal of every SU for one sensing period.
///
/// Under H1 each sample is `h_r (h_s w + eta_s) + eta_c`, under H0
/// `h_r eta_s + eta_c`. Gains are drawn once per antenna and held for the
/// period. The PU waveform is shared by all SUs and scaled so that the mean
/// received power at SU `s` equals the path-loss power at its current
/// distance (times the sensing fading power `scale^2`).
pub fn generate_period<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    positions: &Positions,
    pu_active: bool,
    period_index: u64,
    rng: &mut R,
) -> Result<Vec<SignalMatrix>> {
    let (m_ant, n) = (cfg.antennas, cfg.samples_per_period);
    let noise = cfg.noise_power_mw();
    let waveform: Vec<Complex64> = if pu_active {
        (0..n).map(|_| complex_gaussian(1.0, rng)).collect()
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(cfg.su_count);
    for (s, su) in positions.sus.iter().enumerate() {
        let d = su.distance(positions.pu).max(cfg.min_distance_m);
        let amplitude = dbm_to_mw(received_power_dbm(cfg.pt_dbm, d, cfg.alpha, cfg.beta)?).sqrt();
        let mut entries = Vec::with_capacity(m_ant * n);
        for _ in 0..m_ant {
            let h_s = draw_channel_gain(cfg.sensing_fading_scale[s], rng) * amplitude;
            let h_r = match cfg.reporting {
                Reporting::Perfect => Complex64::new(1.0, 0.0),
                Reporting::Imperfect => draw_channel_gain(cfg.reporting_fading_scale[s], rng),
            };
            for k in 0..n {
                let mut y = complex_gaussian(noise, rng);
                if pu_active {
                    y += h_s * waveform[k];
                }
                y *= h_r;
                if cfg.reporting == Reporting::Imperfect {
                    y += complex_gaussian(noise, rng);
                }
                entries.push(y);
            }
        }
        out.push(SignalMatrix {
            rows: m_ant,
            cols: n,
            entries,
            su_index: s,
            period_index,
            label: u8::from(pu_active),
        });
    }
    Ok(out)
}
