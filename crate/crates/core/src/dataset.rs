//! Covariance-matrix sequences, their real-valued channel planes, and the
//! on-disk dataset container.
//!
//! Container layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "CSSDSET1"
//! hlen     u32      length of the JSON header
//! header   hlen     DatasetHeader as JSON
//! records  count x { label u8, start_period u64,
//!                    S x lambda x M x M x (re f64, im f64) }
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_period, SignalMatrix};
use crate::error::{Error, Result};
use crate::mobility::{simulate_trajectory, MobilityParams};
use crate::rng::{self, DOMAIN_MOBILITY, DOMAIN_SIGNAL};
use crate::scenario::ScenarioConfig;
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"CSSDSET1";
const FORMAT_VERSION: u32 = 1;

/// `R = (1/N) Y Y^H` for one SU and one sensing period.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub dim: usize,
    pub entries: Vec<Complex64>,
    pub period_index: u64,
    pub su_index: usize,
}

impl CovarianceMatrix {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    /// `x^H R x`.
    pub fn quadratic_form(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..self.dim {
                row += self.get(i, j) * x[j];
            }
            acc += x[i].conj() * row;
        }
        acc
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

pub fn covariance(y: &SignalMatrix) -> Result<CovarianceMatrix> {
    if y.cols == 0 {
        return Err(Error::Contract("covariance needs at least one sample".into()));
    }
    let m = y.rows;
    let inv_n = 1.0 / y.cols as f64;
    let mut entries = vec![Complex64::new(0.0, 0.0); m * m];
    for i in 0..m {
        let ri = y.row(i);
        for j in i..m {
            let rj = y.row(j);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in ri.iter().zip(rj) {
                acc += a * b.conj();
            }
            acc *= inv_n;
            if i == j {
                acc.im = 0.0;
            }
            entries[i * m + j] = acc;
            entries[j * m + i] = acc.conj();
        }
    }
    Ok(CovarianceMatrix {
        dim: m,
        entries,
        period_index: y.period_index,
        su_index: y.su_index,
    })
}

/// `lambda` consecutive covariance matrices of one SU sharing one label.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSequence {
    pub cms: Vec<CovarianceMatrix>,
    pub label: u8,
}

impl SampleSequence {
    pub fn len(&self) -> usize {
        self.cms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cms.first().map_or(0, |c| c.dim)
    }
}

/// One cooperative sample: aligned sequences from every SU.
#[derive(Debug, Clone, PartialEq)]
pub struct CssSample {
    pub per_su: Vec<SampleSequence>,
    pub label: u8,
}

impl CssSample {
    pub fn start_period(&self) -> u64 {
        self.per_su[0].cms[0].period_index
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .per_su
            .first()
            .ok_or_else(|| Error::Contract("sample without SUs".into()))?;
        for seq in &self.per_su {
            if seq.label != self.label {
                return Err(Error::Contract("SU sequences disagree on the label".into()));
            }
            if seq.len() != first.len()
                || seq.cms.iter().zip(&first.cms).any(|(a, b)| a.period_index != b.period_index)
            {
                return Err(Error::Contract("SU sequences are not period-aligned".into()));
            }
        }
        Ok(())
    }
}

/// Splits a labelled CM stream into consecutive non-overlapping blocks of
/// `lambda`; a trailing partial block is dropped.
pub fn assemble_sequences(
    stream: impl IntoIterator<Item = (CovarianceMatrix, u8)>,
    lambda: usize,
) -> Result<Vec<SampleSequence>> {
    if lambda == 0 {
        return Err(Error::Config("sequence length must be at least 1".into()));
    }
    let mut out = Vec::new();
    let mut block: Vec<CovarianceMatrix> = Vec::with_capacity(lambda);
    let mut label = 0;
    for (cm, b) in stream {
        if block.is_empty() {
            label = b;
        } else if b != label {
            return Err(Error::Contract(format!(
                "mixed labels inside block {} (period {})",
                out.len(),
                cm.period_index
            )));
        }
        block.push(cm);
        if block.len() == lambda {
            out.push(SampleSequence {
                cms: std::mem::replace(&mut block, Vec::with_capacity(lambda)),
                label,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelPolicy {
    /// Blocks alternate H0, H1, H0, ...
    Alternating,
    AllH0,
    AllH1,
}

impl LabelPolicy {
    pub fn label(self, block: usize) -> u8 {
        match self {
            Self::Alternating => (block % 2) as u8,
            Self::AllH0 => 0,
            Self::AllH1 => 1,
        }
    }
}

/// Simulates `count` cooperative samples. Mobility is stepped serially; the
/// per-period signals are drawn in parallel from per-period streams, so the
/// result does not depend on the worker count.
pub fn generate_samples(
    cfg: &ScenarioConfig,
    count: usize,
    policy: LabelPolicy,
    seed: u64,
) -> Result<Vec<CssSample>> {
    cfg.validate()?;
    let lambda = cfg.sequence_len;
    let periods = count * lambda;
    let params = MobilityParams::from_scenario(cfg);
    let mut mob_rng = rng::stream(seed, DOMAIN_MOBILITY, 0);
    let trajectory = simulate_trajectory(&params, cfg.su_count, periods, cfg.period_s, &mut mob_rng);

    let per_period: Vec<Vec<CovarianceMatrix>> = trajectory
        .par_iter()
        .enumerate()
        .map(|(u, positions)| {
            let active = policy.label(u / lambda) == 1;
            let mut r = rng::stream(seed, DOMAIN_SIGNAL, u as u64);
            generate_period(cfg, positions, active, u as u64, &mut r)?
                .iter()
                .map(covariance)
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut by_su: Vec<Vec<SampleSequence>> = Vec::with_capacity(cfg.su_count);
    for s in 0..cfg.su_count {
        let stream = per_period
            .iter()
            .enumerate()
            .map(|(u, cms)| (cms[s].clone(), policy.label(u / lambda)));
        by_su.push(assemble_sequences(stream, lambda)?);
    }
    let samples = (0..count)
        .map(|k| {
            let per_su: Vec<SampleSequence> = by_su.iter().map(|seqs| seqs[k].clone()).collect();
            CssSample {
                label: per_su[0].label,
                per_su,
            }
        })
        .collect();
    Ok(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelLayout {
    /// Real part, imaginary part, magnitude.
    RealImagMagnitude,
    RealImag,
}

impl ChannelLayout {
    pub fn channels(self) -> usize {
        match self {
            Self::RealImagMagnitude => 3,
            Self::RealImag => 2,
        }
    }
}

/// Converts a sequence into a `[lambda, side, side, C]` tensor. Each CM is
/// divided by `scale`, zero-padded at the bottom/right to `side x side`, and
/// split into channel planes.
pub fn to_channel_planes(
    seq: &SampleSequence,
    side: usize,
    layout: ChannelLayout,
    scale: f64,
) -> Result<Tensor> {
    let m = seq.dim();
    if m > side {
        return Err(Error::Config(format!("{m} antennas do not fit a {side}x{side} input")));
    }
    let c = layout.channels();
    let frame = side * side * c;
    let mut data = vec![0.0; seq.len() * frame];
    for (t, cm) in seq.cms.iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                let v = cm.get(i, j) / scale;
                let base = t * frame + (i * side + j) * c;
                data[base] = v.re;
                data[base + 1] = v.im;
                if c == 3 {
                    data[base + 2] = v.norm();
                }
            }
        }
    }
    Ok(Tensor::new(vec![seq.len(), side, side, c], data)?)
}

/// Per-channel shift and scale estimated on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    /// Welford accumulation over every element of every plane tensor.
    pub fn fit<'a>(planes: impl IntoIterator<Item = &'a Tensor>, channels: usize) -> Self {
        let mut count = 0u64;
        let mut mean = vec![0.0; channels];
        let mut m2 = vec![0.0; channels];
        for p in planes {
            for px in p.data().chunks(channels) {
                count += 1;
                for ch in 0..channels {
                    let delta = px[ch] - mean[ch];
                    mean[ch] += delta / count as f64;
                    m2[ch] += delta * (px[ch] - mean[ch]);
                }
            }
        }
        let std = m2
            .iter()
            .map(|v| {
                let s = if count > 0 { (v / count as f64).sqrt() } else { 0.0 };
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, planes: &mut Tensor) {
        let c = self.mean.len();
        for px in planes.data_mut().chunks_mut(c) {
            for ch in 0..c {
                px[ch] = (px[ch] - self.mean[ch]) / self.std[ch];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub config_hash: String,
    pub su_count: usize,
    pub antennas: usize,
    pub samples_per_period: usize,
    pub sequence_len: usize,
    pub count: usize,
    pub policy: LabelPolicy,
    pub seed: u64,
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scenario: ScenarioConfig,
    pub policy: LabelPolicy,
    pub seed: u64,
    pub samples: Vec<CssSample>,
}

impl Dataset {
    pub fn generate(scenario: &ScenarioConfig, count: usize, policy: LabelPolicy, seed: u64) -> Result<Self> {
        Ok(Self {
            scenario: scenario.clone(),
            policy,
            seed,
            samples: generate_samples(scenario, count, policy, seed)?,
        })
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            format_version: FORMAT_VERSION,
            config_hash: self.scenario.content_hash(),
            su_count: self.scenario.su_count,
            antennas: self.scenario.antennas,
            samples_per_period: self.scenario.samples_per_period,
            sequence_len: self.scenario.sequence_len,
            count: self.samples.len(),
            policy: self.policy,
            seed: self.seed,
            scenario: self.scenario.clone(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let mut out = Vec::with_capacity(12 + header.len() + self.samples.len() * record_len(&self.header()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for sample in &self.samples {
            out.push(sample.label);
            out.extend_from_slice(&sample.start_period().to_le_bytes());
            for seq in &sample.per_su {
                for cm in &seq.cms {
                    for z in &cm.entries {
                        out.extend_from_slice(&z.re.to_le_bytes());
                        out.extend_from_slice(&z.im.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], expected: Option<&ScenarioConfig>) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Parse("not a dataset container (bad magic)".into()));
        }
        let hlen = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let header: DatasetHeader = serde_json::from_slice(cur.take(hlen)?)
            .map_err(|e| Error::Parse(format!("dataset header: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Version(format!("unsupported dataset format {}", header.format_version)));
        }
        if header.scenario.content_hash() != header.config_hash {
            return Err(Error::Parse("header hash does not match its scenario".into()));
        }
        if let Some(cfg) = expected {
            if cfg.content_hash() != header.config_hash {
                return Err(Error::Version(format!(
                    "dataset was generated for config {} but the current config hashes to {}",
                    header.config_hash,
                    cfg.content_hash()
                )));
            }
        }
        let scenario = &header.scenario;
        if (scenario.su_count, scenario.antennas, scenario.sequence_len)
            != (header.su_count, header.antennas, header.sequence_len)
        {
            return Err(Error::Parse("header dimensions disagree with its scenario".into()));
        }
        let payload = bytes.len() - cur.pos;
        let expected_len = header.count * record_len(&header);
        if payload != expected_len {
            return Err(Error::Parse(format!(
                "payload holds {payload} bytes but the header announces {} samples ({expected_len} bytes)",
                header.count
            )));
        }
        let (m, lambda) = (header.antennas, header.sequence_len);
        let mut samples = Vec::with_capacity(header.count);
        for _ in 0..header.count {
            let label = cur.take(1)?[0];
            if label > 1 {
                return Err(Error::Parse(format!("invalid label {label}")));
            }
            let start = cur.u64()?;
            let mut per_su = Vec::with_capacity(header.su_count);
            for s in 0..header.su_count {
                let mut cms = Vec::with_capacity(lambda);
                for t in 0..lambda {
                    let mut entries = Vec::with_capacity(m * m);
                    for _ in 0..m * m {
                        let re = cur.f64()?;
                        let im = cur.f64()?;
                        entries.push(Complex64::new(re, im));
                    }
                    cms.push(CovarianceMatrix {
                        dim: m,
                        entries,
                        period_index: start + t as u64,
                        su_index: s,
                    });
                }
                per_su.push(SampleSequence { cms, label });
            }
            samples.push(CssSample { per_su, label });
        }
        Ok(Self {
            scenario: header.scenario,
            policy: header.policy,
            seed: header.seed,
            samples,
        })
    }

    /// One CSV row per SU sequence: `sample,label,su,period_start,period_end`.
    pub fn index_csv(&self) -> String {
        let mut out = String::from("sample,label,su,period_start,period_end\n");
        for (k, sample) in self.samples.iter().enumerate() {
            for (s, seq) in sample.per_su.iter().enumerate() {
                let first = seq.cms.first().map_or(0, |c| c.period_index);
                let last = seq.cms.last().map_or(0, |c| c.period_index);
                out.push_str(&format!("{k},{},{s},{first},{last}\n", seq.label));
            }
        }
        out
    }
}

pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&dataset.to_bytes())?;
    Ok(())
}

pub fn load_dataset(path: &Path, expected: Option<&ScenarioConfig>) -> Result<Dataset> {
    Dataset::from_bytes(&fs::read(path)?, expected)
}

/// Reads only the header of a dataset container.
pub fn load_dataset_header(path: &Path) -> Result<DatasetHeader> {
    let mut f = fs::File::open(path)?;
    let mut head = [0u8; 12];
    f.read_exact(&mut head)
        .map_err(|_| Error::Parse("dataset container truncated".into()))?;
    if &head[..8] != MAGIC {
        return Err(Error::Parse("not a dataset container (bad magic)".into()));
    }
    let mut header = vec![0u8; u32::from_le_bytes(head[8..].try_into().unwrap()) as usize];
    f.read_exact(&mut header)
        .map_err(|_| Error::Parse("dataset header truncated".into()))?;
    let header: DatasetHeader =
        serde_json::from_slice(&header).map_err(|e| Error::Parse(format!("dataset header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Version(format!("unsupported dataset format {}", header.format_version)));
    }
    Ok(header)
}

fn record_len(h: &DatasetHeader) -> usize {
    1 + 8 + h.su_count * h.sequence_len * h.antennas * h.antennas * 16
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Parse(format!("unexpected end of data at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
