//! Run configuration: one TOML document with `[scenario]`, `[model]`,
//! `[train]`, `[eval]` and `[data]` sections, layered over a named profile.

use serde::{Deserialize, Serialize};

use crate::detect::EvalConfig;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::scenario::ScenarioConfig;
use crate::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            other => Err(Error::Config(format!("unknown profile {other:?} (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Samples written by data generation (training plus validation).
    pub train_samples: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { train_samples: 4000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub data: DataConfig,
}

impl RunConfig {
    pub fn profile(p: Profile) -> Self {
        match p {
            Profile::Desk => Self {
                scenario: ScenarioConfig::desk(),
                model: ModelConfig::desk(),
                train: TrainConfig::desk(),
                eval: EvalConfig::default(),
                data: DataConfig::default(),
            },
            Profile::Paper => Self {
                scenario: ScenarioConfig::paper(),
                model: ModelConfig::paper(),
                train: TrainConfig::paper(),
                eval: EvalConfig {
                    test_samples: 15_000,
                    ..EvalConfig::default()
                },
                data: DataConfig { train_samples: 104_000 },
            },
        }
    }

    /// Applies a TOML document on top of a profile; keys absent from the
    /// document keep the profile value, unknown keys are rejected.
    pub fn from_toml_str(text: &str, base: Profile) -> Result<Self> {
        Self::profile(base).overlay(text)
    }

    /// Applies a TOML document on top of this configuration.
    pub fn overlay(&self, text: &str) -> Result<Self> {
        let overlay: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
        let base = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        let merged = merge(base, overlay);
        let cfg: Self = merged.try_into().map_err(|e: toml::de::Error| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.eval.validate()?;
        if self.data.train_samples == 0 {
            return Err(Error::Config("data.train_samples must be at least 1".into()));
        }
        if self.model.su_count != self.scenario.su_count || self.model.sequence_len != self.scenario.sequence_len {
            return Err(Error::Config(format!(
                "model (S={}, lambda={}) and scenario (S={}, lambda={}) disagree",
                self.model.su_count, self.model.sequence_len, self.scenario.su_count, self.scenario.sequence_len
            )));
        }
        if self.scenario.antennas > self.model.side {
            return Err(Error::Config(format!(
                "{} antennas exceed the model plane side {}",
                self.scenario.antennas, self.model.side
            )));
        }
        Ok(())
    }
}

fn merge(mut base: toml::Table, overlay: toml::Table) -> toml::Table {
    for (k, v) in overlay {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                base.insert(k, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate() {
        RunConfig::profile(Profile::Desk).validate().unwrap();
        let paper = RunConfig::profile(Profile::Paper);
        paper.validate().unwrap();
        assert_eq!(
            (paper.scenario.sequence_len, paper.scenario.su_count, paper.scenario.antennas, paper.scenario.samples_per_period),
            (20, 3, 15, 100)
        );
        assert_eq!((paper.data.train_samples, paper.eval.test_samples), (104_000, 15_000));
    }

    #[test]
    fn overlay_keeps_profile_values() {
        let cfg = RunConfig::from_toml_str("[train]\nepochs = 7\n[scenario]\nseed = 11\n", Profile::Desk).unwrap();
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.scenario.seed, 11);
        assert_eq!(cfg.scenario.antennas, 8);
        assert_eq!(cfg.train.lr, TrainConfig::desk().lr);
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::profile(Profile::Desk);
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text, Profile::Paper).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            "[train]\nepochz = 3\n",
            "[train]\nlr = -1.0\n",
            "[scenario]\nsequence_len = 5\n",
            "[bogus]\nx = 1\n",
            "not toml at all [",
        ] {
            assert!(matches!(RunConfig::from_toml_str(bad, Profile::Desk), Err(Error::Config(_))), "{bad}");
        }
        assert!("fast".parse::<Profile>().is_err());
    }
}
