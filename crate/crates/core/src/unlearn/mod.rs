//! Unlearning procedures. Each takes the trained model and a [`ForgetSplit`]
//! and returns a new model together with the wall time of the procedure
//! itself; inputs are never modified.

mod mislabel;
mod retrain;
mod scrub;
mod ssd;
mod teacher;
mod unsir;

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{ForgetSplit, Scenario};
use crate::error::{Error, Result};
use crate::model::{Classifier, TrainConfig};

pub use mislabel::{mislabel, relabel_forget_set, MislabelConfig};
pub use retrain::{retrain, RetrainConfig};
pub use scrub::{mean_forget_kl, scrub, scrub_max_step, ScrubConfig};
pub use ssd::{ssd, ssd_dampen, SsdConfig};
pub use teacher::{incompetent_teacher, TeacherConfig};
pub use unsir::{noise_objective, optimize_noise, unsir, NoiseBatch, UnsirConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct UnlearnResult {
    pub model: Classifier,
    pub wall_time_seconds: f64,
}

pub(crate) fn timed(f: impl FnOnce() -> Result<Classifier>) -> Result<UnlearnResult> {
    let start = Instant::now();
    let model = f()?;
    Ok(UnlearnResult { model, wall_time_seconds: start.elapsed().as_secs_f64() })
}

/// Stable identifiers used in config files and report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Retrain,
    Ssd,
    Teacher,
    Scrub,
    Unsir,
    Mislabel,
}

impl MethodId {
    pub const ALL: [MethodId; 6] =
        [MethodId::Retrain, MethodId::Ssd, MethodId::Teacher, MethodId::Scrub, MethodId::Unsir, MethodId::Mislabel];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Retrain => "retrain",
            MethodId::Ssd => "ssd",
            MethodId::Teacher => "teacher",
            MethodId::Scrub => "scrub",
            MethodId::Unsir => "unsir",
            MethodId::Mislabel => "mislabel",
        }
    }

    /// Row label in results tables.
    pub fn display_name(self) -> &'static str {
        match self {
            MethodId::Retrain => "Retrain",
            MethodId::Ssd => "SSD",
            MethodId::Teacher => "Incompetent Teacher",
            MethodId::Scrub => "SCRUB",
            MethodId::Unsir => "UNSIR",
            MethodId::Mislabel => "Mislabel",
        }
    }

    pub fn supports(self, scenario: Scenario) -> bool {
        match self {
            MethodId::Unsir => scenario == Scenario::FullClass,
            _ => true,
        }
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A method identifier together with its hyperparameters. Omitted fields take
/// the method's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum MethodConfig {
    Retrain(RetrainConfig),
    Ssd(SsdConfig),
    Teacher(TeacherConfig),
    Scrub(ScrubConfig),
    Unsir(UnsirConfig),
    Mislabel(MislabelConfig),
}

impl MethodConfig {
    pub fn default_for(id: MethodId) -> Self {
        match id {
            MethodId::Retrain => MethodConfig::Retrain(RetrainConfig::default()),
            MethodId::Ssd => MethodConfig::Ssd(SsdConfig::default()),
            MethodId::Teacher => MethodConfig::Teacher(TeacherConfig::default()),
            MethodId::Scrub => MethodConfig::Scrub(ScrubConfig::default()),
            MethodId::Unsir => MethodConfig::Unsir(UnsirConfig::default()),
            MethodId::Mislabel => MethodConfig::Mislabel(MislabelConfig::default()),
        }
    }

    pub fn id(&self) -> MethodId {
        match self {
            MethodConfig::Retrain(_) => MethodId::Retrain,
            MethodConfig::Ssd(_) => MethodId::Ssd,
            MethodConfig::Teacher(_) => MethodId::Teacher,
            MethodConfig::Scrub(_) => MethodId::Scrub,
            MethodConfig::Unsir(_) => MethodId::Unsir,
            MethodConfig::Mislabel(_) => MethodId::Mislabel,
        }
    }

    pub fn check_scenario(&self, scenario: Scenario) -> Result<()> {
        if self.id().supports(scenario) {
            Ok(())
        } else {
            Err(Error::Incompatible { method: self.id().to_string(), scenario: scenario.to_string() })
        }
    }

    /// Replaces every seed in the method's hyperparameters with `seed`.
    pub fn reseed(&mut self, seed: u64) {
        match self {
            MethodConfig::Retrain(c) => c.seed = Some(seed),
            MethodConfig::Ssd(_) => {}
            MethodConfig::Teacher(c) => {
                c.incompetent_seed = seed;
                c.seed = seed;
            }
            MethodConfig::Scrub(c) => c.seed = seed,
            MethodConfig::Unsir(c) => c.seed = seed,
            MethodConfig::Mislabel(c) => {
                c.relabel_seed = seed;
                c.seed = seed;
            }
        }
    }

    /// Runs the configured method. `baseline_train` fills in any retraining
    /// settings the method config leaves open.
    pub fn run(&self, model: &Classifier, split: &ForgetSplit, baseline_train: &TrainConfig) -> Result<UnlearnResult> {
        self.check_scenario(split.scenario)?;
        match self {
            MethodConfig::Retrain(c) => retrain(model.architecture(), split, &c.resolve(baseline_train)),
            MethodConfig::Ssd(c) => ssd(model, split, c),
            MethodConfig::Teacher(c) => incompetent_teacher(model, split, c),
            MethodConfig::Scrub(c) => scrub(model, split, c),
            MethodConfig::Unsir(c) => unsir(model, split, c),
            MethodConfig::Mislabel(c) => mislabel(model, split, c),
        }
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be non-negative, got {v}")))
    }
}
