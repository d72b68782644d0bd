use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{
    make_full_class_split, make_random_split, make_subclass_split, DataPartition, ForgetSplit, LoadOptions, Scenario,
};
use crate::error::{Error, Result};
use crate::model::{Architecture, TrainConfig};
use crate::unlearn::MethodConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub options: LoadOptions,
}

/// Hidden widths plus optional input/output sizes. Missing sizes are taken
/// from the dataset; given ones must agree with it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub hidden: Vec<usize>,
    pub input_dim: Option<usize>,
    pub num_classes: Option<usize>,
}

impl ArchitectureSpec {
    pub fn resolve(&self, data: &DataPartition) -> Result<Architecture> {
        let input_dim = data.feature_dim();
        if let Some(d) = self.input_dim {
            if d != input_dim {
                return Err(Error::Config(format!("architecture input_dim {d} but dataset features have width {input_dim}")));
            }
        }
        if let Some(k) = self.num_classes {
            if k != data.num_classes {
                return Err(Error::Config(format!("architecture num_classes {k} but dataset has {}", data.num_classes)));
            }
        }
        Architecture::new(input_dim, self.hidden.clone(), data.num_classes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let (needs_class, needs_fraction) = match self.kind {
            Scenario::FullClass => (true, false),
            Scenario::SubClass => (true, true),
            Scenario::Random => (false, true),
        };
        let check = |present: bool, needed: bool, field: &str| match (present, needed) {
            (false, true) => Err(Error::Config(format!("scenario `{}` needs `{field}`", self.kind))),
            (true, false) => Err(Error::Config(format!("scenario `{}` does not take `{field}`", self.kind))),
            _ => Ok(()),
        };
        check(self.target_class.is_some(), needs_class, "target_class")?;
        check(self.fraction.is_some(), needs_fraction, "fraction")
    }

    pub fn build(&self, data: &DataPartition) -> Result<ForgetSplit> {
        self.validate()?;
        match self.kind {
            Scenario::FullClass => make_full_class_split(data, self.target_class.unwrap_or_default()),
            Scenario::SubClass => make_subclass_split(
                data,
                self.target_class.unwrap_or_default(),
                self.fraction.unwrap_or_default(),
                self.seed,
            ),
            Scenario::Random => make_random_split(data, self.fraction.unwrap_or_default(), self.seed),
        }
    }
}

/// A single run: dataset, model, baseline training, what to forget and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Row label in reports; defaults to the method's display name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub architecture: ArchitectureSpec,
    #[serde(default)]
    pub baseline_train: TrainConfig,
    pub scenario: ScenarioSpec,
    pub method: MethodConfig,
    #[serde(default)]
    pub metric_seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without loading data.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.method.check_scenario(self.scenario.kind)?;
        self.baseline_train.validate()
    }

    pub fn row_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.id().display_name().to_string())
    }

    /// Replicate override: every seed except the dataset's is replaced.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.baseline_train.seed = seed;
        out.scenario.seed = seed;
        out.metric_seed = seed;
        out.method.reseed(seed);
        out
    }
}

/// Parses a grid document. Either a single experiment, or
///
/// ```toml
/// seeds = [0, 1]          # optional, one replicate per seed
/// [common]                # optional, merged under every experiment
/// [[experiment]]
/// ```
pub fn parse_grid(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let Some(list) = doc.remove("experiment") else {
        return Ok(vec![ExperimentConfig::from_toml(text)?]);
    };
    let common = match doc.remove("common") {
        Some(toml::Value::Table(t)) => t,
        Some(_) => return Err(Error::Config("`common` must be a table".into())),
        None => toml::Table::new(),
    };
    let seeds: Option<Vec<u64>> = match doc.remove("seeds") {
        Some(v) => Some(v.try_into().map_err(|e: toml::de::Error| Error::Config(format!("seeds: {e}")))?),
        None => None,
    };
    if let Some(key) = doc.keys().next() {
        return Err(Error::Config(format!("unknown grid key `{key}`")));
    }
    let toml::Value::Array(entries) = list else {
        return Err(Error::Config("`experiment` must be an array of tables".into()));
    };
    let mut out = Vec::new();
    for (i, entry) in entries.into_iter().enumerate() {
        let toml::Value::Table(entry) = entry else {
            return Err(Error::Config(format!("experiment {i} is not a table")));
        };
        let mut merged = common.clone();
        merge(&mut merged, entry);
        let cfg: ExperimentConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("experiment {i}: {e}")))?;
        match &seeds {
            Some(seeds) => out.extend(seeds.iter().map(|&s| cfg.with_seed(s))),
            None => out.push(cfg),
        }
    }
    Ok(out)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Loads a grid from a file, or from every `*.toml` file of a directory in
/// name order.
pub fn load_grid(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let read = |p: &Path| -> Result<Vec<ExperimentConfig>> {
        let text = std::fs::read_to_string(p)?;
        parse_grid(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
    };
    if !path.is_dir() {
        return read(path);
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        out.extend(read(&f)?);
    }
    Ok(out)
}
