use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{DatasetSpec, ExperimentConfig};
use super::records::{Environment, ExperimentRecord, SCHEMA_VERSION};
use crate::data::{data_dir_from_env, load_dataset_from, DataPartition};
use crate::error::{Error, Result};
use crate::metrics::evaluate_all;
use crate::unlearn::{MethodConfig, RetrainConfig};
use crate::model::{load_checkpoint, random_init, save_checkpoint, train, Architecture, Classifier, TrainConfig};

/// Directory for cached baseline checkpoints.
pub const CACHE_DIR_ENV: &str = "UNLEARN_CACHE_DIR";

/// Per-key slots: concurrent requests for the same key wait for one producer.
/// Producers must not use rayon, since a worker holding a slot could steal a
/// job that waits on it.
struct Memo<T> {
    slots: Mutex<HashMap<String, Arc<Mutex<Option<Arc<T>>>>>>,
}

impl<T> Memo<T> {
    fn new() -> Self {
        Self { slots: Mutex::new(HashMap::new()) }
    }

    fn get_or_try(&self, key: &str, make: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
        let slot = {
            let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
            slots.entry(key.to_string()).or_default().clone()
        };
        let mut value = slot.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(v) = value.as_ref() {
            return Ok(v.clone());
        }
        let v = Arc::new(make()?);
        *value = Some(v.clone());
        Ok(v)
    }
}

/// Executes experiments. Datasets and baselines are shared between runs of
/// one runner; baselines are also kept on disk when a cache directory is set.
pub struct Runner {
    cache_dir: Option<PathBuf>,
    data_dir: PathBuf,
    datasets: Memo<DataPartition>,
    baselines: Memo<Classifier>,
}

impl Default for Runner {
    fn default() -> Self {
        Self::new(None)
    }
}

impl Runner {
    pub fn new(cache_dir: Option<PathBuf>) -> Self {
        Self { cache_dir, data_dir: data_dir_from_env(), datasets: Memo::new(), baselines: Memo::new() }
    }

    /// Cache directory from [`CACHE_DIR_ENV`], if set.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
    }

    pub fn with_data_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.data_dir = dir.into();
        self
    }

    pub fn cache_dir(&self) -> Option<&Path> {
        self.cache_dir.as_deref()
    }

    fn dataset(&self, spec: &DatasetSpec) -> Result<Arc<DataPartition>> {
        let key = serde_json::to_string(spec)?;
        self.datasets.get_or_try(&key, || load_dataset_from(&spec.name, &spec.options, &self.data_dir))
    }

    fn baseline(&self, key: &str, arch: &Architecture, data: &DataPartition, cfg: &TrainConfig) -> Result<Arc<Classifier>> {
        self.baselines.get_or_try(key, || {
            let path = self.cache_dir.as_ref().map(|d| d.join(format!("baseline-{key}.ckpt")));
            if let Some(p) = path.as_ref().filter(|p| p.exists()) {
                let model = load_checkpoint(p)?;
                if model.architecture() == arch {
                    return Ok(model);
                }
            }
            let model = train(&random_init(arch, cfg.seed)?, &data.train, cfg)?;
            if let Some(p) = path {
                std::fs::create_dir_all(p.parent().unwrap_or(Path::new(".")))?;
                save_checkpoint(&model, &p)?;
            }
            Ok(model)
        })
    }

    pub fn run_experiment(&self, config: &ExperimentConfig) -> Result<ExperimentRecord> {
        config.validate()?;
        let started_at = chrono::Utc::now();
        let data = self.dataset(&config.dataset)?;
        let arch = config.architecture.resolve(&data)?;
        let split = config.scenario.build(&data)?;

        let mut resolved = config.clone();
        resolved.architecture.input_dim = Some(arch.input_dim);
        resolved.architecture.num_classes = Some(arch.num_classes);
        if let MethodConfig::Retrain(c) = &resolved.method {
            resolved.method = MethodConfig::Retrain(RetrainConfig::pinned(&c.resolve(&resolved.baseline_train)));
        }

        let key = baseline_key(&resolved.dataset, &arch, &resolved.baseline_train)?;
        let baseline = self.baseline(&key, &arch, &data, &resolved.baseline_train)?;
        let result = resolved.method.run(&baseline, &split, &resolved.baseline_train)?;
        let incompetent = random_init(&arch, resolved.metric_seed)?;
        let seed = resolved.metric_seed;
        let report = evaluate_all(&result.model, &baseline, &split, &data.test, &incompetent, result.wall_time_seconds, seed)?;
        let baseline_report = evaluate_all(&baseline, &baseline, &split, &data.test, &incompetent, 0.0, seed)?;
        Ok(ExperimentRecord {
            schema_version: SCHEMA_VERSION,
            config: resolved,
            report,
            baseline_report,
            baseline_key: key,
            started_at,
            environment: Environment::current(),
        })
    }

    /// Runs every config with at most `parallelism` concurrent runs. Results
    /// are in input order; a failing run does not stop the others.
    pub fn run_grid(&self, configs: &[ExperimentConfig], parallelism: usize) -> Result<Vec<Result<ExperimentRecord>>> {
        if parallelism == 0 {
            return Err(Error::invalid("parallelism must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        Ok(pool.install(|| configs.par_iter().map(|c| self.run_experiment(c)).collect()))
    }
}

/// Hex SHA-256 of the inputs that determine a baseline model.
pub fn baseline_key(dataset: &DatasetSpec, arch: &Architecture, train: &TrainConfig) -> Result<String> {
    #[derive(Serialize)]
    struct Key<'a> {
        dataset: &'a DatasetSpec,
        architecture: &'a Architecture,
        baseline_train: &'a TrainConfig,
    }
    let json = serde_json::to_vec(&Key { dataset, architecture: arch, baseline_train: train })?;
    Ok(hex::encode(Sha256::digest(&json)))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    Runner::from_env().run_experiment(config)
}

pub fn run_grid(configs: &[ExperimentConfig], parallelism: usize) -> Result<Vec<Result<ExperimentRecord>>> {
    Runner::from_env().run_grid(configs, parallelism)
}
