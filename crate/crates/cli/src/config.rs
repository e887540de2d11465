use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use extsum::model::{Ablation, ModelConfig};
use extsum::pipeline::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Files a run reads and writes. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Model directory written by `train` and read by `evaluate`.
    pub checkpoint: Option<PathBuf>,
    /// Directory for `report.json` and `buckets.tsv`.
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Overrides the context flags (and forces the concat decoder unless
    /// it is `bsl+l+g`).
    pub ablation: Option<Ablation>,
    pub precision: Precision,
}

impl RunConfig {
    /// Reads a JSON (`.json`) or TOML (anything else) config file.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .with_context(|| format!("invalid config {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut config.paths.train,
            &mut config.paths.valid,
            &mut config.paths.test,
            &mut config.paths.embeddings,
            &mut config.paths.checkpoint,
            &mut config.paths.reports,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    /// Model settings after the ablation override.
    pub fn model_config(&self) -> ModelConfig {
        match self.ablation {
            Some(a) => self.model.clone().with_ablation(a),
            None => self.model.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model_config().validate()?;
        self.train.validate()?;
        Ok(())
    }
}

/// Returns the configured path, failing when it is unset or missing on disk.
pub fn existing<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    let Some(p) = path else {
        bail!("config is missing paths.{key}");
    };
    if !p.exists() {
        bail!("paths.{key} does not exist: {}", p.display());
    }
    Ok(p)
}

pub fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .with_context(|| format!("config is missing paths.{key}"))
}
