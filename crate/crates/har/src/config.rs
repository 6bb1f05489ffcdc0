//! Pipeline configuration: one TOML document plus `key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use kanhar_core::dataset::{SplitConfig, SyntheticConfig};
use kanhar_core::kan::NetworkConfig;
use kanhar_core::optim::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds network initialization, shuffling and synthetic data.
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub data: DataSection,
    pub window: WindowSection,
    pub split: SplitSection,
    pub synthetic: SyntheticSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub gradcheck: GradCheckSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Motionsense,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub source: DataSource,
    pub root: PathBuf,
    pub columns: [String; 3],
    pub delimiter: char,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub length: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: Vec<u32>,
    pub test: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub class_count: usize,
    pub subjects: Vec<u32>,
    /// Length of each simulated recording, one per subject and class.
    pub samples_per_recording: usize,
    pub noise_std: f64,
    pub subject_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden: Vec<usize>,
    pub grid_size: usize,
    pub order: usize,
    pub range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub batch_size: usize,
    pub pretrain_lr: f64,
    pub finetune_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub shuffle: bool,
    /// Write an extra checkpoint every N epochs; 0 disables.
    pub checkpoint_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckSection {
    pub dims: Vec<usize>,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: Some(42),
            out_dir: PathBuf::from("out"),
            data: DataSection::default(),
            window: WindowSection::default(),
            split: SplitSection::default(),
            synthetic: SyntheticSection::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            gradcheck: GradCheckSection::default(),
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: DataSource::Motionsense,
            root: PathBuf::from("data/A_DeviceMotion_data"),
            columns: [
                "userAcceleration.x".into(),
                "userAcceleration.y".into(),
                "userAcceleration.z".into(),
            ],
            delimiter: ',',
        }
    }
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            length: kanhar_core::dataset::DEFAULT_WINDOW_LEN,
            stride: kanhar_core::dataset::DEFAULT_STRIDE,
        }
    }
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitConfig::motionsense_default();
        Self {
            train: d.train_subjects.into_iter().collect(),
            test: d.test_subjects.into_iter().collect(),
        }
    }
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let d = SyntheticConfig::default();
        Self {
            class_count: d.class_count,
            subjects: d.subjects,
            samples_per_recording: 1024,
            noise_std: d.noise_std,
            subject_variation: d.subject_variation,
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = NetworkConfig::default();
        Self {
            hidden: vec![64],
            grid_size: d.grid_size,
            order: d.order,
            range: [d.range.0, d.range.1],
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            pretrain_epochs: d.pretrain_epochs,
            finetune_epochs: d.finetune_epochs,
            batch_size: d.batch_size,
            pretrain_lr: d.pretrain_lr,
            finetune_lr: d.finetune_lr,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            weight_decay: d.weight_decay,
            shuffle: d.shuffle,
            checkpoint_every: 0,
        }
    }
}

impl Default for GradCheckSection {
    fn default() -> Self {
        Self {
            dims: vec![5, 4, 3],
            step: 1e-6,
            tolerance: 1e-4,
        }
    }
}

impl PipelineConfig {
    /// Parses a TOML document and applies dotted-key overrides such as
    /// `train.batch_size=32`. Values are read as TOML, falling back to a
    /// plain string.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse().context("config is not valid TOML")?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: Self = doc.try_into().context("config does not match the expected schema")?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml_str(&text, overrides).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| anyhow!("a seed is required: set `seed` in the config or pass --seed"))
    }

    pub fn split_config(&self) -> Result<SplitConfig> {
        Ok(SplitConfig::new(
            self.split.train.iter().copied(),
            self.split.test.iter().copied(),
        )?)
    }

    /// Network shape for `input_dim` features and `classes` outputs.
    pub fn network_config(&self, input_dim: usize, classes: usize) -> NetworkConfig {
        let mut dims = vec![input_dim];
        dims.extend(&self.model.hidden);
        dims.push(classes);
        NetworkConfig {
            dims,
            grid_size: self.model.grid_size,
            order: self.model.order,
            range: (self.model.range[0], self.model.range[1]),
        }
    }

    pub fn class_count(&self) -> usize {
        match self.data.source {
            DataSource::Motionsense => kanhar_core::dataset::Activity::ALL.len(),
            DataSource::Synthetic => self.synthetic.class_count,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        Ok(TrainConfig {
            pretrain_epochs: t.pretrain_epochs,
            finetune_epochs: t.finetune_epochs,
            batch_size: t.batch_size,
            pretrain_lr: t.pretrain_lr,
            finetune_lr: t.finetune_lr,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            weight_decay: t.weight_decay,
            seed: self.require_seed()?,
            shuffle: t.shuffle,
        })
    }

    pub fn synthetic_config(&self) -> Result<SyntheticConfig> {
        let s = &self.synthetic;
        Ok(SyntheticConfig {
            class_count: s.class_count,
            windows_per_class: 0,
            subjects: s.subjects.clone(),
            window_len: self.window.length,
            noise_std: s.noise_std,
            subject_variation: s.subject_variation,
            seed: self.require_seed()?,
        })
    }

    /// Checks everything that can be checked without touching the file system.
    pub fn validate(&self) -> Result<()> {
        self.split_config()?;
        if self.window.length < 2 || self.window.stride < 1 {
            bail!("window length must be >= 2 and stride >= 1");
        }
        if self.train.batch_size == 0 {
            bail!("train.batch_size must be at least 1");
        }
        if self.model.hidden.contains(&0) {
            bail!("model.hidden widths must be positive");
        }
        self.network_config(1, 1).grid()?;
        Ok(())
    }
}

fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override '{spec}' is not of the form key=value"))?;
    let value = parse_value(raw.trim());
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields at least one part");
    let mut table = doc;
    for part in parents {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("override '{spec}': '{part}' is not a table"))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
