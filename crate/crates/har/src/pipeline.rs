//! The end-to-end steps shared by the CLI commands and the acceptance tests:
//! recordings -> windows -> subject split -> features -> standardization ->
//! training -> evaluation.

use anyhow::{ensure, Context, Result};
use kanhar_core::dataset::{make_windows, split_by_subject, synthetic_recordings, Activity, LabeledDataset, Recording};
use kanhar_core::features::{extract_all, FeatureVector, Standardizer, FEATURE_COUNT};
use kanhar_core::kan::KanNetwork;
use kanhar_core::optim::{train_with_callback, EpochRecord, TrainHistory};
use log::info;

use crate::config::{DataSource, PipelineConfig};
use crate::loader::{load_recordings, ChannelConfig};

/// Standardized train/test features plus the fitted transform.
#[derive(Debug, Clone)]
pub struct PreparedFeatures {
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
    pub standardizer: Standardizer,
}

impl PreparedFeatures {
    pub fn train_set(&self) -> LabeledDataset {
        LabeledDataset::from_feature_vectors(&self.train)
    }

    pub fn test_set(&self) -> LabeledDataset {
        LabeledDataset::from_feature_vectors(&self.test)
    }
}

pub fn class_names(cfg: &PipelineConfig) -> Vec<&'static str> {
    Activity::ALL.iter().take(cfg.class_count()).map(|a| a.name()).collect()
}

/// Recordings from the configured source.
pub fn source_recordings(cfg: &PipelineConfig) -> Result<Vec<Recording>> {
    match cfg.data.source {
        DataSource::Motionsense => {
            let channels = ChannelConfig {
                columns: cfg.data.columns.clone(),
                delimiter: u8::try_from(cfg.data.delimiter).context("delimiter must be a single-byte character")?,
            };
            let loaded = load_recordings(&cfg.data.root, &channels)?;
            info!(
                "loaded {} recordings from {} ({} rows dropped)",
                loaded.recordings.len(),
                cfg.data.root.display(),
                loaded.dropped_rows
            );
            Ok(loaded.recordings)
        }
        DataSource::Synthetic => Ok(synthetic_recordings(
            &cfg.synthetic_config()?,
            cfg.synthetic.samples_per_recording,
        )?),
    }
}

/// Fits the standardizer on `train` only and applies it to both sets.
pub fn standardize(
    train: &[FeatureVector],
    test: &[FeatureVector],
    cfg: &PipelineConfig,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>, Standardizer)> {
    ensure!(
        train.iter().all(|f| cfg.split.train.contains(&f.subject_id)),
        "standardizer input contains non-training subjects"
    );
    let s = Standardizer::fit(train).context("no training windows to fit the standardizer on")?;
    let apply = |v: &[FeatureVector]| v.iter().map(|f| s.apply(f)).collect::<kanhar_core::Result<Vec<_>>>();
    Ok((apply(train)?, apply(test)?, s))
}

pub fn prepare_features(cfg: &PipelineConfig) -> Result<PreparedFeatures> {
    cfg.validate()?;
    let recordings = source_recordings(cfg)?;
    let windows = make_windows(&recordings, cfg.window.length, cfg.window.stride)?;
    let (train_w, test_w) = split_by_subject(&windows, &cfg.split_config()?)?;
    let train_raw = extract_all(&train_w)?;
    let test_raw = extract_all(&test_w)?;
    let (train, test, standardizer) = standardize(&train_raw, &test_raw, cfg)?;
    Ok(PreparedFeatures {
        train,
        test,
        standardizer,
    })
}

pub fn build_network(cfg: &PipelineConfig) -> Result<KanNetwork> {
    let net_cfg = cfg.network_config(FEATURE_COUNT, cfg.class_count());
    Ok(KanNetwork::new(&net_cfg, cfg.require_seed()?)?)
}

pub fn train_network<F>(
    cfg: &PipelineConfig,
    net: &mut KanNetwork,
    data: &LabeledDataset,
    on_epoch: F,
) -> Result<TrainHistory>
where
    F: FnMut(&EpochRecord, &KanNetwork),
{
    Ok(train_with_callback(net, data, &cfg.train_config()?, on_epoch)?)
}

/// Per-class window counts, for progress output.
pub fn class_counts(rows: &[FeatureVector], classes: usize) -> Vec<usize> {
    let mut c = vec![0; classes];
    for f in rows {
        if let Some(slot) = c.get_mut(f.activity.index()) {
            *slot += 1;
        }
    }
    c
}
