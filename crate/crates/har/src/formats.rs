//! On-disk formats: network checkpoints (JSON), feature matrices,
//! standardizer parameters and training history (CSV).
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so every file reproduces the in-memory `f64` values exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use kanhar_core::dataset::Activity;
use kanhar_core::features::{feature_column_names, FeatureVector, Standardizer, FEATURE_COUNT};
use kanhar_core::kan::{KanLayer, KanNetwork};
use kanhar_core::optim::{EpochRecord, Phase};
use kanhar_core::spline::SplineGrid;
use serde::{Deserialize, Serialize};

pub const CHECKPOINT_FORMAT: &str = "kanhar-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub grid_size: usize,
    pub order: usize,
    pub range_lo: f64,
    pub range_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub d_in: usize,
    pub d_out: usize,
    /// Input-major edges, each `[coeffs.., w_base, w_spline, gate]`, then the biases.
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dims: Vec<usize>,
    pub grid: GridSpec,
    pub seed: Option<u64>,
    pub layers: Vec<LayerRecord>,
}

impl Checkpoint {
    pub fn from_network(net: &KanNetwork, seed: Option<u64>) -> Self {
        let g = net.layers()[0].grid();
        let (range_lo, range_hi) = g.range();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dims: net.dims(),
            grid: GridSpec {
                grid_size: g.grid_size(),
                order: g.order(),
                range_lo,
                range_hi,
            },
            seed,
            layers: net
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    d_in: l.d_in(),
                    d_out: l.d_out(),
                    params: l.params().to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_network(&self) -> Result<KanNetwork> {
        ensure!(
            self.format == CHECKPOINT_FORMAT,
            "not a checkpoint (format '{}')",
            self.format
        );
        ensure!(
            self.version == CHECKPOINT_VERSION,
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            self.version
        );
        let grid = SplineGrid::new(
            self.grid.grid_size,
            self.grid.order,
            self.grid.range_lo,
            self.grid.range_hi,
        )?;
        let layers = self
            .layers
            .iter()
            .map(|l| KanLayer::from_params(l.d_in, l.d_out, grid.clone(), l.params.clone()))
            .collect::<kanhar_core::Result<Vec<_>>>()?;
        let net = KanNetwork::from_layers(layers)?;
        ensure!(
            net.dims() == self.dims,
            "layer shapes {:?} disagree with declared dims {:?}",
            net.dims(),
            self.dims
        );
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("cannot parse checkpoint {}", path.display()))
    }
}

/// Header of the feature matrix files.
pub fn feature_header() -> Vec<String> {
    let mut h = feature_column_names();
    h.push("subject_id".into());
    h.push("activity".into());
    h
}

pub fn write_features(path: &Path, rows: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(feature_header())?;
    for f in rows {
        let mut rec: Vec<String> = f.values.iter().map(|v| v.to_string()).collect();
        rec.push(f.subject_id.to_string());
        rec.push(f.activity.name().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    ensure!(header == feature_header(), "{}: unexpected header", path.display());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("{} row {}", path.display(), i + 1);
        let mut values = [0.0; FEATURE_COUNT];
        for (j, v) in values.iter_mut().enumerate() {
            *v = rec[j].parse().with_context(ctx)?;
        }
        out.push(FeatureVector {
            values,
            subject_id: rec[FEATURE_COUNT].parse().with_context(ctx)?,
            activity: rec[FEATURE_COUNT + 1].parse::<Activity>().with_context(ctx)?,
        });
    }
    Ok(out)
}

pub fn write_standardizer(path: &Path, s: &Standardizer) -> Result<()> {
    let names = feature_column_names();
    ensure!(s.dim() == names.len(), "standardizer has {} columns", s.dim());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "mean", "std"])?;
    for ((n, m), sd) in names.iter().zip(&s.mean).zip(&s.std) {
        w.write_record([n.clone(), m.to_string(), sd.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_standardizer(path: &Path) -> Result<Standardizer> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (mut mean, mut std) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        mean.push(rec[1].parse()?);
        std.push(rec[2].parse()?);
    }
    ensure!(
        mean.len() == FEATURE_COUNT,
        "{}: expected {FEATURE_COUNT} rows",
        path.display()
    );
    Ok(Standardizer { mean, std })
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "phase", "mean_loss", "train_accuracy"])?;
    for h in history {
        w.write_record([
            h.epoch.to_string(),
            h.phase.to_string(),
            h.mean_loss.to_string(),
            h.train_accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let phase = match &rec[1] {
            "pretrain" => Phase::Pretrain,
            "finetune" => Phase::Finetune,
            other => bail!("unknown phase '{other}'"),
        };
        out.push(EpochRecord {
            epoch: rec[0].parse()?,
            phase,
            mean_loss: rec[2].parse()?,
            train_accuracy: rec[3].parse()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kanhar_core::kan::NetworkConfig;

    #[test]
    fn checkpoint_is_bit_exact() {
        let mut net = KanNetwork::new(&NetworkConfig::with_dims(&[4, 3, 2]), 99).unwrap();
        // values with long expansions
        net.layers_mut()[0].params_mut()[0] = 0.1 + 0.2;
        net.layers_mut()[1].params_mut()[3] = f64::MIN_POSITIVE;
        net.layers_mut()[1].params_mut()[4] = -1.0 / 3.0;
        let ckpt = Checkpoint::from_network(&net, Some(99));
        let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
        assert_eq!(back, ckpt);
        let restored = back.to_network().unwrap();
        for (a, b) in restored.layers().iter().zip(net.layers()) {
            let same = a
                .params()
                .iter()
                .zip(b.params())
                .all(|(x, y)| x.to_bits() == y.to_bits());
            assert!(same);
        }
    }

    #[test]
    fn checkpoint_rejects_inconsistent_shapes() {
        let net = KanNetwork::new(&NetworkConfig::with_dims(&[4, 3, 2]), 1).unwrap();
        let mut ckpt = Checkpoint::from_network(&net, None);
        ckpt.layers[1].params.pop();
        assert!(ckpt.to_network().is_err());
        let mut ckpt = Checkpoint::from_network(&net, None);
        ckpt.dims = vec![4, 3, 3];
        assert!(ckpt.to_network().is_err());
        let mut ckpt = Checkpoint::from_network(&net, None);
        ckpt.version = 7;
        assert!(ckpt.to_network().is_err());
    }
}
