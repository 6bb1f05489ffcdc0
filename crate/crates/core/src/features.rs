//! Time-domain features of tri-axial accelerometer windows and z-score
//! standardization.
//!
//! Each axis contributes twelve statistics, in this order: mean absolute
//! value, standard deviation, skewness, kurtosis, Shannon entropy, RMS,
//! maximum absolute value, peak-to-peak, crest factor, clearance factor,
//! shape factor and impulse factor. A window therefore maps to 36 values,
//! axis-major (`x` features first).
//!
//! Conventions worth knowing:
//! - moments use the population divisor `N`; kurtosis is the excess form;
//! - entropy is taken over a 16-bin histogram spanning the axis' own
//!   `[min, max]`, natural log, `0 log 0 = 0`;
//! - clearance is `((1/N) Σ sqrt|x_i|)^2`;
//! - a constant axis has zero spread, skewness, kurtosis and entropy, and its
//!   crest/shape/impulse factors are 1 (or 0 when the axis is all zeros).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Activity;
use crate::error::{bail, Result};

pub const AXES: [&str; 3] = ["x", "y", "z"];
pub const FEATURES_PER_AXIS: usize = 12;
pub const FEATURE_COUNT: usize = FEATURES_PER_AXIS * 3;
pub const ENTROPY_BINS: usize = 16;

pub const FEATURE_NAMES: [&str; FEATURES_PER_AXIS] = [
    "mav",
    "std",
    "skewness",
    "kurtosis",
    "entropy",
    "rms",
    "max_abs",
    "p2p",
    "crest",
    "clearance",
    "shape",
    "impulse",
];

/// Column names of a feature vector, e.g. `x_mav`, ..., `z_impulse`.
pub fn feature_column_names() -> Vec<String> {
    AXES.iter()
        .flat_map(|axis| FEATURE_NAMES.iter().map(move |f| alloc::format!("{axis}_{f}")))
        .collect()
}

/// A segment of tri-axial acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalWindow {
    pub samples: Vec<[f64; 3]>,
    pub sample_rate: f64,
    pub subject_id: u32,
    pub activity: Activity,
}

impl SignalWindow {
    pub fn axis(&self, a: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[a]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            bail!(Input, "a window needs at least 2 samples, got {}", self.samples.len());
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            bail!(
                Input,
                "window of subject {} contains non-finite samples",
                self.subject_id
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub subject_id: u32,
    pub activity: Activity,
}

/// The twelve statistics of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisFeatures {
    pub mav: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub entropy: f64,
    pub rms: f64,
    pub max_abs: f64,
    pub p2p: f64,
    pub crest: f64,
    pub clearance: f64,
    pub shape: f64,
    pub impulse: f64,
}

impl AxisFeatures {
    pub fn to_array(&self) -> [f64; FEATURES_PER_AXIS] {
        [
            self.mav,
            self.std,
            self.skewness,
            self.kurtosis,
            self.entropy,
            self.rms,
            self.max_abs,
            self.p2p,
            self.crest,
            self.clearance,
            self.shape,
            self.impulse,
        ]
    }
}

/// Shannon entropy of a `bins`-bin histogram over `[min, max]`.
pub fn histogram_entropy(x: &[f64], bins: usize, min: f64, max: f64) -> f64 {
    let range = max - min;
    if !(range > 0.0) || x.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in x {
        let pos = (v - min) / range * bins as f64;
        let idx = if pos <= 0.0 { 0 } else { (pos as usize).min(bins - 1) };
        counts[idx] += 1;
    }
    let n = x.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * libm::log(p)
        })
        .sum::<f64>()
}

pub fn axis_features(x: &[f64]) -> Result<AxisFeatures> {
    if x.len() < 2 {
        bail!(Input, "feature extraction needs at least 2 samples, got {}", x.len());
    }
    let n = x.len() as f64;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut sum_abs, mut sum_sq, mut sum_sqrt_abs) = (0.0, 0.0, 0.0, 0.0);
    for &v in x {
        min = min.min(v);
        max = max.max(v);
        sum += v;
        sum_abs += v.abs();
        sum_sq += v * v;
        sum_sqrt_abs += libm::sqrt(v.abs());
    }
    let max_abs = max.abs().max(min.abs());
    let p2p = max - min;
    let clearance = {
        let m = sum_sqrt_abs / n;
        m * m
    };

    if p2p == 0.0 {
        let c = x[0].abs();
        let factor = if c == 0.0 { 0.0 } else { 1.0 };
        return Ok(AxisFeatures {
            mav: c,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            entropy: 0.0,
            rms: c,
            max_abs: c,
            p2p: 0.0,
            crest: factor,
            clearance,
            shape: factor,
            impulse: factor,
        });
    }

    let mean = sum / n;
    let mav = sum_abs / n;
    let rms = libm::sqrt(sum_sq / n);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = libm::sqrt(m2);
    let (skewness, kurtosis) = if std > 0.0 {
        (m3 / (m2 * std), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };

    Ok(AxisFeatures {
        mav,
        std,
        skewness,
        kurtosis,
        entropy: histogram_entropy(x, ENTROPY_BINS, min, max),
        rms,
        max_abs,
        p2p,
        crest: max_abs / rms,
        clearance,
        shape: rms / mav,
        impulse: max_abs / mav,
    })
}

/// The 36-value feature vector of a window.
pub fn extract_features(window: &SignalWindow) -> Result<FeatureVector> {
    window.validate()?;
    let mut values = [0.0; FEATURE_COUNT];
    for a in 0..3 {
        let f = axis_features(&window.axis(a))?;
        values[a * FEATURES_PER_AXIS..(a + 1) * FEATURES_PER_AXIS].copy_from_slice(&f.to_array());
    }
    Ok(FeatureVector {
        values,
        subject_id: window.subject_id,
        activity: window.activity,
    })
}

pub fn extract_all(windows: &[SignalWindow]) -> Result<Vec<FeatureVector>> {
    windows.iter().map(extract_features).collect()
}

/// Per-column `(x - mean) / std` transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits population mean and standard deviation per column. Columns with
    /// zero variance get `std = 1` so they pass through centered.
    pub fn fit_rows<'a, I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
        I::IntoIter: Clone,
    {
        let rows = rows.into_iter();
        let mut count = 0usize;
        let mut sum: Vec<f64> = Vec::new();
        let mut first: Vec<f64> = Vec::new();
        let mut constant: Vec<bool> = Vec::new();
        for row in rows.clone() {
            if count == 0 {
                sum = vec![0.0; row.len()];
                first = row.to_vec();
                constant = vec![true; row.len()];
            } else if row.len() != sum.len() {
                bail!(
                    Contract,
                    "row {count} has {} columns, expected {}",
                    row.len(),
                    sum.len()
                );
            }
            for (j, &v) in row.iter().enumerate() {
                sum[j] += v;
                constant[j] &= v == first[j];
            }
            count += 1;
        }
        if count == 0 {
            bail!(Input, "cannot fit a standardizer on an empty training set");
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let mut var = vec![0.0; mean.len()];
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        let std = var
            .iter()
            .zip(&constant)
            .map(|(&v, &c)| {
                let s = libm::sqrt(v / n);
                if c || !(s > 0.0) {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn fit(train: &[FeatureVector]) -> Result<Self> {
        Self::fit_rows(train.iter().map(|f| &f.values[..]))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, &v), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.std) {
            *o = (v - m) / s;
        }
    }

    pub fn inverse_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, &v), m), s) in out.iter_mut().zip(row).zip(&self.mean).zip(&self.std) {
            *o = v * s + m;
        }
    }

    pub fn apply(&self, f: &FeatureVector) -> Result<FeatureVector> {
        if self.dim() != FEATURE_COUNT {
            bail!(
                Contract,
                "standardizer has {} columns, feature vectors have {FEATURE_COUNT}",
                self.dim()
            );
        }
        let mut values = [0.0; FEATURE_COUNT];
        self.transform_row(&f.values, &mut values);
        Ok(FeatureVector { values, ..f.clone() })
    }
}

pub fn fit_standardizer(train_features: &[FeatureVector]) -> Result<Standardizer> {
    Standardizer::fit(train_features)
}

pub fn apply_standardizer(s: &Standardizer, f: &FeatureVector) -> Result<FeatureVector> {
    s.apply(f)
}
