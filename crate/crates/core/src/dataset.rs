//! Recordings, windowing, subject-disjoint splits and a synthetic stand-in
//! for smartphone accelerometer data.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Error, Result};
use crate::features::{FeatureVector, SignalWindow};

/// Sampling rate of the MotionSense recordings.
pub const SAMPLE_RATE_HZ: f64 = 50.0;
pub const SUBJECT_COUNT: u32 = 24;
pub const DEFAULT_WINDOW_LEN: usize = 128;
pub const DEFAULT_STRIDE: usize = 64;

/// The six activity classes. The discriminant is the class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Activity {
    Downstairs = 0,
    Upstairs = 1,
    Walking = 2,
    Jogging = 3,
    Sitting = 4,
    Standing = 5,
}

impl Activity {
    pub const ALL: [Activity; 6] = [
        Activity::Downstairs,
        Activity::Upstairs,
        Activity::Walking,
        Activity::Jogging,
        Activity::Sitting,
        Activity::Standing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Directory prefix used by MotionSense (`dws`, `ups`, ...).
    pub fn code(self) -> &'static str {
        match self {
            Activity::Downstairs => "dws",
            Activity::Upstairs => "ups",
            Activity::Walking => "wlk",
            Activity::Jogging => "jog",
            Activity::Sitting => "sit",
            Activity::Standing => "std",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activity::Downstairs => "downstairs",
            Activity::Upstairs => "upstairs",
            Activity::Walking => "walking",
            Activity::Jogging => "jogging",
            Activity::Sitting => "sitting",
            Activity::Standing => "standing",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activity {
    type Err = Error;

    /// Accepts either the short code or the full name, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Self::ALL
            .into_iter()
            .find(|a| a.code().eq_ignore_ascii_case(s) || a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(alloc::format!("unknown activity '{s}'")))
    }
}

/// One continuous trial of one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: u32,
    pub activity: Activity,
    pub trial_id: u32,
    pub samples: Vec<[f64; 3]>,
}

/// Number of full windows a recording of `n` samples yields.
pub fn window_count(n: usize, window_len: usize, stride: usize) -> usize {
    if n < window_len || stride == 0 {
        0
    } else {
        (n - window_len) / stride + 1
    }
}

/// Slides a window over each recording separately; trailing partial windows
/// are dropped and recordings shorter than `window_len` yield nothing.
pub fn make_windows(recordings: &[Recording], window_len: usize, stride: usize) -> Result<Vec<SignalWindow>> {
    if window_len < 2 {
        bail!(Config, "window length must be at least 2, got {window_len}");
    }
    if stride < 1 {
        bail!(Config, "stride must be at least 1");
    }
    let mut out = Vec::new();
    for rec in recordings {
        for w in 0..window_count(rec.samples.len(), window_len, stride) {
            let start = w * stride;
            out.push(SignalWindow {
                samples: rec.samples[start..start + window_len].to_vec(),
                sample_rate: SAMPLE_RATE_HZ,
                subject_id: rec.subject_id,
                activity: rec.activity,
            });
        }
    }
    Ok(out)
}

/// Disjoint train/test subject sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitConfig {
    pub train_subjects: BTreeSet<u32>,
    pub test_subjects: BTreeSet<u32>,
}

impl SplitConfig {
    pub fn new(train: impl IntoIterator<Item = u32>, test: impl IntoIterator<Item = u32>) -> Result<Self> {
        let cfg = Self {
            train_subjects: train.into_iter().collect(),
            test_subjects: test.into_iter().collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Subjects 1-19 train, 20-24 test.
    pub fn motionsense_default() -> Self {
        Self {
            train_subjects: (1..=19).collect(),
            test_subjects: (20..=SUBJECT_COUNT).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.train_subjects.intersection(&self.test_subjects).next() {
            bail!(Config, "subject {s} appears in both the train and the test set");
        }
        if let Some(s) = self
            .train_subjects
            .iter()
            .chain(&self.test_subjects)
            .find(|&&s| s == 0 || s > SUBJECT_COUNT)
        {
            bail!(Config, "subject id {s} is outside 1..={SUBJECT_COUNT}");
        }
        Ok(())
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self::motionsense_default()
    }
}

/// Anything routed by participant.
pub trait SubjectTagged {
    fn subject_id(&self) -> u32;
}

impl SubjectTagged for SignalWindow {
    fn subject_id(&self) -> u32 {
        self.subject_id
    }
}

impl SubjectTagged for FeatureVector {
    fn subject_id(&self) -> u32 {
        self.subject_id
    }
}

impl SubjectTagged for Recording {
    fn subject_id(&self) -> u32 {
        self.subject_id
    }
}

/// Routes items to (train, test) by subject; subjects in neither set are dropped.
pub fn split_by_subject<T: SubjectTagged + Clone>(items: &[T], config: &SplitConfig) -> Result<(Vec<T>, Vec<T>)> {
    config.validate()?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for item in items {
        let s = item.subject_id();
        if config.train_subjects.contains(&s) {
            train.push(item.clone());
        } else if config.test_subjects.contains(&s) {
            test.push(item.clone());
        }
    }
    Ok((train, test))
}

/// Row-major feature matrix with labels and subject ids.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub subjects: Vec<u32>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, subjects: Vec<u32>) -> Result<Self> {
        if features.len() != labels.len() || features.len() != subjects.len() {
            bail!(
                Contract,
                "dataset columns disagree: {} rows, {} labels, {} subjects",
                features.len(),
                labels.len(),
                subjects.len()
            );
        }
        if let Some(w) = features.first().map(Vec::len) {
            if let Some(i) = features.iter().position(|r| r.len() != w) {
                bail!(Contract, "row {i} has {} features, expected {w}", features[i].len());
            }
        }
        Ok(Self {
            features,
            labels,
            subjects,
        })
    }

    pub fn from_feature_vectors(vectors: &[FeatureVector]) -> Self {
        Self {
            features: vectors.iter().map(|f| f.values.to_vec()).collect(),
            labels: vectors.iter().map(|f| f.activity.index()).collect(),
            subjects: vectors.iter().map(|f| f.subject_id).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature width, 0 when empty.
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn subject_set(&self) -> BTreeSet<u32> {
        self.subjects.iter().copied().collect()
    }

    /// Windows per class index.
    pub fn class_counts(&self, class_count: usize) -> Vec<usize> {
        let mut counts = vec![0; class_count];
        for &l in &self.labels {
            if l < class_count {
                counts[l] += 1;
            }
        }
        counts
    }
}

/// Parameters of the synthetic activity generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub class_count: usize,
    /// Windows per class and subject.
    pub windows_per_class: usize,
    /// Subject ids to simulate, each within 1..=24.
    pub subjects: Vec<u32>,
    pub window_len: usize,
    /// Standard deviation of additive Gaussian noise.
    pub noise_std: f64,
    /// Relative spread of per-subject amplitude and tempo.
    pub subject_variation: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            class_count: 6,
            windows_per_class: 8,
            subjects: (1..=SUBJECT_COUNT).collect(),
            window_len: DEFAULT_WINDOW_LEN,
            noise_std: 0.02,
            subject_variation: 0.1,
            seed: 42,
        }
    }
}

/// Per-class signal family: fundamental frequency (Hz), per-axis amplitude
/// and offset, and relative weight of the second harmonic.
struct ClassFamily {
    freq: f64,
    amp: [f64; 3],
    offset: [f64; 3],
    harmonic: f64,
}

const FAMILIES: [ClassFamily; 6] = [
    // downstairs
    ClassFamily {
        freq: 1.9,
        amp: [0.30, 0.45, 0.20],
        offset: [0.02, -0.04, 0.0],
        harmonic: 0.6,
    },
    // upstairs
    ClassFamily {
        freq: 1.4,
        amp: [0.15, 0.25, 0.12],
        offset: [-0.02, 0.03, 0.01],
        harmonic: 0.35,
    },
    // walking
    ClassFamily {
        freq: 1.8,
        amp: [0.22, 0.32, 0.10],
        offset: [0.0, 0.0, -0.02],
        harmonic: 0.1,
    },
    // jogging
    ClassFamily {
        freq: 2.6,
        amp: [0.80, 1.20, 0.50],
        offset: [0.0, -0.05, 0.03],
        harmonic: 0.3,
    },
    // sitting
    ClassFamily {
        freq: 0.2,
        amp: [0.004, 0.006, 0.003],
        offset: [0.01, -0.01, 0.0],
        harmonic: 0.0,
    },
    // standing
    ClassFamily {
        freq: 0.4,
        amp: [0.03, 0.02, 0.04],
        offset: [-0.01, 0.02, 0.0],
        harmonic: 0.0,
    },
];

struct SubjectProfile {
    amp_scale: f64,
    tempo_scale: f64,
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; u1 in (0, 1] keeps the log finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

fn validate_synthetic(config: &SyntheticConfig) -> Result<()> {
    if config.class_count == 0 || config.class_count > Activity::ALL.len() {
        bail!(
            Config,
            "synthetic class count must be in 1..=6, got {}",
            config.class_count
        );
    }
    if config.window_len < 2 {
        bail!(Config, "synthetic window length must be at least 2");
    }
    if config.subjects.iter().any(|&s| s == 0 || s > SUBJECT_COUNT) {
        bail!(Config, "synthetic subject ids must lie in 1..={SUBJECT_COUNT}");
    }
    if !(config.noise_std >= 0.0) || !(config.subject_variation >= 0.0) {
        bail!(Config, "noise and subject variation must be non-negative");
    }
    Ok(())
}

fn subject_profiles(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<SubjectProfile> {
    config
        .subjects
        .iter()
        .map(|_| {
            let a = rng.gen_range(-1.0..=1.0);
            let t = rng.gen_range(-1.0..=1.0);
            SubjectProfile {
                amp_scale: 1.0 + config.subject_variation * a,
                tempo_scale: 1.0 + 0.5 * config.subject_variation * t,
            }
        })
        .collect()
}

/// Writes `n` samples of a class signal starting at phase `phase`.
fn synth_samples(
    family: &ClassFamily,
    profile: &SubjectProfile,
    phase: f64,
    n: usize,
    noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<[f64; 3]> {
    let omega = 2.0 * PI * family.freq * profile.tempo_scale / SAMPLE_RATE_HZ;
    (0..n)
        .map(|i| {
            let theta = omega * i as f64 + phase;
            let mut s = [0.0; 3];
            for (a, v) in s.iter_mut().enumerate() {
                let shifted = theta + a as f64 * 0.7;
                let wave = libm::sin(shifted) + family.harmonic * libm::sin(2.0 * shifted + 0.3);
                *v = family.offset[a] + profile.amp_scale * family.amp[a] * wave;
                if noise_std > 0.0 {
                    *v += noise_std * standard_normal(rng);
                }
            }
            s
        })
        .collect()
}

/// Deterministic synthetic windows: for every subject and class,
/// `windows_per_class` windows, each starting at a random phase.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<SignalWindow>> {
    validate_synthetic(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let profiles = subject_profiles(config, &mut rng);
    let mut out = Vec::with_capacity(config.subjects.len() * config.class_count * config.windows_per_class);
    for (&subject, profile) in config.subjects.iter().zip(&profiles) {
        for (class, family) in FAMILIES.iter().enumerate().take(config.class_count) {
            for _ in 0..config.windows_per_class {
                let phase = rng.gen_range(0.0..2.0 * PI);
                out.push(SignalWindow {
                    samples: synth_samples(family, profile, phase, config.window_len, config.noise_std, &mut rng),
                    sample_rate: SAMPLE_RATE_HZ,
                    subject_id: subject,
                    activity: Activity::ALL[class],
                });
            }
        }
    }
    Ok(out)
}

/// Deterministic synthetic recordings, one trial per subject and class, each
/// `samples_per_recording` long. Meant to be windowed like real data.
pub fn synthetic_recordings(config: &SyntheticConfig, samples_per_recording: usize) -> Result<Vec<Recording>> {
    validate_synthetic(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let profiles = subject_profiles(config, &mut rng);
    let mut out = Vec::with_capacity(config.subjects.len() * config.class_count);
    for (&subject, profile) in config.subjects.iter().zip(&profiles) {
        for (class, family) in FAMILIES.iter().enumerate().take(config.class_count) {
            let phase = rng.gen_range(0.0..2.0 * PI);
            out.push(Recording {
                subject_id: subject,
                activity: Activity::ALL[class],
                trial_id: class as u32 + 1,
                samples: synth_samples(
                    family,
                    profile,
                    phase,
                    samples_per_recording,
                    config.noise_std,
                    &mut rng,
                ),
            });
        }
    }
    Ok(out)
}
