//! Reader for MotionSense-style recording trees:
//! `<root>/<activity>_<trial>/sub_<id>.csv`, one table per subject and trial
//! with named columns.

use std::fs;
use std::path::{Path, PathBuf};

use kanhar_core::dataset::{Activity, Recording};
use log::warn;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("dataset directory {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: directory name does not start with a known activity code")]
    UnknownActivity { path: PathBuf },
    #[error("{path}: cannot parse {what} from the name")]
    BadName { path: PathBuf, what: &'static str },
    #[error("{path}: missing column '{column}'")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// Which three columns hold the acceleration triplet, and how fields are separated.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub columns: [String; 3],
    pub delimiter: u8,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            columns: [
                "userAcceleration.x".into(),
                "userAcceleration.y".into(),
                "userAcceleration.z".into(),
            ],
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedRecordings {
    pub recordings: Vec<Recording>,
    /// Rows skipped because a selected channel was missing or non-finite.
    pub dropped_rows: usize,
    pub warnings: Vec<String>,
}

fn parse_trial_dir(path: &Path) -> Result<(Activity, u32), LoadError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let (prefix, trial) = name.rsplit_once('_').ok_or_else(|| LoadError::UnknownActivity {
        path: path.to_path_buf(),
    })?;
    let activity = prefix.parse::<Activity>().map_err(|_| LoadError::UnknownActivity {
        path: path.to_path_buf(),
    })?;
    let trial = trial.parse::<u32>().map_err(|_| LoadError::BadName {
        path: path.to_path_buf(),
        what: "trial number",
    })?;
    Ok((activity, trial))
}

fn parse_subject_file(path: &Path) -> Result<u32, LoadError> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("sub_"))
        .and_then(|s| s.parse::<u32>().ok())
        .ok_or_else(|| LoadError::BadName {
            path: path.to_path_buf(),
            what: "subject id",
        })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let io = |source| LoadError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut entries = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?;
    entries.sort();
    Ok(entries)
}

/// Reads one subject table, returning its samples and the number of dropped rows.
pub fn read_table(path: &Path, channels: &ChannelConfig) -> Result<(Vec<[f64; 3]>, usize), LoadError> {
    let csv_err = |source| LoadError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(channels.delimiter)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let mut idx = [0usize; 3];
    for (slot, column) in idx.iter_mut().zip(&channels.columns) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| LoadError::MissingColumn {
                path: path.to_path_buf(),
                column: column.clone(),
            })?;
    }
    let mut samples = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let mut row = [0.0; 3];
        let mut ok = true;
        for (v, &i) in row.iter_mut().zip(&idx) {
            match record.get(i).and_then(|s| s.trim().parse::<f64>().ok()) {
                Some(x) if x.is_finite() => *v = x,
                _ => ok = false,
            }
        }
        if ok {
            samples.push(row);
        } else {
            dropped += 1;
        }
    }
    Ok((samples, dropped))
}

/// Loads every `<activity>_<trial>/sub_<id>` table under `root`, in
/// lexicographic path order.
pub fn load_recordings(root: &Path, channels: &ChannelConfig) -> Result<LoadedRecordings, LoadError> {
    if !root.is_dir() {
        return Err(LoadError::MissingRoot(root.to_path_buf()));
    }
    let mut out = LoadedRecordings::default();
    for trial_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let (activity, trial_id) = parse_trial_dir(&trial_dir)?;
        for file in sorted_entries(&trial_dir)?.into_iter().filter(|p| p.is_file()) {
            let subject_id = parse_subject_file(&file)?;
            let (samples, dropped) = read_table(&file, channels)?;
            if dropped > 0 {
                let msg = format!(
                    "{}: dropped {dropped} rows with missing or non-finite values",
                    file.display()
                );
                warn!("{msg}");
                out.warnings.push(msg);
            }
            out.dropped_rows += dropped;
            out.recordings.push(Recording {
                subject_id,
                activity,
                trial_id,
                samples,
            });
        }
    }
    if out.recordings.is_empty() {
        let msg = format!("no recordings found under {}", root.display());
        warn!("{msg}");
        out.warnings.push(msg);
    }
    Ok(out)
}

/// Column layout of the MotionSense device-motion tables.
pub const MOTIONSENSE_COLUMNS: [&str; 12] = [
    "attitude.roll",
    "attitude.pitch",
    "attitude.yaw",
    "gravity.x",
    "gravity.y",
    "gravity.z",
    "rotationRate.x",
    "rotationRate.y",
    "rotationRate.z",
    "userAcceleration.x",
    "userAcceleration.y",
    "userAcceleration.z",
];

/// Writes recordings as a MotionSense-style tree. Only the user-acceleration
/// columns carry data; gravity points down the y axis and the rest is zero.
pub fn write_recording_tree(root: &Path, recordings: &[Recording]) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for rec in recordings {
        let dir = root.join(format!("{}_{}", rec.activity.code(), rec.trial_id));
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("sub_{}.csv", rec.subject_id));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec![""];
        header.extend(MOTIONSENSE_COLUMNS);
        w.write_record(&header)?;
        for (i, s) in rec.samples.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(["0", "0", "0", "0", "-1", "0", "0", "0", "0"].map(String::from));
            row.extend(s.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
