//! Dataset directories: a `manifest.toml` at the root and one directory per
//! session holding either `features.csv` or `raw.csv`.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::experiment::session_position;
use crate::linalg::Matrix;
use crate::scalar::{fmt_exact, parse_real};
use crate::signal::{
    preprocess, rms_features_by_trial, LabeledWindows, SampleTags, SignalMatrix, DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_SLIDE_MS, DEFAULT_WINDOW_MS,
};
use crate::sim::SimulatedDataset;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const FEATURES_FILE: &str = "features.csv";
pub const RAW_FILE: &str = "raw.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataMode {
    #[default]
    Features,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub mode: DataMode,
    pub sample_rate_hz: f64,
    pub window_ms: f64,
    pub slide_ms: f64,
    pub sessions_per_day: usize,
    /// Session directories relative to the dataset root, in chronological order.
    pub days: Vec<String>,
    /// Gesture names indexed by label.
    pub gestures: Vec<String>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            mode: DataMode::Features,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            window_ms: DEFAULT_WINDOW_MS,
            slide_ms: DEFAULT_SLIDE_MS,
            sessions_per_day: 1,
            days: Vec::new(),
            gestures: Vec::new(),
        }
    }
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let m: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if m.days.is_empty() {
            return Err(Error::Config(format!("{}: no day directories listed", path.display())));
        }
        if m.sessions_per_day == 0 {
            return Err(Error::Config("sessions_per_day must be at least 1".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }
}

fn ingest_err(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Ingest { path: path.to_path_buf(), row, message: message.into() }
}

/// Column positions of `ch0..ch{n-1}` plus the named tag columns.
struct Layout {
    channels: Vec<usize>,
    tags: Vec<usize>,
}

fn layout(path: &Path, header: &csv::StringRecord, tags: &[&str]) -> Result<Layout> {
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let mut channels = Vec::new();
    while let Some(i) = find(&format!("ch{}", channels.len())) {
        channels.push(i);
    }
    if channels.is_empty() {
        return Err(ingest_err(path, 0, "no channel columns (expected ch0, ch1, ...)"));
    }
    let tags = tags
        .iter()
        .map(|t| find(t).ok_or_else(|| ingest_err(path, 0, format!("missing column `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Layout { channels, tags })
}

fn field<'a>(path: &Path, row: usize, rec: &'a csv::StringRecord, col: usize) -> Result<&'a str> {
    rec.get(col).map(str::trim).ok_or_else(|| ingest_err(path, row, format!("missing field {}", col + 1)))
}

fn real(path: &Path, row: usize, rec: &csv::StringRecord, col: usize, name: &str) -> Result<f64> {
    let s = field(path, row, rec, col)?;
    match parse_real::<f64>(s) {
        Some(v) if v.is_finite() => Ok(v),
        Some(_) => Err(ingest_err(path, row, format!("non-finite value in {name}"))),
        None => Err(ingest_err(path, row, format!("cannot parse {name} value `{s}`"))),
    }
}

fn integer<I: std::str::FromStr>(path: &Path, row: usize, rec: &csv::StringRecord, col: usize, name: &str) -> Result<I> {
    let s = field(path, row, rec, col)?;
    s.parse().map_err(|_| ingest_err(path, row, format!("cannot parse {name} value `{s}`")))
}

fn check_contiguous(path: &Path, labels: &[usize]) -> Result<()> {
    let max = labels.iter().copied().max().unwrap_or(0);
    let mut seen = vec![false; max + 1];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ingest_err(path, 0, format!("labels are not contiguous: {missing} missing from 0..={max}")));
    }
    Ok(())
}

/// Parses a feature table (`window, ch0.., label, repetition`). Row numbers in
/// errors count data rows from 1; row 0 means the header or the whole file.
pub fn read_features<R: Read>(reader: R, path: &Path, day: usize) -> Result<LabeledWindows<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let lay = layout(path, &header, &["label", "repetition"])?;
    let n = lay.channels.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
    let (mut labels, mut reps) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| ingest_err(path, row, e.to_string()))?;
        for (c, &col) in lay.channels.iter().enumerate() {
            columns[c].push(real(path, row, &rec, col, &format!("ch{c}"))?);
        }
        labels.push(integer(path, row, &rec, lay.tags[0], "label")?);
        reps.push(integer(path, row, &rec, lay.tags[1], "repetition")?);
    }
    if labels.is_empty() {
        return Err(ingest_err(path, 0, "no data rows"));
    }
    check_contiguous(path, &labels)?;
    let features = Matrix::from_rows(&columns)?;
    LabeledWindows::new(features, labels, reps, day)
}

/// Parses a raw recording (`t, ch0.., label, repetition, trial`); a negative
/// label marks rest.
pub fn read_raw<R: Read>(reader: R, path: &Path, sample_rate_hz: f64) -> Result<(SignalMatrix<f64>, SampleTags)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let lay = layout(path, &header, &["label", "repetition", "trial"])?;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); lay.channels.len()];
    let mut tags = SampleTags::default();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| ingest_err(path, row, e.to_string()))?;
        for (c, &col) in lay.channels.iter().enumerate() {
            columns[c].push(real(path, row, &rec, col, &format!("ch{c}"))?);
        }
        tags.labels.push(integer(path, row, &rec, lay.tags[0], "label")?);
        tags.repetitions.push(integer(path, row, &rec, lay.tags[1], "repetition")?);
        tags.trials.push(integer(path, row, &rec, lay.tags[2], "trial")?);
    }
    if tags.labels.is_empty() {
        return Err(ingest_err(path, 0, "no data rows"));
    }
    let signal = SignalMatrix::new(Matrix::from_rows(&columns)?, sample_rate_hz)?;
    Ok((signal, tags))
}

/// Loads one session directory according to the manifest mode.
pub fn load_day(dir: impl AsRef<Path>, manifest: &Manifest, day: usize) -> Result<LabeledWindows<f64>> {
    let dir = dir.as_ref();
    match manifest.mode {
        DataMode::Features => {
            let path = dir.join(FEATURES_FILE);
            read_features(fs::File::open(&path)?, &path, day)
        }
        DataMode::Raw => {
            let path = dir.join(RAW_FILE);
            let (signal, tags) = read_raw(fs::File::open(&path)?, &path, manifest.sample_rate_hz)?;
            let filtered = preprocess(&signal)?;
            let windows = rms_features_by_trial(&filtered, &tags, manifest.window_ms, manifest.slide_ms, day)?;
            check_contiguous(&path, &windows.labels)?;
            Ok(windows)
        }
    }
}

/// Loads every session listed in `root/manifest.toml`.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<(Manifest, Vec<LabeledWindows<f64>>)> {
    let root = root.as_ref();
    let manifest = Manifest::load(root.join(MANIFEST_FILE))?;
    let sessions = manifest
        .days
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (day, sub) = session_position(i, manifest.sessions_per_day);
            load_day(root.join(d), &manifest, day).map_err(|e| e.in_day(format!("{day}.{sub}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = sessions[0].n_channels();
    if let Some(bad) = sessions.iter().position(|s| s.n_channels() != n) {
        return Err(Error::Data(format!(
            "session {} has {} channels, expected {n}",
            manifest.days[bad],
            sessions[bad].n_channels()
        )));
    }
    Ok((manifest, sessions))
}

/// Writes `features.csv` for one session.
pub fn write_day(dir: impl AsRef<Path>, day: &LabeledWindows<f64>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let path = dir.join(FEATURES_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    let n = day.n_channels();
    let mut header = vec!["window".to_string()];
    header.extend((0..n).map(|c| format!("ch{c}")));
    header.extend(["label".to_string(), "repetition".to_string()]);
    w.write_record(&header)?;
    for j in 0..day.n_windows() {
        let mut rec = vec![j.to_string()];
        rec.extend((0..n).map(|c| fmt_exact(day.features[(c, j)])));
        rec.push(day.labels[j].to_string());
        rec.push(day.repetitions[j].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

/// Directory name of session `index` (0-based).
pub fn day_dir_name(index: usize) -> String {
    format!("day{:02}", index + 1)
}

/// Writes a simulated dataset: manifest, per-session features and the
/// ground-truth drift of each session.
pub fn write_dataset(root: impl AsRef<Path>, data: &SimulatedDataset, sessions_per_day: usize) -> Result<Manifest> {
    let root = root.as_ref();
    fs::create_dir_all(root)?;
    let mut manifest = Manifest { sessions_per_day, ..Default::default() };
    for (i, (day, drift)) in data.days.iter().zip(&data.drifts).enumerate() {
        let name = day_dir_name(i);
        write_day(root.join(&name), day)?;
        drift.write_csv(root.join(&name).join("drift.csv"))?;
        manifest.days.push(name);
    }
    manifest.gestures = (0..data.geometry.n_gestures).map(|g| format!("gesture{g}")).collect();
    manifest.save(root.join(MANIFEST_FILE))?;
    Ok(manifest)
}
