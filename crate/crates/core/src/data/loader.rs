use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array3, Axis};
use serde::{Deserialize, Serialize};

use super::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::nn::Examples;

pub const WINDOW_LEN: usize = 128;

/// Signal file stems in channel order; each expands to x, y, z.
pub const SIGNALS: [&str; 3] = ["body_acc", "body_gyro", "total_acc"];
const AXES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Which raw channels become network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// body_acc, body_gyro, total_acc (x, y, z each).
    #[default]
    Nine,
    /// body_acc and body_gyro only.
    Six,
}

impl ChannelMode {
    pub fn channels(self) -> usize {
        match self {
            ChannelMode::Nine => 9,
            ChannelMode::Six => 6,
        }
    }

    /// `(signal, axis)` file stems in channel order.
    pub fn files(self) -> Vec<(&'static str, &'static str)> {
        SIGNALS[..self.channels() / 3]
            .iter()
            .flat_map(|s| AXES.iter().map(move |a| (*s, *a)))
            .collect()
    }
}

impl std::str::FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "9" | "nine" => Ok(ChannelMode::Nine),
            "6" | "six" => Ok(ChannelMode::Six),
            other => Err(Error::config(format!(
                "unknown channel mode '{other}' (expected 9 or 6)"
            ))),
        }
    }
}

/// One split of the dataset: windows `[N, channels, 128]`, labels 0..5, subject ids.
#[derive(Debug, Clone)]
pub struct HarDataset {
    pub split: Split,
    pub channel_mode: ChannelMode,
    pub windows: Array3<f64>,
    pub labels: Vec<usize>,
    pub subjects: Vec<u32>,
}

impl HarDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn examples(&self) -> Examples<'_> {
        Examples {
            inputs: self.windows.view(),
            labels: &self.labels,
        }
    }

    /// Owned copy of the selected rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> HarDataset {
        HarDataset {
            split: self.split,
            channel_mode: self.channel_mode,
            windows: self.windows.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subjects: indices.iter().map(|&i| self.subjects[i]).collect(),
        }
    }

    pub fn class_histogram(&self) -> [usize; NUM_CLASSES] {
        let mut h = [0; NUM_CLASSES];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    /// Indices of every example whose label is in `classes`.
    pub fn indices_of(&self, classes: &[usize]) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| classes.contains(&self.labels[i]))
            .collect()
    }
}

/// Per-channel mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Population statistics over every sample of every window, per channel.
    pub fn fit(windows: &Array3<f64>) -> Result<Self> {
        let (n, c, l) = windows.dim();
        if n == 0 {
            return Err(Error::structural(
                "cannot fit channel statistics on an empty split",
            ));
        }
        let count = (n * l) as f64;
        let mut mean = vec![0.0; c];
        let mut std = vec![0.0; c];
        for ch in 0..c {
            let view = windows.index_axis(Axis(1), ch);
            let m = view.iter().sum::<f64>() / count;
            let var = view.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / count;
            if !(var > 0.0) {
                return Err(Error::Numeric(format!("channel {ch} has zero variance")));
            }
            mean[ch] = m;
            std[ch] = var.sqrt();
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, windows: &mut Array3<f64>) -> Result<()> {
        if windows.dim().1 != self.mean.len() {
            return Err(Error::structural(format!(
                "statistics for {} channels applied to {} channels",
                self.mean.len(),
                windows.dim().1
            )));
        }
        for (ch, mut view) in windows.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[ch], self.std[ch]);
            view.mapv_inplace(|v| (v - m) / s);
        }
        Ok(())
    }
}

/// Both splits, standardized with training statistics.
#[derive(Debug, Clone)]
pub struct HarData {
    pub train: HarDataset,
    pub test: HarDataset,
    pub stats: ChannelStats,
}

impl HarData {
    pub fn load(root: impl AsRef<Path>, mode: ChannelMode) -> Result<Self> {
        let root = root.as_ref();
        let mut train = load_raw(root, Split::Train, mode)?;
        let mut test = load_raw(root, Split::Test, mode)?;
        let stats = ChannelStats::fit(&train.windows)?;
        stats.apply(&mut train.windows)?;
        stats.apply(&mut test.windows)?;
        Ok(Self { train, test, stats })
    }

    /// Standardize raw splits with the training split's statistics.
    pub fn from_raw(mut train: HarDataset, mut test: HarDataset) -> Result<Self> {
        let stats = ChannelStats::fit(&train.windows)?;
        stats.apply(&mut train.windows)?;
        stats.apply(&mut test.windows)?;
        Ok(Self { train, test, stats })
    }

    pub fn channels(&self) -> usize {
        self.train.windows.dim().1
    }
}

/// Load one split, standardized with training-split statistics.
pub fn load_dataset(root: impl AsRef<Path>, split: Split, mode: ChannelMode) -> Result<HarDataset> {
    let root = root.as_ref();
    let train = load_raw(root, Split::Train, mode)?;
    let stats = ChannelStats::fit(&train.windows)?;
    let mut out = match split {
        Split::Train => train,
        Split::Test => load_raw(root, Split::Test, mode)?,
    };
    stats.apply(&mut out.windows)?;
    Ok(out)
}

fn split_dir(root: &Path, split: Split) -> PathBuf {
    root.join(split.as_str())
}

fn signal_path(root: &Path, split: Split, signal: &str, axis: &str) -> PathBuf {
    split_dir(root, split)
        .join("Inertial Signals")
        .join(format!("{signal}_{axis}_{}.txt", split.as_str()))
}

fn label_path(root: &Path, split: Split) -> PathBuf {
    split_dir(root, split).join(format!("y_{}.txt", split.as_str()))
}

fn subject_path(root: &Path, split: Split) -> PathBuf {
    split_dir(root, split).join(format!("subject_{}.txt", split.as_str()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::ingestion(path, None, format!("cannot read file: {e}")))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    data_lines(&text)
        .map(|(line, s)| match s.parse::<i64>() {
            Ok(v @ 1..=6) => Ok((v - 1) as usize),
            Ok(v) => Err(Error::ingestion(
                path,
                Some(line),
                format!("label {v} outside 1..6"),
            )),
            Err(e) => Err(Error::ingestion(
                path,
                Some(line),
                format!("bad label '{s}': {e}"),
            )),
        })
        .collect()
}

fn read_subjects(path: &Path) -> Result<Vec<u32>> {
    let text = read(path)?;
    data_lines(&text)
        .map(|(line, s)| {
            s.parse::<u32>().map_err(|e| {
                Error::ingestion(path, Some(line), format!("bad subject id '{s}': {e}"))
            })
        })
        .collect()
}

fn read_signal(path: &Path, rows: usize, channel: usize, windows: &mut Array3<f64>) -> Result<()> {
    let text = read(path)?;
    let mut n = 0;
    for (line, s) in data_lines(&text) {
        if n >= rows {
            return Err(Error::ingestion(
                path,
                Some(line),
                format!("more rows than the {rows} labels"),
            ));
        }
        let mut count = 0;
        for tok in s.split_whitespace() {
            if count == WINDOW_LEN {
                count += 1;
                break;
            }
            let v: f64 = tok.parse().map_err(|e| {
                Error::ingestion(path, Some(line), format!("bad value '{tok}': {e}"))
            })?;
            if !v.is_finite() {
                return Err(Error::ingestion(path, Some(line), "non-finite value"));
            }
            windows[[n, channel, count]] = v;
            count += 1;
        }
        if count != WINDOW_LEN {
            let found = s.split_whitespace().count();
            return Err(Error::ingestion(
                path,
                Some(line),
                format!("row has {found} values, expected {WINDOW_LEN}"),
            ));
        }
        n += 1;
    }
    if n != rows {
        return Err(Error::ingestion(
            path,
            None,
            format!("{n} rows, expected {rows} (one per label)"),
        ));
    }
    Ok(())
}

/// Load one split without standardization.
pub fn load_raw(root: impl AsRef<Path>, split: Split, mode: ChannelMode) -> Result<HarDataset> {
    let root = root.as_ref();
    let lpath = label_path(root, split);
    let labels = read_labels(&lpath)?;
    let spath = subject_path(root, split);
    let subjects = read_subjects(&spath)?;
    if subjects.len() != labels.len() {
        return Err(Error::ingestion(
            spath,
            None,
            format!("{} subject rows vs {} labels", subjects.len(), labels.len()),
        ));
    }
    let files = mode.files();
    let mut windows = Array3::<f64>::zeros((labels.len(), files.len(), WINDOW_LEN));
    for (ch, (signal, axis)) in files.iter().enumerate() {
        read_signal(
            &signal_path(root, split, signal, axis),
            labels.len(),
            ch,
            &mut windows,
        )?;
    }
    Ok(HarDataset {
        split,
        channel_mode: mode,
        windows,
        labels,
        subjects,
    })
}

/// Row counts found by [`check_data`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSummary {
    pub train_rows: usize,
    pub test_rows: usize,
}

impl DataSummary {
    pub fn total(&self) -> usize {
        self.train_rows + self.test_rows
    }
}

/// Presence and row-count integrity check over all label, subject and signal
/// files of both splits, without parsing values.
pub fn check_data(root: impl AsRef<Path>) -> Result<DataSummary> {
    let root = root.as_ref();
    let mut counts = [0usize; 2];
    for (slot, split) in [Split::Train, Split::Test].into_iter().enumerate() {
        let lpath = label_path(root, split);
        let rows = data_lines(&read(&lpath)?).count();
        let mut others = vec![subject_path(root, split)];
        others.extend(
            ChannelMode::Nine
                .files()
                .iter()
                .map(|(s, a)| signal_path(root, split, s, a)),
        );
        for p in others {
            let n = data_lines(&read(&p)?).count();
            if n != rows {
                return Err(Error::ingestion(
                    p,
                    None,
                    format!("{n} rows, but {} has {rows}", lpath.display()),
                ));
            }
        }
        counts[slot] = rows;
    }
    Ok(DataSummary {
        train_rows: counts[0],
        test_rows: counts[1],
    })
}
