//! Synthetic inertial windows in the UCI HAR on-disk layout.
//!
//! The generator mimics the coarse structure of the real data: three gait
//! classes with periodic body acceleration and rotation at slightly
//! different cadences, and three static postures that differ mainly in the
//! gravity direction seen by `total_acc` (sitting and standing close
//! together, laying far away). It exists so that the full pipeline can be
//! exercised without the real archive.

use std::f64::consts::TAU;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loader::{ChannelMode, HarDataset, Split, WINDOW_LEN};
use super::{NUM_CLASSES, SIGNALS};
use crate::error::Result;

/// Per-class window counts of the published archive.
pub const UCI_TRAIN_COUNTS: [usize; 6] = [1226, 1073, 986, 1286, 1374, 1407];
pub const UCI_TEST_COUNTS: [usize; 6] = [496, 471, 420, 491, 532, 537];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub train_per_class: [usize; 6],
    pub test_per_class: [usize; 6],
    pub seed: u64,
    /// Standard deviation of additive sensor noise.
    pub noise: f64,
}

impl Default for SynthSpec {
    /// Enough training windows per class for one six-round schedule at
    /// 120 windows per class per round plus the pretraining subset.
    fn default() -> Self {
        Self {
            train_per_class: [380; 6],
            test_per_class: [120; 6],
            seed: 2024,
            noise: 0.08,
        }
    }
}

impl SynthSpec {
    /// Same per-class counts as the real archive (10299 windows).
    pub fn uci_sized() -> Self {
        Self {
            train_per_class: UCI_TRAIN_COUNTS,
            test_per_class: UCI_TEST_COUNTS,
            ..Self::default()
        }
    }
}

struct Profile {
    cycles: f64,
    body_amp: [f64; 3],
    gyro_amp: [f64; 3],
    gravity: [f64; 3],
}

fn profile(class: usize) -> Profile {
    match class {
        0 => Profile {
            cycles: 4.6,
            body_amp: [0.30, 0.12, 0.10],
            gyro_amp: [0.35, 0.20, 0.15],
            gravity: [1.0, -0.15, 0.05],
        },
        1 => Profile {
            cycles: 4.1,
            body_amp: [0.26, 0.14, 0.14],
            gyro_amp: [0.30, 0.28, 0.18],
            gravity: [0.98, -0.12, 0.12],
        },
        2 => Profile {
            cycles: 5.1,
            body_amp: [0.40, 0.14, 0.12],
            gyro_amp: [0.42, 0.18, 0.22],
            gravity: [1.0, -0.18, 0.0],
        },
        3 => Profile {
            cycles: 0.0,
            body_amp: [0.0; 3],
            gyro_amp: [0.0; 3],
            gravity: [0.85, 0.05, 0.45],
        },
        4 => Profile {
            cycles: 0.0,
            body_amp: [0.0; 3],
            gyro_amp: [0.0; 3],
            gravity: [0.97, -0.05, 0.22],
        },
        _ => Profile {
            cycles: 0.0,
            body_amp: [0.0; 3],
            gyro_amp: [0.0; 3],
            gravity: [0.05, 0.75, 0.62],
        },
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one draw per call is plenty here.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn fill_window<R: Rng>(
    out: &mut ndarray::ArrayViewMut2<'_, f64>,
    class: usize,
    noise: f64,
    rng: &mut R,
) {
    let p = profile(class);
    let cycles = p.cycles * rng.gen_range(0.9..1.1);
    let scale = rng.gen_range(0.75..1.25);
    let tilt: [f64; 3] = std::array::from_fn(|_| 0.08 * gaussian(rng));
    let phase: [f64; 6] = std::array::from_fn(|_| rng.gen_range(0.0..TAU));
    for t in 0..WINDOW_LEN {
        let w = TAU * cycles * t as f64 / WINDOW_LEN as f64;
        for axis in 0..3 {
            let body = scale
                * p.body_amp[axis]
                * ((w + phase[axis]).sin() + 0.3 * (2.0 * w + phase[axis]).sin())
                + noise * gaussian(rng);
            let gyro =
                scale * p.gyro_amp[axis] * (w + phase[3 + axis]).sin() + noise * gaussian(rng);
            let total = p.gravity[axis] + tilt[axis] + body + 0.5 * noise * gaussian(rng);
            out[[axis, t]] = body;
            out[[3 + axis, t]] = gyro;
            out[[6 + axis, t]] = total;
        }
    }
}

fn generate_split(
    counts: &[usize; 6],
    split: Split,
    rng: &mut ChaCha8Rng,
    noise: f64,
) -> HarDataset {
    let mut labels: Vec<usize> = (0..NUM_CLASSES)
        .flat_map(|c| std::iter::repeat_n(c, counts[c]))
        .collect();
    labels.shuffle(rng);
    let mut windows = Array3::<f64>::zeros((labels.len(), 9, WINDOW_LEN));
    for (mut w, &c) in windows.outer_iter_mut().zip(&labels) {
        fill_window(&mut w, c, noise, rng);
    }
    let subjects = labels.iter().map(|_| rng.gen_range(1..=30)).collect();
    HarDataset {
        split,
        channel_mode: ChannelMode::Nine,
        windows,
        labels,
        subjects,
    }
}

/// Raw (unstandardized) train and test splits with all nine channels.
pub fn generate(spec: &SynthSpec) -> (HarDataset, HarDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let train = generate_split(&spec.train_per_class, Split::Train, &mut rng, spec.noise);
    let test = generate_split(&spec.test_per_class, Split::Test, &mut rng, spec.noise);
    (train, test)
}

/// Write a generated dataset under `root` using the UCI HAR directory layout.
pub fn write_uci_layout(root: impl AsRef<Path>, spec: &SynthSpec) -> Result<()> {
    let root = root.as_ref();
    let (train, test) = generate(spec);
    for ds in [&train, &test] {
        let split = ds.split.as_str();
        let dir = root.join(split);
        let sig_dir = dir.join("Inertial Signals");
        fs::create_dir_all(&sig_dir)?;

        let mut y = BufWriter::new(fs::File::create(dir.join(format!("y_{split}.txt")))?);
        let mut s = BufWriter::new(fs::File::create(dir.join(format!("subject_{split}.txt")))?);
        for (&l, &subj) in ds.labels.iter().zip(&ds.subjects) {
            writeln!(y, "{}", l + 1)?;
            writeln!(s, "{subj}")?;
        }
        y.flush()?;
        s.flush()?;

        for (si, signal) in SIGNALS.iter().enumerate() {
            for (ai, axis) in ["x", "y", "z"].iter().enumerate() {
                let ch = si * 3 + ai;
                let path = sig_dir.join(format!("{signal}_{axis}_{split}.txt"));
                let mut f = BufWriter::new(fs::File::create(path)?);
                for w in ds.windows.outer_iter() {
                    for v in w.row(ch) {
                        write!(f, " {v:.7e}")?;
                    }
                    writeln!(f)?;
                }
                f.flush()?;
            }
        }
    }
    Ok(())
}
