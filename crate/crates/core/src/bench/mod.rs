//! Benchmark driver: grids of (method, seed) scenario runs, result files,
//! comparison tables and embedding export.

mod config;
mod embed;
mod report;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{RunConfig, DATA_DIR_ENV};
pub use embed::{export_embeddings, DEFAULT_EMBED_PER_CLASS};
pub use report::{report, write_report, CellStats, ReportTable};

use crate::data::{check_data, HarData};
use crate::engine::{run_scenario, ScenarioRun};
use crate::error::{Error, Result};
use crate::nn::Precision;
use crate::regularizers::Method;

pub const SCHEMA_VERSION: u32 = 1;

pub const CONFIG_FILE: &str = "config.txt";
pub const ROUNDS_FILE: &str = "rounds.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

/// Ten significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.9e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub run: ScenarioRun,
}

/// Everything one `run` produces, in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema: u32,
    pub scenario: String,
    pub config: RunConfig,
    pub runs: Vec<RunRecord>,
}

impl ResultBundle {
    /// Mean, min and max of every metric over seeds, per method.
    pub fn aggregate(&self) -> BTreeMap<(Method, String), CellStats> {
        let mut groups: BTreeMap<(Method, String), Vec<f64>> = BTreeMap::new();
        for r in &self.runs {
            for (name, v) in r.run.metrics.named_values() {
                groups.entry((r.method, name)).or_default().push(v);
            }
        }
        groups
            .into_iter()
            .map(|(k, v)| (k, CellStats::of(&v)))
            .collect()
    }

    /// Metric names in table order (A, A_1.., F_2..).
    pub fn metric_names(&self) -> Vec<String> {
        self.runs
            .first()
            .map(|r| {
                r.run
                    .metrics
                    .named_values()
                    .into_iter()
                    .map(|(n, _)| n)
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Load the data and execute every (method, seed) pair of `config`.
pub fn execute(config: &RunConfig) -> Result<ResultBundle> {
    let root = config.data_dir()?;
    let summary = check_data(root)?;
    log::info!("dataset at {}: {} windows", root.display(), summary.total());
    let data = HarData::load(root, config.channels)?;
    execute_on(config, &data)
}

/// Like [`execute`] but on already loaded data.
pub fn execute_on(config: &RunConfig, data: &HarData) -> Result<ResultBundle> {
    let scenario = config.scenario_spec()?;
    let mut runs = Vec::with_capacity(config.methods.len() * config.seeds.len());
    for &method in &config.methods {
        for &seed in &config.seeds {
            let protocol = config.protocol(method, seed);
            let run = match config.precision {
                Precision::F64 => run_scenario::<f64>(&scenario, &protocol, data),
                Precision::F32 => run_scenario::<f32>(&scenario, &protocol, data),
            }?;
            log::info!(
                "{} {method} seed {seed}: A = {:.4}, final a_r = {:.4}",
                scenario.label(),
                run.metrics.average_accuracy,
                run.metrics
                    .round_accuracy
                    .last()
                    .copied()
                    .unwrap_or(f64::NAN)
            );
            runs.push(RunRecord { method, seed, run });
        }
    }
    Ok(ResultBundle {
        schema: SCHEMA_VERSION,
        scenario: scenario.label(),
        config: config.clone(),
        runs,
    })
}

/// Execute and write the result files into `config.out`.
pub fn run(config: &RunConfig) -> Result<ResultBundle> {
    let bundle = execute(config)?;
    write_bundle(&bundle, &config.out)?;
    Ok(bundle)
}

/// Write `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// CSV text with a leading `# schema=...` line.
pub(crate) fn csv_text(schema: &str, header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut buf = format!("# schema={schema}/v{SCHEMA_VERSION}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(csv_error)?;
        for r in rows {
            w.write_record(r).map_err(csv_error)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn rounds_csv(bundle: &ResultBundle) -> Result<Vec<u8>> {
    let header = strings(&[
        "method",
        "seed",
        "round",
        "task",
        "objective",
        "class",
        "correct",
        "total",
        "class_accuracy",
        "round_accuracy",
        "train_loss",
        "epochs",
    ]);
    let mut rows = Vec::new();
    for r in &bundle.runs {
        for log in &r.run.logs {
            for c in &log.per_class {
                rows.push(vec![
                    r.method.to_string(),
                    r.seed.to_string(),
                    log.round.to_string(),
                    log.task.to_string(),
                    log.objective.to_string(),
                    c.class.to_string(),
                    c.correct.to_string(),
                    c.total.to_string(),
                    fmt_num(c.accuracy),
                    fmt_num(log.round_accuracy),
                    fmt_num(log.train_loss),
                    log.epochs.to_string(),
                ]);
            }
        }
    }
    csv_text("har-cl/rounds", &header, &rows)
}

pub fn metrics_csv(bundle: &ResultBundle) -> Result<Vec<u8>> {
    let mut header = strings(&["method", "seed"]);
    header.extend(bundle.metric_names());
    let rows: Vec<Vec<String>> = bundle
        .runs
        .iter()
        .map(|r| {
            let mut row = vec![r.method.to_string(), r.seed.to_string()];
            row.extend(
                r.run
                    .metrics
                    .named_values()
                    .into_iter()
                    .map(|(_, v)| fmt_num(v)),
            );
            row
        })
        .collect();
    csv_text("har-cl/metrics", &header, &rows)
}

pub fn aggregate_csv(bundle: &ResultBundle) -> Result<Vec<u8>> {
    let header = strings(&["method", "metric", "seeds", "mean", "min", "max"]);
    let agg = bundle.aggregate();
    let mut rows = Vec::new();
    for &m in &bundle.config.methods {
        for name in bundle.metric_names() {
            if let Some(s) = agg.get(&(m, name.clone())) {
                rows.push(vec![
                    m.to_string(),
                    name,
                    s.n.to_string(),
                    fmt_num(s.mean),
                    fmt_num(s.min),
                    fmt_num(s.max),
                ]);
            }
        }
    }
    csv_text("har-cl/aggregate", &header, &rows)
}

/// Write the five result files; returns their paths.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut summary = serde_json::to_vec_pretty(bundle)?;
    summary.push(b'\n');
    let files: [(&str, Vec<u8>); 5] = [
        (CONFIG_FILE, bundle.config.to_text().into_bytes()),
        (ROUNDS_FILE, rounds_csv(bundle)?),
        (METRICS_FILE, metrics_csv(bundle)?),
        (SUMMARY_FILE, summary),
        (AGGREGATE_FILE, aggregate_csv(bundle)?),
    ];
    let mut out = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        write_atomic(&path, &bytes)?;
        out.push(path);
    }
    Ok(out)
}

/// Read a bundle back from its summary file (`dir` or the file itself).
pub fn load_bundle(path: &Path) -> Result<ResultBundle> {
    let file = if path.is_dir() {
        path.join(SUMMARY_FILE)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&file)
        .map_err(|e| Error::Usage(format!("cannot read result bundle {}: {e}", file.display())))?;
    let bundle: ResultBundle = serde_json::from_str(&text)?;
    if bundle.schema != SCHEMA_VERSION {
        return Err(Error::structural(format!(
            "{} has schema {}, expected {SCHEMA_VERSION}",
            file.display(),
            bundle.schema
        )));
    }
    Ok(bundle)
}
