use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_text, fmt_num, write_atomic, ResultBundle};
use crate::error::{Error, Result};
use crate::regularizers::Method;

/// Seed aggregate of one table cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl CellStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            n,
            mean: values.iter().sum::<f64>() / n as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Method-by-metric comparison for one schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub scenario: String,
    pub methods: Vec<Method>,
    pub metrics: Vec<String>,
    pub cells: BTreeMap<(Method, String), CellStats>,
    pub seeds: BTreeMap<Method, Vec<u64>>,
}

/// Merge bundles of the same schedule. Runs repeated across bundles
/// (same method and seed) are rejected.
pub fn report(bundles: &[ResultBundle]) -> Result<ReportTable> {
    let first = bundles
        .first()
        .ok_or_else(|| Error::Usage("report needs at least one result bundle".into()))?;
    let metrics = first.metric_names();
    let mut values: BTreeMap<(Method, String), Vec<f64>> = BTreeMap::new();
    let mut seeds: BTreeMap<Method, Vec<u64>> = BTreeMap::new();
    let mut taken = BTreeSet::new();
    for b in bundles {
        if b.scenario != first.scenario {
            return Err(Error::structural(format!(
                "cannot merge results of {} with {}",
                b.scenario, first.scenario
            )));
        }
        if b.metric_names() != metrics {
            return Err(Error::structural(format!(
                "bundles of {} disagree on metric columns",
                b.scenario
            )));
        }
        for r in &b.runs {
            if !taken.insert((r.method, r.seed)) {
                return Err(Error::structural(format!(
                    "{} seed {} appears in more than one bundle",
                    r.method, r.seed
                )));
            }
            seeds.entry(r.method).or_default().push(r.seed);
            for (name, v) in r.run.metrics.named_values() {
                values.entry((r.method, name)).or_default().push(v);
            }
        }
    }
    let methods = Method::ALL
        .into_iter()
        .filter(|m| seeds.contains_key(m))
        .collect();
    Ok(ReportTable {
        scenario: first.scenario.clone(),
        methods,
        metrics,
        cells: values
            .into_iter()
            .map(|(k, v)| (k, CellStats::of(&v)))
            .collect(),
        seeds,
    })
}

impl ReportTable {
    fn multi_seed(&self) -> bool {
        self.seeds.values().any(|s| s.len() > 1)
    }

    pub fn cell(&self, method: Method, metric: &str) -> Option<&CellStats> {
        self.cells.get(&(method, metric.to_string()))
    }

    /// One row per metric; one column per method, or a mean/min/max triplet
    /// per method when any method has several seeds.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let triplets = self.multi_seed();
        let mut header = vec!["metric".to_string()];
        for m in &self.methods {
            if triplets {
                for s in ["mean", "min", "max"] {
                    header.push(format!("{} {s}", m.label()));
                }
            } else {
                header.push(m.label().to_string());
            }
        }
        let rows: Vec<Vec<String>> = self
            .metrics
            .iter()
            .map(|name| {
                let mut row = vec![name.clone()];
                for &m in &self.methods {
                    let c = self.cell(m, name);
                    let f = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
                    if triplets {
                        row.extend([
                            f(c.map(|c| c.mean)),
                            f(c.map(|c| c.min)),
                            f(c.map(|c| c.max)),
                        ]);
                    } else {
                        row.push(f(c.map(|c| c.mean)));
                    }
                }
                row
            })
            .collect();
        csv_text(&format!("har-cl/report/{}", self.scenario), &header, &rows)
    }

    /// Human-readable table for the terminal.
    pub fn to_markdown(&self) -> String {
        let mut s = format!("Scenario {}\n\n| metric |", self.scenario);
        for m in &self.methods {
            let n = self.seeds[m].len();
            let _ = write!(s, " {} (n={n}) |", m.label());
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(self.methods.len()));
        s.push('\n');
        for name in &self.metrics {
            let _ = write!(s, "| {name} |");
            for &m in &self.methods {
                match self.cell(m, name) {
                    Some(c) if c.n > 1 => {
                        let _ = write!(s, " {:.3} [{:.3}, {:.3}] |", c.mean, c.min, c.max);
                    }
                    Some(c) => {
                        let _ = write!(s, " {:.3} |", c.mean);
                    }
                    None => s.push_str(" |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

pub fn write_report(table: &ReportTable, path: &Path) -> Result<()> {
    write_atomic(path, &table.to_csv()?)
}
