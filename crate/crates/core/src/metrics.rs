//! Class-incremental evaluation metrics: overall average accuracy, average
//! accuracy at task t, and forgetting.
//!
//! Tasks and rounds are 1-based throughout. `a_{t,d}` is the accuracy on
//! task d's test classes after learning task t; with several rounds per
//! task it is averaged over the rounds of task t (or taken from the final
//! round only, see [`TaskAccuracyMode`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How `a_{t,d}` aggregates the rounds that belong to task t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskAccuracyMode {
    /// Mean over every round in which task t was trained.
    #[default]
    RoundMean,
    /// Accuracy after the last round of task t.
    FinalRound,
}

impl std::str::FromStr for TaskAccuracyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "round-mean" | "mean" => Ok(TaskAccuracyMode::RoundMean),
            "final-round" | "final" => Ok(TaskAccuracyMode::FinalRound),
            other => Err(Error::config(format!(
                "unknown accuracy mode '{other}' (expected round-mean or final-round)"
            ))),
        }
    }
}

impl std::fmt::Display for TaskAccuracyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskAccuracyMode::RoundMean => "round-mean",
            TaskAccuracyMode::FinalRound => "final-round",
        })
    }
}

/// Accuracy on task `eval_task`'s test classes, measured after `round`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub round: usize,
    pub eval_task: usize,
    pub accuracy: f64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::structural(format!("{name} = {v} outside [0, 1]")))
    }
}

/// `A = (1/R) * sum_r a_r`.
pub fn overall_average_accuracy(round_accuracy: &[f64]) -> Result<f64> {
    if round_accuracy.is_empty() {
        return Err(Error::structural(
            "overall average accuracy needs at least one round",
        ));
    }
    for &a in round_accuracy {
        check_unit("a_r", a)?;
    }
    Ok(round_accuracy.iter().sum::<f64>() / round_accuracy.len() as f64)
}

/// Rounds (1-based) that belong to `task` under a round -> task map.
pub fn rounds_of_task(round_to_task: &[usize], task: usize) -> Vec<usize> {
    round_to_task
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t == task)
        .map(|(i, _)| i + 1)
        .collect()
}

/// `a_{t,d}` from raw records. `round_to_task[r - 1]` is the task of round r.
pub fn task_accuracy(
    records: &[AccuracyRecord],
    t: usize,
    d: usize,
    round_to_task: &[usize],
    mode: TaskAccuracyMode,
) -> Result<f64> {
    if d == 0 || d > t {
        return Err(Error::structural(format!(
            "a_{{{t},{d}}} requires t >= d >= 1"
        )));
    }
    let mut rounds = rounds_of_task(round_to_task, t);
    if rounds.is_empty() {
        return Err(Error::structural(format!("task {t} has no rounds")));
    }
    if mode == TaskAccuracyMode::FinalRound {
        rounds = vec![*rounds.last().unwrap()];
    }
    let mut values = Vec::with_capacity(rounds.len());
    let mut missing = Vec::new();
    for &r in &rounds {
        match records
            .iter()
            .find(|rec| rec.round == r && rec.eval_task == d)
        {
            Some(rec) => {
                check_unit("accuracy", rec.accuracy)?;
                values.push(rec.accuracy);
            }
            None => missing.push(r),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingRecords {
            task: t,
            eval_task: d,
            rounds: missing,
        });
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// `A_t = (1/t) * sum_{d=1..t} a_{t,d}`; `row[d - 1]` holds `a_{t,d}`.
pub fn average_accuracy_at_task(row: &[Option<f64>], t: usize) -> Result<f64> {
    if t == 0 || row.len() < t {
        return Err(Error::structural(format!(
            "A_{t} needs a_{{{t},d}} for d = 1..{t}"
        )));
    }
    let mut sum = 0.0;
    for (d, v) in row.iter().take(t).enumerate() {
        match v {
            Some(a) => sum += a,
            None => {
                return Err(Error::structural(format!(
                    "A_{t}: a_{{{t},{}}} is missing",
                    d + 1
                )))
            }
        }
    }
    Ok(sum / t as f64)
}

/// Lower-triangular table of `a_{t,d}` for `1 <= d <= t <= tasks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMatrix {
    rows: Vec<Vec<Option<f64>>>,
}

impl TaskMatrix {
    pub fn new(tasks: usize) -> Self {
        Self {
            rows: (1..=tasks).map(|t| vec![None; t]).collect(),
        }
    }

    pub fn tasks(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, t: usize, d: usize) -> Option<f64> {
        self.rows
            .get(t.checked_sub(1)?)?
            .get(d.checked_sub(1)?)
            .copied()
            .flatten()
    }

    pub fn set(&mut self, t: usize, d: usize, value: f64) -> Result<()> {
        check_unit("a_{t,d}", value)?;
        let slot = t
            .checked_sub(1)
            .and_then(|ti| self.rows.get_mut(ti))
            .and_then(|row| d.checked_sub(1).and_then(|di| row.get_mut(di)))
            .ok_or_else(|| Error::structural(format!("a_{{{t},{d}}} outside the task table")))?;
        *slot = Some(value);
        Ok(())
    }

    pub fn row(&self, t: usize) -> &[Option<f64>] {
        &self.rows[t - 1]
    }
}

/// `f_{t,d} = max_{i in d..t-1} a_{i,d} - a_{t,d}` for `d = 1..t-1`, and
/// `F_t`, their mean.
pub fn forgetting(history: &TaskMatrix, t: usize) -> Result<(Vec<f64>, f64)> {
    if t < 2 {
        return Err(Error::UndefinedMetric(format!(
            "forgetting F_{t} needs t >= 2"
        )));
    }
    let need = |i: usize, d: usize| {
        history
            .get(i, d)
            .ok_or_else(|| Error::structural(format!("F_{t}: a_{{{i},{d}}} is missing")))
    };
    let mut pairs = Vec::with_capacity(t - 1);
    for d in 1..t {
        let mut best = f64::NEG_INFINITY;
        for i in d..t {
            best = best.max(need(i, d)?);
        }
        pairs.push(best - need(t, d)?);
    }
    let mean = pairs.iter().sum::<f64>() / (t - 1) as f64;
    Ok((pairs, mean))
}

/// All metrics for one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: TaskAccuracyMode,
    /// `round_to_task[r - 1]` is the task trained in round r.
    pub round_to_task: Vec<usize>,
    /// `a_r` per round.
    pub round_accuracy: Vec<f64>,
    /// `A`.
    pub average_accuracy: f64,
    pub task_accuracy: TaskMatrix,
    /// `A_t` for t = 1..tasks.
    pub task_average: Vec<f64>,
    /// `f_{t,d}` keyed by t (t >= 2), d = 1..t-1.
    pub forgetting_pairs: BTreeMap<usize, Vec<f64>>,
    /// `F_t` keyed by t (t >= 2).
    pub forgetting: BTreeMap<usize, f64>,
}

impl MetricsReport {
    pub fn tasks(&self) -> usize {
        self.task_accuracy.tasks()
    }

    /// `(name, value)` pairs in table order: A, A_1..A_n, F_2..F_n.
    pub fn named_values(&self) -> Vec<(String, f64)> {
        let mut out = vec![("A".to_string(), self.average_accuracy)];
        for (i, a) in self.task_average.iter().enumerate() {
            out.push((format!("A_{}", i + 1), *a));
        }
        for (t, f) in &self.forgetting {
            out.push((format!("F_{t}"), *f));
        }
        out
    }
}

/// Collects per-round accuracies as training proceeds and assembles the
/// [`MetricsReport`] at the end.
#[derive(Debug, Clone)]
pub struct MetricsTracker {
    round_to_task: Vec<usize>,
    mode: TaskAccuracyMode,
    round_accuracy: Vec<f64>,
    records: Vec<AccuracyRecord>,
}

impl MetricsTracker {
    pub fn new(round_to_task: Vec<usize>, mode: TaskAccuracyMode) -> Result<Self> {
        if round_to_task.is_empty() {
            return Err(Error::structural("schedule has no rounds"));
        }
        if round_to_task[0] != 1
            || round_to_task
                .windows(2)
                .any(|w| w[1] != w[0] && w[1] != w[0] + 1)
        {
            return Err(Error::structural(format!(
                "task ids {round_to_task:?} must start at 1 and increase by at most one per round"
            )));
        }
        Ok(Self {
            round_to_task,
            mode,
            round_accuracy: Vec::new(),
            records: Vec::new(),
        })
    }

    /// Record round `round`: its seen-class accuracy `a_r` and the accuracy on
    /// each task trained so far, as `(task, accuracy)` pairs.
    pub fn push_round(
        &mut self,
        round: usize,
        round_accuracy: f64,
        per_task: &[(usize, f64)],
    ) -> Result<()> {
        if round != self.round_accuracy.len() + 1 || round > self.round_to_task.len() {
            return Err(Error::structural(format!(
                "round {round} pushed out of order (expected {})",
                self.round_accuracy.len() + 1
            )));
        }
        check_unit("a_r", round_accuracy)?;
        let current = self.round_to_task[round - 1];
        for &(d, acc) in per_task {
            if d == 0 || d > current {
                return Err(Error::structural(format!(
                    "round {round} reports unseen task {d}"
                )));
            }
            check_unit("accuracy", acc)?;
            self.records.push(AccuracyRecord {
                round,
                eval_task: d,
                accuracy: acc,
            });
        }
        self.round_accuracy.push(round_accuracy);
        Ok(())
    }

    pub fn records(&self) -> &[AccuracyRecord] {
        &self.records
    }

    pub fn finish(&self) -> Result<MetricsReport> {
        if self.round_accuracy.len() != self.round_to_task.len() {
            return Err(Error::structural(format!(
                "{} of {} rounds recorded",
                self.round_accuracy.len(),
                self.round_to_task.len()
            )));
        }
        let tasks = *self.round_to_task.last().unwrap();
        let mut matrix = TaskMatrix::new(tasks);
        for t in 1..=tasks {
            for d in 1..=t {
                let a = task_accuracy(&self.records, t, d, &self.round_to_task, self.mode)?;
                matrix.set(t, d, a)?;
            }
        }
        let task_average = (1..=tasks)
            .map(|t| average_accuracy_at_task(matrix.row(t), t))
            .collect::<Result<Vec<_>>>()?;
        let mut forgetting_pairs = BTreeMap::new();
        let mut forgetting_mean = BTreeMap::new();
        for t in 2..=tasks {
            let (pairs, mean) = forgetting(&matrix, t)?;
            forgetting_pairs.insert(t, pairs);
            forgetting_mean.insert(t, mean);
        }
        Ok(MetricsReport {
            mode: self.mode,
            round_to_task: self.round_to_task.clone(),
            round_accuracy: self.round_accuracy.clone(),
            average_accuracy: overall_average_accuracy(&self.round_accuracy)?,
            task_accuracy: matrix,
            task_average,
            forgetting_pairs,
            forgetting: forgetting_mean,
        })
    }
}
