use serde::{Deserialize, Serialize};

use super::NUM_CLASSES;
use crate::error::{Error, Result};

/// Training windows drawn per class per round.
pub const DEFAULT_PER_CLASS: usize = 120;

/// Accepted `(scenario, case)` pairs; scenario 2 has no cases.
pub const VALID_SCENARIOS: [(u8, Option<u8>); 5] = [
    (0, Some(1)),
    (0, Some(2)),
    (1, Some(1)),
    (1, Some(2)),
    (2, None),
];

/// One training round: which classes it trains on and which task it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSpec {
    /// 1-based.
    pub round: usize,
    pub classes: Vec<usize>,
    /// 1-based; increments whenever the class set changes.
    pub task: usize,
    pub per_class: usize,
}

/// A full six-round class-incremental schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: u8,
    pub case: Option<u8>,
    pub rounds: Vec<RoundSpec>,
}

/// Task id per round: starts at 1, increments whenever the class set changes.
pub fn derive_task_ids(class_sets: &[Vec<usize>]) -> Vec<usize> {
    let mut task = 0;
    class_sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            if i == 0 || *set != class_sets[i - 1] {
                task += 1;
            }
            task
        })
        .collect()
}

fn blocks(scenario: u8, case: Option<u8>) -> Option<&'static [(usize, &'static [usize])]> {
    Some(match (scenario, case) {
        (0, Some(1)) => &[(3, &[0, 1]), (3, &[5])],
        (0, Some(2)) => &[(2, &[1, 2]), (2, &[4]), (2, &[5])],
        (1, Some(1)) => &[(3, &[1, 4]), (3, &[5])],
        (1, Some(2)) => &[(3, &[2, 5]), (3, &[3])],
        (2, _) => &[(3, &[0, 1]), (3, &[2])],
        _ => return None,
    })
}

/// The published schedule for `(scenario, case)`.
pub fn build_scenario(scenario: u8, case: Option<u8>) -> Result<ScenarioSpec> {
    let case = if scenario == 2 { None } else { case };
    let Some(blocks) = blocks(scenario, case) else {
        let valid: Vec<String> = VALID_SCENARIOS
            .iter()
            .map(|(s, c)| match c {
                Some(c) => format!("({s},{c})"),
                None => format!("({s},-)"),
            })
            .collect();
        return Err(Error::config(format!(
            "unknown scenario {scenario} case {case:?}; valid: {}",
            valid.join(", ")
        )));
    };
    let sets: Vec<Vec<usize>> = blocks
        .iter()
        .flat_map(|(n, classes)| std::iter::repeat_n(classes.to_vec(), *n))
        .collect();
    let tasks = derive_task_ids(&sets);
    let rounds = sets
        .into_iter()
        .zip(tasks)
        .enumerate()
        .map(|(i, (classes, task))| RoundSpec {
            round: i + 1,
            classes,
            task,
            per_class: DEFAULT_PER_CLASS,
        })
        .collect();
    let spec = ScenarioSpec {
        scenario,
        case,
        rounds,
    };
    spec.validate()?;
    Ok(spec)
}

impl ScenarioSpec {
    pub fn with_per_class(mut self, n: usize) -> Self {
        for r in &mut self.rounds {
            r.per_class = n;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds.is_empty() {
            return Err(Error::structural("scenario has no rounds"));
        }
        for (i, r) in self.rounds.iter().enumerate() {
            if r.round != i + 1 {
                return Err(Error::structural(format!(
                    "round {} listed at position {}",
                    r.round,
                    i + 1
                )));
            }
            if r.classes.is_empty() || r.classes.iter().any(|&c| c >= NUM_CLASSES) {
                return Err(Error::structural(format!(
                    "round {} has invalid classes {:?}",
                    r.round, r.classes
                )));
            }
        }
        let sets: Vec<_> = self.rounds.iter().map(|r| r.classes.clone()).collect();
        if derive_task_ids(&sets) != self.round_to_task() {
            return Err(Error::structural(
                "task ids do not follow class-set changes",
            ));
        }
        Ok(())
    }

    /// Short identifier such as `s0c1` or `s2`.
    pub fn label(&self) -> String {
        match self.case {
            Some(c) => format!("s{}c{c}", self.scenario),
            None => format!("s{}", self.scenario),
        }
    }

    pub fn round_to_task(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.task).collect()
    }

    pub fn num_tasks(&self) -> usize {
        self.rounds.last().map_or(0, |r| r.task)
    }

    /// Class set of each task, `task_classes()[d - 1]` for task d.
    pub fn task_classes(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for r in &self.rounds {
            if out.len() < r.task {
                out.push(r.classes.clone());
            }
        }
        out
    }

    /// Classes seen once `round` (1-based) has completed, ascending.
    pub fn seen_after(&self, round: usize) -> Vec<usize> {
        let mut seen: Vec<usize> = self.rounds[..round]
            .iter()
            .flat_map(|r| r.classes.iter().copied())
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    /// Rounds after which the task changes (consolidation points).
    pub fn task_boundaries(&self) -> Vec<usize> {
        self.rounds
            .windows(2)
            .filter(|w| w[0].task != w[1].task)
            .map(|w| w[0].round)
            .collect()
    }

    /// Windows of `class` the schedule draws across all rounds.
    pub fn demand(&self, class: usize) -> usize {
        self.rounds
            .iter()
            .filter(|r| r.classes.contains(&class))
            .map(|r| r.per_class)
            .sum()
    }
}
