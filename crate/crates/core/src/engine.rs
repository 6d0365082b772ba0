//! Class-incremental training protocol: pretraining, per-round SGD,
//! consolidation at task boundaries, and per-round evaluation.

use std::collections::BTreeSet;

use ndarray::{Array2, Array3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{HarData, HarDataset, RoundSpec, SamplePool, ScenarioSpec, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, MetricsTracker, TaskAccuracyMode};
use crate::nn::{
    evaluate_per_class, forward, grad_total_loss_with_teacher, lit, Architecture, Batch, CnnParams,
    Hyper, Mode, Scalar,
};
use crate::regularizers::{
    estimate_diag_fisher, CombineMode, FisherAnchor, LossSpec, Method, TeacherSnapshot,
};

const STREAM_INIT: u64 = 0;
const STREAM_POOL: u64 = 1;
const STREAM_TRAIN: u64 = 2;

/// When regularizer state is captured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsolidationMode {
    /// Only when the next round starts a new task.
    #[default]
    TaskBoundary,
    /// After every round but the last (ablation).
    PerRound,
}

impl std::str::FromStr for ConsolidationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "task-boundary" | "task" => Ok(ConsolidationMode::TaskBoundary),
            "per-round" | "round" => Ok(ConsolidationMode::PerRound),
            other => Err(Error::config(format!(
                "unknown consolidation mode '{other}' (expected task-boundary or per-round)"
            ))),
        }
    }
}

impl std::fmt::Display for ConsolidationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConsolidationMode::TaskBoundary => "task-boundary",
            ConsolidationMode::PerRound => "per-round",
        })
    }
}

/// Default SGD learning rate per method: the upper end of each method's range.
pub fn default_learning_rate(method: Method) -> f64 {
    match method {
        Method::Plain | Method::Lwf => 0.01,
        Method::Ewc | Method::EwcLwf => 5e-3,
    }
}

/// Everything that shapes one scenario run besides the data and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub method: Method,
    pub hyper: Hyper,
    pub combine: CombineMode,
    pub task_accuracy: TaskAccuracyMode,
    pub consolidation: ConsolidationMode,
    pub pretrain_per_class: usize,
    pub pretrain_epochs: usize,
    pub pretrain_learning_rate: f64,
    /// Cap on Fisher samples per consolidation; `None` uses the whole task.
    pub fisher_samples: Option<usize>,
    /// Network shape; `in_channels` is overridden by the data.
    pub architecture: Architecture,
}

impl ProtocolConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            hyper: Hyper {
                learning_rate: default_learning_rate(method),
                ..Hyper::default()
            },
            combine: CombineMode::Single,
            task_accuracy: TaskAccuracyMode::RoundMean,
            consolidation: ConsolidationMode::TaskBoundary,
            pretrain_per_class: 10,
            pretrain_epochs: 20,
            pretrain_learning_rate: 0.01,
            fisher_samples: None,
            architecture: Architecture::har(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        self.architecture.validate()?;
        if !(self.pretrain_learning_rate.is_finite() && self.pretrain_learning_rate > 0.0) {
            return Err(Error::config("pretrain learning rate must be positive"));
        }
        if self.architecture.classes != NUM_CLASSES {
            return Err(Error::config(format!(
                "the head must have {NUM_CLASSES} outputs"
            )));
        }
        if self.fisher_samples == Some(0) {
            return Err(Error::config("fisher sample cap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub task: usize,
    pub classes: Vec<usize>,
    /// Objective actually optimized (plain until regularizer state exists).
    pub objective: Method,
    /// Test accuracy per seen class, ascending by class.
    pub per_class: Vec<ClassAccuracy>,
    /// Pooled accuracy over all seen-class test windows.
    pub round_accuracy: f64,
    /// Mean batch objective over the last epoch.
    pub train_loss: f64,
    pub epochs: usize,
}

impl RoundLog {
    /// Pooled accuracy over the test windows of `classes`.
    pub fn pooled_accuracy(&self, classes: &[usize]) -> Option<f64> {
        let (c, t) = self
            .per_class
            .iter()
            .filter(|a| classes.contains(&a.class))
            .fold((0, 0), |(c, t), a| (c + a.correct, t + a.total));
        (t > 0).then(|| c as f64 / t as f64)
    }
}

/// Live model plus regularizer state for one run.
#[derive(Debug, Clone)]
pub struct TrainState<F: Scalar> {
    pub params: CnnParams<F>,
    teacher: Option<TeacherSnapshot<F>>,
    anchors: Vec<FisherAnchor<F>>,
    seen: BTreeSet<usize>,
    rng: ChaCha8Rng,
    config: ProtocolConfig,
    rounds_done: usize,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn map_divergence(err: Error, round: usize, epoch: usize) -> Error {
    match err {
        Error::Numeric(_) => Error::Divergence { round, epoch },
        other => other,
    }
}

impl<F: Scalar> TrainState<F> {
    /// State around the given starting parameters (normally the pretrained model).
    pub fn new(params: CnnParams<F>, config: ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let rng = stream(config.hyper.seed, STREAM_TRAIN);
        Ok(Self {
            params,
            teacher: None,
            anchors: Vec::new(),
            seen: BTreeSet::new(),
            rng,
            config,
            rounds_done: 0,
        })
    }

    pub fn teacher(&self) -> Option<&TeacherSnapshot<F>> {
        self.teacher.as_ref()
    }

    pub fn anchors(&self) -> &[FisherAnchor<F>] {
        &self.anchors
    }

    pub fn seen(&self) -> Vec<usize> {
        self.seen.iter().copied().collect()
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    /// The objective the next batch would use.
    pub fn loss_spec(&self) -> LossSpec<'_, F> {
        LossSpec::resolve(
            self.config.method,
            self.teacher.as_ref(),
            &self.anchors,
            self.config.hyper.alpha,
            self.config.combine,
        )
    }

    /// Train on `train` for the configured epochs, then evaluate on the test
    /// windows of every class seen so far.
    pub fn run_round(
        &mut self,
        round: &RoundSpec,
        train: &HarDataset,
        test: &HarDataset,
    ) -> Result<RoundLog> {
        if round.round != self.rounds_done + 1 {
            return Err(Error::Protocol(format!(
                "round {} run after {} completed rounds",
                round.round, self.rounds_done
            )));
        }
        let hist = train.class_histogram();
        for c in 0..NUM_CLASSES {
            let expected = if round.classes.contains(&c) {
                round.per_class
            } else {
                0
            };
            if hist[c] != expected {
                return Err(Error::structural(format!(
                    "round {} training data has {} windows of class {c}, expected {expected}",
                    round.round, hist[c]
                )));
            }
        }

        let hyper = self.config.hyper.clone();
        let inputs: Array3<F> = train.windows.mapv(lit);
        let spec = LossSpec::resolve(
            self.config.method,
            self.teacher.as_ref(),
            &self.anchors,
            hyper.alpha,
            self.config.combine,
        );
        let objective = spec.method;
        let teacher_logits = match spec.teacher {
            Some(t) if spec.method.needs_teacher() => {
                Some(forward(t.params(), inputs.view(), Mode::Eval)?)
            }
            _ => None,
        };
        let train_loss = train_epochs(
            &mut self.params,
            &spec,
            &inputs,
            &train.labels,
            teacher_logits.as_ref(),
            &hyper,
            hyper.learning_rate,
            hyper.epochs_per_round,
            &mut self.rng,
            round.round,
        )?;

        self.seen.extend(round.classes.iter().copied());
        self.rounds_done += 1;
        let seen = self.seen();
        let counts = evaluate_per_class(&self.params, test.examples(), &seen)?;
        let per_class: Vec<ClassAccuracy> = seen
            .iter()
            .map(|&c| {
                let n = counts[c];
                ClassAccuracy {
                    class: c,
                    correct: n.correct,
                    total: n.total,
                    accuracy: n.accuracy().unwrap_or(0.0),
                }
            })
            .collect();
        let (correct, total) = per_class
            .iter()
            .fold((0, 0), |(c, t), a| (c + a.correct, t + a.total));
        Ok(RoundLog {
            round: round.round,
            task: round.task,
            classes: round.classes.clone(),
            objective,
            per_class,
            round_accuracy: correct as f64 / total as f64,
            train_loss,
            epochs: hyper.epochs_per_round,
        })
    }

    /// Capture regularizer state after `completed`, before `next` starts.
    ///
    /// LwF refreshes the teacher; EWC appends an anchor whose Fisher is
    /// estimated on `task_data`; EWC+LwF does both.
    pub fn consolidate(
        &mut self,
        completed: &RoundSpec,
        next: Option<&RoundSpec>,
        task_data: &HarDataset,
    ) -> Result<()> {
        let Some(next) = next else {
            return Err(Error::Protocol(format!(
                "no round follows round {}",
                completed.round
            )));
        };
        if completed.round != self.rounds_done {
            return Err(Error::Protocol(format!(
                "consolidating round {} but {} rounds are done",
                completed.round, self.rounds_done
            )));
        }
        if self.config.consolidation == ConsolidationMode::TaskBoundary
            && next.task == completed.task
        {
            return Err(Error::Protocol(format!(
                "no task boundary between rounds {} and {}",
                completed.round, next.round
            )));
        }
        let method = self.config.method;
        if method.needs_teacher() {
            self.teacher = Some(TeacherSnapshot::new(
                self.params.clone(),
                self.seen(),
                self.config.hyper.temperature,
            )?);
        }
        if method.needs_anchors() {
            let fisher = estimate_diag_fisher(
                &self.params,
                task_data.examples(),
                self.config.fisher_samples,
            )?;
            self.anchors.push(FisherAnchor::new(
                completed.task,
                self.params.clone(),
                fisher,
                self.config.hyper.lambda,
            )?);
        }
        log::debug!("{method}: consolidated after round {}", completed.round);
        Ok(())
    }
}

/// Mini-batch SGD over `inputs` for `epochs` epochs; returns the mean batch
/// objective of the final epoch, weighted by batch size.
#[allow(clippy::too_many_arguments)]
fn train_epochs<F: Scalar>(
    params: &mut CnnParams<F>,
    spec: &LossSpec<'_, F>,
    inputs: &Array3<F>,
    labels: &[usize],
    teacher_logits: Option<&Array2<F>>,
    hyper: &Hyper,
    learning_rate: f64,
    epochs: usize,
    rng: &mut ChaCha8Rng,
    round: usize,
) -> Result<f64> {
    let n = labels.len();
    if n == 0 {
        return Err(Error::structural(format!(
            "round {round} has no training data"
        )));
    }
    let lr: F = lit(learning_rate);
    let mut order: Vec<usize> = (0..n).collect();
    let mut last = f64::NAN;
    for epoch in 1..=epochs {
        order.shuffle(rng);
        let mut sum = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let batch = Batch::new(
                inputs.select(Axis(0), chunk),
                chunk.iter().map(|&i| labels[i]).collect(),
            )?;
            let tl = teacher_logits.map(|t| t.select(Axis(0), chunk));
            let mode = Mode::Train {
                dropout: hyper.dropout_rate,
                rng: &mut *rng,
            };
            let (loss, grads) = grad_total_loss_with_teacher(
                spec,
                params,
                &batch,
                tl.as_ref().map(|t| t.view()),
                mode,
            )
            .map_err(|e| map_divergence(e, round, epoch))?;
            if !loss.is_finite() {
                return Err(Error::Divergence { round, epoch });
            }
            params.sgd_step(&grads, lr)?;
            sum += loss * chunk.len() as f64;
        }
        last = sum / n as f64;
        if !params.all_finite() {
            return Err(Error::Divergence { round, epoch });
        }
    }
    Ok(last)
}

/// Fresh He-initialized parameters trained with plain cross-entropy on the
/// balanced pretraining subset.
pub fn pretrain<F: Scalar>(
    arch: Architecture,
    data: &HarDataset,
    indices: &[usize],
    config: &ProtocolConfig,
) -> Result<CnnParams<F>> {
    let mut init_rng = stream(config.hyper.seed, STREAM_INIT);
    let mut params = CnnParams::<F>::init(arch, &mut init_rng)?;
    if indices.is_empty() || config.pretrain_epochs == 0 {
        return Ok(params);
    }
    let subset = data.select(indices);
    let inputs: Array3<F> = subset.windows.mapv(lit);
    train_epochs(
        &mut params,
        &LossSpec::plain(),
        &inputs,
        &subset.labels,
        None,
        &config.hyper,
        config.pretrain_learning_rate,
        config.pretrain_epochs,
        &mut init_rng,
        0,
    )?;
    Ok(params)
}

/// Fail early if the schedule would draw more windows of a class than exist.
pub fn check_supply(
    scenario: &ScenarioSpec,
    train: &HarDataset,
    pretrain_per_class: usize,
) -> Result<()> {
    let hist = train.class_histogram();
    for class in 0..NUM_CLASSES {
        if hist[class] < pretrain_per_class {
            return Err(Error::DataExhaustion {
                class,
                round: None,
                requested: pretrain_per_class,
                remaining: hist[class],
            });
        }
        let mut left = hist[class] - pretrain_per_class;
        for r in scenario
            .rounds
            .iter()
            .filter(|r| r.classes.contains(&class))
        {
            if left < r.per_class {
                return Err(Error::DataExhaustion {
                    class,
                    round: Some(r.round),
                    requested: r.per_class,
                    remaining: left,
                });
            }
            left -= r.per_class;
        }
    }
    Ok(())
}

fn prepare<F: Scalar>(
    config: &ProtocolConfig,
    data: &HarData,
) -> Result<(SamplePool, CnnParams<F>)> {
    let arch = config.architecture.with_channels(data.channels());
    let mut pool = SamplePool::new(&data.train.labels, stream(config.hyper.seed, STREAM_POOL))?;
    let pre_idx = pool.pretrain_subset(config.pretrain_per_class)?;
    let params = pretrain::<F>(arch, &data.train, &pre_idx, config)?;
    Ok((pool, params))
}

/// The model every scenario run of this seed starts from.
pub fn pretrained_model<F: Scalar>(
    config: &ProtocolConfig,
    data: &HarData,
) -> Result<CnnParams<F>> {
    config.validate()?;
    prepare(config, data).map(|(_, p)| p)
}

/// Logs, metrics and consolidation points of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub logs: Vec<RoundLog>,
    pub metrics: MetricsReport,
    /// Rounds after which regularizer state was captured.
    pub consolidated_after: Vec<usize>,
}

/// Pretrain, then run every round of `scenario`, consolidating between tasks.
pub fn run_scenario<F: Scalar>(
    scenario: &ScenarioSpec,
    config: &ProtocolConfig,
    data: &HarData,
) -> Result<ScenarioRun> {
    config.validate()?;
    scenario.validate()?;
    check_supply(scenario, &data.train, config.pretrain_per_class)?;

    let (mut pool, params) = prepare::<F>(config, data)?;
    let mut state = TrainState::new(params, config.clone())?;

    let task_classes = scenario.task_classes();
    let mut tracker = MetricsTracker::new(scenario.round_to_task(), config.task_accuracy)?;
    let mut logs = Vec::with_capacity(scenario.rounds.len());
    let mut consolidated_after = Vec::new();
    let mut task_indices: Vec<usize> = Vec::new();

    for (i, round) in scenario.rounds.iter().enumerate() {
        let idx = pool.sample_round(&round.classes, round.per_class, Some(round.round))?;
        let round_data = data.train.select(&idx);
        let log = state.run_round(round, &round_data, &data.test)?;

        let per_task: Vec<(usize, f64)> = (1..=round.task)
            .map(|d| {
                log.pooled_accuracy(&task_classes[d - 1])
                    .map(|a| (d, a))
                    .ok_or_else(|| Error::EmptyEvaluation {
                        classes: task_classes[d - 1].clone(),
                    })
            })
            .collect::<Result<_>>()?;
        tracker.push_round(round.round, log.round_accuracy, &per_task)?;
        logs.push(log);

        match config.consolidation {
            ConsolidationMode::TaskBoundary => task_indices.extend_from_slice(&idx),
            ConsolidationMode::PerRound => task_indices = idx,
        }
        let next = scenario.rounds.get(i + 1);
        let boundary = match (next, config.consolidation) {
            (None, _) => false,
            (Some(n), ConsolidationMode::TaskBoundary) => n.task != round.task,
            (Some(_), ConsolidationMode::PerRound) => true,
        };
        if boundary {
            task_indices.sort_unstable();
            state.consolidate(round, next, &data.train.select(&task_indices))?;
            consolidated_after.push(round.round);
            task_indices.clear();
        }
    }

    Ok(ScenarioRun {
        logs,
        metrics: tracker.finish()?,
        consolidated_after,
    })
}
