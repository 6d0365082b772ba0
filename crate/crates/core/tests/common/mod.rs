//! Plain-loop reference implementation of the network and objectives,
//! written independently of the library's im2col / ndarray code paths.

#![allow(dead_code)]

use cl_har::nn::{Architecture, CnnParams};
use cl_har::regularizers::{CombineMode, Method};
use ndarray::{Array3, ArrayView2};

pub fn reduced_arch() -> Architecture {
    Architecture {
        in_channels: 2,
        length: 12,
        filters: 3,
        kernel: 3,
        pool: 2,
        hidden: 8,
        classes: 4,
    }
}

/// Sixteen parameters: one filter of width two, two hidden units, three classes.
pub fn tiny_arch() -> Architecture {
    Architecture {
        in_channels: 1,
        length: 3,
        filters: 1,
        kernel: 2,
        pool: 2,
        hidden: 2,
        classes: 3,
    }
}

pub struct Trace {
    conv: Vec<Vec<f64>>,
    arg: Vec<Vec<usize>>,
    flat: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Forward pass for one window `[channels, length]`, eval mode.
pub fn ref_forward(p: &CnnParams<f64>, x: ArrayView2<'_, f64>) -> Trace {
    let a = p.arch;
    let conv_len = a.length - a.kernel + 1;
    let pooled = conv_len / a.pool;
    let mut conv = vec![vec![0.0; conv_len]; a.filters];
    for f in 0..a.filters {
        for t in 0..conv_len {
            let mut s = p.conv_bias[f];
            for k in 0..a.kernel {
                for c in 0..a.in_channels {
                    s += p.conv_weights[[f, k, c]] * x[[c, t + k]];
                }
            }
            conv[f][t] = s;
        }
    }
    let mut arg = vec![vec![0; pooled]; a.filters];
    let mut flat = vec![0.0; pooled * a.filters];
    for f in 0..a.filters {
        for q in 0..pooled {
            let mut best = 0;
            for j in 1..a.pool {
                if conv[f][q * a.pool + j].max(0.0) > conv[f][q * a.pool + best].max(0.0) {
                    best = j;
                }
            }
            arg[f][q] = best;
            flat[q * a.filters + f] = conv[f][q * a.pool + best].max(0.0);
        }
    }
    let mut hidden_pre = vec![0.0; a.hidden];
    for j in 0..a.hidden {
        let mut s = p.dense_bias[j];
        for (i, v) in flat.iter().enumerate() {
            s += p.dense_weights[[j, i]] * v;
        }
        hidden_pre[j] = s;
    }
    let hidden: Vec<f64> = hidden_pre.iter().map(|v| v.max(0.0)).collect();
    let mut logits = vec![0.0; a.classes];
    for k in 0..a.classes {
        let mut s = p.head_bias[k];
        for j in 0..a.hidden {
            s += p.head_weights[[k, j]] * hidden[j];
        }
        logits[k] = s;
    }
    Trace {
        conv,
        arg,
        flat,
        hidden_pre,
        hidden,
        logits,
    }
}

/// Parameter gradient of one window given `dL/dlogits`.
pub fn ref_backward(
    p: &CnnParams<f64>,
    x: ArrayView2<'_, f64>,
    tr: &Trace,
    dz: &[f64],
) -> CnnParams<f64> {
    let a = p.arch;
    let mut g = CnnParams::<f64>::zeros(a);
    let mut dh = vec![0.0; a.hidden];
    for k in 0..a.classes {
        g.head_bias[k] += dz[k];
        for j in 0..a.hidden {
            g.head_weights[[k, j]] += dz[k] * tr.hidden[j];
            dh[j] += p.head_weights[[k, j]] * dz[k];
        }
    }
    let mut dflat = vec![0.0; tr.flat.len()];
    for j in 0..a.hidden {
        let d = if tr.hidden_pre[j] > 0.0 { dh[j] } else { 0.0 };
        g.dense_bias[j] += d;
        for i in 0..tr.flat.len() {
            g.dense_weights[[j, i]] += d * tr.flat[i];
            dflat[i] += p.dense_weights[[j, i]] * d;
        }
    }
    for f in 0..a.filters {
        for (q, &best) in tr.arg[f].iter().enumerate() {
            let t = q * a.pool + best;
            if tr.conv[f][t] <= 0.0 {
                continue;
            }
            let d = dflat[q * a.filters + f];
            g.conv_bias[f] += d;
            for k in 0..a.kernel {
                for c in 0..a.in_channels {
                    g.conv_weights[[f, k, c]] += d * x[[c, t + k]];
                }
            }
        }
    }
    g
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    log_softmax(z).into_iter().map(f64::exp).collect()
}

/// Cross-entropy of one window and its logit gradient.
pub fn ref_ce(z: &[f64], y: usize) -> (f64, Vec<f64>) {
    let lp = log_softmax(z);
    let mut d: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
    d[y] -= 1.0;
    (-lp[y], d)
}

/// Distillation term of one window over `old` classes at temperature `t`.
pub fn ref_kd(teacher: &[f64], student: &[f64], old: &[usize], t: f64) -> f64 {
    let tz: Vec<f64> = old.iter().map(|&c| teacher[c] / t).collect();
    let sz: Vec<f64> = old.iter().map(|&c| student[c] / t).collect();
    let y = softmax(&tz);
    let ls = log_softmax(&sz);
    -y.iter().zip(&ls).map(|(a, b)| a * b).sum::<f64>()
}

pub struct RefAnchor {
    pub star: Vec<f64>,
    pub fisher: Vec<f64>,
    pub lambda: f64,
}

pub fn ref_penalty(theta: &[f64], anchors: &[RefAnchor]) -> f64 {
    anchors
        .iter()
        .map(|a| {
            0.5 * a.lambda
                * theta
                    .iter()
                    .zip(&a.star)
                    .zip(&a.fisher)
                    .map(|((t, s), f)| f * (t - s) * (t - s))
                    .sum::<f64>()
        })
        .sum()
}

pub struct RefTeacher<'a> {
    pub params: &'a CnnParams<f64>,
    pub old: &'a [usize],
    pub temperature: f64,
}

pub struct RefObjective<'a> {
    pub method: Method,
    pub alpha: f64,
    pub combine: CombineMode,
    pub teacher: Option<RefTeacher<'a>>,
    pub anchors: &'a [RefAnchor],
}

/// Batch objective value, eval mode, computed entirely by the reference.
pub fn ref_objective(
    obj: &RefObjective<'_>,
    p: &CnnParams<f64>,
    x: &Array3<f64>,
    y: &[usize],
) -> f64 {
    let b = y.len() as f64;
    let mut ce = 0.0;
    let mut kd = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let z = ref_forward(p, x.index_axis(ndarray::Axis(0), i)).logits;
        ce += ref_ce(&z, label).0 / b;
        if let Some(t) = &obj.teacher {
            let tz = ref_forward(t.params, x.index_axis(ndarray::Axis(0), i)).logits;
            kd += ref_kd(&tz, &z, t.old, t.temperature) / b;
        }
    }
    let pen = ref_penalty(&p.to_flat(), obj.anchors);
    let a = obj.alpha;
    match (obj.method, obj.combine) {
        (Method::Plain, _) => ce,
        (Method::Lwf, _) => a * ce + (1.0 - a) * kd,
        (Method::Ewc, _) => ce + pen,
        (Method::EwcLwf, CombineMode::Single) => a * ce + (1.0 - a) * kd + pen,
        (Method::EwcLwf, CombineMode::Literal) => ce + (a * ce + (1.0 - a) * kd) + (ce + pen),
    }
}

/// Empirical diagonal Fisher by brute force: mean over windows of the
/// squared per-window cross-entropy gradient.
pub fn ref_fisher(p: &CnnParams<f64>, x: &Array3<f64>, y: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0; p.num_params()];
    for (i, &label) in y.iter().enumerate() {
        let xi = x.index_axis(ndarray::Axis(0), i);
        let tr = ref_forward(p, xi);
        let (_, dz) = ref_ce(&tr.logits, label);
        let g = ref_backward(p, xi, &tr, &dz).to_flat();
        for (a, v) in acc.iter_mut().zip(g) {
            *a += v * v;
        }
    }
    acc.iter().map(|v| v / y.len() as f64).collect()
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

pub mod gradcheck {
    use super::*;
    use cl_har::nn::{grad_total_loss, Batch, Mode};
    use cl_har::regularizers::{FisherAnchor, LossSpec, TeacherSnapshot};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub const EPS: f64 = 1e-5;
    /// Denominator floor of the relative error.
    pub const REL_FLOOR: f64 = 1e-6;

    pub struct Setup {
        pub params: CnnParams<f64>,
        pub batch: Batch<f64>,
        pub teacher: TeacherSnapshot<f64>,
        pub anchors: Vec<FisherAnchor<f64>>,
        pub ref_anchors: Vec<RefAnchor>,
    }

    pub fn setup(seed: u64) -> Setup {
        let arch = reduced_arch();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = CnnParams::<f64>::init(arch, &mut rng).unwrap();
        let mut p = params.clone();
        // non-zero biases so no bias gradient is trivially structural
        for b in p
            .conv_bias
            .iter_mut()
            .chain(p.dense_bias.iter_mut())
            .chain(p.head_bias.iter_mut())
        {
            *b = rng.gen_range(-0.1..0.1);
        }
        let x = Array3::from_shape_fn((5, arch.in_channels, arch.length), |_| {
            rng.gen_range(-1.0..1.0)
        });
        let y: Vec<usize> = (0..5).map(|_| rng.gen_range(0..arch.classes)).collect();
        let teacher_params = CnnParams::<f64>::init(arch, &mut rng).unwrap();
        let teacher = TeacherSnapshot::new(teacher_params, vec![0, 1, 2], 3.0).unwrap();
        let mut anchors = Vec::new();
        let mut ref_anchors = Vec::new();
        for (task, lambda) in [(1, 5.0), (2, 2.0)] {
            let mut star = p.clone();
            for v in star.iter_mut() {
                *v += rng.gen_range(-0.2..0.2);
            }
            let mut fisher = p.zeros_like();
            for v in fisher.iter_mut() {
                *v = rng.gen_range(0.0..1.0);
            }
            ref_anchors.push(RefAnchor {
                star: star.to_flat(),
                fisher: fisher.to_flat(),
                lambda,
            });
            anchors.push(FisherAnchor::new(task, star, fisher, lambda).unwrap());
        }
        Setup {
            params: p,
            batch: Batch::new(x, y).unwrap(),
            teacher,
            anchors,
            ref_anchors,
        }
    }

    #[derive(Debug, Clone, Copy)]
    pub struct GradReport {
        pub params: usize,
        /// Library analytic gradient vs central differences of the library objective.
        pub lib_fd: f64,
        /// Library analytic gradient vs central differences of the reference objective.
        pub ref_fd: f64,
        /// Library objective vs reference objective at the base point.
        pub value_gap: f64,
    }

    pub fn spec<'a>(s: &'a Setup, method: Method, combine: CombineMode) -> LossSpec<'a, f64> {
        LossSpec {
            method,
            teacher: Some(&s.teacher),
            anchors: &s.anchors,
            alpha: 0.3,
            combine,
        }
    }

    pub fn check(method: Method, combine: CombineMode, seed: u64) -> GradReport {
        let s = setup(seed);
        let sp = spec(&s, method, combine);
        let obj = RefObjective {
            method,
            alpha: 0.3,
            combine,
            teacher: Some(RefTeacher {
                params: s.teacher.params(),
                old: s.teacher.old_classes(),
                temperature: 3.0,
            }),
            anchors: &s.ref_anchors,
        };
        let (base, grads) = grad_total_loss(&sp, &s.params, &s.batch, Mode::Eval).unwrap();
        let analytic = grads.to_flat();
        let value_gap =
            (base - ref_objective(&obj, &s.params, &s.batch.inputs, &s.batch.labels)).abs();

        let theta = s.params.to_flat();
        let mut probe = s.params.clone();
        let mut lib_fd: f64 = 0.0;
        let mut ref_fd: f64 = 0.0;
        for i in 0..theta.len() {
            let mut eval = |delta: f64| {
                let mut t = theta.clone();
                t[i] += delta;
                probe.set_flat(&t).unwrap();
                let lib = grad_total_loss(&sp, &probe, &s.batch, Mode::Eval)
                    .unwrap()
                    .0;
                let r = ref_objective(&obj, &probe, &s.batch.inputs, &s.batch.labels);
                (lib, r)
            };
            let (lp, rp) = eval(EPS);
            let (lm, rm) = eval(-EPS);
            lib_fd = lib_fd.max(rel_err(analytic[i], (lp - lm) / (2.0 * EPS), REL_FLOOR));
            ref_fd = ref_fd.max(rel_err(analytic[i], (rp - rm) / (2.0 * EPS), REL_FLOOR));
        }
        GradReport {
            params: theta.len(),
            lib_fd,
            ref_fd,
            value_gap,
        }
    }

    /// Training-mode check: the dropout mask is re-drawn from the same seed
    /// for every evaluation, so the objective is a fixed smooth function.
    pub fn check_dropout(method: Method, seed: u64) -> f64 {
        let s = setup(seed);
        let sp = spec(&s, method, CombineMode::Single);
        let eval = |p: &CnnParams<f64>| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd0);
            grad_total_loss(
                &sp,
                p,
                &s.batch,
                Mode::Train {
                    dropout: 0.5,
                    rng: &mut rng,
                },
            )
            .unwrap()
        };
        let analytic = eval(&s.params).1.to_flat();
        let theta = s.params.to_flat();
        let mut probe = s.params.clone();
        let mut worst: f64 = 0.0;
        for i in 0..theta.len() {
            let mut at = |d: f64| {
                let mut t = theta.clone();
                t[i] += d;
                probe.set_flat(&t).unwrap();
                eval(&probe).0
            };
            let fd = (at(EPS) - at(-EPS)) / (2.0 * EPS);
            worst = worst.max(rel_err(analytic[i], fd, REL_FLOOR));
        }
        worst
    }
}

/// Metrics recomputed from round logs alone, without the library's
/// metrics module: `(A, [A_t], [(t, F_t)])`.
pub fn recompute_metrics(
    logs: &[cl_har::engine::RoundLog],
    scenario: &cl_har::data::ScenarioSpec,
    final_round_only: bool,
) -> (f64, Vec<f64>, Vec<(usize, f64)>) {
    let pooled = |log: &cl_har::engine::RoundLog, classes: Option<&[usize]>| {
        let (c, n) = log
            .per_class
            .iter()
            .filter(|a| classes.is_none_or(|cs| cs.contains(&a.class)))
            .fold((0usize, 0usize), |(c, n), a| (c + a.correct, n + a.total));
        c as f64 / n as f64
    };
    let big_a = logs.iter().map(|l| pooled(l, None)).sum::<f64>() / logs.len() as f64;

    let tasks = scenario.rounds.last().unwrap().task;
    let classes_of = |d: usize| {
        scenario
            .rounds
            .iter()
            .find(|r| r.task == d)
            .unwrap()
            .classes
            .clone()
    };
    let mut a = vec![vec![f64::NAN; tasks + 1]; tasks + 1];
    for t in 1..=tasks {
        let mut rounds: Vec<&cl_har::engine::RoundLog> =
            logs.iter().filter(|l| l.task == t).collect();
        if final_round_only {
            rounds = vec![*rounds.last().unwrap()];
        }
        for d in 1..=t {
            let cd = classes_of(d);
            a[t][d] =
                rounds.iter().map(|l| pooled(l, Some(&cd))).sum::<f64>() / rounds.len() as f64;
        }
    }
    let a_t = (1..=tasks)
        .map(|t| (1..=t).map(|d| a[t][d]).sum::<f64>() / t as f64)
        .collect();
    let f_t = (2..=tasks)
        .map(|t| {
            let f: f64 = (1..t)
                .map(|d| (d..t).map(|i| a[i][d]).fold(f64::NEG_INFINITY, f64::max) - a[t][d])
                .sum();
            (t, f / (t - 1) as f64)
        })
        .collect();
    (big_a, a_t, f_t)
}
