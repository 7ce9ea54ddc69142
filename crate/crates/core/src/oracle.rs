//! Brute-force search and bound checks.
//!
//! The brute-force replay deliberately avoids the simulator's code path: it
//! materializes each task's affine map `w ↦ P w + X⁺y` from nalgebra's own
//! `pseudo_inverse`, solves the joint problem the same way, and composes the
//! maps directly.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::generators::{gen_isotropic, gen_rank_dminus1};
use crate::learner::LearnerState;
use crate::linalg::vstack;
use crate::metrics::{avg_loss, distance_sq};
use crate::orderings::{GreedyRule, HybridRule, OrderingPolicy, Phase};
use crate::simulate::{run_policy, Run, RunOptions};
use crate::task::TaskCollection;

/// Absolute slack added to every bound.
pub const BOUND_SLACK: f64 = 1e-10;

/// Largest `T` accepted by [`brute_force_best_ordering`].
pub const BRUTE_FORCE_LIMIT: usize = 9;

/// `4 e^{8/3} / 3`, the constant of the with-repetition loss bound.
pub fn repetition_bound_constant() -> f64 {
    4.0 * (8.0f64 / 3.0).exp() / 3.0
}

/// Outcome of checking one inequality on many instances.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound_name: String,
    pub instances_checked: usize,
    pub violations: usize,
    /// Smallest `bound − observed` seen; negative means the bound was missed.
    pub worst_margin: f64,
    /// Description of the first violation, if any.
    pub first_violation: Option<String>,
}

impl BoundReport {
    pub fn new(bound_name: impl Into<String>) -> Self {
        BoundReport {
            bound_name: bound_name.into(),
            instances_checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            first_violation: None,
        }
    }

    /// Records one instance with the given `bound − observed` margin.
    pub fn record(&mut self, margin: f64, describe: impl FnOnce() -> String) {
        self.instances_checked += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if !(margin >= -BOUND_SLACK) {
            self.fail(describe);
        }
    }

    /// Records a violation that has no numeric margin.
    pub fn fail(&mut self, describe: impl FnOnce() -> String) {
        self.violations += 1;
        if self.first_violation.is_none() {
            self.first_violation = Some(describe());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Folds another report on the same bound into this one.
    pub fn merge(&mut self, other: BoundReport) {
        self.instances_checked += other.instances_checked;
        self.violations += other.violations;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} checked, {} violations, worst margin {:.3e}",
            self.bound_name, self.instances_checked, self.violations, self.worst_margin
        )?;
        if let Some(v) = &self.first_violation {
            write!(f, " (first: {v})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    FinalDistanceSq,
    FinalAvgLoss,
}

/// Dense, independently computed view of a collection.
#[derive(Debug, Clone)]
pub struct OracleCollection {
    x: Vec<DMatrix<f64>>,
    y: Vec<DVector<f64>>,
    projector: Vec<DMatrix<f64>>,
    offset: Vec<DVector<f64>>,
    pinv: Vec<DMatrix<f64>>,
    w_star: DVector<f64>,
    radius: f64,
}

fn nalgebra_pinv(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eps = 1e-12 * x.norm().max(f64::MIN_POSITIVE);
    x.clone()
        .pseudo_inverse(eps)
        .map_err(|e| Error::Degenerate(e.to_string()))
}

impl OracleCollection {
    pub fn new(c: &TaskCollection) -> Result<Self> {
        let d = c.dim();
        let mut out = OracleCollection {
            x: Vec::with_capacity(c.len()),
            y: Vec::with_capacity(c.len()),
            projector: Vec::with_capacity(c.len()),
            offset: Vec::with_capacity(c.len()),
            pinv: Vec::with_capacity(c.len()),
            w_star: DVector::zeros(d),
            radius: 0.0,
        };
        for t in c.tasks() {
            let x = t.features().to_dense();
            let y = t.targets().clone();
            let pinv = nalgebra_pinv(&x)?;
            out.projector.push(DMatrix::identity(d, d) - &pinv * &x);
            out.offset.push(&pinv * &y);
            out.radius = out.radius.max(x.singular_values().max());
            out.pinv.push(pinv);
            out.x.push(x);
            out.y.push(y);
        }
        let stacked = vstack(&out.x);
        let targets = DVector::from_iterator(
            stacked.nrows(),
            out.y.iter().flat_map(|y| y.iter().copied()),
        );
        out.w_star = nalgebra_pinv(&stacked)? * targets;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn joint_solution(&self) -> &DVector<f64> {
        &self.w_star
    }

    /// Applies task `m`'s affine map.
    pub fn project(&self, m: usize, w: &DVector<f64>) -> DVector<f64> {
        &self.projector[m] * w + &self.offset[m]
    }

    pub fn replay(&self, w0: &DVector<f64>, order: &[usize]) -> DVector<f64> {
        order.iter().fold(w0.clone(), |w, &m| self.project(m, &w))
    }

    pub fn residual_sq(&self, m: usize, w: &DVector<f64>) -> f64 {
        (&self.x[m] * w - &self.y[m]).norm_squared()
    }

    pub fn md_score(&self, m: usize, w: &DVector<f64>) -> f64 {
        (&self.pinv[m] * (&self.x[m] * w - &self.y[m])).norm_squared()
    }

    fn norm_ref(&self, w0: &DVector<f64>) -> f64 {
        match (w0 - &self.w_star).norm() {
            n if n > 0.0 => n,
            _ => 1.0,
        }
    }

    /// Objective value of ending at `w` after starting from `w0`.
    pub fn objective(&self, objective: Objective, w0: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let nr2 = self.norm_ref(w0).powi(2);
        match objective {
            Objective::FinalDistanceSq => (w - &self.w_star).norm_squared() / nr2,
            Objective::FinalAvgLoss => {
                let sum: f64 = (0..self.len()).map(|m| self.residual_sq(m, w)).sum();
                sum / (self.len() as f64 * nr2 * self.radius * self.radius)
            }
        }
    }
}

/// Best single-pass ordering by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub order: Vec<usize>,
    pub value: f64,
}

/// Enumerates all `T!` orderings in lexicographic order and keeps the first
/// one attaining the minimum objective.
pub fn brute_force_best_ordering(
    c: &TaskCollection,
    w0: &DVector<f64>,
    objective: Objective,
) -> Result<BruteForce> {
    if c.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "T for brute force",
            value: c.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    check_dim(c.dim(), w0.len())?;
    let oracle = OracleCollection::new(c)?;
    let mut best = BruteForce {
        order: Vec::new(),
        value: f64::INFINITY,
    };
    let mut prefix = Vec::with_capacity(c.len());
    let mut used = vec![false; c.len()];
    search(
        &oracle,
        objective,
        w0,
        w0,
        &mut prefix,
        &mut used,
        &mut best,
    );
    if !best.value.is_finite() {
        return Err(Error::NonFinite("brute-force objective"));
    }
    Ok(best)
}

fn search(
    oracle: &OracleCollection,
    objective: Objective,
    w0: &DVector<f64>,
    w: &DVector<f64>,
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    best: &mut BruteForce,
) {
    if prefix.len() == used.len() {
        let v = oracle.objective(objective, w0, w);
        if v < best.value {
            best.value = v;
            best.order.clone_from(prefix);
        }
        return;
    }
    for m in 0..used.len() {
        if used[m] {
            continue;
        }
        used[m] = true;
        prefix.push(m);
        let next = oracle.project(m, w);
        search(oracle, objective, w0, &next, prefix, used, best);
        prefix.pop();
        used[m] = false;
    }
}

fn single_pass_md(c: &TaskCollection) -> Result<Run> {
    let opts = RunOptions {
        steps: c.len(),
        log_every: c.len(),
    };
    run_policy(c, OrderingPolicy::greedy(GreedyRule::MaxDistance), opts)
}

/// Single-pass greedy MD on fresh rank-(d−1) collections ends with average
/// loss at most `1/(eT)`. Trial `i` uses seed `seed + i`.
pub fn check_rank_dminus1_loss_bound(
    d: usize,
    tasks: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    let bound = 1.0 / (std::f64::consts::E * tasks as f64);
    let mut report = BoundReport::new(format!("rank-(d-1) loss <= 1/(eT), d={d}, T={tasks}"));
    for i in 0..trials {
        let s = seed.wrapping_add(i as u64);
        let g = gen_rank_dminus1(d, tasks, s)?;
        let run = single_pass_md(&g.collection)?;
        let loss = avg_loss(&g.collection, run.state.iterate())?;
        report.record(bound - loss, || {
            format!("seed {s}: loss {loss:e} > {bound:e}")
        });
    }
    Ok(report)
}

/// `D²(opt) ≤ D²(MD) ≤ D(opt)` on fresh rank-(d−1) collections, with the
/// optimum found by brute force. Two instances are recorded per trial.
pub fn check_rank_dminus1_optimality(
    d: usize,
    tasks: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    let mut report = BoundReport::new(format!("D^2(opt) <= D^2(MD) <= D(opt), d={d}, T={tasks}"));
    for i in 0..trials {
        let s = seed.wrapping_add(i as u64);
        let g = gen_rank_dminus1(d, tasks, s)?;
        let c = &g.collection;
        let run = single_pass_md(c)?;
        let md = distance_sq(run.state.iterate(), c)?;
        let opt = brute_force_best_ordering(c, c.start(), Objective::FinalDistanceSq)?;
        report.record(opt.value.sqrt() - md, || {
            format!(
                "seed {s}: D^2(MD) = {md:e} > D(opt) = {:e}",
                opt.value.sqrt()
            )
        });
        report.record(md - opt.value, || {
            format!("seed {s}: D^2(opt) = {:e} > D^2(MD) = {md:e}", opt.value)
        });
    }
    Ok(report)
}

/// Checks the with-repetition bound on one collection for `2 ≤ k ≤ k_max`.
pub fn check_with_repetition_bound_on(c: &TaskCollection, k_max: usize) -> Result<BoundReport> {
    if k_max < 2 {
        return Err(Error::InvalidInput(format!("need k_max >= 2, got {k_max}")));
    }
    let constant = repetition_bound_constant();
    let mut report = BoundReport::new("with-repetition loss <= 4e^(8/3)/3 (k+1)^(-1/3)");
    let run = run_policy(
        c,
        OrderingPolicy::greedy_with_repetition(GreedyRule::MaxDistance),
        RunOptions::steps(k_max),
    )?;
    for row in run.rows.iter().filter(|r| r.iteration >= 2) {
        let bound = constant * ((row.iteration + 1) as f64).powf(-1.0 / 3.0);
        report.record(bound - row.avg_loss, || {
            format!("k = {}: loss {:e} > {bound:e}", row.iteration, row.avg_loss)
        });
    }
    Ok(report)
}

/// The with-repetition bound over `trials` isotropic collections.
pub fn check_with_repetition_bound(
    d: usize,
    r: usize,
    tasks: usize,
    k_max: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    let mut report = BoundReport::new(format!(
        "with-repetition loss bound, isotropic d={d}, r={r}, T={tasks}, k<={k_max}"
    ));
    for i in 0..trials {
        let g = gen_isotropic(d, r, tasks, seed.wrapping_add(i as u64))?;
        report.merge(check_with_repetition_bound_on(&g.collection, k_max)?);
    }
    Ok(report)
}

/// Verifies a hybrid run against its phase contract: greedy steps met the
/// threshold and picked the greedy argmax, the first random step followed a
/// failed threshold test, phases never return to greedy, and a full-length
/// run visits every task. Scores are recomputed from the stored iterates.
pub fn check_hybrid_phase_contract(
    run: &Run,
    threshold: f64,
    c: &TaskCollection,
) -> Result<BoundReport> {
    let OrderingPolicy::Hybrid { rule, .. } = run.policy else {
        return Err(Error::InvalidInput(
            "run was not produced by a hybrid policy".into(),
        ));
    };
    let oracle = OracleCollection::new(c)?;
    let score = |m: usize, w: &DVector<f64>| match rule {
        HybridRule::MaxDistance => oracle.md_score(m, w),
        HybridRule::MaxResidual => oracle.residual_sq(m, w),
    };
    let state: &LearnerState = &run.state;
    let mut report = BoundReport::new(format!("{} phase contract", run.policy));
    let mut visited = vec![false; c.len()];
    let mut in_random = false;
    for (i, h) in state.history().iter().enumerate() {
        let step = i + 1;
        let w = &state.iterates()[i];
        let candidates: Vec<usize> = (0..c.len()).filter(|&m| !visited[m]).collect();
        let mut best: Option<(usize, f64)> = None;
        for &m in &candidates {
            let s = score(m, w);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((m, s));
            }
        }
        let Some((arg, best_score)) = best else {
            report.fail(|| format!("step {step}: no unvisited task left"));
            break;
        };
        if visited[h.index] {
            report.fail(|| format!("step {step}: task {} learned twice", h.index));
        }
        match (h.phase, in_random) {
            (Phase::Greedy, true) => {
                report.fail(|| format!("step {step}: greedy step after the switch"));
            }
            (Phase::Greedy, false) => {
                report.record(best_score - threshold, || {
                    format!("step {step}: greedy with best score {best_score:e} < {threshold:e}")
                });
                let chosen = score(h.index, w);
                let tol = BOUND_SLACK + 1e-9 * best_score.abs();
                if h.index != arg && chosen < best_score - tol {
                    report.fail(|| {
                        format!(
                            "step {step}: picked {} but the greedy argmax is {arg}",
                            h.index
                        )
                    });
                }
            }
            (Phase::Random, false) => {
                in_random = true;
                report.record(threshold - best_score, || {
                    format!("step {step}: switched with best score {best_score:e} >= {threshold:e}")
                });
                if run.hybrid.and_then(|s| s.switch_step) != Some(step) {
                    report.fail(|| format!("step {step}: recorded switch step disagrees"));
                }
            }
            (Phase::Random, true) => {}
        }
        visited[h.index] = true;
    }
    if !in_random && run.hybrid.and_then(|s| s.switch_step).is_some() {
        report.fail(|| "switch recorded but no random step taken".into());
    }
    if state.step() == c.len() && visited.iter().any(|v| !v) {
        report.fail(|| "full-length run did not visit every task".into());
    }
    Ok(report)
}

/// Per-step structural properties of a run on a realizable collection:
/// the Pythagorean identity, monotone distance, and loss ≤ distance.
///
/// In exact arithmetic the Pythagorean gap is `2 (w_{t−1} − w_t)ᵀ(w_t − w*)`,
/// which vanishes because `w*` solves the task. The computed `w*` leaves a
/// small residual `r*` on each task, so the first two checks allow an extra
/// `2 ‖w_t − w_{t−1}‖ ‖X⁺ r*‖`; on ill-conditioned tasks this term dominates.
pub fn check_structural(c: &TaskCollection, state: &LearnerState) -> Result<BoundReport> {
    let mut report = BoundReport::new("structural properties");
    let w_star = c.joint_solution();
    let nr2 = c.norm_ref().powi(2);
    let mut prev = (state.iterates()[0].clone() - w_star).norm_squared();
    for (i, h) in state.history().iter().enumerate() {
        let step = i + 1;
        let w = &state.iterates()[step];
        let task = c.task(h.index);
        let misfit = c
            .cache(h.index)
            .apply_pinv(task, &task.residual(w_star)?)?
            .norm();
        let reference = 2.0 * h.decrement.sqrt() * misfit;
        let cur = (w - w_star).norm_squared();
        let err = ((prev - cur) - h.decrement).abs();
        let tol = 1e-9 * prev.max(nr2).max(1.0) + reference;
        report.record(tol - err, || {
            format!("step {step}: Pythagorean gap {err:e}")
        });
        report.record((prev - cur + reference) / nr2, || {
            format!("step {step}: distance increased")
        });
        let loss = avg_loss(c, w)?;
        let dist = cur / nr2;
        report.record(dist - loss, || {
            format!("step {step}: loss {loss:e} exceeds distance {dist:e}")
        });
        prev = cur;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::replay;
    use crate::task::Task;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn constant_value() {
        assert!((repetition_bound_constant() - 19.1892).abs() < 1e-4);
    }

    #[test]
    fn report_bookkeeping() {
        let mut r = BoundReport::new("x");
        r.record(0.5, String::new);
        r.record(-0.5e-10, String::new);
        assert!(r.passed());
        r.record(-1e-3, || "bad".into());
        assert_eq!(r.violations, 1);
        assert_eq!(r.instances_checked, 3);
        assert_eq!(r.worst_margin, -1e-3);
        assert_eq!(r.first_violation.as_deref(), Some("bad"));
    }

    #[test]
    fn single_task_brute_force() {
        let t = Task::new(dmatrix![1.0, 0.0], dvector![1.0]).unwrap();
        let c = TaskCollection::with_start(vec![t], dvector![0.0, 0.0]).unwrap();
        let b = brute_force_best_ordering(&c, c.start(), Objective::FinalDistanceSq).unwrap();
        assert_eq!(b.order, vec![0]);
        assert!(b.value < 1e-24);
    }

    #[test]
    fn identical_tasks_tie_lexicographically() {
        let t = Task::new(dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        let c = TaskCollection::with_start(vec![t.clone(), t], dvector![3.0, -1.0]).unwrap();
        for obj in [Objective::FinalDistanceSq, Objective::FinalAvgLoss] {
            let b = brute_force_best_ordering(&c, c.start(), obj).unwrap();
            assert_eq!(b.order, vec![0, 1]);
        }
    }

    #[test]
    fn refuses_large_t() {
        let t = Task::new(dmatrix![1.0], dvector![0.0]).unwrap();
        let c = TaskCollection::new(vec![t; 10]).unwrap();
        assert!(matches!(
            brute_force_best_ordering(&c, c.start(), Objective::FinalAvgLoss),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn oracle_replay_matches_simulator() {
        let g = gen_isotropic(6, 2, 4, 3).unwrap();
        let c = &g.collection;
        let oracle = OracleCollection::new(c).unwrap();
        let order = [2, 0, 3, 1];
        let a = oracle.replay(c.start(), &order);
        let b = replay(c, &order).unwrap();
        assert!((a - b.iterate()).amax() < 1e-10);
        assert!((oracle.joint_solution() - c.joint_solution()).amax() < 1e-9);
    }

    #[test]
    fn rank_bound_single_task() {
        let r = check_rank_dminus1_loss_bound(5, 1, 3, 0).unwrap();
        assert!(r.passed());
        assert!((r.worst_margin - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn repetition_bound_needs_two_steps() {
        let g = gen_isotropic(4, 1, 3, 0).unwrap();
        assert!(check_with_repetition_bound_on(&g.collection, 1).is_err());
    }

    #[test]
    fn hybrid_contract_rejects_non_hybrid() {
        let g = gen_isotropic(4, 1, 3, 0).unwrap();
        let run = single_pass_md(&g.collection).unwrap();
        assert!(check_hybrid_phase_contract(&run, 0.0, &g.collection).is_err());
    }
}
