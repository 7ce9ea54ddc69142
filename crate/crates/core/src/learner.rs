//! The exact-minimization projection step and the per-run learner state.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::orderings::Phase;
use crate::task::{ProjectorCache, Task, TaskCollection};

/// Fits `task` exactly starting from `w_prev`:
/// `w = X⁺y + (I − X⁺X) w_prev`, applied as `w_prev − X⁺(X w_prev − y)`.
pub fn fit_task(
    w_prev: &DVector<f64>,
    task: &Task,
    cache: &ProjectorCache,
) -> Result<DVector<f64>> {
    check_dim(task.dim(), w_prev.len())?;
    let r = task.residual(w_prev)?;
    let step = cache.apply_pinv(task, &r)?;
    Ok(w_prev - step)
}

/// One completed step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Task fitted at this step, `τ(t)`, zero-based.
    pub index: usize,
    /// `‖w_t − w_{t−1}‖²`.
    pub decrement: f64,
    /// `‖X_τ w_{t−1} − y_τ‖²`, unnormalized.
    pub pre_residual: f64,
    pub phase: Phase,
    /// Best greedy score seen when this index was chosen (greedy and hybrid policies).
    pub best_score: Option<f64>,
}

/// Current iterate plus the complete trajectory of one run.
#[derive(Debug, Clone)]
pub struct LearnerState {
    iterates: Vec<DVector<f64>>,
    history: Vec<StepRecord>,
    visited: Vec<bool>,
}

impl LearnerState {
    pub fn new(start: DVector<f64>, tasks: usize) -> Self {
        LearnerState {
            iterates: vec![start],
            history: Vec::new(),
            visited: vec![false; tasks],
        }
    }

    pub fn for_collection(collection: &TaskCollection) -> Self {
        Self::new(collection.start().clone(), collection.len())
    }

    /// `w_t`.
    pub fn iterate(&self) -> &DVector<f64> {
        self.iterates
            .last()
            .expect("start iterate is always present")
    }

    /// `w_0, …, w_t`.
    pub fn iterates(&self) -> &[DVector<f64>] {
        &self.iterates
    }

    /// `t`, the number of completed steps.
    pub fn step(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    pub fn is_visited(&self, m: usize) -> bool {
        self.visited[m]
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|&&v| v).count()
    }

    pub fn task_count(&self) -> usize {
        self.visited.len()
    }

    /// Indices not learned yet, ascending.
    pub fn unvisited(&self) -> Vec<usize> {
        (0..self.visited.len())
            .filter(|&m| !self.visited[m])
            .collect()
    }

    /// `τ(1), …, τ(t)`.
    pub fn order(&self) -> Vec<usize> {
        self.history.iter().map(|h| h.index).collect()
    }

    /// Fits task `m` and appends the step.
    pub fn advance(
        &mut self,
        collection: &TaskCollection,
        m: usize,
        phase: Phase,
        best_score: Option<f64>,
    ) -> Result<&StepRecord> {
        if m >= collection.len() || self.visited.len() != collection.len() {
            return Err(Error::InvalidInput(format!(
                "task index {m} out of range for {} tasks",
                collection.len()
            )));
        }
        let task = collection.task(m);
        let prev = self.iterate();
        let pre_residual = task.residual(prev)?.norm_squared();
        let next = fit_task(prev, task, collection.cache(m))?;
        let decrement = (&next - prev).norm_squared();
        self.iterates.push(next);
        self.visited[m] = true;
        self.history.push(StepRecord {
            index: m,
            decrement,
            pre_residual,
            phase,
            best_score,
        });
        Ok(self.history.last().expect("just pushed"))
    }
}
