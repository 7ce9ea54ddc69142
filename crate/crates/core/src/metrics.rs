//! Scalar diagnostics of an iterate or a trajectory.
//!
//! Normalized quantities divide by `norm_ref²·R²` (losses) or `norm_ref²`
//! (distance), where `norm_ref = ‖w₀ − w*‖`.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::learner::LearnerState;
use crate::task::{residual_norm_sq, TaskCollection};

fn loss_scale(c: &TaskCollection) -> Result<f64> {
    let r = c.radius();
    if r == 0.0 {
        return Err(Error::Degenerate("data radius R is zero".into()));
    }
    Ok(c.norm_ref().powi(2) * r * r)
}

/// `(1/T) Σ_m ‖X_m w − y_m‖²`, unnormalized.
pub fn raw_avg_loss(c: &TaskCollection, w: &DVector<f64>) -> Result<f64> {
    check_dim(c.dim(), w.len())?;
    let mut sum = 0.0;
    for t in c.tasks() {
        sum += residual_norm_sq(t, w)?;
    }
    Ok(sum / c.len() as f64)
}

/// Normalized average loss over all tasks.
pub fn avg_loss(c: &TaskCollection, w: &DVector<f64>) -> Result<f64> {
    let scale = loss_scale(c)?;
    Ok(raw_avg_loss(c, w)? / scale)
}

/// `‖w − w*‖²`, unnormalized.
pub fn raw_distance_sq(w: &DVector<f64>, c: &TaskCollection) -> Result<f64> {
    check_dim(c.dim(), w.len())?;
    Ok((w - c.joint_solution()).norm_squared())
}

/// `‖w − w*‖² / norm_ref²`.
pub fn distance_sq(w: &DVector<f64>, c: &TaskCollection) -> Result<f64> {
    Ok(raw_distance_sq(w, c)? / c.norm_ref().powi(2))
}

fn nonempty(state: &LearnerState) -> Result<usize> {
    match state.step() {
        0 => Err(Error::InvalidInput("history is empty".into())),
        k => Ok(k),
    }
}

/// Average residual at `w_k` over the tasks seen so far, counted with
/// multiplicity, normalized like [`avg_loss`].
pub fn forgetting(state: &LearnerState, c: &TaskCollection) -> Result<f64> {
    let k = nonempty(state)?;
    let scale = loss_scale(c)?;
    let w = state.iterate();
    let mut sum = 0.0;
    for h in state.history() {
        sum += residual_norm_sq(c.task(h.index), w)?;
    }
    Ok(sum / (k as f64 * scale))
}

/// Path-averaged pre-fit residual `(1/k) Σ_t ‖X_τ(t) w_{t−1} − y_τ(t)‖²`,
/// normalized like [`avg_loss`].
pub fn regret(state: &LearnerState, c: &TaskCollection) -> Result<f64> {
    let k = nonempty(state)?;
    let scale = loss_scale(c)?;
    let sum: f64 = state.history().iter().map(|h| h.pre_residual).sum();
    Ok(sum / (k as f64 * scale))
}

/// Metrics logged after one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub iteration: usize,
    pub avg_loss: f64,
    pub distance_sq: f64,
    pub decrement: f64,
    pub chosen_index: usize,
}

/// Row for the latest step of `state`.
pub fn metrics_row(c: &TaskCollection, state: &LearnerState) -> Result<MetricsRow> {
    let last = state
        .history()
        .last()
        .ok_or_else(|| Error::InvalidInput("history is empty".into()))?;
    let w = state.iterate();
    Ok(MetricsRow {
        iteration: state.step(),
        avg_loss: avg_loss(c, w)?,
        distance_sq: distance_sq(w, c)?,
        decrement: last.decrement,
        chosen_index: last.index,
    })
}
