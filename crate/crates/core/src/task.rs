//! Tasks, task collections, and the cached per-task pseudoinverse.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, FeatureMatrix, DEFAULT_REL_TOL};

/// Stacked systems above this many dense entries solve the joint problem
/// through the `d × d` Gram matrix instead of stacking.
const STACK_ENTRY_LIMIT: usize = 20_000_000;

/// One linear regression problem `X w = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    features: FeatureMatrix,
    targets: DVector<f64>,
}

impl Task {
    pub fn new(features: DMatrix<f64>, targets: DVector<f64>) -> Result<Self> {
        Self::from_features(FeatureMatrix::Dense(features), targets)
    }

    pub fn from_features(features: FeatureMatrix, targets: DVector<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "task must have n >= 1 and d >= 1, got {} x {}",
                features.nrows(),
                features.ncols()
            )));
        }
        check_dim(features.nrows(), targets.len())?;
        if !features.is_finite() {
            return Err(Error::NonFinite("features"));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("targets"));
        }
        Ok(Task { features, targets })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// `X w − y`.
    pub fn residual(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let mut r = self.features.mul_vec(w)?;
        r -= &self.targets;
        Ok(r)
    }
}

/// `‖X w − y‖²`.
pub fn residual_norm_sq(task: &Task, w: &DVector<f64>) -> Result<f64> {
    Ok(task.residual(w)?.norm_squared())
}

#[derive(Debug, Clone, PartialEq)]
enum PinvForm {
    Dense(DMatrix<f64>),
    /// Rows are orthonormal, so `X⁺ = Xᵀ`.
    Transpose,
}

/// Pseudoinverse of one task's feature matrix. The projector
/// `P = I − X⁺X` is applied implicitly unless materialized for debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorCache {
    pinv: PinvForm,
    rows: usize,
    dim: usize,
}

impl ProjectorCache {
    pub fn new(task: &Task, rel_tol: f64) -> Result<Self> {
        let pinv = match task.features() {
            FeatureMatrix::Dense(m) => PinvForm::Dense(linalg::pseudoinverse(m, rel_tol)?),
            FeatureMatrix::HeadIdentity { .. } => PinvForm::Transpose,
        };
        Ok(ProjectorCache {
            pinv,
            rows: task.rows(),
            dim: task.dim(),
        })
    }

    fn check_task(&self, task: &Task) -> Result<()> {
        check_dim(self.rows, task.rows())?;
        check_dim(self.dim, task.dim())
    }

    /// `X⁺ r`.
    pub fn apply_pinv(&self, task: &Task, r: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_task(task)?;
        check_dim(self.rows, r.len())?;
        match &self.pinv {
            PinvForm::Dense(p) => Ok(p * r),
            PinvForm::Transpose => task.features().tr_mul_vec(r),
        }
    }

    /// Materialized `X⁺` (`d × n`).
    pub fn pinv_matrix(&self, task: &Task) -> Result<DMatrix<f64>> {
        self.check_task(task)?;
        Ok(match &self.pinv {
            PinvForm::Dense(p) => p.clone(),
            PinvForm::Transpose => task.features().to_dense().transpose(),
        })
    }

    /// Materialized `P = I − X⁺X` (`d × d`). Debug use only; `O(d²)` memory.
    pub fn projector_matrix(&self, task: &Task) -> Result<DMatrix<f64>> {
        let pinv = self.pinv_matrix(task)?;
        let x = task.features().to_dense();
        Ok(DMatrix::identity(self.dim, self.dim) - pinv * x)
    }
}

/// Knobs used when building a collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionOptions {
    /// Relative SVD truncation threshold.
    pub rel_tol: f64,
    /// Overrides the default realizability tolerance when set.
    pub realize_tol: Option<f64>,
}

impl Default for CollectionOptions {
    fn default() -> Self {
        CollectionOptions {
            rel_tol: DEFAULT_REL_TOL,
            realize_tol: None,
        }
    }
}

/// Minimum-norm least-squares solution of the stacked system together with
/// its realizability diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSolution {
    pub w: DVector<f64>,
    /// `‖[X_1; …; X_T] w − [y_1; …; y_T]‖`.
    pub residual: f64,
    pub tolerance: f64,
    pub realizable: bool,
}

fn check_shared_dim(tasks: &[Task]) -> Result<usize> {
    let first = tasks
        .first()
        .ok_or_else(|| Error::InvalidInput("empty task list".into()))?;
    let d = first.dim();
    for t in tasks {
        check_dim(d, t.dim())?;
    }
    Ok(d)
}

fn default_realize_tol(radius: f64, w_norm: f64) -> f64 {
    if w_norm > 0.0 {
        1e-8 * radius.max(f64::MIN_POSITIVE) * w_norm
    } else {
        1e-10
    }
}

fn joint_solution_with(
    tasks: &[Task],
    rel_tol: f64,
    realize_tol: Option<f64>,
) -> Result<JointSolution> {
    let d = check_shared_dim(tasks)?;
    let w = if tasks.iter().all(|t| t.targets().iter().all(|&v| v == 0.0)) {
        // Homogeneous system: the minimum-norm solution is the origin.
        DVector::zeros(d)
    } else {
        let rows: usize = tasks.iter().map(Task::rows).sum();
        if rows.saturating_mul(d) <= STACK_ENTRY_LIMIT {
            let blocks: Vec<_> = tasks.iter().map(|t| t.features().to_dense()).collect();
            let stacked = linalg::vstack(&blocks);
            let mut y = DVector::zeros(rows);
            let mut at = 0;
            for t in tasks {
                y.rows_mut(at, t.rows()).copy_from(t.targets());
                at += t.rows();
            }
            linalg::pseudoinverse(&stacked, rel_tol)? * y
        } else {
            let mut gram = DMatrix::zeros(d, d);
            let mut rhs = DVector::zeros(d);
            for t in tasks {
                let x = t.features().to_dense();
                gram += x.tr_mul(&x);
                rhs += x.tr_mul(t.targets());
            }
            linalg::pseudoinverse(&gram, rel_tol)? * rhs
        }
    };
    let mut res_sq = 0.0;
    for t in tasks {
        res_sq += residual_norm_sq(t, &w)?;
    }
    let residual = res_sq.sqrt();
    let radius = tasks
        .iter()
        .map(|t| t.features().spectral_norm())
        .fold(0.0, f64::max);
    let tolerance = realize_tol.unwrap_or_else(|| default_realize_tol(radius, w.norm()));
    Ok(JointSolution {
        realizable: residual <= tolerance,
        w,
        residual,
        tolerance,
    })
}

/// Minimum-norm least-squares solution of the vertically stacked system.
/// A residual above the realizability tolerance is reported through
/// [`JointSolution::realizable`], not as an error.
pub fn min_norm_joint_solution(tasks: &[Task], rel_tol: f64) -> Result<JointSolution> {
    joint_solution_with(tasks, rel_tol, None)
}

/// Ordered, immutable set of tasks sharing a dimension, with per-task caches,
/// the data radius `R`, the joint solution `w*`, and the start point `w₀`.
#[derive(Debug, Clone)]
pub struct TaskCollection {
    tasks: Vec<Task>,
    caches: Vec<ProjectorCache>,
    dim: usize,
    radius: f64,
    joint: JointSolution,
    start: DVector<f64>,
    norm_ref: f64,
    options: CollectionOptions,
}

impl TaskCollection {
    /// Collection with `w₀ = 0` and default options.
    pub fn new(tasks: Vec<Task>) -> Result<Self> {
        Self::with_options(tasks, None, CollectionOptions::default())
    }

    pub fn with_start(tasks: Vec<Task>, start: DVector<f64>) -> Result<Self> {
        Self::with_options(tasks, Some(start), CollectionOptions::default())
    }

    pub fn with_options(
        tasks: Vec<Task>,
        start: Option<DVector<f64>>,
        options: CollectionOptions,
    ) -> Result<Self> {
        let dim = check_shared_dim(&tasks)?;
        let caches = tasks
            .iter()
            .map(|t| ProjectorCache::new(t, options.rel_tol))
            .collect::<Result<Vec<_>>>()?;
        let radius = tasks
            .iter()
            .map(|t| t.features().spectral_norm())
            .fold(0.0, f64::max);
        let joint = joint_solution_with(&tasks, options.rel_tol, options.realize_tol)?;
        let start = start.unwrap_or_else(|| DVector::zeros(dim));
        check_dim(dim, start.len())?;
        if start.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("start point"));
        }
        let gap = (&start - &joint.w).norm();
        let norm_ref = if gap > 0.0 { gap } else { 1.0 };
        Ok(TaskCollection {
            tasks,
            caches,
            dim,
            radius,
            joint,
            start,
            norm_ref,
            options,
        })
    }

    /// Same tasks, different start point.
    pub fn restarted(&self, start: DVector<f64>) -> Result<Self> {
        check_dim(self.dim, start.len())?;
        let gap = (&start - &self.joint.w).norm();
        let mut out = self.clone();
        out.norm_ref = if gap > 0.0 { gap } else { 1.0 };
        out.start = start;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, m: usize) -> &Task {
        &self.tasks[m]
    }

    pub fn cache(&self, m: usize) -> &ProjectorCache {
        &self.caches[m]
    }

    /// `R = max_m ‖X_m‖₂`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `w*`.
    pub fn joint_solution(&self) -> &DVector<f64> {
        &self.joint.w
    }

    pub fn joint(&self) -> &JointSolution {
        &self.joint
    }

    pub fn is_realizable(&self) -> bool {
        self.joint.realizable
    }

    /// `w₀`.
    pub fn start(&self) -> &DVector<f64> {
        &self.start
    }

    /// `‖w₀ − w*‖`, or 1 when the start already is the joint solution.
    pub fn norm_ref(&self) -> f64 {
        self.norm_ref
    }

    /// Whether `w₀ = w*`, in which case every normalized loss is zero.
    pub fn starts_at_solution(&self) -> bool {
        (&self.start - &self.joint.w).norm() == 0.0
    }

    pub fn options(&self) -> CollectionOptions {
        self.options
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn residual_hand_arithmetic() {
        let t = Task::new(dmatrix![1.0, 0.0], dvector![0.0]).unwrap();
        assert_eq!(residual_norm_sq(&t, &dvector![1.0, 1.0]).unwrap(), 1.0);
        let t = Task::new(dmatrix![1.0, 0.0; 0.0, 2.0], dvector![0.0, 0.0]).unwrap();
        assert_eq!(residual_norm_sq(&t, &dvector![1.0, 1.0]).unwrap(), 5.0);
    }

    #[test]
    fn residual_dimension_mismatch() {
        let t = Task::new(dmatrix![1.0, 0.0], dvector![0.0]).unwrap();
        assert!(matches!(
            residual_norm_sq(&t, &dvector![1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn task_validation() {
        assert!(Task::new(dmatrix![1.0, 0.0], dvector![0.0, 1.0]).is_err());
        assert!(Task::new(DMatrix::zeros(0, 2), DVector::zeros(0)).is_err());
        assert!(Task::new(dmatrix![f64::INFINITY], dvector![0.0]).is_err());
    }

    #[test]
    fn single_equation_min_norm() {
        let t = Task::new(dmatrix![1.0, 0.0], dvector![3.0]).unwrap();
        let j = min_norm_joint_solution(&[t], 1e-12).unwrap();
        assert!((j.w - dvector![3.0, 0.0]).amax() < 1e-14);
        assert!(j.realizable);
    }

    #[test]
    fn contradictory_tasks_flagged() {
        let a = Task::new(dmatrix![1.0, 0.0], dvector![0.0]).unwrap();
        let b = Task::new(dmatrix![1.0, 0.0], dvector![1.0]).unwrap();
        let j = min_norm_joint_solution(&[a.clone(), b.clone()], 1e-12).unwrap();
        assert!(!j.realizable);
        let c = TaskCollection::new(vec![a, b]).unwrap();
        assert!(!c.is_realizable());
    }

    #[test]
    fn empty_and_mixed_dims_rejected() {
        assert!(min_norm_joint_solution(&[], 1e-12).is_err());
        let a = Task::new(dmatrix![1.0, 0.0], dvector![0.0]).unwrap();
        let b = Task::new(dmatrix![1.0], dvector![0.0]).unwrap();
        assert!(TaskCollection::new(vec![a, b]).is_err());
    }

    #[test]
    fn gram_route_matches_stacking() {
        let tasks = vec![
            Task::new(dmatrix![1.0, 2.0, 0.0], dvector![1.0]).unwrap(),
            Task::new(dmatrix![0.0, 1.0, 1.0; 1.0, 0.0, 0.0], dvector![2.0, -1.0]).unwrap(),
        ];
        let stacked = min_norm_joint_solution(&tasks, 1e-12).unwrap();
        let mut gram = DMatrix::zeros(3, 3);
        let mut rhs = DVector::zeros(3);
        for t in &tasks {
            let x = t.features().to_dense();
            gram += x.tr_mul(&x);
            rhs += x.tr_mul(t.targets());
        }
        let via_gram = linalg::pseudoinverse(&gram, 1e-12).unwrap() * rhs;
        assert!((stacked.w - via_gram).amax() < 1e-10);
    }

    #[test]
    fn norm_ref_degenerate_start() {
        let t = Task::new(dmatrix![1.0, 0.0], dvector![0.0]).unwrap();
        let c = TaskCollection::new(vec![t]).unwrap();
        assert_eq!(c.norm_ref(), 1.0);
        assert!(c.starts_at_solution());
        let c = c.restarted(dvector![3.0, 4.0]).unwrap();
        assert!((c.norm_ref() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn projector_properties() {
        let t = Task::new(dmatrix![1.0, 2.0, 0.0; 0.0, 1.0, -1.0], dvector![1.0, 0.0]).unwrap();
        let cache = ProjectorCache::new(&t, 1e-12).unwrap();
        let p = cache.projector_matrix(&t).unwrap();
        assert!((&p - p.transpose()).amax() < 1e-12);
        assert!((&p * &p - &p).amax() < 1e-12);
        assert!((&p * cache.pinv_matrix(&t).unwrap()).amax() < 1e-12);
    }
}
