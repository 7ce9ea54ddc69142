//! Collections on which single-pass greedy orderings are provably bad.
//!
//! Both families are homogeneous (`y = 0`, so `w* = 0`) and deterministic.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::generators::recursion::{Recursion, MIN_DIM};
use crate::learner::fit_task;
use crate::linalg::{orthogonal_complement_rows, FeatureMatrix, DEFAULT_REL_TOL};
use crate::task::{ProjectorCache, Task, TaskCollection};

/// Per-step tolerance when checking `P_t w_{t−1} = w_t` during construction.
const CONSISTENCY_TOL: f64 = 1e-8;

/// Description of the 3-D family with group parameter `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adversarial3dSpec {
    pub k: usize,
    /// Tasks per group, `(K−1, K, K, K)`.
    pub multiplicities: [usize; 4],
    /// Zero-based group of every task, in collection order.
    pub group_of: Vec<usize>,
    /// Row basis of each group's solution subspace.
    pub subspaces: [DMatrix<f64>; 4],
}

impl Adversarial3dSpec {
    pub fn tasks(&self) -> usize {
        self.group_of.len()
    }
}

#[derive(Debug, Clone)]
pub struct Adversarial3d {
    pub spec: Adversarial3dSpec,
    pub collection: TaskCollection,
}

/// Group solution subspaces for the 3-D family, as row bases.
fn subspaces_3d(k: usize) -> [DMatrix<f64>; 4] {
    let a = 1.0 / (k as f64).sqrt();
    let h = a / 2.0;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        DMatrix::from_row_slice(1, 3, &[0.0, a.sin(), a.cos()]),
        DMatrix::from_row_slice(1, 3, &[0.0, -a.sin(), a.cos()]),
        DMatrix::from_row_slice(2, 3, &[0.0, h.sin(), h.cos(), s, 0.0, s]),
        DMatrix::from_row_slice(2, 3, &[0.0, -h.sin(), h.cos(), s, 0.0, s]),
    ]
}

/// `T = 4K − 1` tasks in three dimensions, grouped by solution subspace with
/// multiplicities `(K−1, K, K, K)`, starting from
/// `w₀ = (0, sin(1/√K), cos(1/√K))`.
pub fn gen_adversarial_3d(k: usize) -> Result<Adversarial3d> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need K >= 2, got {k}")));
    }
    let subspaces = subspaces_3d(k);
    let multiplicities = [k - 1, k, k, k];
    let mut tasks = Vec::with_capacity(4 * k - 1);
    let mut group_of = Vec::with_capacity(4 * k - 1);
    for (g, basis) in subspaces.iter().enumerate() {
        let x = orthogonal_complement_rows(basis, DEFAULT_REL_TOL)?;
        let y = DVector::zeros(x.nrows());
        let task = Task::new(x, y)?;
        for _ in 0..multiplicities[g] {
            tasks.push(task.clone());
            group_of.push(g);
        }
    }
    let a = 1.0 / (k as f64).sqrt();
    let start = DVector::from_vec(vec![0.0, a.sin(), a.cos()]);
    Ok(Adversarial3d {
        spec: Adversarial3dSpec {
            k,
            multiplicities,
            group_of,
            subspaces,
        },
        collection: TaskCollection::with_start(tasks, start)?,
    })
}

/// The high-dimensional construction in dimension `d`: the scalar recursion,
/// the intended greedy iterates `w_1..w_d`, and unit step directions.
#[derive(Debug, Clone)]
pub struct AdversarialHighDimSpec {
    pub recursion: Recursion,
    iterates: Vec<DVector<f64>>,
    directions: Vec<DVector<f64>>,
}

impl AdversarialHighDimSpec {
    /// Builds the spec; `d` must be at least [`MIN_DIM`].
    pub fn new(d: usize) -> Result<Self> {
        if d < MIN_DIM {
            return Err(Error::InvalidInput(format!(
                "the construction needs d >= {MIN_DIM}, got {d}"
            )));
        }
        let recursion = Recursion::new(d)?;
        let scale = (d as f64).sqrt().recip();
        let iterates: Vec<DVector<f64>> = (1..=d)
            .map(|t| {
                let mut w = DVector::zeros(d);
                w[0] = recursion.x[t];
                if t >= 2 {
                    let v = recursion.c.powi(t as i32 - 2) * scale;
                    w.rows_mut(1, t - 1).fill(v);
                }
                w
            })
            .collect();
        let directions = (2..=d)
            .map(|t| {
                let diff = &iterates[t - 1] - &iterates[t - 2];
                let n = diff.norm();
                diff / n
            })
            .collect();
        Ok(AdversarialHighDimSpec {
            recursion,
            iterates,
            directions,
        })
    }

    pub fn d(&self) -> usize {
        self.recursion.d
    }

    pub fn c(&self) -> f64 {
        self.recursion.c
    }

    /// `w_t` for `1 ≤ t ≤ d`.
    pub fn iterate(&self, t: usize) -> &DVector<f64> {
        &self.iterates[t - 1]
    }

    /// `u_t` for `2 ≤ t ≤ d`.
    pub fn direction(&self, t: usize) -> &DVector<f64> {
        &self.directions[t - 2]
    }

    /// Feature matrix `X_t = [u_tᵀ; e_{t+1}ᵀ; …; e_dᵀ]` for `2 ≤ t ≤ d`.
    pub fn features(&self, t: usize) -> Result<FeatureMatrix> {
        let head = RowDVector::from_iterator(self.d(), self.direction(t).iter().copied());
        // One-based e_{t+1} is column t in zero-based terms.
        FeatureMatrix::head_identity(DMatrix::from_rows(&[head]), t)
    }

    /// `Δ_{t,k}` evaluated directly from the stored vectors.
    pub fn delta_explicit(&self, t: usize, k: usize) -> Result<f64> {
        let d = self.d();
        if t < 2 || k < t || k + 1 > d {
            return Err(Error::InvalidInput(format!(
                "need 2 <= t <= k <= d-1, got t = {t}, k = {k}, d = {d}"
            )));
        }
        let w = |i: usize| self.iterate(i);
        let before = w(k - 1) - w(k);
        let after = w(k) - w(k + 1);
        let anchor = w(t - 1);
        Ok(after.norm() * before.dot(anchor) - before.norm() * after.dot(anchor))
    }

    /// `Δ_{t,k}` from the closed scalar expansion.
    pub fn delta(&self, t: usize, k: usize) -> Result<f64> {
        self.recursion.delta(t, k)
    }
}

#[derive(Debug, Clone)]
pub struct AdversarialHighDim {
    pub spec: AdversarialHighDimSpec,
    /// Task `m` (zero-based) is `X_{m+2}`; `T = d − 1`.
    pub collection: TaskCollection,
}

/// `T = d − 1` homogeneous tasks of decreasing rank, starting from `w₀ = e₁`.
///
/// Before returning, every projection `P_t w_{t−1}` is checked against the
/// stored `w_t`.
pub fn gen_adversarial_highdim(d: usize) -> Result<AdversarialHighDim> {
    let spec = AdversarialHighDimSpec::new(d)?;
    let mut tasks = Vec::with_capacity(d - 1);
    for t in 2..=d {
        let x = spec.features(t)?;
        let task = Task::from_features(x, DVector::zeros(d - t + 1))?;
        let cache = ProjectorCache::new(&task, DEFAULT_REL_TOL)?;
        let projected = fit_task(spec.iterate(t - 1), &task, &cache)?;
        let gap = (&projected - spec.iterate(t)).amax();
        if !(gap <= CONSISTENCY_TOL) {
            return Err(Error::Degenerate(format!(
                "projection at t = {t} misses the stored iterate by {gap:e}"
            )));
        }
        tasks.push(task);
    }
    let collection = TaskCollection::with_start(tasks, spec.iterate(1).clone())?;
    Ok(AdversarialHighDim { spec, collection })
}
