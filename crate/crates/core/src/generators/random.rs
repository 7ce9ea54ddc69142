//! Random task families: isotropic Gaussian, anisotropic (correlated)
//! Gaussian, and rank-(d−1) tasks with known solution directions.
//!
//! Normal variates come from `rand_distr::StandardNormal` (the ziggurat
//! method) over a ChaCha8 stream seeded with the generator seed. Entries are
//! drawn task by task, row-major, before the teacher vector.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement_rows, spectral_norm, DEFAULT_REL_TOL};
use crate::task::{Task, TaskCollection};

/// Smallest and largest covariance eigenvalues of the anisotropic family.
pub const ANISO_LAMBDA_MIN: f64 = 1e-3;
pub const ANISO_LAMBDA_MAX: f64 = 1e3;

/// A generated collection together with the teacher that produced its targets.
#[derive(Debug, Clone)]
pub struct Generated {
    pub collection: TaskCollection,
    pub teacher: DVector<f64>,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // from_fn is column-major; fill row-major explicitly.
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

fn unit_normal_vector(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let v = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

fn check_shape(d: usize, r: usize, tasks: usize) -> Result<()> {
    if d == 0 || r == 0 || r > d {
        return Err(Error::InvalidInput(format!(
            "need 1 <= r <= d, got r = {r}, d = {d}"
        )));
    }
    if tasks == 0 {
        return Err(Error::InvalidInput("T must be at least 1".into()));
    }
    Ok(())
}

/// Rescales blocks by the largest spectral norm, draws a unit teacher, and
/// sets `y_m = X_m w_true`.
fn finish(mut blocks: Vec<DMatrix<f64>>, rng: &mut ChaCha8Rng) -> Result<Generated> {
    let d = blocks[0].ncols();
    let max_radius = blocks.iter().map(spectral_norm).fold(0.0, f64::max);
    if max_radius > 0.0 {
        for b in &mut blocks {
            *b /= max_radius;
        }
    }
    let teacher = unit_normal_vector(rng, d);
    let tasks = blocks
        .into_iter()
        .map(|x| {
            let y = &x * &teacher;
            Task::new(x, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Generated {
        collection: TaskCollection::new(tasks)?,
        teacher,
    })
}

/// `T` tasks of shape `r × d` with i.i.d. standard normal entries.
pub fn gen_isotropic(d: usize, r: usize, tasks: usize, seed: u64) -> Result<Generated> {
    check_shape(d, r, tasks)?;
    let mut rng = rng(seed);
    let blocks = (0..tasks).map(|_| normal_matrix(&mut rng, r, d)).collect();
    finish(blocks, &mut rng)
}

/// Log-uniform spectrum from `ANISO_LAMBDA_MIN` to `ANISO_LAMBDA_MAX`; the
/// endpoints are exact.
pub fn anisotropic_spectrum(d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![ANISO_LAMBDA_MIN];
    }
    let growth = (ANISO_LAMBDA_MAX / ANISO_LAMBDA_MIN).ln();
    (0..d)
        .map(|i| match i {
            0 => ANISO_LAMBDA_MIN,
            i if i == d - 1 => ANISO_LAMBDA_MAX,
            i => ANISO_LAMBDA_MIN * (growth * i as f64 / (d - 1) as f64).exp(),
        })
        .collect()
}

/// `(Σ, Σ^{1/2})` with `Σ = U Λ Uᵀ`, `U` from the SVD of a symmetrized
/// Gaussian matrix.
fn anisotropic_factors(rng: &mut ChaCha8Rng, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = normal_matrix(rng, d, d);
    let sym = (&a + a.transpose()) * 0.5;
    let u = sym.svd(true, false).u.expect("u requested");
    let spectrum = anisotropic_spectrum(d);
    let lam = DMatrix::from_diagonal(&DVector::from_vec(spectrum.clone()));
    let lam_half = DMatrix::from_diagonal(&DVector::from_iterator(
        d,
        spectrum.iter().map(|v| v.sqrt()),
    ));
    let sigma = &u * lam * u.transpose();
    let sigma_half = &u * lam_half * u.transpose();
    (sigma, sigma_half)
}

/// The covariance `Σ` that [`gen_anisotropic`] uses for a given `(d, seed)`.
pub fn anisotropic_covariance(d: usize, seed: u64) -> Result<DMatrix<f64>> {
    check_shape(d, 1, 1)?;
    Ok(anisotropic_factors(&mut rng(seed), d).0)
}

/// `X_m = Z_m Σ^{1/2}` with `Z_m` i.i.d. standard normal `r × d`.
pub fn gen_anisotropic(d: usize, r: usize, tasks: usize, seed: u64) -> Result<Generated> {
    check_shape(d, r, tasks)?;
    let mut rng = rng(seed);
    let (_, sigma_half) = anisotropic_factors(&mut rng, d);
    let blocks = (0..tasks)
        .map(|_| normal_matrix(&mut rng, r, d) * &sigma_half)
        .collect();
    finish(blocks, &mut rng)
}

/// Rank-(d−1) collection whose task `m` has solution direction `directions[m]`.
#[derive(Debug, Clone)]
pub struct RankDeficient {
    pub collection: TaskCollection,
    pub teacher: DVector<f64>,
    /// Unit `v_m` with `P_m = v_m v_mᵀ`.
    pub directions: Vec<DVector<f64>>,
}

/// Builds rank-(d−1) tasks from given unit directions and teacher.
pub fn rank_dminus1_from_directions(
    directions: Vec<DVector<f64>>,
    teacher: DVector<f64>,
) -> Result<RankDeficient> {
    let d = teacher.len();
    if d < 2 {
        return Err(Error::InvalidInput("rank-(d-1) tasks need d >= 2".into()));
    }
    let mut tasks = Vec::with_capacity(directions.len());
    for v in &directions {
        crate::error::check_dim(d, v.len())?;
        let x = orthogonal_complement_rows(
            &DMatrix::from_row_slice(1, d, v.as_slice()),
            DEFAULT_REL_TOL,
        )?;
        if x.nrows() != d - 1 {
            return Err(Error::InvalidInput("direction must be non-zero".into()));
        }
        let y = &x * &teacher;
        tasks.push(Task::new(x, y)?);
    }
    Ok(RankDeficient {
        collection: TaskCollection::new(tasks)?,
        teacher,
        directions,
    })
}

/// `T` tasks of rank `d − 1`, each with a solution direction drawn uniformly
/// on the sphere.
pub fn gen_rank_dminus1(d: usize, tasks: usize, seed: u64) -> Result<RankDeficient> {
    if d < 2 {
        return Err(Error::InvalidInput("rank-(d-1) tasks need d >= 2".into()));
    }
    if tasks == 0 {
        return Err(Error::InvalidInput("T must be at least 1".into()));
    }
    let mut rng = rng(seed);
    let directions: Vec<_> = (0..tasks)
        .map(|_| unit_normal_vector(&mut rng, d))
        .collect();
    let teacher = unit_normal_vector(&mut rng, d);
    rank_dminus1_from_directions(directions, teacher)
}
