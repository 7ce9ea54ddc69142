//! Dense linear-algebra helpers and the feature-matrix representation used by tasks.
//!
//! Everything sits on top of nalgebra's SVD and Householder QR. The SVD
//! truncation rule is explicit: singular values below `rel_tol * sigma_max`
//! are treated as zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Default relative truncation threshold for SVD-based rank decisions.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Orthonormality tolerance accepted by [`FeatureMatrix::head_identity`].
const ORTHONORMAL_TOL: f64 = 1e-10;

fn ensure_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Moore–Penrose pseudoinverse, truncating singular values below
/// `rel_tol * sigma_max`.
///
/// The SVD decides the numerical rank. When the matrix has full row or
/// column rank the pseudoinverse is formed from a Householder QR instead,
/// which stays accurate on ill-conditioned blocks where nalgebra's SVD
/// reconstruction error alone can reach `1e4 · eps · sigma_max`.
pub fn pseudoinverse(x: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    ensure_finite(x, "matrix")?;
    let (rows, cols) = x.shape();
    if rows == 0 || cols == 0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let svd = x.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let mut pinv = DMatrix::zeros(cols, rows);
    if sigma_max == 0.0 {
        return Ok(pinv);
    }
    let cutoff = rel_tol * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank == rows.min(cols) {
        if let Some(p) = full_rank_pinv(x) {
            return Ok(p);
        }
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            // pinv += v_i * u_i^T / s
            let v_i = v_t.row(i).transpose();
            let u_i = u.column(i);
            pinv.ger(1.0 / s, &v_i, &u_i, 1.0);
        }
    }
    Ok(pinv)
}

/// `X⁺` for full-rank `X` via QR: `Q R⁻ᵀ` for wide `X` (`Xᵀ = QR`) and
/// `R⁻¹ Qᵀ` for tall `X` (`X = QR`). `None` if a triangular solve fails.
fn full_rank_pinv(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (rows, cols) = x.shape();
    if rows <= cols {
        let qr = x.transpose().qr();
        let (q, r) = (qr.q(), qr.r());
        let z = r
            .transpose()
            .solve_lower_triangular(&DMatrix::identity(rows, rows))?;
        Some(q * z)
    } else {
        let qr = x.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        r.solve_upper_triangular(&q.transpose())
    }
}

/// Largest singular value (spectral norm). Zero for empty matrices.
pub fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.singular_values().max()
}

/// Numerical rank with the same truncation rule as [`pseudoinverse`].
pub fn numerical_rank(x: &DMatrix<f64>, rel_tol: f64) -> usize {
    if x.is_empty() {
        return 0;
    }
    let sv = x.singular_values();
    let cutoff = rel_tol * sv.max();
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// Rows spanning the orthogonal complement of the row space of `basis`.
///
/// `basis` is `k × d`. A full QR of `basisᵀ` yields an orthogonal `d × d`
/// factor whose first `rank` columns span the rows of `basis`; the trailing
/// columns, transposed, are returned as an `(d − rank) × d` matrix with
/// orthonormal rows. The orientation of the returned basis is arbitrary.
pub fn orthogonal_complement_rows(basis: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    ensure_finite(basis, "subspace basis")?;
    let d = basis.ncols();
    if d == 0 {
        return Err(Error::InvalidInput("basis has zero columns".into()));
    }
    let rank = numerical_rank(basis, rel_tol);
    let mut q_t = DMatrix::<f64>::identity(d, d);
    if basis.nrows() > 0 {
        let qr = basis.transpose().qr();
        qr.q_tr_mul(&mut q_t);
    }
    // Rows of Qᵀ are the columns of the full Q.
    Ok(q_t.rows(rank, d - rank).into_owned())
}

/// Feature matrix of a single task.
///
/// `HeadIdentity` stores a matrix whose rows are the rows of `head` followed
/// by the unit rows `e_j` for `j in identity_from..d`. The whole stack has
/// orthonormal rows, so its pseudoinverse is its transpose; this keeps the
/// rank-decreasing high-dimensional construction at `O(d)` memory per task.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    Dense(DMatrix<f64>),
    HeadIdentity {
        head: DMatrix<f64>,
        identity_from: usize,
    },
}

impl FeatureMatrix {
    /// Validated constructor for the structured variant.
    pub fn head_identity(head: DMatrix<f64>, identity_from: usize) -> Result<Self> {
        ensure_finite(&head, "head rows")?;
        let d = head.ncols();
        if identity_from > d {
            return Err(Error::InvalidInput(format!(
                "identity_from {identity_from} exceeds dimension {d}"
            )));
        }
        if head.nrows() + (d - identity_from) == 0 {
            return Err(Error::InvalidInput("feature matrix has no rows".into()));
        }
        let gram = &head * head.transpose();
        let off = (gram - DMatrix::identity(head.nrows(), head.nrows())).amax();
        let overlap = head
            .columns(identity_from, d - identity_from)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if off > ORTHONORMAL_TOL || overlap > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput(
                "head rows must be orthonormal and vanish on the identity block".into(),
            ));
        }
        Ok(FeatureMatrix::HeadIdentity {
            head,
            identity_from,
        })
    }

    pub fn nrows(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.nrows(),
            FeatureMatrix::HeadIdentity {
                head,
                identity_from,
            } => head.nrows() + head.ncols() - identity_from,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.ncols(),
            FeatureMatrix::HeadIdentity { head, .. } => head.ncols(),
        }
    }

    /// `X w`.
    pub fn mul_vec(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.ncols(), w.len())?;
        Ok(match self {
            FeatureMatrix::Dense(m) => m * w,
            FeatureMatrix::HeadIdentity {
                head,
                identity_from,
            } => {
                let h = head.nrows();
                let d = head.ncols();
                let mut out = DVector::zeros(h + d - identity_from);
                out.rows_mut(0, h).copy_from(&(head * w));
                out.rows_mut(h, d - identity_from)
                    .copy_from(&w.rows(*identity_from, d - identity_from));
                out
            }
        })
    }

    /// `Xᵀ r`.
    pub fn tr_mul_vec(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.nrows(), r.len())?;
        Ok(match self {
            FeatureMatrix::Dense(m) => m.tr_mul(r),
            FeatureMatrix::HeadIdentity {
                head,
                identity_from,
            } => {
                let h = head.nrows();
                let d = head.ncols();
                let mut out = head.tr_mul(&r.rows(0, h));
                let mut tail = out.rows_mut(*identity_from, d - identity_from);
                tail += r.rows(h, d - identity_from);
                out
            }
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            FeatureMatrix::Dense(m) => m.clone(),
            FeatureMatrix::HeadIdentity {
                head,
                identity_from,
            } => {
                let h = head.nrows();
                let d = head.ncols();
                let mut m = DMatrix::zeros(self.nrows(), d);
                m.rows_mut(0, h).copy_from(head);
                for (i, j) in (*identity_from..d).enumerate() {
                    m[(h + i, j)] = 1.0;
                }
                m
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FeatureMatrix::Dense(m) => m.iter().all(|v| v.is_finite()),
            FeatureMatrix::HeadIdentity { head, .. } => head.iter().all(|v| v.is_finite()),
        }
    }

    pub fn spectral_norm(&self) -> f64 {
        match self {
            FeatureMatrix::Dense(m) => spectral_norm(m),
            FeatureMatrix::HeadIdentity { .. } => 1.0,
        }
    }
}

/// Row-wise vertical concatenation of dense blocks sharing a column count.
pub fn vstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.nrows()).copy_from(b);
        at += b.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn ill_conditioned_full_rank_is_accurate() {
        // Condition number about 7e4; plain SVD loses ~8 digits on X⁺y here.
        let x = dmatrix![
            0.02673495993133894, 0.011718686568385298;
            0.9152824250407128, 0.40175365205306246
        ];
        let w = dvector![0.5864733939806126, -0.8099684920741431];
        let y = &x * &w;
        let back = pseudoinverse(&x, DEFAULT_REL_TOL).unwrap() * y;
        assert!((back - w).amax() < 1e-11);
        for m in [x.clone(), x.transpose(), x.clone().insert_row(1, 0.3)] {
            let p = pseudoinverse(&m, DEFAULT_REL_TOL).unwrap();
            assert!((&m * &p * &m - &m).amax() < 1e-12);
            let (a, b) = (&m * &p, &p * &m);
            assert!((&a - a.transpose()).amax() < 1e-10);
            assert!((&b - b.transpose()).amax() < 1e-10);
        }
    }

    fn penrose_residuals(x: &DMatrix<f64>, p: &DMatrix<f64>) -> [f64; 4] {
        [
            (x * p * x - x).amax(),
            (p * x * p - p).amax(),
            ((x * p).transpose() - x * p).amax(),
            ((p * x).transpose() - p * x).amax(),
        ]
    }

    #[test]
    fn identity_pinv_is_identity() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        let p = pseudoinverse(&i3, 1e-12).unwrap();
        assert!((p - i3).amax() < 1e-15);
    }

    #[test]
    fn zero_matrix_pinv_is_zero_transpose_shape() {
        let z = DMatrix::<f64>::zeros(2, 3);
        let p = pseudoinverse(&z, 1e-12).unwrap();
        assert_eq!(p.shape(), (3, 2));
        assert_eq!(p.amax(), 0.0);
    }

    #[test]
    fn diagonal_pinv_truncates_zero() {
        let x = dmatrix![2.0, 0.0; 0.0, 0.0];
        let p = pseudoinverse(&x, 1e-12).unwrap();
        assert!((p - dmatrix![0.5, 0.0; 0.0, 0.0]).amax() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        let x = dmatrix![1.0, f64::NAN];
        assert_eq!(pseudoinverse(&x, 1e-12), Err(Error::NonFinite("matrix")));
        assert!(pseudoinverse(&dmatrix![1.0], 0.0).is_err());
    }

    #[test]
    fn penrose_identities_on_rank_deficient_wide_matrix() {
        // rank 2, 3 x 5
        let a = dmatrix![1.0, 2.0, 0.0, -1.0, 3.0;
                         0.5, -1.0, 4.0, 2.0, 0.0;
                         1.5, 1.0, 4.0, 1.0, 3.0];
        let p = pseudoinverse(&a, 1e-12).unwrap();
        let tol = 10.0 * 1e-12 * spectral_norm(&a);
        for r in penrose_residuals(&a, &p) {
            assert!(r <= tol.max(1e-13), "residual {r}");
        }
        assert_eq!(numerical_rank(&a, 1e-12), 2);
    }

    #[test]
    fn complement_rows_are_orthonormal_and_orthogonal() {
        let basis = dmatrix![0.0, 0.3, 0.9; 0.7, 0.0, 0.7];
        let x = orthogonal_complement_rows(&basis, 1e-12).unwrap();
        assert_eq!(x.shape(), (1, 3));
        assert!((&x * x.transpose() - DMatrix::identity(1, 1)).amax() < 1e-14);
        assert!((&x * basis.transpose()).amax() < 1e-14);
    }

    #[test]
    fn complement_of_single_axis_in_2d() {
        let x = orthogonal_complement_rows(&dmatrix![0.0, 1.0], 1e-12).unwrap();
        assert_eq!(x.shape(), (1, 2));
        assert!((x[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!(x[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn head_identity_matches_dense() {
        let s = 0.6;
        let c = 0.8;
        let head = dmatrix![s, c, 0.0, 0.0];
        let f = FeatureMatrix::head_identity(head, 2).unwrap();
        let dense = f.to_dense();
        assert_eq!(dense.shape(), (3, 4));
        let w = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        assert!((f.mul_vec(&w).unwrap() - &dense * &w).amax() < 1e-15);
        let r = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        assert!((f.tr_mul_vec(&r).unwrap() - dense.tr_mul(&r)).amax() < 1e-15);
        assert!((spectral_norm(&dense) - f.spectral_norm()).abs() < 1e-12);
    }

    #[test]
    fn head_identity_rejects_overlap() {
        let head = dmatrix![0.0, 0.0, 1.0];
        assert!(FeatureMatrix::head_identity(head, 2).is_err());
    }
}
