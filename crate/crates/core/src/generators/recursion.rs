//! Scalar sequences behind the high-dimensional adversarial construction.
//!
//! Everything here is indexed the way the construction is usually written:
//! `x[t]` is `x_t` for `t = 1..=d` and `beta[t]` is `β_t` for `t = 2..=d`.
//! Slot 0 (and slot 1 of `beta`) is unused and holds NaN.

use crate::error::{Error, Result};

/// Smallest dimension for which the construction is guaranteed to exist.
pub const MIN_DIM: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Recursion {
    pub d: usize,
    /// `c = 2^(−1/d)`.
    pub c: f64,
    pub beta: Vec<f64>,
    pub x: Vec<f64>,
}

/// `β_t = ((t−1)c − (t−2)) c^(2t−5) / d`.
pub fn beta_t(t: usize, d: usize) -> f64 {
    let c = contraction(d);
    let tf = t as f64;
    ((tf - 1.0) * c - (tf - 2.0)) * c.powi(2 * t as i32 - 5) / d as f64
}

/// `c = 2^(−1/d)`.
pub fn contraction(d: usize) -> f64 {
    (-(d as f64).recip()).exp2()
}

impl Recursion {
    /// Runs the recursion up to `x_d`. Works for any `d ≥ 2` as long as every
    /// radicand `x_{t−1}² − 4β_t` is non-negative.
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("need d >= 2, got {d}")));
        }
        let c = contraction(d);
        let mut beta = vec![f64::NAN; d + 1];
        let mut x = vec![f64::NAN; d + 1];
        x[1] = 1.0;
        for t in 2..=d {
            beta[t] = beta_t(t, d);
            let radicand = x[t - 1] * x[t - 1] - 4.0 * beta[t];
            if radicand < 0.0 {
                return Err(Error::ConstructionInfeasible { t, radicand });
            }
            x[t] = (x[t - 1] + radicand.sqrt()) / 2.0;
        }
        Ok(Recursion { d, c, beta, x })
    }

    /// `‖w_{k−1} − w_k‖` for `2 ≤ k ≤ d`, in closed form.
    pub fn step_norm(&self, k: usize) -> f64 {
        let c = self.c;
        let d = self.d as f64;
        let dx = self.x[k - 1] - self.x[k];
        let ki = k as i32;
        let tail = (k as f64 - 2.0) * c.powi(2 * ki - 6) * (1.0 - c).powi(2) / d;
        (dx * dx + tail + c.powi(2 * ki - 4) / d).sqrt()
    }

    /// `(w_{k−1} − w_k)ᵀ w_{t−1}` for `2 ≤ t ≤ k ≤ d`, in closed form.
    pub fn step_inner(&self, k: usize, t: usize) -> f64 {
        let c = self.c;
        let cross = (t as f64 - 2.0) * c.powi(k as i32 + t as i32 - 6) * (1.0 - c) / self.d as f64;
        (self.x[k - 1] - self.x[k]) * self.x[t - 1] + cross
    }

    fn check_delta_indices(&self, t: usize, k: usize) -> Result<()> {
        if t < 2 || k < t || k + 1 > self.d {
            return Err(Error::InvalidInput(format!(
                "need 2 <= t <= k <= d-1, got t = {t}, k = {k}, d = {}",
                self.d
            )));
        }
        Ok(())
    }

    /// `Δ_{t,k} = ‖w_k − w_{k+1}‖ (w_{k−1} − w_k)ᵀw_{t−1} − ‖w_{k−1} − w_k‖ (w_k − w_{k+1})ᵀw_{t−1}`
    /// from the scalar sequences alone, `O(1)` per pair.
    pub fn delta(&self, t: usize, k: usize) -> Result<f64> {
        self.check_delta_indices(t, k)?;
        Ok(self.step_norm(k + 1) * self.step_inner(k, t)
            - self.step_norm(k) * self.step_inner(k + 1, t))
    }

    /// Minimum of `Δ_{t,k}` over all valid pairs, with its arg-min `(t, k)`.
    pub fn min_delta(&self) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for t in 2..self.d {
            for k in t..self.d {
                let v = self.step_norm(k + 1) * self.step_inner(k, t)
                    - self.step_norm(k) * self.step_inner(k + 1, t);
                if v < best.0 {
                    best = (v, t, k);
                }
            }
        }
        best
    }

    /// `max_{0 ≤ k ≤ d} |x_k − x̃_k|`, taking `x_0 = x_1 = 1`.
    pub fn max_approximation_error(&self) -> f64 {
        (1..=self.d)
            .map(|k| (self.x[k] - xk_tilde(k, self.d)).abs())
            .fold((1.0 - xk_tilde(0, self.d)).abs(), f64::max)
    }
}

/// Closed-form approximation
/// `x̃_k = √(1 − 1/ln4 + 4^(−k/d) (1/ln4 − k/d))`.
pub fn xk_tilde(k: usize, d: usize) -> f64 {
    let inv_ln4 = 1.0 / 4f64.ln();
    let s = k as f64 / d as f64;
    (1.0 - inv_ln4 + 4f64.powf(-s) * (inv_ln4 - s)).sqrt()
}
