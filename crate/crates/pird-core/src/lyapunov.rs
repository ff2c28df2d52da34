//! Discrete-time Lyapunov equation solver.
//!
//! Solves `X = A X A' + Q` by Smith's squared-iteration: starting from
//! `X_0 = Q`, repeatedly apply `X <- X + A X A'` while squaring `A`.
//! The iterate after `k` steps equals the partial sum of the series
//! `sum A^j Q (A')^j` over `2^k` terms, so convergence is geometric in
//! `rho(A)^(2^k)` and a handful of iterations suffice for any stable
//! `A`. Divergence therefore indicates a spectral radius at or above
//! one, which is reported as an instability error.

use nalgebra::DMatrix;

use crate::error::{PirdError, Result};

const MAX_DOUBLINGS: usize = 100;
const RELATIVE_TOL: f64 = 1e-15;
/// Entry magnitude past which the iteration is declared divergent.
/// Stationary covariances of interest are many orders below this.
const DIVERGENCE_CAP: f64 = 1e150;

/// Largest eigenvalue modulus of a square real matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// Solves `X = A X A' + Q` for stable `A` (spectral radius below one).
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(PirdError::InvalidParameter {
            name: "lyapunov operands",
            reason: format!(
                "dimension mismatch: A is {}x{}, Q is {}x{}",
                a.nrows(),
                a.ncols(),
                q.nrows(),
                q.ncols()
            ),
        });
    }
    let mut x = q.clone();
    let mut a_pow = a.clone();
    for _ in 0..MAX_DOUBLINGS {
        let increment = &a_pow * &x * a_pow.transpose();
        // compare largest entries, not Frobenius norms: norms square the
        // entries and overflow to infinity long before the entries do
        let inc_max = increment.amax();
        x += increment;
        let x_max = x.amax();
        if !x_max.is_finite() || x_max > DIVERGENCE_CAP {
            break;
        }
        if inc_max <= RELATIVE_TOL * x_max.max(f64::MIN_POSITIVE) {
            // one more squaring's worth of terms is already below roundoff
            return Ok(x);
        }
        a_pow = &a_pow * &a_pow;
    }
    Err(PirdError::UnstableModel {
        radius: spectral_radius(a),
    })
}
