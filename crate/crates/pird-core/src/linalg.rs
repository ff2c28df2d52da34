//! Small dense linear-algebra helpers shared by the spectral and
//! time-domain code paths.
//!
//! The central primitive is a Cholesky-style factorization that returns
//! the logarithms of its pivots instead of the factor itself. Prefix
//! sums of those logs give the log-determinants of every leading
//! principal submatrix in one pass, which is what nested-block mutual
//! information computations need. A pivot at or below
//! [`CHOLESKY_PIVOT_FLOOR`] aborts with a degeneracy error rather than
//! letting a log-determinant run off to minus infinity.

use nalgebra::{Complex, DMatrix};

use crate::error::{PirdError, Result};

/// Absolute pivot floor below which a matrix is treated as singular.
pub const CHOLESKY_PIVOT_FLOOR: f64 = 1e-12;

type C64 = Complex<f64>;

/// Log-pivots `ln L[k][k]` of the Cholesky factor of a Hermitian
/// positive-definite complex matrix.
///
/// `2 * log_pivots[..k].sum()` is the log-determinant of the leading
/// `k x k` principal submatrix.
pub fn cholesky_log_pivots_complex(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols(), "matrix must be square");
    let mut l = DMatrix::<C64>::zeros(n, n);
    let mut logs = Vec::with_capacity(n);
    for k in 0..n {
        let mut pivot = m[(k, k)].re;
        for j in 0..k {
            pivot -= l[(k, j)].norm_sqr();
        }
        // negated form so a NaN pivot also lands in the error branch
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(pivot > CHOLESKY_PIVOT_FLOOR) {
            return Err(PirdError::DegenerateSpectrum {
                detail: format!(
                    "factorization pivot {pivot:.3e} at index {k} is at or below {CHOLESKY_PIVOT_FLOOR:.0e}"
                ),
            });
        }
        let diag = pivot.sqrt();
        l[(k, k)] = C64::new(diag, 0.0);
        logs.push(diag.ln());
        for i in k + 1..n {
            let mut s = m[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)].conj();
            }
            l[(i, k)] = s / diag;
        }
    }
    Ok(logs)
}

/// Real symmetric positive-definite counterpart of
/// [`cholesky_log_pivots_complex`].
pub fn cholesky_log_pivots(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols(), "matrix must be square");
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut logs = Vec::with_capacity(n);
    for k in 0..n {
        let mut pivot = m[(k, k)];
        for j in 0..k {
            pivot -= l[(k, j)] * l[(k, j)];
        }
        // negated form so a NaN pivot also lands in the error branch
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(pivot > CHOLESKY_PIVOT_FLOOR) {
            return Err(PirdError::DegenerateSpectrum {
                detail: format!(
                    "factorization pivot {pivot:.3e} at index {k} is at or below {CHOLESKY_PIVOT_FLOOR:.0e}"
                ),
            });
        }
        let diag = pivot.sqrt();
        l[(k, k)] = diag;
        logs.push(diag.ln());
        for i in k + 1..n {
            let mut s = m[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)];
            }
            l[(i, k)] = s / diag;
        }
    }
    Ok(logs)
}

/// Log-determinant of a Hermitian positive-definite complex matrix.
pub fn logdet_hermitian(m: &DMatrix<C64>) -> Result<f64> {
    Ok(2.0 * cholesky_log_pivots_complex(m)?.iter().sum::<f64>())
}

/// Log-determinant of a real symmetric positive-definite matrix.
pub fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    Ok(2.0 * cholesky_log_pivots(m)?.iter().sum::<f64>())
}

/// Hermitian part `(M + M^H) / 2`; cheap symmetry repair after products.
pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Principal submatrix on the given row/column indices, in index order.
pub fn principal_submatrix<T: nalgebra::Scalar + Copy>(
    m: &DMatrix<T>,
    idx: &[usize],
) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &g * g.transpose() + DMatrix::identity(n, n) * 0.5
    }

    fn random_hpd(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
        let g = DMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        &g * g.adjoint() + DMatrix::identity(n, n) * C64::new(0.5, 0.0)
    }

    #[test]
    fn identity_has_zero_logdet() {
        assert_eq!(logdet_spd(&DMatrix::identity(4, 4)).unwrap(), 0.0);
        assert_eq!(
            logdet_hermitian(&DMatrix::<C64>::identity(4, 4)).unwrap(),
            0.0
        );
    }

    #[test]
    fn known_real_determinant() {
        // det [[4,2],[2,3]] = 8
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        assert!((logdet_spd(&m).unwrap() - 8.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn known_complex_determinant() {
        // det [[2, i], [-i, 2]] = 4 - 1 = 3
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
                C64::new(2.0, 0.0),
            ],
        );
        assert!((logdet_hermitian(&m).unwrap() - 3.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn matches_library_cholesky_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_spd(5, &mut rng);
            let ours = logdet_spd(&m).unwrap();
            let reference = m.clone().cholesky().unwrap().determinant().ln();
            assert!(
                (ours - reference).abs() < 1e-10,
                "logdet mismatch: {ours} vs {reference}"
            );
        }
    }

    #[test]
    fn matches_lu_determinant_on_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let m = random_hpd(4, &mut rng);
            let ours = logdet_hermitian(&m).unwrap();
            let det = m.clone().lu().determinant();
            assert!(det.im.abs() < 1e-10 * det.re.abs().max(1.0));
            assert!(
                (ours - det.re.ln()).abs() < 1e-10,
                "logdet mismatch: {ours} vs {}",
                det.re.ln()
            );
        }
    }

    #[test]
    fn prefix_sums_give_leading_minor_logdets() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = random_spd(6, &mut rng);
        let logs = cholesky_log_pivots(&m).unwrap();
        for k in 1..=6 {
            let sub = principal_submatrix(&m, &(0..k).collect::<Vec<_>>());
            let direct = logdet_spd(&sub).unwrap();
            let prefix = 2.0 * logs[..k].iter().sum::<f64>();
            assert!(
                (direct - prefix).abs() < 1e-10,
                "leading minor {k}: {direct} vs {prefix}"
            );
        }
    }

    #[test]
    fn singular_matrix_is_reported_as_degenerate() {
        // rank-1 outer product
        let v = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let m = &v * v.transpose();
        assert!(matches!(
            logdet_spd(&m),
            Err(PirdError::DegenerateSpectrum { .. })
        ));
        let nan = DMatrix::from_element(2, 2, f64::NAN);
        assert!(logdet_spd(&nan).is_err(), "NaN pivot must not pass");
    }

    #[test]
    fn submatrix_selects_expected_entries() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let s = principal_submatrix(&m, &[0, 2]);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 7.0, 9.0]));
    }

    #[test]
    fn hermitian_part_symmetrizes() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.5),
                C64::new(2.0, 1.0),
                C64::new(0.0, 0.0),
                C64::new(3.0, -0.5),
            ],
        );
        let h = hermitian_part(&m);
        let diff = (&h - h.adjoint()).norm();
        assert!(diff < 1e-15);
        assert!((h[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(h[(0, 0)].im.abs() < 1e-15, "diagonal must become real");
    }
}
