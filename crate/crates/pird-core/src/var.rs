//! Vector autoregressive models: representation, simulation, least-squares
//! estimation, order selection, and exact autocovariance sequences.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PirdError, Result};
use crate::linalg;
use crate::lyapunov::{solve_discrete_lyapunov, spectral_radius};

/// Simulation burn-in used when the caller has no reason to override it.
/// Transients of a model with spectral radius 0.9 decay below 1e-45
/// within a thousand steps.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Relative pivot floor for declaring the regressor Gram matrix
/// rank-deficient during estimation.
const RANK_TOL: f64 = 1e-10;

/// A multichannel sample matrix with channel labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSet {
    samples: DMatrix<f64>,
    labels: Vec<String>,
}

impl TimeSeriesSet {
    /// Wraps an `n x M` sample matrix; rejects empty or non-finite data.
    pub fn new(samples: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(PirdError::EmptyData);
        }
        if labels.len() != samples.ncols() {
            return Err(PirdError::InvalidParameter {
                name: "labels",
                reason: format!(
                    "{} labels for {} channels",
                    labels.len(),
                    samples.ncols()
                ),
            });
        }
        for j in 0..samples.ncols() {
            for i in 0..samples.nrows() {
                if !samples[(i, j)].is_finite() {
                    return Err(PirdError::NonFinite {
                        line: i + 1,
                        column: labels[j].clone(),
                    });
                }
            }
        }
        Ok(Self { samples, labels })
    }

    /// Number of time points.
    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of channels.
    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Replaces channel labels (count must match).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dim() {
            return Err(PirdError::InvalidParameter {
                name: "labels",
                reason: format!("{} labels for {} channels", labels.len(), self.dim()),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Index of a channel by label.
    pub fn channel_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| PirdError::MissingColumn {
                name: label.to_string(),
            })
    }

    /// New set holding only the given channels, in the given order.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        for &c in channels {
            if c >= self.dim() {
                return Err(PirdError::InvalidParameter {
                    name: "channels",
                    reason: format!("index {c} out of range for {} channels", self.dim()),
                });
            }
        }
        let samples = DMatrix::from_fn(self.n_samples(), channels.len(), |i, j| {
            self.samples[(i, channels[j])]
        });
        let labels = channels.iter().map(|&c| self.labels[c].clone()).collect();
        Ok(Self { samples, labels })
    }

    /// Per-channel means, accumulated in value order so the result does
    /// not depend on the ordering of the rows.
    pub fn sample_mean(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| sorted_sum(self.samples.column(j).iter().copied()) / self.n_samples() as f64)
            .collect()
    }

    /// Zero-lag sample covariance with divisor `n`.
    ///
    /// Cross-products are summed in value order, which makes the result
    /// exactly invariant under any permutation of the rows — shuffle
    /// surrogates preserve it bit for bit.
    pub fn sample_covariance(&self) -> DMatrix<f64> {
        let n = self.n_samples();
        let m = self.dim();
        let means = self.sample_mean();
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let s = sorted_sum(
                    (0..n).map(|t| {
                        (self.samples[(t, i)] - means[i]) * (self.samples[(t, j)] - means[j])
                    }),
                );
                cov[(i, j)] = s / n as f64;
                cov[(j, i)] = cov[(i, j)];
            }
        }
        cov
    }

    /// Sample autocorrelation of one channel at the given lag.
    pub fn autocorrelation(&self, channel: usize, lag: usize) -> f64 {
        let n = self.n_samples();
        let x = self.samples.column(channel);
        let mean = x.iter().sum::<f64>() / n as f64;
        let denom: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        if denom == 0.0 || lag >= n {
            return 0.0;
        }
        let num: f64 = (lag..n).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
        num / denom
    }
}

/// Sums values in ascending `total_cmp` order: deterministic and
/// independent of the original ordering.
fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_unstable_by(f64::total_cmp);
    v.iter().sum()
}

/// An order-`p` vector autoregression with Gaussian innovations.
///
/// Construction enforces stability (companion spectral radius below
/// one) and a symmetric positive-definite innovation covariance, so
/// every `VarModel` in circulation describes a stationary process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VarModelRepr", into = "VarModelRepr")]
pub struct VarModel {
    dim: usize,
    order: usize,
    coeffs: Vec<DMatrix<f64>>,
    innovation_cov: DMatrix<f64>,
    radius: f64,
}

impl VarModel {
    /// Builds and validates a model from lag coefficient matrices
    /// (`coeffs[k]` multiplies the sample `k + 1` steps back) and the
    /// innovation covariance.
    pub fn new(coeffs: Vec<DMatrix<f64>>, innovation_cov: DMatrix<f64>) -> Result<Self> {
        let dim = innovation_cov.nrows();
        if dim == 0 || innovation_cov.ncols() != dim {
            return Err(PirdError::InvalidParameter {
                name: "innovation_cov",
                reason: "must be square and non-empty".into(),
            });
        }
        for (k, a) in coeffs.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(PirdError::InvalidParameter {
                    name: "coeffs",
                    reason: format!(
                        "lag-{} matrix is {}x{}, expected {dim}x{dim}",
                        k + 1,
                        a.nrows(),
                        a.ncols()
                    ),
                });
            }
        }
        let asymmetry = (&innovation_cov - innovation_cov.transpose()).abs().max();
        if asymmetry > 1e-12 {
            return Err(PirdError::InvalidParameter {
                name: "innovation_cov",
                reason: format!("not symmetric (max asymmetry {asymmetry:.3e})"),
            });
        }
        let innovation_cov = (&innovation_cov + innovation_cov.transpose()) * 0.5;
        // positive definiteness, with the shared pivot floor
        linalg::cholesky_log_pivots(&innovation_cov)?;

        let order = coeffs.len();
        let radius = if order == 0 {
            0.0
        } else {
            spectral_radius(&companion(&coeffs, dim))
        };
        if radius >= 1.0 {
            return Err(PirdError::UnstableModel { radius });
        }
        Ok(Self {
            dim,
            order,
            coeffs,
            innovation_cov,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn innovation_cov(&self) -> &DMatrix<f64> {
        &self.innovation_cov
    }

    /// Largest eigenvalue modulus of the `Mp x Mp` companion matrix
    /// (zero for a static model).
    pub fn companion_spectral_radius(&self) -> f64 {
        self.radius
    }

    /// Draws a realization of length `n_samples` after discarding
    /// `burn_in` initial steps. Deterministic for a fixed seed.
    pub fn simulate(&self, n_samples: usize, burn_in: usize, seed: u64) -> Result<TimeSeriesSet> {
        if n_samples == 0 {
            return Err(PirdError::InvalidParameter {
                name: "n_samples",
                reason: "must be positive".into(),
            });
        }
        // correlated innovations from i.i.d. normals via the lower
        // Cholesky factor of the innovation covariance
        let chol = self
            .innovation_cov
            .clone()
            .cholesky()
            .ok_or_else(|| PirdError::DegenerateSpectrum {
                detail: "innovation covariance lost positive definiteness".into(),
            })?
            .l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.dim;
        let total = burn_in + n_samples;
        let mut history: Vec<Vec<f64>> = vec![vec![0.0; m]; self.order];
        let mut out = DMatrix::zeros(n_samples, m);
        let mut innovation = vec![0.0; m];
        for t in 0..total {
            let white: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            for i in 0..m {
                innovation[i] = (0..=i).map(|j| chol[(i, j)] * white[j]).sum();
            }
            let mut x = innovation.clone();
            for (k, a) in self.coeffs.iter().enumerate() {
                let past = &history[k];
                for i in 0..m {
                    x[i] += (0..m).map(|j| a[(i, j)] * past[j]).sum::<f64>();
                }
            }
            if t >= burn_in {
                for i in 0..m {
                    out[(t - burn_in, i)] = x[i];
                }
            }
            if self.order > 0 {
                history.rotate_right(1);
                history[0] = x;
            }
        }
        let labels = (1..=m).map(|i| format!("ch{i}")).collect();
        TimeSeriesSet::new(out, labels)
    }

    /// Exact process autocovariances `R(0) .. R(max_lag)` with the
    /// convention `R(k) = E[x_t x_{t-k}']`.
    ///
    /// `R(0) .. R(p-1)` come from the companion-form discrete Lyapunov
    /// equation; higher lags follow the recursion
    /// `R(k) = sum_m A_m R(k-m)`.
    pub fn autocovariances(&self, max_lag: usize) -> Result<Vec<DMatrix<f64>>> {
        let m = self.dim;
        let p = self.order;
        let mut r: Vec<DMatrix<f64>> = Vec::with_capacity(max_lag + 1);
        if p == 0 {
            r.push(self.innovation_cov.clone());
        } else {
            let comp = companion(&self.coeffs, m);
            let mut q = DMatrix::zeros(m * p, m * p);
            q.view_mut((0, 0), (m, m)).copy_from(&self.innovation_cov);
            let big = solve_discrete_lyapunov(&comp, &q)?;
            // stacked state [x_t; x_{t-1}; ...]: block (0, j) of the
            // solution is E[x_t x_{t-j}'] = R(j)
            for j in 0..p.min(max_lag + 1) {
                r.push(big.view((0, j * m), (m, m)).into_owned());
            }
        }
        for k in r.len()..=max_lag {
            let mut next = DMatrix::zeros(m, m);
            for (i, a) in self.coeffs.iter().enumerate() {
                next += a * &r[k - 1 - i];
            }
            r.push(next);
        }
        Ok(r)
    }

    /// Zero-lag process covariance (the stationary covariance of the
    /// joint process, not the innovation covariance).
    pub fn process_covariance(&self) -> Result<DMatrix<f64>> {
        Ok(self.autocovariances(0)?.pop().expect("lag zero present"))
    }

    /// Ordinary least-squares fit of an order-`order` model, one
    /// equation per channel, with channel means removed first. The
    /// innovation covariance is the residual covariance with divisor
    /// equal to the number of regression rows (`n - order`).
    pub fn estimate(series: &TimeSeriesSet, order: usize) -> Result<VarModel> {
        Self::estimate_from(series, order, order)
    }

    /// As [`estimate`](Self::estimate) but fitting only rows
    /// `start..n`, so candidate orders can share a sample range.
    fn estimate_from(series: &TimeSeriesSet, order: usize, start: usize) -> Result<VarModel> {
        assert!(start >= order, "regression window precedes available lags");
        let n = series.n_samples();
        let m = series.dim();
        let q = order * m;
        let needed = start + q + 2;
        if n < needed {
            return Err(PirdError::InsufficientSamples { needed, got: n });
        }
        let rows = n - start;
        let means = series.sample_mean();
        let x = series.samples();
        let centered = |t: usize, j: usize| x[(t, j)] - means[j];

        if order == 0 {
            let mut cov = DMatrix::zeros(m, m);
            for t in start..n {
                for i in 0..m {
                    for j in i..m {
                        cov[(i, j)] += centered(t, i) * centered(t, j);
                    }
                }
            }
            cov /= rows as f64;
            cov.fill_lower_triangle_with_upper_triangle();
            return VarModel::new(Vec::new(), cov);
        }

        // regressor row for time t: [x_{t-1}, ..., x_{t-order}], each m wide
        let reg = |t: usize, c: usize| {
            let lag = c / m + 1;
            let ch = c % m;
            centered(t - lag, ch)
        };
        let mut gram = DMatrix::zeros(q, q);
        let mut cross = DMatrix::zeros(q, m);
        for t in start..n {
            for a in 0..q {
                let ra = reg(t, a);
                for b in a..q {
                    gram[(a, b)] += ra * reg(t, b);
                }
                for j in 0..m {
                    cross[(a, j)] += ra * centered(t, j);
                }
            }
        }
        gram.fill_lower_triangle_with_upper_triangle();

        let factor = cholesky_with_rank_check(&gram).map_err(|col| {
            let lag = col / m + 1;
            let label = &series.labels()[col % m];
            PirdError::RankDeficient {
                channels: vec![format!("{label} (lag {lag})")],
            }
        })?;
        let beta = solve_cholesky(&factor, &cross);

        let mut coeffs = Vec::with_capacity(order);
        for k in 0..order {
            let a = DMatrix::from_fn(m, m, |i, j| beta[(k * m + j, i)]);
            coeffs.push(a);
        }
        let mut resid_cov = DMatrix::zeros(m, m);
        let mut resid = vec![0.0; m];
        for t in start..n {
            for i in 0..m {
                let fitted: f64 = (0..q).map(|c| reg(t, c) * beta[(c, i)]).sum();
                resid[i] = centered(t, i) - fitted;
            }
            for i in 0..m {
                for j in i..m {
                    resid_cov[(i, j)] += resid[i] * resid[j];
                }
            }
        }
        resid_cov /= rows as f64;
        resid_cov.fill_lower_triangle_with_upper_triangle();
        VarModel::new(coeffs, resid_cov)
    }

    /// Akaike criterion `ln det(residual cov) + 2 p M^2 / T` for each
    /// candidate order `p = 1..=max_order`, all fitted on the common
    /// sample range that drops the first `max_order` points
    /// (`T = n - max_order`).
    pub fn aic_scores(series: &TimeSeriesSet, max_order: usize) -> Result<Vec<f64>> {
        if max_order == 0 {
            return Err(PirdError::InvalidParameter {
                name: "max_order",
                reason: "must be at least 1".into(),
            });
        }
        let m = series.dim();
        let t_eff = series.n_samples().saturating_sub(max_order) as f64;
        (1..=max_order)
            .map(|p| {
                let fit = Self::estimate_from(series, p, max_order)?;
                let logdet = linalg::logdet_spd(fit.innovation_cov())?;
                Ok(logdet + 2.0 * (p * m * m) as f64 / t_eff)
            })
            .collect()
    }

    /// Order with the smallest Akaike score (ties go to the smaller order).
    pub fn select_order(series: &TimeSeriesSet, max_order: usize) -> Result<usize> {
        let scores = Self::aic_scores(series, max_order)?;
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s < scores[best] {
                best = i;
            }
        }
        Ok(best + 1)
    }

    /// Random stable model with the requested companion spectral
    /// radius; a reproducible fixture for property suites and benches.
    pub fn random_stable(dim: usize, order: usize, radius: f64, seed: u64) -> VarModel {
        assert!(dim > 0 && (0.0..1.0).contains(&radius));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs: Vec<DMatrix<f64>> = (0..order)
            .map(|_| DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        if order > 0 && radius > 0.0 {
            let rho = spectral_radius(&companion(&coeffs, dim)).max(1e-12);
            // scaling lag k by (radius/rho)^k scales every companion
            // eigenvalue by radius/rho
            for (k, a) in coeffs.iter_mut().enumerate() {
                *a *= (radius / rho).powi(k as i32 + 1);
            }
        } else {
            coeffs = (0..order).map(|_| DMatrix::zeros(dim, dim)).collect();
        }
        let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sigma = &g * g.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.2;
        VarModel::new(coeffs, sigma).expect("constructed model is stable and PD by design")
    }
}

/// Companion matrix of the coefficient list (block top row, identity
/// subdiagonal).
fn companion(coeffs: &[DMatrix<f64>], dim: usize) -> DMatrix<f64> {
    let p = coeffs.len();
    let mut c = DMatrix::zeros(dim * p, dim * p);
    for (k, a) in coeffs.iter().enumerate() {
        c.view_mut((0, k * dim), (dim, dim)).copy_from(a);
    }
    for i in 0..dim * (p - 1) {
        c[(dim + i, i)] = 1.0;
    }
    c
}

/// Cholesky factor of an SPD matrix, failing with the offending column
/// index when a pivot drops below the relative rank tolerance.
fn cholesky_with_rank_check(m: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let mut pivot = m[(k, k)];
        for j in 0..k {
            pivot -= l[(k, j)] * l[(k, j)];
        }
        if pivot <= RANK_TOL * scale {
            return Err(k);
        }
        let diag = pivot.sqrt();
        l[(k, k)] = diag;
        for i in k + 1..n {
            let mut s = m[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * l[(k, j)];
            }
            l[(i, k)] = s / diag;
        }
    }
    Ok(l)
}

/// Solves `L L' X = B` given the lower factor `L`.
fn solve_cholesky(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut v = x[(i, col)];
            for j in 0..i {
                v -= l[(i, j)] * x[(j, col)];
            }
            x[(i, col)] = v / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = x[(i, col)];
            for j in i + 1..n {
                v -= l[(j, i)] * x[(j, col)];
            }
            x[(i, col)] = v / l[(i, i)];
        }
    }
    x
}

/// Serialized form: matrices as row-major flat arrays.
#[derive(Serialize, Deserialize)]
struct VarModelRepr {
    dim: usize,
    order: usize,
    coeffs: Vec<Vec<f64>>,
    innovation_cov: Vec<f64>,
}

impl TryFrom<VarModelRepr> for VarModel {
    type Error = PirdError;
    fn try_from(r: VarModelRepr) -> Result<Self> {
        let expect = r.dim * r.dim;
        if r.coeffs.len() != r.order || r.coeffs.iter().any(|c| c.len() != expect) {
            return Err(PirdError::InvalidParameter {
                name: "coeffs",
                reason: format!("expected {} matrices of {} entries", r.order, expect),
            });
        }
        if r.innovation_cov.len() != expect {
            return Err(PirdError::InvalidParameter {
                name: "innovation_cov",
                reason: format!("expected {expect} entries"),
            });
        }
        let coeffs = r
            .coeffs
            .iter()
            .map(|c| DMatrix::from_row_slice(r.dim, r.dim, c))
            .collect();
        VarModel::new(coeffs, DMatrix::from_row_slice(r.dim, r.dim, &r.innovation_cov))
    }
}

impl From<VarModel> for VarModelRepr {
    fn from(m: VarModel) -> Self {
        let flat = |a: &DMatrix<f64>| {
            let mut v = Vec::with_capacity(a.nrows() * a.ncols());
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    v.push(a[(i, j)]);
                }
            }
            v
        };
        VarModelRepr {
            dim: m.dim,
            order: m.order,
            coeffs: m.coeffs.iter().map(flat).collect(),
            innovation_cov: flat(&m.innovation_cov),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(a: f64, var: f64) -> VarModel {
        VarModel::new(
            vec![DMatrix::from_element(1, 1, a)],
            DMatrix::from_element(1, 1, var),
        )
        .unwrap()
    }

    /// Two mutually coupled sources driving nothing: the third channel
    /// stays white because its coefficient row is zero.
    fn coupled_pair_model() -> VarModel {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.8, 0.1, 0.0, 0.1, 0.8, 0.0, 0.0, 0.0, 0.0],
        );
        VarModel::new(vec![a], DMatrix::identity(3, 3)).unwrap()
    }

    #[test]
    fn white_noise_sample_covariance_approaches_sigma() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let model = VarModel::new(Vec::new(), sigma.clone()).unwrap();
        let series = model.simulate(20000, 0, 42).unwrap();
        let cov = series.sample_covariance();
        assert!(
            (cov - sigma).abs().max() < 0.05,
            "sample covariance strayed from the generating covariance"
        );
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let model = VarModel::random_stable(3, 2, 0.8, 7);
        let a = model.simulate(500, 100, 99).unwrap();
        let b = model.simulate(500, 100, 99).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = model.simulate(500, 100, 100).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn companion_radius_examples() {
        let white = VarModel::new(Vec::new(), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(white.companion_spectral_radius(), 0.0);
        assert!((ar1(0.8, 1.0).companion_spectral_radius() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn unstable_model_is_rejected_at_construction() {
        let result = VarModel::new(
            vec![DMatrix::from_element(1, 1, 1.1)],
            DMatrix::from_element(1, 1, 1.0),
        );
        match result {
            Err(PirdError::UnstableModel { radius }) => assert!((radius - 1.1).abs() < 1e-12),
            other => panic!("expected stability rejection, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_innovation_covariance_is_rejected() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]);
        assert!(matches!(
            VarModel::new(Vec::new(), sigma),
            Err(PirdError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn ar1_autocovariances_match_closed_form() {
        // R(k) = a^k sigma^2 / (1 - a^2)
        let model = ar1(0.5, 1.0);
        let r = model.autocovariances(3).unwrap();
        let r0 = 1.0 / (1.0 - 0.25);
        for (k, rk) in r.iter().enumerate() {
            let expected = 0.5_f64.powi(k as i32) * r0;
            assert!(
                (rk[(0, 0)] - expected).abs() < 1e-12,
                "lag {k}: {} vs {expected}",
                rk[(0, 0)]
            );
        }
    }

    #[test]
    fn static_model_autocovariances_are_sigma_then_zero() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let model = VarModel::new(Vec::new(), sigma.clone()).unwrap();
        let r = model.autocovariances(2).unwrap();
        assert_eq!(r[0], sigma);
        assert!(r[1].abs().max() == 0.0 && r[2].abs().max() == 0.0);
    }

    #[test]
    fn simulated_lag_one_autocorrelation_tracks_theory() {
        let model = coupled_pair_model();
        let r = model.autocovariances(1).unwrap();
        let predicted = r[1][(0, 0)] / r[0][(0, 0)];
        let series = model.simulate(30000, DEFAULT_BURN_IN, 5).unwrap();
        let observed = series.autocorrelation(0, 1);
        assert!(
            (observed - predicted).abs() < 0.02,
            "lag-1 autocorrelation {observed} vs predicted {predicted}"
        );
        // the uncoupled channel is white noise
        let white_r1 = series.autocorrelation(2, 1);
        assert!(white_r1.abs() < 4.0 / (30000f64).sqrt());
    }

    #[test]
    fn estimate_recovers_known_coefficients() {
        let model = VarModel::random_stable(3, 2, 0.7, 31);
        let series = model.simulate(10000, DEFAULT_BURN_IN, 32).unwrap();
        let fit = VarModel::estimate(&series, 2).unwrap();
        for k in 0..2 {
            let err = (&fit.coeffs()[k] - &model.coeffs()[k]).abs().max();
            assert!(err < 0.05, "lag-{} coefficient error {err}", k + 1);
        }
        let sym = (fit.innovation_cov() - fit.innovation_cov().transpose())
            .abs()
            .max();
        assert!(sym < 1e-12);
    }

    #[test]
    fn residuals_of_a_correct_fit_are_white() {
        let model = VarModel::random_stable(2, 1, 0.8, 77);
        let n = 8000;
        let series = model.simulate(n, DEFAULT_BURN_IN, 78).unwrap();
        let fit = VarModel::estimate(&series, 1).unwrap();
        let means = series.sample_mean();
        let x = series.samples();
        let a = &fit.coeffs()[0];
        let mut resid = DMatrix::zeros(n - 1, 2);
        for t in 1..n {
            for i in 0..2 {
                let pred: f64 = (0..2).map(|j| a[(i, j)] * (x[(t - 1, j)] - means[j])).sum();
                resid[(t - 1, i)] = (x[(t, i)] - means[i]) - pred;
            }
        }
        let resid_set = TimeSeriesSet::new(resid, vec!["r1".into(), "r2".into()]).unwrap();
        let mut acc = 0.0;
        let mut count = 0;
        for ch in 0..2 {
            for lag in 1..=5 {
                acc += resid_set.autocorrelation(ch, lag).abs();
                count += 1;
            }
        }
        assert!(
            acc / count as f64 <= 4.0 / (n as f64).sqrt(),
            "mean residual autocorrelation {} too large",
            acc / count as f64
        );
    }

    #[test]
    fn constant_channel_is_reported_rank_deficient() {
        let mut samples = DMatrix::zeros(200, 2);
        let mut state = 0.37;
        for t in 0..200 {
            state = 0.5 * state + (t as f64 * 0.618).sin();
            samples[(t, 0)] = state;
            samples[(t, 1)] = 2.5; // constant
        }
        let series =
            TimeSeriesSet::new(samples, vec!["active".into(), "flat".into()]).unwrap();
        match VarModel::estimate(&series, 1) {
            Err(PirdError::RankDeficient { channels }) => {
                assert!(
                    channels.iter().any(|c| c.contains("flat")),
                    "offending channel not named: {channels:?}"
                );
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn order_zero_estimate_is_the_sample_covariance() {
        let model = VarModel::random_stable(2, 0, 0.0, 3);
        let series = model.simulate(500, 0, 4).unwrap();
        let fit = VarModel::estimate(&series, 0).unwrap();
        assert!(fit.coeffs().is_empty());
        let diff = (fit.innovation_cov() - series.sample_covariance()).abs().max();
        assert!(diff < 1e-12);
    }

    #[test]
    fn aic_selects_the_true_order() {
        let model = VarModel::random_stable(2, 2, 0.75, 55);
        let series = model.simulate(5000, DEFAULT_BURN_IN, 56).unwrap();
        assert_eq!(VarModel::select_order(&series, 6).unwrap(), 2);
    }

    #[test]
    fn aic_on_white_noise_selects_a_negligible_model() {
        let model = VarModel::new(Vec::new(), DMatrix::identity(2, 2)).unwrap();
        let series = model.simulate(4000, 0, 8).unwrap();
        let p = VarModel::select_order(&series, 5).unwrap();
        let fit = VarModel::estimate(&series, p).unwrap();
        let biggest = fit
            .coeffs()
            .iter()
            .map(|a| a.abs().max())
            .fold(0.0, f64::max);
        assert!(
            biggest < 0.1,
            "white-noise fit of order {p} has coefficient {biggest}"
        );
    }

    #[test]
    fn single_candidate_order_is_returned() {
        let series = VarModel::random_stable(2, 1, 0.5, 9)
            .simulate(400, 100, 10)
            .unwrap();
        assert_eq!(VarModel::select_order(&series, 1).unwrap(), 1);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let series = VarModel::random_stable(3, 0, 0.0, 11)
            .simulate(10, 0, 12)
            .unwrap();
        assert!(matches!(
            VarModel::estimate(&series, 3),
            Err(PirdError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let model = VarModel::random_stable(2, 2, 0.6, 13);
        let json = serde_json::to_string(&model).unwrap();
        for field in ["dim", "order", "coeffs", "innovation_cov"] {
            assert!(json.contains(field), "serialized form lacks {field:?}");
        }
        let back: VarModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        // corrupted payloads are rejected with a parameter error
        assert!(serde_json::from_str::<VarModel>(
            "{\"dim\":2,\"order\":1,\"coeffs\":[[1.0]],\"innovation_cov\":[1,0,0,1]}"
        )
        .is_err());
    }

    #[test]
    fn sample_covariance_is_permutation_invariant() {
        let series = VarModel::random_stable(3, 1, 0.7, 14)
            .simulate(997, 100, 15)
            .unwrap();
        let cov = series.sample_covariance();
        // reverse the rows: any permutation must leave the bits alone
        let n = series.n_samples();
        let reversed = DMatrix::from_fn(n, 3, |i, j| series.samples()[(n - 1 - i, j)]);
        let rev = TimeSeriesSet::new(reversed, series.labels().to_vec()).unwrap();
        assert_eq!(cov, rev.sample_covariance());
    }

    #[test]
    fn non_finite_samples_are_rejected_with_position() {
        let mut samples = DMatrix::zeros(5, 2);
        samples[(3, 1)] = f64::NAN;
        match TimeSeriesSet::new(samples, vec!["a".into(), "b".into()]) {
            Err(PirdError::NonFinite { line, column }) => {
                assert_eq!((line, column.as_str()), (4, "b"));
            }
            other => panic!("expected non-finite rejection, got {other:?}"),
        }
    }
}
