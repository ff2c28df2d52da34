//! Shuffle surrogates and empirical significance for decomposition
//! results.
//!
//! A surrogate applies one uniformly random permutation of time
//! indices to every channel. That destroys all temporal structure
//! while leaving the set of joint samples — and therefore the zero-lag
//! sample covariance — untouched, which is exactly the null hypothesis
//! for a rate-based analysis: "the channels share no dynamic
//! information beyond their instantaneous correlation".
//!
//! Significance testing fits a VAR to the original series and to each
//! surrogate, decomposes every fit, and flags a quantity when the
//! original value falls outside the surrogate percentile band.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{self, PirdSummary};
use crate::error::{PirdError, Result};
use crate::spectral::FrequencyGrid;
use crate::var::VarModel;

/// Fewest surrogates for which a percentile band is meaningful.
pub const MIN_SURROGATES: usize = 20;

/// Applies one random permutation of time indices, the same for every
/// channel. Labels carry over; the zero-lag sample covariance is
/// preserved exactly (the identity permutation can occur, with
/// probability 1/n!, and is deliberately not excluded).
pub fn shuffle_surrogate(series: &crate::var::TimeSeriesSet, seed: u64) -> crate::var::TimeSeriesSet {
    let n = series.n_samples();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let old = series.samples();
    let shuffled = DMatrix::from_fn(n, series.dim(), |i, j| old[(perm[i], j)]);
    crate::var::TimeSeriesSet::new(shuffled, series.labels().to_vec())
        .expect("permutation preserves shape and finiteness")
}

/// Settings for a significance run.
#[derive(Debug, Clone, Serialize)]
pub struct SignificanceConfig {
    /// Number of surrogates (at least [`MIN_SURROGATES`]).
    pub n_surrogates: usize,
    /// Two-sided level; the band spans the alpha/2 and 1 - alpha/2
    /// percentiles.
    pub alpha: f64,
    /// Master seed; per-surrogate seeds derive from it.
    pub seed: u64,
    /// Largest VAR order offered to the order-selection criterion.
    pub max_order: usize,
    /// Frequency-grid resolution for the decompositions.
    pub grid_points: usize,
}

impl SignificanceConfig {
    pub fn new(n_surrogates: usize, seed: u64) -> Self {
        SignificanceConfig {
            n_surrogates,
            alpha: 0.05,
            seed,
            max_order: 10,
            grid_points: crate::spectral::DEFAULT_GRID_POINTS,
        }
    }
}

/// One tested quantity: the original value against the surrogate band.
#[derive(Debug, Clone, Serialize)]
pub struct QuantityReport {
    pub name: String,
    pub original: f64,
    pub lower: f64,
    pub upper: f64,
    pub significant: bool,
    /// Surrogate values in surrogate order (failed fits omitted).
    pub surrogate_values: Vec<f64>,
}

/// Full significance report.
#[derive(Debug, Clone, Serialize)]
pub struct SignificanceReport {
    pub n_surrogates: usize,
    /// Surrogates whose VAR fit or decomposition failed; they are
    /// excluded from the band.
    pub n_failed: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Order chosen for the original series.
    pub original_order: usize,
    /// Order re-selected for each successful surrogate.
    pub surrogate_orders: Vec<usize>,
    pub quantities: Vec<QuantityReport>,
}

/// Exclusive-interpolation percentile of (a copy of) `values` at
/// fraction `q`: the order statistic at position q(n+1), linearly
/// interpolated, clamped to the extremes. With this convention an
/// exchangeable sample falls outside the [q, 1-q] band with
/// probability exactly 2q whenever q(n+1) is an integer (e.g. 39
/// surrogates at q = 0.025 use the min and max).
fn exclusive_percentile(values: &[f64], q: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let pos = q * (n as f64 + 1.0);
    if pos <= 1.0 {
        return sorted[0];
    }
    if pos >= n as f64 {
        return sorted[n - 1];
    }
    let r = pos.floor() as usize; // 1-based rank of the lower neighbor
    let frac = pos - r as f64;
    sorted[r - 1] + frac * (sorted[r] - sorted[r - 1])
}

/// Names and values of the tested quantities for one decomposition.
fn quantity_values(joint_mir: f64, summary: &PirdSummary) -> Vec<(String, f64)> {
    let mut out = vec![
        ("joint_mir".to_string(), joint_mir),
        ("redundancy".to_string(), summary.redundancy),
    ];
    for (i, &u) in summary.unique.iter().enumerate() {
        out.push((format!("unique_{}", i + 1), u));
    }
    out.push(("synergy".to_string(), summary.synergy));
    if summary.unique.len() > 2 {
        out.push(("residual".to_string(), summary.residual));
    }
    out
}

fn fit_and_decompose(
    series: &crate::var::TimeSeriesSet,
    target: usize,
    sources: &[usize],
    max_order: usize,
    grid: &FrequencyGrid,
) -> Result<(usize, Vec<(String, f64)>)> {
    let order = VarModel::select_order(series, max_order)?;
    let model = VarModel::estimate(series, order)?;
    let result = engine::decompose(&model, target, sources, grid, None)?;
    let summary = engine::summarize(&result);
    Ok((order, quantity_values(result.joint_mir(), &summary)))
}

/// Runs the full surrogate test: fit and decompose the original series
/// and `n_surrogates` shuffled copies, then compare each quantity
/// against the surrogate percentile band.
pub fn significance(
    series: &crate::var::TimeSeriesSet,
    target: usize,
    sources: &[usize],
    config: &SignificanceConfig,
) -> Result<SignificanceReport> {
    if config.n_surrogates < MIN_SURROGATES {
        return Err(PirdError::InvalidParameter {
            name: "n_surrogates",
            reason: format!(
                "need at least {MIN_SURROGATES} surrogates, got {}",
                config.n_surrogates
            ),
        });
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(PirdError::InvalidParameter {
            name: "alpha",
            reason: format!("must lie strictly within (0, 1), got {}", config.alpha),
        });
    }
    let grid = FrequencyGrid::uniform(config.grid_points)?;

    let (original_order, original) =
        fit_and_decompose(series, target, sources, config.max_order, &grid)?;

    // fixed per-surrogate seeds so surrogates could run in any order
    let surrogate_seeds: Vec<u64> = {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        (0..config.n_surrogates).map(|_| rng.random()).collect()
    };

    let mut surrogate_orders = Vec::new();
    let mut n_failed = 0usize;
    let mut distributions: Vec<Vec<f64>> = vec![Vec::new(); original.len()];
    for &s in &surrogate_seeds {
        let surrogate = shuffle_surrogate(series, s);
        match fit_and_decompose(&surrogate, target, sources, config.max_order, &grid) {
            Ok((order, values)) => {
                surrogate_orders.push(order);
                for (slot, (_, v)) in distributions.iter_mut().zip(&values) {
                    slot.push(*v);
                }
            }
            Err(_) => n_failed += 1,
        }
    }
    if distributions[0].len() < MIN_SURROGATES {
        return Err(PirdError::InsufficientSamples {
            needed: MIN_SURROGATES,
            got: distributions[0].len(),
        });
    }

    let quantities = original
        .into_iter()
        .zip(distributions)
        .map(|((name, value), dist)| {
            let lower = exclusive_percentile(&dist, config.alpha / 2.0);
            let upper = exclusive_percentile(&dist, 1.0 - config.alpha / 2.0);
            QuantityReport {
                name,
                original: value,
                lower,
                upper,
                significant: value < lower || value > upper,
                surrogate_values: dist,
            }
        })
        .collect();

    Ok(SignificanceReport {
        n_surrogates: config.n_surrogates,
        n_failed,
        alpha: config.alpha,
        seed: config.seed,
        original_order,
        surrogate_orders,
        quantities,
    })
}

/// CSV of the surrogate distributions: one column per quantity, one
/// row per successful surrogate.
pub fn distributions_csv(report: &SignificanceReport) -> String {
    let names: Vec<&str> = report.quantities.iter().map(|q| q.name.as_str()).collect();
    let mut out = names.join(",");
    out.push('\n');
    let rows = report
        .quantities
        .first()
        .map_or(0, |q| q.surrogate_values.len());
    for i in 0..rows {
        let row: Vec<String> = report
            .quantities
            .iter()
            .map(|q| q.surrogate_values[i].to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{build_model, SweepSetting};
    use crate::var::DEFAULT_BURN_IN;
    use nalgebra::DMatrix;

    #[test]
    fn surrogate_preserves_zero_lag_covariance_bitwise() {
        let model = build_model(SweepSetting::NoInstantaneous, 0.7).unwrap();
        let series = model.simulate(500, DEFAULT_BURN_IN, 42).unwrap();
        let original_cov = series.sample_covariance();
        for seed in 0..5 {
            let surrogate = shuffle_surrogate(&series, seed);
            assert_eq!(
                original_cov, surrogate.sample_covariance(),
                "seed {seed}"
            );
            assert_eq!(surrogate.labels(), series.labels());
        }
    }

    #[test]
    fn surrogate_destroys_autocorrelation() {
        // an AR(1) channel with strong memory shuffles down to noise
        let a = DMatrix::from_row_slice(1, 1, &[0.8]);
        let model = VarModel::new(vec![a], DMatrix::identity(1, 1)).unwrap();
        let n = 4000;
        let series = model.simulate(n, DEFAULT_BURN_IN, 7).unwrap();
        assert!(series.autocorrelation(0, 1) > 0.7);
        let surrogate = shuffle_surrogate(&series, 3);
        let r = surrogate.autocorrelation(0, 1);
        assert!(r.abs() < 4.0 / (n as f64).sqrt(), "residual memory {r}");
    }

    #[test]
    fn exclusive_percentiles_hit_the_extremes_at_integral_positions() {
        let values: Vec<f64> = (1..=39).map(|v| v as f64).collect();
        assert_eq!(exclusive_percentile(&values, 0.025), 1.0);
        assert_eq!(exclusive_percentile(&values, 0.975), 39.0);
        // interior position interpolates: q=0.5 -> position 20
        assert_eq!(exclusive_percentile(&values, 0.5), 20.0);
        // n=100, q=0.025 -> position 2.525
        let big: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert!((exclusive_percentile(&big, 0.025) - 2.525).abs() < 1e-12);
    }

    #[test]
    fn coupled_data_is_flagged_and_report_is_deterministic() {
        let model = build_model(SweepSetting::NoInstantaneous, 0.8).unwrap();
        let series = model.simulate(2000, DEFAULT_BURN_IN, 99).unwrap();
        let mut config = SignificanceConfig::new(39, 1234);
        config.max_order = 4;
        config.grid_points = 257;
        let report = significance(&series, 2, &[0, 1], &config).unwrap();
        let joint = &report.quantities[0];
        assert_eq!(joint.name, "joint_mir");
        assert!(joint.significant, "band [{}, {}] vs {}", joint.lower, joint.upper, joint.original);
        assert!(joint.original > joint.upper);
        assert_eq!(report.n_failed, 0);
        assert_eq!(report.surrogate_orders.len(), 39);

        let again = significance(&series, 2, &[0, 1], &config).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn independent_noise_is_usually_not_flagged() {
        // single null draw at a fixed seed; the aggregate false-positive
        // rate is exercised statistically in the acceptance suite
        let model = VarModel::new(Vec::new(), DMatrix::identity(3, 3)).unwrap();
        let series = model.simulate(400, 0, 5).unwrap();
        let mut config = SignificanceConfig::new(39, 77);
        config.max_order = 3;
        config.grid_points = 129;
        let report = significance(&series, 2, &[0, 1], &config).unwrap();
        let joint = &report.quantities[0];
        assert!(
            !joint.significant,
            "null data flagged: {} outside [{}, {}]",
            joint.original, joint.lower, joint.upper
        );
    }

    #[test]
    fn too_few_surrogates_is_rejected() {
        let model = VarModel::new(Vec::new(), DMatrix::identity(2, 2)).unwrap();
        let series = model.simulate(100, 0, 1).unwrap();
        let config = SignificanceConfig::new(5, 1);
        assert!(matches!(
            significance(&series, 1, &[0], &config),
            Err(PirdError::InvalidParameter { name: "n_surrogates", .. })
        ));
        let mut bad_alpha = SignificanceConfig::new(39, 1);
        bad_alpha.alpha = 0.0;
        assert!(significance(&series, 1, &[0], &bad_alpha).is_err());
    }

    #[test]
    fn distribution_csv_shape_matches_report() {
        let model = build_model(SweepSetting::Transition, 0.5).unwrap();
        let series = model.simulate(600, DEFAULT_BURN_IN, 11).unwrap();
        let mut config = SignificanceConfig::new(20, 8);
        config.max_order = 3;
        config.grid_points = 129;
        let report = significance(&series, 2, &[0, 1], &config).unwrap();
        let csv = distributions_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 20 - report.n_failed);
        assert_eq!(lines[0], "joint_mir,redundancy,unique_1,unique_2,synergy");
    }
}
