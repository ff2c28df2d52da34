//! Decomposition engine: assembles lattice, spectra, and quadrature
//! into per-atom information rates.
//!
//! The pipeline runs in four steps. First, the cross-spectral density
//! of the model is evaluated on the grid. Second, every channel group
//! appearing in the lattice gets a spectral-rate profile against the
//! target, and each atom's redundancy profile is the pointwise minimum
//! over its groups. Third, profiles are band-integrated into cumulative
//! rates. Fourth, Moebius inversion turns cumulative rates into atom
//! rates, and the defining identities (atom rates sum to the joint
//! rate; each source's down-set sums to its marginal rate) are checked
//! and recorded.
//!
//! A zero-lag variant of the same construction decomposes the static
//! mutual information of a covariance matrix; for memoryless models the
//! two coincide.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{PirdError, Result};
use crate::lattice::{Atom, RedundancyLattice};
use crate::linalg;
use crate::spectral::{
    integrate, mir_profile, time_domain_mir, var_to_spectrum, FrequencyGrid, SpectralDensity,
};
use crate::var::VarModel;

/// Residual above which the internal sum checks abort the decomposition.
const CONSISTENCY_BOUND: f64 = 1e-6;

/// Atom profiles whose magnitude never exceeds this are reported as
/// exactly zero in summaries, suppressing sign noise.
const SUMMARY_CLAMP: f64 = 1e-14;

/// Conservativeness margin added to the time-domain bound.
const CONSERVATIVE_MARGIN: f64 = 1e-6;

/// Output scale for reported rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    /// Multiplier converting nats to the requested unit.
    pub fn scale(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

/// Residuals of the defining sum identities, recorded per decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyResiduals {
    /// `| sum of atom rates - joint rate |`.
    pub total_sum: f64,
    /// Per source: `| down-set sum at the singleton - marginal rate |`.
    pub marginal_sums: Vec<f64>,
}

/// Full decomposition of the information rate between a target channel
/// and a set of source channels.
#[derive(Debug, Clone)]
pub struct PirdResult {
    lattice: RedundancyLattice,
    target: usize,
    sources: Vec<usize>,
    grid: FrequencyGrid,
    band: Option<(f64, f64)>,
    cumulative_rates: Vec<f64>,
    atom_rates: Vec<f64>,
    cumulative_profiles: Vec<Vec<f64>>,
    atom_profiles: Vec<Vec<f64>>,
    joint_mir: f64,
    marginal_mirs: Vec<f64>,
    residuals: ConsistencyResiduals,
}

impl PirdResult {
    pub fn lattice(&self) -> &RedundancyLattice {
        &self.lattice
    }

    /// Target channel index in the analyzed model or dataset.
    pub fn target(&self) -> usize {
        self.target
    }

    /// Source channel indices, in lattice position order.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Integration band, when the decomposition was band-limited.
    pub fn band(&self) -> Option<(f64, f64)> {
        self.band
    }

    /// Cumulative (redundancy) rates per atom, in lattice order.
    pub fn cumulative_rates(&self) -> &[f64] {
        &self.cumulative_rates
    }

    /// Atom rates per atom (Moebius inversion of the cumulative rates).
    pub fn atom_rates(&self) -> &[f64] {
        &self.atom_rates
    }

    /// Per-atom redundancy-rate density across the grid.
    pub fn cumulative_profiles(&self) -> &[Vec<f64>] {
        &self.cumulative_profiles
    }

    /// Per-atom rate density (pointwise inversion of the cumulative
    /// profiles).
    pub fn atom_profiles(&self) -> &[Vec<f64>] {
        &self.atom_profiles
    }

    /// Rate between the full source set and the target.
    pub fn joint_mir(&self) -> f64 {
        self.joint_mir
    }

    /// Rate between each single source and the target.
    pub fn marginal_mirs(&self) -> &[f64] {
        &self.marginal_mirs
    }

    pub fn residuals(&self) -> &ConsistencyResiduals {
        &self.residuals
    }
}

/// Coarse summary of a decomposition: redundant, unique, and
/// synergistic rates.
///
/// For one or two sources the atoms map onto the fields exactly. For
/// more sources the mapping follows a documented (non-canonical)
/// convention: redundancy is the all-singletons atom, unique terms are
/// the singleton atoms, synergy sums every atom whose groups all have
/// at least two members, and the remainder is reported separately.
#[derive(Debug, Clone, Serialize)]
pub struct PirdSummary {
    pub redundancy: f64,
    pub unique: Vec<f64>,
    pub synergy: f64,
    /// Sum of atoms not covered by the other fields (zero for up to two
    /// sources, where the four atoms are covered exactly).
    pub residual: f64,
    /// Human-readable description of the atom grouping used.
    pub convention: String,
}

fn convention_text(n_sources: usize) -> String {
    if n_sources <= 2 {
        "atoms map one-to-one onto redundancy, unique, and synergy".into()
    } else {
        "non-canonical coarse-graining: redundancy = all-singletons atom; \
         unique = singleton atoms; synergy = atoms whose groups all have \
         at least two members; residual = remaining atoms"
            .into()
    }
}

/// Builds a summary from per-atom values, optionally zeroing clamped
/// atoms.
fn summarize_values(
    lattice: &RedundancyLattice,
    values: &[f64],
    clamped: Option<&[bool]>,
) -> PirdSummary {
    let n = lattice.n_sources();
    let value = |i: usize| {
        if clamped.is_some_and(|c| c[i]) {
            0.0
        } else {
            values[i]
        }
    };
    if n == 1 {
        // a single source carries everything as unique information
        return PirdSummary {
            redundancy: 0.0,
            unique: vec![value(0)],
            synergy: 0.0,
            residual: 0.0,
            convention: convention_text(1),
        };
    }
    let bottom = lattice.bottom_index();
    let mut redundancy = 0.0;
    let mut unique = vec![0.0; n];
    let mut synergy = 0.0;
    let mut residual = 0.0;
    for (i, atom) in lattice.atoms().iter().enumerate() {
        let v = value(i);
        if i == bottom {
            redundancy = v;
        } else if atom.groups().len() == 1 && atom.groups()[0].len() == 1 {
            unique[atom.groups()[0].members()[0] - 1] = v;
        } else if atom.groups().iter().all(|g| g.len() >= 2) {
            synergy += v;
        } else {
            residual += v;
        }
    }
    PirdSummary {
        redundancy,
        unique,
        synergy,
        residual,
        convention: convention_text(n),
    }
}

/// Summary of a full decomposition, applying the profile clamp: atoms
/// whose rate density never exceeds 1e-14 in magnitude report exactly
/// zero.
pub fn summarize(result: &PirdResult) -> PirdSummary {
    let clamped: Vec<bool> = result
        .atom_profiles
        .iter()
        .map(|p| p.iter().all(|v| v.abs() < SUMMARY_CLAMP))
        .collect();
    summarize_values(&result.lattice, &result.atom_rates, Some(&clamped))
}

fn check_selection(dim: usize, target: usize, sources: &[usize]) -> Result<()> {
    if sources.is_empty() {
        return Err(PirdError::InvalidParameter {
            name: "sources",
            reason: "must name at least one channel".into(),
        });
    }
    let mut seen = sources.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(PirdError::InvalidParameter {
            name: "sources",
            reason: "duplicate source channel".into(),
        });
    }
    if sources.contains(&target) {
        return Err(PirdError::InvalidParameter {
            name: "target",
            reason: "target channel also listed as a source".into(),
        });
    }
    if sources.iter().chain(std::iter::once(&target)).any(|&c| c >= dim) {
        return Err(PirdError::InvalidParameter {
            name: "channels",
            reason: format!("channel index out of range for {dim} channels"),
        });
    }
    Ok(())
}

/// Redundancy-rate density of one atom at one grid frequency: the
/// minimum of the group spectral rates (the joint rate for the
/// single-group atoms, so unique and synergistic atoms inherit their
/// group's own rate).
pub fn spectral_redundancy(
    spec: &SpectralDensity,
    atom: &Atom,
    sources: &[usize],
    target: usize,
    omega_index: usize,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for group in atom.groups() {
        let channels = group_channels(group.members(), sources);
        let v = crate::spectral::spectral_mir(spec, &channels, target, omega_index)?;
        best = best.min(v);
    }
    Ok(best)
}

/// Maps lattice member indices (1-based) onto model channel indices,
/// sorted so that a group always selects channels in the same order
/// regardless of how the sources were listed. This keeps results
/// bitwise invariant under source permutation.
fn group_channels(members: &[usize], sources: &[usize]) -> Vec<usize> {
    let mut channels: Vec<usize> = members.iter().map(|&i| sources[i - 1]).collect();
    channels.sort_unstable();
    channels
}

/// Decomposes the information rate between `target` and `sources` of a
/// VAR model over the given grid, optionally restricted to a band.
pub fn decompose(
    model: &VarModel,
    target: usize,
    sources: &[usize],
    grid: &FrequencyGrid,
    band: Option<(f64, f64)>,
) -> Result<PirdResult> {
    check_selection(model.dim(), target, sources)?;
    let lattice = RedundancyLattice::enumerate(sources.len())?;
    let spectrum = var_to_spectrum(model, grid)?;
    decompose_on(&lattice, &spectrum, target, sources, band)
}

/// Decomposition core shared by the model path and (through a flat
/// two-point spectrum) the static path.
fn decompose_on(
    lattice: &RedundancyLattice,
    spectrum: &SpectralDensity,
    target: usize,
    sources: &[usize],
    band: Option<(f64, f64)>,
) -> Result<PirdResult> {
    let grid = spectrum.grid().clone();
    let n_atoms = lattice.len();

    // one spectral profile per distinct channel group across all atoms
    let mut group_profiles: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    for atom in lattice.atoms() {
        for group in atom.groups() {
            let channels = group_channels(group.members(), sources);
            if let Entry::Vacant(slot) = group_profiles.entry(channels) {
                let profile = mir_profile(spectrum, slot.key(), target)?;
                slot.insert(profile);
            }
        }
    }

    let cumulative_profiles: Vec<Vec<f64>> = lattice
        .atoms()
        .iter()
        .map(|atom| {
            let members: Vec<&Vec<f64>> = atom
                .groups()
                .iter()
                .map(|g| &group_profiles[&group_channels(g.members(), sources)])
                .collect();
            (0..grid.len())
                .map(|k| members.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect();

    let cumulative_rates: Vec<f64> = cumulative_profiles
        .iter()
        .map(|p| integrate(p, &grid, band))
        .collect::<Result<_>>()?;
    let atom_rates = lattice.moebius_invert(&cumulative_rates)?;

    // pointwise inversion: the atom-rate densities behind the clamp rule
    // and the profile export
    let mut atom_profiles = vec![vec![0.0; grid.len()]; n_atoms];
    let mut scratch = vec![0.0; n_atoms];
    for k in 0..grid.len() {
        for (i, profile) in cumulative_profiles.iter().enumerate() {
            scratch[i] = profile[k];
        }
        let inverted = lattice.moebius_invert(&scratch)?;
        for (i, v) in inverted.into_iter().enumerate() {
            atom_profiles[i][k] = v;
        }
    }

    let joint_mir = cumulative_rates[lattice.top_index()];
    let marginal_mirs: Vec<f64> = (1..=sources.len())
        .map(|s| cumulative_rates[lattice.singleton_index(s).expect("singleton atom exists")])
        .collect();

    // verify the defining identities before releasing the result
    let accumulated = lattice.accumulate(&atom_rates)?;
    let total_sum = (atom_rates.iter().sum::<f64>() - joint_mir).abs();
    let marginal_sums: Vec<f64> = (1..=sources.len())
        .map(|s| {
            let idx = lattice.singleton_index(s).expect("singleton atom exists");
            (accumulated[idx] - marginal_mirs[s - 1]).abs()
        })
        .collect();
    let worst = marginal_sums
        .iter()
        .copied()
        .fold(total_sum, f64::max);
    if worst > CONSISTENCY_BOUND {
        return Err(PirdError::InternalConsistency {
            residual: worst,
            bound: CONSISTENCY_BOUND,
        });
    }

    Ok(PirdResult {
        lattice: lattice.clone(),
        target,
        sources: sources.to_vec(),
        grid,
        band,
        cumulative_rates,
        atom_rates,
        cumulative_profiles,
        atom_profiles,
        joint_mir,
        marginal_mirs,
        residuals: ConsistencyResiduals {
            total_sum,
            marginal_sums,
        },
    })
}

/// Static Gaussian mutual information between two channel groups of a
/// covariance matrix, in nats:
/// `1/2 * log( det S_A det S_B / det S_AB )`.
pub fn static_mi(cov: &DMatrix<f64>, group_a: &[usize], group_b: &[usize]) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(PirdError::InvalidParameter {
            name: "groups",
            reason: "both groups must be non-empty".into(),
        });
    }
    if group_a.iter().any(|c| group_b.contains(c)) {
        return Err(PirdError::InvalidParameter {
            name: "groups",
            reason: "groups must be disjoint".into(),
        });
    }
    let joint: Vec<usize> = group_a.iter().chain(group_b).copied().collect();
    let logs = linalg::cholesky_log_pivots(&linalg::principal_submatrix(cov, &joint))?;
    let logdet_a = 2.0 * logs[..group_a.len()].iter().sum::<f64>();
    let logdet_joint = 2.0 * logs.iter().sum::<f64>();
    let logdet_b = linalg::logdet_spd(&linalg::principal_submatrix(cov, group_b))?;
    Ok(0.5 * (logdet_a + logdet_b - logdet_joint))
}

/// Zero-lag decomposition of a covariance matrix: cumulative values are
/// minima of static group informations, atom values follow by the same
/// lattice inversion.
#[derive(Debug, Clone)]
pub struct StaticPid {
    pub lattice: RedundancyLattice,
    pub cumulative: Vec<f64>,
    pub partial: Vec<f64>,
    pub joint_mi: f64,
}

/// Computes the static decomposition of `cov` for the given channels.
pub fn static_decompose(
    cov: &DMatrix<f64>,
    target: usize,
    sources: &[usize],
) -> Result<StaticPid> {
    check_selection(cov.nrows(), target, sources)?;
    let lattice = RedundancyLattice::enumerate(sources.len())?;
    let mut group_mis: HashMap<Vec<usize>, f64> = HashMap::new();
    let cumulative: Vec<f64> = lattice
        .atoms()
        .iter()
        .map(|atom| {
            let mut best = f64::INFINITY;
            for group in atom.groups() {
                let channels = group_channels(group.members(), sources);
                let mi = match group_mis.get(&channels) {
                    Some(&v) => v,
                    None => {
                        let v = static_mi(cov, &channels, &[target])?;
                        group_mis.insert(channels, v);
                        v
                    }
                };
                best = best.min(mi);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let partial = lattice.moebius_invert(&cumulative)?;
    let joint_mi = cumulative[lattice.top_index()];
    Ok(StaticPid {
        lattice,
        cumulative,
        partial,
        joint_mi,
    })
}

/// Summary form of [`static_decompose`].
pub fn static_pid(cov: &DMatrix<f64>, target: usize, sources: &[usize]) -> Result<PirdSummary> {
    let pid = static_decompose(cov, target, sources)?;
    Ok(summarize_values(&pid.lattice, &pid.partial, None))
}

/// One atom's entry in a conservativeness report.
#[derive(Debug, Clone, Serialize)]
pub struct ConservativenessEntry {
    pub atom: String,
    /// Cumulative rate produced by the decomposition.
    pub cumulative: f64,
    /// Minimum over the atom's groups of the time-domain group rate.
    pub bound: f64,
    /// `bound + margin - cumulative`; negative margins are violations.
    pub margin: f64,
    pub ok: bool,
    /// True when every group's time-domain estimate had converged.
    pub decayed: bool,
}

/// Result of checking every cumulative rate against its time-domain
/// upper bound.
#[derive(Debug, Clone, Serialize)]
pub struct ConservativenessReport {
    pub entries: Vec<ConservativenessEntry>,
    pub all_ok: bool,
    pub max_lag: usize,
}

/// Verifies that each atom's cumulative rate does not exceed the
/// smallest time-domain rate among its groups (plus a small margin) —
/// the frequency-wise minimum can only be more conservative than the
/// group rates themselves. Requires a full-band result.
pub fn conservativeness_check(
    result: &PirdResult,
    model: &VarModel,
    max_lag: usize,
) -> Result<ConservativenessReport> {
    if result.band.is_some() {
        return Err(PirdError::InvalidParameter {
            name: "band",
            reason: "conservativeness bounds apply to full-band rates only".into(),
        });
    }
    let mut oracle_cache: HashMap<Vec<usize>, (f64, bool)> = HashMap::new();
    let mut entries = Vec::with_capacity(result.lattice.len());
    for (i, atom) in result.lattice.atoms().iter().enumerate() {
        let mut bound = f64::INFINITY;
        let mut decayed = true;
        for group in atom.groups() {
            let channels = group_channels(group.members(), &result.sources);
            let (rate, conv) = match oracle_cache.get(&channels) {
                Some(&v) => v,
                None => {
                    let est = time_domain_mir(model, &channels, &[result.target], max_lag)?;
                    oracle_cache.insert(channels.clone(), (est.rate, est.decayed));
                    (est.rate, est.decayed)
                }
            };
            bound = bound.min(rate);
            decayed &= conv;
        }
        let cumulative = result.cumulative_rates[i];
        let margin = bound + CONSERVATIVE_MARGIN - cumulative;
        entries.push(ConservativenessEntry {
            atom: atom.label(),
            cumulative,
            bound,
            margin,
            ok: margin >= 0.0,
            decayed,
        });
    }
    let all_ok = entries.iter().all(|e| e.ok);
    Ok(ConservativenessReport {
        entries,
        all_ok,
        max_lag,
    })
}

/// Serializable document for a decomposition, with unit conversion
/// applied to every rate.
#[derive(Debug, Clone, Serialize)]
pub struct PirdReport {
    pub units: Units,
    pub target: usize,
    pub sources: Vec<usize>,
    pub atoms: Vec<Atom>,
    pub atom_labels: Vec<String>,
    pub cumulative_rates: Vec<f64>,
    pub atom_rates: Vec<f64>,
    pub band: Option<(f64, f64)>,
    pub grid_points: usize,
    pub joint_mir: f64,
    pub marginal_mirs: Vec<f64>,
    pub residuals: ConsistencyResiduals,
    pub summary: PirdSummary,
}

impl PirdReport {
    pub fn new(result: &PirdResult, units: Units) -> Self {
        let s = units.scale();
        let mut summary = summarize(result);
        summary.redundancy *= s;
        summary.synergy *= s;
        summary.residual *= s;
        for u in &mut summary.unique {
            *u *= s;
        }
        PirdReport {
            units,
            target: result.target,
            sources: result.sources.clone(),
            atoms: result.lattice.atoms().to_vec(),
            atom_labels: result.lattice.atoms().iter().map(|a| a.label()).collect(),
            cumulative_rates: result.cumulative_rates.iter().map(|v| v * s).collect(),
            atom_rates: result.atom_rates.iter().map(|v| v * s).collect(),
            band: result.band,
            grid_points: result.grid.len(),
            joint_mir: result.joint_mir * s,
            marginal_mirs: result.marginal_mirs.iter().map(|v| v * s).collect(),
            residuals: result.residuals.clone(),
            summary,
        }
    }
}

/// CSV of the spectral profiles: one row per frequency, a cumulative
/// (redundancy-density) column and an atom-density column per atom.
pub fn profiles_csv(result: &PirdResult, units: Units) -> String {
    let s = units.scale();
    let mut out = String::from("omega");
    for atom in result.lattice.atoms() {
        out.push_str(&format!(",cumulative {}", atom.label()));
    }
    for atom in result.lattice.atoms() {
        out.push_str(&format!(",atom {}", atom.label()));
    }
    out.push('\n');
    for k in 0..result.grid.len() {
        out.push_str(&format!("{}", result.grid.points()[k]));
        for profile in &result.cumulative_profiles {
            out.push_str(&format!(",{}", profile[k] * s));
        }
        for profile in &result.atom_profiles {
            out.push_str(&format!(",{}", profile[k] * s));
        }
        out.push('\n');
    }
    out
}
