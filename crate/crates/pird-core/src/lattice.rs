//! Redundancy lattice over groups of source processes.
//!
//! Nodes are antichains of non-empty source subsets: collections in
//! which no group contains another. The partial order `alpha <= beta`
//! holds when every group of `beta` has some group of `alpha` as a
//! subset, so the bottom node is the collection of all singletons and
//! the top node is the single full group. Cumulative values assigned
//! to the nodes convert to per-node increments by Moebius inversion
//! along that order.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PirdError, Result};

/// Largest source count enumerated without an explicit override.
///
/// Antichain counts grow like Dedekind numbers (N=4 already yields 166
/// nodes); larger systems must opt in via [`RedundancyLattice::enumerate_with_limit`].
pub const DEFAULT_MAX_SOURCES: usize = 4;

/// A non-empty group of source indices (1-based, sorted, unique).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SourceSet {
    members: Vec<usize>,
}

impl SourceSet {
    /// Builds a group from source indices; rejects empty, zero, or duplicate entries.
    pub fn new(members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        if members.is_empty() {
            return Err(PirdError::InvalidParameter {
                name: "source set",
                reason: "must be non-empty".into(),
            });
        }
        if members[0] == 0 {
            return Err(PirdError::InvalidParameter {
                name: "source set",
                reason: "source indices are 1-based".into(),
            });
        }
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(PirdError::InvalidParameter {
                name: "source set",
                reason: "duplicate source index".into(),
            });
        }
        Ok(Self { members })
    }

    /// Sorted 1-based source indices.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    /// True when every member of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &SourceSet) -> bool {
        self.mask() & other.mask() == self.mask()
    }

    fn mask(&self) -> u32 {
        self.members.iter().fold(0u32, |m, &i| m | (1 << (i - 1)))
    }

    fn from_mask(mask: u32) -> Self {
        let members = (0..32).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        Self { members }
    }
}

impl TryFrom<Vec<usize>> for SourceSet {
    type Error = PirdError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SourceSet::new(v)
    }
}

impl From<SourceSet> for Vec<usize> {
    fn from(s: SourceSet) -> Self {
        s.members
    }
}

impl fmt::Display for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// A lattice node: an antichain of source groups.
///
/// Serializes as nested integer arrays, e.g. `[[1],[2]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Atom {
    groups: Vec<SourceSet>,
}

impl Atom {
    /// Builds a node from groups, verifying the antichain property.
    pub fn new(groups: impl IntoIterator<Item = SourceSet>) -> Result<Self> {
        let mut groups: Vec<SourceSet> = groups.into_iter().collect();
        if groups.is_empty() {
            return Err(PirdError::InvalidParameter {
                name: "atom",
                reason: "must contain at least one group".into(),
            });
        }
        groups.sort_by_key(group_key);
        for i in 0..groups.len() {
            for j in 0..groups.len() {
                if i != j && groups[i].is_subset_of(&groups[j]) {
                    return Err(PirdError::InvalidParameter {
                        name: "atom",
                        reason: format!(
                            "not an antichain: {} is a subset of {}",
                            groups[i], groups[j]
                        ),
                    });
                }
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[SourceSet] {
        &self.groups
    }

    /// Compact text form, e.g. `{1}{2}` for the two-singleton node.
    pub fn label(&self) -> String {
        self.groups.iter().map(|g| g.to_string()).collect()
    }
}

impl TryFrom<Vec<Vec<usize>>> for Atom {
    type Error = PirdError;
    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        let groups = v
            .into_iter()
            .map(SourceSet::new)
            .collect::<Result<Vec<_>>>()?;
        Atom::new(groups)
    }
}

impl From<Atom> for Vec<Vec<usize>> {
    fn from(a: Atom) -> Self {
        a.groups.into_iter().map(Vec::from).collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn group_key(g: &SourceSet) -> (usize, Vec<usize>) {
    (g.len(), g.members().to_vec())
}

/// Precedence `a <= b`: every group of `b` contains some group of `a`.
pub fn precedes(a: &Atom, b: &Atom) -> bool {
    b.groups()
        .iter()
        .all(|bg| a.groups().iter().any(|ag| ag.is_subset_of(bg)))
}

/// The full redundancy lattice for a fixed number of sources.
///
/// Immutable after construction; node order, precedence matrix, strict
/// down-sets, and the topological order used by Moebius inversion are
/// all computed once.
#[derive(Debug, Clone)]
pub struct RedundancyLattice {
    n_sources: usize,
    atoms: Vec<Atom>,
    order: Vec<Vec<bool>>,
    down_sets: Vec<Vec<usize>>,
    topo: Vec<usize>,
    index: HashMap<Atom, usize>,
}

impl RedundancyLattice {
    /// Enumerates all antichains of non-empty subsets of `{1..n_sources}`.
    pub fn enumerate(n_sources: usize) -> Result<Self> {
        Self::enumerate_with_limit(n_sources, DEFAULT_MAX_SOURCES)
    }

    /// As [`enumerate`](Self::enumerate) with an explicit source-count cap.
    pub fn enumerate_with_limit(n_sources: usize, max_sources: usize) -> Result<Self> {
        if n_sources == 0 || n_sources > max_sources {
            return Err(PirdError::SourceCount {
                n: n_sources,
                max: max_sources,
            });
        }
        let full: u32 = (1u32 << n_sources) - 1;
        let mut families: Vec<Vec<u32>> = Vec::new();
        let mut current: Vec<u32> = Vec::new();
        collect_antichains(1, full, &mut current, &mut families);

        let mut atoms: Vec<Atom> = families
            .into_iter()
            .map(|masks| Atom {
                groups: {
                    let mut gs: Vec<SourceSet> =
                        masks.into_iter().map(SourceSet::from_mask).collect();
                    gs.sort_by_key(group_key);
                    gs
                },
            })
            .collect();
        atoms.sort_by_key(atom_key);

        let n = atoms.len();
        let mut order = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                order[i][j] = precedes(&atoms[i], &atoms[j]);
            }
        }
        let down_sets: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && order[j][i]).collect())
            .collect();
        // |down(beta)| < |down(alpha)| whenever beta strictly precedes
        // alpha, so sorting by down-set size is a topological order.
        let mut topo: Vec<usize> = (0..n).collect();
        topo.sort_by_key(|&i| (down_sets[i].len(), i));

        let index = atoms
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();

        Ok(Self {
            n_sources,
            atoms,
            order,
            down_sets,
            topo,
            index,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    /// Nodes in canonical order (bottom first, top last for N <= 2).
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least the full-group node exists
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.index.get(atom).copied()
    }

    /// Precedence by node index.
    pub fn precedes_idx(&self, a: usize, b: usize) -> bool {
        self.order[a][b]
    }

    /// Strict predecessors of node `i`.
    pub fn down_set(&self, i: usize) -> &[usize] {
        &self.down_sets[i]
    }

    /// Index of the all-singletons node.
    pub fn bottom_index(&self) -> usize {
        (0..self.len())
            .find(|&i| self.atoms[i].groups().len() == self.n_sources)
            .expect("bottom node exists")
    }

    /// Index of the single full-group node.
    pub fn top_index(&self) -> usize {
        (0..self.len())
            .find(|&i| {
                self.atoms[i].groups().len() == 1
                    && self.atoms[i].groups()[0].len() == self.n_sources
            })
            .expect("top node exists")
    }

    /// Index of the node `{{i}}` for source `i` (1-based).
    pub fn singleton_index(&self, source: usize) -> Option<usize> {
        let target = Atom::new([SourceSet::new([source]).ok()?]).ok()?;
        self.index_of(&target)
    }

    /// Recovers per-node increments from cumulative values:
    /// `partial[a] = cumulative[a] - sum of partial over strict predecessors`,
    /// evaluated bottom-up.
    pub fn moebius_invert(&self, cumulative: &[f64]) -> Result<Vec<f64>> {
        self.check_len(cumulative.len())?;
        let mut partial = vec![0.0; self.len()];
        for &i in &self.topo {
            let below: f64 = self.down_sets[i].iter().map(|&j| partial[j]).sum();
            partial[i] = cumulative[i] - below;
        }
        Ok(partial)
    }

    /// Inverse of [`moebius_invert`](Self::moebius_invert): sums each node's
    /// increment with those of its strict predecessors.
    pub fn accumulate(&self, partial: &[f64]) -> Result<Vec<f64>> {
        self.check_len(partial.len())?;
        let cumulative = (0..self.len())
            .map(|i| partial[i] + self.down_sets[i].iter().map(|&j| partial[j]).sum::<f64>())
            .collect();
        Ok(cumulative)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(PirdError::IncompleteAtomValues {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Cumulative and per-node rates over a lattice, in node order.
#[derive(Debug, Clone, Serialize)]
pub struct AtomValues {
    pub cumulative: Vec<f64>,
    pub partial: Vec<f64>,
}

impl AtomValues {
    /// Computes the per-node increments for the given cumulative values.
    pub fn from_cumulative(lattice: &RedundancyLattice, cumulative: Vec<f64>) -> Result<Self> {
        let partial = lattice.moebius_invert(&cumulative)?;
        Ok(Self {
            cumulative,
            partial,
        })
    }
}

/// Depth-first antichain generation over group bitmasks in increasing
/// order; `current` stays an antichain at every step.
fn collect_antichains(start: u32, full: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    for mask in start..=full {
        let comparable = current
            .iter()
            .any(|&g| g & mask == g || g & mask == mask);
        if comparable {
            continue;
        }
        current.push(mask);
        out.push(current.clone());
        collect_antichains(mask + 1, full, current, out);
        current.pop();
    }
}

fn atom_key(a: &Atom) -> (std::cmp::Reverse<usize>, Vec<(usize, Vec<usize>)>) {
    (
        std::cmp::Reverse(a.groups().len()),
        a.groups().iter().map(group_key).collect(),
    )
}
