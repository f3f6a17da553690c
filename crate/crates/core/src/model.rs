//! Instances of matroid Bayesian online selection over laminar and graphic
//! ground structures, with validation and independence oracles.
//!
//! Elements are identified by their arrival index `0..n`. Every element owns
//! a finite [`ValueDistribution`]; values are drawn independently.

use std::fmt;

use num::{One, Signed, Zero};
use petgraph::unionfind::UnionFind;

use crate::rational::{self, Rational};

/// One support point of a value distribution.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub value: Rational,
    pub prob: Rational,
}

impl Atom {
    pub fn new(value: Rational, prob: Rational) -> Self {
        Self { value, prob }
    }
}

/// Finite distribution of an element's value. Atoms built through
/// [`ValueDistribution::new`] are sorted by increasing value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueDistribution {
    pub atoms: Vec<Atom>,
}

impl ValueDistribution {
    /// Validates and sorts the atoms by value.
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self, Violation> {
        atoms.sort_by(|a, b| a.value.cmp(&b.value));
        let dist = Self { atoms };
        dist.check(0)?;
        Ok(dist)
    }

    /// Stores the atoms as given; [`validate`] reports any problem later.
    pub fn from_atoms_unchecked(atoms: Vec<Atom>) -> Self {
        Self { atoms }
    }

    /// Deterministic value.
    pub fn point(value: Rational) -> Self {
        Self {
            atoms: vec![Atom::new(value, Rational::one())],
        }
    }

    /// Value `value` with probability `prob`, zero otherwise.
    pub fn two_point(value: Rational, prob: Rational) -> Result<Self, Violation> {
        if prob.is_one() || value.is_zero() {
            return Ok(Self::point(value));
        }
        Self::new(vec![
            Atom::new(Rational::zero(), Rational::one() - &prob),
            Atom::new(value, prob),
        ])
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> Rational {
        self.atoms
            .iter()
            .fold(Rational::zero(), |acc, a| acc + &a.value * &a.prob)
    }

    pub fn max_value(&self) -> Rational {
        self.atoms
            .iter()
            .map(|a| a.value.clone())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn total_mass(&self) -> Rational {
        self.atoms.iter().fold(Rational::zero(), |acc, a| acc + &a.prob)
    }

    /// Index of the atom with the given value.
    pub fn atom_index(&self, value: &Rational) -> Option<usize> {
        self.atoms.iter().position(|a| &a.value == value)
    }

    fn check(&self, element: usize) -> Result<(), Violation> {
        if self.atoms.is_empty() {
            return Err(Violation::EmptyDistribution { element });
        }
        for (atom, a) in self.atoms.iter().enumerate() {
            if !a.prob.is_positive() || a.prob > Rational::one() {
                return Err(Violation::BadProbability {
                    element,
                    atom,
                    prob: a.prob.clone(),
                });
            }
            if a.value.is_negative() {
                return Err(Violation::NegativeValue { element, atom });
            }
            if self.atoms[..atom].iter().any(|b| b.value == a.value) {
                return Err(Violation::DuplicateValue { element, atom });
            }
        }
        let mass = self.total_mass();
        if !mass.is_one() {
            return Err(Violation::MassNotOne { element, mass });
        }
        Ok(())
    }
}

/// A capacity-constrained set of elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bin {
    /// Sorted element indices.
    pub members: Vec<usize>,
    pub capacity: u64,
}

impl Bin {
    /// Sorts the members; duplicates are kept so validation can report them.
    pub fn new(mut members: Vec<usize>, capacity: u64) -> Self {
        members.sort_unstable();
        Self { members, capacity }
    }

    pub fn contains(&self, element: usize) -> bool {
        self.members.binary_search(&element).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &Bin) -> bool {
        self.members.len() <= other.members.len() && self.members.iter().all(|&m| other.contains(m))
    }

    pub fn is_disjoint_from(&self, other: &Bin) -> bool {
        !self.members.iter().any(|&m| other.contains(m))
    }

    pub fn first(&self) -> usize {
        self.members[0]
    }

    pub fn last(&self) -> usize {
        self.members[self.members.len() - 1]
    }
}

/// Laminar family of bins: every two bins are nested or disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaminarFamily {
    pub bins: Vec<Bin>,
}

impl LaminarFamily {
    pub fn new(bins: Vec<Bin>) -> Self {
        Self { bins }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Indices of bins containing `element`.
    pub fn bins_containing(&self, element: usize) -> Vec<usize> {
        (0..self.bins.len())
            .filter(|&b| self.bins[b].contains(element))
            .collect()
    }

    /// `|{B : A ⊆ B}|`, counting `A` itself.
    pub fn depth(&self, bin: usize) -> Result<usize, ModelError> {
        let target = self.bins.get(bin).ok_or(ModelError::BinAbsent { bin })?;
        Ok(self.bins.iter().filter(|b| target.is_subset_of(b)).count())
    }

    /// Maximum bin depth (0 for an empty family).
    pub fn max_depth(&self) -> usize {
        (0..self.bins.len())
            .map(|b| self.depth(b).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Inclusion-wise minimal bin strictly containing `bin`, if any.
    pub fn parent(&self, bin: usize) -> Option<usize> {
        let target = &self.bins[bin];
        (0..self.bins.len())
            .filter(|&b| b != bin && target.is_subset_of(&self.bins[b]))
            .min_by_key(|&b| self.bins[b].len())
    }

    /// `|I ∩ A| ≤ c(A)` for every bin.
    pub fn admits(&self, selected: &[usize]) -> bool {
        self.bins.iter().all(|bin| {
            let used = selected.iter().filter(|&&e| bin.contains(e)).count() as u64;
            used <= bin.capacity
        })
    }
}

/// A graph whose edges are the elements, aligned with arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphicGround {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphicGround {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Self {
        Self {
            vertex_count,
            edges,
        }
    }

    /// True iff the chosen edges form a forest.
    pub fn is_forest(&self, selected: &[usize]) -> bool {
        let mut uf = UnionFind::<usize>::new(self.vertex_count);
        selected.iter().all(|&e| {
            let (a, b) = self.edges[e];
            uf.union(a, b)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ground {
    Laminar(LaminarFamily),
    Graphic(GraphicGround),
}

/// A full selection problem: ground structure plus one distribution per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub ground: Ground,
    pub distributions: Vec<ValueDistribution>,
}

impl Instance {
    /// Builds and validates.
    pub fn new(ground: Ground, distributions: Vec<ValueDistribution>) -> Result<Self, Violation> {
        let instance = Self {
            ground,
            distributions,
        };
        validate(&instance)?;
        Ok(instance)
    }

    pub fn laminar(bins: Vec<Bin>, distributions: Vec<ValueDistribution>) -> Result<Self, Violation> {
        Self::new(Ground::Laminar(LaminarFamily::new(bins)), distributions)
    }

    pub fn graphic(
        vertex_count: usize,
        edges: Vec<(usize, usize)>,
        distributions: Vec<ValueDistribution>,
    ) -> Result<Self, Violation> {
        Self::new(
            Ground::Graphic(GraphicGround::new(vertex_count, edges)),
            distributions,
        )
    }

    pub fn len(&self) -> usize {
        self.distributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distributions.is_empty()
    }

    pub fn family(&self) -> Option<&LaminarFamily> {
        match &self.ground {
            Ground::Laminar(f) => Some(f),
            Ground::Graphic(_) => None,
        }
    }

    pub fn graph(&self) -> Option<&GraphicGround> {
        match &self.ground {
            Ground::Graphic(g) => Some(g),
            Ground::Laminar(_) => None,
        }
    }

    /// Independence oracle: bin counts for laminar, acyclicity for graphic.
    pub fn is_independent(&self, selected: &[usize]) -> Result<bool, ModelError> {
        if let Some(&bad) = selected.iter().find(|&&e| e >= self.len()) {
            return Err(ModelError::ElementOutOfRange {
                element: bad,
                len: self.len(),
            });
        }
        let mut sorted = selected.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Ok(false);
        }
        Ok(match &self.ground {
            Ground::Laminar(f) => f.admits(selected),
            Ground::Graphic(g) => g.is_forest(selected),
        })
    }

    /// Every bin occupies a contiguous block of arrival indices.
    pub fn is_left_to_right(&self) -> Result<bool, ModelError> {
        let family = self.family().ok_or(ModelError::NotLaminar)?;
        Ok(family
            .bins
            .iter()
            .all(|b| b.is_empty() || b.last() - b.first() + 1 == b.len()))
    }

    /// Expected value of accepting everything, an upper bound on any policy.
    pub fn total_mean(&self) -> Rational {
        self.distributions
            .iter()
            .fold(Rational::zero(), |acc, d| acc + d.mean())
    }

    /// Perturbs atom `i` (1-based rank by value) of element `t` (1-based) by
    /// `i·η·2^{−t}`, emulating continuous distributions with unique optimal
    /// policies. Atom order and realization indices are preserved.
    pub fn dispersed(&self, eta: &Rational) -> Instance {
        let mut out = self.clone();
        for (t, dist) in out.distributions.iter_mut().enumerate() {
            let scale = eta * rational::pow(&rational::int(2), -(t as i32 + 1));
            let mut order: Vec<usize> = (0..dist.atoms.len()).collect();
            order.sort_by(|&a, &b| dist.atoms[a].value.cmp(&dist.atoms[b].value));
            for (rank, &a) in order.iter().enumerate() {
                dist.atoms[a].value += &scale * rational::int(rank as i64 + 1);
            }
        }
        out
    }

    /// Copy with every laminar capacity replaced.
    pub fn with_capacities(&self, caps: &[u64]) -> Result<Instance, ModelError> {
        let family = self.family().ok_or(ModelError::NotLaminar)?;
        assert_eq!(caps.len(), family.len(), "one capacity per bin");
        let bins = family
            .bins
            .iter()
            .zip(caps)
            .map(|(b, &c)| Bin {
                members: b.members.clone(),
                capacity: c,
            })
            .collect();
        Ok(Instance {
            ground: Ground::Laminar(LaminarFamily::new(bins)),
            distributions: self.distributions.clone(),
        })
    }
}

/// First broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("element {element}: empty distribution")]
    EmptyDistribution { element: usize },
    #[error("element {element} atom {atom}: probability {} outside (0,1]", rational::format(.prob))]
    BadProbability {
        element: usize,
        atom: usize,
        prob: Rational,
    },
    #[error("element {element} atom {atom}: negative value")]
    NegativeValue { element: usize, atom: usize },
    #[error("element {element} atom {atom}: duplicate value")]
    DuplicateValue { element: usize, atom: usize },
    #[error("element {element}: mass {} (must be 1)", rational::to_f64(.mass))]
    MassNotOne { element: usize, mass: Rational },
    #[error("bin {bin}: no members")]
    EmptyBin { bin: usize },
    #[error("bin {bin}: member {member} out of range")]
    MemberOutOfRange { bin: usize, member: usize },
    #[error("bin {bin}: member {member} listed twice")]
    DuplicateMember { bin: usize, member: usize },
    #[error("crossing bins {first} and {second}")]
    CrossingBins { first: usize, second: usize },
    #[error("bins {first} and {second} have identical members")]
    DuplicateBins { first: usize, second: usize },
    #[error("graph has no vertices")]
    NoVertices,
    #[error("edge {edge}: endpoint out of range")]
    EndpointOutOfRange { edge: usize },
    #[error("edge {edge}: self-loop")]
    SelfLoop { edge: usize },
    #[error("{edges} edges but {elements} distributions")]
    EdgeCountMismatch { edges: usize, elements: usize },
}

/// Errors from queries on a valid instance.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("element {element} out of range (instance has {len})")]
    ElementOutOfRange { element: usize, len: usize },
    #[error("operation requires a laminar ground set")]
    NotLaminar,
    #[error("bin {bin} not in family")]
    BinAbsent { bin: usize },
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.ground {
            Ground::Laminar(fam) => write!(f, "laminar instance: {} elements, {} bins", self.len(), fam.len()),
            Ground::Graphic(g) => write!(
                f,
                "graphic instance: {} vertices, {} edges",
                g.vertex_count,
                g.edges.len()
            ),
        }
    }
}

/// Checks every type invariant, returning the first violation.
pub fn validate(instance: &Instance) -> Result<(), Violation> {
    let n = instance.len();
    for (element, dist) in instance.distributions.iter().enumerate() {
        dist.check(element)?;
    }
    match &instance.ground {
        Ground::Laminar(family) => {
            for (bin, b) in family.bins.iter().enumerate() {
                if b.members.is_empty() {
                    return Err(Violation::EmptyBin { bin });
                }
                if let Some(&member) = b.members.iter().find(|&&m| m >= n) {
                    return Err(Violation::MemberOutOfRange { bin, member });
                }
                if let Some(w) = b.members.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Violation::DuplicateMember { bin, member: w[0] });
                }
            }
            for first in 0..family.len() {
                for second in first + 1..family.len() {
                    let (a, b) = (&family.bins[first], &family.bins[second]);
                    if a.members == b.members {
                        return Err(Violation::DuplicateBins { first, second });
                    }
                    if !(a.is_subset_of(b) || b.is_subset_of(a) || a.is_disjoint_from(b)) {
                        return Err(Violation::CrossingBins { first, second });
                    }
                }
            }
        }
        Ground::Graphic(g) => {
            if g.vertex_count == 0 {
                return Err(Violation::NoVertices);
            }
            if g.edges.len() != n {
                return Err(Violation::EdgeCountMismatch {
                    edges: g.edges.len(),
                    elements: n,
                });
            }
            for (edge, &(a, b)) in g.edges.iter().enumerate() {
                if a >= g.vertex_count || b >= g.vertex_count {
                    return Err(Violation::EndpointOutOfRange { edge });
                }
                if a == b {
                    return Err(Violation::SelfLoop { edge });
                }
            }
        }
    }
    Ok(())
}
