//! Capacity separation, big/small bin classification and big-bin shrinking.

use num::{One, Signed};

use crate::exact::{ExactConfig, ExactError, ExactSolver};
use crate::model::{Bin, Ground, Instance, LaminarFamily, ModelError};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PreprocessError {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    Alpha(String),
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    Epsilon(String),
    #[error("K must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Laminar instance `𝓜'` obtained by dropping bins and lowering capacities so
/// that every kept bin `A ⊂ B` satisfies `c'(A) ≤ ⌈α·c'(B)⌉`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedInstance {
    pub original: Instance,
    pub alpha: Rational,
    /// Indices into the original family, ascending.
    pub kept: Vec<usize>,
    /// `c'` for each entry of `kept`.
    pub caps: Vec<u64>,
}

impl SeparatedInstance {
    /// Keeps every bin at its original capacity.
    pub fn identity(instance: &Instance) -> Result<Self, ModelError> {
        let family = instance.family().ok_or(ModelError::NotLaminar)?;
        Ok(Self {
            original: instance.clone(),
            alpha: Rational::one(),
            kept: (0..family.len()).collect(),
            caps: family.bins.iter().map(|b| b.capacity).collect(),
        })
    }

    pub fn family(&self) -> LaminarFamily {
        let orig = self.original.family().expect("separated instances are laminar");
        LaminarFamily::new(
            self.kept
                .iter()
                .zip(&self.caps)
                .map(|(&b, &c)| Bin::new(orig.bins[b].members.clone(), c))
                .collect(),
        )
    }

    /// `𝓜'` as a standalone instance.
    pub fn instance(&self) -> Instance {
        Instance {
            ground: Ground::Laminar(self.family()),
            distributions: self.original.distributions.clone(),
        }
    }

    /// Structural check of the separation property on every nested kept pair.
    pub fn satisfies_separation(&self) -> bool {
        let family = self.family();
        for (i, a) in family.bins.iter().enumerate() {
            for (j, b) in family.bins.iter().enumerate() {
                if i != j && a.is_subset_of(b) && a.capacity > ceil_mul(&self.alpha, b.capacity) {
                    return false;
                }
            }
        }
        let orig = self.original.family().expect("laminar");
        self.kept
            .iter()
            .zip(&self.caps)
            .all(|(&b, &c)| c <= orig.bins[b].capacity)
    }
}

fn ceil_mul(alpha: &Rational, c: u64) -> u64 {
    rational::ceil_to_u64(&(alpha * Rational::from_integer(c.into())))
}

/// Processes bins by non-increasing cardinality (ties by index). A bin is
/// dropped when its capacity is at least that of the smallest kept bin
/// containing it; otherwise it is kept with `min(c(A), ⌈α·c'(B)⌉)`.
pub fn separate_capacities(instance: &Instance, alpha: &Rational) -> Result<SeparatedInstance, PreprocessError> {
    if !(alpha.is_positive() && *alpha < Rational::one()) {
        return Err(PreprocessError::Alpha(rational::format(alpha)));
    }
    let family = instance.family().ok_or(ModelError::NotLaminar)?;
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&a, &b| family.bins[b].len().cmp(&family.bins[a].len()).then(a.cmp(&b)));

    let mut kept: Vec<(usize, u64)> = Vec::new();
    for a in order {
        let bin = &family.bins[a];
        let parent = kept
            .iter()
            .filter(|(b, _)| bin.is_subset_of(&family.bins[*b]))
            .min_by_key(|(b, _)| family.bins[*b].len());
        match parent {
            None => kept.push((a, bin.capacity)),
            Some(&(_, parent_cap)) => {
                if bin.capacity < parent_cap {
                    kept.push((a, bin.capacity.min(ceil_mul(alpha, parent_cap))));
                }
            }
        }
    }
    kept.sort_unstable();
    Ok(SeparatedInstance {
        original: instance.clone(),
        alpha: alpha.clone(),
        kept: kept.iter().map(|&(b, _)| b).collect(),
        caps: kept.iter().map(|&(_, c)| c).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifyMode {
    /// Big iff `c ≥ K`.
    Uniform,
    /// Big iff `c ≥ ⌈K/δ^{L−d}⌉` at depth `d ≤ L`, and `c ≥ K` below depth `L`,
    /// where `δ = ε²/ln(1/ε)`.
    DepthScaled { depth_limit: usize, epsilon: f64 },
}

/// Bin roles for the LP: exactly encoded small bins and ex-ante big bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinClassification {
    /// Separated family plus singleton bins for elements left outside every small bin.
    pub family: LaminarFamily,
    /// Number of bins of `family` that came from the separated instance.
    pub separated_bins: usize,
    /// Big-bin threshold per bin of `family`.
    pub thresholds: Vec<u64>,
    /// `𝓑`: big bins not nested inside a small bin.
    pub big: Vec<usize>,
    /// `𝓢`: inclusion-wise maximal small bins; they partition the elements.
    pub small_maximal: Vec<usize>,
}

impl BinClassification {
    pub fn is_small(&self, bin: usize) -> bool {
        self.family.bins[bin].capacity < self.thresholds[bin]
    }

    /// Maximal small bins nested in `big`.
    pub fn small_inside(&self, big: usize) -> Vec<usize> {
        let outer = &self.family.bins[big];
        self.small_maximal
            .iter()
            .copied()
            .filter(|&s| self.family.bins[s].is_subset_of(outer))
            .collect()
    }

    /// The maximal small bin holding `element`.
    pub fn owner(&self, element: usize) -> usize {
        *self
            .small_maximal
            .iter()
            .find(|&&s| self.family.bins[s].contains(element))
            .expect("small bins cover every element")
    }
}

fn depth_threshold(k: u64, depth: usize, mode: ClassifyMode) -> u64 {
    match mode {
        ClassifyMode::Uniform => k,
        ClassifyMode::DepthScaled { depth_limit, epsilon } => {
            if depth > depth_limit {
                return k;
            }
            let delta = epsilon * epsilon / (1.0 / epsilon).ln();
            let t = k as f64 / delta.powi((depth_limit - depth) as i32);
            if t >= u64::MAX as f64 {
                u64::MAX
            } else {
                t.ceil() as u64
            }
        }
    }
}

pub fn classify_bins(separated: &SeparatedInstance, k: u64, mode: ClassifyMode) -> Result<BinClassification, PreprocessError> {
    if k == 0 {
        return Err(PreprocessError::ZeroK);
    }
    let mut family = separated.family();
    let separated_bins = family.len();
    let mut thresholds: Vec<u64> = (0..separated_bins)
        .map(|b| Ok(depth_threshold(k, family.depth(b)?, mode)))
        .collect::<Result<_, ModelError>>()?;

    let n = separated.original.len();
    let small = |family: &LaminarFamily, thresholds: &[u64], b: usize| family.bins[b].capacity < thresholds[b];
    for element in 0..n {
        let covered = (0..family.len()).any(|b| small(&family, &thresholds, b) && family.bins[b].contains(element));
        if covered {
            continue;
        }
        match family.bins.iter().position(|b| b.members == [element]) {
            // A big singleton is equivalent to a capacity-1 singleton.
            Some(b) => {
                family.bins[b].capacity = 1;
                thresholds[b] = thresholds[b].max(2);
            }
            None => {
                family.bins.push(Bin::new(vec![element], 1));
                thresholds.push(k.max(2));
            }
        }
    }

    let small_bins: Vec<usize> = (0..family.len()).filter(|&b| small(&family, &thresholds, b)).collect();
    let inside_small = |b: usize| {
        small_bins
            .iter()
            .any(|&s| s != b && family.bins[b].is_subset_of(&family.bins[s]))
    };
    let small_maximal: Vec<usize> = small_bins.iter().copied().filter(|&b| !inside_small(b)).collect();
    let big: Vec<usize> = (0..family.len())
        .filter(|&b| !small(&family, &thresholds, b) && !inside_small(b))
        .collect();
    Ok(BinClassification {
        family,
        separated_bins,
        thresholds,
        big,
        small_maximal,
    })
}

/// `c''`: capacities of `classification.family` with every bin of `𝓑`
/// lowered to `⌊(1−ε)·c'⌋`.
pub fn shrink_big(classification: &BinClassification, epsilon: &Rational) -> Vec<u64> {
    let keep = Rational::one() - epsilon;
    let mut caps: Vec<u64> = classification.family.bins.iter().map(|b| b.capacity).collect();
    for &b in &classification.big {
        caps[b] = rational::floor_to_u64(&(&keep * Rational::from_integer(caps[b].into())));
    }
    caps
}

#[derive(Debug, Clone)]
pub struct QptasResult {
    pub value: Rational,
    pub separated: SeparatedInstance,
    pub states: usize,
}

/// Exact optimum of the instance separated with `α = 1 − ε`.
pub fn qptas_solve(instance: &Instance, epsilon: &Rational, config: ExactConfig) -> Result<QptasResult, PreprocessError> {
    if !(epsilon.is_positive() && *epsilon < Rational::one()) {
        return Err(PreprocessError::Epsilon(rational::format(epsilon)));
    }
    let separated = separate_capacities(instance, &(Rational::one() - epsilon))?;
    let mut solver = ExactSolver::new(&separated.instance(), config);
    let value = solver.optimal_value()?;
    Ok(QptasResult {
        value,
        states: solver.states_stored(),
        separated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ValueDistribution;
    use crate::rational::{int, ratio};

    fn chain(outer: u64, inner: u64) -> Instance {
        Instance::laminar(
            vec![Bin::new(vec![0, 1, 2, 3, 4], outer), Bin::new(vec![0, 1, 2, 3], inner)],
            (1..=5).map(|v| ValueDistribution::point(int(v))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn inner_bin_capacity_is_cut() {
        let sep = separate_capacities(&chain(4, 3), &ratio(1, 2)).unwrap();
        assert_eq!(sep.kept, vec![0, 1]);
        assert_eq!(sep.caps, vec![4, 2]);
        assert!(sep.satisfies_separation());
    }

    #[test]
    fn equal_capacity_inner_bin_is_dropped() {
        let sep = separate_capacities(&chain(4, 4), &ratio(1, 2)).unwrap();
        assert_eq!(sep.kept, vec![0]);
        assert_eq!(sep.caps, vec![4]);
    }

    #[test]
    fn single_bin_unchanged_and_alpha_checked() {
        let inst = Instance::laminar(vec![Bin::new(vec![0], 1)], vec![ValueDistribution::point(int(1))]).unwrap();
        let sep = separate_capacities(&inst, &ratio(1, 3)).unwrap();
        assert_eq!(sep.instance(), inst);
        assert!(separate_capacities(&inst, &int(1)).is_err());
        assert!(separate_capacities(&inst, &int(0)).is_err());
    }

    #[test]
    fn classification_cases() {
        // All small: the outermost bins form 𝓢.
        let sep = SeparatedInstance::identity(&chain(3, 2)).unwrap();
        let c = classify_bins(&sep, 4, ClassifyMode::Uniform).unwrap();
        assert!(c.big.is_empty());
        assert_eq!(c.small_maximal, vec![0]);

        // Boundary c = K is big; every element gets a singleton.
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1], 4)],
            vec![ValueDistribution::point(int(1)), ValueDistribution::point(int(2))],
        )
        .unwrap();
        let c = classify_bins(&SeparatedInstance::identity(&inst).unwrap(), 4, ClassifyMode::Uniform).unwrap();
        assert_eq!(c.big, vec![0]);
        assert_eq!(c.small_maximal, vec![1, 2]);
        assert_eq!(c.family.bins[1], Bin::new(vec![0], 1));

        // Chain (8, 2) with K = 4.
        let c = classify_bins(&SeparatedInstance::identity(&chain(8, 2)).unwrap(), 4, ClassifyMode::Uniform).unwrap();
        assert_eq!(c.big, vec![0]);
        assert_eq!(c.small_maximal, vec![1, 2]);
        assert_eq!(c.family.bins[2].members, vec![4]);
        assert_eq!(c.owner(4), 2);
        assert_eq!(c.small_inside(0), vec![1, 2]);
    }

    #[test]
    fn depth_scaled_thresholds_grow_near_the_root() {
        let mode = ClassifyMode::DepthScaled {
            depth_limit: 2,
            epsilon: 0.5,
        };
        let delta: f64 = 0.25 / 2f64.ln();
        assert_eq!(depth_threshold(16, 1, mode), (16.0 / delta).ceil() as u64);
        assert_eq!(depth_threshold(16, 2, mode), 16);
        assert_eq!(depth_threshold(16, 5, mode), 16);
    }

    #[test]
    fn shrink_only_touches_big_bins() {
        let c = classify_bins(&SeparatedInstance::identity(&chain(10, 3)).unwrap(), 4, ClassifyMode::Uniform).unwrap();
        let caps = shrink_big(&c, &ratio(1, 5));
        assert_eq!(caps[0], 8);
        assert_eq!(caps[1], 3);

        let c = classify_bins(&SeparatedInstance::identity(&chain(16, 3)).unwrap(), 16, ClassifyMode::Uniform).unwrap();
        assert_eq!(shrink_big(&c, &ratio(1, 2))[0], 8);
    }

    #[test]
    fn qptas_matches_reference_cases() {
        let inst = chain(4, 4);
        let res = qptas_solve(&inst, &ratio(1, 2), ExactConfig::default()).unwrap();
        let dropped = Instance::laminar(
            vec![Bin::new(vec![0, 1, 2, 3, 4], 4)],
            inst.distributions.clone(),
        )
        .unwrap();
        assert_eq!(res.value, crate::exact::optimal_value(&dropped).unwrap());

        let inst = chain(4, 3);
        let res = qptas_solve(&inst, &ratio(1, 100), ExactConfig::default()).unwrap();
        assert_eq!(res.value, crate::exact::optimal_value(&inst).unwrap());
    }
}
