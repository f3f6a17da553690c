use std::collections::BTreeSet;

use crate::model::LaminarFamily;

/// Residual-capacity states of one maximal small bin, layer by layer.
///
/// Layer `j` holds the states possible just before the `j`-th element of the
/// bin arrives; layer `m` (one past the last element) closes the bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    /// Index of the bin in the classification family.
    pub bin: usize,
    /// Sorted members of the bin.
    pub elements: Vec<usize>,
    /// Bins nested in (or equal to) the bin.
    pub sub_bins: Vec<usize>,
    /// Initial residuals, one per entry of `sub_bins`.
    pub initial: Vec<i64>,
    /// `d_t` for each element of the bin.
    pub directions: Vec<Vec<i64>>,
    /// Feasible states per layer, sorted.
    pub layers: Vec<Vec<Vec<i64>>>,
    /// Forbidden neighbours per layer: infeasible states one selection away
    /// from a feasible state of the previous layer. Layer 0 is empty.
    pub boundary: Vec<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("state space of bin {bin} exceeds {cap} states")]
pub struct StateCapError {
    pub bin: usize,
    pub cap: usize,
}

impl StateSpace {
    /// Distinct feasible states over all layers.
    pub fn states(&self) -> BTreeSet<Vec<i64>> {
        self.layers.iter().flatten().cloned().collect()
    }

    pub fn boundary_states(&self) -> BTreeSet<Vec<i64>> {
        self.boundary.iter().flatten().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn step(&self, j: usize, state: &[i64]) -> Vec<i64> {
        state.iter().zip(&self.directions[j]).map(|(s, d)| s - d).collect()
    }

    pub fn index(&self, j: usize, state: &[i64]) -> Option<usize> {
        self.layers[j].binary_search_by(|s| s.as_slice().cmp(state)).ok()
    }

    pub fn total_states(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }
}

/// Layered closure of the initial state under the decrement vectors, using
/// capacities `caps` for the bins of `family`.
pub fn build_state_space(
    family: &LaminarFamily,
    caps: &[u64],
    bin: usize,
    max_states: usize,
) -> Result<StateSpace, StateCapError> {
    let outer = &family.bins[bin];
    let elements = outer.members.clone();
    let sub_bins: Vec<usize> = (0..family.len())
        .filter(|&b| family.bins[b].is_subset_of(outer))
        .collect();
    let initial: Vec<i64> = sub_bins.iter().map(|&b| caps[b] as i64).collect();
    let directions: Vec<Vec<i64>> = elements
        .iter()
        .map(|&e| {
            sub_bins
                .iter()
                .map(|&b| family.bins[b].contains(e) as i64)
                .collect()
        })
        .collect();

    let m = elements.len();
    let mut layers = vec![vec![initial.clone()]];
    let mut boundary = vec![Vec::new()];
    let mut total = 1;
    for j in 0..m {
        let mut next: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut forbidden: BTreeSet<Vec<i64>> = BTreeSet::new();
        for s in &layers[j] {
            next.insert(s.clone());
            let t: Vec<i64> = s.iter().zip(&directions[j]).map(|(a, d)| a - d).collect();
            if t.iter().all(|&r| r >= 0) {
                next.insert(t);
            } else {
                forbidden.insert(t);
            }
        }
        total += next.len();
        if total > max_states {
            return Err(StateCapError { bin, cap: max_states });
        }
        layers.push(next.into_iter().collect());
        boundary.push(forbidden.into_iter().collect());
    }
    Ok(StateSpace {
        bin,
        elements,
        sub_bins,
        initial,
        directions,
        layers,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Bin;

    fn family(bins: Vec<(Vec<usize>, u64)>) -> (LaminarFamily, Vec<u64>) {
        let caps = bins.iter().map(|b| b.1).collect();
        (
            LaminarFamily::new(bins.into_iter().map(|(m, c)| Bin::new(m, c)).collect()),
            caps,
        )
    }

    #[test]
    fn single_element_bin() {
        let (f, caps) = family(vec![(vec![0], 1)]);
        let sp = build_state_space(&f, &caps, 0, 100).unwrap();
        assert_eq!(sp.states().into_iter().collect::<Vec<_>>(), vec![vec![0], vec![1]]);
        assert!(sp.boundary_states().is_empty());
    }

    #[test]
    fn two_elements_rank_one() {
        let (f, caps) = family(vec![(vec![0, 1], 1)]);
        let sp = build_state_space(&f, &caps, 0, 100).unwrap();
        assert_eq!(sp.states().into_iter().collect::<Vec<_>>(), vec![vec![0], vec![1]]);
        assert_eq!(sp.boundary_states().into_iter().collect::<Vec<_>>(), vec![vec![-1]]);
    }

    #[test]
    fn nested_caps_two_one() {
        // Outer {0,1,2} cap 2, inner {1,2} cap 1.
        let (f, caps) = family(vec![(vec![0, 1, 2], 2), (vec![1, 2], 1)]);
        let sp = build_state_space(&f, &caps, 0, 100).unwrap();
        let states: Vec<Vec<i64>> = sp.states().into_iter().collect();
        assert_eq!(states, vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![2, 1]]);
        let boundary: Vec<Vec<i64>> = sp.boundary_states().into_iter().collect();
        assert_eq!(boundary, vec![vec![-1, -1], vec![0, -1]]);
        assert_eq!(sp.layers[1], vec![vec![1, 1], vec![2, 1]]);
    }

    #[test]
    fn state_cap_reported() {
        let (f, caps) = family(vec![(vec![0, 1, 2, 3], 3)]);
        assert_eq!(
            build_state_space(&f, &caps, 0, 3),
            Err(StateCapError { bin: 0, cap: 3 })
        );
    }
}
