use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Atom, Bin, Instance, ValueDistribution};
use crate::rational::{int, ratio, Rational};

/// Parameters of [`random_left_to_right`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomParams {
    pub n: usize,
    pub max_depth: usize,
    pub max_cap: u64,
    pub atoms_per_element: usize,
    /// Values are multiples of `1/value_den` up to `max_value`.
    pub max_value: i64,
    pub value_den: i64,
}

impl RandomParams {
    pub fn new(n: usize, max_depth: usize, max_cap: u64, atoms_per_element: usize) -> Self {
        Self {
            n,
            max_depth,
            max_cap,
            atoms_per_element,
            max_value: 10,
            value_den: 2,
        }
    }
}

/// Splits `lo..hi` into at least two contiguous blocks, or returns it whole
/// when it has one element.
fn split(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Vec<(usize, usize)> {
    let len = hi - lo;
    if len <= 1 {
        return vec![(lo, hi)];
    }
    let mut cuts: Vec<usize> = (lo + 1..hi).filter(|_| rng.random_bool(0.4)).collect();
    if cuts.is_empty() {
        cuts.push(rng.random_range(lo + 1..hi));
    }
    let mut out = Vec::new();
    let mut start = lo;
    for c in cuts.into_iter().chain(std::iter::once(hi)) {
        out.push((start, c));
        start = c;
    }
    out
}

fn nest(rng: &mut ChaCha8Rng, lo: usize, hi: usize, depth: usize, max_cap: u64, bins: &mut Vec<Bin>) {
    if depth == 0 {
        return;
    }
    for (a, b) in split(rng, lo, hi) {
        let whole = a == lo && b == hi;
        if !whole {
            bins.push(Bin::new((a..b).collect(), rng.random_range(1..=max_cap)));
        }
        if b - a > 1 && rng.random_bool(0.7) {
            nest(rng, a, b, depth - 1, max_cap, bins);
        }
    }
}

/// Random distribution with between two and `atoms` distinct atoms.
pub fn random_distribution(rng: &mut ChaCha8Rng, atoms: usize, max_value: i64, den: i64) -> ValueDistribution {
    let count = if atoms <= 1 { 1 } else { rng.random_range(2..=atoms) };
    let mut values: Vec<i64> = (0..=max_value * den).collect();
    values.shuffle(rng);
    values.truncate(count);
    let weights: Vec<i64> = (0..count).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    ValueDistribution::new(
        values
            .into_iter()
            .zip(weights)
            .map(|(v, w)| Atom::new(ratio(v, den), ratio(w, total)))
            .collect(),
    )
    .expect("distinct values and positive weights")
}

/// Left-to-right laminar instance built by recursive interval splitting.
/// With `max_depth = 1` the bins partition the ground set.
pub fn random_left_to_right(params: RandomParams, seed: u64) -> Instance {
    assert!(params.n >= 1 && params.max_depth >= 1 && params.max_cap >= 1 && params.atoms_per_element >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bins = Vec::new();
    if params.max_depth > 1 && rng.random_bool(0.5) {
        bins.push(Bin::new((0..params.n).collect(), rng.random_range(1..=params.max_cap)));
        nest(&mut rng, 0, params.n, params.max_depth - 1, params.max_cap, &mut bins);
    } else {
        nest(&mut rng, 0, params.n, params.max_depth, params.max_cap, &mut bins);
    }
    if bins.is_empty() {
        bins.push(Bin::new((0..params.n).collect(), rng.random_range(1..=params.max_cap)));
    }
    let dists = (0..params.n)
        .map(|_| random_distribution(&mut rng, params.atoms_per_element, params.max_value, params.value_den))
        .collect();
    Instance::laminar(bins, dists).expect("interval splitting is laminar")
}

/// Left-to-right instance whose root bin spans every element, so with a
/// large enough `K` it is the only maximal small bin.
pub fn random_rooted(params: RandomParams, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bins = vec![Bin::new((0..params.n).collect(), rng.random_range(1..=params.max_cap))];
    if params.max_depth > 1 {
        nest(&mut rng, 0, params.n, params.max_depth - 1, params.max_cap, &mut bins);
    }
    let dists = (0..params.n)
        .map(|_| random_distribution(&mut rng, params.atoms_per_element, params.max_value, params.value_den))
        .collect();
    Instance::laminar(bins, dists).expect("interval splitting is laminar")
}

/// Random laminar instance with a shuffled arrival order, so bins are
/// generally not contiguous.
pub fn random_laminar(params: RandomParams, seed: u64) -> Instance {
    let base = random_left_to_right(params, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut perm: Vec<usize> = (0..params.n).collect();
    perm.shuffle(&mut rng);
    let family = base.family().expect("laminar");
    let bins = family
        .bins
        .iter()
        .map(|b| Bin::new(b.members.iter().map(|&e| perm[e]).collect(), b.capacity))
        .collect();
    let mut dists = base.distributions.clone();
    for (e, d) in base.distributions.into_iter().enumerate() {
        dists[perm[e]] = d;
    }
    Instance::laminar(bins, dists).expect("relabelling keeps laminarity")
}

/// Random multigraph instance without self-loops.
pub fn random_graphic(edges: usize, vertices: usize, atoms: usize, seed: u64) -> Instance {
    assert!(vertices >= 2 && edges >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let list = (0..edges)
        .map(|_| {
            let a = rng.random_range(0..vertices);
            let mut b = rng.random_range(0..vertices - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect();
    let dists = (0..edges).map(|_| random_distribution(&mut rng, atoms, 10, 2)).collect();
    Instance::graphic(vertices, list, dists).expect("no self-loops")
}

/// All vertex pairs of the complete graph in a seeded random order.
pub fn shuffled_pairs(vertices: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..vertices)
        .flat_map(|a| (a + 1..vertices).map(move |b| (a, b)))
        .collect();
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    pairs
}

/// Two-point distribution `value` w.p. `prob`, as used by search grids.
pub fn two_point(value: i64, prob: Rational) -> ValueDistribution {
    ValueDistribution::two_point(int(value), prob).expect("valid two-point")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn depth_one_is_a_partition() {
        for seed in 0..50 {
            let inst = random_left_to_right(RandomParams::new(7, 1, 3, 2), seed);
            let bins = &inst.family().unwrap().bins;
            let mut covered: Vec<usize> = bins.iter().flat_map(|b| b.members.clone()).collect();
            covered.sort_unstable();
            assert_eq!(covered, (0..7).collect::<Vec<_>>(), "seed {seed}");
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let p = RandomParams::new(8, 3, 3, 3);
        assert_eq!(random_left_to_right(p, 42), random_left_to_right(p, 42));
        assert_eq!(random_graphic(6, 4, 2, 9), random_graphic(6, 4, 2, 9));
    }

    #[test]
    fn outputs_are_valid_and_left_to_right() {
        for seed in 0..1000 {
            let n = 1 + (seed as usize % 10);
            let inst = random_left_to_right(RandomParams::new(n, 1 + seed as usize % 4, 4, 3), seed);
            validate(&inst).unwrap();
            assert!(inst.is_left_to_right().unwrap(), "seed {seed}");
        }
    }

    #[test]
    fn rooted_has_spanning_bin() {
        for seed in 0..100 {
            let inst = random_rooted(RandomParams::new(5, 3, 3, 2), seed);
            assert!(inst.family().unwrap().bins.iter().any(|b| b.len() == 5));
            assert!(inst.is_left_to_right().unwrap());
        }
    }

    #[test]
    fn shuffled_laminar_is_valid() {
        for seed in 0..100 {
            validate(&random_laminar(RandomParams::new(6, 3, 3, 2), seed)).unwrap();
        }
    }
}
