use num::One;

use crate::model::{Bin, Instance, ValueDistribution};
use crate::rational::{int, pow, ratio, Rational};

/// Laminar instance of rank `r` whose optimal policy selects either nothing
/// or `r` elements, each with probability close to one half. Larger `k`
/// sharpens the split.
pub fn produce_anticoncentration(r: u32, k: u32) -> Instance {
    assert!(r >= 1 && k >= 1, "r and k must be positive");
    let ten = int(10);
    let k = k as i32;
    let v = pow(&ten, 1 + 2 * k);
    let v_prime = pow(&ten, k);
    let p = pow(&ten, -1 - k);
    let r_sq = int((r as i64 + 1).pow(2));

    let mut dists = vec![ValueDistribution::two_point(int(1), ratio(1, 2)).expect("valid")];
    // (members, capacity); the last entry is always U_{i-1}.
    let mut bins: Vec<(Vec<usize>, u64)> = vec![(vec![0], 1)];
    let mut delta = Rational::one();
    let mut n_prev = 1usize;

    for i in 2..=r as usize {
        let alpha = &delta / (int(10) * &r_sq) / &v;
        let n_i = n_prev + i + 2;
        let u_prev = bins.pop().expect("U_{i-1} present").0;
        // 0-based positions of u_{n_{i-1}+1} and u_{n_{i-1}+i+2}, u_{n_{i-1}+i+1}.
        let first = n_prev;
        let last = n_prev + i + 1;
        let second_last = n_prev + i;
        let mut extended = u_prev;
        extended.push(second_last);
        bins.push((extended, i as u64 - 1));
        bins.push((vec![first, last], 1));
        bins.push(((0..n_i).collect(), i as u64));

        delta = &alpha * &v * pow(&p, i as i32) * (Rational::one() - &p);
        dists.push(ValueDistribution::point(&alpha * &v_prime + &delta / int(2)));
        for _ in n_prev + 1..second_last {
            dists.push(ValueDistribution::two_point(&alpha * &v_prime, p.clone()).expect("valid"));
        }
        for _ in 0..2 {
            dists.push(ValueDistribution::two_point(&alpha * &v, p.clone()).expect("valid"));
        }
        n_prev = n_i;
    }
    let bins = bins.into_iter().map(|(m, c)| Bin::new(m, c)).collect();
    Instance::laminar(bins, dists).expect("construction is laminar")
}

/// `n_r = 1 + Σ_{i=2}^{r} (i + 2)`.
pub fn anticoncentration_size(r: u32) -> usize {
    1 + (2..=r as usize).map(|i| i + 2).sum::<usize>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::optimal_value;

    #[test]
    fn rank_one_is_a_coin() {
        let inst = produce_anticoncentration(1, 3);
        assert_eq!(inst.len(), 1);
        assert_eq!(inst.family().unwrap().bins, vec![Bin::new(vec![0], 1)]);
        assert_eq!(optimal_value(&inst).unwrap(), ratio(1, 2));
    }

    #[test]
    fn rank_two_layout() {
        let inst = produce_anticoncentration(2, 3);
        assert_eq!(inst.len(), 5);
        let bins = &inst.family().unwrap().bins;
        assert_eq!(bins.len(), 3);
        assert!(bins.contains(&Bin::new(vec![0, 3], 1)));
        assert!(bins.contains(&Bin::new(vec![1, 4], 1)));
        assert!(bins.contains(&Bin::new(vec![0, 1, 2, 3, 4], 2)));
        // w_1 is deterministic; the rest are rare.
        assert_eq!(inst.distributions[1].atoms.len(), 1);
        assert_eq!(inst.distributions[2].atoms[1].prob, pow(&int(10), -4));
        assert_eq!(inst.distributions[3].atoms[1].value, inst.distributions[4].atoms[1].value);
    }

    #[test]
    fn sizes_stay_within_square() {
        for r in 1..8 {
            let n = anticoncentration_size(r);
            assert_eq!(produce_anticoncentration(r, 1).len(), n);
            assert!(n <= ((r + 1) * (r + 1)) as usize);
        }
    }
}
