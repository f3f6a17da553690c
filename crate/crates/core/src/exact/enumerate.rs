use num::One;

use super::{ExactError, Realization};
use crate::model::Instance;
use crate::rational::Rational;

/// Number of joint realizations of `instance`.
pub fn realization_count(instance: &Instance) -> u128 {
    instance
        .distributions
        .iter()
        .map(|d| d.len() as u128)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .unwrap_or(u128::MAX)
}

/// Odometer over all joint realizations, last element varying fastest.
pub struct Realizations<'a> {
    instance: &'a Instance,
    next: Option<Vec<usize>>,
}

impl<'a> Realizations<'a> {
    pub fn new(instance: &'a Instance, cap: u64) -> Result<Self, ExactError> {
        let count = realization_count(instance);
        if count > cap as u128 {
            return Err(ExactError::EnumerationCap { count, cap });
        }
        Ok(Self {
            instance,
            next: Some(vec![0; instance.len()]),
        })
    }
}

impl Iterator for Realizations<'_> {
    type Item = Realization;

    fn next(&mut self) -> Option<Realization> {
        let atoms = self.next.take()?;
        let mut values = Vec::with_capacity(atoms.len());
        let mut weight = Rational::one();
        for (t, &a) in atoms.iter().enumerate() {
            let atom = &self.instance.distributions[t].atoms[a];
            values.push(atom.value.clone());
            weight *= &atom.prob;
        }
        let mut succ = atoms.clone();
        let mut t = succ.len();
        loop {
            if t == 0 {
                break;
            }
            t -= 1;
            succ[t] += 1;
            if succ[t] < self.instance.distributions[t].len() {
                self.next = Some(succ);
                break;
            }
            succ[t] = 0;
        }
        Some(Realization {
            atoms,
            values,
            weight,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bin, ValueDistribution};
    use crate::rational::{int, ratio};

    #[test]
    fn weights_sum_to_one() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1], 1)],
            vec![
                ValueDistribution::two_point(int(2), ratio(1, 3)).unwrap(),
                ValueDistribution::two_point(int(5), ratio(1, 4)).unwrap(),
            ],
        )
        .unwrap();
        let all: Vec<_> = Realizations::new(&inst, 16).unwrap().collect();
        assert_eq!(all.len(), 4);
        let total: Rational = all.iter().map(|r| r.weight.clone()).sum();
        assert!(total.is_one());
        assert_eq!(all[1].atoms, vec![0, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = Instance::laminar(
            vec![],
            (0..3)
                .map(|_| ValueDistribution::two_point(int(1), ratio(1, 2)).unwrap())
                .collect(),
        )
        .unwrap();
        assert!(matches!(
            Realizations::new(&inst, 7),
            Err(ExactError::EnumerationCap { count: 8, cap: 7 })
        ));
    }

    #[test]
    fn empty_instance_has_one_realization() {
        let inst = Instance::laminar(vec![], vec![]).unwrap();
        assert_eq!(Realizations::new(&inst, 1).unwrap().count(), 1);
    }
}
