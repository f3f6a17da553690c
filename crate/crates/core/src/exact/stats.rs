use num::Zero;
use serde::Serialize;

use super::{ExactConfig, ExactError, ExactSolver, Realizations};
use crate::model::Instance;
use crate::rational::{self, Rational};

/// Index sets to track and the `α` grid for moment generating functions.
#[derive(Debug, Clone, Default)]
pub struct StatisticsRequest {
    pub sets: Vec<Vec<usize>>,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MgfPoint {
    pub alpha: f64,
    /// `E[e^{α X_B}]`.
    pub value: f64,
    /// `e^{(e^α − 1) E[X_B]}`.
    pub poisson_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetStatistics {
    pub members: Vec<usize>,
    #[serde(with = "rational::serde_string")]
    pub mean: Rational,
    /// `Pr[X_B = k]` for `k = 0..=|B|`.
    #[serde(with = "rational::serde_string_vec")]
    pub count_distribution: Vec<Rational>,
    pub mgf: Vec<MgfPoint>,
}

/// Selection statistics of the optimal policy, exact over all realizations.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionStatistics {
    pub realizations: u64,
    #[serde(with = "rational::serde_string")]
    pub expected_gain: Rational,
    /// `Pr[X_i]`.
    #[serde(with = "rational::serde_string_vec")]
    pub marginals: Vec<Rational>,
    /// `Pr[X_i ∧ X_j]`, row-major `n × n`.
    #[serde(skip)]
    pub joint: Vec<Vec<Rational>>,
    /// `Pr[|OPT| = k]`.
    #[serde(with = "rational::serde_string_vec")]
    pub count_distribution: Vec<Rational>,
    pub sets: Vec<SetStatistics>,
}

impl SelectionStatistics {
    pub fn covariance(&self, i: usize, j: usize) -> Rational {
        &self.joint[i][j] - &self.marginals[i] * &self.marginals[j]
    }

    /// `Cov(Σ_{i∈a} X_i, Σ_{j∈b} X_j)`.
    pub fn set_covariance(&self, a: &[usize], b: &[usize]) -> Rational {
        let mut acc = Rational::zero();
        for &i in a {
            for &j in b {
                acc += self.covariance(i, j);
            }
        }
        acc
    }
}

pub fn exact_statistics(
    instance: &Instance,
    request: &StatisticsRequest,
    config: ExactConfig,
) -> Result<SelectionStatistics, ExactError> {
    let n = instance.len();
    for set in &request.sets {
        if let Some(&bad) = set.iter().find(|&&i| i >= n) {
            return Err(crate::model::ModelError::ElementOutOfRange { element: bad, len: n }.into());
        }
    }
    let mut solver = ExactSolver::new(instance, config);
    let mut marginals = vec![Rational::zero(); n];
    let mut joint = vec![vec![Rational::zero(); n]; n];
    let mut count_distribution = vec![Rational::zero(); n + 1];
    let mut set_counts: Vec<Vec<Rational>> = request
        .sets
        .iter()
        .map(|s| vec![Rational::zero(); s.len() + 1])
        .collect();
    let mut expected_gain = Rational::zero();
    let mut realizations = 0u64;
    let mut chosen = vec![false; n];

    for r in Realizations::new(instance, config.enumeration_cap)? {
        realizations += 1;
        let trace = solver.replay_values(&r.values)?;
        expected_gain += &r.weight * &trace.gain;
        count_distribution[trace.selected.len()] += &r.weight;
        chosen.iter_mut().for_each(|c| *c = false);
        for &i in &trace.selected {
            chosen[i] = true;
            marginals[i] += &r.weight;
            for &j in &trace.selected {
                joint[i][j] += &r.weight;
            }
        }
        for (set, counts) in request.sets.iter().zip(set_counts.iter_mut()) {
            let k = set.iter().filter(|&&i| chosen[i]).count();
            counts[k] += &r.weight;
        }
    }

    let sets = request
        .sets
        .iter()
        .zip(set_counts)
        .map(|(members, dist)| {
            let mean: Rational = members.iter().map(|&i| marginals[i].clone()).sum();
            let mean_f = rational::to_f64(&mean);
            let mgf = request
                .alphas
                .iter()
                .map(|&alpha| MgfPoint {
                    alpha,
                    value: dist
                        .iter()
                        .enumerate()
                        .map(|(k, p)| rational::to_f64(p) * (alpha * k as f64).exp())
                        .sum(),
                    poisson_bound: (alpha.exp_m1() * mean_f).exp(),
                })
                .collect();
            SetStatistics {
                members: members.clone(),
                mean,
                count_distribution: dist,
                mgf,
            }
        })
        .collect();

    Ok(SelectionStatistics {
        realizations,
        expected_gain,
        marginals,
        joint,
        count_distribution,
        sets,
    })
}
