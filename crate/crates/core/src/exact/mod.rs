//! Exact optimal online policy by backward induction.
//!
//! `D_t(S)` is the best expected gain obtainable from elements `t..n` when the
//! selected set so far is `S`; `D_n ≡ 0` and
//! `D_t(S) = E[max(D_{t+1}(S), D_{t+1}(S ∪ u_t) + v_t)]`.
//! The policy accepts `u_t` iff it is feasible, `v_t > 0` and `v_t ≥ D_{t+1}(S) − D_{t+1}(S ∪ u_t)`.

mod enumerate;
mod sat;
mod state;
mod stats;

use std::collections::HashMap;

use num::{Signed, Zero};

use crate::model::{Instance, ModelError};
use crate::rational::Rational;

pub use enumerate::{realization_count, Realizations};
pub use sat::{game_value, s2sat_value};
pub use state::StateView;
pub use stats::{exact_statistics, MgfPoint, SelectionStatistics, SetStatistics, StatisticsRequest};

use state::{StateKey, StateModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactConfig {
    /// Largest number of memoised `(t, state)` values before giving up.
    pub max_states: usize,
    /// Largest number of joint realizations an enumeration may visit.
    pub enumeration_cap: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            max_states: 4_000_000,
            enumeration_cap: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("state budget exceeded: {states} states stored, limit {limit}")]
    StateBudget { states: usize, limit: usize },
    #[error("enumeration cap exceeded: {count} joint realizations, cap {cap}")]
    EnumerationCap { count: u128, cap: u64 },
    #[error("realization inconsistent with the distribution of element {element}")]
    InconsistentRealization { element: usize },
    #[error("state is not valid at timestamp {t}")]
    InvalidState { t: usize },
    #[error("instance is not a left-to-right laminar instance")]
    NotLeftToRight,
    #[error("first element cannot be selected from the empty set")]
    FirstInfeasible,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Acceptance threshold of the optimal policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Threshold {
    Finite(Rational),
    Infinite,
}

impl Threshold {
    /// Ties go to acceptance, except that a zero value is never taken.
    pub fn accepts(&self, value: &Rational) -> bool {
        match self {
            Threshold::Finite(th) => value >= th && value.is_positive(),
            Threshold::Infinite => false,
        }
    }
}

/// State of the optimal policy just before element `t` arrives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolicyState {
    t: usize,
    key: StateKey,
}

impl PolicyState {
    pub fn timestamp(&self) -> usize {
        self.t
    }
}

/// One joint outcome: the atom index realised by each element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub atoms: Vec<usize>,
    pub values: Vec<Rational>,
    pub weight: Rational,
}

impl Realization {
    pub fn from_atoms(instance: &Instance, atoms: Vec<usize>) -> Result<Self, ExactError> {
        if atoms.len() != instance.len() {
            return Err(ExactError::InconsistentRealization {
                element: atoms.len().min(instance.len()),
            });
        }
        let mut values = Vec::with_capacity(atoms.len());
        let mut weight = Rational::from_integer(1.into());
        for (t, &a) in atoms.iter().enumerate() {
            let atom = instance.distributions[t]
                .atoms
                .get(a)
                .ok_or(ExactError::InconsistentRealization { element: t })?;
            values.push(atom.value.clone());
            weight *= &atom.prob;
        }
        Ok(Self {
            atoms,
            values,
            weight,
        })
    }

    /// Looks every value up among the atoms of its element.
    pub fn from_values(instance: &Instance, values: &[Rational]) -> Result<Self, ExactError> {
        let atoms = values
            .iter()
            .enumerate()
            .map(|(t, v)| {
                instance
                    .distributions
                    .get(t)
                    .and_then(|d| d.atom_index(v))
                    .ok_or(ExactError::InconsistentRealization { element: t })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_atoms(instance, atoms)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionTrace {
    pub selected: Vec<usize>,
    pub gain: Rational,
}

/// Lazily memoised value table `D_t(S)` together with the policy it induces.
pub struct ExactSolver {
    instance: Instance,
    model: StateModel,
    config: ExactConfig,
    memo: Vec<HashMap<StateKey, Rational>>,
    stored: usize,
    /// Elements whose every atom is zero never need the "select" branch.
    worthless: Vec<bool>,
}

impl ExactSolver {
    pub fn new(instance: &Instance, config: ExactConfig) -> Self {
        let n = instance.len();
        Self {
            model: StateModel::new(instance),
            worthless: instance
                .distributions
                .iter()
                .map(|d| d.max_value().is_zero())
                .collect(),
            instance: instance.clone(),
            config,
            memo: vec![HashMap::new(); n + 1],
            stored: 0,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// Number of memoised `(t, state)` values computed so far.
    pub fn states_stored(&self) -> usize {
        self.stored
    }

    pub fn initial_state(&self) -> PolicyState {
        PolicyState {
            t: 0,
            key: self.model.initial(),
        }
    }

    fn check(&self, state: &PolicyState) -> Result<(), ExactError> {
        if state.t < self.instance.len() && self.model.well_formed(state.t, &state.key) {
            Ok(())
        } else {
            Err(ExactError::InvalidState { t: state.t })
        }
    }

    pub fn can_select(&self, state: &PolicyState) -> Result<bool, ExactError> {
        self.check(state)?;
        Ok(self.model.can_select(state.t, &state.key))
    }

    /// State before element `t + 1` after deciding on element `t`.
    pub fn advance(&self, state: &PolicyState, select: bool) -> Result<PolicyState, ExactError> {
        self.check(state)?;
        if select && !self.model.can_select(state.t, &state.key) {
            return Err(ExactError::InvalidState { t: state.t });
        }
        Ok(PolicyState {
            t: state.t + 1,
            key: self.model.advance(state.t, &state.key, select),
        })
    }

    pub fn view(&self, state: &PolicyState) -> StateView {
        self.model.view(state.t, &state.key)
    }

    /// `D_t(S)` for the given state.
    pub fn value(&mut self, state: &PolicyState) -> Result<Rational, ExactError> {
        if state.t > self.instance.len() || !(state.t == self.instance.len() || self.model.well_formed(state.t, &state.key)) {
            return Err(ExactError::InvalidState { t: state.t });
        }
        self.value_at(state.t, &state.key)
    }

    pub fn optimal_value(&mut self) -> Result<Rational, ExactError> {
        let init = self.model.initial();
        self.value_at(0, &init)
    }

    fn value_at(&mut self, t: usize, key: &[u32]) -> Result<Rational, ExactError> {
        if t == self.instance.len() {
            return Ok(Rational::zero());
        }
        if let Some(v) = self.memo[t].get(key) {
            return Ok(v.clone());
        }
        let skip_key = self.model.advance(t, key, false);
        let skip = self.value_at(t + 1, &skip_key)?;
        let result = if self.worthless[t] || !self.model.can_select(t, key) {
            skip
        } else {
            let take_key = self.model.advance(t, key, true);
            let take = self.value_at(t + 1, &take_key)?;
            let threshold = &skip - &take;
            let mut acc = Rational::zero();
            for atom in &self.instance.distributions[t].atoms {
                if atom.value >= threshold && atom.value.is_positive() {
                    acc += &atom.prob * (&take + &atom.value);
                } else {
                    acc += &atom.prob * &skip;
                }
            }
            acc
        };
        self.stored += 1;
        if self.stored > self.config.max_states {
            return Err(ExactError::StateBudget {
                states: self.stored,
                limit: self.config.max_states,
            });
        }
        self.memo[t].insert(key.to_vec(), result.clone());
        Ok(result)
    }

    pub fn threshold(&mut self, state: &PolicyState) -> Result<Threshold, ExactError> {
        self.check(state)?;
        self.threshold_at(state.t, &state.key)
    }

    fn threshold_at(&mut self, t: usize, key: &[u32]) -> Result<Threshold, ExactError> {
        if !self.model.can_select(t, key) {
            return Ok(Threshold::Infinite);
        }
        let skip = self.value_at(t + 1, &self.model.advance(t, key, false))?;
        let take = self.value_at(t + 1, &self.model.advance(t, key, true))?;
        Ok(Threshold::Finite(skip - take))
    }

    /// Runs the optimal policy from `start` through the end, reading values from `values`.
    fn run_from(
        &mut self,
        start: usize,
        mut key: StateKey,
        values: &[Rational],
        selected: &mut Vec<usize>,
    ) -> Result<(), ExactError> {
        for (t, v) in values.iter().enumerate().skip(start) {
            let accept = self.threshold_at(t, &key)?.accepts(v);
            if accept {
                selected.push(t);
            }
            key = self.model.advance(t, &key, accept);
        }
        Ok(())
    }

    pub fn replay(&mut self, realization: &Realization) -> Result<SelectionTrace, ExactError> {
        let n = self.instance.len();
        if realization.values.len() != n {
            return Err(ExactError::InconsistentRealization {
                element: realization.values.len().min(n),
            });
        }
        for (t, v) in realization.values.iter().enumerate() {
            if self.instance.distributions[t].atom_index(v).is_none() {
                return Err(ExactError::InconsistentRealization { element: t });
            }
        }
        self.replay_values(&realization.values)
    }

    pub(crate) fn replay_values(&mut self, values: &[Rational]) -> Result<SelectionTrace, ExactError> {
        let mut selected = Vec::new();
        self.run_from(0, self.model.initial(), values, &mut selected)?;
        let gain = selected.iter().map(|&t| &values[t]).sum();
        Ok(SelectionTrace { selected, gain })
    }

    /// Counts of later selections when the policy restarts at element 1 from
    /// `S = ∅` (`mu0`) and from `S = {u_1}` (`mu1`).
    pub fn mu_shift(&mut self, realization: &Realization) -> Result<(usize, usize), ExactError> {
        let lr = self.instance.family().is_some() && self.instance.is_left_to_right()?;
        if !lr {
            return Err(ExactError::NotLeftToRight);
        }
        if self.instance.is_empty() {
            return Ok((0, 0));
        }
        let init = self.model.initial();
        if !self.model.can_select(0, &init) {
            return Err(ExactError::FirstInfeasible);
        }
        let count = |solver: &mut Self, select: bool| -> Result<usize, ExactError> {
            let key = solver.model.advance(0, &init, select);
            let mut selected = Vec::new();
            solver.run_from(1, key, &realization.values, &mut selected)?;
            Ok(selected.len())
        };
        let mu0 = count(self, false)?;
        let mu1 = count(self, true)?;
        Ok((mu0, mu1))
    }
}

/// Convenience wrapper computing `OPT` with the default configuration.
pub fn optimal_value(instance: &Instance) -> Result<Rational, ExactError> {
    ExactSolver::new(instance, ExactConfig::default()).optimal_value()
}

/// Expected gain of the optimal policy computed the slow way: replaying every
/// joint realization and summing weighted gains.
pub fn enumerated_value(instance: &Instance, config: ExactConfig) -> Result<Rational, ExactError> {
    let mut solver = ExactSolver::new(instance, config);
    let mut total = Rational::zero();
    for r in Realizations::new(instance, config.enumeration_cap)? {
        let trace = solver.replay_values(&r.values)?;
        total += &r.weight * &trace.gain;
    }
    debug_assert!(!total.is_negative());
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bin, ValueDistribution};
    use crate::rational::{int, ratio};

    fn rank_one(values: &[i64]) -> Instance {
        Instance::laminar(
            vec![Bin::new((0..values.len()).collect(), 1)],
            values.iter().map(|&v| ValueDistribution::point(int(v))).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_bernoulli_element() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0], 1)],
            vec![ValueDistribution::two_point(int(1), ratio(1, 2)).unwrap()],
        )
        .unwrap();
        assert_eq!(optimal_value(&inst).unwrap(), ratio(1, 2));
    }

    #[test]
    fn rank_one_deterministic_waits_for_larger_value() {
        let inst = rank_one(&[1, 2]);
        let mut s = ExactSolver::new(&inst, ExactConfig::default());
        assert_eq!(s.optimal_value().unwrap(), int(2));
        let init = s.initial_state();
        assert_eq!(s.threshold(&init).unwrap(), Threshold::Finite(int(2)));
        let r = Realization::from_atoms(&inst, vec![0, 0]).unwrap();
        let trace = s.replay(&r).unwrap();
        assert_eq!(trace.selected, vec![1]);
        assert_eq!(trace.gain, int(2));
    }

    #[test]
    fn last_element_thresholds() {
        let inst = rank_one(&[3, 1]);
        let mut s = ExactSolver::new(&inst, ExactConfig::default());
        let init = s.initial_state();
        let full = s.advance(&init, true).unwrap();
        assert_eq!(s.threshold(&full).unwrap(), Threshold::Infinite);
        let empty = s.advance(&init, false).unwrap();
        assert_eq!(s.threshold(&empty).unwrap(), Threshold::Finite(int(0)));
    }

    #[test]
    fn all_zero_values_select_nothing() {
        let inst = rank_one(&[0, 0, 0]);
        let mut s = ExactSolver::new(&inst, ExactConfig::default());
        let trace = s.replay(&Realization::from_atoms(&inst, vec![0, 0, 0]).unwrap()).unwrap();
        assert!(trace.selected.is_empty());
        assert_eq!(trace.gain, int(0));
    }

    #[test]
    fn inconsistent_realization_is_rejected() {
        let inst = rank_one(&[1, 2]);
        let mut s = ExactSolver::new(&inst, ExactConfig::default());
        let bad = Realization {
            atoms: vec![0, 0],
            values: vec![int(5), int(2)],
            weight: int(1),
        };
        assert_eq!(
            s.replay(&bad),
            Err(ExactError::InconsistentRealization { element: 0 })
        );
        assert!(Realization::from_atoms(&inst, vec![0, 3]).is_err());
    }

    #[test]
    fn budget_error_names_state_count() {
        let inst = rank_one(&[1, 2, 3, 4]);
        let config = ExactConfig {
            max_states: 2,
            ..ExactConfig::default()
        };
        match ExactSolver::new(&inst, config).optimal_value() {
            Err(ExactError::StateBudget { states: 3, limit: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn graphic_triangle_takes_two_best_edges() {
        let inst = Instance::graphic(
            3,
            vec![(0, 1), (1, 2), (2, 0)],
            vec![
                ValueDistribution::point(int(1)),
                ValueDistribution::point(int(2)),
                ValueDistribution::point(int(3)),
            ],
        )
        .unwrap();
        assert_eq!(optimal_value(&inst).unwrap(), int(5));
        assert_eq!(enumerated_value(&inst, ExactConfig::default()).unwrap(), int(5));
    }

    #[test]
    fn mu_shift_basic_cases() {
        let free = Instance::laminar(
            vec![Bin::new(vec![0, 1, 2], 3)],
            (0..3).map(|_| ValueDistribution::point(int(1))).collect(),
        )
        .unwrap();
        let mut s = ExactSolver::new(&free, ExactConfig::default());
        let r = Realization::from_atoms(&free, vec![0, 0, 0]).unwrap();
        assert_eq!(s.mu_shift(&r).unwrap(), (2, 2));

        let tight = rank_one(&[1, 1]);
        let mut s = ExactSolver::new(&tight, ExactConfig::default());
        let r = Realization::from_atoms(&tight, vec![0, 0]).unwrap();
        assert_eq!(s.mu_shift(&r).unwrap(), (1, 0));
    }

    #[test]
    fn view_reports_residuals() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1, 2], 2), Bin::new(vec![1, 2], 1)],
            (0..3).map(|_| ValueDistribution::point(int(1))).collect(),
        )
        .unwrap();
        let s = ExactSolver::new(&inst, ExactConfig::default());
        let st = s.advance(&s.initial_state(), true).unwrap();
        assert_eq!(s.view(&st), StateView::Laminar { residual: vec![(0, 1)] });
        let st = s.advance(&st, true).unwrap();
        assert_eq!(
            s.view(&st),
            StateView::Laminar {
                residual: vec![(0, 0), (1, 0)]
            }
        );
    }
}
