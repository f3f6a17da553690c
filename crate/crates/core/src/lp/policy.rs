use num::{Signed, Zero};

use super::{LpError, LpModel, LpSolution, Y_ZERO};
use crate::model::{Atom, Bin, Instance, ValueDistribution};
use crate::preprocess::BinClassification;
use crate::rational::{self, Rational};

const PROB_TOL: f64 = 1e-6;

/// Randomised online policy for one maximal small bin: at layer `j`, state
/// `s` and atom `a` it accepts with probability `𝓧_j(s, a) / 𝓨_j(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPolicy {
    pub bin: usize,
    pub elements: Vec<usize>,
    /// `accept[j][s][a]`.
    pub accept: Vec<Vec<Vec<f64>>>,
    /// `next[j][s] = (state index after skipping, after selecting)`; the
    /// second entry is `None` when selecting would break a capacity.
    pub next: Vec<Vec<(usize, Option<usize>)>>,
    /// Number of states on each layer, including the closing layer.
    pub layer_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub gain: f64,
    pub expected_count: f64,
    /// `Pr[select | atom]` per element of the bin.
    pub marginals: Vec<Vec<f64>>,
}

impl BinPolicy {
    /// Exact forward propagation of the state distribution.
    pub fn evaluate(&self, atoms: &[Vec<(f64, f64)>]) -> PolicyEvaluation {
        let mut dist = vec![1.0];
        let mut gain = 0.0;
        let mut expected_count = 0.0;
        let mut marginals = Vec::with_capacity(self.elements.len());
        for (j, &t) in self.elements.iter().enumerate() {
            let mut out = vec![0.0; self.layer_sizes[j + 1]];
            let mut marg = vec![0.0; atoms[t].len()];
            for (s, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let (skip, take) = self.next[j][s];
                for (a, &(v, p)) in atoms[t].iter().enumerate() {
                    let q = self.accept[j][s][a];
                    marg[a] += mass * q;
                    gain += mass * p * q * v;
                    expected_count += mass * p * q;
                    out[skip] += mass * p * (1.0 - q);
                    if let Some(take) = take {
                        out[take] += mass * p * q;
                    }
                }
            }
            marginals.push(marg);
            dist = out;
        }
        PolicyEvaluation {
            gain,
            expected_count,
            marginals,
        }
    }

    /// Layer index of element `t`, if it belongs to this bin.
    pub fn position(&self, t: usize) -> Option<usize> {
        self.elements.binary_search(&t).ok()
    }
}

/// Per-bin policies for every maximal small bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedPolicy {
    pub bins: Vec<BinPolicy>,
    /// `(policy index, layer)` owning each element.
    pub owner: Vec<(usize, usize)>,
}

pub fn extract_policy(model: &LpModel, solution: &LpSolution) -> Result<ExtractedPolicy, LpError> {
    let n = model.atoms.len();
    let mut owner = vec![(usize::MAX, 0); n];
    let mut bins = Vec::with_capacity(model.blocks.len());
    for (bi, block) in model.blocks.iter().enumerate() {
        let space = &block.space;
        let mut accept = Vec::with_capacity(space.len());
        let mut next = Vec::with_capacity(space.len());
        for (j, &t) in space.elements.iter().enumerate() {
            owner[t] = (bi, j);
            let mut layer_accept = Vec::with_capacity(space.layers[j].len());
            let mut layer_next = Vec::with_capacity(space.layers[j].len());
            for (s, state) in space.layers[j].iter().enumerate() {
                let y = solution.x[block.y[j][s]];
                let after = space.step(j, state);
                let take = space.index(j + 1, &after);
                let probs = block.x[j][s]
                    .iter()
                    .map(|&xv| {
                        if y < Y_ZERO || take.is_none() {
                            return Ok(0.0);
                        }
                        let q = solution.x[xv] / y;
                        if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&q) {
                            return Err(LpError::CorruptSolution { element: t, prob: q });
                        }
                        Ok(q.clamp(0.0, 1.0))
                    })
                    .collect::<Result<Vec<f64>, LpError>>()?;
                let skip = space.index(j + 1, state).expect("skipping keeps the state");
                layer_accept.push(probs);
                layer_next.push((skip, take));
            }
            accept.push(layer_accept);
            next.push(layer_next);
        }
        bins.push(BinPolicy {
            bin: space.bin,
            elements: space.elements.clone(),
            accept,
            next,
            layer_sizes: space.layers.iter().map(Vec::len).collect(),
        });
    }
    Ok(ExtractedPolicy { bins, owner })
}

/// Dual of the block's ex-ante row: the price `λ*` of one expected selection.
pub fn lambda_star(model: &LpModel, solution: &LpSolution, block: usize) -> Result<f64, LpError> {
    let duals = solution.duals.as_ref().ok_or(LpError::NoDuals)?;
    Ok(duals[model.blocks[block].ex_ante_row].max(0.0))
}

/// The restriction of `instance` to the bin of `block`, with every value
/// lowered by `lambda` (clamped at zero, merging atoms that collapse).
pub fn shifted_bin_instance(
    model: &LpModel,
    block: usize,
    instance: &Instance,
    classification: &BinClassification,
    caps: &[u64],
    lambda: &Rational,
) -> Instance {
    let space = &model.blocks[block].space;
    let family_bins = &classification.family.bins;
    let local = |t: usize| space.elements.binary_search(&t).expect("member of the bin");
    let bins = space
        .sub_bins
        .iter()
        .map(|&b| Bin::new(family_bins[b].members.iter().map(|&t| local(t)).collect(), caps[b]))
        .collect();
    let distributions = space
        .elements
        .iter()
        .map(|&t| {
            let mut atoms: Vec<Atom> = Vec::new();
            for a in &instance.distributions[t].atoms {
                let mut v = &a.value - lambda;
                if v.is_negative() {
                    v = Rational::zero();
                }
                match atoms.iter_mut().find(|x| x.value == v) {
                    Some(x) => x.prob += &a.prob,
                    None => atoms.push(Atom::new(v, a.prob.clone())),
                }
            }
            ValueDistribution::new(atoms).expect("shifting keeps a valid distribution")
        })
        .collect();
    Instance::laminar(bins, distributions).expect("restriction of a valid instance")
}

/// `λ` as an exact rational read from its float rendering.
pub fn lambda_rational(lambda: f64) -> Rational {
    rational::from_f64_decimal(lambda).unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{assemble_lp, solve_lp};
    use crate::preprocess::{classify_bins, ClassifyMode, SeparatedInstance};
    use crate::rational::{int, ratio};

    fn pipeline(inst: &Instance, k: u64) -> (LpModel, LpSolution, BinClassification, Vec<u64>) {
        let class = classify_bins(&SeparatedInstance::identity(inst).unwrap(), k, ClassifyMode::Uniform).unwrap();
        let caps: Vec<u64> = class.family.bins.iter().map(|b| b.capacity).collect();
        let model = assemble_lp(inst, &class, &caps, 100_000).unwrap();
        let sol = solve_lp(&model).unwrap();
        (model, sol, class, caps)
    }

    #[test]
    fn extracted_policy_reproduces_block_values() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1, 2, 3], 2), Bin::new(vec![1, 2], 1)],
            vec![
                ValueDistribution::two_point(int(4), ratio(1, 2)).unwrap(),
                ValueDistribution::point(int(3)),
                ValueDistribution::two_point(int(6), ratio(1, 3)).unwrap(),
                ValueDistribution::two_point(int(2), ratio(3, 4)).unwrap(),
            ],
        )
        .unwrap();
        let (model, sol, _, _) = pipeline(&inst, 10);
        let policy = extract_policy(&model, &sol).unwrap();
        let eval = policy.bins[0].evaluate(&model.atoms);
        assert!((eval.gain - sol.block_gain(&model, 0)).abs() < 1e-9);
        assert!((eval.expected_count - sol.block_count(&model, 0)).abs() < 1e-9);
        for (j, marg) in eval.marginals.iter().enumerate() {
            for (a, &m) in marg.iter().enumerate() {
                assert!((m - sol.x[model.blocks[0].marginal[j][a]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_state_mass_means_reject() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1], 1)],
            vec![ValueDistribution::point(int(5)), ValueDistribution::point(int(1))],
        )
        .unwrap();
        let (model, sol, _, _) = pipeline(&inst, 10);
        let policy = extract_policy(&model, &sol).unwrap();
        // Element 0 is always taken, so the full-capacity state at layer 1 has no mass.
        assert_eq!(policy.bins[0].accept[0][0], vec![1.0]);
        let full = model.blocks[0].space.index(1, &[1]).unwrap();
        assert_eq!(sol.x[model.blocks[0].y[1][full]], 0.0);
        assert_eq!(policy.bins[0].accept[1][full], vec![0.0]);
    }

    #[test]
    fn lambda_is_zero_without_pressure_and_positive_when_binding() {
        let free = Instance::laminar(
            vec![Bin::new(vec![0, 1], 1)],
            vec![ValueDistribution::point(int(2)), ValueDistribution::point(int(1))],
        )
        .unwrap();
        let (model, sol, _, _) = pipeline(&free, 10);
        assert_eq!(lambda_star(&model, &sol, 0).unwrap(), 0.0);

        let pressed = Instance::laminar(
            vec![Bin::new(vec![0, 1, 2], 1)],
            [3, 2, 1].iter().map(|&v| ValueDistribution::point(int(v))).collect(),
        )
        .unwrap();
        let (model, sol, class, caps) = pipeline(&pressed, 1);
        assert_eq!(class.big, vec![0]);
        let lambda = lambda_star(&model, &sol, 0).unwrap();
        assert!(lambda > 0.0, "{lambda}");
        let shifted = shifted_bin_instance(&model, 0, &pressed, &class, &caps, &lambda_rational(lambda));
        assert_eq!(shifted.len(), 1);
        assert!(shifted.distributions[0].max_value() <= int(3));
    }
}
