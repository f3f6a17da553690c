//! The linear relaxation over per-bin state polytopes with ex-ante big-bin rows.

mod export;
mod policy;
pub mod simplex;
mod space;

use crate::model::Instance;
use crate::preprocess::BinClassification;
use crate::rational;

pub use export::to_lp_format;
pub use policy::{extract_policy, lambda_rational, lambda_star, shifted_bin_instance, BinPolicy, ExtractedPolicy, PolicyEvaluation};
pub use simplex::{LinearProgram, Row, Sense, SimplexError, SimplexSolution};
pub use space::{build_state_space, StateCapError, StateSpace};

/// Feasibility tolerance for primal solutions.
pub const PRIMAL_TOL: f64 = 1e-9;
/// `𝓨` values below this are treated as zero before dividing.
pub const Y_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error(transparent)]
    StateCap(#[from] StateCapError),
    #[error("solver failed on a model that is always feasible and bounded: {0}")]
    Internal(#[from] SimplexError),
    #[error("solution violates a row by {0:e}")]
    Infeasible(f64),
    #[error("acceptance probability {prob} at element {element} is outside [0, 1]")]
    CorruptSolution { element: usize, prob: f64 },
    #[error("dual values were not computed")]
    NoDuals,
}

/// Variable indices of one maximal small bin's block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub space: StateSpace,
    /// `y[j][s]` is `𝓨` at layer `j` for state `space.layers[j][s]`.
    pub y: Vec<Vec<usize>>,
    /// `y_boundary[j][f]` for `space.boundary[j][f]`.
    pub y_boundary: Vec<Vec<usize>>,
    /// `x[j][s][a]` is `𝓧` for element `j` of the bin, state `s`, atom `a`.
    pub x: Vec<Vec<Vec<usize>>>,
    /// `marginal[j][a]` is `𝓧_t(v)`.
    pub marginal: Vec<Vec<usize>>,
    pub n_var: usize,
    pub slack_var: usize,
    pub ex_ante_row: usize,
}

/// The assembled program and its index maps.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub program: LinearProgram,
    pub blocks: Vec<Block>,
    /// `(big bin, row)` for each ex-ante big-bin row.
    pub big_rows: Vec<(usize, usize)>,
    /// `(value, prob)` per element and atom, as floats.
    pub atoms: Vec<Vec<(f64, f64)>>,
}

impl LpModel {
    pub fn num_rows(&self) -> usize {
        self.program.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.program.num_vars()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    /// Expected selections inside a block, `Σ E[𝓧_t(v_t)]`.
    pub fn block_count(&self, model: &LpModel, block: usize) -> f64 {
        let b = &model.blocks[block];
        b.space
            .elements
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                b.marginal[j]
                    .iter()
                    .zip(&model.atoms[t])
                    .map(|(&var, &(_, p))| p * self.x[var])
                    .sum::<f64>()
            })
            .sum()
    }

    /// Block objective `Σ E[v_t·𝓧_t(v_t)]`.
    pub fn block_gain(&self, model: &LpModel, block: usize) -> f64 {
        let b = &model.blocks[block];
        b.space
            .elements
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                b.marginal[j]
                    .iter()
                    .zip(&model.atoms[t])
                    .map(|(&var, &(v, p))| v * p * self.x[var])
                    .sum::<f64>()
            })
            .sum()
    }
}

fn state_label(s: &[i64]) -> String {
    s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_").replace('-', "m")
}

/// Builds the program for `instance` (whose distributions are used) with bin
/// roles from `classification` and capacities `caps` (one per classification bin).
pub fn assemble_lp(
    instance: &Instance,
    classification: &BinClassification,
    caps: &[u64],
    max_states: usize,
) -> Result<LpModel, LpError> {
    let atoms: Vec<Vec<(f64, f64)>> = instance
        .distributions
        .iter()
        .map(|d| {
            d.atoms
                .iter()
                .map(|a| (rational::to_f64(&a.value), rational::to_f64(&a.prob)))
                .collect()
        })
        .collect();
    let mut lp = LinearProgram::default();
    let mut blocks = Vec::with_capacity(classification.small_maximal.len());

    for &bin in &classification.small_maximal {
        let space = build_state_space(&classification.family, caps, bin, max_states)?;
        let m = space.len();
        let mut y = Vec::with_capacity(m + 1);
        let mut y_boundary = Vec::with_capacity(m + 1);
        let mut x = Vec::with_capacity(m);
        let mut marginal = Vec::with_capacity(m);
        for j in 0..=m {
            y.push(
                space.layers[j]
                    .iter()
                    .map(|s| lp.add_var(format!("Y_b{bin}_j{j}_s{}", state_label(s)), 0.0))
                    .collect::<Vec<_>>(),
            );
            y_boundary.push(
                space.boundary[j]
                    .iter()
                    .map(|s| lp.add_var(format!("Yf_b{bin}_j{j}_s{}", state_label(s)), 0.0))
                    .collect::<Vec<_>>(),
            );
            if j < m {
                let t = space.elements[j];
                x.push(
                    space.layers[j]
                        .iter()
                        .map(|s| {
                            (0..atoms[t].len())
                                .map(|a| lp.add_var(format!("X_b{bin}_t{t}_s{}_a{a}", state_label(s)), 0.0))
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>(),
                );
                marginal.push(
                    atoms[t]
                        .iter()
                        .enumerate()
                        .map(|(a, &(v, p))| lp.add_var(format!("Xm_b{bin}_t{t}_a{a}"), v * p))
                        .collect::<Vec<_>>(),
                );
            }
        }
        let n_var = lp.add_var(format!("N_b{bin}"), 0.0);
        let slack_var = lp.add_var(format!("Ns_b{bin}"), 0.0);

        // Initial state carries all probability mass.
        lp.add_row(format!("init_b{bin}"), vec![(y[0][0], 1.0)], Sense::Eq, 1.0);
        for j in 0..m {
            let t = space.elements[j];
            for (a, &mv) in marginal[j].iter().enumerate() {
                let mut coeffs = vec![(mv, 1.0)];
                coeffs.extend(x[j].iter().map(|xs| (xs[a], -1.0)));
                lp.add_row(format!("marg_b{bin}_t{t}_a{a}"), coeffs, Sense::Eq, 0.0);
            }
            for (s, xs) in x[j].iter().enumerate() {
                for (a, &xv) in xs.iter().enumerate() {
                    lp.add_row(
                        format!("cap_b{bin}_t{t}_s{}_a{a}", state_label(&space.layers[j][s])),
                        vec![(xv, 1.0), (y[j][s], -1.0)],
                        Sense::Le,
                        0.0,
                    );
                }
            }
            // Y_{j+1}(s) − Y_j(s) + E[X_j(s)] − E[X_j(s + d)] = 0, for feasible and forbidden s.
            let targets = space.layers[j + 1]
                .iter()
                .zip(&y[j + 1])
                .chain(space.boundary[j + 1].iter().zip(&y_boundary[j + 1]));
            for (s, &yv) in targets {
                let mut coeffs = vec![(yv, 1.0)];
                if let Some(i) = space.index(j, s) {
                    coeffs.push((y[j][i], -1.0));
                    for (a, &(_, p)) in atoms[t].iter().enumerate() {
                        coeffs.push((x[j][i][a], p));
                    }
                }
                let before: Vec<i64> = s.iter().zip(&space.directions[j]).map(|(v, d)| v + d).collect();
                if let Some(i) = space.index(j, &before) {
                    for (a, &(_, p)) in atoms[t].iter().enumerate() {
                        coeffs.push((x[j][i][a], -p));
                    }
                }
                lp.add_row(format!("flow_b{bin}_j{}_s{}", j + 1, state_label(s)), coeffs, Sense::Eq, 0.0);
            }
        }
        for (j, fs) in y_boundary.iter().enumerate() {
            for (f, &yv) in fs.iter().enumerate() {
                lp.add_row(
                    format!("bnd_b{bin}_j{j}_s{}", state_label(&space.boundary[j][f])),
                    vec![(yv, 1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
        // Σ E[X_t(v)] + slack − N = 0.
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (j, &t) in space.elements.iter().enumerate() {
            for (a, &(_, p)) in atoms[t].iter().enumerate() {
                coeffs.push((marginal[j][a], p));
            }
        }
        coeffs.push((slack_var, 1.0));
        coeffs.push((n_var, -1.0));
        let ex_ante_row = lp.add_row(format!("exante_b{bin}"), coeffs, Sense::Eq, 0.0);
        lp.add_row(format!("nmax_b{bin}"), vec![(n_var, 1.0)], Sense::Le, m as f64);

        blocks.push(Block {
            space,
            y,
            y_boundary,
            x,
            marginal,
            n_var,
            slack_var,
            ex_ante_row,
        });
    }

    let mut big_rows = Vec::new();
    for &big in &classification.big {
        let coeffs: Vec<(usize, f64)> = classification
            .small_maximal
            .iter()
            .zip(&blocks)
            .filter(|(&s, _)| classification.family.bins[s].is_subset_of(&classification.family.bins[big]))
            .map(|(_, b)| (b.n_var, 1.0))
            .collect();
        let row = lp.add_row(format!("big_b{big}"), coeffs, Sense::Le, caps[big] as f64);
        big_rows.push((big, row));
    }

    Ok(LpModel {
        program: lp,
        blocks,
        big_rows,
        atoms,
    })
}

pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    let sol = simplex::solve(&model.program)?;
    let mut x = sol.x;
    for v in x.iter_mut() {
        if v.abs() < 1e-13 {
            *v = 0.0;
        }
    }
    let violation = model.program.max_violation(&x);
    if violation > PRIMAL_TOL {
        return Err(LpError::Infeasible(violation));
    }
    Ok(LpSolution {
        objective: model.program.objective_at(&x),
        x,
        duals: Some(sol.duals),
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bin, ValueDistribution};
    use crate::preprocess::{classify_bins, ClassifyMode, SeparatedInstance};
    use crate::rational::{int, ratio};

    pub(crate) fn solve_all_small(inst: &Instance) -> (LpModel, LpSolution) {
        let sep = SeparatedInstance::identity(inst).unwrap();
        let class = classify_bins(&sep, 1000, ClassifyMode::Uniform).unwrap();
        let caps: Vec<u64> = class.family.bins.iter().map(|b| b.capacity).collect();
        let model = assemble_lp(inst, &class, &caps, 100_000).unwrap();
        let sol = solve_lp(&model).unwrap();
        (model, sol)
    }

    #[test]
    fn zero_values_give_zero() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1], 1)],
            vec![ValueDistribution::point(int(0)), ValueDistribution::point(int(0))],
        )
        .unwrap();
        assert!(solve_all_small(&inst).1.objective.abs() < 1e-12);
    }

    #[test]
    fn single_element_takes_its_mean() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0], 1)],
            vec![ValueDistribution::two_point(int(3), ratio(1, 3)).unwrap()],
        )
        .unwrap();
        let (_, sol) = solve_all_small(&inst);
        assert!((sol.objective - 1.0).abs() < 1e-9);
        let inst = Instance::laminar(vec![Bin::new(vec![0], 1)], vec![ValueDistribution::point(int(1))]).unwrap();
        assert!((solve_all_small(&inst).1.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_two_bin_matches_exact_dp() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1, 2, 3], 2)],
            vec![
                ValueDistribution::two_point(int(4), ratio(1, 2)).unwrap(),
                ValueDistribution::point(int(1)),
                ValueDistribution::two_point(int(6), ratio(1, 3)).unwrap(),
                ValueDistribution::two_point(int(2), ratio(3, 4)).unwrap(),
            ],
        )
        .unwrap();
        let (model, sol) = solve_all_small(&inst);
        let opt = rational::to_f64(&crate::exact::optimal_value(&inst).unwrap());
        assert!((sol.objective - opt).abs() < 1e-6 * opt.max(1.0), "{} vs {opt}", sol.objective);
        // Flow conservation: Y sums to one on every layer.
        for layer in &model.blocks[0].y {
            let mass: f64 = layer.iter().map(|&v| sol.x[v]).sum();
            assert!((mass - 1.0).abs() < 1e-9);
        }
        for layer in &model.blocks[0].y_boundary {
            assert!(layer.iter().all(|&v| sol.x[v] == 0.0));
        }
    }

    #[test]
    fn no_big_bins_means_redundant_n_rows() {
        let inst = Instance::laminar(
            vec![Bin::new(vec![0, 1], 1), Bin::new(vec![2], 1)],
            (1..=3).map(|v| ValueDistribution::point(int(v))).collect(),
        )
        .unwrap();
        let (model, sol) = solve_all_small(&inst);
        assert!(model.big_rows.is_empty());
        assert_eq!(model.blocks.len(), 2);
        assert!((sol.objective - 5.0).abs() < 1e-9);
    }
}
