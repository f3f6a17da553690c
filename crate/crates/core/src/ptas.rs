//! End-to-end policy for left-to-right laminar instances: separate, classify,
//! shrink big bins, solve the relaxation and run the per-bin policies under a
//! global feasibility filter.

use std::collections::HashMap;

use num::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::lp::{assemble_lp, extract_policy, solve_lp, ExtractedPolicy, LpError, LpModel, LpSolution};
use crate::model::{Instance, LaminarFamily, ModelError};
use crate::preprocess::{classify_bins, separate_capacities, shrink_big, BinClassification, ClassifyMode, PreprocessError, SeparatedInstance};
use crate::rational::{self, Rational};

/// Trials per Monte Carlo work unit; fixed so results do not depend on thread count.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PtasError {
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    Epsilon(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("joint state space exceeds {0} states")]
    StateBudget(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtasConfig {
    pub k: u64,
    pub mode: ClassifyMode,
    /// Cap on states per small-bin state space.
    pub max_states: usize,
}

/// `⌈ε^{-4}⌉`.
pub fn default_k(epsilon: &Rational) -> u64 {
    rational::ceil_to_u64(&rational::pow(epsilon, -4))
}

#[derive(Debug, Clone)]
pub struct PtasPolicy {
    pub instance: Instance,
    pub epsilon: Rational,
    pub k: u64,
    pub separated: SeparatedInstance,
    /// `𝓜'` family used by the feasibility filter.
    pub filter: LaminarFamily,
    pub classification: BinClassification,
    /// `c''` for the bins of `classification.family`.
    pub shrunk_caps: Vec<u64>,
    pub model: LpModel,
    pub solution: LpSolution,
    pub policy: ExtractedPolicy,
    pub lp_value: f64,
    /// Per element, the `𝓜'` bins containing it.
    filter_bins: Vec<Vec<usize>>,
    /// Cumulative atom probabilities for sampling.
    cumulative: Vec<Vec<f64>>,
}

pub fn build_ptas_policy(instance: &Instance, epsilon: &Rational, config: &PtasConfig) -> Result<PtasPolicy, PtasError> {
    if !(epsilon.is_positive() && *epsilon < Rational::one()) {
        return Err(PtasError::Epsilon(rational::format(epsilon)));
    }
    instance.family().ok_or(ModelError::NotLaminar)?;
    let separated = separate_capacities(instance, &(Rational::one() - epsilon))?;
    let classification = classify_bins(&separated, config.k, config.mode)?;
    let shrunk_caps = shrink_big(&classification, epsilon);
    let model = assemble_lp(instance, &classification, &shrunk_caps, config.max_states)?;
    let solution = solve_lp(&model)?;
    let policy = extract_policy(&model, &solution)?;
    let filter = separated.family();
    let filter_bins = (0..instance.len()).map(|t| filter.bins_containing(t)).collect();
    let cumulative = model
        .atoms
        .iter()
        .map(|atoms| {
            atoms
                .iter()
                .scan(0.0, |acc, &(_, p)| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    Ok(PtasPolicy {
        instance: instance.clone(),
        epsilon: epsilon.clone(),
        k: config.k,
        separated,
        filter,
        classification,
        shrunk_caps,
        lp_value: solution.objective,
        model,
        solution,
        policy,
        filter_bins,
        cumulative,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub gain: Rational,
    pub selected: Vec<usize>,
    pub suggested: Vec<usize>,
    pub discarded: Vec<usize>,
}

/// Deterministic stream for one trial: element `t` consumes draws `2t` (value)
/// and `2t + 1` (acceptance coin).
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

impl PtasPolicy {
    fn sample_atom(&self, t: usize, u: f64) -> usize {
        let cum = &self.cumulative[t];
        cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
    }

    /// One pass with the given atoms; `coin(t)` yields the acceptance draw of
    /// element `t`. Selected, suggested and discarded indices go to `out`.
    fn run(&self, atoms: &[usize], mut coin: impl FnMut(usize) -> f64, out: &mut Outcome) {
        out.clear(self.policy.bins.len(), self.filter.len());
        for (t, &a) in atoms.iter().enumerate() {
            let (b, j) = self.policy.owner[t];
            let bin = &self.policy.bins[b];
            let s = out.states[b];
            let q = bin.accept[j][s][a];
            let u = coin(t);
            let (skip, take) = bin.next[j][s];
            if u < q {
                out.suggested.push(t);
                out.states[b] = take.expect("positive acceptance implies a feasible successor");
                let fits = self.filter_bins[t]
                    .iter()
                    .all(|&f| out.counts[f] < self.filter.bins[f].capacity);
                if fits {
                    for &f in &self.filter_bins[t] {
                        out.counts[f] += 1;
                    }
                    out.selected.push(t);
                } else {
                    out.discarded.push(t);
                }
            } else {
                out.states[b] = skip;
            }
        }
    }

    fn record(&self, atoms: &[usize], out: Outcome) -> RunRecord {
        RunRecord {
            gain: out
                .selected
                .iter()
                .map(|&t| &self.instance.distributions[t].atoms[atoms[t]].value)
                .sum(),
            selected: out.selected,
            suggested: out.suggested,
            discarded: out.discarded,
        }
    }

    /// Draws the atoms and coins of one trial into `atoms` and `coins`.
    fn draw(&self, seed: u64, trial: u64, atoms: &mut Vec<usize>, coins: &mut Vec<f64>) {
        let mut rng = trial_rng(seed, trial);
        atoms.clear();
        coins.clear();
        for t in 0..self.instance.len() {
            let u: f64 = rng.random();
            atoms.push(self.sample_atom(t, u));
            coins.push(rng.random::<f64>());
        }
    }

    /// Runs on a fixed realization, drawing acceptance coins from `rng`.
    pub fn run_online(&self, atoms: &[usize], rng: &mut ChaCha8Rng) -> RunRecord {
        let coins: Vec<f64> = (0..atoms.len())
            .map(|_| {
                let _value_draw: f64 = rng.random();
                rng.random()
            })
            .collect();
        let mut out = Outcome::default();
        self.run(atoms, |t| coins[t], &mut out);
        self.record(atoms, out)
    }

    /// Samples the realization and the coins of one trial.
    pub fn run_trial(&self, seed: u64, trial: u64) -> (Vec<usize>, RunRecord) {
        let (mut atoms, mut coins) = (Vec::new(), Vec::new());
        self.draw(seed, trial, &mut atoms, &mut coins);
        let mut out = Outcome::default();
        self.run(&atoms, |t| coins[t], &mut out);
        let record = self.record(&atoms, out);
        (atoms, record)
    }
}

#[derive(Debug, Default)]
struct Outcome {
    states: Vec<usize>,
    counts: Vec<u64>,
    selected: Vec<usize>,
    suggested: Vec<usize>,
    discarded: Vec<usize>,
}

impl Outcome {
    fn clear(&mut self, bins: usize, filter: usize) {
        self.states.clear();
        self.states.resize(bins, 0);
        self.counts.clear();
        self.counts.resize(filter, 0);
        self.selected.clear();
        self.suggested.clear();
        self.discarded.clear();
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub lp_value: f64,
    pub mean_gain: f64,
    /// 95% normal-approximation half-width.
    pub ci95: f64,
    pub discard_rates: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub epsilon: String,
    #[serde(rename = "K")]
    pub k: u64,
}

#[derive(Clone)]
struct Tally {
    sum: f64,
    sum_sq: f64,
    discards: Vec<u64>,
}

pub fn monte_carlo(policy: &PtasPolicy, trials: u64, seed: u64) -> MonteCarloReport {
    let n = policy.instance.len();
    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally = Tally {
                sum: 0.0,
                sum_sq: 0.0,
                discards: vec![0; n],
            };
            let (mut atoms, mut coins, mut out) = (Vec::new(), Vec::new(), Outcome::default());
            for trial in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                policy.draw(seed, trial, &mut atoms, &mut coins);
                policy.run(&atoms, |t| coins[t], &mut out);
                let g: f64 = out.selected.iter().map(|&t| policy.model.atoms[t][atoms[t]].0).sum();
                tally.sum += g;
                tally.sum_sq += g * g;
                for &t in &out.discarded {
                    tally.discards[t] += 1;
                }
            }
            tally
        })
        .collect();
    let mut total = Tally {
        sum: 0.0,
        sum_sq: 0.0,
        discards: vec![0; n],
    };
    for t in &tallies {
        total.sum += t.sum;
        total.sum_sq += t.sum_sq;
        for (d, x) in total.discards.iter_mut().zip(&t.discards) {
            *d += x;
        }
    }
    let nf = trials as f64;
    let mean = total.sum / nf;
    let var = if trials > 1 {
        ((total.sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    MonteCarloReport {
        lp_value: policy.lp_value,
        mean_gain: mean,
        ci95: 1.96 * (var / nf).sqrt(),
        discard_rates: total.discards.iter().map(|&d| d as f64 / nf).collect(),
        trials,
        seed,
        epsilon: rational::format(&policy.epsilon),
        k: policy.k,
    }
}

/// Exact expectations of the composed policy, by propagating the joint
/// distribution of per-bin states and `𝓜'` counts.
#[derive(Debug, Clone, Serialize)]
pub struct ExactRun {
    pub expected_gain: f64,
    /// `Pr[u_t suggested but 𝓜'-infeasible]`.
    pub discard_probabilities: Vec<f64>,
    /// `E[v_t · 1{u_t discarded}]`.
    pub discarded_value: Vec<f64>,
    /// `Pr[u_t suggested]`.
    pub suggest_probabilities: Vec<f64>,
    pub joint_states: usize,
}

pub fn exact_run(policy: &PtasPolicy, max_states: usize) -> Result<ExactRun, PtasError> {
    let n = policy.instance.len();
    let bins = &policy.policy.bins;
    let last_of_bin: Vec<usize> = bins.iter().map(|b| *b.elements.last().expect("non-empty bin")).collect();
    let last_of_filter: Vec<usize> = policy.filter.bins.iter().map(|b| b.last()).collect();

    let mut dist: HashMap<(Vec<usize>, Vec<u64>), f64> = HashMap::new();
    dist.insert((vec![0; bins.len()], vec![0; policy.filter.len()]), 1.0);
    let mut out = ExactRun {
        expected_gain: 0.0,
        discard_probabilities: vec![0.0; n],
        discarded_value: vec![0.0; n],
        suggest_probabilities: vec![0.0; n],
        joint_states: 0,
    };
    for t in 0..n {
        let (b, j) = policy.policy.owner[t];
        let mut next: HashMap<(Vec<usize>, Vec<u64>), f64> = HashMap::new();
        let mut push = |mut states: Vec<usize>, mut counts: Vec<u64>, mass: f64| {
            for (bi, &last) in last_of_bin.iter().enumerate() {
                if last <= t {
                    states[bi] = 0;
                }
            }
            for (f, &last) in last_of_filter.iter().enumerate() {
                if last <= t {
                    counts[f] = 0;
                }
            }
            *next.entry((states, counts)).or_insert(0.0) += mass;
        };
        for ((states, counts), mass) in dist {
            let s = states[b];
            let (skip, take) = bins[b].next[j][s];
            let fits = policy.filter_bins[t]
                .iter()
                .all(|&f| counts[f] < policy.filter.bins[f].capacity);
            let mut p_suggest = 0.0;
            let mut value_suggest = 0.0;
            for (a, &(v, p)) in policy.model.atoms[t].iter().enumerate() {
                let q = bins[b].accept[j][s][a];
                p_suggest += p * q;
                value_suggest += p * q * v;
            }
            out.suggest_probabilities[t] += mass * p_suggest;
            if p_suggest > 0.0 {
                let mut st = states.clone();
                st[b] = take.expect("positive acceptance implies a feasible successor");
                let mut ct = counts.clone();
                if fits {
                    for &f in &policy.filter_bins[t] {
                        ct[f] += 1;
                    }
                    out.expected_gain += mass * value_suggest;
                } else {
                    out.discard_probabilities[t] += mass * p_suggest;
                    out.discarded_value[t] += mass * value_suggest;
                }
                push(st, ct, mass * p_suggest);
            }
            if p_suggest < 1.0 {
                let mut st = states;
                st[b] = skip;
                push(st, counts, mass * (1.0 - p_suggest));
            }
        }
        out.joint_states = out.joint_states.max(next.len());
        if next.len() > max_states {
            return Err(PtasError::StateBudget(max_states));
        }
        dist = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureMode {
    Exact,
    Trials { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureReport {
    pub probabilities: Vec<f64>,
    /// `3 / (K·ε³)`.
    pub bound: f64,
    /// The bound is at least one, so it says nothing.
    pub vacuous: bool,
    pub exact: bool,
    pub left_to_right: bool,
    pub within_bound: bool,
}

pub fn failure_probability_check(policy: &PtasPolicy, mode: FailureMode) -> Result<FailureReport, PtasError> {
    let eps = rational::to_f64(&policy.epsilon);
    let bound = 3.0 / (policy.k as f64 * eps.powi(3));
    let (probabilities, exact) = match mode {
        FailureMode::Exact => (exact_run(policy, 2_000_000)?.discard_probabilities, true),
        FailureMode::Trials { trials, seed } => (monte_carlo(policy, trials, seed).discard_rates, false),
    };
    let within_bound = probabilities.iter().all(|&p| p <= bound + 1e-12);
    Ok(FailureReport {
        probabilities,
        bound,
        vacuous: bound >= 1.0,
        exact,
        left_to_right: policy.instance.is_left_to_right()?,
        within_bound,
    })
}
