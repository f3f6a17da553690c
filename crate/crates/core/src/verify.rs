//! Property drivers: each runs a corpus through the solvers and reports
//! measured values against their bounds.

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::exact::{
    enumerated_value, exact_statistics, game_value, s2sat_value, ExactConfig, ExactError, ExactSolver, Realizations,
    StatisticsRequest,
};
use crate::formula::{Clause, Formula, Literal};
use crate::generators::{
    gain_formula, produce_anticoncentration, random_graphic, random_laminar, random_left_to_right, random_rooted,
    s2sat_to_gmbs, s3sat_to_s2sat, three_clause_count, two_point, EdgePhase, RandomParams,
};
use crate::lp::{assemble_lp, extract_policy, solve_lp};
use crate::model::{Bin, Instance, ValueDistribution};
use crate::preprocess::{classify_bins, separate_capacities, ClassifyMode, SeparatedInstance};
use crate::ptas::{build_ptas_policy, failure_probability_check, monte_carlo, FailureMode, PtasConfig};
use crate::rational::{self, int, pow, ratio, Rational};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: String,
    pub bound: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub pass: bool,
    /// Some bound was vacuous, so passing it carries no information.
    pub vacuous: bool,
    pub summary: String,
    pub checks: Vec<Check>,
}

impl PropertyReport {
    fn new(property: &str) -> Self {
        Self {
            property: property.to_string(),
            pass: true,
            vacuous: false,
            summary: String::new(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, measured: impl Into<String>, bound: impl Into<String>) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            pass,
            measured: measured.into(),
            bound: bound.into(),
        });
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    fn finish(mut self, summary: String) -> Self {
        self.summary = summary;
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Formula(#[from] crate::formula::FormulaError),
    #[error(transparent)]
    Reduction(#[from] crate::generators::ReductionError),
    #[error(transparent)]
    Preprocess(#[from] crate::preprocess::PreprocessError),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error(transparent)]
    Ptas(#[from] crate::ptas::PtasError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Invalid(#[from] crate::model::Violation),
}

fn fmt(r: &Rational) -> String {
    rational::format(r)
}

/// `n ∈ 2..=8` drawn from the seed.
fn corpus_size(seed: u64) -> usize {
    2 + (seed as usize * 7 + 3) % 7
}

/// Left-to-right instance with a spanning root bin and capacities at most 3.
pub fn single_bin_instance(seed: u64) -> Instance {
    random_rooted(RandomParams::new(corpus_size(seed), 3, 3, 3), seed)
}

/// Left-to-right instance with capacities at most 3.
pub fn left_to_right_instance(seed: u64) -> Instance {
    random_left_to_right(RandomParams::new(corpus_size(seed), 3, 3, 3), seed)
}

/// Expected total of replayed gains equals the backward-induction value.
pub fn verify_oracle(count: u64, seed0: u64) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("oracle");
    let config = ExactConfig::default();
    for seed in seed0..seed0 + count {
        let inst = if seed % 2 == 0 {
            random_laminar(RandomParams::new(corpus_size(seed), 3, 3, 3), seed)
        } else {
            random_graphic(corpus_size(seed), 2 + seed as usize % 4, 3, seed)
        };
        let opt = ExactSolver::new(&inst, config).optimal_value()?;
        let enumerated = enumerated_value(&inst, config)?;
        rep.check(format!("seed {seed}"), opt == enumerated, fmt(&enumerated), fmt(&opt));
    }
    let fails = rep.failures();
    Ok(rep.finish(format!("{count} instances, {fails} mismatches")))
}

/// With every bin small, the LP equals the optimum and the extracted policy
/// attains the LP value.
pub fn verify_lp_dp(count: u64, seed0: u64) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("lp-dp");
    let mut worst_opt = 0.0f64;
    let mut worst_policy = 0.0f64;
    for seed in seed0..seed0 + count {
        let inst = single_bin_instance(seed);
        let opt = rational::to_f64(&ExactSolver::new(&inst, ExactConfig::default()).optimal_value()?);
        let class = classify_bins(&SeparatedInstance::identity(&inst)?, 4, ClassifyMode::Uniform)?;
        let caps: Vec<u64> = class.family.bins.iter().map(|b| b.capacity).collect();
        let model = assemble_lp(&inst, &class, &caps, 1_000_000)?;
        let sol = solve_lp(&model)?;
        let policy = extract_policy(&model, &sol)?;
        let single = class.small_maximal.len() == 1 && class.big.is_empty();
        let rel_opt = (sol.objective - opt).abs() / opt.abs().max(1.0);
        let eval = policy.bins[0].evaluate(&model.atoms);
        let block = sol.block_gain(&model, 0);
        let rel_policy = (eval.gain - block).abs() / block.abs().max(1.0);
        worst_opt = worst_opt.max(rel_opt);
        worst_policy = worst_policy.max(rel_policy);
        rep.check(
            format!("seed {seed}"),
            single && rel_opt <= 1e-6 && rel_policy <= 1e-6,
            format!("lp {:.9} opt {opt:.9} policy {:.9} single {single}", sol.objective, eval.gain),
            "relative error ≤ 1e-6",
        );
    }
    let fails = rep.failures();
    Ok(rep.finish(format!(
        "{count} instances, max rel |LP−OPT| {worst_opt:.2e}, max rel |policy−block| {worst_policy:.2e}, {fails} failures"
    )))
}

/// `α·OPT ≤ OPT' ≤ OPT` for the separated instance, and separation holds.
pub fn verify_sandwich(count: u64, seed0: u64, alphas: &[Rational]) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("sandwich");
    for seed in seed0..seed0 + count {
        let inst = single_bin_instance(seed);
        let opt = ExactSolver::new(&inst, ExactConfig::default()).optimal_value()?;
        for alpha in alphas {
            let sep = separate_capacities(&inst, alpha)?;
            let opt_sep = ExactSolver::new(&sep.instance(), ExactConfig::default()).optimal_value()?;
            let ok = alpha * &opt <= opt_sep && opt_sep <= opt && sep.satisfies_separation();
            rep.check(
                format!("seed {seed} alpha {}", fmt(alpha)),
                ok,
                fmt(&opt_sep),
                format!("[{}, {}]", fmt(&(alpha * &opt)), fmt(&opt)),
            );
        }
    }
    let fails = rep.failures();
    Ok(rep.finish(format!("{count} instances × {} alphas, {fails} violations", alphas.len())))
}

/// Restarting with the first element taken changes later selections by 0 or 1.
pub fn verify_firstuseless(count: u64, seed0: u64) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("firstuseless");
    let mut realizations = 0u64;
    let mut exceptions = 0u64;
    for seed in seed0..seed0 + count {
        let inst = left_to_right_instance(seed);
        let mut solver = ExactSolver::new(&inst, ExactConfig::default());
        let mut bad = 0u64;
        let mut shifts = [0u64; 2];
        for r in Realizations::new(&inst, ExactConfig::default().enumeration_cap)? {
            realizations += 1;
            let (mu0, mu1) = solver.mu_shift(&r)?;
            match mu0.checked_sub(mu1) {
                Some(d @ 0..=1) => shifts[d] += 1,
                _ => bad += 1,
            }
        }
        exceptions += bad;
        rep.check(
            format!("seed {seed}"),
            bad == 0,
            format!("shift 0: {}, shift 1: {}, other: {bad}", shifts[0], shifts[1]),
            "mu0 − mu1 ∈ {0, 1}",
        );
    }
    Ok(rep.finish(format!("{count} instances, {realizations} realizations, {exceptions} exceptions")))
}

/// `E[e^{αX}] ≤ e^{(e^α−1)E[X]}` for the selection count of the optimal policy.
pub fn verify_concentration(count: u64, seed0: u64, alphas: &[f64]) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("concentration");
    let mut worst = f64::NEG_INFINITY;
    for seed in seed0..seed0 + count {
        let inst = single_bin_instance(seed);
        let request = StatisticsRequest {
            sets: vec![(0..inst.len()).collect()],
            alphas: alphas.to_vec(),
        };
        let stats = exact_statistics(&inst, &request, ExactConfig::default())?;
        for p in &stats.sets[0].mgf {
            worst = worst.max(p.value - p.poisson_bound);
            rep.check(
                format!("seed {seed} alpha {}", p.alpha),
                p.value <= p.poisson_bound + 1e-9,
                format!("{:.12}", p.value),
                format!("{:.12}", p.poisson_bound),
            );
        }
    }
    let fails = rep.failures();
    Ok(rep.finish(format!(
        "{count} instances × {} alphas, max E[e^αX] − bound {worst:.3e}, {fails} violations",
        alphas.len()
    )))
}

/// Bimodal selection count of the anti-concentration construction.
pub fn verify_anticoncentration(r: u32, k: u32, window: f64) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("anticoncentration");
    let inst = produce_anticoncentration(r, k);
    let stats = exact_statistics(&inst, &StatisticsRequest::default(), ExactConfig::default())?;
    let p0 = stats.count_distribution[0].clone();
    let pr = stats.count_distribution[r as usize].clone();
    let half = ratio(1, 2);
    let lo = rational::from_f64_decimal(0.5 - window).expect("finite");
    let hi = rational::from_f64_decimal(0.5 + window).expect("finite");
    for (name, p) in [("Pr[|OPT|=0]", &p0), ("Pr[|OPT|=r]", &pr)] {
        rep.check(name, lo <= *p && *p <= hi, fmt(p), format!("[{}, {}]", fmt(&lo), fmt(&hi)));
    }
    let q = Rational::one() - pow(&int(10), -(k as i32) - 1);
    let n_sq = ((r + 1) * (r + 1)) as i32;
    let lemma = &half * pow(&q, n_sq);
    rep.check("Pr[|OPT|=0] lemma bound", p0 >= lemma, fmt(&p0), format!("≥ {}", rational::to_f64(&lemma)));
    Ok(rep.finish(format!(
        "r={r} k={k}: Pr[0]={:.6} Pr[r]={:.6}",
        rational::to_f64(&p0),
        rational::to_f64(&pr)
    )))
}

/// Every 1- and 2-literal clause over `x1, x2` with distinct literals.
pub fn two_variable_clauses() -> Vec<Clause> {
    let lits = [Literal::pos(0), Literal::neg(0), Literal::pos(1), Literal::neg(1)];
    let mut out: Vec<Clause> = lits.iter().map(|&l| Clause::unit(l)).collect();
    for i in 0..lits.len() {
        for j in i + 1..lits.len() {
            out.push(Clause::pair(lits[i], lits[j]));
        }
    }
    out
}

/// All S2SAT formulas on two variables with `1..=max_m` clauses, as
/// multisets of [`two_variable_clauses`].
pub fn two_variable_formulas(max_m: usize) -> Vec<Formula> {
    let clauses = two_variable_clauses();
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
    while let Some((picked, from)) = stack.pop() {
        if !picked.is_empty() {
            let f = Formula::new(2, picked.iter().map(|&i| clauses[i].clone()).collect());
            if f.check_s2sat(None).is_ok() {
                out.push(f);
            }
        }
        if picked.len() < max_m {
            for i in from..clauses.len() {
                let mut next = picked.clone();
                next.push(i);
                stack.push((next, i));
            }
        }
    }
    out.sort_by_key(|f| f.clauses.len());
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleTally {
    pub realizations: u64,
    pub one_per_variable: u64,
    pub follows_coin: u64,
    pub greedy_after_phase_one: u64,
}

/// Rule violations of the optimal policy on the dispersed reduction instance.
pub fn reduction_rule_violations(formula: &Formula, k: usize, eta: &Rational) -> Result<RuleTally, VerifyError> {
    let art = s2sat_to_gmbs(formula, k)?;
    let original = &art.gmbs;
    let dispersed = original.dispersed(eta);
    let mut solver = ExactSolver::new(&dispersed, ExactConfig::default());
    let mut tally = RuleTally {
        realizations: 0,
        one_per_variable: 0,
        follows_coin: 0,
        greedy_after_phase_one: 0,
    };
    for r in Realizations::new(&dispersed, ExactConfig::default().enumeration_cap)? {
        tally.realizations += 1;
        let trace = solver.replay(&r)?;
        let chosen = |e: usize| trace.selected.contains(&e);
        let arrived = |e: usize| !original.distributions[e].atoms[r.atoms[e]].value.is_zero();
        let mut one = true;
        let mut coin = true;
        for (var, &(pos, neg)) in art.variable_edges.iter().enumerate() {
            one &= chosen(pos) != chosen(neg);
            if !Formula::is_deterministic(var) {
                coin &= chosen(pos) == arrived(pos);
            }
        }
        let mut greedy = true;
        for e in 0..original.len() {
            if art.phase_of_edge[e] == EdgePhase::Variable || !arrived(e) {
                continue;
            }
            let mut before: Vec<usize> = trace.selected.iter().copied().filter(|&s| s < e).collect();
            before.push(e);
            if original.is_independent(&before)? && !chosen(e) {
                greedy = false;
            }
        }
        tally.one_per_variable += !one as u64;
        tally.follows_coin += !coin as u64;
        tally.greedy_after_phase_one += !greedy as u64;
    }
    Ok(tally)
}

/// Exact reduction gain lies in the predicted window, and the optimal
/// policy follows the three structural rules on every realization.
pub fn verify_gain_formula(max_m: usize, eta: &Rational) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("gain-formula");
    let mut window_fail = 0;
    let mut rule_fail = 0;
    let formulas = two_variable_formulas(max_m);
    for f in &formulas {
        let m = f.clauses.len();
        let k = f.max_occurrence().max(1);
        let art = s2sat_to_gmbs(f, k)?;
        let gain = ExactSolver::new(&art.gmbs, ExactConfig::default()).optimal_value()?;
        let p = s2sat_value(f)? / int(m as i64);
        let est = gain_formula(2, m, k, &p);
        let in_window = est.contains(&gain);
        window_fail += !in_window as usize;
        let name = f.to_string().replace('\n', " ");
        rep.check(
            format!("window m={m} k={k} {name}"),
            in_window,
            fmt(&gain),
            format!("[{}, {}]", fmt(&est.base), fmt(&(&est.base + &est.delta_max))),
        );
        let rules = reduction_rule_violations(f, k, eta)?;
        let ok = rules.one_per_variable == 0 && rules.follows_coin == 0 && rules.greedy_after_phase_one == 0;
        rule_fail += !ok as usize;
        rep.check(
            format!("rules m={m} k={k} {name}"),
            ok,
            format!(
                "violations of rule 1/2/3: {}/{}/{} of {}",
                rules.one_per_variable, rules.follows_coin, rules.greedy_after_phase_one, rules.realizations
            ),
            "0/0/0",
        );
    }
    Ok(rep.finish(format!(
        "{} formulas, {window_fail} outside window, {rule_fail} with rule violations",
        formulas.len()
    )))
}

/// All clauses of width 1 to 3 with distinct literals over `vars` variables.
fn clauses_upto3(vars: usize) -> Vec<Clause> {
    let lits: Vec<Literal> = (0..vars).flat_map(|v| [Literal::pos(v), Literal::neg(v)]).collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << lits.len()) {
        if mask.count_ones() <= 3 {
            out.push(Clause::new(
                (0..lits.len()).filter(|&i| mask >> i & 1 == 1).map(|i| lits[i]).collect(),
            ));
        }
    }
    out
}

/// `value(gadget(φ')) = 6·m₃ + value(φ')` over every formula with at most
/// `max_vars` variables and `max_clauses` clauses.
pub fn verify_gadget(max_vars: usize, max_clauses: usize) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("gadget");
    let mut total = 0usize;
    let mut well_formed = 0usize;
    let mut mismatches = 0usize;
    for vars in 1..=max_vars {
        let clauses = clauses_upto3(vars);
        let mut stack: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
        while let Some((picked, from)) = stack.pop() {
            let phi3 = Formula::new(vars, picked.iter().map(|&i| clauses[i].clone()).collect());
            let phi2 = s3sat_to_s2sat(&phi3);
            let lhs = if phi2.check_s2sat(None).is_ok() {
                well_formed += 1;
                s2sat_value(&phi2)?
            } else {
                game_value(&phi2)?
            };
            let rhs = int(6 * three_clause_count(&phi3) as i64) + game_value(&phi3)?;
            total += 1;
            if lhs != rhs {
                mismatches += 1;
                rep.check(phi3.to_string().replace('\n', " "), false, fmt(&lhs), fmt(&rhs));
            }
            if picked.len() < max_clauses {
                for i in from..clauses.len() {
                    let mut next = picked.clone();
                    next.push(i);
                    stack.push((next, i));
                }
            }
        }
    }
    rep.check("all formulas", mismatches == 0, format!("{mismatches} mismatches"), "0");
    Ok(rep.finish(format!(
        "{total} formulas ({well_formed} satisfy the S2SAT coverage rule, the rest evaluated as plain games), {mismatches} mismatches"
    )))
}

/// Twelve elements in six consecutive pairs (capacity 2 each) under a root
/// bin of capacity 8, so the root is the only bin that can be big.
pub fn big_root_instance() -> Instance {
    let mut bins = vec![Bin::new((0..12).collect(), 8)];
    for g in 0..6 {
        bins.push(Bin::new(vec![2 * g, 2 * g + 1], 2));
    }
    let dists = (0..12)
        .map(|t| two_point(1 + t as i64 % 3, ratio(1, 3)))
        .collect();
    Instance::laminar(bins, dists).expect("valid")
}

/// Exact per-element discard probabilities against `3/(Kε³)`.
pub fn verify_failure_prob(instance: &Instance, ks: &[u64], epsilon: &Rational) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("failure-prob");
    let mut parts = Vec::new();
    for &k in ks {
        let policy = build_ptas_policy(
            instance,
            epsilon,
            &PtasConfig {
                k,
                mode: ClassifyMode::Uniform,
                max_states: 1_000_000,
            },
        )?;
        let report = failure_probability_check(&policy, FailureMode::Exact)?;
        let worst = report.probabilities.iter().cloned().fold(0.0, f64::max);
        rep.vacuous |= report.vacuous;
        rep.check(
            format!("K={k}"),
            report.within_bound,
            format!("max discard {worst:.6e}, big bins {}", policy.classification.big.len()),
            format!("{:.6}{}", report.bound, if report.vacuous { " (vacuous)" } else { "" }),
        );
        parts.push(format!(
            "K={k}: max {worst:.4e} vs {:.3}{}",
            report.bound,
            if report.vacuous { " VACUOUS" } else { "" }
        ));
    }
    Ok(rep.finish(parts.join("; ")))
}

/// Instance for the end-to-end run: left-to-right, at most ten elements.
pub fn ptas_instance(seed: u64) -> Instance {
    random_left_to_right(RandomParams::new(4 + seed as usize % 7, 3, 3, 2), seed)
}

/// Monte Carlo gain of the composed policy against exact `OPT`, once with
/// the given `ε, K` and once with `ε` small enough that nothing is big or cut.
pub fn verify_ptas(count: u64, seed0: u64, epsilon: &Rational, k: u64, trials: u64) -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("ptas");
    let eps_f = rational::to_f64(epsilon);
    let factor_raw = (1.0 - eps_f).powi(2) * (1.0 - 3.0 * eps_f);
    let factor = factor_raw.max(0.0);
    rep.vacuous = factor_raw <= 0.0;
    let mut exact_fails = 0;
    let mut used = 0u64;
    let mut seed = seed0;
    while used < count {
        let inst = ptas_instance(seed);
        seed += 1;
        let max_cap = inst.family().expect("laminar").bins.iter().map(|b| b.capacity).max().unwrap_or(1);
        let tiny = ratio(1, 2 * max_cap as i64 + 2);
        let sep = separate_capacities(&inst, &(Rational::one() - &tiny))?;
        if sep.kept.len() != inst.family().expect("laminar").len() {
            continue;
        }
        used += 1;
        let opt = rational::to_f64(&ExactSolver::new(&inst, ExactConfig::default()).optimal_value()?);
        let config = PtasConfig {
            k,
            mode: ClassifyMode::Uniform,
            max_states: 1_000_000,
        };
        let policy = build_ptas_policy(&inst, epsilon, &config)?;
        let mc = monte_carlo(&policy, trials, seed);
        let need = factor * opt - 3.0 * mc.ci95;
        rep.check(
            format!("seed {} eps {}", seed - 1, fmt(epsilon)),
            mc.mean_gain >= need,
            format!("mean {:.6} ± {:.2e}", mc.mean_gain, mc.ci95),
            format!("≥ {need:.6} (OPT {opt:.6})"),
        );
        let fine = build_ptas_policy(&inst, &tiny, &config)?;
        let big = fine.classification.big.len();
        let mc = monte_carlo(&fine, trials, seed);
        let ok = big == 0 && (mc.mean_gain - opt).abs() <= 3.0 * mc.ci95 + 1e-9;
        exact_fails += !ok as usize;
        rep.check(
            format!("seed {} eps {}", seed - 1, fmt(&tiny)),
            ok,
            format!("mean {:.6} ± {:.2e}, big bins {big}", mc.mean_gain, mc.ci95),
            format!("OPT {opt:.6} within 3·CI"),
        );
    }
    let fails = rep.failures();
    let note = if rep.vacuous { " (vacuous, clamped to 0)" } else { "" };
    Ok(rep.finish(format!(
        "{count} instances, factor {factor_raw:.4}{note} at eps {}, {exact_fails} fine-eps mismatches, {fails} failures",
        fmt(epsilon)
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationHit {
    pub distributions: Vec<(String, String)>,
    pub pr_x3: String,
    pub pr_x4: String,
    pub pr_x3_x4: String,
    pub covariance: String,
    pub exact_match: bool,
}

/// Searches capacity-2, four-element instances with two-point values for
/// positively correlated selections of the last two elements. The second
/// element is `3` w.p. `1/2` and the last is `1` surely; the first and third
/// range over `values × probs`.
pub fn correlation_search(values: &[i64], probs: &[Rational]) -> Result<Option<CorrelationHit>, VerifyError> {
    let target = (ratio(3, 4), ratio(1, 4), ratio(1, 4));
    let mut best: Option<(Rational, CorrelationHit)> = None;
    let grid: Vec<(i64, Rational)> = values
        .iter()
        .flat_map(|&v| probs.iter().map(move |p| (v, p.clone())))
        .collect();
    for (v1, p1) in &grid {
        for (v3, p3) in &grid {
            let dists: Vec<ValueDistribution> = vec![
                two_point(*v1, p1.clone()),
                two_point(3, ratio(1, 2)),
                two_point(*v3, p3.clone()),
                ValueDistribution::point(int(1)),
            ];
            let inst = Instance::laminar(vec![Bin::new(vec![0, 1, 2, 3], 2)], dists.clone())?;
            let stats = exact_statistics(&inst, &StatisticsRequest::default(), ExactConfig::default())?;
            let cov = stats.covariance(2, 3);
            let key = (stats.marginals[2].clone(), stats.marginals[3].clone(), stats.joint[2][3].clone());
            let exact_match = key == target;
            let hit = CorrelationHit {
                distributions: dists
                    .iter()
                    .map(|d| {
                        let top = d.atoms.last().expect("non-empty");
                        (fmt(&top.value), fmt(&top.prob))
                    })
                    .collect(),
                pr_x3: fmt(&key.0),
                pr_x4: fmt(&key.1),
                pr_x3_x4: fmt(&key.2),
                covariance: fmt(&cov),
                exact_match,
            };
            if exact_match {
                return Ok(Some(hit));
            }
            if cov.is_positive() && best.as_ref().is_none_or(|(c, _)| cov > *c) {
                best = Some((cov, hit));
            }
        }
    }
    Ok(best.map(|(_, h)| h))
}

pub fn verify_correlation() -> Result<PropertyReport, VerifyError> {
    let mut rep = PropertyReport::new("correlation");
    let values: Vec<i64> = (1..=6).collect();
    let probs = [ratio(1, 4), ratio(1, 2), ratio(3, 4), int(1)];
    match correlation_search(&values, &probs)? {
        Some(hit) => {
            let summary = format!(
                "{}: Pr[X3]={} Pr[X4]={} Pr[X3∧X4]={} Cov={} dists {:?}",
                if hit.exact_match { "exact match" } else { "positive covariance only" },
                hit.pr_x3,
                hit.pr_x4,
                hit.pr_x3_x4,
                hit.covariance,
                hit.distributions
            );
            rep.check("search", true, hit.covariance.clone(), if hit.exact_match { "1/16" } else { "> 0" });
            Ok(rep.finish(summary))
        }
        None => {
            rep.check("search", false, "no positive covariance", "> 0");
            Ok(rep.finish("no instance with positive covariance found".into()))
        }
    }
}
