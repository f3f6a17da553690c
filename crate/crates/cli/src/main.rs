use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use mbs_core::exact::{ExactConfig, ExactError, ExactSolver};
use mbs_core::formula::Formula;
use mbs_core::generators::{
    embed_in_complete_graph, embedding_vertex_count, produce_anticoncentration, random_graphic, random_left_to_right,
    s2sat_to_gmbs, s3sat_to_s2sat, shuffled_pairs, three_clause_count, EdgePhase, RandomParams, ReductionArtifact,
    ReductionError,
};
use mbs_core::io::{instance_to_json, parse_instance};
use mbs_core::lp::LpError;
use mbs_core::model::Instance;
use mbs_core::preprocess::ClassifyMode;
use mbs_core::ptas::{
    build_ptas_policy, default_k, exact_run, failure_probability_check, monte_carlo, FailureMode, PtasConfig, PtasError,
};
use mbs_core::rational::{self, Rational};
use mbs_core::verify::{self, PropertyReport, VerifyError};

#[derive(Parser)]
#[command(name = "mbs", version, about = "Bayesian online selection on laminar and graphic matroids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact optimal online value by backward induction.
    SolveExact {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on stored DP states.
        #[arg(long, default_value_t = 4_000_000)]
        max_states: usize,
    },
    /// Build the LP-based policy and evaluate it.
    Ptas(PtasArgs),
    /// Write a generated instance as JSON.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Check a property and report measured values against bounds.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PtasArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "1/2")]
    epsilon: String,
    /// Big-bin threshold, or `auto` for ⌈ε⁻⁴⌉.
    #[arg(long = "K", default_value = "auto")]
    k: String,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Mc)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Classify::Uniform)]
    classify: Classify,
    /// Depth limit for depth-scaled classification; defaults to the family depth.
    #[arg(long)]
    depth_limit: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    max_states: usize,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Classify {
    Uniform,
    DepthScaled,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Rank-r instance with a bimodal optimal selection count.
    Anticoncentration { r: u32, k: u32 },
    /// Three-phase graphic instance from a 2CNF (3-literal clauses go through the gadget first).
    Hardness { cnf: PathBuf, k: usize },
    /// Reduction embedded in a complete graph under a seeded arrival order.
    Embed {
        cnf: PathBuf,
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Vertex count; defaults to the smallest that always works.
        #[arg(long)]
        vertices: Option<usize>,
    },
    /// Random left-to-right laminar (or graphic) instance.
    Random {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        max_cap: u64,
        #[arg(long, default_value_t = 2)]
        atoms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random multigraph on this many vertices instead of a laminar family.
        #[arg(long)]
        graphic: Option<usize>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    property: Property,
    /// Corpus size for seeded properties.
    #[arg(long, default_value_t = 200)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance for failure-prob; defaults to a built-in one with a big root bin.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "1/2")]
    epsilon: String,
    /// Thresholds for failure-prob (the ptas property always uses 16).
    #[arg(long = "K", value_delimiter = ',', default_value = "4,8")]
    k: Vec<u64>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Property {
    Oracle,
    LpDp,
    Sandwich,
    Firstuseless,
    Concentration,
    Anticoncentration,
    GainFormula,
    Gadget,
    FailureProb,
    Ptas,
    Correlation,
}

enum Failure {
    Property,
    Input(String),
    Resource(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Property => 1,
            Failure::Input(_) => 2,
            Failure::Resource(_) => 3,
        }
    }
}

impl From<ExactError> for Failure {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::StateBudget { .. } | ExactError::EnumerationCap { .. } => Failure::Resource(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<LpError> for Failure {
    fn from(e: LpError) -> Self {
        match e {
            LpError::StateCap(_) => Failure::Resource(e.to_string()),
            LpError::Internal(_) | LpError::Infeasible(_) | LpError::CorruptSolution { .. } | LpError::NoDuals => {
                Failure::Resource(format!("solver failure: {e}"))
            }
        }
    }
}

impl From<PtasError> for Failure {
    fn from(e: PtasError) -> Self {
        match e {
            PtasError::Lp(e) => e.into(),
            PtasError::StateBudget(_) => Failure::Resource(e.to_string()),
            PtasError::Preprocess(mbs_core::preprocess::PreprocessError::Exact(e)) => e.into(),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Exact(e) => e.into(),
            VerifyError::Lp(e) => e.into(),
            VerifyError::Ptas(e) => e.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(input(&path.display().to_string()))?;
    parse_instance(&text).map_err(input(&path.display().to_string()))
}

fn read_formula(path: &Path) -> Result<Formula, Failure> {
    let text = fs::read_to_string(path).map_err(input(&path.display().to_string()))?;
    Formula::parse_dimacs(&text).map_err(input(&path.display().to_string()))
}

fn parse_epsilon(text: &str) -> Result<Rational, Failure> {
    let eps = rational::parse(text).map_err(input("--epsilon"))?;
    if eps <= Rational::from_integer(0.into()) || eps >= Rational::from_integer(1.into()) {
        return Err(Failure::Input(format!("--epsilon must lie in (0, 1), got {text}")));
    }
    Ok(eps)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(input(&path.display().to_string())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    emit(out, &serde_json::to_string_pretty(value).expect("serialisable report"))
}

fn solve_exact(instance: &Path, out: Option<&Path>, max_states: usize) -> Result<(), Failure> {
    let inst = read_instance(instance)?;
    let mut solver = ExactSolver::new(
        &inst,
        ExactConfig {
            max_states,
            ..ExactConfig::default()
        },
    );
    let opt = solver.optimal_value()?;
    emit_json(
        out,
        &json!({
            "opt": rational::format(&opt),
            "opt_float": rational::to_f64(&opt),
            "states": solver.states_stored(),
            "elements": inst.len(),
        }),
    )
}

fn ptas(args: &PtasArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let inst = read_instance(&args.instance)?;
    let family = inst
        .family()
        .ok_or_else(|| Failure::Input("ptas needs a laminar instance".into()))?;
    let eps = parse_epsilon(&args.epsilon)?;
    let k = match args.k.as_str() {
        "auto" => default_k(&eps),
        s => s
            .parse::<u64>()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| Failure::Input(format!("--K must be a positive integer or auto, got {s}")))?,
    };
    if args.trials == 0 {
        return Err(Failure::Input("--trials must be at least 1".into()));
    }
    let mode = match args.classify {
        Classify::Uniform => ClassifyMode::Uniform,
        Classify::DepthScaled => ClassifyMode::DepthScaled {
            depth_limit: args.depth_limit.unwrap_or_else(|| family.max_depth()),
            epsilon: rational::to_f64(&eps),
        },
    };
    let config = PtasConfig {
        k,
        mode,
        max_states: args.max_states,
    };
    let policy = build_ptas_policy(&inst, &eps, &config)?;

    let (mean_gain, ci95, discard_rates) = match args.mode {
        Mode::Exact => {
            let run = exact_run(&policy, args.max_states)?;
            (run.expected_gain, 0.0, run.discard_probabilities)
        }
        Mode::Mc => {
            let mc = monte_carlo(&policy, args.trials, args.seed);
            (mc.mean_gain, mc.ci95, mc.discard_rates)
        }
    };
    let opt = match ExactSolver::new(&inst, ExactConfig::default()).optimal_value() {
        Ok(v) => Some(v),
        Err(ExactError::StateBudget { .. }) | Err(ExactError::EnumerationCap { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let e = rational::to_f64(&eps);
    let factor_raw = (1.0 - e).powi(2) * (1.0 - 3.0 * e);
    let failure = failure_probability_check(&policy, FailureMode::Exact).ok();
    let mut report = json!({
        "epsilon": rational::format(&eps),
        "K": k,
        "mode": match args.mode { Mode::Exact => "exact", Mode::Mc => "mc" },
        "classify": match args.classify { Classify::Uniform => "uniform", Classify::DepthScaled => "depth-scaled" },
        "lp_value": policy.lp_value,
        "mean_gain": mean_gain,
        "ci95": ci95,
        "discard_rates": discard_rates,
        "big_bins": policy.classification.big.len(),
        "small_bins": policy.classification.small_maximal.len(),
        "opt_exact": opt.as_ref().map(rational::format),
        "opt_exact_float": opt.as_ref().map(rational::to_f64),
        "ratio": opt.as_ref().map(|o| mean_gain / rational::to_f64(o)),
        "guarantee_factor": factor_raw.max(0.0),
        "guarantee_vacuous": factor_raw <= 0.0,
        "failure_bound": 3.0 / (k as f64 * e.powi(3)),
        "failure_bound_vacuous": failure.as_ref().map(|f| f.vacuous),
        "left_to_right": inst.is_left_to_right().unwrap_or(false),
    });
    if args.mode == Mode::Mc {
        report["trials"] = json!(args.trials);
        report["seed"] = json!(args.seed);
    }
    if args.timing {
        report["elapsed_ms"] = json!(start.elapsed().as_millis() as u64);
    }
    emit_json(args.out.as_deref(), &report)
}

fn artifact_summary(art: &ReductionArtifact) -> Value {
    let count = |p: EdgePhase| art.edges_in_phase(p).len();
    json!({
        "vertices": art.gmbs.graph().map(|g| g.vertex_count),
        "edges": art.gmbs.len(),
        "variable_edges": count(EdgePhase::Variable),
        "clause_edges": count(EdgePhase::Clause),
        "consistency_edges": count(EdgePhase::Consistency),
        "auxiliary_edges": count(EdgePhase::Auxiliary),
        "filler_edges": count(EdgePhase::Filler),
        "auxiliary_first": art.arrives_before(
            &[EdgePhase::Auxiliary],
            &[EdgePhase::Clause, EdgePhase::Consistency]
        ),
    })
}

fn instance_summary(inst: &Instance) -> Value {
    match (inst.family(), inst.graph()) {
        (Some(f), _) => json!({
            "elements": inst.len(),
            "bins": f.len(),
            "left_to_right": inst.is_left_to_right().unwrap_or(false),
        }),
        (_, Some(g)) => json!({ "elements": inst.len(), "vertices": g.vertex_count, "edges": g.edges.len() }),
        _ => unreachable!("ground is laminar or graphic"),
    }
}

fn generate(kind: &GenerateKind, out: Option<&Path>) -> Result<(), Failure> {
    let (inst, mut summary) = match kind {
        GenerateKind::Anticoncentration { r, k } => {
            if *r == 0 || *k == 0 {
                return Err(Failure::Input("r and k must be positive".into()));
            }
            let inst = produce_anticoncentration(*r, *k);
            let s = instance_summary(&inst);
            (inst, s)
        }
        GenerateKind::Hardness { cnf, k } => {
            let mut formula = read_formula(cnf)?;
            let gadget_clauses = three_clause_count(&formula);
            if gadget_clauses > 0 {
                formula = s3sat_to_s2sat(&formula);
            }
            let art = s2sat_to_gmbs(&formula, *k)?;
            let mut s = artifact_summary(&art);
            s["gadget_clauses"] = json!(gadget_clauses);
            (art.gmbs, s)
        }
        GenerateKind::Embed {
            cnf,
            k,
            seed,
            vertices,
        } => {
            let formula = read_formula(cnf)?;
            let vc = vertices.unwrap_or_else(|| embedding_vertex_count(formula.num_vars, formula.clauses.len()));
            let art = embed_in_complete_graph(&formula, *k, vc, &shuffled_pairs(vc, *seed))?;
            (art.gmbs.clone(), artifact_summary(&art))
        }
        GenerateKind::Random {
            n,
            depth,
            max_cap,
            atoms,
            seed,
            graphic,
        } => {
            if *n == 0 || *depth == 0 || *max_cap == 0 || *atoms == 0 {
                return Err(Failure::Input("random parameters must be positive".into()));
            }
            let inst = match graphic {
                Some(v) if *v < 2 => return Err(Failure::Input("--graphic needs at least 2 vertices".into())),
                Some(v) => random_graphic(*n, *v, *atoms, *seed),
                None => random_left_to_right(RandomParams::new(*n, *depth, *max_cap, *atoms), *seed),
            };
            let s = instance_summary(&inst);
            (inst, s)
        }
    };
    let text = instance_to_json(&inst);
    match out {
        Some(path) => {
            emit(Some(path), &text)?;
            summary["out"] = json!(path.display().to_string());
            emit_json(None, &summary)
        }
        None => {
            eprintln!("{summary}");
            emit(None, &text)
        }
    }
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let eps = parse_epsilon(&args.epsilon)?;
    let alphas = [
        rational::ratio(1, 2),
        rational::ratio(3, 4),
        rational::ratio(9, 10),
    ];
    let eta = rational::pow(&rational::int(10), -9);
    let report: PropertyReport = match args.property {
        Property::Oracle => verify::verify_oracle(args.count, args.seed)?,
        Property::LpDp => verify::verify_lp_dp(args.count, args.seed)?,
        Property::Sandwich => verify::verify_sandwich(args.count, args.seed, &alphas)?,
        Property::Firstuseless => verify::verify_firstuseless(args.count, args.seed)?,
        Property::Concentration => verify::verify_concentration(args.count, args.seed, &[0.1, 0.5, 1.0, 2.0])?,
        Property::Anticoncentration => verify::verify_anticoncentration(2, 3, 0.01)?,
        Property::GainFormula => verify::verify_gain_formula(2, &eta)?,
        Property::Gadget => verify::verify_gadget(3, 2)?,
        Property::FailureProb => {
            let inst = match &args.instance {
                Some(p) => read_instance(p)?,
                None => verify::big_root_instance(),
            };
            verify::verify_failure_prob(&inst, &args.k, &eps)?
        }
        Property::Ptas => verify::verify_ptas(args.count, args.seed, &eps, 16, args.trials)?,
        Property::Correlation => verify::verify_correlation()?,
    };
    emit_json(args.out.as_deref(), &report)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Property)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SolveExact {
            instance,
            out,
            max_states,
        } => solve_exact(instance, out.as_deref(), *max_states),
        Command::Ptas(args) => ptas(args),
        Command::Generate { kind, out } => generate(kind, out.as_deref()),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Resource(m) => eprintln!("resource limit: {m}"),
                Failure::Property => eprintln!("property check failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
