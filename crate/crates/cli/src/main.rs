use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdp_core::calibrate::{calibrate_discrete, calibrate_gaussian, DiscreteBackend};
use pdp_core::experiment::{run_experiment, to_csv, ExperimentConfig, ExperimentKind};
use pdp_core::gaussian::{leakage_gaussian, max_leakage_gaussian, mu0_expand, DEFAULT_GAUSSIAN_CAP};
use pdp_core::io::{distribution_json, model_json, read_distribution, read_model, read_synthetic};
use pdp_core::oracle::{pdp_exact_discrete, pdp_numeric_gaussian, DEFAULT_GRID_POINTS};
use pdp_core::synth::{gen_covariance, gen_discrete_corr, gen_whg_edges, DEFAULT_BETA_ALPHA};
use pdp_core::whg::{
    fast_search, full_space_search, search_source, AssignmentMode, GammaMode, SearchKind, DEFAULT_FULL_CAP,
};
use pdp_core::{
    AdversaryNode, GaussianModel, JointDistribution, LeakageReport, PdpError, QuerySpec, SearchOptions,
    WeightedHierGraph,
};
use serde_json::{json, Value};

/// Privacy leakage of Laplace-perturbed queries against adversaries with prior knowledge.
#[derive(Parser)]
#[command(name = "pdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search every adversary of a discrete joint distribution.
    AnalyzeDiscrete(AnalyzeDiscrete),
    /// Search a graph given directly by its edge values.
    AnalyzeSynthetic(AnalyzeSynthetic),
    /// Closed-form leakage under a Gaussian model.
    AnalyzeGaussian(AnalyzeGaussian),
    /// Compare the graph (or closed form) against brute-force leakage.
    OracleCheck(OracleCheck),
    /// Parameter sweep over synthetic inputs, written as CSV.
    Experiment(Experiment),
    /// Smallest noise scale whose worst-case leakage is at most epsilon.
    Calibrate(Calibrate),
    /// Write a synthetic input file.
    #[command(subcommand)]
    Generate(Generate),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Full,
    Fast,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gamma {
    LowerTail,
    BothTails,
}

impl From<Gamma> for GammaMode {
    fn from(g: Gamma) -> Self {
        match g {
            Gamma::LowerTail => GammaMode::LowerTail,
            Gamma::BothTails => GammaMode::BothTails,
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value = "full")]
    mode: Mode,
    /// Run the full search beyond the size cap.
    #[arg(long)]
    force: bool,
    #[arg(long, default_value_t = DEFAULT_FULL_CAP)]
    cap: usize,
    /// Write the searched graph as JSON.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeDiscrete {
    /// Distribution file: {"domains": [[...], ...], "probs": [...]}.
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    /// Linear query coefficients; the plain sum by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    query: Option<Vec<f64>>,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value = "lower-tail")]
    gamma: Gamma,
    /// Evaluate every node at these value positions instead of the worst case.
    #[arg(long, value_delimiter = ',')]
    fixed: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeSynthetic {
    /// Graph file: {"n": .., "first_layer": [...], "edges": [{"node": [i, [K...]], "remove": j, "ic": v}]}.
    input: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeGaussian {
    /// Model file: {"mu": [...], "sigma": [[...]], "M": .., "lambda": ..}.
    input: PathBuf,
    /// One adversary as `i:k1,k2,...` (0-based); `i:` knows nothing.
    #[arg(long, conflicts_with = "all")]
    adversary: Option<String>,
    /// Every adversary.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = DEFAULT_GAUSSIAN_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleCheck {
    /// Distribution or Gaussian model file.
    input: PathBuf,
    /// Noise scale for distributions; models carry their own.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    query: Option<Vec<f64>>,
    /// Allowed excess of the exact value over the computed one; 1e-9 for
    /// distributions and 1e-3 for models by default.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "lower-tail")]
    gamma: Gamma,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Discrete,
    Gaussian,
}

#[derive(Args)]
struct Experiment {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 15)]
    n: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    aver_corr: Vec<f64>,
    /// Layers to report; all by default.
    #[arg(long, value_delimiter = ',')]
    layers: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    seeds: usize,
    /// Which searches to run on discrete sweeps.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["full", "fast"])]
    algorithms: Vec<Mode>,
    #[arg(long, default_value_t = DEFAULT_BETA_ALPHA)]
    beta_alpha: f64,
    /// Output range `M` for Gaussian sweeps.
    #[arg(long, default_value_t = 1.0)]
    range: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Full,
    Fast,
    Oracle,
}

#[derive(Args)]
struct Calibrate {
    /// Distribution or Gaussian model file.
    input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: f64,
    /// Leakage computation for distributions.
    #[arg(long, value_enum, default_value = "full")]
    backend: Backend,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    query: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Generate {
    /// Graph with beta-distributed edges averaging `aver-corr`.
    Whg {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        aver_corr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BETA_ALPHA)]
        beta_alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaussian model whose pairwise correlations all equal `aver-coeff`.
    Covariance {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        aver_coeff: f64,
        #[arg(long, default_value_t = 1.0)]
        range: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete table with the given average pairwise correlation.
    Discrete {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        aver_corr: f64,
        #[arg(long, default_value_t = 2)]
        domain_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Pdp(PdpError),
    Usage(String),
    /// An oracle check found violations; the report has been written.
    Check,
}

impl From<PdpError> for Failure {
    fn from(e: PdpError) -> Self {
        Failure::Pdp(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Pdp(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn invocation() -> Vec<String> {
    std::env::args().collect()
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json(v: &Value, out: Option<&Path>) -> std::io::Result<()> {
    emit(&serde_json::to_string_pretty(v).expect("serializes"), out)
}

fn emit_report(mut r: LeakageReport, out: Option<&Path>) -> std::io::Result<()> {
    r.invocation = Some(invocation());
    emit_json(&serde_json::to_value(&r).expect("serializes"), out)
}

fn write_graph(g: &WeightedHierGraph, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => fs::write(p, serde_json::to_string_pretty(&g.to_json()).expect("serializes")),
        None => Ok(()),
    }
}

fn query_for(dist: &JointDistribution, coef: Option<Vec<f64>>) -> Result<QuerySpec, PdpError> {
    match coef {
        Some(c) => QuerySpec::new(c),
        None => Ok(QuerySpec::sum(dist.n())),
    }
}

fn search_options(s: &SearchArgs, gamma: GammaMode, fixed: Option<Vec<usize>>) -> SearchOptions {
    SearchOptions {
        cap: s.cap,
        force: s.force,
        gamma,
        assignment: fixed.map_or(AssignmentMode::WorstCase, AssignmentMode::Fixed),
        keep_edges: s.graph_out.is_some(),
    }
}

fn kind(m: Mode) -> SearchKind {
    match m {
        Mode::Full => SearchKind::Full,
        Mode::Fast => SearchKind::Fast,
    }
}

enum Input {
    Distribution(JointDistribution),
    Model(GaussianModel),
}

/// Distributions carry `domains`, models carry `sigma`.
fn read_input(path: &Path) -> Result<Input, PdpError> {
    let v: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    if v.get("domains").is_some() {
        Ok(Input::Distribution(read_distribution(path)?))
    } else if v.get("sigma").is_some() {
        Ok(Input::Model(read_model(path)?))
    } else {
        Err(PdpError::InvalidParameter(format!(
            "{} is neither a distribution (domains, probs) nor a model (mu, sigma, M, lambda)",
            path.display()
        )))
    }
}

fn analyze_discrete(a: AnalyzeDiscrete) -> Outcome {
    let dist = read_distribution(&a.input)?;
    let query = query_for(&dist, a.query)?;
    let opts = search_options(&a.search, a.gamma.into(), a.fixed);
    let (g, r) = match a.search.mode {
        Mode::Full => full_space_search(&dist, &query, a.lambda, &opts)?,
        Mode::Fast => fast_search(&dist, &query, a.lambda, &opts)?,
    };
    write_graph(&g, a.search.graph_out.as_deref())?;
    emit_report(r, a.out.as_deref())?;
    Ok(())
}

fn analyze_synthetic(a: AnalyzeSynthetic) -> Outcome {
    let src = read_synthetic(&a.input)?;
    let opts = search_options(&a.search, GammaMode::default(), None);
    let (g, r) = search_source(&src, kind(a.search.mode), &opts)?;
    write_graph(&g, a.search.graph_out.as_deref())?;
    emit_report(r, a.out.as_deref())?;
    Ok(())
}

fn parse_adversary(s: &str, n: usize) -> Result<(usize, Vec<usize>), Failure> {
    let bad = || Failure::Usage(format!("adversary must look like `i:k1,k2`, got `{s}`"));
    let (i, k) = s.split_once(':').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let k = k
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(&t) = k.iter().chain([&i]).find(|&&t| t >= n) {
        return Err(PdpError::IndexOutOfRange { index: t, n }.into());
    }
    Ok((i, k))
}

fn analyze_gaussian(a: AnalyzeGaussian) -> Outcome {
    let model = read_model(&a.input)?;
    match (a.adversary, a.all) {
        (Some(s), false) => {
            let (i, k) = parse_adversary(&s, model.n())?;
            let leakage = leakage_gaussian(&model, i, &k)?;
            let e = mu0_expand(&model, i, &k)?;
            let v = json!({
                "algorithm": "closed-form",
                "node": [i, k],
                "leakage": leakage,
                "mu0": e,
                "invocation": invocation(),
            });
            emit_json(&v, a.out.as_deref())?;
        }
        (None, true) => emit_report(max_leakage_gaussian(&model, a.cap)?, a.out.as_deref())?,
        _ => return Err(Failure::Usage("give either --adversary or --all".into())),
    }
    Ok(())
}

fn oracle_check(a: OracleCheck) -> Outcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut failures = 0usize;
    let tolerance;
    match read_input(&a.input)? {
        Input::Distribution(dist) => {
            tolerance = a.tolerance.unwrap_or(1e-9);
            let query = query_for(&dist, a.query)?;
            let opts = SearchOptions { gamma: a.gamma.into(), ..SearchOptions::default() };
            let (g, _) = full_space_search(&dist, &query, a.lambda, &opts)?;
            for &(node, chain) in g.nodes() {
                let o = pdp_exact_discrete(&dist, &query, a.lambda, node.attack, &node.prior_indices())?;
                let pass = o.leakage <= chain + tolerance;
                failures += usize::from(!pass);
                rows.push(json!({"node": node_json(node), "computed": chain, "exact": o.leakage, "pass": pass}));
            }
        }
        Input::Model(model) => {
            tolerance = a.tolerance.unwrap_or(1e-3);
            let n = model.n();
            for i in 0..n {
                for mask in 0u32..1 << n {
                    if mask & (1 << i) != 0 {
                        continue;
                    }
                    let node = AdversaryNode { attack: i, prior: mask };
                    let k = node.prior_indices();
                    let closed = leakage_gaussian(&model, i, &k)?;
                    let numeric = pdp_numeric_gaussian(&model, i, &k, DEFAULT_GRID_POINTS)?;
                    let pass = (closed - numeric).abs() <= tolerance;
                    failures += usize::from(!pass);
                    rows.push(json!({"node": node_json(node), "computed": closed, "exact": numeric, "pass": pass}));
                }
            }
        }
    }
    let v = json!({
        "tolerance": tolerance,
        "checked": rows.len(),
        "failures": failures,
        "elapsed_secs": start.elapsed().as_secs_f64(),
        "rows": rows,
        "invocation": invocation(),
    });
    emit_json(&v, a.out.as_deref())?;
    if failures > 0 {
        eprintln!("oracle-check: {failures} of {} adversaries failed", v["checked"]);
        return Err(Failure::Check);
    }
    Ok(())
}

fn node_json(node: AdversaryNode) -> Value {
    json!([node.attack, node.prior_indices()])
}

fn experiment(a: Experiment) -> Outcome {
    let cfg = ExperimentConfig {
        kind: match a.kind {
            Kind::Discrete => ExperimentKind::Discrete,
            Kind::Gaussian => ExperimentKind::Gaussian,
        },
        n: a.n,
        aver_corr: a.aver_corr,
        seeds: a.seeds,
        layers: a.layers,
        run_full: a.algorithms.iter().any(|m| matches!(m, Mode::Full)),
        run_fast: a.algorithms.iter().any(|m| matches!(m, Mode::Fast)),
        beta_alpha: a.beta_alpha,
        range: a.range,
        lambda: a.lambda,
        search: SearchOptions { force: a.force, ..SearchOptions::default() },
    };
    if cfg.seeds == 0 {
        return Err(Failure::Usage("--seeds must be at least 1".into()));
    }
    let rows = run_experiment(&cfg)?;
    emit(to_csv(&rows).trim_end(), a.out.as_deref())?;
    Ok(())
}

fn calibrate(a: Calibrate) -> Outcome {
    let c = match read_input(&a.input)? {
        Input::Distribution(dist) => {
            let query = query_for(&dist, a.query)?;
            let backend = match a.backend {
                Backend::Full => DiscreteBackend::Full,
                Backend::Fast => DiscreteBackend::Fast,
                Backend::Oracle => DiscreteBackend::Oracle,
            };
            calibrate_discrete(&dist, &query, a.epsilon, backend, &SearchOptions::default())?
        }
        Input::Model(model) => calibrate_gaussian(&model, a.epsilon, DEFAULT_GAUSSIAN_CAP)?,
    };
    let mut v = serde_json::to_value(&c).expect("serializes");
    v["invocation"] = json!(invocation());
    emit_json(&v, a.out.as_deref())?;
    Ok(())
}

fn generate(g: Generate) -> Outcome {
    match g {
        Generate::Whg { n, aver_corr, seed, beta_alpha, out } => {
            emit_json(&gen_whg_edges(n, aver_corr, seed, beta_alpha)?.to_json(), out.as_deref())?;
        }
        Generate::Covariance { n, aver_coeff, range, lambda, out } => {
            let m = GaussianModel::new(vec![0.0; n], gen_covariance(n, aver_coeff)?, range, lambda)?;
            emit(&model_json(&m), out.as_deref())?;
        }
        Generate::Discrete { n, aver_corr, domain_size, seed, out } => {
            let (d, info) = gen_discrete_corr(n, aver_corr, domain_size, seed)?;
            if !info.converged {
                eprintln!(
                    "warning: reached average correlation {:.4}, target was {aver_corr}",
                    info.achieved
                );
            }
            emit(&distribution_json(&d), out.as_deref())?;
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("PDP_THREADS") else {
        return Ok(());
    };
    let threads: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Usage(format!("PDP_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::AnalyzeDiscrete(a) => analyze_discrete(a),
        Command::AnalyzeSynthetic(a) => analyze_synthetic(a),
        Command::AnalyzeGaussian(a) => analyze_gaussian(a),
        Command::OracleCheck(a) => oracle_check(a),
        Command::Experiment(a) => experiment(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Generate(g) => generate(g),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Pdp(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
