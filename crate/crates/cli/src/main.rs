use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cvxcluster::alm::{solve, SolverConfig};
use cvxcluster::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use cvxcluster::certificate::{build_certificate, check_certificate};
use cvxcluster::estimation::estimate_parameters;
use cvxcluster::graphmodel::{complement_graph, components_assignment, generate_gsbm, round_by_mean, GsbmParams};
use cvxcluster::harness::{rows_to_csv, run_sweep, SweepSpec};
use cvxcluster::io as graph_io;
use cvxcluster::objective::make_weights;

#[derive(Parser, Debug)]
#[command(name = "cvxcluster", version, about = "Convex graph clustering under the generalized stochastic blockmodel")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Random seed [default: 0]; overrides a sweep config's seed when given.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Regularization scale, the nuclear-norm weight being rho·√n
    /// [default: 1]; overrides a sweep config's rho when given.
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a blockmodel graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Cluster a graph with the convex method and write the labels.
    Solve(SolveArgs),
    /// Estimate r, K, p, q and t from a graph's spectrum.
    Estimate(GraphArg),
    /// Build and check the optimality certificate for a planted partition.
    Certify(CertifyArgs),
    /// Run a phase-transition sweep from a JSON config and write CSV.
    Sweep(SweepArgs),
    /// Cluster a graph with a comparison method and write the labels.
    Baselines(BaselineArgs),
}

#[derive(Args, Debug)]
struct GraphArg {
    /// Edge-list file.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Comma-separated cluster sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// Also write the planted labels here.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Resolution threshold; estimated from the spectrum when omitted.
    #[arg(long)]
    t: Option<f64>,
    /// Cluster by missing edges (p < q) via the complement graph.
    #[arg(long)]
    heterophily: bool,
    #[arg(long, default_value_t = cvxcluster::alm::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Expected number of clusters, used to speed up the solver.
    #[arg(long)]
    rank_hint: Option<usize>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Planted labels, one per line (0 = outlier).
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    t: f64,
    /// Perturbation size; the default formula applies when omitted.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON sweep specification.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// One of slink, spectral, lrps.
    #[arg(long)]
    method: BaselineMethod,
    /// Number of clusters (slink, spectral).
    #[arg(long, default_value_t = 1)]
    r: usize,
    #[arg(long, default_value_t = cvxcluster::baselines::DEFAULT_LRPS_LAMBDA_SCALE)]
    lambda_scale: f64,
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_graph(path: &Path) -> Result<cvxcluster::graphmodel::Adjacency> {
    graph_io::read_graph(path).with_context(|| format!("reading graph {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let Common { seed: seed_arg, rho: rho_arg, out } = cli.common;
    let seed = seed_arg.unwrap_or(0);
    let rho = rho_arg.unwrap_or(1.0);
    match cli.command {
        Command::Generate(args) => {
            let params = GsbmParams::new(args.sizes, args.outliers, args.p, args.q)?;
            let inst = generate_gsbm(&params, seed);
            emit(&out, &graph_io::format_graph(&inst.adjacency))?;
            if let Some(path) = args.truth_out {
                graph_io::write_assignment(&inst.assignment, &path)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Solve(args) => {
            let a = read_graph(&args.graph.graph)?;
            let graph = if args.heterophily { complement_graph(&a) } else { a };
            let t = match args.t {
                Some(t) => t,
                None => estimate_parameters(&graph)?.t,
            };
            let mut cfg = SolverConfig::new(make_weights(t, graph.n(), rho)?);
            cfg.max_iter = args.max_iter;
            cfg.svd_rank_hint = args.rank_hint;
            let result = solve(&graph, &cfg)?;
            let labels = components_assignment(&round_by_mean(&result.y_hat));
            emit(&out, &graph_io::format_assignment(&labels))?;
            eprintln!(
                "t={t} iterations={} converged={} primal_residual={:e} objective={} clusters={}",
                result.iterations,
                result.converged,
                result.primal_residual,
                result.objective,
                labels.r()
            );
        }
        Command::Estimate(args) => {
            let a = read_graph(&args.graph)?;
            let est = estimate_parameters(&a)?;
            emit(&out, &(serde_json::to_string_pretty(&est)? + "\n"))?;
        }
        Command::Certify(args) => {
            let a = read_graph(&args.graph.graph)?;
            let truth = graph_io::read_assignment(&args.truth)
                .with_context(|| format!("reading labels {}", args.truth.display()))?;
            if truth.n() != a.n() {
                bail!("labels cover {} nodes but the graph has {}", truth.n(), a.n());
            }
            let w = make_weights(args.t, a.n(), rho)?;
            let cert = build_certificate(&a, &truth.cluster_matrix(), &w, args.p, args.q, args.epsilon)?;
            emit(&out, &check_certificate(&cert, &w)?.to_string())?;
        }
        Command::Sweep(args) => {
            let text = fs::read_to_string(&args.config)
                .with_context(|| format!("reading {}", args.config.display()))?;
            let mut spec = SweepSpec::from_json(&text).context("invalid sweep configuration")?;
            spec.seed = seed_arg.unwrap_or(spec.seed);
            spec.rho = rho_arg.unwrap_or(spec.rho);
            spec.validate().context("invalid sweep configuration")?;
            let result = run_sweep(&spec)?;
            emit(&out, &rows_to_csv(&result.rows)?)?;
        }
        Command::Baselines(args) => {
            let a = read_graph(&args.graph.graph)?;
            let cfg = BaselineConfig { method: args.method, r: args.r, lrps_lambda_scale: args.lambda_scale };
            let estimate = run_baseline(&a, &cfg, None)?.estimate();
            emit(&out, &graph_io::format_assignment(&components_assignment(&estimate)))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
