//! Command-line front end: generate networks, solve them exactly, run and
//! compare learning experiments, and export sampling-weighted graphs.
//!
//! Exit codes: 0 on success, 1 on runtime or validation failures, 2 on
//! usage errors (unknown flags, out-of-range values).

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sspbandit::{
    aggregate, generate_network, load_graph, run_experiment, solve_exact, Algorithm,
    ExperimentConfig, StochasticGraph, UpdateRule,
};

use output::{dot_document, edges_csv, episodes_csv, summary_csv, SummaryRow};

#[derive(Parser)]
#[command(
    name = "sspbandit",
    version,
    about = "Online-learning shortest-path benchmark harness",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random network document
    Generate(GenerateArgs),
    /// Solve a network exactly and print the optimal value and path
    Oracle(OracleArgs),
    /// Run one learning experiment and write CSV results
    Run(RunArgs),
    /// Run all four algorithms under one config and tabulate the results
    Compare(CompareArgs),
    /// Export a network as DOT with edge widths from sample counts
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of nodes; node 0 is the origin, the last node the destination
    #[arg(long, default_value_t = 22, value_parser = clap::value_parser!(u64).range(2..))]
    nodes: u64,
    /// Average number of outgoing edges per non-destination node
    #[arg(long, default_value_t = 3.0)]
    connectivity: f64,
    /// Lower bound of the uniform edge-mean range
    #[arg(long, default_value_t = 5.0)]
    mean_min: f64,
    /// Upper bound of the uniform edge-mean range
    #[arg(long, default_value_t = 30.0)]
    mean_max: f64,
    /// Cost variance shared by all edges
    #[arg(long, default_value_t = 2.0)]
    variance: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output path of the graph document
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Path of the graph document
    #[arg(long)]
    graph: PathBuf,
    /// Also print the full per-node value table
    #[arg(long)]
    full: bool,
}

/// Experiment settings shared by `run` and `compare`.
#[derive(Args)]
struct ExperimentOpts {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
    episodes: u64,
    /// Convergence threshold of the value-iteration planner
    #[arg(long, default_value_t = 1e-3)]
    theta: f64,
    /// UCB exploration coefficient c
    #[arg(long, default_value_t = 2.0)]
    coefficient: f64,
    /// Exploration probability of the epsilon-greedy variant
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Step cap per episode; defaults to 10x the node count
    #[arg(long)]
    l_max: Option<usize>,
    /// Base seed; per-run seeds are derived from it
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Value refresh rule: full-min or monotone
    #[arg(long, default_value = "full-min", value_parser = UpdateRule::from_str)]
    update_rule: UpdateRule,
    /// Execute runs on all cores. Results are identical to serial mode,
    /// but per-run wall-clock becomes incomparable across algorithms
    #[arg(long)]
    parallel: bool,
}

impl ExperimentOpts {
    fn to_config(&self, algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            runs: self.runs as usize,
            episodes: self.episodes as usize,
            theta: self.theta,
            exploration_coefficient: self.coefficient,
            epsilon: self.epsilon,
            l_max: self.l_max,
            base_seed: self.seed,
            update_rule: self.update_rule,
            parallel: self.parallel,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Algorithm: rtdp-ucb, rtdp-standard, rtdp-eps, or vi-ucb
    #[arg(long, value_parser = Algorithm::from_str)]
    algo: Algorithm,
    #[command(flatten)]
    opts: ExperimentOpts,
    /// Directory for episodes.csv, edges.csv, and summary.csv
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    opts: ExperimentOpts,
    /// Directory for the combined summary.csv
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExportDotArgs {
    #[arg(long)]
    graph: PathBuf,
    /// edges.csv produced by `run`; sample counts are summed over runs
    #[arg(long)]
    edges: PathBuf,
    /// Output path of the DOT document
    #[arg(long)]
    out: PathBuf,
}

/// Dies quietly when a pipe consumer closes early (`oracle --full | head`),
/// like standard stream tools, instead of panicking on EPIPE.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::ExportDot(args) => cmd_export_dot(args),
    }
}

fn read_graph(path: &PathBuf) -> Result<StochasticGraph> {
    let document =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_graph(&document).with_context(|| format!("loading {}", path.display()))
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let graph = generate_network(
        args.nodes as usize,
        args.connectivity,
        (args.mean_min, args.mean_max),
        args.variance,
        args.seed,
    )?;
    fs::write(&args.out, graph.to_document())
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} ({} nodes, {} edges)",
        args.out.display(),
        graph.node_count(),
        graph.edge_count()
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let solution = solve_exact(&graph)?;
    let path = solution
        .optimal_path
        .iter()
        .map(|node| node.to_string())
        .collect::<Vec<_>>()
        .join(" -> ");
    println!("V*={:.6}, path: {}", solution.optimal_cost, path);
    if args.full {
        println!("node,value");
        for (node, value) in solution.values.iter().enumerate() {
            println!("{node},{value:.6}");
        }
    }
    Ok(())
}

/// Writes the named files into `dir`, removing everything already written
/// if any single write fails.
fn write_files(dir: &PathBuf, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    for (name, content) in files {
        let path = dir.join(name);
        if let Err(error) = fs::write(&path, content) {
            let _ = fs::remove_file(&path);
            for earlier in &written {
                let _ = fs::remove_file(earlier);
            }
            return Err(error).with_context(|| format!("writing {}", path.display()));
        }
        written.push(path);
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let config = args.opts.to_config(args.algo);
    let results = run_experiment(&config, &graph)?;
    let agg = aggregate(&results)?;
    let summary = vec![SummaryRow::new(args.algo, &config, &agg)];
    write_files(
        &args.out_dir,
        &[
            ("episodes.csv", episodes_csv(&results)),
            ("edges.csv", edges_csv(&graph, &results)),
            ("summary.csv", summary_csv(&summary)),
        ],
    )?;
    println!(
        "{}: {} runs x {} episodes, mean final avg regret {:.6}, mean V(origin) {:.6}",
        args.algo, config.runs, config.episodes, agg.mean_final_average_regret, agg.mean_final_v_origin
    );
    println!("wrote episodes.csv, edges.csv, summary.csv to {}", args.out_dir.display());
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let mut rows = Vec::new();
    for algorithm in Algorithm::all() {
        let config = args.opts.to_config(algorithm);
        let results = run_experiment(&config, &graph)?;
        let agg = aggregate(&results)?;
        rows.push(SummaryRow::new(algorithm, &config, &agg));
    }
    write_files(&args.out_dir, &[("summary.csv", summary_csv(&rows))])?;

    println!(
        "{:<14} {:>12} {:>16} {:>14}",
        "algo", "Time (s)", "Est. V(origin)", "Avg. Regret"
    );
    for row in &rows {
        println!(
            "{:<14} {:>12.6} {:>16.6} {:>14.6}",
            row.algo.to_string(),
            row.mean_wall_clock_s,
            row.mean_v_origin,
            row.mean_final_avg_regret
        );
    }
    println!("wrote summary.csv to {}", args.out_dir.display());
    Ok(())
}

fn cmd_export_dot(args: ExportDotArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let csv = fs::read_to_string(&args.edges)
        .with_context(|| format!("reading {}", args.edges.display()))?;
    let samples = output::parse_edge_samples(&graph, &csv)
        .with_context(|| format!("parsing {}", args.edges.display()))?;
    fs::write(&args.out, dot_document(&graph, &samples))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(())
}
