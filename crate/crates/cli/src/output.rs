//! Stable output formats.
//!
//! CSV schemas are frozen: column names, order, 6-decimal fixed-point
//! numbers, '.' separator, newline-terminated rows. Booleans are
//! "true"/"false"; undefined diagnostics are "NaN". The `run` column is
//! 0-based, `episode` 1-based.

use anyhow::{bail, Context, Result};
use sspbandit::{AggregateResult, Algorithm, ExperimentConfig, RunResult, StochasticGraph};

pub const EPISODES_HEADER: &str = "run,episode,regret,cumulative_regret,average_regret,v_origin,steps,truncated,price_of_optimism,bellman_error";
pub const EDGES_HEADER: &str = "run,edge_index,source,target,samples";
pub const SUMMARY_HEADER: &str =
    "algo,runs,episodes,mean_final_avg_regret,std_final_avg_regret,mean_v_origin,mean_wall_clock_s";

/// Per-episode series of every run.
pub fn episodes_csv(results: &[RunResult]) -> String {
    let mut out = String::from(EPISODES_HEADER);
    out.push('\n');
    for (run, result) in results.iter().enumerate() {
        for episode in 0..result.per_episode_regret.len() {
            out.push_str(&format!(
                "{run},{episode_number},{regret:.6},{cumulative:.6},{average:.6},{v_origin:.6},{steps},{truncated},{price:.6},{bellman:.6}\n",
                episode_number = episode + 1,
                regret = result.per_episode_regret[episode],
                cumulative = result.cumulative_regret[episode],
                average = result.average_regret[episode],
                v_origin = result.v_origin_series[episode],
                steps = result.steps_series[episode],
                truncated = result.truncated_series[episode],
                price = result.price_of_optimism_series[episode],
                bellman = result.bellman_error_series[episode],
            ));
        }
    }
    out
}

/// Final sample count of every edge in every run.
pub fn edges_csv(graph: &StochasticGraph, results: &[RunResult]) -> String {
    let mut out = String::from(EDGES_HEADER);
    out.push('\n');
    for (run, result) in results.iter().enumerate() {
        for edge in graph.edges() {
            out.push_str(&format!(
                "{run},{index},{source},{target},{samples}\n",
                index = edge.edge_index,
                source = edge.source,
                target = edge.target,
                samples = result.edge_sample_counts[edge.edge_index],
            ));
        }
    }
    out
}

/// One summary line of an experiment.
pub struct SummaryRow {
    pub algo: Algorithm,
    pub runs: usize,
    pub episodes: usize,
    pub mean_final_avg_regret: f64,
    pub std_final_avg_regret: f64,
    pub mean_v_origin: f64,
    pub mean_wall_clock_s: f64,
}

impl SummaryRow {
    pub fn new(algo: Algorithm, config: &ExperimentConfig, agg: &AggregateResult) -> Self {
        SummaryRow {
            algo,
            runs: config.runs,
            episodes: config.episodes,
            mean_final_avg_regret: agg.mean_final_average_regret,
            std_final_avg_regret: agg.std_final_average_regret,
            mean_v_origin: agg.mean_final_v_origin,
            mean_wall_clock_s: agg.mean_wall_clock_seconds,
        }
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            row.algo,
            row.runs,
            row.episodes,
            row.mean_final_avg_regret,
            row.std_final_avg_regret,
            row.mean_v_origin,
            row.mean_wall_clock_s,
        ));
    }
    out
}

/// Reads an `edges.csv` back and sums the sample counts per edge over all
/// runs, validating every row against the graph.
pub fn parse_edge_samples(graph: &StochasticGraph, csv: &str) -> Result<Vec<u64>> {
    let mut lines = csv.lines();
    match lines.next() {
        Some(header) if header == EDGES_HEADER => {}
        Some(header) => bail!("unexpected header {header:?}, expected {EDGES_HEADER:?}"),
        None => bail!("empty edges file"),
    }
    let mut samples = vec![0u64; graph.edge_count()];
    for (number, line) in lines.enumerate() {
        let row = number + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            bail!("row {row}: expected 5 fields, got {}", fields.len());
        }
        let edge_index: usize = fields[1].parse().with_context(|| format!("row {row}: edge_index"))?;
        let source: usize = fields[2].parse().with_context(|| format!("row {row}: source"))?;
        let target: usize = fields[3].parse().with_context(|| format!("row {row}: target"))?;
        let count: u64 = fields[4].parse().with_context(|| format!("row {row}: samples"))?;
        if edge_index >= graph.edge_count() {
            bail!("row {row}: edge_index {edge_index} out of range for {} edges", graph.edge_count());
        }
        let edge = graph.edge(edge_index);
        if edge.source.index() != source || edge.target.index() != target {
            bail!(
                "row {row}: edge {edge_index} is {} -> {} in the graph, {source} -> {target} in the file",
                edge.source,
                edge.target
            );
        }
        samples[edge_index] += count;
    }
    Ok(samples)
}

/// Renders the graph as DOT. Edge width scales linearly with the sample
/// count: 1 for an unsampled edge up to 8 for the most-sampled one.
pub fn dot_document(graph: &StochasticGraph, samples: &[u64]) -> String {
    let max = samples.iter().copied().max().unwrap_or(0);
    let mut out = String::from("digraph network {\n  rankdir=LR;\n");
    out.push_str(&format!(
        "  {} [shape=doublecircle, label=\"{} (origin)\"];\n",
        graph.origin(),
        graph.origin()
    ));
    out.push_str(&format!(
        "  {} [shape=doublecircle, label=\"{} (destination)\"];\n",
        graph.destination(),
        graph.destination()
    ));
    for edge in graph.edges() {
        let count = samples[edge.edge_index];
        let width = if max == 0 {
            1.0
        } else {
            1.0 + 7.0 * count as f64 / max as f64
        };
        out.push_str(&format!(
            "  {} -> {} [penwidth={width:.3}, label=\"{count}\"];\n",
            edge.source, edge.target
        ));
    }
    out.push_str("}\n");
    out
}
