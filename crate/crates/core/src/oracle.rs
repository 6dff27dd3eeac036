//! Ground-truth optimal values and paths over expected edge costs.
//!
//! Transitions are deterministic and expected costs strictly positive, so
//! label-setting shortest-path search over the edge means is exact:
//! [`solve_exact`] computes the optimal expected cost-to-go for every
//! node plus the tie-broken optimal path. [`enumerate_paths`] is the
//! independent brute-force check — it lists every simple origin-to-
//! destination path with its exact expected cost.
//!
//! Both accumulate path costs back-to-front (destination toward origin),
//! so on the same path they produce bit-identical sums.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::graph::{NodeId, StochasticGraph};

/// Exact solution of the expected-cost shortest path problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    /// Expected cost-to-go per node; infinite where the destination is
    /// unreachable (possible only for nodes the origin cannot reach).
    pub values: Vec<f64>,
    /// Minimal-expected-cost origin-to-destination path, ties broken by
    /// smallest `edge_index` at each step.
    pub optimal_path: Vec<NodeId>,
    /// Expected cost of `optimal_path`; equals `values[origin]`.
    pub optimal_cost: f64,
    /// Whether the optimal path is the only one achieving `optimal_cost`.
    pub unique_optimum: bool,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("edge {edge_index} has non-positive mean {mean}; exact solve requires strictly positive expected costs")]
    NonPositiveMean { edge_index: usize, mean: f64 },
    #[error("internal error: destination unreachable from origin in a validated graph")]
    DestinationUnreachable,
    #[error("internal error: optimal path extraction exceeded {0} steps")]
    PathExtractionCycled(usize),
    #[error("simple path count exceeds limit {max_paths}")]
    PathCountOverflow { max_paths: usize },
}

/// Min-heap entry ordered by cost, then node id for determinism.
#[derive(PartialEq)]
struct QueueEntry {
    cost: f64,
    node: usize,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Computes optimal expected values for all nodes and the tie-broken
/// optimal path, by Dijkstra search from the destination over reversed
/// edges weighted with the means.
///
/// Requires strictly positive edge means (guaranteed for Gaussian edges
/// by graph validation; deterministic zero-cost edges are rejected here).
pub fn solve_exact(graph: &StochasticGraph) -> Result<OptimalSolution, OracleError> {
    for edge in graph.edges() {
        let mean = edge.distribution.mean();
        if mean <= 0.0 {
            return Err(OracleError::NonPositiveMean {
                edge_index: edge.edge_index,
                mean,
            });
        }
    }

    let n = graph.node_count();
    let destination = graph.destination().index();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for edge in graph.edges() {
        reverse[edge.target.index()].push(edge.edge_index);
    }

    let mut values = vec![f64::INFINITY; n];
    values[destination] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(QueueEntry {
        cost: 0.0,
        node: destination,
    });
    while let Some(QueueEntry { cost, node }) = heap.pop() {
        if cost > values[node] {
            continue;
        }
        for &edge_index in &reverse[node] {
            let edge = graph.edge(edge_index);
            let candidate = edge.distribution.mean() + cost;
            let source = edge.source.index();
            if candidate < values[source] {
                values[source] = candidate;
                heap.push(QueueEntry {
                    cost: candidate,
                    node: source,
                });
            }
        }
    }

    if values[graph.origin().index()].is_infinite() {
        return Err(OracleError::DestinationUnreachable);
    }

    let optimal_path = extract_optimal_path(graph, &values)?;
    let optimal_cost = values[graph.origin().index()];
    let unique_optimum = count_optimal_paths(graph, &values) == 1;

    Ok(OptimalSolution {
        values,
        optimal_path,
        optimal_cost,
        unique_optimum,
    })
}

/// Follows the greedy successor from the origin: at each node, the
/// outgoing edge minimizing mean + value of the target, smallest
/// `edge_index` first on exact ties. Positive means make the value
/// strictly decrease along the path, so this terminates within
/// `node_count` steps.
fn extract_optimal_path(
    graph: &StochasticGraph,
    values: &[f64],
) -> Result<Vec<NodeId>, OracleError> {
    let mut path = vec![graph.origin()];
    let mut current = graph.origin();
    let max_steps = graph.node_count();
    for _ in 0..max_steps {
        if current == graph.destination() {
            return Ok(path);
        }
        let mut best: Option<(f64, usize)> = None;
        for &edge_index in graph.outgoing(current) {
            let edge = graph.edge(edge_index);
            let q = edge.distribution.mean() + values[edge.target.index()];
            match best {
                Some((best_q, _)) if q >= best_q => {}
                _ => best = Some((q, edge_index)),
            }
        }
        let (_, edge_index) = best.ok_or(OracleError::DestinationUnreachable)?;
        current = graph.edge(edge_index).target;
        path.push(current);
    }
    if current == graph.destination() {
        Ok(path)
    } else {
        Err(OracleError::PathExtractionCycled(max_steps))
    }
}

/// Counts origin-to-destination paths along value-tight edges, saturating
/// at 2 (only uniqueness matters). Tight edges strictly decrease the
/// value, so the tight subgraph is acyclic.
fn count_optimal_paths(graph: &StochasticGraph, values: &[f64]) -> u64 {
    fn visit(graph: &StochasticGraph, values: &[f64], node: usize, memo: &mut [Option<u64>]) -> u64 {
        if node == graph.destination().index() {
            return 1;
        }
        if let Some(count) = memo[node] {
            return count;
        }
        let mut count: u64 = 0;
        for &edge_index in graph.outgoing(NodeId(node)) {
            let edge = graph.edge(edge_index);
            let target = edge.target.index();
            if values[target].is_finite()
                && edge.distribution.mean() + values[target] == values[node]
            {
                count = count.saturating_add(visit(graph, values, target, memo));
                if count >= 2 {
                    count = 2;
                    break;
                }
            }
        }
        memo[node] = Some(count);
        count
    }
    let mut memo = vec![None; graph.node_count()];
    visit(graph, values, graph.origin().index(), &mut memo)
}

/// Enumerates every simple origin-to-destination path with its exact
/// expected cost, sorted ascending by cost and then lexicographically by
/// node sequence.
///
/// Errors with [`OracleError::PathCountOverflow`] as soon as more than
/// `max_paths` paths exist.
pub fn enumerate_paths(
    graph: &StochasticGraph,
    max_paths: usize,
) -> Result<Vec<(Vec<NodeId>, f64)>, OracleError> {
    let mut paths = Vec::new();
    let mut node_stack = vec![graph.origin()];
    let mut edge_stack: Vec<usize> = Vec::new();
    let mut on_path = vec![false; graph.node_count()];
    on_path[graph.origin().index()] = true;

    dfs(
        graph,
        max_paths,
        &mut node_stack,
        &mut edge_stack,
        &mut on_path,
        &mut paths,
    )?;

    paths.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(paths)
}

fn dfs(
    graph: &StochasticGraph,
    max_paths: usize,
    node_stack: &mut Vec<NodeId>,
    edge_stack: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    paths: &mut Vec<(Vec<NodeId>, f64)>,
) -> Result<(), OracleError> {
    let current = *node_stack.last().expect("non-empty path stack");
    if current == graph.destination() {
        if paths.len() == max_paths {
            return Err(OracleError::PathCountOverflow { max_paths });
        }
        // Back-to-front accumulation, matching the solver.
        let cost = edge_stack
            .iter()
            .rev()
            .fold(0.0, |acc, &e| graph.edge(e).distribution.mean() + acc);
        paths.push((node_stack.clone(), cost));
        return Ok(());
    }
    for &edge_index in graph.outgoing(current) {
        let target = graph.edge(edge_index).target;
        if on_path[target.index()] {
            continue;
        }
        on_path[target.index()] = true;
        node_stack.push(target);
        edge_stack.push(edge_index);
        let result = dfs(graph, max_paths, node_stack, edge_stack, on_path, paths);
        edge_stack.pop();
        node_stack.pop();
        on_path[target.index()] = false;
        result?;
    }
    Ok(())
}
