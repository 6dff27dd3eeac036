//! The stochastic road-network environment.
//!
//! A [`StochasticGraph`] is a validated, immutable directed graph with one
//! cost distribution per edge. Construction is sealed: every graph comes
//! from [`StochasticGraph::from_parts`] (directly, via [`load_graph`], or
//! via [`generate_network`]) and therefore satisfies all structural
//! invariants — no self-loops, dense edge indices, and a destination that
//! is reachable from every node the origin can reach.
//!
//! Randomness is confined to [`SampleStream`], a seeded generator owned by
//! a single run. Identical seed and identical call sequence produce a
//! bit-identical sample sequence.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node (intersection) within its owning graph.
///
/// Valid ids are `0..graph.node_count()`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cost distribution of a single road segment, in seconds of travel time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostDistribution {
    /// Travel time drawn from a normal distribution (samples are clamped
    /// at zero on draw). Requires `mean > 0` and `variance >= 0`.
    Gaussian { mean: f64, variance: f64 },
    /// Fixed travel time, `value >= 0`. Useful for tests where exact
    /// convergence can be checked.
    Deterministic { value: f64 },
}

impl CostDistribution {
    /// Expected value of the distribution (clamping bias ignored).
    pub fn mean(&self) -> f64 {
        match *self {
            CostDistribution::Gaussian { mean, .. } => mean,
            CostDistribution::Deterministic { value } => value,
        }
    }
}

/// A directed road segment with an index that is unique and dense in
/// `0..graph.edge_count()`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub distribution: CostDistribution,
    pub edge_index: usize,
}

/// A validated directed graph with stochastic edge costs, an origin, and
/// an absorbing destination.
///
/// Invariants guaranteed by construction:
/// - no self-loops;
/// - `edge_index` equals the edge's position in the edge list;
/// - every node reachable from the origin can reach the destination;
/// - adjacency lists are sorted by `edge_index`, fixing iteration order.
///
/// The destination is absorbing: episodes end on arrival, so outgoing
/// edges of the destination (if any) are never traversed.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGraph {
    nodes: usize,
    edges: Vec<Edge>,
    origin: NodeId,
    destination: NodeId,
    adjacency: Vec<Vec<usize>>,
}

/// Errors from loading, validating, or generating a graph.
///
/// Every validation variant names the violated invariant and the first
/// offending element.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("graph must have at least one node")]
    NoNodes,
    #[error("node id {node} out of range for {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("self-loop at node {node} (edge {edge_index})")]
    SelfLoop { node: usize, edge_index: usize },
    #[error("non-positive or non-finite mean {mean} on edge {edge_index}")]
    NonPositiveMean { edge_index: usize, mean: f64 },
    #[error("negative or non-finite variance {variance} on edge {edge_index}")]
    InvalidVariance { edge_index: usize, variance: f64 },
    #[error("negative or non-finite deterministic value {value} on edge {edge_index}")]
    NegativeValue { edge_index: usize, value: f64 },
    #[error("destination {destination} unreachable from node {node}")]
    UnreachableDestination { node: usize, destination: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidGeneratorParams(String),
    #[error("network generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
}

impl StochasticGraph {
    /// Builds and validates a graph from its raw parts.
    ///
    /// Edge indices are assigned densely in list order. Returns the first
    /// violated invariant as a [`GraphError`].
    pub fn from_parts(
        nodes: usize,
        origin: NodeId,
        destination: NodeId,
        edge_specs: Vec<(NodeId, NodeId, CostDistribution)>,
    ) -> Result<Self, GraphError> {
        if nodes == 0 {
            return Err(GraphError::NoNodes);
        }
        for endpoint in [origin, destination] {
            if endpoint.index() >= nodes {
                return Err(GraphError::NodeOutOfRange {
                    node: endpoint.index(),
                    nodes,
                });
            }
        }

        let mut edges = Vec::with_capacity(edge_specs.len());
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for (edge_index, (source, target, distribution)) in edge_specs.into_iter().enumerate() {
            for endpoint in [source, target] {
                if endpoint.index() >= nodes {
                    return Err(GraphError::NodeOutOfRange {
                        node: endpoint.index(),
                        nodes,
                    });
                }
            }
            if source == target {
                return Err(GraphError::SelfLoop {
                    node: source.index(),
                    edge_index,
                });
            }
            match distribution {
                CostDistribution::Gaussian { mean, variance } => {
                    if !(mean > 0.0 && mean.is_finite()) {
                        return Err(GraphError::NonPositiveMean { edge_index, mean });
                    }
                    if !(variance >= 0.0 && variance.is_finite()) {
                        return Err(GraphError::InvalidVariance {
                            edge_index,
                            variance,
                        });
                    }
                }
                CostDistribution::Deterministic { value } => {
                    if !(value >= 0.0 && value.is_finite()) {
                        return Err(GraphError::NegativeValue { edge_index, value });
                    }
                }
            }
            adjacency[source.index()].push(edge_index);
            edges.push(Edge {
                source,
                target,
                distribution,
                edge_index,
            });
        }

        let graph = StochasticGraph {
            nodes,
            edges,
            origin,
            destination,
            adjacency,
        };
        graph.check_destination_reachability()?;
        Ok(graph)
    }

    /// Every node reachable from the origin must be able to reach the
    /// destination. This also rules out reachable dead ends.
    fn check_destination_reachability(&self) -> Result<(), GraphError> {
        let forward = self.reachable_from(self.origin);
        let backward = self.co_reachable_to(self.destination);
        for node in 0..self.nodes {
            if forward[node] && !backward[node] {
                return Err(GraphError::UnreachableDestination {
                    node,
                    destination: self.destination.index(),
                });
            }
        }
        Ok(())
    }

    fn reachable_from(&self, start: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![start.index()];
        seen[start.index()] = true;
        while let Some(node) = stack.pop() {
            for &edge_index in &self.adjacency[node] {
                let next = self.edges[edge_index].target.index();
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        seen
    }

    fn co_reachable_to(&self, goal: NodeId) -> Vec<bool> {
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); self.nodes];
        for edge in &self.edges {
            reverse[edge.target.index()].push(edge.source.index());
        }
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![goal.index()];
        seen[goal.index()] = true;
        while let Some(node) = stack.pop() {
            for &prev in &reverse[node] {
                if !seen[prev] {
                    seen[prev] = true;
                    stack.push(prev);
                }
            }
        }
        seen
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, edge_index: usize) -> &Edge {
        &self.edges[edge_index]
    }

    pub fn origin(&self) -> NodeId {
        self.origin
    }

    pub fn destination(&self) -> NodeId {
        self.destination
    }

    /// Outgoing edge indices of `node`, sorted ascending by `edge_index`.
    pub fn outgoing(&self, node: NodeId) -> &[usize] {
        &self.adjacency[node.index()]
    }

    /// Serializes the graph to its canonical JSON document form.
    ///
    /// The output is deterministic: equal graphs produce byte-identical
    /// documents.
    pub fn to_document(&self) -> String {
        let doc = GraphDocument {
            nodes: self.nodes,
            origin: self.origin.index(),
            destination: self.destination.index(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    source: e.source.index(),
                    target: e.target.index(),
                    dist: e.distribution,
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("graph document serialization");
        text.push('\n');
        text
    }
}

/// On-disk graph document. Field names are part of the format.
#[derive(Serialize, Deserialize)]
struct GraphDocument {
    nodes: usize,
    origin: usize,
    destination: usize,
    edges: Vec<EdgeRecord>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    source: usize,
    target: usize,
    dist: CostDistribution,
}

/// Parses and validates a UTF-8 JSON graph document.
///
/// Edge indices are assigned densely in document order.
pub fn load_graph(document: &str) -> Result<StochasticGraph, GraphError> {
    let doc: GraphDocument = serde_json::from_str(document)?;
    StochasticGraph::from_parts(
        doc.nodes,
        NodeId(doc.origin),
        NodeId(doc.destination),
        doc.edges
            .into_iter()
            .map(|e| (NodeId(e.source), NodeId(e.target), e.dist))
            .collect(),
    )
}

/// Seeded random stream for one experiment run.
///
/// Single-owner mutable state: one stream per run, never shared. The
/// generator is a fixed algorithm (ChaCha8), so a seed plus a call
/// sequence reproduces the exact sample sequence on any platform.
#[derive(Debug, Clone)]
pub struct SampleStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64) -> Self {
        SampleStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Draws one cost realization, clamped at zero.
    ///
    /// Deterministic distributions consume no generator state.
    pub fn draw(&mut self, distribution: &CostDistribution) -> f64 {
        let raw = match *distribution {
            CostDistribution::Deterministic { value } => value,
            CostDistribution::Gaussian { mean, variance } => {
                let normal =
                    Normal::new(mean, variance.sqrt()).expect("validated distribution parameters");
                normal.sample(&mut self.rng)
            }
        };
        raw.max(0.0)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn pick(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Draws one cost realization for `edge_index`, clamped at zero.
///
/// Panics if `edge_index` is out of range.
pub fn sample_cost(graph: &StochasticGraph, edge_index: usize, stream: &mut SampleStream) -> f64 {
    stream.draw(&graph.edge(edge_index).distribution)
}

/// Generates a random road network with Gaussian edge costs.
///
/// Node `0` is the origin and node `nodes - 1` the destination. A chain
/// through a shuffled permutation of all intermediate nodes guarantees
/// that every node is reachable from the origin and reaches the
/// destination; extra edges are then added until the graph has roughly
/// `connectivity` outgoing edges per non-destination node. Edge means are
/// drawn uniformly from `mean_range`, all with the given `variance`.
///
/// Deterministic: the same arguments and seed produce an identical graph.
pub fn generate_network(
    nodes: usize,
    connectivity: f64,
    mean_range: (f64, f64),
    variance: f64,
    seed: u64,
) -> Result<StochasticGraph, GraphError> {
    let (mean_min, mean_max) = mean_range;
    if nodes < 2 {
        return Err(GraphError::InvalidGeneratorParams(format!(
            "nodes must be >= 2, got {nodes}"
        )));
    }
    if !(connectivity >= 1.0 && connectivity.is_finite()) {
        return Err(GraphError::InvalidGeneratorParams(format!(
            "connectivity must be >= 1, got {connectivity}"
        )));
    }
    if !(mean_min > 0.0 && mean_min <= mean_max && mean_max.is_finite()) {
        return Err(GraphError::InvalidGeneratorParams(format!(
            "mean range must satisfy 0 < min <= max, got [{mean_min}, {mean_max}]"
        )));
    }
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(GraphError::InvalidGeneratorParams(format!(
            "variance must be >= 0, got {variance}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_edges = ((nodes - 1) as f64 * connectivity).round() as usize;
    const MAX_ATTEMPTS: usize = 8;

    for _ in 0..MAX_ATTEMPTS {
        // Backbone: origin -> shuffled intermediates -> destination.
        let mut order: Vec<usize> = (1..nodes - 1).collect();
        order.shuffle(&mut rng);
        let mut chain = Vec::with_capacity(nodes);
        chain.push(0);
        chain.extend(order);
        chain.push(nodes - 1);

        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for window in chain.windows(2) {
            pairs.insert((window[0], window[1]));
        }

        // Shortcut edges. The destination gets no outgoing edges; they
        // would never be traversed.
        let mut budget = 50 * target_edges.max(1);
        while pairs.len() < target_edges && budget > 0 {
            budget -= 1;
            let source = rng.random_range(0..nodes - 1);
            let target = rng.random_range(0..nodes);
            if source == target {
                continue;
            }
            pairs.insert((source, target));
        }

        let edge_specs: Vec<(NodeId, NodeId, CostDistribution)> = pairs
            .into_iter()
            .map(|(source, target)| {
                let mean = rng.random_range(mean_min..=mean_max);
                (
                    NodeId(source),
                    NodeId(target),
                    CostDistribution::Gaussian { mean, variance },
                )
            })
            .collect();

        if let Ok(graph) = StochasticGraph::from_parts(
            nodes,
            NodeId(0),
            NodeId(nodes - 1),
            edge_specs,
        ) {
            return Ok(graph);
        }
    }
    Err(GraphError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
    })
}
