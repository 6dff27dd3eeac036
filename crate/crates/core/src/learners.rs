//! The four episodic learners.
//!
//! Three are trajectory-based dynamic programming variants sharing one
//! episode loop ([`run_episode_rtdp`]): an optimistic UCB action rule, a
//! plain greedy rule, and an epsilon-greedy rule. The fourth,
//! [`run_episode_vi_ucb`], plans by synchronous value iteration over
//! optimistic edge costs before each rollout.
//!
//! All learners share [`LearnerState`]: per-node value estimates and
//! visit counts plus per-edge sample statistics. Edge statistics are
//! updated identically everywhere ([`observe_and_update`]); the learners
//! differ only in action selection and in how values are refreshed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{sample_cost, Edge, NodeId, SampleStream, StochasticGraph};
use crate::oracle::OptimalSolution;

/// Confidence radius reported for edges or states with no visits yet.
///
/// A large finite sentinel rather than infinity so that U = Q - rad stays
/// finite; only the ordering of U values matters, and the sentinel puts
/// unvisited edges below every visited one at realistic cost scales.
pub const MAX_RADIUS: f64 = 1e9;

/// Synchronous sweep cap for value-iteration planning.
const VI_SWEEP_CAP: usize = 10_000;

/// Exploration parameters of the UCB action rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcbParams {
    /// Coefficient c inside the radius sqrt(c * log N / n). Must be >= 0.
    pub exploration_coefficient: f64,
    /// When on, any unvisited outgoing edge is taken before all visited
    /// ones, smallest `edge_index` first.
    pub unvisited_priority: bool,
}

impl Default for UcbParams {
    fn default() -> Self {
        UcbParams {
            exploration_coefficient: 2.0,
            unvisited_priority: true,
        }
    }
}

/// Value refresh rule applied after each observed transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// V(s) <- min over all outgoing a of Q(s, a). May raise V(s) when
    /// cost estimates grow.
    #[default]
    FullMin,
    /// V(s) <- min(V(s), Q(s, taken action)). Never raises V(s).
    Monotone,
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpdateRule::FullMin => write!(f, "full-min"),
            UpdateRule::Monotone => write!(f, "monotone"),
        }
    }
}

impl FromStr for UpdateRule {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full-min" => Ok(UpdateRule::FullMin),
            "monotone" => Ok(UpdateRule::Monotone),
            other => Err(LearnerError::InvalidConfig(format!(
                "unknown update rule {other:?}, expected full-min or monotone"
            ))),
        }
    }
}

/// Action rule of the shared trajectory-based episode loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RtdpVariant {
    /// Minimize the optimistic estimate U = Q - rad.
    Ucb,
    /// Minimize the plain estimate Q.
    Standard,
    /// With probability epsilon a uniformly random edge, else greedy on Q.
    EpsilonGreedy,
}

/// A runnable learner, as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "rtdp-ucb")]
    RtdpUcb,
    #[serde(rename = "rtdp-standard")]
    RtdpStandard,
    #[serde(rename = "rtdp-eps")]
    RtdpEpsilonGreedy,
    #[serde(rename = "vi-ucb")]
    ValueIterationUcb,
}

impl Algorithm {
    /// All algorithms, in comparison-table order.
    pub fn all() -> [Algorithm; 4] {
        [
            Algorithm::RtdpStandard,
            Algorithm::RtdpEpsilonGreedy,
            Algorithm::ValueIterationUcb,
            Algorithm::RtdpUcb,
        ]
    }

    /// The trajectory-loop action rule, or `None` for the VI planner.
    pub fn rtdp_variant(self) -> Option<RtdpVariant> {
        match self {
            Algorithm::RtdpUcb => Some(RtdpVariant::Ucb),
            Algorithm::RtdpStandard => Some(RtdpVariant::Standard),
            Algorithm::RtdpEpsilonGreedy => Some(RtdpVariant::EpsilonGreedy),
            Algorithm::ValueIterationUcb => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let token = match self {
            Algorithm::RtdpUcb => "rtdp-ucb",
            Algorithm::RtdpStandard => "rtdp-standard",
            Algorithm::RtdpEpsilonGreedy => "rtdp-eps",
            Algorithm::ValueIterationUcb => "vi-ucb",
        };
        write!(f, "{token}")
    }
}

impl FromStr for Algorithm {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rtdp-ucb" => Ok(Algorithm::RtdpUcb),
            "rtdp-standard" => Ok(Algorithm::RtdpStandard),
            "rtdp-eps" => Ok(Algorithm::RtdpEpsilonGreedy),
            "vi-ucb" => Ok(Algorithm::ValueIterationUcb),
            other => Err(LearnerError::InvalidConfig(format!(
                "unknown algorithm {other:?}, expected one of rtdp-ucb, rtdp-standard, rtdp-eps, vi-ucb"
            ))),
        }
    }
}

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
    #[error("dead end at node {0}: no outgoing edges")]
    DeadEnd(NodeId),
    #[error(
        "value iteration did not converge: residual {residual} after {sweeps} sweeps (threshold {theta})"
    )]
    ValueIterationDiverged {
        sweeps: usize,
        residual: f64,
        theta: f64,
    },
}

/// Mutable estimate state of one learner during one run.
///
/// Invariants maintained by the update functions:
/// - `c_hat[e] = cost_sum[e] / n_edge[e]` when `n_edge[e] > 0`, else 0;
/// - `v[destination] = 0` always;
/// - all values are finite and >= 0;
/// - `n_state[s] >= n_edge[e]` for every outgoing edge e of s.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    /// Per-node value estimate, in the cost unit of the graph.
    pub v: Vec<f64>,
    /// Per-node visit count: times the node was the source of a step.
    pub n_state: Vec<u64>,
    /// Per-edge sample count.
    pub n_edge: Vec<u64>,
    /// Per-edge sum of sampled costs.
    pub cost_sum: Vec<f64>,
    /// Per-edge empirical mean cost; 0 while unsampled.
    pub c_hat: Vec<f64>,
}

impl LearnerState {
    pub fn new(graph: &StochasticGraph) -> Self {
        LearnerState {
            v: vec![0.0; graph.node_count()],
            n_state: vec![0; graph.node_count()],
            n_edge: vec![0; graph.edge_count()],
            cost_sum: vec![0.0; graph.edge_count()],
            c_hat: vec![0.0; graph.edge_count()],
        }
    }
}

/// One episode's walk: traversed edges with their sampled costs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    /// Edge indices in traversal order; a connected walk from the origin.
    pub edges: Vec<usize>,
    /// Sampled cost of each traversed edge, parallel to `edges`.
    pub sampled_costs: Vec<f64>,
    /// True when the step cap ended the episode before the destination.
    pub truncated: bool,
    /// Number of steps taken; equals `edges.len()`.
    pub steps: usize,
}

/// Configuration of the trajectory-based episode loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtdpConfig {
    pub variant: RtdpVariant,
    pub params: UcbParams,
    /// Exploration probability of the epsilon-greedy rule; ignored by the
    /// other variants.
    pub epsilon: f64,
    pub update_rule: UpdateRule,
    /// Step cap per episode. Must be >= 1.
    pub l_max: usize,
}

impl RtdpConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.l_max == 0 {
            return Err(LearnerError::InvalidConfig(
                "l_max must be >= 1".to_string(),
            ));
        }
        if self.params.exploration_coefficient < 0.0
            || !self.params.exploration_coefficient.is_finite()
        {
            return Err(LearnerError::InvalidConfig(format!(
                "exploration coefficient must be finite and >= 0, got {}",
                self.params.exploration_coefficient
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(LearnerError::InvalidConfig(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Cost-to-go estimate of taking `edge`: Q = c_hat(e) + V(target).
pub fn compute_q(state: &LearnerState, edge: &Edge) -> f64 {
    state.c_hat[edge.edge_index] + state.v[edge.target.index()]
}

/// Confidence radius sqrt(c * log n_state / n_edge), natural logarithm.
///
/// Returns [`MAX_RADIUS`] when the edge or its source is unvisited; the
/// formula is undefined there and the sentinel forces exploration.
pub fn confidence_radius(params: &UcbParams, n_state: f64, n_edge: f64) -> f64 {
    if n_edge <= 0.0 || n_state <= 0.0 {
        return MAX_RADIUS;
    }
    (params.exploration_coefficient * n_state.ln() / n_edge).sqrt()
}

/// Optimistic estimate U = Q - rad. May be negative.
pub fn compute_u(state: &LearnerState, params: &UcbParams, edge: &Edge) -> f64 {
    let rad = confidence_radius(
        params,
        state.n_state[edge.source.index()] as f64,
        state.n_edge[edge.edge_index] as f64,
    );
    compute_q(state, edge) - rad
}

/// Picks the outgoing edge of `s` minimizing U.
///
/// Ties break to the smallest `edge_index`. With `unvisited_priority` on,
/// any unvisited edge is taken first, again smallest `edge_index` first.
pub fn select_action_ucb(
    state: &LearnerState,
    params: &UcbParams,
    graph: &StochasticGraph,
    s: NodeId,
) -> Result<usize, LearnerError> {
    let outgoing = graph.outgoing(s);
    if outgoing.is_empty() {
        return Err(LearnerError::DeadEnd(s));
    }
    if params.unvisited_priority {
        // Adjacency is sorted by edge_index, so the first hit wins ties.
        if let Some(&e) = outgoing.iter().find(|&&e| state.n_edge[e] == 0) {
            return Ok(e);
        }
    }
    let mut best = outgoing[0];
    let mut best_u = compute_u(state, params, graph.edge(best));
    for &e in &outgoing[1..] {
        let u = compute_u(state, params, graph.edge(e));
        if u < best_u {
            best = e;
            best_u = u;
        }
    }
    Ok(best)
}

/// Greedy rule of the Standard variant: argmin Q, smallest `edge_index`
/// on ties.
fn select_greedy_q(
    state: &LearnerState,
    graph: &StochasticGraph,
    s: NodeId,
) -> Result<usize, LearnerError> {
    let outgoing = graph.outgoing(s);
    if outgoing.is_empty() {
        return Err(LearnerError::DeadEnd(s));
    }
    let mut best = outgoing[0];
    let mut best_q = compute_q(state, graph.edge(best));
    for &e in &outgoing[1..] {
        let q = compute_q(state, graph.edge(e));
        if q < best_q {
            best = e;
            best_q = q;
        }
    }
    Ok(best)
}

/// Records one sampled cost into the edge statistics.
fn record_sample(state: &mut LearnerState, edge_index: usize, sampled_cost: f64) {
    state.n_edge[edge_index] += 1;
    state.cost_sum[edge_index] += sampled_cost;
    state.c_hat[edge_index] = state.cost_sum[edge_index] / state.n_edge[edge_index] as f64;
}

/// Folds one observed transition into the state: updates the edge's
/// running mean, then refreshes V(source) per `rule` using the updated
/// statistics. V(destination) is never modified.
pub fn observe_and_update(
    state: &mut LearnerState,
    edge: &Edge,
    sampled_cost: f64,
    graph: &StochasticGraph,
    rule: UpdateRule,
) {
    debug_assert!(sampled_cost >= 0.0, "sampled costs are clamped at zero");
    record_sample(state, edge.edge_index, sampled_cost);
    let source = edge.source;
    if source == graph.destination() {
        return;
    }
    match rule {
        UpdateRule::FullMin => {
            let best = graph
                .outgoing(source)
                .iter()
                .map(|&e| compute_q(state, graph.edge(e)))
                .fold(f64::INFINITY, f64::min);
            state.v[source.index()] = best;
        }
        UpdateRule::Monotone => {
            let q = compute_q(state, edge);
            state.v[source.index()] = state.v[source.index()].min(q);
        }
    }
}

/// Runs one trajectory-based episode from the origin.
///
/// Each step: the source's visit count is incremented, an action is
/// selected per the variant, its cost is sampled, and the observation is
/// folded into the state. The episode ends at the destination, or is
/// truncated after `l_max` steps.
pub fn run_episode_rtdp(
    config: &RtdpConfig,
    state: &mut LearnerState,
    graph: &StochasticGraph,
    stream: &mut SampleStream,
) -> Result<EpisodeTrace, LearnerError> {
    config.validate()?;
    let mut edges = Vec::new();
    let mut sampled_costs = Vec::new();
    let mut truncated = false;
    let mut current = graph.origin();
    while current != graph.destination() {
        if edges.len() == config.l_max {
            truncated = true;
            break;
        }
        state.n_state[current.index()] += 1;
        let edge_index = match config.variant {
            RtdpVariant::Ucb => select_action_ucb(state, &config.params, graph, current)?,
            RtdpVariant::Standard => select_greedy_q(state, graph, current)?,
            RtdpVariant::EpsilonGreedy => {
                let outgoing = graph.outgoing(current);
                if outgoing.is_empty() {
                    return Err(LearnerError::DeadEnd(current));
                }
                // One decision draw per step, taken unconditionally, so
                // the stream stays aligned regardless of the branch.
                if stream.uniform() < config.epsilon {
                    outgoing[stream.pick(outgoing.len())]
                } else {
                    select_greedy_q(state, graph, current)?
                }
            }
        };
        let cost = sample_cost(graph, edge_index, stream);
        observe_and_update(state, graph.edge(edge_index), cost, graph, config.update_rule);
        edges.push(edge_index);
        sampled_costs.push(cost);
        current = graph.edge(edge_index).target;
    }
    Ok(EpisodeTrace {
        steps: edges.len(),
        edges,
        sampled_costs,
        truncated,
    })
}

/// Runs one planning-then-rollout episode.
///
/// Plans by synchronous value iteration over all states with optimistic
/// edge costs max(0, c_hat - rad), frozen from the pre-episode
/// statistics, warm-started from the current values, destination pinned
/// at 0, until the largest value change falls below `theta`. The
/// converged values replace `state.v`. The rollout then follows the
/// greedy policy on those values, recording samples and visit counts but
/// leaving the values untouched.
pub fn run_episode_vi_ucb(
    state: &mut LearnerState,
    params: &UcbParams,
    graph: &StochasticGraph,
    stream: &mut SampleStream,
    theta: f64,
    l_max: usize,
) -> Result<EpisodeTrace, LearnerError> {
    if theta <= 0.0 || !theta.is_finite() {
        return Err(LearnerError::InvalidConfig(format!(
            "theta must be finite and > 0, got {theta}"
        )));
    }
    if l_max == 0 {
        return Err(LearnerError::InvalidConfig(
            "l_max must be >= 1".to_string(),
        ));
    }

    let destination = graph.destination().index();
    let optimistic: Vec<f64> = (0..graph.edge_count())
        .map(|e| {
            let edge = graph.edge(e);
            let rad = confidence_radius(
                params,
                state.n_state[edge.source.index()] as f64,
                state.n_edge[e] as f64,
            );
            (state.c_hat[e] - rad).max(0.0)
        })
        .collect();

    let mut values = state.v.clone();
    values[destination] = 0.0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..VI_SWEEP_CAP {
        let mut next = values.clone();
        residual = 0.0;
        for node in 0..graph.node_count() {
            if node == destination {
                continue;
            }
            let outgoing = graph.outgoing(NodeId(node));
            if outgoing.is_empty() {
                continue;
            }
            let best = outgoing
                .iter()
                .map(|&e| optimistic[e] + values[graph.edge(e).target.index()])
                .fold(f64::INFINITY, f64::min);
            residual = residual.max((best - values[node]).abs());
            next[node] = best;
        }
        values = next;
        if residual < theta {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LearnerError::ValueIterationDiverged {
            sweeps: VI_SWEEP_CAP,
            residual,
            theta,
        });
    }
    state.v = values;

    let mut edges = Vec::new();
    let mut sampled_costs = Vec::new();
    let mut truncated = false;
    let mut current = graph.origin();
    while current != graph.destination() {
        if edges.len() == l_max {
            truncated = true;
            break;
        }
        state.n_state[current.index()] += 1;
        let outgoing = graph.outgoing(current);
        if outgoing.is_empty() {
            return Err(LearnerError::DeadEnd(current));
        }
        let mut best = outgoing[0];
        let mut best_q = optimistic[best] + state.v[graph.edge(best).target.index()];
        for &e in &outgoing[1..] {
            let q = optimistic[e] + state.v[graph.edge(e).target.index()];
            if q < best_q {
                best = e;
                best_q = q;
            }
        }
        let cost = sample_cost(graph, best, stream);
        record_sample(state, best, cost);
        edges.push(best);
        sampled_costs.push(cost);
        current = graph.edge(best).target;
    }
    Ok(EpisodeTrace {
        steps: edges.len(),
        edges,
        sampled_costs,
        truncated,
    })
}

/// Per-episode regret decomposition terms, for logging only.
///
/// `price_of_optimism` sums the confidence radii of the traversed edges;
/// `bellman_error` sums V(s) - V*(s) over the nodes of the walk. Both
/// use the pre-episode state, so callers pass a snapshot taken before the
/// episode ran. Intended for non-truncated traces; neither term is
/// claimed to bound the episode's realized regret.
pub fn regret_decomposition_diagnostic(
    trace: &EpisodeTrace,
    state_before: &LearnerState,
    params: &UcbParams,
    graph: &StochasticGraph,
    oracle: &OptimalSolution,
) -> (f64, f64) {
    let mut price_of_optimism = 0.0;
    for &e in &trace.edges {
        let edge = graph.edge(e);
        price_of_optimism += confidence_radius(
            params,
            state_before.n_state[edge.source.index()] as f64,
            state_before.n_edge[e] as f64,
        );
    }
    let mut bellman_error = 0.0;
    if let Some(&first) = trace.edges.first() {
        let start = graph.edge(first).source.index();
        bellman_error += state_before.v[start] - oracle.values[start];
        for &e in &trace.edges {
            let target = graph.edge(e).target.index();
            bellman_error += state_before.v[target] - oracle.values[target];
        }
    }
    (price_of_optimism, bellman_error)
}
