//! Online-learning shortest paths on stochastic directed graphs.
//!
//! A directed road network has deterministic transitions but noisy edge
//! costs. An agent repeatedly travels from an origin to a destination,
//! sampling edge costs as it goes, and must trade exploration against
//! exploitation to converge on the minimum-expected-cost path.
//!
//! The crate is organized around four modules:
//!
//! - [`graph`] — the network environment: topology, per-edge cost
//!   distributions, seeded sampling, a random-network generator, and the
//!   on-disk graph document format.
//! - [`oracle`] — ground truth: exact optimal expected values via
//!   label-setting search over edge means, plus a brute-force simple-path
//!   enumerator used to verify it.
//! - [`learners`] — the four episodic learning algorithms (RTDP with UCB
//!   exploration, greedy RTDP, epsilon-greedy RTDP, and value iteration
//!   with an exploration bonus) behind a single episodic interface.
//! - [`harness`] — multi-run experiments: per-episode regret against the
//!   oracle, convergence and edge-sampling series, timing, and
//!   cross-run aggregation.
//!
//! Everything is deterministic given a seed: identical (graph, config,
//! seed) triples produce identical traces, value estimates, and regret
//! series.

pub mod graph;
pub mod harness;
pub mod learners;
pub mod oracle;

pub use graph::{
    generate_network, load_graph, sample_cost, CostDistribution, Edge, GraphError, NodeId,
    SampleStream, StochasticGraph,
};
pub use harness::{
    aggregate, derive_run_seed, episode_regret, run_experiment, AggregateResult, ExperimentConfig,
    HarnessError, RunResult,
};
pub use learners::{
    compute_q, compute_u, confidence_radius, observe_and_update, regret_decomposition_diagnostic,
    run_episode_rtdp, run_episode_vi_ucb, select_action_ucb, Algorithm, EpisodeTrace,
    LearnerError, LearnerState, RtdpConfig, RtdpVariant, UcbParams, UpdateRule, MAX_RADIUS,
};
pub use oracle::{enumerate_paths, solve_exact, OptimalSolution, OracleError};
