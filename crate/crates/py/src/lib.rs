//! Python bindings: the graph environment, the exact oracle, the episodic
//! learners, and the experiment harness under one extension module.
//!
//! Everything mirrors the Rust API but stays deliberately small: graphs
//! are loaded or generated, solved exactly, stepped episode by episode
//! through [`Learner`], or run as full experiments with aggregated
//! output. Errors surface as `ValueError`.

use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sspbandit::{
    aggregate, generate_network, load_graph, run_episode_rtdp, run_episode_vi_ucb,
    solve_exact, Algorithm, CostDistribution, ExperimentConfig, LearnerState, NodeId,
    RtdpConfig, SampleStream, StochasticGraph, UcbParams, UpdateRule,
};

fn value_error(error: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(error.to_string())
}

/// A validated directed network with stochastic edge costs.
#[pyclass(frozen, module = "_sspbandit")]
struct Graph {
    inner: StochasticGraph,
}

#[pymethods]
impl Graph {
    /// Parses a JSON graph document.
    #[staticmethod]
    fn loads(document: &str) -> PyResult<Self> {
        Ok(Graph {
            inner: load_graph(document).map_err(value_error)?,
        })
    }

    /// Reads and parses a graph document from a file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let document = std::fs::read_to_string(path)
            .map_err(|error| value_error(format!("reading {path}: {error}")))?;
        Self::loads(&document)
    }

    /// Generates a random network; node 0 is the origin, the last node
    /// the destination.
    #[staticmethod]
    #[pyo3(signature = (nodes, connectivity = 3.0, mean_range = (5.0, 30.0), variance = 2.0, seed = 7))]
    fn generate(
        nodes: usize,
        connectivity: f64,
        mean_range: (f64, f64),
        variance: f64,
        seed: u64,
    ) -> PyResult<Self> {
        Ok(Graph {
            inner: generate_network(nodes, connectivity, mean_range, variance, seed)
                .map_err(value_error)?,
        })
    }

    /// Serializes the graph to its canonical JSON document.
    fn dumps(&self) -> String {
        self.inner.to_document()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[getter]
    fn origin(&self) -> usize {
        self.inner.origin().index()
    }

    #[getter]
    fn destination(&self) -> usize {
        self.inner.destination().index()
    }

    /// All edges as (source, target, mean, variance) tuples; variance is
    /// None for deterministic edges.
    fn edges(&self) -> Vec<(usize, usize, f64, Option<f64>)> {
        self.inner
            .edges()
            .iter()
            .map(|edge| {
                let (mean, variance) = match edge.distribution {
                    CostDistribution::Gaussian { mean, variance } => (mean, Some(variance)),
                    CostDistribution::Deterministic { value } => (value, None),
                };
                (edge.source.index(), edge.target.index(), mean, variance)
            })
            .collect()
    }

    /// Outgoing edge indices of a node, ascending.
    fn outgoing(&self, node: usize) -> PyResult<Vec<usize>> {
        if node >= self.inner.node_count() {
            return Err(value_error(format!(
                "node {node} out of range for {} nodes",
                self.inner.node_count()
            )));
        }
        Ok(self.inner.outgoing(NodeId(node)).to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={}, origin={}, destination={})",
            self.inner.node_count(),
            self.inner.edge_count(),
            self.inner.origin(),
            self.inner.destination()
        )
    }
}

/// Exact solution over expected edge costs.
#[pyclass(frozen, get_all, module = "_sspbandit")]
struct Solution {
    /// Expected cost-to-go per node (infinity where unreachable).
    values: Vec<f64>,
    /// Optimal origin-to-destination path as node ids.
    optimal_path: Vec<usize>,
    optimal_cost: f64,
    unique_optimum: bool,
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(optimal_cost={}, optimal_path={:?}, unique_optimum={})",
            self.optimal_cost, self.optimal_path, self.unique_optimum
        )
    }
}

/// Computes exact optimal expected values and the optimal path.
#[pyfunction(name = "solve_exact")]
fn solve_exact_py(graph: &Graph) -> PyResult<Solution> {
    let solution = solve_exact(&graph.inner).map_err(value_error)?;
    Ok(Solution {
        values: solution.values,
        optimal_path: solution.optimal_path.iter().map(|n| n.index()).collect(),
        optimal_cost: solution.optimal_cost,
        unique_optimum: solution.unique_optimum,
    })
}

enum Driver {
    Rtdp(RtdpConfig),
    ValueIteration { params: UcbParams, theta: f64, l_max: usize },
}

/// One learning agent stepped episode by episode on a fixed graph.
#[pyclass(module = "_sspbandit")]
struct Learner {
    graph: StochasticGraph,
    state: LearnerState,
    stream: SampleStream,
    driver: Driver,
    episodes_run: usize,
}

#[pymethods]
impl Learner {
    #[new]
    #[pyo3(signature = (
        graph,
        algo,
        seed,
        epsilon = 0.1,
        coefficient = 2.0,
        update_rule = "full-min",
        theta = 1e-3,
        l_max = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        graph: &Graph,
        algo: &str,
        seed: u64,
        epsilon: f64,
        coefficient: f64,
        update_rule: &str,
        theta: f64,
        l_max: Option<usize>,
    ) -> PyResult<Self> {
        let algorithm = Algorithm::from_str(algo).map_err(value_error)?;
        let update_rule = UpdateRule::from_str(update_rule).map_err(value_error)?;
        let params = UcbParams {
            exploration_coefficient: coefficient,
            unvisited_priority: true,
        };
        let l_max = l_max.unwrap_or(10 * graph.inner.node_count());
        let driver = match algorithm.rtdp_variant() {
            Some(variant) => {
                let config = RtdpConfig {
                    variant,
                    params,
                    epsilon,
                    update_rule,
                    l_max,
                };
                config.validate().map_err(value_error)?;
                Driver::Rtdp(config)
            }
            None => Driver::ValueIteration { params, theta, l_max },
        };
        Ok(Learner {
            graph: graph.inner.clone(),
            state: LearnerState::new(&graph.inner),
            stream: SampleStream::new(seed),
            driver,
            episodes_run: 0,
        })
    }

    /// Runs one episode and returns (edges, sampled_costs, truncated).
    fn run_episode(&mut self) -> PyResult<(Vec<usize>, Vec<f64>, bool)> {
        let trace = match &self.driver {
            Driver::Rtdp(config) => {
                run_episode_rtdp(config, &mut self.state, &self.graph, &mut self.stream)
            }
            Driver::ValueIteration { params, theta, l_max } => run_episode_vi_ucb(
                &mut self.state,
                params,
                &self.graph,
                &mut self.stream,
                *theta,
                *l_max,
            ),
        }
        .map_err(value_error)?;
        self.episodes_run += 1;
        Ok((trace.edges, trace.sampled_costs, trace.truncated))
    }

    /// Current value estimate per node.
    #[getter]
    fn v(&self) -> Vec<f64> {
        self.state.v.clone()
    }

    /// V(origin) under the current estimates.
    #[getter]
    fn v_origin(&self) -> f64 {
        self.state.v[self.graph.origin().index()]
    }

    /// Sample count per edge.
    #[getter]
    fn edge_samples(&self) -> Vec<u64> {
        self.state.n_edge.clone()
    }

    /// Empirical mean cost per edge (0 while unsampled).
    #[getter]
    fn cost_estimates(&self) -> Vec<f64> {
        self.state.c_hat.clone()
    }

    #[getter]
    fn episodes_run(&self) -> usize {
        self.episodes_run
    }
}

/// Aggregated outcome of a multi-run experiment.
#[pyclass(frozen, get_all, module = "_sspbandit")]
struct Summary {
    algo: String,
    runs: usize,
    episodes: usize,
    mean_final_average_regret: f64,
    std_final_average_regret: f64,
    mean_final_v_origin: f64,
    std_final_v_origin: f64,
    mean_wall_clock_seconds: f64,
    mean_regret_curve: Vec<f64>,
    mean_average_regret_curve: Vec<f64>,
    mean_v_origin_curve: Vec<f64>,
    total_edge_samples: Vec<u64>,
}

#[pymethods]
impl Summary {
    fn __repr__(&self) -> String {
        format!(
            "Summary(algo='{}', runs={}, episodes={}, mean_final_average_regret={}, mean_final_v_origin={})",
            self.algo, self.runs, self.episodes, self.mean_final_average_regret,
            self.mean_final_v_origin
        )
    }
}

/// Runs one experiment (multiple independent runs of one algorithm) and
/// returns the aggregate. Identical arguments produce identical results
/// apart from wall-clock.
#[pyfunction(name = "run_experiment")]
#[pyo3(signature = (
    graph,
    algo,
    runs = 100,
    episodes = 300,
    seed = 7,
    theta = 1e-3,
    coefficient = 2.0,
    epsilon = 0.1,
    l_max = None,
    update_rule = "full-min",
    parallel = false,
))]
#[allow(clippy::too_many_arguments)]
fn run_experiment_py(
    graph: &Graph,
    algo: &str,
    runs: usize,
    episodes: usize,
    seed: u64,
    theta: f64,
    coefficient: f64,
    epsilon: f64,
    l_max: Option<usize>,
    update_rule: &str,
    parallel: bool,
) -> PyResult<Summary> {
    let algorithm = Algorithm::from_str(algo).map_err(value_error)?;
    let config = ExperimentConfig {
        algorithm,
        runs,
        episodes,
        theta,
        exploration_coefficient: coefficient,
        epsilon,
        l_max,
        base_seed: seed,
        update_rule: UpdateRule::from_str(update_rule).map_err(value_error)?,
        parallel,
    };
    let results = sspbandit::run_experiment(&config, &graph.inner).map_err(value_error)?;
    let agg = aggregate(&results).map_err(value_error)?;
    Ok(Summary {
        algo: algorithm.to_string(),
        runs: agg.runs,
        episodes: agg.episodes,
        mean_final_average_regret: agg.mean_final_average_regret,
        std_final_average_regret: agg.std_final_average_regret,
        mean_final_v_origin: agg.mean_final_v_origin,
        std_final_v_origin: agg.std_final_v_origin,
        mean_wall_clock_seconds: agg.mean_wall_clock_seconds,
        mean_regret_curve: agg.mean_regret_curve,
        mean_average_regret_curve: agg.mean_average_regret_curve,
        mean_v_origin_curve: agg.mean_v_origin_curve,
        total_edge_samples: agg.total_edge_samples,
    })
}

#[pymodule]
fn _sspbandit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Solution>()?;
    m.add_class::<Learner>()?;
    m.add_class::<Summary>()?;
    m.add_function(wrap_pyfunction!(solve_exact_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_py, m)?)?;
    m.add("ALGORITHMS", ["rtdp-ucb", "rtdp-standard", "rtdp-eps", "vi-ucb"])?;
    m.add("MAX_RADIUS", sspbandit::MAX_RADIUS)?;
    Ok(())
}
