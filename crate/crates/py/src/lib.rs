//! Python bindings: the tabular MDP types, seed derivation, the three
//! value-difference estimators, policy selection, UCT planning, and the
//! experiment harness.
//!
//! Build with `cargo build -p crn-py --release`; the resulting
//! `libcrn_py.so` imports as the module `crn_py` once renamed/symlinked to
//! `crn_py.so` (see `python/smoke_test.py`).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crn_core::env::ftvaf::{run_ftvaf_episode, FtvafParams};
use crn_core::env::ludo::{ludo_uct_match, LudoEnv};
use crn_core::env::synthetic::{generate_agreeing_policies, generate_mdp, SyntheticSpec};
use crn_core::estimators::{
    analytic_counterexample_covariance as counterexample_cov, counterexample_mdp, draw_forward,
    EstimatorKind,
};
use crn_core::mdp::{self, Policy, TabularMdp};
use crn_core::planner::{
    select_best_policy, uct_plan, PlanningConfig, TabularPlanEnv,
};
use crn_core::rng::SplitMix64;
use crn_core::seeding::{derive_seed as derive, evaluate, SeedContext, SeedScheme};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_scheme(name: &str) -> PyResult<SeedScheme> {
    if let Some(depth) = name.strip_prefix("depth-dependent:") {
        let d = depth
            .parse::<usize>()
            .map_err(|e| PyValueError::new_err(format!("bad depth {depth:?}: {e}")))?;
        return Ok(SeedScheme::DepthDependent(d));
    }
    match name {
        "independent" => Ok(SeedScheme::Independent),
        "dependent" => Ok(SeedScheme::Dependent),
        other => Err(PyValueError::new_err(format!(
            "unknown scheme {other:?} (want independent, dependent, depth-dependent:<d>)"
        ))),
    }
}

fn parse_kind(name: &str) -> PyResult<EstimatorKind> {
    if let Some(depth) = name.strip_prefix("xdd:") {
        let d = depth
            .parse::<usize>()
            .map_err(|e| PyValueError::new_err(format!("bad depth {depth:?}: {e}")))?;
        return Ok(EstimatorKind::XDD(d));
    }
    match name {
        "xi" => Ok(EstimatorKind::XI),
        "xd" => Ok(EstimatorKind::XD),
        other => Err(PyValueError::new_err(format!(
            "unknown estimator {other:?} (want xi, xd, xdd:<d>)"
        ))),
    }
}

/// Finite-horizon tabular MDP.
#[pyclass(name = "TabularMdp")]
#[derive(Clone)]
struct PyMdp {
    inner: TabularMdp,
}

#[pymethods]
impl PyMdp {
    /// Parse the plain-text table format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyMdp {
            inner: TabularMdp::from_text(text).map_err(err)?,
        })
    }

    /// Random synthetic MDP with uniform rewards and normalized uniform
    /// transition rows.
    #[staticmethod]
    fn synthetic(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        generator_seed: u64,
    ) -> Self {
        PyMdp {
            inner: generate_mdp(&SyntheticSpec {
                num_states,
                num_actions,
                horizon,
                generator_seed,
            }),
        }
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    /// Exact expected return of `policy` from the start state.
    fn utility(&self, policy: &PyPolicy) -> PyResult<f64> {
        mdp::utility(&self.inner, &policy.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "TabularMdp(states={}, actions={}, horizon={})",
            self.inner.num_states(),
            self.inner.num_actions(),
            self.inner.horizon()
        )
    }
}

/// Deterministic time-dependent policy.
#[pyclass(name = "Policy")]
#[derive(Clone)]
struct PyPolicy {
    inner: Policy,
}

#[pymethods]
impl PyPolicy {
    /// Action table in (state, time) order: `actions[s * horizon + (t-1)]`.
    #[new]
    fn new(num_states: usize, horizon: usize, actions: Vec<usize>) -> PyResult<Self> {
        Ok(PyPolicy {
            inner: Policy::new(num_states, horizon, actions).map_err(err)?,
        })
    }

    #[staticmethod]
    fn constant(num_states: usize, horizon: usize, action: usize) -> Self {
        PyPolicy {
            inner: Policy::constant(num_states, horizon, action),
        }
    }

    fn action(&self, state: usize, t: usize) -> usize {
        self.inner.action(state, t)
    }

    fn set_action(&mut self, state: usize, t: usize, action: usize) {
        self.inner.set_action(state, t, action);
    }

    /// Canonical identity string used as the policy component of seed keys.
    fn canonical_key(&self) -> String {
        self.inner.canonical_key()
    }

    fn agrees_after(&self, other: &PyPolicy, d: usize) -> bool {
        mdp::policies_agree_after(&self.inner, &other.inner, d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Policy(states={}, horizon={})",
            self.inner.num_states(),
            self.inner.horizon()
        )
    }
}

/// 64-bit seed for a sampling context: FNV-1a over the 0x1F-separated key
/// string (salt, state, action, time, simulation index, optional policy).
#[pyfunction]
#[pyo3(signature = (run_salt, state_key, action_key, time, simulation_index, policy_key=None))]
fn derive_seed(
    run_salt: &str,
    state_key: &str,
    action_key: &str,
    time: usize,
    simulation_index: u64,
    policy_key: Option<&str>,
) -> u64 {
    derive(&SeedContext {
        run_salt,
        state_key,
        action_key,
        time,
        simulation_index,
        policy_key,
    })
}

/// One forward-process episode; returns (states, actions, rewards, total).
#[pyfunction]
fn evaluate_episode(
    mdp: &PyMdp,
    policy: &PyPolicy,
    scheme: &str,
    simulation_index: u64,
    run_salt: &str,
) -> PyResult<(Vec<usize>, Vec<usize>, Vec<f64>, f64)> {
    let record = evaluate(
        &mdp.inner,
        &policy.inner,
        parse_scheme(scheme)?,
        simulation_index,
        run_salt,
    )
    .map_err(err)?;
    Ok((
        record.steps.iter().map(|s| s.state).collect(),
        record.steps.iter().map(|s| s.action).collect(),
        record.steps.iter().map(|s| s.reward).collect(),
        record.total_return,
    ))
}

/// One draw of a value-difference estimator ("xi", "xd", or "xdd:<d>") via
/// the forward process.
#[pyfunction]
fn value_difference_draw(
    mdp: &PyMdp,
    p1: &PyPolicy,
    p2: &PyPolicy,
    estimator: &str,
    simulation_index: u64,
    run_salt: &str,
) -> PyResult<f64> {
    Ok(draw_forward(
        &mdp.inner,
        &p1.inner,
        &p2.inner,
        parse_kind(estimator)?,
        simulation_index,
        run_salt,
    )
    .map_err(err)?
    .value)
}

/// The two-step MDP with negative utility covariance, plus its two policies.
#[pyfunction]
fn counterexample(r0: f64, r1: f64, r2: f64, r3: f64) -> (PyMdp, PyPolicy, PyPolicy) {
    let (mdp, p1, p2) = counterexample_mdp(r0, r1, r2, r3);
    (
        PyMdp { inner: mdp },
        PyPolicy { inner: p1 },
        PyPolicy { inner: p2 },
    )
}

/// Closed form (r0 - r2)(r1 - r3)/4.
#[pyfunction]
fn analytic_counterexample_covariance(r0: f64, r1: f64, r2: f64, r3: f64) -> f64 {
    counterexample_cov(r0, r1, r2, r3)
}

/// Policies sharing a random suffix after step `d`.
#[pyfunction]
fn agreeing_policies(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    m: usize,
    d: usize,
    generator_seed: u64,
) -> PyResult<Vec<PyPolicy>> {
    let spec = SyntheticSpec {
        num_states,
        num_actions,
        horizon,
        generator_seed,
    };
    Ok(generate_agreeing_policies(&spec, m, d, generator_seed)
        .map_err(err)?
        .into_iter()
        .map(|inner| PyPolicy { inner })
        .collect())
}

/// Select the best policy by simulated utility; returns
/// (chosen_index, estimated_utilities, true_utility_of_chosen).
#[pyfunction]
fn select_policy(
    mdp: &PyMdp,
    policies: Vec<PyPolicy>,
    n: usize,
    scheme: &str,
    run_salt: &str,
) -> PyResult<(usize, Vec<f64>, f64)> {
    let inner: Vec<Policy> = policies.into_iter().map(|p| p.inner).collect();
    let report =
        select_best_policy(&mdp.inner, &inner, n, parse_scheme(scheme)?, run_salt).map_err(err)?;
    Ok((
        report.chosen_index,
        report.estimated_utilities,
        report.true_utility_of_chosen,
    ))
}

/// Depth-limited UCT on a tabular MDP from (state, time); returns the root
/// action.
#[pyfunction]
#[pyo3(signature = (mdp, state, time, num_simulations, scheme, run_salt, depth_limit=2, exploration_constant=None))]
#[allow(clippy::too_many_arguments)]
fn plan_tabular(
    mdp: &PyMdp,
    state: usize,
    time: usize,
    num_simulations: usize,
    scheme: &str,
    run_salt: &str,
    depth_limit: usize,
    exploration_constant: Option<f64>,
) -> PyResult<usize> {
    let env = TabularPlanEnv { mdp: &mdp.inner };
    let mut config = PlanningConfig::new(depth_limit, num_simulations, parse_scheme(scheme)?);
    if let Some(c) = exploration_constant {
        config.exploration_constant = c;
    }
    uct_plan(&env, &state, time, &config, run_salt).map_err(err)
}

/// One managed annuity-fund episode; returns the total episodic reward.
#[pyfunction]
#[pyo3(signature = (scheme, n, run_salt, population=1000, horizon=20, payout_grid=101))]
fn ftvaf_episode(
    scheme: &str,
    n: usize,
    run_salt: &str,
    population: usize,
    horizon: usize,
    payout_grid: usize,
) -> PyResult<f64> {
    let params = FtvafParams {
        population,
        horizon,
        payout_grid,
        ..FtvafParams::default()
    };
    run_ftvaf_episode(&params, parse_scheme(scheme)?, n, run_salt).map_err(err)
}

/// UCT-vs-random Ludo match; returns (win_rate, std_error, cap_draws).
#[pyfunction]
#[pyo3(signature = (games, num_simulations, scheme, run_salt, depth_limit=2))]
fn ludo_match(
    games: usize,
    num_simulations: usize,
    scheme: &str,
    run_salt: &str,
    depth_limit: usize,
) -> PyResult<(f64, f64, usize)> {
    let env = LudoEnv::default();
    let config = PlanningConfig::new(depth_limit, num_simulations, parse_scheme(scheme)?);
    let report = ludo_uct_match(&env, games, &config, run_salt).map_err(err)?;
    Ok((report.win_rate, report.std_error, report.cap_draws))
}

/// Run a named experiment ("synthetic-fixed", "synthetic-uct",
/// "counterexample", "ftvaf", "ludo") and return its CSV text.
#[pyfunction]
#[pyo3(signature = (name, run_salt, num_runs=None, sim_counts=None, ludo_games=None))]
fn run_experiment_csv(
    name: &str,
    run_salt: &str,
    num_runs: Option<usize>,
    sim_counts: Option<Vec<usize>>,
    ludo_games: Option<usize>,
) -> PyResult<String> {
    use crn_core::experiments::{rows_to_csv, run_experiment, Experiment, ExperimentConfig};
    let experiment = Experiment::from_name(name).map_err(err)?;
    let mut config = ExperimentConfig::preset(experiment);
    config.run_salt = run_salt.to_string();
    if let Some(runs) = num_runs {
        config.num_runs = runs;
    }
    if let Some(counts) = sim_counts {
        config.sim_counts = counts;
    }
    if let Some(games) = ludo_games {
        config.ludo_games = games;
    }
    Ok(rows_to_csv(&run_experiment(&config).map_err(err)?))
}

/// Run the pinned fixtures; returns (name, passed, detail) per check.
#[pyfunction]
fn verify_fixtures() -> Vec<(String, bool, String)> {
    crn_core::experiments::verify_fixtures()
        .checks
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect()
}

/// Raw splitmix64 stream outputs for a seed (test-vector access).
#[pyfunction]
fn splitmix_outputs(seed: u64, count: usize) -> Vec<u64> {
    let mut stream = SplitMix64::new(seed);
    (0..count).map(|_| stream.next_u64()).collect()
}

#[pymodule]
fn crn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMdp>()?;
    m.add_class::<PyPolicy>()?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_episode, m)?)?;
    m.add_function(wrap_pyfunction!(value_difference_draw, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_counterexample_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(agreeing_policies, m)?)?;
    m.add_function(wrap_pyfunction!(select_policy, m)?)?;
    m.add_function(wrap_pyfunction!(plan_tabular, m)?)?;
    m.add_function(wrap_pyfunction!(ftvaf_episode, m)?)?;
    m.add_function(wrap_pyfunction!(ludo_match, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment_csv, m)?)?;
    m.add_function(wrap_pyfunction!(verify_fixtures, m)?)?;
    m.add_function(wrap_pyfunction!(splitmix_outputs, m)?)?;
    Ok(())
}
