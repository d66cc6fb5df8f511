//! Python bindings for the robust-hedging toolkit.
//!
//! Exposes marginals, path trees, both sides of the transport problem, path
//! embedding, the explicit super-hedge check, and the Gaussian lifting
//! machinery. Reports cross the boundary as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mot_hedge::hedging::{
    check_superreplication_with_slack, lift_tree_hedge, verify_alpha_hedge,
};
use mot_hedge::lifting::{
    compute_thresholds, extract_conditionals, gaussian_quantile as quantile_impl, simulate_lift,
    verify_identity,
};
use mot_hedge::marginals::{project_marginal, GridMarginal, Marginal};
use mot_hedge::mot::{
    build_tree, dual_lp, primal_lp, MarginalMode, MotSolution, PathTree, TreeConfig, TreeMeasure,
};
use mot_hedge::paths::{
    generate_paths, GeneratorModel, PathGeneratorConfig, SampledPath,
};
use mot_hedge::payoffs::{Claim, ClaimKind};
use mot_hedge::MotError;

fn err(e: MotError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_claim(name: &str, strike: Option<f64>, rate: f64) -> PyResult<Claim> {
    let kind = match name {
        "vanilla" => ClaimKind::VanillaCall {
            strike: strike.ok_or_else(|| PyValueError::new_err("vanilla needs a strike"))?,
        },
        "lookback" => ClaimKind::LookbackMax,
        "asian" => ClaimKind::AsianAverage,
        "lookback-put" => ClaimKind::LookbackPutOnMax {
            strike: strike.ok_or_else(|| PyValueError::new_err("lookback-put needs a strike"))?,
        },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown claim {other:?}; expected vanilla | lookback | asian | lookback-put"
            )))
        }
    };
    Ok(Claim::new(kind).with_rate(rate))
}

fn sampled(knots: Vec<(f64, f64)>) -> PyResult<SampledPath> {
    SampledPath::new(knots).map_err(err)
}

/// A terminal-law marginal with mass 1 and mean 1.
#[pyclass(name = "Marginal")]
struct PyMarginal {
    inner: Marginal,
}

#[pymethods]
impl PyMarginal {
    /// Atomic marginal from `(position, weight)` pairs; `p > 1` is the
    /// declared finite-moment exponent.
    #[new]
    #[pyo3(signature = (atoms, p = 2.0))]
    fn new(atoms: Vec<(f64, f64)>, p: f64) -> PyResult<Self> {
        Ok(PyMarginal {
            inner: Marginal::atomic(atoms, p).map_err(err)?,
        })
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    /// Projection onto the `1/N` grid, preserving mass and mean.
    fn project(&self, n: u32) -> PyResult<PyGridMarginal> {
        Ok(PyGridMarginal {
            inner: project_marginal(&self.inner, n).map_err(err)?,
        })
    }
}

/// A marginal supported on the grid `{k/N}`.
#[pyclass(name = "GridMarginal")]
struct PyGridMarginal {
    inner: GridMarginal,
}

#[pymethods]
impl PyGridMarginal {
    #[getter]
    fn n(&self) -> u32 {
        self.inner.n
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.inner.atoms()
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }
}

/// Truncated enumeration of grid paths: resolution `N`, at most `m` jumps,
/// `J` menu gaps per depth, price cap `B`.
#[pyclass(name = "Tree")]
struct PyTree {
    inner: PathTree,
}

#[pymethods]
impl PyTree {
    #[new]
    #[pyo3(signature = (n, m, j = 3, b = None))]
    fn new(n: u32, m: usize, j: usize, b: Option<f64>) -> PyResult<Self> {
        let mut tc = TreeConfig::new(n, m).with_menu(j);
        if let Some(b) = b {
            tc = tc.with_cap(b);
        }
        Ok(PyTree {
            inner: build_tree(&tc).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n
    }

    fn states(&self) -> usize {
        self.inner.num_states()
    }

    fn nodes(&self) -> usize {
        self.inner.nodes.len()
    }

    fn price_cap(&self) -> f64 {
        self.inner.price_cap
    }
}

fn solution_dict<'py>(py: Python<'py>, sol: &MotSolution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("status", format!("{:?}", sol.status))?;
    d.set_item("value", sol.value)?;
    d.set_item("max_residual", sol.max_residual)?;
    if let Some(q) = &sol.measure {
        d.set_item("masses", q.masses.clone())?;
    }
    if let Some(c) = &sol.certificate {
        d.set_item("h", c.h.clone())?;
        d.set_item("positions", c.positions.clone())?;
    }
    Ok(d)
}

/// Upper price bound: maximize the claim over tree martingale measures with
/// the given terminal law.
#[pyfunction]
#[pyo3(signature = (tree, claim, nu, strike = None, rate = 0.0, band_kappa = None))]
fn solve_primal<'py>(
    py: Python<'py>,
    tree: &PyTree,
    claim: &str,
    nu: &PyGridMarginal,
    strike: Option<f64>,
    rate: f64,
    band_kappa: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let claim = parse_claim(claim, strike, rate)?;
    let mode = match band_kappa {
        None => MarginalMode::Exact,
        Some(kappa) => MarginalMode::Band { kappa },
    };
    let sol = primal_lp(&tree.inner, &claim, &nu.inner, mode).map_err(err)?;
    solution_dict(py, &sol)
}

/// Cheapest semi-static super-hedge on the tree; the dict carries the static
/// grid payoff `h` and the per-branching positions.
#[pyfunction]
#[pyo3(signature = (tree, claim, nu, strike = None, rate = 0.0))]
fn solve_dual<'py>(
    py: Python<'py>,
    tree: &PyTree,
    claim: &str,
    nu: &PyGridMarginal,
    strike: Option<f64>,
    rate: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let claim = parse_claim(claim, strike, rate)?;
    let sol = dual_lp(&tree.inner, &claim, &nu.inner).map_err(err)?;
    solution_dict(py, &sol)
}

/// Embeds a piecewise-linear path (list of `(t, value)` knots starting at
/// `(0, 1)`) into the grid path class at resolution `N`.
#[pyfunction]
fn embed_path<'py>(
    py: Python<'py>,
    knots: Vec<(f64, f64)>,
    n: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let s = sampled(knots)?;
    let grid = mot_hedge::discretize::embed_f(&s, n).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("n", grid.n)?;
    d.set_item("horizon", grid.horizon)?;
    d.set_item("initial", grid.initial_value)?;
    d.set_item("jumps", grid.jumps.clone())?;
    Ok(d)
}

/// Crossing times and values of a piecewise-linear path.
#[pyfunction]
fn crossing_times(knots: Vec<(f64, f64)>, n: u32) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = sampled(knots)?;
    let dec = mot_hedge::discretize::crossing_times(&s, n).map_err(err)?;
    Ok((dec.taus, dec.values_at_taus))
}

/// Pathwise check of the explicit maximal-claim super-hedge.
#[pyfunction]
fn alpha_hedge_check(n: u32, strike: f64, p: f64, knots: Vec<(f64, f64)>) -> PyResult<(f64, bool)> {
    let s = sampled(knots)?;
    let check = verify_alpha_hedge(n, strike, p, &s).map_err(err)?;
    Ok((check.min_margin, check.ok))
}

/// Lifts a tree hedge to continuous paths and reports the worst
/// super-replication margin over the given paths, with the claim reduced by
/// `slack · ‖S‖ / N`.
#[pyfunction]
#[pyo3(signature = (tree, h, positions, claim, paths, strike = None, rate = 0.0, slack = 0.0))]
#[allow(clippy::too_many_arguments)]
fn check_lifted_hedge<'py>(
    py: Python<'py>,
    tree: &PyTree,
    h: Vec<f64>,
    positions: Vec<f64>,
    claim: &str,
    paths: Vec<Vec<(f64, f64)>>,
    strike: Option<f64>,
    rate: f64,
    slack: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let claim = parse_claim(claim, strike, rate)?;
    let bound = 10.0 * (1.0 + h.iter().fold(0.0f64, |a, &x| a.max(x.abs())));
    let pi = lift_tree_hedge(&tree.inner, &h, &positions, bound, 2.0).map_err(err)?;
    let paths: Vec<SampledPath> = paths
        .into_iter()
        .map(sampled)
        .collect::<PyResult<_>>()?;
    let report = check_superreplication_with_slack(&pi, &claim, &paths, slack).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("min_margin", report.min_margin)?;
    d.set_item("violations", report.violations)?;
    d.set_item(
        "admissibility_violations",
        report.admissibility_violations,
    )?;
    Ok(d)
}

/// Simulates a tree measure on a Gaussian driver and chi-square-tests the
/// fit of the simulated law against the exact tree law.
#[pyfunction]
#[pyo3(signature = (tree, masses, samples = 100_000, seed = 42))]
fn lift_fit<'py>(
    py: Python<'py>,
    tree: &PyTree,
    masses: Vec<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let q = TreeMeasure { masses };
    let tables = extract_conditionals(&tree.inner, &q).map_err(err)?;
    let thresholds = compute_thresholds(&tables).map_err(err)?;
    let sims = simulate_lift(&tree.inner, &thresholds, samples, seed).map_err(err)?;
    let fit = verify_identity(&sims, &tree.inner, &q).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("statistic", fit.statistic)?;
    d.set_item("degrees_of_freedom", fit.degrees_of_freedom)?;
    d.set_item("p_value", fit.p_value)?;
    d.set_item("cells", fit.cells)?;
    d.set_item("pooled", fit.pooled)?;
    d.set_item("z_max_error", fit.z_max_error)?;
    d.set_item("tail_count", fit.tail_count)?;
    Ok(d)
}

/// Geometric Brownian sample paths as knot lists; path `i` uses stream `i`
/// of the seeded generator.
#[pyfunction]
#[pyo3(signature = (count, volatility = 0.3, steps = 100, seed = 0, horizon = 1.0))]
fn gbm_paths(
    count: usize,
    volatility: f64,
    steps: usize,
    seed: u64,
    horizon: f64,
) -> PyResult<Vec<Vec<(f64, f64)>>> {
    let cfg = PathGeneratorConfig {
        model: GeneratorModel::GeometricBrownian,
        volatility,
        step_count: steps,
        seed,
        horizon,
    };
    Ok(generate_paths(&cfg, count)
        .map_err(err)?
        .into_iter()
        .map(|p| p.knots().to_vec())
        .collect())
}

/// Standard normal quantile; 0 and 1 map to `±inf`.
#[pyfunction]
fn gaussian_quantile(u: f64) -> PyResult<f64> {
    quantile_impl(u).map_err(err)
}

#[pyfunction]
fn rng_algorithm() -> &'static str {
    mot_hedge::rng::RNG_ALGORITHM
}

#[pymodule]
fn mot_hedge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarginal>()?;
    m.add_class::<PyGridMarginal>()?;
    m.add_class::<PyTree>()?;
    m.add_function(wrap_pyfunction!(solve_primal, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dual, m)?)?;
    m.add_function(wrap_pyfunction!(embed_path, m)?)?;
    m.add_function(wrap_pyfunction!(crossing_times, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_hedge_check, m)?)?;
    m.add_function(wrap_pyfunction!(check_lifted_hedge, m)?)?;
    m.add_function(wrap_pyfunction!(lift_fit, m)?)?;
    m.add_function(wrap_pyfunction!(gbm_paths, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(rng_algorithm, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
