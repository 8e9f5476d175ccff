//! Python module `citesim`: cohorts, kernels, the weighted sampler,
//! simulation ensembles, binning and grid fitting.

use citesim_core::engine::{self, Checkpoint, SimulationConfig, DEFAULT_EVENTS};
use citesim_core::fit::{self, GridAxis, ParamGrid};
use citesim_core::kernels::{self, KernelMode};
use citesim_core::population::{self, DirectTransform, TeamGenParams, TeamSizeVector};
use citesim_core::rng::replicate_rng;
use citesim_core::sampler;
use citesim_core::stats::{self, BinningScheme};
use citesim_core::Error;
use pyo3::exceptions::{PyKeyError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Replicate { source, .. } => py_err(*source),
        Error::Io { .. } | Error::Csv { .. } | Error::Json { .. } => PyOSError::new_err(e.to_string()),
        Error::UndefinedDistance | Error::EmptySupport | Error::DegenerateKernel { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn teams_from(sizes: Vec<u32>) -> PyResult<TeamSizeVector> {
    TeamSizeVector::new(sizes).map_err(py_err)
}

/// Kernel configuration. Unset keyword arguments keep the mode's defaults.
#[pyclass(name = "KernelSpec", module = "citesim", from_py_object)]
#[derive(Clone)]
struct PyKernelSpec {
    inner: kernels::KernelSpec,
}

#[pymethods]
impl PyKernelSpec {
    #[new]
    #[pyo3(signature = (mode = "team", alpha = None, epsilon = None, beta = None, c = None, gamma = None, cap = None))]
    fn new(
        mode: &str,
        alpha: Option<f64>,
        epsilon: Option<f64>,
        beta: Option<f64>,
        c: Option<f64>,
        gamma: Option<f64>,
        cap: Option<u32>,
    ) -> PyResult<Self> {
        let mode: KernelMode = mode.parse().map_err(py_err)?;
        let mut k = kernels::KernelSpec::new(mode);
        if let Some(v) = alpha {
            k.alpha = v;
        }
        if let Some(v) = epsilon {
            k.epsilon = v;
        }
        if let Some(v) = beta {
            k.beta = v;
        }
        if let Some(v) = c {
            k.transform.set_c(v);
        }
        if let Some(v) = gamma {
            k.transform.set_gamma(v);
        }
        if let Some(v) = cap {
            k.transform.cap = v;
        }
        k.validate().map_err(py_err)?;
        Ok(Self { inner: k })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        kernels::KernelSpec::from_json(text)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("kernel spec serializes")
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.name()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    fn __repr__(&self) -> String {
        format!("KernelSpec({})", self.to_json())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Fenwick-tree index over non-negative weights.
#[pyclass(name = "WeightIndex", module = "citesim")]
struct PyWeightIndex {
    inner: sampler::WeightIndex,
}

#[pymethods]
impl PyWeightIndex {
    #[new]
    fn new(weights: Vec<f64>) -> PyResult<Self> {
        sampler::WeightIndex::build(&weights)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Index `i` with the smallest inclusive prefix sum greater than `u * total`.
    fn sample(&self, u: f64) -> PyResult<usize> {
        self.inner.sample(u).map_err(py_err)
    }

    fn update(&mut self, i: usize, weight: f64) -> PyResult<()> {
        self.inner.update(i, weight).map_err(py_err)
    }

    #[getter]
    fn total(&self) -> f64 {
        self.inner.total()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Linear-scan reference for `WeightIndex.sample`.
#[pyfunction]
fn oracle_sample(weights: Vec<f64>, u: f64) -> PyResult<usize> {
    sampler::oracle_sample(&weights, u).map_err(py_err)
}

/// One replicate: snapshots at each checkpoint plus per-period tallies.
#[pyclass(name = "RunResult", module = "citesim")]
struct PyRunResult {
    inner: engine::RunResult,
}

impl PyRunResult {
    fn snap(&self, label: Option<&str>) -> PyResult<&engine::Snapshot> {
        match label {
            None => Ok(self.inner.final_snapshot()),
            Some(l) => self.inner.snapshot(l).ok_or_else(|| {
                PyKeyError::new_err(format!(
                    "no checkpoint {l:?}; available: {}",
                    self.inner.labels().join(", ")
                ))
            }),
        }
    }
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn replicate(&self) -> u64 {
        self.inner.metadata.replicate
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().into_iter().map(String::from).collect()
    }

    /// Citation counts at `label` (final snapshot by default).
    #[pyo3(signature = (label = None))]
    fn n_cit(&self, label: Option<&str>) -> PyResult<Vec<u64>> {
        Ok(self.snap(label)?.n_cit.clone())
    }

    #[pyo3(signature = (label = None))]
    fn n_direct(&self, label: Option<&str>) -> PyResult<Vec<u64>> {
        Ok(self.snap(label)?.n_direct.clone())
    }

    fn total_direct(&self) -> u64 {
        self.inner.total_direct()
    }

    /// `(label, start, end, direct, indirect)` per period.
    fn periods(&self) -> Vec<(String, u64, u64, u64, u64)> {
        self.inner
            .periods
            .iter()
            .map(|p| (p.label.clone(), p.start, p.end, p.direct, p.indirect))
            .collect()
    }

    /// `(label, direct_share)`; the share is None for an empty period.
    fn direct_shares(&self) -> Vec<(String, Option<f64>)> {
        stats::direct_share_by_period(&self.inner)
            .into_iter()
            .map(|s| (s.label, s.direct_share))
            .collect()
    }

    fn team_sizes(&self) -> Vec<u32> {
        self.inner.metadata.team_sizes.as_slice().to_vec()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("run result serializes")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Log-binned citation distribution on x = n_cit + 1.
#[pyclass(name = "BinnedDistribution", module = "citesim")]
struct PyBinned {
    inner: stats::BinnedDistribution,
}

#[pymethods]
impl PyBinned {
    /// Rebuilds a distribution from `(lo, hi, count)` rows.
    #[staticmethod]
    #[pyo3(signature = (rows, integer_bins_up_to = 10, log_width = 0.1))]
    fn from_rows(rows: Vec<(f64, f64, f64)>, integer_bins_up_to: u64, log_width: f64) -> PyResult<Self> {
        let scheme = BinningScheme::new(integer_bins_up_to, log_width).map_err(py_err)?;
        stats::BinnedDistribution::from_rows(scheme, &rows)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// `(lo, hi, center, count, density)` for each nonempty bin.
    fn bins(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        self.inner
            .bins
            .iter()
            .map(|b| (b.lo, b.hi, b.center, b.count, b.density))
            .collect()
    }

    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    fn modal_center(&self) -> Option<f64> {
        self.inner.modal_bin().map(|b| b.center)
    }

    #[getter]
    fn n_total(&self) -> f64 {
        self.inner.n_total
    }

    fn __len__(&self) -> usize {
        self.inner.bins.len()
    }
}

#[pyfunction]
#[pyo3(signature = (n, seed = 0, core_mean = 2.6, tail_exponent = 1.7, tail_fraction = 0.15, max_size = 500))]
fn gen_team_sizes(
    n: usize,
    seed: u64,
    core_mean: f64,
    tail_exponent: f64,
    tail_fraction: f64,
    max_size: u32,
) -> PyResult<Vec<u32>> {
    let params = TeamGenParams {
        core_mean,
        tail_exponent,
        tail_fraction,
        max_size,
    };
    // same stream as the command-line tool, so cohorts match for a given seed
    population::gen_team_sizes(&params, n, &mut replicate_rng(seed, u64::MAX))
        .map(TeamSizeVector::into_inner)
        .map_err(py_err)
}

/// Reads a `paper_id,team_size` CSV.
#[pyfunction]
fn load_team_sizes(path: std::path::PathBuf) -> PyResult<Vec<u32>> {
    citesim_core::io::read_teams(&path)
        .map(TeamSizeVector::into_inner)
        .map_err(py_err)
}

/// Direct-citation weight `c * min(n, cap)^gamma`.
#[pyfunction]
#[pyo3(signature = (team_size, c = 1.0, gamma = 1.0, cap = 30))]
fn intrinsic_weight(team_size: u32, c: f64, gamma: f64, cap: u32) -> PyResult<f64> {
    if team_size == 0 {
        return Err(PyValueError::new_err("team size must be >= 1"));
    }
    let t = DirectTransform::power(c, gamma, cap);
    t.validate().map_err(py_err)?;
    Ok(population::intrinsic_weight(team_size, &t))
}

fn sim_config(
    n_papers: usize,
    events: u64,
    seed: u64,
    replicates: u64,
    checkpoints: Option<Vec<(String, u64)>>,
) -> SimulationConfig {
    let cfg = SimulationConfig::new(n_papers, events, seed, replicates);
    match checkpoints {
        Some(cps) => cfg.with_checkpoints(cps.into_iter().map(|(l, e)| Checkpoint::new(l, e)).collect()),
        None => cfg,
    }
}

/// Runs `replicates` independent replicates in parallel.
#[pyfunction]
#[pyo3(signature = (kernel, teams, events = DEFAULT_EVENTS, seed = 0, replicates = 1, checkpoints = None))]
fn simulate(
    py: Python<'_>,
    kernel: PyKernelSpec,
    teams: Vec<u32>,
    events: u64,
    seed: u64,
    replicates: u64,
    checkpoints: Option<Vec<(String, u64)>>,
) -> PyResult<Vec<PyRunResult>> {
    let teams = teams_from(teams)?;
    let cfg = sim_config(teams.len(), events, seed, replicates, checkpoints);
    let runs = py
        .detach(|| engine::run_ensemble(&cfg, &teams, &kernel.inner))
        .map_err(py_err)?;
    Ok(runs.into_iter().map(|inner| PyRunResult { inner }).collect())
}

#[pyfunction]
#[pyo3(signature = (counts, integer_bins_up_to = 10, log_width = 0.1))]
fn log_binned(counts: Vec<u64>, integer_bins_up_to: u64, log_width: f64) -> PyResult<PyBinned> {
    let scheme = BinningScheme::new(integer_bins_up_to, log_width).map_err(py_err)?;
    Ok(PyBinned {
        inner: stats::log_binned(&stats::counts_histogram(&counts), &scheme),
    })
}

/// `(decades, common_bins, excluded_bins)`.
#[pyfunction]
fn distance(a: &PyBinned, b: &PyBinned) -> PyResult<(f64, usize, usize)> {
    let r = stats::distance(&a.inner, &b.inner).map_err(py_err)?;
    Ok((r.decades, r.common_bins, r.excluded_bins))
}

/// Expected direct citations after `n` events with total intrinsic weight `a`.
#[pyfunction]
fn expected_direct_count(a: f64, n: u64) -> f64 {
    engine::expected_direct_count(a, n)
}

/// Expected direct fraction of a paper with weight `a` and `c` citations.
#[pyfunction]
fn expected_direct_fraction(a: f64, c: u64) -> f64 {
    engine::expected_direct_fraction(a, c)
}

/// Grid search. `grid` holds axes as `name=lo:hi:step` strings.
#[pyfunction]
#[pyo3(signature = (target, grid, kernel, teams, events = DEFAULT_EVENTS, seed = 0, replicates = 1))]
#[allow(clippy::too_many_arguments)]
fn grid_fit<'py>(
    py: Python<'py>,
    target: &PyBinned,
    grid: Vec<String>,
    kernel: PyKernelSpec,
    teams: Vec<u32>,
    events: u64,
    seed: u64,
    replicates: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let axes = grid
        .iter()
        .map(|s| s.parse::<GridAxis>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(py_err)?;
    let teams = teams_from(teams)?;
    let cfg = sim_config(teams.len(), events, seed, replicates, None);
    let grid = ParamGrid::new(axes);
    let result = py
        .detach(|| fit::grid_fit(&grid, &kernel.inner, &target.inner, &cfg, &teams))
        .map_err(py_err)?;

    let named = |ps: &[(fit::Param, f64)]| -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (p, v) in ps {
            d.set_item(p.name(), v)?;
        }
        Ok(d)
    };
    let out = PyDict::new(py);
    out.set_item("best_params", named(&result.best_params)?)?;
    out.set_item("best_objective", result.best_objective)?;
    out.set_item(
        "best_kernel",
        PyKernelSpec {
            inner: result.best_kernel,
        },
    )?;
    let surface = result
        .surface
        .iter()
        .map(|s| Ok((named(&s.params)?, s.objective)))
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("surface", surface)?;
    Ok(out)
}

#[pymodule]
fn citesim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernelSpec>()?;
    m.add_class::<PyWeightIndex>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyBinned>()?;
    m.add_function(wrap_pyfunction!(gen_team_sizes, m)?)?;
    m.add_function(wrap_pyfunction!(load_team_sizes, m)?)?;
    m.add_function(wrap_pyfunction!(intrinsic_weight, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_sample, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(log_binned, m)?)?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(expected_direct_count, m)?)?;
    m.add_function(wrap_pyfunction!(expected_direct_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(grid_fit, m)?)?;
    Ok(())
}
