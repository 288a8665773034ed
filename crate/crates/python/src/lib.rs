//! Python bindings. Results that have a serde form are returned as plain
//! Python dicts and lists; matrices are nested lists of `complex`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;

use qutrit_core::fidelity::{fidelity_pure, PhaseMode, TargetKind, TargetState};
use qutrit_core::optimize::{self, Chain, ObjectiveSpec, Stage1Config, Stage2Config};
use qutrit_core::pulse::{self, GaussianParams, NoiseSpec};
use qutrit_core::scenario::{self, LabUnits, ScenarioConfig, ScenarioName};
use qutrit_core::{DecoherenceSpec, Error, ModelVariant, PulseParameterSet};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::OptimizationFailed(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    match value {
        Value::Null => Ok(py.None().into_bound(py)),
        Value::Bool(b) => b.into_bound_py_any(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py),
        },
        Value::String(s) => s.into_bound_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            Ok(list.into_any())
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            Ok(dict.into_any())
        }
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

fn matrix_to_py<'py>(py: Python<'py>, m: &qutrit_core::ComplexMatrix) -> PyResult<Bound<'py, PyAny>> {
    let rows = PyList::empty(py);
    for r in 0..m.nrows() {
        let row: Vec<Complex64> = (0..m.ncols()).map(|c| m[[r, c]]).collect();
        rows.append(row)?;
    }
    Ok(rows.into_any())
}

fn parse_chain(name: &str) -> PyResult<Chain> {
    match name {
        "bell" => Ok(Chain::Bell),
        "ghz" => Ok(Chain::Ghz),
        other => Err(PyValueError::new_err(format!("chain must be 'bell' or 'ghz', got '{other}'"))),
    }
}

fn parse_variant(name: &str) -> PyResult<ModelVariant> {
    match name {
        "bell-full" => Ok(ModelVariant::BellFull),
        "bell-effective" => Ok(ModelVariant::BellEffective),
        "ghz-full" => Ok(ModelVariant::GhzFull),
        "ghz-intermediate" => Ok(ModelVariant::GhzIntermediate),
        "ghz-effective" => Ok(ModelVariant::GhzEffective),
        other => Err(PyValueError::new_err(format!("unknown model variant '{other}'"))),
    }
}

/// Gaussian pulse parameters `(A, σ, θ)` per channel plus the total time.
#[pyclass(name = "PulseParameters", from_py_object)]
#[derive(Clone)]
struct PyPulseParameters {
    inner: PulseParameterSet,
}

#[pymethods]
impl PyPulseParameters {
    /// `channels` is a list of `(A, sigma, theta)` tuples.
    #[new]
    #[pyo3(signature = (channels, total_time = 1.0))]
    fn new(channels: Vec<(f64, f64, f64)>, total_time: f64) -> PyResult<Self> {
        let channels = channels
            .into_iter()
            .map(|(a, s, th)| GaussianParams::new(a, s, th))
            .collect();
        Ok(Self {
            inner: PulseParameterSet::new(channels, total_time).map_err(py_err)?,
        })
    }

    /// Optimized Bell-chain pulses (four channels).
    #[staticmethod]
    fn bell_table() -> Self {
        Self {
            inner: PulseParameterSet::bell_table(),
        }
    }

    /// Optimized GHZ-chain pulses (five channels).
    #[staticmethod]
    fn ghz_table() -> Self {
        Self {
            inner: PulseParameterSet::ghz_table(),
        }
    }

    /// Reads the JSON pulse-file format (list of `{A, sigma, theta}`).
    #[staticmethod]
    #[pyo3(signature = (text, total_time = 1.0))]
    fn from_json(text: &str, total_time: f64) -> PyResult<Self> {
        Ok(Self {
            inner: PulseParameterSet::from_json(text, total_time).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.channels_json().map_err(py_err)
    }

    #[getter]
    fn channels(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .channels
            .iter()
            .map(|c| (c.amplitude, c.sigma, c.theta))
            .collect()
    }

    #[getter]
    fn total_time(&self) -> f64 {
        self.inner.total_time
    }

    /// Complex Rabi frequency of channel `k` at time `t`.
    fn value(&self, k: usize, t: f64) -> PyResult<Complex64> {
        let c = self
            .inner
            .channels
            .get(k)
            .ok_or_else(|| PyValueError::new_err(format!("no channel {k}")))?;
        pulse::gaussian_envelope(t, c.amplitude, c.sigma, c.theta, self.inner.total_time).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PulseParameters({:?}, total_time={})", self.channels(), self.inner.total_time)
    }
}

/// Hamiltonian of one model variant built from Gaussian pulses.
#[pyclass(name = "HamiltonianModel")]
struct PyHamiltonianModel {
    inner: qutrit_core::HamiltonianModel,
}

#[pymethods]
impl PyHamiltonianModel {
    /// `variant` is one of `bell-full`, `bell-effective`, `ghz-full`,
    /// `ghz-intermediate`, `ghz-effective`.
    #[new]
    #[pyo3(signature = (variant, pulses, interaction = 200.0, omega = None))]
    fn new(variant: &str, pulses: &PyPulseParameters, interaction: f64, omega: Option<f64>) -> PyResult<Self> {
        let variant = parse_variant(variant)?;
        let inner =
            qutrit_core::HamiltonianModel::from_params(variant, &pulses.inner, interaction, omega).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Basis labels, one digit per atom.
    #[getter]
    fn basis(&self) -> Vec<Vec<u8>> {
        self.inner.basis().to_vec()
    }

    /// Dense `H(t)` as nested lists.
    fn evaluate<'py>(&self, py: Python<'py>, t: f64) -> PyResult<Bound<'py, PyAny>> {
        matrix_to_py(py, &self.inner.evaluate(t))
    }

    /// Final state of a closed evolution from the all-ground state, and the
    /// phase-corrected fidelity with the target.
    #[pyo3(signature = (steps = 200_000))]
    fn final_state(&self, py: Python<'_>, steps: usize) -> PyResult<(Vec<Complex64>, f64)> {
        let model = &self.inner;
        py.detach(|| {
            let n = model.variant().n_atoms();
            let idx = model
                .index_of(&vec![0; n])
                .ok_or_else(|| Error::Validation("basis lacks the ground state".into()))?;
            let mut psi0 = qutrit_core::ComplexVector::zeros(model.dim());
            psi0[idx] = Complex64::new(1.0, 0.0);
            let traj =
                qutrit_core::propagate_state(model, &psi0, &qutrit_core::IntegratorConfig::endpoints(steps))?;
            let psi = traj.final_state();
            let target = TargetState::for_model(model, PhaseMode::InteractionPhase);
            let f = fidelity_pure(psi, &target, model.total_time())?;
            Ok((psi.to_vec(), f))
        })
        .map_err(py_err)
    }
}

/// Basis index of a label tuple (atom 1 most significant).
#[pyfunction]
fn basis_index(labels: Vec<u8>) -> PyResult<usize> {
    let reg = qutrit_core::QuditRegister::new(labels.len()).map_err(py_err)?;
    reg.basis_index(&labels).map_err(py_err)
}

/// `|upper⟩_atom⟨lower|` on an `n_atoms` register, as nested lists.
#[pyfunction]
fn transition_operator<'py>(
    py: Python<'py>,
    n_atoms: usize,
    atom: usize,
    upper: u8,
    lower: u8,
) -> PyResult<Bound<'py, PyAny>> {
    let reg = qutrit_core::QuditRegister::new(n_atoms).map_err(py_err)?;
    matrix_to_py(py, &reg.transition_operator(atom, upper, lower).map_err(py_err)?)
}

/// Checked Gaussian envelope `Ω(t)`.
#[pyfunction]
#[pyo3(signature = (t, amplitude, sigma, theta = 0.0, total_time = 1.0))]
fn gaussian_envelope(t: f64, amplitude: f64, sigma: f64, theta: f64, total_time: f64) -> PyResult<Complex64> {
    pulse::gaussian_envelope(t, amplitude, sigma, theta, total_time).map_err(py_err)
}

/// Seeded noise multipliers `1 + r_j` on a uniform grid.
#[pyfunction]
#[pyo3(signature = (amplitude, seed, grid = pulse::DEFAULT_NOISE_GRID))]
fn noise_multipliers(amplitude: f64, seed: u64, grid: usize) -> PyResult<Vec<f64>> {
    NoiseSpec::new(amplitude, seed).with_grid(grid).multipliers().map_err(py_err)
}

/// Target-state fidelity of a pure state given in the full register basis.
#[pyfunction]
#[pyo3(signature = (state, kind, t = 0.0, interaction = 0.0))]
fn target_fidelity(state: Vec<Complex64>, kind: &str, t: f64, interaction: f64) -> PyResult<f64> {
    let kind = match kind {
        "bell" => TargetKind::Bell3D,
        "ghz" => TargetKind::Ghz3D,
        other => return Err(PyValueError::new_err(format!("kind must be 'bell' or 'ghz', got '{other}'"))),
    };
    let target = TargetState::full(kind, PhaseMode::InteractionPhase, interaction);
    fidelity_pure(&qutrit_core::ComplexVector::from(state), &target, t).map_err(py_err)
}

/// Runs a trajectory scenario. Returns a dict with `t`, `populations`,
/// `fidelity_raw`, `fidelity_phase` and `summary`.
#[pyfunction]
#[pyo3(signature = (
    name, interaction = None, omega = None, gamma = 0.0, dephasing = 0.0, steps = None,
    samples = 1000, pulses = None, check_convergence = false, realistic = false
))]
#[allow(clippy::too_many_arguments)]
fn run_scenario<'py>(
    py: Python<'py>,
    name: &str,
    interaction: Option<f64>,
    omega: Option<f64>,
    gamma: f64,
    dephasing: f64,
    steps: Option<usize>,
    samples: usize,
    pulses: Option<PyPulseParameters>,
    check_convergence: bool,
    realistic: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let scenario: ScenarioName = name.parse().map_err(py_err)?;
    let mut config = ScenarioConfig::new(scenario);
    if realistic {
        let units = if scenario.is_bell() { LabUnits::bell() } else { LabUnits::ghz() };
        config = config.with_lab_units(units);
    } else {
        config.decoherence = DecoherenceSpec::new(gamma, dephasing);
    }
    if interaction.is_some() {
        config.interaction = interaction;
    }
    if omega.is_some() {
        config.omega = omega;
    }
    config.steps = steps;
    config.samples = samples;
    config.check_convergence = check_convergence;
    if let Some(p) = pulses {
        config.total_time = p.inner.total_time;
        config.pulses = Some(p.inner);
    }
    let out = py.detach(|| scenario::run_scenario(&config)).map_err(py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("t", out.records.iter().map(|r| r.t).collect::<Vec<_>>())?;
    dict.set_item(
        "populations",
        out.records.iter().map(|r| r.populations.to_vec()).collect::<Vec<_>>(),
    )?;
    dict.set_item("fidelity_raw", out.records.iter().map(|r| r.fidelity_raw).collect::<Vec<_>>())?;
    dict.set_item(
        "fidelity_phase",
        out.records.iter().map(|r| r.fidelity_phase).collect::<Vec<_>>(),
    )?;
    dict.set_item("summary", to_py(py, &out.summary)?)?;
    Ok(dict.into_any())
}

/// `1 − f(T)` of the closed effective chain.
#[pyfunction]
fn objective(chain: &str, pulses: &PyPulseParameters) -> PyResult<f64> {
    optimize::objective(&pulses.inner, &ObjectiveSpec::new(parse_chain(chain)?)).map_err(py_err)
}

/// Two-stage optimization from a uniform start. Returns the full report;
/// the optimized pulses are under `["stage2"]["params"]`.
#[pyfunction]
#[pyo3(signature = (chain, init_amplitude = 1.0, init_sigma = 0.25, seed = 0, population = 64, generations = 200))]
fn optimize_pulses<'py>(
    py: Python<'py>,
    chain: &str,
    init_amplitude: f64,
    init_sigma: f64,
    seed: u64,
    population: usize,
    generations: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let chain = parse_chain(chain)?;
    let spec = ObjectiveSpec::new(chain);
    let stage2 = Stage2Config {
        seed,
        population,
        generations,
        ..Stage2Config::default()
    };
    let init = optimize::uniform_init(chain, init_amplitude, init_sigma);
    let report = py
        .detach(|| optimize::optimize_two_stage(&spec, &Stage1Config::default(), &stage2, &init))
        .map_err(py_err)?;
    to_py(py, &report)
}

/// Monte-Carlo amplitude-noise study on the full model of `state`.
#[pyfunction]
#[pyo3(signature = (state, amplitude, runs = 20, seed = 0, steps = None))]
fn noise_study<'py>(
    py: Python<'py>,
    state: &str,
    amplitude: f64,
    runs: usize,
    seed: u64,
    steps: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = ScenarioConfig::new(match parse_chain(state)? {
        Chain::Bell => ScenarioName::NoiseBell,
        Chain::Ghz => ScenarioName::NoiseGhz,
    });
    config.steps = steps;
    let study = py
        .detach(|| scenario::run_noise_study(&config, amplitude, runs, seed))
        .map_err(py_err)?;
    to_py(py, &study)
}

/// Final fidelity over a `γ × Γ` grid.
#[pyfunction]
#[pyo3(signature = (state, gammas, dephasings, steps = None))]
fn decoherence_sweep<'py>(
    py: Python<'py>,
    state: &str,
    gammas: Vec<f64>,
    dephasings: Vec<f64>,
    steps: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = ScenarioConfig::new(match parse_chain(state)? {
        Chain::Bell => ScenarioName::DecoherenceSweepBell,
        Chain::Ghz => ScenarioName::DecoherenceSweepGhz,
    });
    config.steps = steps;
    let sweep = py
        .detach(|| scenario::run_decoherence_sweep(&config, &gammas, &dephasings))
        .map_err(py_err)?;
    to_py(py, &sweep)
}

#[pymodule]
fn qutrit_rydberg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPulseParameters>()?;
    m.add_class::<PyHamiltonianModel>()?;
    m.add_function(wrap_pyfunction!(basis_index, m)?)?;
    m.add_function(wrap_pyfunction!(transition_operator, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(noise_multipliers, m)?)?;
    m.add_function(wrap_pyfunction!(target_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_pulses, m)?)?;
    m.add_function(wrap_pyfunction!(noise_study, m)?)?;
    m.add_function(wrap_pyfunction!(decoherence_sweep, m)?)?;
    m.add("SCENARIOS", ScenarioName::ALL.map(|s| s.as_str()).to_vec())?;
    Ok(())
}
