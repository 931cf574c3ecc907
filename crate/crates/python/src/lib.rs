//! Python bindings. Matrices cross the boundary as lists of rows of
//! Python `complex`; mode vectors as flat lists.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slaterflo::bands::{self, LatticeConfig};
use slaterflo::fock::{self, FockVector};
use slaterflo::linalg::{CMatrix, CVector, C64};
use slaterflo::multi::{generic_p1_study, DEFAULT_MAX_TERMS};
use slaterflo::nogo::{self, Transcript};
use slaterflo::{Choice, Grouping, ModeVector, Occupation, OutcomeSet};
use slaterflo_cli::format::parse_circuit;

create_exception!(pyslaterflo, SlaterfloError, PyException);

fn err(e: impl std::fmt::Display + Kinded) -> PyErr {
    SlaterfloError::new_err(format!("{}: {}", e.kind_name(), e))
}

trait Kinded {
    fn kind_name(&self) -> &'static str;
}

impl Kinded for slaterflo::Error {
    fn kind_name(&self) -> &'static str {
        self.kind()
    }
}

impl Kinded for slaterflo_cli::CliError {
    fn kind_name(&self) -> &'static str {
        self.kind()
    }
}

fn matrix(rows: Vec<Vec<C64>>) -> PyResult<CMatrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(SlaterfloError::new_err("BadDimensions: ragged matrix"));
    }
    Ok(CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows(m: &CMatrix) -> Vec<Vec<C64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn mode(v: Vec<C64>) -> PyResult<ModeVector> {
    ModeVector::normalized(CVector::from_vec(v)).map_err(err)
}

fn fock_vector(v: Vec<C64>) -> PyResult<FockVector> {
    let modes = v.len().trailing_zeros() as usize;
    if v.len() != 1 << modes {
        return Err(SlaterfloError::new_err("BadDimensions: Fock vector length must be a power of two"));
    }
    FockVector::from_amplitudes(modes, CVector::from_vec(v)).map_err(err)
}

fn occupation(label: u8) -> PyResult<Occupation> {
    Occupation::from_label(label).map_err(err)
}

/// A single Slater determinant `c · det`, orbitals as columns.
#[pyclass(name = "SlaterState", module = "pyslaterflo", from_py_object)]
#[derive(Clone)]
pub struct PySlaterState(slaterflo::SlaterState);

#[pymethods]
impl PySlaterState {
    #[new]
    #[pyo3(signature = (orbitals, amplitude = C64::new(1.0, 0.0)))]
    fn new(orbitals: Vec<Vec<C64>>, amplitude: C64) -> PyResult<Self> {
        Ok(Self(slaterflo::SlaterState::new(matrix(orbitals)?, amplitude).map_err(err)?))
    }

    /// Modes `0..n` filled out of `d`.
    #[staticmethod]
    fn standard(d: usize, n: usize) -> PyResult<Self> {
        Ok(Self(slaterflo::SlaterState::standard(d, n).map_err(err)?))
    }

    #[getter]
    fn modes(&self) -> usize {
        self.0.modes()
    }

    #[getter]
    fn electrons(&self) -> usize {
        self.0.electrons()
    }

    #[getter]
    fn amplitude(&self) -> C64 {
        self.0.amplitude()
    }

    fn orbitals(&self) -> Vec<Vec<C64>> {
        rows(self.0.orbitals())
    }

    fn evolve(&self, unitary: Vec<Vec<C64>>) -> PyResult<Self> {
        Ok(Self(self.0.evolve(&matrix(unitary)?).map_err(err)?))
    }

    /// Measures the occupation of `kappa`; returns `(outcome, probability, post)`.
    /// Samples with the given seed unless `outcome` is forced.
    #[pyo3(signature = (kappa, outcome = None, seed = 0))]
    fn measure(&self, kappa: Vec<C64>, outcome: Option<u8>, seed: u64) -> PyResult<(u8, f64, Self)> {
        let kappa = mode(kappa)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let choice = match outcome {
            Some(o) => Choice::Forced(occupation(o)?),
            None => Choice::Sample(&mut rng),
        };
        let m = self.0.measure_mode(&kappa, choice).map_err(err)?;
        Ok((m.outcome.label(), m.probability, Self(m.post)))
    }

    fn overlap(&self, other: &Self) -> PyResult<C64> {
        self.0.overlap(&other.0).map_err(err)
    }

    fn densities(&self) -> Vec<f64> {
        self.0.densities()
    }

    /// Dense Fock-space amplitudes; bit `m` of the index is mode `m`.
    fn to_fock(&self) -> PyResult<Vec<C64>> {
        Ok(fock::expand(&self.0).map_err(err)?.amplitudes().iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!("SlaterState(modes={}, electrons={})", self.0.modes(), self.0.electrons())
    }
}

/// A superposition of Slater determinants.
#[pyclass(name = "SlaterSum", module = "pyslaterflo", from_py_object)]
#[derive(Clone)]
pub struct PySlaterSum(slaterflo::SlaterSum);

#[pymethods]
impl PySlaterSum {
    #[new]
    fn new(state: PySlaterState) -> Self {
        Self(slaterflo::SlaterSum::single(state.0))
    }

    #[getter]
    fn modes(&self) -> usize {
        self.0.modes()
    }

    #[getter]
    fn electrons(&self) -> usize {
        self.0.electrons()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn terms(&self) -> Vec<(C64, PySlaterState)> {
        self.0
            .terms()
            .iter()
            .map(|t| (t.coefficient, PySlaterState(t.state.clone())))
            .collect()
    }

    fn evolve(&self, unitary: Vec<Vec<C64>>) -> PyResult<Self> {
        Ok(Self(self.0.evolve(&matrix(unitary)?).map_err(err)?))
    }

    /// Two-mode charge measurement of `kappa`, `lambda` under `grouping`
    /// (`"012"`, `"01/2"`, `"0/12"` or `"02/1"`). Returns
    /// `(label, probability, post)`.
    #[pyo3(signature = (kappa, lambda_, grouping = "012", outcome = None, seed = 0))]
    fn measure_two_mode(
        &self,
        kappa: Vec<C64>,
        lambda_: Vec<C64>,
        grouping: &str,
        outcome: Option<&str>,
        seed: u64,
    ) -> PyResult<(String, f64, Self)> {
        let (kappa, lambda) = (mode(kappa)?, mode(lambda_)?);
        let grouping = Grouping::from_tag(grouping).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let choice = match outcome {
            Some(label) => Choice::Forced(OutcomeSet::parse(label).map_err(err)?),
            None => Choice::Sample(&mut rng),
        };
        let m = self.0.measure_two_mode(&kappa, &lambda, grouping, choice).map_err(err)?;
        Ok((m.outcome.to_string(), m.probability, Self(m.post)))
    }

    /// Probabilities of each group of `grouping`.
    #[pyo3(signature = (kappa, lambda_, grouping = "012"))]
    fn two_mode_probabilities(&self, kappa: Vec<C64>, lambda_: Vec<C64>, grouping: &str) -> PyResult<Vec<(String, f64)>> {
        let grouping = Grouping::from_tag(grouping).map_err(err)?;
        let (_, probs) = self
            .0
            .two_mode_branches(&mode(kappa)?, &mode(lambda_)?, grouping)
            .map_err(err)?;
        Ok(grouping.groups().iter().map(|g| g.to_string()).zip(probs).collect())
    }

    fn to_fock(&self) -> PyResult<Vec<C64>> {
        Ok(fock::expand_sum(&self.0).map_err(err)?.amplitudes().iter().copied().collect())
    }

    /// `(pfaffian, slater_number)` of a two-electron superposition in four modes.
    fn slater_rank(&self) -> PyResult<(Option<C64>, usize)> {
        let w = self.0.two_fermion_w().map_err(err)?;
        let pf = if w.dim() == 4 { Some(w.pfaffian().map_err(err)?) } else { None };
        Ok((pf, w.slater_number()))
    }

    fn __repr__(&self) -> String {
        format!("SlaterSum(modes={}, electrons={}, terms={})", self.0.modes(), self.0.electrons(), self.0.len())
    }
}

/// `|⟨a|b⟩|² / (‖a‖²‖b‖²)` for dense Fock vectors.
#[pyfunction]
fn fidelity(a: Vec<C64>, b: Vec<C64>) -> PyResult<f64> {
    fock::fidelity(&fock_vector(a)?, &fock_vector(b)?).map_err(err)
}

fn transcript<'py>(py: Python<'py>, t: &Transcript, terms: usize) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("seed", t.seed)?;
    out.set_item("rng", t.rng)?;
    let steps = t
        .records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("step", r.index)?;
            d.set_item("kind", r.kind)?;
            d.set_item("outcome", r.outcome.map(|o| o.to_string()))?;
            d.set_item("probability", r.probability)?;
            d.set_item("cumulative", r.cumulative)?;
            d.set_item("terms", r.terms)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("steps", steps)?;
    out.set_item("cumulative_probability", t.cumulative())?;
    out.set_item("final_terms", terms)?;
    Ok(out)
}

fn load(circuit_json: &str) -> PyResult<nogo::Circuit> {
    parse_circuit(circuit_json, &mut Vec::new()).map_err(err)
}

/// Runs a circuit document with sampled outcomes. Returns `(transcript, final_state)`.
#[pyfunction]
#[pyo3(signature = (circuit_json, seed = 0, max_terms = DEFAULT_MAX_TERMS))]
fn simulate<'py>(
    py: Python<'py>,
    circuit_json: &str,
    seed: u64,
    max_terms: usize,
) -> PyResult<(Bound<'py, PyDict>, PySlaterSum)> {
    let circuit = load(circuit_json)?;
    let (t, sum) = nogo::simulate_sampled(&circuit, seed, max_terms).map_err(err)?;
    Ok((transcript(py, &t, sum.len())?, PySlaterSum(sum)))
}

/// Runs a circuit keeping a single determinant at every step.
#[pyfunction]
fn simulate_exact_branch<'py>(py: Python<'py>, circuit_json: &str) -> PyResult<(Bound<'py, PyDict>, PySlaterState)> {
    let circuit = load(circuit_json)?;
    let (t, s) = nogo::simulate_exact_branch(&circuit).map_err(err)?;
    Ok((transcript(py, &t, 1)?, PySlaterState(s)))
}

/// Replays a sampled run in Fock space; returns
/// `(max_probability_deviation, min_fidelity)`.
#[pyfunction]
#[pyo3(signature = (circuit_json, seed = 0))]
fn oracle_check(circuit_json: &str, seed: u64) -> PyResult<(f64, f64)> {
    let circuit = load(circuit_json)?;
    let (_, _, r) = nogo::oracle_check_sampled(&circuit, seed, DEFAULT_MAX_TERMS).map_err(err)?;
    Ok((r.max_probability_deviation, r.min_fidelity))
}

/// Measures site 0 of the half-filled band `D`, `N`. Returns
/// `(outcome, probability, rows)` with rows
/// `(x, density_before, density_after, orbital, closed_form)`.
#[pyfunction]
#[pyo3(signature = (sites, electrons, outcome = None, seed = 0))]
#[allow(clippy::type_complexity)]
fn measure_origin(
    sites: usize,
    electrons: usize,
    outcome: Option<u8>,
    seed: u64,
) -> PyResult<(u8, f64, Vec<(i64, f64, f64, C64, f64)>)> {
    let cfg = LatticeConfig::new(sites, electrons).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choice = match outcome {
        Some(o) => Choice::Forced(occupation(o)?),
        None => Choice::Sample(&mut rng),
    };
    let m = bands::measure_origin(&cfg, choice).map_err(err)?;
    let rows = m
        .profile
        .iter()
        .map(|r| (r.x, r.density_before, r.density_after, r.orbital, r.closed_form))
        .collect();
    Ok((m.outcome.label(), m.probability, rows))
}

/// Ground state of the hopping band as a Slater determinant.
#[pyfunction]
fn fermi_sea(sites: usize, electrons: usize) -> PyResult<PySlaterState> {
    let cfg = LatticeConfig::new(sites, electrons).map_err(err)?;
    Ok(PySlaterState(bands::fermi_sea(&cfg).map_err(err)?))
}

/// `P_1` study of the standard determinant at angles `θ, φ, ξ`.
/// Returns `(pfaffian, closed_form, slater_number)`.
#[pyfunction]
#[pyo3(signature = (theta, phi, xi, electrons = 2))]
fn p1_study(theta: f64, phi: f64, xi: f64, electrons: usize) -> PyResult<(C64, f64, usize)> {
    let s = generic_p1_study(theta, phi, xi, electrons).map_err(err)?;
    Ok((s.pfaffian, s.closed_form, s.slater_number))
}

#[pymodule]
fn pyslaterflo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SlaterfloError", m.py().get_type::<SlaterfloError>())?;
    m.add_class::<PySlaterState>()?;
    m.add_class::<PySlaterSum>()?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_exact_branch, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(measure_origin, m)?)?;
    m.add_function(wrap_pyfunction!(fermi_sea, m)?)?;
    m.add_function(wrap_pyfunction!(p1_study, m)?)?;
    Ok(())
}
