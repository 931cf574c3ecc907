//! Circuit and state files.
//!
//! Both are JSON documents. Complex numbers are `[re, im]` pairs and
//! matrices are lists of rows.

use serde::{Deserialize, Serialize};
use slaterflo::linalg::{c, CMatrix, CVector, C64};
use slaterflo::multi::SlaterTerm;
use slaterflo::nogo::{Circuit, CircuitStep, Policy};
use slaterflo::{Grouping, ModeVector, OutcomeSet, SlaterState, SlaterSum};

use crate::error::{CliError, CliResult};

/// Mode vectors whose norm is off by more than this trigger a warning.
pub const RENORMALIZE_WARN: f64 = 1e-6;

pub type Complex = [f64; 2];
pub type Matrix = Vec<Vec<Complex>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub modes: usize,
    pub electrons: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    pub steps: Vec<StepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub orbitals: Matrix,
    #[serde(default = "unit", skip_serializing_if = "is_unit")]
    pub amplitude: Complex,
}

fn unit() -> Complex {
    [1.0, 0.0]
}

fn is_unit(z: &Complex) -> bool {
    *z == [1.0, 0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum StepSpec {
    Rotate(RotateSpec),
    Measure1(Measure1Spec),
    Measure2(Measure2Spec),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RotateSpec {
    Unitary {
        unitary: Matrix,
    },
    Generator {
        generator: Matrix,
        tau: f64,
    },
    BeamSplitter {
        modes: [usize; 2],
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ModeSpec {
    Index(usize),
    Vector(Vec<Complex>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PolicySpec {
    Named(String),
    Forced { forced: String },
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Named("sample".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Measure1Spec {
    pub mode: ModeSpec,
    #[serde(default)]
    pub policy: PolicySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Measure2Spec {
    pub kappa: ModeSpec,
    pub lambda: ModeSpec,
    pub grouping: String,
    #[serde(default)]
    pub policy: PolicySpec,
}

fn to_c64(z: &Complex) -> C64 {
    c(z[0], z[1])
}

fn from_c64(z: C64) -> Complex {
    [z.re, z.im]
}

pub fn matrix_from_rows(rows: &Matrix, nrows: usize, ncols: usize, what: &str) -> CliResult<CMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Parse(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| to_c64(&rows[i][j])))
}

pub fn matrix_to_rows(m: &CMatrix) -> Matrix {
    m.row_iter().map(|r| r.iter().map(|z| from_c64(*z)).collect()).collect()
}

/// Beam splitter on modes `i`, `j` embedded in the identity:
/// `[[cos θ, −e^{−iφ} sin θ], [e^{iφ} sin θ, cos θ]]`.
pub fn beam_splitter(d: usize, i: usize, j: usize, theta: f64, phi: f64) -> CliResult<CMatrix> {
    if i >= d || j >= d || i == j {
        return Err(CliError::Parse(format!("beam splitter modes [{i}, {j}] invalid for {d} modes")));
    }
    let mut u = CMatrix::identity(d, d);
    let (s, co) = theta.sin_cos();
    u[(i, i)] = c(co, 0.0);
    u[(j, j)] = c(co, 0.0);
    u[(i, j)] = -C64::from_polar(s, -phi);
    u[(j, i)] = C64::from_polar(s, phi);
    Ok(u)
}

/// Builds a unit mode vector, renormalizing with a warning when needed.
pub fn mode_from_spec(spec: &ModeSpec, d: usize, warnings: &mut Vec<String>) -> CliResult<ModeVector> {
    match spec {
        ModeSpec::Index(i) => {
            if *i >= d {
                return Err(CliError::Parse(format!("mode index {i} out of range for {d} modes")));
            }
            Ok(ModeVector::basis(d, *i)?)
        }
        ModeSpec::Vector(v) => {
            if v.len() != d {
                return Err(CliError::Parse(format!("mode vector has {} entries, expected {d}", v.len())));
            }
            let raw = CVector::from_iterator(d, v.iter().map(to_c64));
            let norm = raw.norm();
            if norm == 0.0 {
                return Err(CliError::Parse("mode vector is zero".into()));
            }
            if (norm - 1.0).abs() > RENORMALIZE_WARN {
                warnings.push(format!("mode vector renormalized (norm was {norm})"));
            }
            Ok(ModeVector::normalized(raw)?)
        }
    }
}

fn policy_from_spec(spec: &PolicySpec) -> CliResult<Policy> {
    match spec {
        PolicySpec::Named(name) => match name.as_str() {
            "sample" => Ok(Policy::Sample),
            "exact" | "exact-branch" => Ok(Policy::ExactBranch),
            other => Err(CliError::Parse(format!(
                "unknown policy {other:?} (expected \"sample\", \"exact\" or {{\"forced\": label}})"
            ))),
        },
        PolicySpec::Forced { forced } => {
            OutcomeSet::parse(forced).map(Policy::Forced).map_err(|_| CliError::Parse(format!("bad forced label {forced:?}")))
        }
    }
}

fn policy_to_spec(policy: Policy) -> PolicySpec {
    match policy {
        Policy::Sample => PolicySpec::Named("sample".into()),
        Policy::ExactBranch => PolicySpec::Named("exact".into()),
        Policy::Forced(set) => PolicySpec::Forced { forced: set.to_string() },
    }
}

/// Parses a circuit document; warnings are appended to `warnings`.
pub fn parse_circuit(text: &str, warnings: &mut Vec<String>) -> CliResult<Circuit> {
    let file: CircuitFile = serde_json::from_str(text)?;
    circuit_from_file(&file, warnings)
}

pub fn circuit_from_file(file: &CircuitFile, warnings: &mut Vec<String>) -> CliResult<Circuit> {
    let d = file.modes;
    let mut steps = Vec::with_capacity(file.steps.len());
    for (index, step) in file.steps.iter().enumerate() {
        let at = |e: CliError| match e {
            CliError::Parse(m) => CliError::Parse(format!("step {index}: {m}")),
            other => other,
        };
        let built = match step {
            StepSpec::Rotate(RotateSpec::Unitary { unitary }) => CircuitStep::Rotate {
                unitary: matrix_from_rows(unitary, d, d, "unitary").map_err(at)?,
            },
            StepSpec::Rotate(RotateSpec::Generator { generator, tau }) => CircuitStep::Generate {
                generator: matrix_from_rows(generator, d, d, "generator").map_err(at)?,
                tau: *tau,
            },
            StepSpec::Rotate(RotateSpec::BeamSplitter { modes, theta, phi }) => CircuitStep::Rotate {
                unitary: beam_splitter(d, modes[0], modes[1], *theta, *phi).map_err(at)?,
            },
            StepSpec::Measure1(m) => CircuitStep::MeasureOne {
                kappa: mode_from_spec(&m.mode, d, warnings).map_err(at)?,
                policy: policy_from_spec(&m.policy).map_err(at)?,
            },
            StepSpec::Measure2(m) => CircuitStep::MeasureTwo {
                kappa: mode_from_spec(&m.kappa, d, warnings).map_err(at)?,
                lambda: mode_from_spec(&m.lambda, d, warnings).map_err(at)?,
                grouping: Grouping::from_tag(&m.grouping)
                    .map_err(|_| at(CliError::Parse(format!("unknown grouping {:?}", m.grouping))))?,
                policy: policy_from_spec(&m.policy).map_err(at)?,
            },
        };
        steps.push(built);
    }
    let mut circuit = Circuit::new(d, file.electrons, steps);
    if let Some(init) = &file.initial {
        let orbitals = matrix_from_rows(&init.orbitals, d, file.electrons, "initial orbitals")?;
        circuit.initial = Some(SlaterState::new(orbitals, to_c64(&init.amplitude))?);
    }
    circuit.validate()?;
    Ok(circuit)
}

/// Serializes a circuit with every rotation written as an explicit matrix.
pub fn circuit_to_file(circuit: &Circuit) -> CircuitFile {
    let mode = |m: &ModeVector| ModeSpec::Vector(m.components().iter().map(|z| from_c64(*z)).collect());
    let steps = circuit
        .steps
        .iter()
        .map(|s| match s {
            CircuitStep::Rotate { unitary } => StepSpec::Rotate(RotateSpec::Unitary {
                unitary: matrix_to_rows(unitary),
            }),
            CircuitStep::Generate { generator, tau } => StepSpec::Rotate(RotateSpec::Generator {
                generator: matrix_to_rows(generator),
                tau: *tau,
            }),
            CircuitStep::MeasureOne { kappa, policy } => StepSpec::Measure1(Measure1Spec {
                mode: mode(kappa),
                policy: policy_to_spec(*policy),
            }),
            CircuitStep::MeasureTwo {
                kappa,
                lambda,
                grouping,
                policy,
            } => StepSpec::Measure2(Measure2Spec {
                kappa: mode(kappa),
                lambda: mode(lambda),
                grouping: grouping.tag().to_string(),
                policy: policy_to_spec(*policy),
            }),
        })
        .collect();
    CircuitFile {
        modes: circuit.modes,
        electrons: circuit.electrons,
        initial: circuit.initial.as_ref().map(|s| InitialSpec {
            orbitals: matrix_to_rows(s.orbitals()),
            amplitude: from_c64(s.amplitude()),
        }),
        steps,
    }
}

/// A superposition of determinants written out term by term.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub modes: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default = "unit")]
    pub coefficient: Complex,
    pub orbitals: Matrix,
}

pub fn parse_state(text: &str) -> CliResult<SlaterSum> {
    let file: StateFile = serde_json::from_str(text)?;
    let Some(first) = file.terms.first() else {
        return Err(CliError::Parse("state file has no terms".into()));
    };
    let electrons = first.orbitals.first().map_or(0, Vec::len);
    let mut terms = Vec::with_capacity(file.terms.len());
    for (i, t) in file.terms.iter().enumerate() {
        let orbitals = matrix_from_rows(&t.orbitals, file.modes, electrons, &format!("term {i} orbitals"))?;
        terms.push(SlaterTerm {
            coefficient: to_c64(&t.coefficient),
            state: SlaterState::new(orbitals, c(1.0, 0.0))?,
        });
    }
    Ok(SlaterSum::from_terms(file.modes, electrons, terms)?)
}
