//! Circuits of one-body rotations and occupation measurements, run either
//! by sampling on a [`SlaterSum`] or by the exact-branch procedure that
//! keeps a single [`SlaterState`] throughout.
//!
//! The exact-branch rule for a measurement: if one group is certain
//! (probability at least `1 − 1e-9`) the state is left alone; otherwise the
//! lowest-labelled group among `{0}` and `{2}` with nonzero probability is
//! projected onto. For single-mode measurements both outcomes qualify. The
//! parity grouping `02 | 1` is rejected up front because neither of its
//! groups preserves single-determinant form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fock::{expand, expand_sum, fidelity, FockVector};
use crate::linalg::{c, hermitian_residual, one_body_unitary, require_unitary, CMatrix, STRUCTURE_TOL};
use crate::multi::{check_orthogonal, Grouping, OutcomeSet, SlaterSum};
use crate::slater::{Choice, ModeVector, Occupation, SlaterState, ZERO_PROBABILITY};

/// Probability at or above which a group counts as certain.
pub const CERTAINTY_TOL: f64 = 1e-9;
/// Largest circuit the Fock oracle replay accepts.
pub const ORACLE_MAX_MODES: usize = 6;
pub const RNG_NAME: &str = "ChaCha8Rng";

/// How a measurement step picks its outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Sample,
    Forced(OutcomeSet),
    ExactBranch,
}

#[derive(Debug, Clone)]
pub enum CircuitStep {
    Rotate {
        unitary: CMatrix,
    },
    Generate {
        generator: CMatrix,
        tau: f64,
    },
    MeasureOne {
        kappa: ModeVector,
        policy: Policy,
    },
    MeasureTwo {
        kappa: ModeVector,
        lambda: ModeVector,
        grouping: Grouping,
        policy: Policy,
    },
}

impl CircuitStep {
    pub fn kind(&self) -> &'static str {
        match self {
            CircuitStep::Rotate { .. } | CircuitStep::Generate { .. } => "rotate",
            CircuitStep::MeasureOne { .. } => "measure1",
            CircuitStep::MeasureTwo { .. } => "measure2",
        }
    }

    fn unitary(&self) -> Result<Option<CMatrix>> {
        match self {
            CircuitStep::Rotate { unitary } => Ok(Some(unitary.clone())),
            CircuitStep::Generate { generator, tau } => Ok(Some(one_body_unitary(generator, *tau)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub modes: usize,
    pub electrons: usize,
    pub steps: Vec<CircuitStep>,
    /// Starting determinant; the standard state when absent.
    pub initial: Option<SlaterState>,
}

impl Circuit {
    pub fn new(modes: usize, electrons: usize, steps: Vec<CircuitStep>) -> Self {
        Circuit {
            modes,
            electrons,
            steps,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.electrons > self.modes {
            return Err(Error::BadDimensions(format!(
                "{} electrons in {} modes",
                self.electrons, self.modes
            )));
        }
        if let Some(s) = &self.initial {
            if s.modes() != self.modes || s.electrons() != self.electrons {
                return Err(Error::BadDimensions(format!(
                    "initial state is {}x{}, circuit is {}x{}",
                    s.modes(),
                    s.electrons(),
                    self.modes,
                    self.electrons
                )));
            }
        }
        let d = self.modes;
        let check_mode = |m: &ModeVector| {
            if m.modes() != d {
                Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.modes(),
                })
            } else {
                Ok(())
            }
        };
        let check_square = |m: &CMatrix| {
            if m.nrows() != d || m.ncols() != d {
                Err(Error::BadDimensions(format!("expected {d}x{d}, got {}x{}", m.nrows(), m.ncols())))
            } else {
                Ok(())
            }
        };
        for step in &self.steps {
            match step {
                CircuitStep::Rotate { unitary } => {
                    check_square(unitary)?;
                    require_unitary(unitary)?;
                }
                CircuitStep::Generate { generator, .. } => {
                    check_square(generator)?;
                    let residual = hermitian_residual(generator);
                    if residual > STRUCTURE_TOL {
                        return Err(Error::NotHermitian { residual });
                    }
                }
                CircuitStep::MeasureOne { kappa, policy } => {
                    check_mode(kappa)?;
                    if let Policy::Forced(set) = policy {
                        match set.singleton() {
                            Some(0) | Some(1) => {}
                            _ => return Err(Error::InvalidOutcome(set.to_string())),
                        }
                    }
                }
                CircuitStep::MeasureTwo {
                    kappa,
                    lambda,
                    grouping,
                    policy,
                } => {
                    check_mode(kappa)?;
                    check_mode(lambda)?;
                    check_orthogonal(kappa, lambda)?;
                    if let Policy::Forced(set) = policy {
                        if !grouping.groups().contains(set) {
                            return Err(Error::InvalidOutcome(format!("{set} is not a group of {grouping}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<SlaterState> {
        match &self.initial {
            Some(s) => Ok(s.clone()),
            None => SlaterState::standard(self.modes, self.electrons),
        }
    }
}

/// One line of a [`Transcript`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub index: usize,
    pub kind: &'static str,
    /// `None` for rotations.
    pub outcome: Option<OutcomeSet>,
    pub probability: Option<f64>,
    pub cumulative: f64,
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub seed: Option<u64>,
    pub rng: &'static str,
    pub records: Vec<StepRecord>,
}

impl Transcript {
    fn new(seed: Option<u64>) -> Self {
        Transcript {
            seed,
            rng: RNG_NAME,
            records: Vec::new(),
        }
    }

    pub fn cumulative(&self) -> f64 {
        self.records.last().map_or(1.0, |r| r.cumulative)
    }

    fn push(&mut self, kind: &'static str, outcome: Option<OutcomeSet>, probability: Option<f64>, terms: usize) {
        let cumulative = self.cumulative() * probability.unwrap_or(1.0);
        self.records.push(StepRecord {
            index: self.records.len(),
            kind,
            outcome,
            probability,
            cumulative,
            terms,
        });
    }
}

fn occupation_set(o: Occupation) -> OutcomeSet {
    match o {
        Occupation::Empty => OutcomeSet::ZERO,
        Occupation::Filled => OutcomeSet::ONE,
    }
}

/// Exact-branch choice among `groups` with probabilities `probs`.
fn exact_branch_choice(groups: &[OutcomeSet], probs: &[f64], step: usize) -> Result<usize> {
    if let Some(i) = probs.iter().position(|&p| p >= 1.0 - CERTAINTY_TOL) {
        return Ok(i);
    }
    let admissible = [OutcomeSet::ZERO, OutcomeSet::TWO];
    for target in admissible {
        if let Some(i) = groups.iter().position(|g| *g == target) {
            if probs[i] > ZERO_PROBABILITY {
                return Ok(i);
            }
        }
    }
    let lookup = |target| groups.iter().position(|g| *g == target).map_or(0.0, |i| probs[i]);
    Err(Error::NoAdmissibleBranch {
        step,
        p0: lookup(OutcomeSet::ZERO),
        p2: lookup(OutcomeSet::TWO),
    })
}

fn reject_parity(circuit: &Circuit) -> Result<()> {
    for (i, step) in circuit.steps.iter().enumerate() {
        if let CircuitStep::MeasureTwo {
            grouping: Grouping::Parity,
            ..
        } = step
        {
            return Err(Error::ParityGroupingUnsupported { step: i });
        }
    }
    Ok(())
}

/// Runs the circuit keeping a single determinant at every step; step policies are ignored.
pub fn simulate_exact_branch(circuit: &Circuit) -> Result<(Transcript, SlaterState)> {
    run_exact(circuit, |_, _, _| Ok(()))
}

fn run_exact<F>(circuit: &Circuit, mut observe: F) -> Result<(Transcript, SlaterState)>
where
    F: FnMut(&CircuitStep, &StepRecord, &SlaterSum) -> Result<()>,
{
    circuit.validate()?;
    reject_parity(circuit)?;
    let mut state = circuit.initial_state()?;
    let mut transcript = Transcript::new(None);
    for (index, step) in circuit.steps.iter().enumerate() {
        let (outcome, probability) = match step {
            CircuitStep::Rotate { .. } | CircuitStep::Generate { .. } => {
                let v = step.unitary()?.expect("rotation step");
                state = state.evolve(&v)?;
                (None, None)
            }
            CircuitStep::MeasureOne { kappa, .. } => {
                let dec = state.decompose_mode(kappa)?;
                let probs = [dec.beta * dec.beta, dec.alpha * dec.alpha];
                let groups = [OutcomeSet::ZERO, OutcomeSet::ONE];
                let i = if let Some(i) = probs.iter().position(|&p| p >= 1.0 - CERTAINTY_TOL) {
                    i
                } else {
                    probs
                        .iter()
                        .position(|&p| p > ZERO_PROBABILITY)
                        .ok_or(Error::NoAdmissibleBranch {
                            step: index,
                            p0: probs[0],
                            p2: probs[1],
                        })?
                };
                if probs[i] < 1.0 - CERTAINTY_TOL {
                    let o = Occupation::from_label(i as u8)?;
                    state = state.measure_mode(kappa, Choice::Forced(o))?.post;
                }
                (Some(groups[i]), Some(probs[i]))
            }
            CircuitStep::MeasureTwo {
                kappa,
                lambda,
                grouping,
                ..
            } => {
                let single = SlaterSum::single(state.clone());
                let (branches, probs) = single.two_mode_branches(kappa, lambda, *grouping)?;
                let groups = grouping.groups();
                let i = exact_branch_choice(&groups, &probs, index)?;
                if probs[i] < 1.0 - CERTAINTY_TOL {
                    let branch = &branches[i];
                    let [term] = branch.terms() else {
                        return Err(Error::NoAdmissibleBranch {
                            step: index,
                            p0: probs[0],
                            p2: *probs.last().unwrap_or(&0.0),
                        });
                    };
                    let amplitude = term.weight() / c(probs[i].sqrt(), 0.0);
                    state = term.state.clone().with_amplitude(amplitude);
                }
                (Some(groups[i]), Some(probs[i]))
            }
        };
        transcript.push(step.kind(), outcome, probability, 1);
        let record = transcript.records.last().expect("just pushed");
        observe(step, record, &SlaterSum::single(state.clone()))?;
    }
    Ok((transcript, state))
}

/// Reference executor for every policy, parity groupings included.
/// Deterministic in `seed`.
pub fn simulate_sampled(circuit: &Circuit, seed: u64, max_terms: usize) -> Result<(Transcript, SlaterSum)> {
    run_sampled(circuit, seed, max_terms, |_, _, _| Ok(()))
}

fn run_sampled<F>(circuit: &Circuit, seed: u64, max_terms: usize, mut observe: F) -> Result<(Transcript, SlaterSum)>
where
    F: FnMut(&CircuitStep, &StepRecord, &SlaterSum) -> Result<()>,
{
    circuit.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = SlaterSum::single(circuit.initial_state()?).with_max_terms(max_terms)?;
    let mut transcript = Transcript::new(Some(seed));
    for (index, step) in circuit.steps.iter().enumerate() {
        let (outcome, probability) = match step {
            CircuitStep::Rotate { .. } | CircuitStep::Generate { .. } => {
                let v = step.unitary()?.expect("rotation step");
                sum = sum.evolve(&v)?;
                (None, None)
            }
            CircuitStep::MeasureOne { kappa, policy } => {
                let choice = match policy {
                    Policy::Sample => Choice::Sample(&mut rng),
                    Policy::Forced(set) => Choice::Forced(Occupation::from_label(
                        set.singleton().ok_or_else(|| Error::InvalidOutcome(set.to_string()))?,
                    )?),
                    Policy::ExactBranch => {
                        let probs = [
                            sum.project_mode(kappa, Occupation::Empty)?.norm().powi(2),
                            sum.project_mode(kappa, Occupation::Filled)?.norm().powi(2),
                        ];
                        let groups = [OutcomeSet::ZERO, OutcomeSet::ONE];
                        let i = match probs.iter().position(|&p| p >= 1.0 - CERTAINTY_TOL) {
                            Some(i) => i,
                            None => exact_branch_choice(&groups, &probs, index)?,
                        };
                        Choice::Forced(Occupation::from_label(i as u8)?)
                    }
                };
                let m = sum.measure_mode(kappa, choice)?;
                sum = m.post;
                (Some(occupation_set(m.outcome)), Some(m.probability))
            }
            CircuitStep::MeasureTwo {
                kappa,
                lambda,
                grouping,
                policy,
            } => {
                let choice = match policy {
                    Policy::Sample => Choice::Sample(&mut rng),
                    Policy::Forced(set) => Choice::Forced(*set),
                    Policy::ExactBranch => {
                        let (_, probs) = sum.two_mode_branches(kappa, lambda, *grouping)?;
                        let groups = grouping.groups();
                        let i = exact_branch_choice(&groups, &probs, index).or_else(|_| {
                            probs
                                .iter()
                                .position(|&p| p > ZERO_PROBABILITY)
                                .ok_or(Error::NoAdmissibleBranch {
                                    step: index,
                                    p0: probs[0],
                                    p2: 0.0,
                                })
                        })?;
                        Choice::Forced(groups[i])
                    }
                };
                let m = sum.measure_two_mode(kappa, lambda, *grouping, choice)?;
                sum = m.post;
                (Some(m.outcome), Some(m.probability))
            }
        };
        transcript.push(step.kind(), outcome, probability, sum.len());
        let record = transcript.records.last().expect("just pushed");
        observe(step, record, &sum)?;
    }
    Ok((transcript, sum))
}

/// Summary of a replay against the Fock-space oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// Largest `|p_fast − p_oracle|` over measurement steps.
    pub max_probability_deviation: f64,
    /// Smallest fidelity between the normalized fast and oracle states.
    pub min_fidelity: f64,
    /// Largest orthonormality residual of any determinant along the way.
    pub max_orbital_residual: f64,
}

impl OracleReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_probability_deviation <= tol && self.min_fidelity >= 1.0 - tol
    }
}

/// Tracks the oracle state next to a fast run.
struct OracleTracker {
    state: FockVector,
    report: OracleReport,
}

impl OracleTracker {
    fn new(circuit: &Circuit) -> Result<Self> {
        if circuit.modes > ORACLE_MAX_MODES {
            return Err(Error::TooManyModes {
                modes: circuit.modes,
                limit: ORACLE_MAX_MODES,
            });
        }
        let initial = circuit.initial_state()?;
        let state = expand(&initial)?;
        let state = state.scaled(c(1.0 / state.norm(), 0.0));
        Ok(OracleTracker {
            state,
            report: OracleReport {
                max_probability_deviation: 0.0,
                min_fidelity: 1.0,
                max_orbital_residual: initial.orthonormality_residual(),
            },
        })
    }

    fn step(&mut self, step: &CircuitStep, record: &StepRecord, fast: &SlaterSum) -> Result<()> {
        self.state = match step {
            CircuitStep::Rotate { unitary } => self.state.apply_unitary(unitary)?,
            CircuitStep::Generate { generator, tau } => self.state.evolve_one_body(generator, *tau)?,
            CircuitStep::MeasureOne { kappa, .. } => {
                let set = record.outcome.expect("measurement record has an outcome");
                let o = Occupation::from_label(set.singleton().expect("single-mode outcome"))?;
                self.state.project_mode(kappa, o)?
            }
            CircuitStep::MeasureTwo { kappa, lambda, .. } => {
                let set = record.outcome.expect("measurement record has an outcome");
                let mut acc = FockVector::zeros(self.state.modes())?;
                for o in set.outcomes() {
                    acc = acc.add(&self.state.project_two_mode(kappa, lambda, o)?);
                }
                acc
            }
        };
        let norm = self.state.norm();
        if let Some(p) = record.probability {
            let deviation = (norm * norm - p).abs();
            self.report.max_probability_deviation = self.report.max_probability_deviation.max(deviation);
        }
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        self.state = self.state.scaled(c(1.0 / norm, 0.0));
        let f = fidelity(&self.state, &expand_sum(fast)?)?;
        self.report.min_fidelity = self.report.min_fidelity.min(f);
        for t in fast.terms() {
            self.report.max_orbital_residual = self.report.max_orbital_residual.max(t.state.orthonormality_residual());
        }
        Ok(())
    }
}

/// [`simulate_sampled`] with a step-by-step Fock replay.
pub fn oracle_check_sampled(
    circuit: &Circuit,
    seed: u64,
    max_terms: usize,
) -> Result<(Transcript, SlaterSum, OracleReport)> {
    let mut tracker = OracleTracker::new(circuit)?;
    let (t, s) = run_sampled(circuit, seed, max_terms, |step, rec, fast| tracker.step(step, rec, fast))?;
    Ok((t, s, tracker.report))
}

/// [`simulate_exact_branch`] with a step-by-step Fock replay.
pub fn oracle_check_exact(circuit: &Circuit) -> Result<(Transcript, SlaterState, OracleReport)> {
    let mut tracker = OracleTracker::new(circuit)?;
    let (t, s) = run_exact(circuit, |step, rec, fast| tracker.step(step, rec, fast))?;
    Ok((t, s, tracker.report))
}
