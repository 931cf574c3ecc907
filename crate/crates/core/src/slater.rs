//! Single Slater determinants under one-body evolution and single-mode
//! occupation measurements.
//!
//! # Conventions
//!
//! Modes are indexed from 0. A state with orbital matrix `Φ` (D×N, orthonormal
//! columns `φ_1 … φ_N`) and amplitude `c` represents
//!
//! ```text
//! c · a†(φ_1) a†(φ_2) … a†(φ_N) |0⟩,    a†(φ) = Σ_m φ_m a†_m
//! ```
//!
//! with creation strings in ascending mode order carrying sign `+1`. The
//! Fock amplitude on an occupied set `i_1 < … < i_N` is therefore
//! `c · det Φ[{i_1…i_N}, :]`.
//!
//! Evolution under `H = Σ b_ij a†_i a_j` for time `τ` sends every orbital
//! `φ ↦ V φ` with `V = exp(−i b τ)`. This is the column convention that agrees
//! with the Fock-space oracle; it is locked by a golden test below.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::linalg::{
    c, complete_basis, determinant, orthonormality_residual, require_unitary, CMatrix, CVector, C64,
    ONE, ZERO,
};

/// Probabilities below this are "impossible".
pub const ZERO_PROBABILITY: f64 = 1e-12;
/// Projection norms (α, β) at or below this are treated as exactly zero.
pub const ZERO_AMPLITUDE: f64 = 1e-12;
/// Residual allowed when checking that an orbital lies in a filled span.
pub const SPAN_TOL: f64 = 1e-9;
/// Orthonormality residual every stored orbital matrix must satisfy.
pub const ORBITAL_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-10;

/// A unit vector in the single-particle space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeVector {
    components: CVector,
}

impl ModeVector {
    /// Wraps an already normalized vector.
    pub fn new(components: CVector) -> Result<Self> {
        let norm = components.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(ModeVector { components })
    }

    /// Normalizes `components`; fails only on the zero vector.
    pub fn normalized(components: CVector) -> Result<Self> {
        let norm = components.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(ModeVector {
            components: components / c(norm, 0.0),
        })
    }

    /// The standard basis orbital `|index⟩`.
    pub fn basis(modes: usize, index: usize) -> Result<Self> {
        if index >= modes {
            return Err(Error::IndexOutOfRange {
                index: index as i64,
                range: format!("0..{modes}"),
            });
        }
        let mut v = CVector::zeros(modes);
        v[index] = ONE;
        Ok(ModeVector { components: v })
    }

    pub fn modes(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &CVector {
        &self.components
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &ModeVector) -> C64 {
        self.components.dotc(&other.components)
    }
}

/// `c · Π a†(φ_j) |0⟩` with orthonormal orbitals `φ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterState {
    orbitals: CMatrix,
    amplitude: C64,
}

/// Splitting of a mode into its components inside and outside a filled span:
/// `κ = α|in⟩ + β|out⟩` with `α, β ≥ 0`.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    pub alpha: f64,
    pub beta: f64,
    pub in_orbital: Option<ModeVector>,
    pub out_orbital: Option<ModeVector>,
}

/// Occupation outcome of a single-mode measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Occupation {
    Empty,
    Filled,
}

impl Occupation {
    pub fn label(self) -> u8 {
        match self {
            Occupation::Empty => 0,
            Occupation::Filled => 1,
        }
    }

    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            0 => Ok(Occupation::Empty),
            1 => Ok(Occupation::Filled),
            other => Err(Error::InvalidOutcome(other.to_string())),
        }
    }
}

/// How a measurement outcome is selected.
pub enum Choice<'r, T> {
    Forced(T),
    Sample(&'r mut dyn RngCore),
}

/// Result of a single-mode measurement: outcome, its probability, and the
/// normalized post-measurement state.
#[derive(Debug, Clone)]
pub struct ModeMeasurement {
    pub outcome: Occupation,
    pub probability: f64,
    pub post: SlaterState,
}

impl SlaterState {
    /// Builds a state from orbitals that must already be orthonormal.
    pub fn new(orbitals: CMatrix, amplitude: C64) -> Result<Self> {
        if orbitals.ncols() > orbitals.nrows() || orbitals.nrows() == 0 {
            return Err(Error::BadDimensions(format!(
                "{} electrons in {} modes",
                orbitals.ncols(),
                orbitals.nrows()
            )));
        }
        let residual = orthonormality_residual(&orbitals);
        if residual > ORBITAL_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(SlaterState { orbitals, amplitude })
    }

    /// `a†_0 … a†_{n−1} |0⟩` in `d` modes.
    pub fn standard(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n > d {
            return Err(Error::BadDimensions(format!("{n} electrons in {d} modes")));
        }
        Ok(SlaterState {
            orbitals: CMatrix::identity(d, n),
            amplitude: ONE,
        })
    }

    /// The empty state with zero amplitude, used as the result of projections
    /// that annihilate the state.
    fn zero_like(modes: usize, electrons: usize) -> Self {
        SlaterState {
            orbitals: CMatrix::identity(modes, electrons),
            amplitude: ZERO,
        }
    }

    pub fn modes(&self) -> usize {
        self.orbitals.nrows()
    }

    pub fn electrons(&self) -> usize {
        self.orbitals.ncols()
    }

    pub fn orbitals(&self) -> &CMatrix {
        &self.orbitals
    }

    pub fn amplitude(&self) -> C64 {
        self.amplitude
    }

    pub fn with_amplitude(mut self, amplitude: C64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.orbitals)
    }

    fn check_modes(&self, found: usize) -> Result<()> {
        if found != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                found,
            });
        }
        Ok(())
    }

    fn debug_check(self) -> Self {
        debug_assert!(
            self.orthonormality_residual() <= ORBITAL_TOL,
            "orbital orthonormality lost: {:e}",
            self.orthonormality_residual()
        );
        self
    }

    /// Applies the single-particle unitary `v` to every orbital.
    pub fn evolve(&self, v: &CMatrix) -> Result<SlaterState> {
        self.check_modes(v.nrows())?;
        require_unitary(v)?;
        Ok(SlaterState {
            orbitals: v * &self.orbitals,
            amplitude: self.amplitude,
        }
        .debug_check())
    }

    /// Projects `kappa` onto the filled span and its complement.
    pub fn decompose_mode(&self, kappa: &ModeVector) -> Result<ModeDecomposition> {
        self.check_modes(kappa.modes())?;
        let k = kappa.components();
        let inside: CVector = &self.orbitals * (self.orbitals.adjoint() * k);
        let outside: CVector = k - &inside;
        let alpha = inside.norm();
        let beta = outside.norm();
        let scale = (alpha * alpha + beta * beta).sqrt();
        let in_orbital = (alpha > ZERO_AMPLITUDE).then(|| ModeVector {
            components: inside / c(alpha, 0.0),
        });
        let out_orbital = (beta > ZERO_AMPLITUDE).then(|| ModeVector {
            components: outside / c(beta, 0.0),
        });
        Ok(ModeDecomposition {
            alpha: alpha / scale,
            beta: beta / scale,
            in_orbital,
            out_orbital,
        })
    }

    /// Re-expresses the same physical state with `in_orbital` as the first
    /// orbital.
    ///
    /// The change of basis inside the filled span has unit determinant, so
    /// the amplitude is untouched whenever `N ≥ 2`. For a single electron the
    /// basis change is a phase, which is moved into the amplitude.
    pub fn rotate_in_first(&self, in_orbital: &ModeVector) -> Result<SlaterState> {
        self.check_modes(in_orbital.modes())?;
        let n = self.electrons();
        let target = in_orbital.components();
        let coords: CVector = self.orbitals.adjoint() * target;
        let residual = (target - &self.orbitals * &coords).norm();
        if n == 0 || residual > SPAN_TOL {
            return Err(Error::NotInSpan {
                residual: if n == 0 { target.norm() } else { residual },
            });
        }
        let mut change = complete_basis(&coords)?;
        let det = determinant(&change)?;
        let phase = det / c(det.norm(), 0.0);
        let mut amplitude = self.amplitude;
        if n >= 2 {
            let last = change.column(n - 1) * phase.conj();
            change.set_column(n - 1, &last);
        } else {
            // a†(in) = det · a†(φ_1)
            amplitude *= phase.conj();
        }
        let mut orbitals = &self.orbitals * change;
        orbitals.set_column(0, target);
        Ok(SlaterState { orbitals, amplitude }.debug_check())
    }

    /// Unnormalized projection onto an occupation of `kappa`.
    ///
    /// Returns the state `P_occ |self⟩` with amplitude scaled by α (filled) or
    /// β (empty). A projection that annihilates the state yields amplitude 0.
    pub fn project_mode(&self, kappa: &ModeVector, occupation: Occupation) -> Result<SlaterState> {
        let dec = self.decompose_mode(kappa)?;
        let (n, d) = (self.electrons(), self.modes());
        match occupation {
            Occupation::Filled => {
                let Some(inside) = dec.in_orbital.as_ref() else {
                    return Ok(SlaterState::zero_like(d, n));
                };
                let rotated = self.rotate_in_first(inside)?;
                let mut orbitals = rotated.orbitals;
                orbitals.set_column(0, kappa.components());
                Ok(SlaterState {
                    orbitals,
                    amplitude: rotated.amplitude * dec.alpha,
                }
                .debug_check())
            }
            Occupation::Empty => {
                if dec.beta <= ZERO_AMPLITUDE {
                    return Ok(SlaterState::zero_like(d, n));
                }
                let Some(inside) = dec.in_orbital.as_ref() else {
                    // kappa is orthogonal to every filled orbital
                    return Ok(self.clone().with_amplitude(self.amplitude * dec.beta));
                };
                let outside = dec.out_orbital.as_ref().expect("beta > 0 implies an out orbital");
                let rotated = self.rotate_in_first(inside)?;
                let perp = inside.components() * c(dec.beta, 0.0) - outside.components() * c(dec.alpha, 0.0);
                let mut orbitals = rotated.orbitals;
                orbitals.set_column(0, &perp);
                Ok(SlaterState {
                    orbitals,
                    amplitude: rotated.amplitude * dec.beta,
                }
                .debug_check())
            }
        }
    }

    /// Projective occupation measurement of `kappa`.
    ///
    /// Outcome 1 has probability α², outcome 0 probability β². The returned
    /// post state keeps the modulus (and phase) of the input amplitude.
    pub fn measure_mode(&self, kappa: &ModeVector, choice: Choice<'_, Occupation>) -> Result<ModeMeasurement> {
        let dec = self.decompose_mode(kappa)?;
        let p_filled = dec.alpha * dec.alpha;
        let p_empty = dec.beta * dec.beta;
        let outcome = match choice {
            Choice::Forced(o) => o,
            Choice::Sample(rng) => {
                if rng.random::<f64>() < p_filled {
                    Occupation::Filled
                } else {
                    Occupation::Empty
                }
            }
        };
        let (probability, factor) = match outcome {
            Occupation::Filled => (p_filled, dec.alpha),
            Occupation::Empty => (p_empty, dec.beta),
        };
        if probability < ZERO_PROBABILITY {
            return Err(Error::ImpossibleOutcome {
                outcome: outcome.label().to_string(),
                probability,
            });
        }
        let projected = self.project_mode(kappa, outcome)?;
        let amplitude = projected.amplitude / factor;
        Ok(ModeMeasurement {
            outcome,
            probability,
            post: projected.with_amplitude(amplitude),
        })
    }

    /// `a(mode)` applied to the state, leaving `N − 1` electrons.
    ///
    /// After rotating the in-component of `mode` to the front, the
    /// annihilator removes that orbital with sign `+1` and scales by α. When
    /// the mode has no overlap with the filled span the result has amplitude 0.
    pub fn annihilate(&self, mode: &ModeVector) -> Result<SlaterState> {
        let (n, d) = (self.electrons(), self.modes());
        if n == 0 {
            self.check_modes(mode.modes())?;
            return Ok(SlaterState::zero_like(d, 0));
        }
        let dec = self.decompose_mode(mode)?;
        let Some(inside) = dec.in_orbital.as_ref() else {
            return Ok(SlaterState::zero_like(d, n - 1));
        };
        let rotated = self.rotate_in_first(inside)?;
        Ok(SlaterState {
            orbitals: rotated.orbitals.columns(1, n - 1).into_owned(),
            amplitude: rotated.amplitude * dec.alpha,
        }
        .debug_check())
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &SlaterState) -> Result<C64> {
        self.check_modes(other.modes())?;
        if self.electrons() != other.electrons() {
            return Ok(ZERO);
        }
        let det = determinant(&(self.orbitals.adjoint() * &other.orbitals))?;
        Ok(self.amplitude.conj() * other.amplitude * det)
    }

    /// Fock amplitude on the occupied set `occupied` (strictly increasing).
    pub fn occupation_amplitude(&self, occupied: &[usize]) -> Result<C64> {
        if occupied.len() != self.electrons() {
            return Err(Error::BadIndexSet(format!(
                "{} indices for {} electrons",
                occupied.len(),
                self.electrons()
            )));
        }
        if occupied.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadIndexSet(format!("{occupied:?} is not strictly increasing")));
        }
        if let Some(&bad) = occupied.iter().find(|&&i| i >= self.modes()) {
            return Err(Error::BadIndexSet(format!("index {bad} outside 0..{}", self.modes())));
        }
        let n = occupied.len();
        let sub = CMatrix::from_fn(n, n, |r, col| self.orbitals[(occupied[r], col)]);
        Ok(self.amplitude * determinant(&sub)?)
    }

    /// Site densities `Σ_j |Φ_xj|²` (diagonal of the one-body density matrix),
    /// scaled by `|amplitude|²`.
    pub fn densities(&self) -> Vec<f64> {
        let weight = self.amplitude.norm_sqr();
        self.orbitals
            .row_iter()
            .map(|row| weight * row.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .collect()
    }
}

/// Convenience for sampling-free callers: `Choice::Forced` of a label.
pub fn forced(label: u8) -> Result<Choice<'static, Occupation>> {
    Ok(Choice::Forced(Occupation::from_label(label)?))
}

/// Draws an outcome label from `probabilities` (which should sum to one).
pub(crate) fn sample_index(rng: &mut dyn RngCore, probabilities: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // roundoff: fall back to the last outcome with nonzero weight
    probabilities
        .iter()
        .rposition(|&p| p >= ZERO_PROBABILITY)
        .unwrap_or(probabilities.len() - 1)
}
