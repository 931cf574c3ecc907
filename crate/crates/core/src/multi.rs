//! Superpositions of Slater determinants, two-mode charge measurements, and
//! the Slater number of two-fermion states.
//!
//! The two-mode projectors for orthogonal modes κ, λ are applied exactly as
//! operator products of single-mode projectors:
//!
//! ```text
//! P_0 = P_0(κ) P_0(λ)     P_2 = P_1(κ) P_1(λ)
//! P_1 = P_0(κ) P_1(λ) + P_1(κ) P_0(λ)
//! ```
//!
//! so a single determinant maps to one term under outcomes 0 and 2 and to at
//! most two terms under outcome 1. No attempt is made to merge terms.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{antisym_canonical, c, pfaffian, CMatrix, C64, RANK_TOL, ZERO};
use crate::slater::{sample_index, Choice, ModeVector, Occupation, SlaterState, ZERO_PROBABILITY};

/// Terms whose weight `|coefficient · amplitude|` is at or below this are dropped.
pub const PRUNE_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_TERMS: usize = 1024;
/// Allowed `|⟨κ|λ⟩|` for a two-mode measurement.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SlaterTerm {
    pub coefficient: C64,
    pub state: SlaterState,
}

impl SlaterTerm {
    pub fn weight(&self) -> C64 {
        self.coefficient * self.state.amplitude()
    }
}

/// `Σ_t c_t |Φ_t⟩` over determinants with common mode and electron counts.
#[derive(Debug, Clone)]
pub struct SlaterSum {
    modes: usize,
    electrons: usize,
    terms: Vec<SlaterTerm>,
    max_terms: usize,
}

impl From<SlaterState> for SlaterSum {
    fn from(state: SlaterState) -> Self {
        SlaterSum::single(state)
    }
}

impl SlaterSum {
    pub fn single(state: SlaterState) -> Self {
        SlaterSum {
            modes: state.modes(),
            electrons: state.electrons(),
            terms: vec![SlaterTerm {
                coefficient: C64::new(1.0, 0.0),
                state,
            }],
            max_terms: DEFAULT_MAX_TERMS,
        }
    }

    /// Builds a sum from explicit terms; all must share mode and electron counts.
    pub fn from_terms(modes: usize, electrons: usize, terms: Vec<SlaterTerm>) -> Result<Self> {
        for t in &terms {
            if t.state.modes() != modes {
                return Err(Error::DimensionMismatch {
                    expected: modes,
                    found: t.state.modes(),
                });
            }
            if t.state.electrons() != electrons {
                return Err(Error::WrongParticleNumber {
                    expected: electrons,
                    found: t.state.electrons(),
                });
            }
        }
        let mut sum = SlaterSum {
            modes,
            electrons,
            terms,
            max_terms: DEFAULT_MAX_TERMS,
        };
        sum.prune();
        sum.check_cap()?;
        Ok(sum)
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Result<Self> {
        self.max_terms = max_terms;
        self.check_cap()?;
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn electrons(&self) -> usize {
        self.electrons
    }

    pub fn terms(&self) -> &[SlaterTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    fn empty_like(&self, electrons: usize) -> SlaterSum {
        SlaterSum {
            modes: self.modes,
            electrons,
            terms: Vec::new(),
            max_terms: self.max_terms,
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|t| t.weight().norm() > PRUNE_TOL);
    }

    fn check_cap(&self) -> Result<()> {
        if self.terms.len() > self.max_terms {
            return Err(Error::TermCapExceeded {
                count: self.terms.len(),
                cap: self.max_terms,
            });
        }
        Ok(())
    }

    /// `⟨self|other⟩` through pairwise determinant overlaps.
    pub fn inner(&self, other: &SlaterSum) -> Result<C64> {
        if self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: other.modes,
            });
        }
        let mut total = ZERO;
        for a in &self.terms {
            for b in &other.terms {
                total += a.coefficient.conj() * b.coefficient * a.state.overlap(&b.state)?;
            }
        }
        Ok(total)
    }

    /// `√⟨self|self⟩`.
    pub fn norm(&self) -> f64 {
        let sq = self.inner(self).expect("a sum is always compatible with itself");
        debug_assert!(sq.im.abs() <= 1e-10 * sq.re.abs().max(1.0));
        sq.re.max(0.0).sqrt()
    }

    pub fn scaled(mut self, factor: C64) -> SlaterSum {
        for t in &mut self.terms {
            t.coefficient *= factor;
        }
        self.prune();
        self
    }

    pub fn concat(mut self, other: SlaterSum) -> Result<SlaterSum> {
        if self.modes != other.modes || self.electrons != other.electrons {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: other.modes,
            });
        }
        self.terms.extend(other.terms);
        self.check_cap()?;
        Ok(self)
    }

    /// Termwise map that may emit several determinants per input term.
    fn flat_map<F>(&self, electrons: usize, mut f: F) -> Result<SlaterSum>
    where
        F: FnMut(&SlaterState) -> Result<Vec<SlaterState>>,
    {
        let mut out = self.empty_like(electrons);
        for t in &self.terms {
            for state in f(&t.state)? {
                let term = SlaterTerm {
                    coefficient: t.coefficient,
                    state,
                };
                if term.weight().norm() > PRUNE_TOL {
                    out.terms.push(term);
                }
            }
        }
        out.check_cap()?;
        Ok(out)
    }

    pub fn evolve(&self, v: &CMatrix) -> Result<SlaterSum> {
        self.flat_map(self.electrons, |s| Ok(vec![s.evolve(v)?]))
    }

    pub fn annihilate(&self, mode: &ModeVector) -> Result<SlaterSum> {
        let electrons = self.electrons.saturating_sub(1);
        self.flat_map(electrons, |s| Ok(vec![s.annihilate(mode)?]))
    }

    /// Unnormalized single-mode projection, termwise.
    pub fn project_mode(&self, kappa: &ModeVector, occupation: Occupation) -> Result<SlaterSum> {
        self.flat_map(self.electrons, |s| Ok(vec![s.project_mode(kappa, occupation)?]))
    }

    /// Single-mode occupation measurement of a superposition.
    pub fn measure_mode(&self, kappa: &ModeVector, choice: Choice<'_, Occupation>) -> Result<SumMeasurement<Occupation>> {
        let branches = [
            self.project_mode(kappa, Occupation::Empty)?,
            self.project_mode(kappa, Occupation::Filled)?,
        ];
        let probabilities: Vec<f64> = branches.iter().map(|b| b.norm().powi(2)).collect();
        let index = match choice {
            Choice::Forced(o) => o.label() as usize,
            Choice::Sample(rng) => sample_index(rng, &probabilities),
        };
        let outcome = Occupation::from_label(index as u8)?;
        let [empty, filled] = branches;
        let chosen = if index == 0 { empty } else { filled };
        finish_measurement(outcome, outcome.label().to_string(), probabilities[index], chosen)
    }

    /// Applies one of the two-mode projectors `P_0`, `P_1`, `P_2` without
    /// renormalizing.
    pub fn apply_two_mode_projector(&self, kappa: &ModeVector, lambda: &ModeVector, outcome: u8) -> Result<SlaterSum> {
        check_orthogonal(kappa, lambda)?;
        use Occupation::{Empty, Filled};
        let product = |s: &SlaterState, ok: Occupation, ol: Occupation| -> Result<SlaterState> {
            let first = s.project_mode(lambda, ol)?;
            if first.amplitude().norm() <= PRUNE_TOL {
                return Ok(first);
            }
            first.project_mode(kappa, ok)
        };
        match outcome {
            0 => self.flat_map(self.electrons, |s| Ok(vec![product(s, Empty, Empty)?])),
            2 => self.flat_map(self.electrons, |s| Ok(vec![product(s, Filled, Filled)?])),
            1 => self.flat_map(self.electrons, |s| {
                Ok(vec![product(s, Empty, Filled)?, product(s, Filled, Empty)?])
            }),
            other => Err(Error::InvalidOutcome(other.to_string())),
        }
    }

    /// Two-mode charge measurement with outcomes merged according to `grouping`.
    ///
    /// The probability of a group is the squared norm of the concatenated
    /// projections of its members; the post state is that concatenation,
    /// renormalized.
    pub fn measure_two_mode(
        &self,
        kappa: &ModeVector,
        lambda: &ModeVector,
        grouping: Grouping,
        choice: Choice<'_, OutcomeSet>,
    ) -> Result<SumMeasurement<OutcomeSet>> {
        let (branches, probabilities) = self.two_mode_branches(kappa, lambda, grouping)?;
        let groups = grouping.groups();
        let index = match choice {
            Choice::Forced(label) => groups
                .iter()
                .position(|g| *g == label)
                .ok_or_else(|| Error::InvalidOutcome(format!("{label} is not a group of {grouping}")))?,
            Choice::Sample(rng) => sample_index(rng, &probabilities),
        };
        let chosen = branches.into_iter().nth(index).expect("index within groups");
        finish_measurement(groups[index], groups[index].to_string(), probabilities[index], chosen)
    }

    /// Projected (unnormalized) state and probability for every group.
    pub fn two_mode_branches(
        &self,
        kappa: &ModeVector,
        lambda: &ModeVector,
        grouping: Grouping,
    ) -> Result<(Vec<SlaterSum>, Vec<f64>)> {
        check_orthogonal(kappa, lambda)?;
        let mut branches = Vec::new();
        for group in grouping.groups() {
            let mut acc = self.empty_like(self.electrons);
            for outcome in group.outcomes() {
                acc = acc.concat(self.apply_two_mode_projector(kappa, lambda, outcome)?)?;
            }
            branches.push(acc);
        }
        let probabilities = branches.iter().map(|b| b.norm().powi(2)).collect();
        Ok((branches, probabilities))
    }

    /// Annihilates standard modes `N−1, …, 2` from every term, leaving two
    /// electrons.
    ///
    /// Intended for states whose modes `2..N` are filled spectators that
    /// `kappa` and `lambda` do not touch.
    pub fn reduce_to_two_fermion(&self, kappa: &ModeVector, lambda: &ModeVector) -> Result<SlaterSum> {
        let n = self.electrons;
        if n <= 2 {
            return Ok(self.clone());
        }
        let overlap = (2..n)
            .flat_map(|i| [kappa.components()[i].norm(), lambda.components()[i].norm()])
            .fold(0.0, f64::max);
        if overlap > ORTHOGONALITY_TOL {
            return Err(Error::BadContext { overlap });
        }
        let mut out = self.clone();
        for i in (2..n).rev() {
            out = out.annihilate(&ModeVector::basis(self.modes, i)?)?;
        }
        Ok(out)
    }

    /// Antisymmetric `w` with `Ψ = Σ_ij w_ij a†_i a†_j |0⟩`.
    pub fn two_fermion_w(&self) -> Result<TwoFermionW> {
        if self.electrons != 2 {
            return Err(Error::WrongParticleNumber {
                expected: 2,
                found: self.electrons,
            });
        }
        let d = self.modes;
        let mut w = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in i + 1..d {
                let mut amp = ZERO;
                for t in &self.terms {
                    amp += t.coefficient * t.state.occupation_amplitude(&[i, j])?;
                }
                w[(i, j)] = amp * 0.5;
                w[(j, i)] = -amp * 0.5;
            }
        }
        Ok(TwoFermionW { w })
    }
}

fn finish_measurement<T>(outcome: T, label: String, probability: f64, branch: SlaterSum) -> Result<SumMeasurement<T>> {
    if probability < ZERO_PROBABILITY {
        return Err(Error::ImpossibleOutcome {
            outcome: label,
            probability,
        });
    }
    Ok(SumMeasurement {
        outcome,
        probability,
        post: branch.scaled(c(1.0 / probability.sqrt(), 0.0)),
    })
}

pub fn check_orthogonal(kappa: &ModeVector, lambda: &ModeVector) -> Result<()> {
    if kappa.modes() != lambda.modes() {
        return Err(Error::DimensionMismatch {
            expected: kappa.modes(),
            found: lambda.modes(),
        });
    }
    let overlap = kappa.inner(lambda).norm();
    if overlap > ORTHOGONALITY_TOL {
        return Err(Error::ModesNotOrthogonal { overlap });
    }
    Ok(())
}

/// Outcome of a measurement on a [`SlaterSum`].
#[derive(Debug, Clone)]
pub struct SumMeasurement<T> {
    pub outcome: T,
    pub probability: f64,
    pub post: SlaterSum,
}

/// A set of two-mode outcomes drawn from {0, 1, 2}, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomeSet(u8);

impl OutcomeSet {
    pub const ZERO: OutcomeSet = OutcomeSet(0b001);
    pub const ONE: OutcomeSet = OutcomeSet(0b010);
    pub const TWO: OutcomeSet = OutcomeSet(0b100);

    pub fn of(outcomes: &[u8]) -> Result<Self> {
        let mut bits = 0u8;
        for &o in outcomes {
            if o > 2 {
                return Err(Error::InvalidOutcome(o.to_string()));
            }
            bits |= 1 << o;
        }
        if bits == 0 {
            return Err(Error::InvalidOutcome(String::new()));
        }
        Ok(OutcomeSet(bits))
    }

    /// Parses labels such as `"1"` or `"02"`.
    pub fn parse(label: &str) -> Result<Self> {
        let digits: Option<Vec<u8>> = label
            .chars()
            .map(|ch| ch.to_digit(10).map(|d| d as u8))
            .collect();
        match digits {
            Some(d) if !d.is_empty() => OutcomeSet::of(&d).map_err(|_| Error::InvalidOutcome(label.to_string())),
            _ => Err(Error::InvalidOutcome(label.to_string())),
        }
    }

    pub fn outcomes(self) -> impl Iterator<Item = u8> {
        (0..3u8).filter(move |o| self.0 >> o & 1 == 1)
    }

    pub fn contains(self, outcome: u8) -> bool {
        outcome < 3 && self.0 >> outcome & 1 == 1
    }

    /// The single outcome if this set has exactly one member.
    pub fn singleton(self) -> Option<u8> {
        let mut it = self.outcomes();
        match (it.next(), it.next()) {
            (Some(o), None) => Some(o),
            _ => None,
        }
    }
}

impl fmt::Display for OutcomeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.outcomes() {
            write!(f, "{o}")?;
        }
        Ok(())
    }
}

/// Which two-mode outcomes the apparatus distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grouping {
    /// `0 | 1 | 2`
    Three,
    /// `01 | 2`
    FilledOrNot,
    /// `0 | 12`
    EmptyOrNot,
    /// `02 | 1`, the parity measurement
    Parity,
}

impl Grouping {
    pub const ALL: [Grouping; 4] = [
        Grouping::Three,
        Grouping::FilledOrNot,
        Grouping::EmptyOrNot,
        Grouping::Parity,
    ];

    pub fn groups(self) -> Vec<OutcomeSet> {
        use OutcomeSet as O;
        match self {
            Grouping::Three => vec![O::ZERO, O::ONE, O::TWO],
            Grouping::FilledOrNot => vec![O(0b011), O::TWO],
            Grouping::EmptyOrNot => vec![O::ZERO, O(0b110)],
            Grouping::Parity => vec![O(0b101), O::ONE],
        }
    }

    /// Tag used in circuit files: `012`, `01/2`, `0/12`, `02/1`.
    pub fn tag(self) -> &'static str {
        match self {
            Grouping::Three => "012",
            Grouping::FilledOrNot => "01/2",
            Grouping::EmptyOrNot => "0/12",
            Grouping::Parity => "02/1",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Grouping::ALL
            .into_iter()
            .find(|g| g.tag() == tag)
            .ok_or_else(|| Error::InvalidOutcome(format!("unknown grouping {tag:?}")))
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Antisymmetric amplitude matrix of a two-fermion state.
#[derive(Debug, Clone)]
pub struct TwoFermionW {
    w: CMatrix,
}

impl TwoFermionW {
    pub fn new(w: CMatrix) -> Result<Self> {
        let residual = crate::linalg::antisymmetry_residual(&w);
        if w.nrows() != w.ncols() {
            return Err(Error::NonSquare {
                rows: w.nrows(),
                cols: w.ncols(),
            });
        }
        if residual > 1e-10 {
            return Err(Error::NotAntisymmetric { residual });
        }
        Ok(TwoFermionW { w })
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.w
    }

    /// Submatrix on the listed modes, in the listed order.
    pub fn restrict(&self, modes: &[usize]) -> TwoFermionW {
        let k = modes.len();
        TwoFermionW {
            w: CMatrix::from_fn(k, k, |i, j| self.w[(modes[i], modes[j])]),
        }
    }

    pub fn pfaffian(&self) -> Result<C64> {
        pfaffian(&self.w)
    }

    /// Number of nonzero 2×2 blocks in the canonical form.
    pub fn slater_number(&self) -> usize {
        slater_number_two_fermion(self)
    }
}

pub fn slater_number_two_fermion(w: &TwoFermionW) -> usize {
    antisym_canonical(&w.w)
        .expect("TwoFermionW is antisymmetric by construction")
        .pairs
        .iter()
        .filter(|z| z.norm() > RANK_TOL)
        .count()
}

/// Outcome of [`generic_p1_study`].
#[derive(Debug, Clone)]
pub struct P1Study {
    /// `P_1` applied to the standard determinant, unnormalized.
    pub projected: SlaterSum,
    /// The two-electron reduction of `projected`.
    pub reduced: SlaterSum,
    /// `w` restricted to modes `0, 1, N, N+1`.
    pub w: TwoFermionW,
    pub pfaffian: C64,
    /// `sin²φ sin 2ξ / (2 f_S f_C)`; NaN where `f_S f_C = 0`.
    pub closed_form: f64,
    pub slater_number: usize,
}

/// The orthogonal pair
///
/// ```text
/// κ = cos θ |0⟩ + sin θ |N⟩
/// λ = cos φ (−sin θ |0⟩ + cos θ |N⟩) + sin φ (cos ξ |1⟩ + sin ξ |N+1⟩)
/// ```
/// in `N + 2` modes.
pub fn p1_study_modes(theta: f64, phi: f64, xi: f64, electrons: usize) -> Result<(ModeVector, ModeVector)> {
    if electrons < 2 {
        return Err(Error::BadDimensions(format!("need at least 2 electrons, got {electrons}")));
    }
    let d = electrons + 2;
    let n = electrons;
    let mut k = crate::linalg::CVector::zeros(d);
    k[0] = c(theta.cos(), 0.0);
    k[n] = c(theta.sin(), 0.0);
    let mut l = crate::linalg::CVector::zeros(d);
    l[0] = c(-phi.cos() * theta.sin(), 0.0);
    l[n] = c(phi.cos() * theta.cos(), 0.0);
    l[1] = c(phi.sin() * xi.cos(), 0.0);
    l[n + 1] = c(phi.sin() * xi.sin(), 0.0);
    Ok((ModeVector::normalized(k)?, ModeVector::normalized(l)?))
}

/// `sin²φ sin 2ξ / (2 f_S f_C)` with `f_C = √(cos²φ + cos²ξ sin²φ)` and
/// `f_S = √(cos²φ + sin²ξ sin²φ)`.
pub fn p1_pfaffian_closed_form(phi: f64, xi: f64) -> f64 {
    let (sp, cp) = phi.sin_cos();
    let (sx, cx) = xi.sin_cos();
    let f_c = (cp * cp + cx * cx * sp * sp).sqrt();
    let f_s = (cp * cp + sx * sx * sp * sp).sqrt();
    let denom = 2.0 * f_s * f_c;
    if denom == 0.0 {
        return f64::NAN;
    }
    sp * sp * (2.0 * xi).sin() / denom
}

/// Applies `P_1` for the parameterized pair of [`p1_study_modes`] to the
/// standard `N`-electron determinant, reduces to two electrons, and extracts
/// `w` on the four active modes.
pub fn generic_p1_study(theta: f64, phi: f64, xi: f64, electrons: usize) -> Result<P1Study> {
    let (kappa, lambda) = p1_study_modes(theta, phi, xi, electrons)?;
    let n = electrons;
    let start = SlaterSum::single(SlaterState::standard(n + 2, n)?);
    let projected = start.apply_two_mode_projector(&kappa, &lambda, 1)?;
    let reduced = projected.reduce_to_two_fermion(&kappa, &lambda)?;
    let w = reduced.two_fermion_w()?.restrict(&[0, 1, n, n + 1]);
    let pfaffian = w.pfaffian()?;
    let slater_number = w.slater_number();
    Ok(P1Study {
        projected,
        reduced,
        w,
        pfaffian,
        closed_form: p1_pfaffian_closed_form(phi, xi),
        slater_number,
    })
}
