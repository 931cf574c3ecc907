//! Brute-force Fock-space reference simulator.
//!
//! Occupation bitmasks index the `2^D` amplitudes, with mode `m` at bit `m`.
//! `a†_m` sets bit `m` with sign `(−1)^(occupied modes below m)`, so the
//! ascending creation string `a†_0 a†_1 … |0⟩` has amplitude `+1`. Every sign
//! in the crate is anchored to this convention.
//!
//! Vectors are capped at 12 modes and density matrices at 8.

use crate::error::{Error, Result};
use crate::linalg::{c, determinant, hermitian_eigen, hermitian_exp, hermitian_residual, CMatrix, CVector, C64, ZERO};
use crate::multi::{check_orthogonal, SlaterSum, TwoFermionW};
use crate::slater::{ModeVector, Occupation, SlaterState};

pub const MAX_VECTOR_MODES: usize = 12;
pub const MAX_DENSITY_MODES: usize = 8;

fn check_limit(modes: usize, limit: usize) -> Result<()> {
    if modes > limit {
        return Err(Error::TooManyModes { modes, limit });
    }
    Ok(())
}

#[inline]
fn jw_sign(mask: usize, mode: usize) -> f64 {
    if (mask & ((1 << mode) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn masks_with_weight(modes: usize, weight: usize) -> Vec<usize> {
    (0..1usize << modes)
        .filter(|m| m.count_ones() as usize == weight)
        .collect()
}

fn occupied(mask: usize, modes: usize) -> Vec<usize> {
    (0..modes).filter(|i| mask >> i & 1 == 1).collect()
}

/// Dense many-body amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    modes: usize,
    amplitudes: CVector,
}

impl FockVector {
    pub fn zeros(modes: usize) -> Result<Self> {
        check_limit(modes, MAX_VECTOR_MODES)?;
        Ok(FockVector {
            modes,
            amplitudes: CVector::zeros(1 << modes),
        })
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::basis(modes, 0)
    }

    /// The occupation basis state `mask` with amplitude `+1`.
    pub fn basis(modes: usize, mask: usize) -> Result<Self> {
        let mut v = Self::zeros(modes)?;
        if mask >= 1 << modes {
            return Err(Error::IndexOutOfRange {
                index: mask as i64,
                range: format!("0..{}", 1usize << modes),
            });
        }
        v.amplitudes[mask] = c(1.0, 0.0);
        Ok(v)
    }

    pub fn from_amplitudes(modes: usize, amplitudes: CVector) -> Result<Self> {
        check_limit(modes, MAX_VECTOR_MODES)?;
        if amplitudes.len() != 1 << modes {
            return Err(Error::DimensionMismatch {
                expected: 1 << modes,
                found: amplitudes.len(),
            });
        }
        Ok(FockVector { modes, amplitudes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, mask: usize) -> C64 {
        self.amplitudes[mask]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn scaled(&self, factor: C64) -> FockVector {
        FockVector {
            modes: self.modes,
            amplitudes: &self.amplitudes * factor,
        }
    }

    pub fn add(&self, other: &FockVector) -> FockVector {
        FockVector {
            modes: self.modes,
            amplitudes: &self.amplitudes + &other.amplitudes,
        }
    }

    /// Norm of the component with exactly `weight` particles.
    pub fn sector_norm(&self, weight: usize) -> f64 {
        masks_with_weight(self.modes, weight)
            .into_iter()
            .map(|m| self.amplitudes[m].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn check_modes(&self, found: usize) -> Result<()> {
        if found != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found,
            });
        }
        Ok(())
    }

    fn create_standard(&self, mode: usize, factor: C64, out: &mut CVector) {
        for (mask, amp) in self.amplitudes.iter().enumerate() {
            if mask >> mode & 1 == 0 && *amp != ZERO {
                out[mask | 1 << mode] += *amp * factor * jw_sign(mask, mode);
            }
        }
    }

    fn annihilate_standard(&self, mode: usize, factor: C64, out: &mut CVector) {
        for (mask, amp) in self.amplitudes.iter().enumerate() {
            if mask >> mode & 1 == 1 && *amp != ZERO {
                out[mask ^ 1 << mode] += *amp * factor * jw_sign(mask, mode);
            }
        }
    }

    /// `a†(mode) |self⟩` with `a†(mode) = Σ_m mode_m a†_m`.
    pub fn create(&self, mode: &ModeVector) -> Result<FockVector> {
        self.check_modes(mode.modes())?;
        let mut out = CVector::zeros(self.amplitudes.len());
        for (m, coef) in mode.components().iter().enumerate() {
            if *coef != ZERO {
                self.create_standard(m, *coef, &mut out);
            }
        }
        Ok(FockVector {
            modes: self.modes,
            amplitudes: out,
        })
    }

    /// `a(mode) |self⟩` with `a(mode) = Σ_m conj(mode_m) a_m`.
    pub fn annihilate(&self, mode: &ModeVector) -> Result<FockVector> {
        self.check_modes(mode.modes())?;
        let mut out = CVector::zeros(self.amplitudes.len());
        for (m, coef) in mode.components().iter().enumerate() {
            if *coef != ZERO {
                self.annihilate_standard(m, coef.conj(), &mut out);
            }
        }
        Ok(FockVector {
            modes: self.modes,
            amplitudes: out,
        })
    }

    /// `a(κ) a†(κ)` for empty, `a†(κ) a(κ)` for filled.
    pub fn project_mode(&self, kappa: &ModeVector, occupation: Occupation) -> Result<FockVector> {
        match occupation {
            Occupation::Empty => self.create(kappa)?.annihilate(kappa),
            Occupation::Filled => self.annihilate(kappa)?.create(kappa),
        }
    }

    /// Applies `P_0`, `P_1` or `P_2` for the orthogonal pair `kappa`, `lambda`.
    pub fn project_two_mode(&self, kappa: &ModeVector, lambda: &ModeVector, outcome: u8) -> Result<FockVector> {
        check_orthogonal(kappa, lambda)?;
        use Occupation::{Empty, Filled};
        let product = |ok, ol| -> Result<FockVector> { self.project_mode(lambda, ol)?.project_mode(kappa, ok) };
        match outcome {
            0 => product(Empty, Empty),
            2 => product(Filled, Filled),
            1 => Ok(product(Empty, Filled)?.add(&product(Filled, Empty)?)),
            other => Err(Error::InvalidOutcome(other.to_string())),
        }
    }

    /// `exp(−i H τ) |self⟩` with `H = Σ b_ij a†_i a_j`, computed block by block
    /// in each particle-number sector.
    pub fn evolve_one_body(&self, b: &CMatrix, tau: f64) -> Result<FockVector> {
        self.check_modes(b.nrows())?;
        if b.ncols() != b.nrows() {
            return Err(Error::NonSquare {
                rows: b.nrows(),
                cols: b.ncols(),
            });
        }
        let residual = hermitian_residual(b);
        if residual > crate::linalg::STRUCTURE_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let d = self.modes;
        let mut out = CVector::zeros(self.amplitudes.len());
        for k in 0..=d {
            let masks = masks_with_weight(d, k);
            let block: CVector = CVector::from_iterator(masks.len(), masks.iter().map(|&m| self.amplitudes[m]));
            if block.norm() == 0.0 {
                continue;
            }
            let h = sector_hamiltonian(b, d, &masks);
            let u = hermitian_exp(&h, tau)?;
            let evolved = u * block;
            for (pos, &m) in masks.iter().enumerate() {
                out[m] = evolved[pos];
            }
        }
        Ok(FockVector {
            modes: d,
            amplitudes: out,
        })
    }
}

impl FockVector {
    /// Second-quantized action of a single-particle unitary `V`: within each
    /// particle-number sector `⟨I|Γ(V)|J⟩ = det V[I, J]`.
    pub fn apply_unitary(&self, v: &CMatrix) -> Result<FockVector> {
        self.check_modes(v.nrows())?;
        if v.ncols() != v.nrows() {
            return Err(Error::NonSquare {
                rows: v.nrows(),
                cols: v.ncols(),
            });
        }
        let d = self.modes;
        let mut out = CVector::zeros(self.amplitudes.len());
        for k in 0..=d {
            let masks = masks_with_weight(d, k);
            let sets: Vec<Vec<usize>> = masks.iter().map(|&m| occupied(m, d)).collect();
            for (j, &mj) in masks.iter().enumerate() {
                let amp = self.amplitudes[mj];
                if amp == ZERO {
                    continue;
                }
                for (i, &mi) in masks.iter().enumerate() {
                    let minor = CMatrix::from_fn(k, k, |r, col| v[(sets[i][r], sets[j][col])]);
                    out[mi] += determinant(&minor)? * amp;
                }
            }
        }
        Ok(FockVector {
            modes: d,
            amplitudes: out,
        })
    }
}

/// Matrix of `Σ b_ij a†_i a_j` restricted to the basis `masks` (one sector).
fn sector_hamiltonian(b: &CMatrix, d: usize, masks: &[usize]) -> CMatrix {
    let index: std::collections::HashMap<usize, usize> = masks.iter().enumerate().map(|(p, &m)| (m, p)).collect();
    let mut h = CMatrix::zeros(masks.len(), masks.len());
    for (col, &mask) in masks.iter().enumerate() {
        for j in occupied(mask, d) {
            let removed = mask ^ 1 << j;
            let s1 = jw_sign(mask, j);
            for i in 0..d {
                if removed >> i & 1 == 1 || b[(i, j)] == ZERO {
                    continue;
                }
                let target = removed | 1 << i;
                let s2 = jw_sign(removed, i);
                h[(index[&target], col)] += b[(i, j)] * s1 * s2;
            }
        }
    }
    h
}

/// Fock expansion of a determinant: `c · det Φ[rows, :]` on each weight-N mask.
pub fn expand(s: &SlaterState) -> Result<FockVector> {
    let d = s.modes();
    let mut v = FockVector::zeros(d)?;
    for mask in masks_with_weight(d, s.electrons()) {
        v.amplitudes[mask] = s.occupation_amplitude(&occupied(mask, d))?;
    }
    Ok(v)
}

/// Fock expansion of a superposition.
pub fn expand_sum(s: &SlaterSum) -> Result<FockVector> {
    let mut v = FockVector::zeros(s.modes())?;
    for t in s.terms() {
        v = v.add(&expand(&t.state)?.scaled(t.coefficient));
    }
    Ok(v)
}

/// `a†(mode)` as a `2^D × 2^D` matrix.
pub fn creation_matrix(mode: &ModeVector) -> Result<CMatrix> {
    operator_matrix(mode.modes(), |v| v.create(mode))
}

/// `a(mode)` as a `2^D × 2^D` matrix.
pub fn annihilation_matrix(mode: &ModeVector) -> Result<CMatrix> {
    operator_matrix(mode.modes(), |v| v.annihilate(mode))
}

/// `P_outcome` for the pair `kappa`, `lambda` as a matrix.
pub fn two_mode_projector_matrix(kappa: &ModeVector, lambda: &ModeVector, outcome: u8) -> Result<CMatrix> {
    operator_matrix(kappa.modes(), |v| v.project_two_mode(kappa, lambda, outcome))
}

fn operator_matrix<F>(modes: usize, op: F) -> Result<CMatrix>
where
    F: Fn(&FockVector) -> Result<FockVector>,
{
    check_limit(modes, MAX_VECTOR_MODES)?;
    let dim = 1 << modes;
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let image = op(&FockVector::basis(modes, col)?)?;
        m.set_column(col, &image.amplitudes);
    }
    Ok(m)
}

/// `|⟨v1|v2⟩| / (‖v1‖ ‖v2‖)`.
pub fn fidelity(v1: &FockVector, v2: &FockVector) -> Result<f64> {
    v1.check_modes(v2.modes)?;
    let (n1, n2) = (v1.norm(), v2.norm());
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(v1.inner(v2).norm() / (n1 * n2))
}

/// `w` of a two-particle Fock vector, `w_ij = A(i, j) / 2` for `i < j`.
pub fn two_fermion_w(v: &FockVector) -> Result<TwoFermionW> {
    let d = v.modes;
    let total = v.norm();
    if let Some(k) = (0..=d).filter(|&k| k != 2).max_by(|&a, &b| v.sector_norm(a).total_cmp(&v.sector_norm(b))) {
        if v.sector_norm(k) > 1e-9 * total.max(1.0) {
            return Err(Error::WrongParticleNumber { expected: 2, found: k });
        }
    }
    let mut w = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in i + 1..d {
            let a = v.amplitudes[1 << i | 1 << j];
            w[(i, j)] = a * 0.5;
            w[(j, i)] = -a * 0.5;
        }
    }
    TwoFermionW::new(w)
}

/// Density matrix on `2^D` occupation states.
#[derive(Debug, Clone)]
pub struct FockDensity {
    modes: usize,
    matrix: CMatrix,
}

impl FockDensity {
    pub fn from_matrix(modes: usize, matrix: CMatrix) -> Result<Self> {
        check_limit(modes, MAX_DENSITY_MODES)?;
        if matrix.nrows() != 1 << modes || matrix.ncols() != 1 << modes {
            return Err(Error::DimensionMismatch {
                expected: 1 << modes,
                found: matrix.nrows(),
            });
        }
        let residual = hermitian_residual(&matrix);
        if residual > 1e-9 {
            return Err(Error::NotHermitian { residual });
        }
        Ok(FockDensity { modes, matrix })
    }

    /// `|v⟩⟨v|` for normalized `v`.
    pub fn pure(v: &FockVector) -> Result<Self> {
        check_limit(v.modes, MAX_DENSITY_MODES)?;
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let u = &v.amplitudes / c(n, 0.0);
        Ok(FockDensity {
            modes: v.modes,
            matrix: &u * u.adjoint(),
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Eigenpairs in descending eigenvalue order.
    pub fn eigen(&self) -> Result<Vec<(f64, FockVector)>> {
        let (values, vectors) = hermitian_eigen(&self.matrix)?;
        let mut pairs: Vec<(f64, FockVector)> = values
            .into_iter()
            .enumerate()
            .map(|(i, val)| {
                (
                    val,
                    FockVector {
                        modes: self.modes,
                        amplitudes: vectors.column(i).into_owned(),
                    },
                )
            })
            .collect();
        pairs.reverse();
        Ok(pairs)
    }

    /// Traces out mode `zeta`:
    /// `ρ ↦ A_1 ρ A_1† + A_2 ρ A_2†` with `A_1 = a_ζ a†_ζ`, `A_2 = a†_ζ a_ζ`.
    pub fn trace_out(&self, zeta: &ModeVector) -> Result<FockDensity> {
        if zeta.modes() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: zeta.modes(),
            });
        }
        let create = creation_matrix(zeta)?;
        let destroy = annihilation_matrix(zeta)?;
        let empty = &destroy * &create;
        let filled = &create * &destroy;
        let matrix = &empty * &self.matrix * empty.adjoint() + &filled * &self.matrix * filled.adjoint();
        Ok(FockDensity {
            modes: self.modes,
            matrix,
        })
    }
}
