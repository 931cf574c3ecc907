//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex<f64>`. Decompositions
//! that nalgebra already provides (LU, SVD, Hermitian eigensolver) are used
//! directly; Gram-Schmidt, the Pfaffian and the antisymmetric canonical form
//! are implemented here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Singular values at or below this are treated as zero when counting rank.
pub const RANK_TOL: f64 = 1e-9;
/// Smallest singular value accepted by [`orthonormalize`].
pub const SINGULAR_TOL: f64 = 1e-10;
/// Target orthonormality of Gram-Schmidt output.
pub const ORTHO_TOL: f64 = 1e-12;
/// Residual accepted for Hermitian, antisymmetric and unitary inputs.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Tolerances used by the rank-sensitive routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinalgConfig {
    pub rank_tol: f64,
    pub singular_tol: f64,
    pub structure_tol: f64,
}

impl Default for LinalgConfig {
    fn default() -> Self {
        LinalgConfig {
            rank_tol: RANK_TOL,
            singular_tol: SINGULAR_TOL,
            structure_tol: STRUCTURE_TOL,
        }
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn antisymmetry_residual(m: &CMatrix) -> f64 {
    max_abs(&(m + m.transpose()))
}

/// `max |(M†M − I)_ij|`, i.e. how far the columns are from orthonormal.
pub fn orthonormality_residual(m: &CMatrix) -> f64 {
    let k = m.ncols();
    max_abs(&(m.adjoint() * m - CMatrix::identity(k, k)))
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn require_unitary(m: &CMatrix) -> Result<()> {
    require_square(m)?;
    let residual = orthonormality_residual(m);
    if residual > STRUCTURE_TOL {
        return Err(Error::NotUnitary { residual });
    }
    Ok(())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    singular_values(m).into_iter().filter(|&s| s > tol).count()
}

/// Gram-Schmidt with the default tolerances.
pub fn orthonormalize(cols: &CMatrix) -> Result<CMatrix> {
    orthonormalize_with(cols, &LinalgConfig::default())
}

/// Orthonormalizes the columns of `cols`.
///
/// The result `Q` satisfies `cols = Q R` with `R` upper triangular and a
/// positive real diagonal, so the first column of `Q` is the normalized first
/// input column. Modified Gram-Schmidt is run twice per column, which keeps
/// `‖Q†Q − I‖` at roundoff level for the small, well-conditioned inputs this
/// crate deals with.
pub fn orthonormalize_with(cols: &CMatrix, cfg: &LinalgConfig) -> Result<CMatrix> {
    let (rows, k) = cols.shape();
    if k == 0 {
        return Ok(cols.clone());
    }
    if k > rows {
        return Err(Error::RankDeficient { smallest: 0.0 });
    }
    let smallest = singular_values(cols).last().copied().unwrap_or(0.0);
    if smallest <= cfg.singular_tol {
        return Err(Error::RankDeficient { smallest });
    }
    let mut q = cols.clone();
    for j in 0..k {
        let mut v = q.column(j).into_owned();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let proj = qi.dotc(&v);
                v -= qi * proj;
            }
        }
        let norm = v.norm();
        if norm <= cfg.singular_tol {
            return Err(Error::RankDeficient { smallest: norm });
        }
        q.set_column(j, &(v / c(norm, 0.0)));
    }
    Ok(q)
}

/// Extends the unit vector `first` to a `dim × dim` unitary whose first column
/// is `first`.
///
/// Remaining columns are taken greedily from the standard basis (largest
/// residual first, lowest index on ties), so `first = e_1` yields the identity.
pub fn complete_basis(first: &CVector) -> Result<CMatrix> {
    let dim = first.len();
    let norm = first.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut basis: Vec<CVector> = vec![first / c(norm, 0.0)];
    let mut used = vec![false; dim];
    while basis.len() < dim {
        let mut best: Option<(usize, CVector, f64)> = None;
        for (j, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut v = CVector::zeros(dim);
            v[j] = ONE;
            for _pass in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&v);
                    v -= b * proj;
                }
            }
            let r = v.norm();
            if best.as_ref().is_none_or(|(_, _, br)| r > *br + 1e-14) {
                best = Some((j, v, r));
            }
        }
        let (j, v, r) = best.expect("candidate pool cannot be empty before the basis is complete");
        used[j] = true;
        basis.push(v / c(r, 0.0));
    }
    Ok(CMatrix::from_columns(&basis))
}

/// Determinant via LU with partial pivoting. The empty matrix has determinant 1.
pub fn determinant(m: &CMatrix) -> Result<C64> {
    let n = require_square(m)?;
    if n == 0 {
        return Ok(ONE);
    }
    Ok(m.clone().lu().determinant())
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    require_square(m)?;
    let residual = hermitian_residual(m);
    if residual > STRUCTURE_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// `exp(−i·h·tau)` for Hermitian `h`.
pub fn hermitian_exp(h: &CMatrix, tau: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h)?;
    let phases = CVector::from_iterator(
        values.len(),
        values.iter().map(|&e| C64::from_polar(1.0, -e * tau)),
    );
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, j)] * phases[j]);
    Ok(scaled * vectors.adjoint())
}

/// Single-particle propagator `V = exp(−i b τ)` for a generator held constant
/// over the interval.
pub fn one_body_unitary(b: &CMatrix, tau: f64) -> Result<CMatrix> {
    hermitian_exp(b, tau)
}

fn require_antisymmetric(w: &CMatrix, tol: f64) -> Result<usize> {
    let n = require_square(w)?;
    let residual = antisymmetry_residual(w);
    if residual > tol {
        return Err(Error::NotAntisymmetric { residual });
    }
    Ok(n)
}

/// Pfaffian of an even-dimensional antisymmetric matrix.
///
/// Dimensions up to 8 use the expansion along the first row; larger matrices
/// use skew-symmetric Gaussian elimination with partial pivoting.
pub fn pfaffian(w: &CMatrix) -> Result<C64> {
    let n = require_antisymmetric(w, STRUCTURE_TOL)?;
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if n <= 8 {
        Ok(pfaffian_expansion(w))
    } else {
        Ok(pfaffian_elimination(w))
    }
}

/// Recursive first-row expansion,
/// `Pf(A) = Σ_j (−1)^(j+1) a_0j Pf(A without rows/cols 0, j)`.
pub fn pfaffian_expansion(w: &CMatrix) -> C64 {
    let idx: Vec<usize> = (0..w.nrows()).collect();
    expand_rows(w, &idx)
}

fn expand_rows(w: &CMatrix, idx: &[usize]) -> C64 {
    match idx.len() {
        0 => ONE,
        2 => w[(idx[0], idx[1])],
        _ => {
            let first = idx[0];
            let mut total = ZERO;
            for k in 1..idx.len() {
                let entry = w[(first, idx[k])];
                if entry == ZERO {
                    continue;
                }
                let rest: Vec<usize> = idx[1..]
                    .iter()
                    .enumerate()
                    .filter(|&(p, _)| p + 1 != k)
                    .map(|(_, &i)| i)
                    .collect();
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                total += entry * expand_rows(w, &rest) * sign;
            }
            total
        }
    }
}

/// Parlett-Reid style elimination, `O(n³)`.
pub fn pfaffian_elimination(w: &CMatrix) -> C64 {
    let n = w.nrows();
    let mut a = w.clone();
    let mut pf = ONE;
    let mut k = 0;
    while k + 1 < n {
        // pivot: largest entry below the diagonal in column k
        let mut kp = k + 1;
        for i in k + 2..n {
            if a[(i, k)].norm() > a[(kp, k)].norm() {
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        let pivot = a[(k, k + 1)];
        if pivot == ZERO {
            return ZERO;
        }
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|j| a[(k, j)] / pivot).collect();
            let col: Vec<C64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

/// Antisymmetric canonical form `U w Uᵀ = ⊕_r [[0, z_r], [−z_r, 0]] ⊕ 0`.
#[derive(Debug, Clone)]
pub struct AntisymCanonical {
    /// Unitary `U` bringing `w` to block form.
    pub unitary: CMatrix,
    /// Nonzero block coefficients, sorted by descending modulus.
    pub pairs: Vec<C64>,
}

impl AntisymCanonical {
    pub fn rank(&self) -> usize {
        2 * self.pairs.len()
    }

    /// The block-diagonal matrix described by `pairs` in dimension `n`.
    pub fn canonical_matrix(&self, n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for (r, z) in self.pairs.iter().enumerate() {
            m[(2 * r, 2 * r + 1)] = *z;
            m[(2 * r + 1, 2 * r)] = -*z;
        }
        m
    }
}

pub fn antisym_canonical(w: &CMatrix) -> Result<AntisymCanonical> {
    antisym_canonical_with(w, &LinalgConfig::default())
}

/// Computes the canonical form by repeated deflation of the top singular pair.
///
/// For antisymmetric `A` with `A v = s u`, the vectors `ū` and `v` are
/// orthonormal and `(ū)ᵀ A v = s`; taking them as the first two rows of `U`
/// splits off one 2×2 block. The process repeats on the orthogonal
/// complement until the remaining singular values fall below `rank_tol`.
pub fn antisym_canonical_with(w: &CMatrix, cfg: &LinalgConfig) -> Result<AntisymCanonical> {
    let n = require_antisymmetric(w, cfg.structure_tol)?;
    if let Some(pairs) = already_canonical(w, cfg.rank_tol) {
        return Ok(AntisymCanonical {
            unitary: CMatrix::identity(n, n),
            pairs,
        });
    }
    let mut basis: Vec<CVector> = Vec::with_capacity(n);
    let mut pairs = Vec::new();
    let mut remaining = CMatrix::identity(n, n);
    while remaining.ncols() >= 2 {
        let m = remaining.ncols();
        let local = remaining.transpose() * w * &remaining;
        let svd = local.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let (top, s) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty block");
        if s <= cfg.rank_tol {
            break;
        }
        let v: CVector = v_t.row(top).adjoint();
        let u: CVector = (&local * &v) / c(s, 0.0);
        let u_bar = u.map(|z| z.conj());
        let local_basis = complete_pair_basis(&u_bar, &v)?;
        basis.push(&remaining * local_basis.column(0));
        basis.push(&remaining * local_basis.column(1));
        pairs.push(c(s, 0.0));
        remaining = if m > 2 {
            &remaining * local_basis.columns(2, m - 2)
        } else {
            CMatrix::zeros(n, 0)
        };
    }
    for j in 0..remaining.ncols() {
        basis.push(remaining.column(j).into_owned());
    }
    let y = CMatrix::from_columns(&basis);
    Ok(AntisymCanonical {
        unitary: y.transpose(),
        pairs,
    })
}

/// Orthonormal basis whose first two columns are the (orthonormal) inputs.
fn complete_pair_basis(a: &CVector, b: &CVector) -> Result<CMatrix> {
    let full = complete_basis(a)?;
    let dim = a.len();
    let mut cols = vec![a.clone(), b.clone()];
    let mut candidates: Vec<CVector> = (1..dim).map(|j| full.column(j).into_owned()).collect();
    // drop the candidate most parallel to b, orthogonalize the rest against b
    let worst = candidates
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.dotc(b).norm().total_cmp(&y.1.dotc(b).norm()))
        .map(|(i, _)| i)
        .expect("dim >= 2");
    candidates.remove(worst);
    for cand in candidates {
        let mut v = cand;
        for _pass in 0..2 {
            for q in &cols {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let r = v.norm();
        if r <= SINGULAR_TOL {
            return Err(Error::RankDeficient { smallest: r });
        }
        cols.push(v / c(r, 0.0));
    }
    Ok(CMatrix::from_columns(&cols))
}

/// Returns the pair list if `w` already has the canonical block layout with
/// real nonnegative, descending coefficients.
fn already_canonical(w: &CMatrix, tol: f64) -> Option<Vec<C64>> {
    let n = w.nrows();
    let mut pairs = Vec::new();
    let mut last = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let in_block = i / 2 == j / 2 && i != j && (i / 2) * 2 + 1 < n;
            if !in_block && w[(i, j)].norm() > tol {
                return None;
            }
        }
    }
    for r in 0..n / 2 {
        let z = w[(2 * r, 2 * r + 1)];
        if z.im.abs() > tol || z.re < -tol || z.re > last + tol {
            return None;
        }
        last = z.re;
        if z.re > tol {
            pairs.push(z);
        }
    }
    Some(pairs)
}
