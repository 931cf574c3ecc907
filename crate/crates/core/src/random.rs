//! Random instance generators for tests, benchmarks and the CLI.
//!
//! Entries are drawn from a standard complex Gaussian, so matrices are full
//! rank with probability one.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, orthonormalize, CMatrix, CVector, C64};
use crate::multi::Grouping;
use crate::nogo::{Circuit, CircuitStep, Policy};
use crate::slater::ModeVector;

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| random_complex(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let m = random_matrix(rng, n, n);
    (&m + m.adjoint()) * c(0.5, 0.0)
}

pub fn random_antisymmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let m = random_matrix(rng, n, n);
    &m - m.transpose()
}

/// Haar-ish unitary from Gram-Schmidt of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        if let Ok(q) = orthonormalize(&random_matrix(rng, n, n)) {
            return q;
        }
    }
}

pub fn random_mode<R: Rng + ?Sized>(rng: &mut R, modes: usize) -> ModeVector {
    loop {
        if let Ok(m) = ModeVector::normalized(random_vector(rng, modes)) {
            return m;
        }
    }
}

/// A random pair of orthonormal modes.
pub fn random_mode_pair<R: Rng + ?Sized>(rng: &mut R, modes: usize) -> (ModeVector, ModeVector) {
    let q = random_unitary(rng, modes);
    (
        ModeVector::new(q.column(0).into_owned()).expect("unitary column is unit"),
        ModeVector::new(q.column(1).into_owned()).expect("unitary column is unit"),
    )
}

/// A random circuit of rotations and measurements in `modes` modes with
/// sampled outcomes. Two-mode measurements use every grouping, the parity
/// one only when `parity` is set.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, modes: usize, electrons: usize, depth: usize, parity: bool) -> Circuit {
    let groupings: Vec<Grouping> = Grouping::ALL
        .into_iter()
        .filter(|g| parity || *g != Grouping::Parity)
        .collect();
    let steps = (0..depth)
        .map(|_| match rng.random_range(0..4) {
            0 => CircuitStep::Rotate {
                unitary: random_unitary(rng, modes),
            },
            1 => CircuitStep::Generate {
                generator: random_hermitian(rng, modes),
                tau: rng.random_range(0.1..2.0),
            },
            2 => CircuitStep::MeasureOne {
                kappa: random_mode(rng, modes),
                policy: Policy::Sample,
            },
            _ => {
                let (kappa, lambda) = random_mode_pair(rng, modes);
                CircuitStep::MeasureTwo {
                    kappa,
                    lambda,
                    grouping: groupings[rng.random_range(0..groupings.len())],
                    policy: Policy::Sample,
                }
            }
        })
        .collect();
    Circuit::new(modes, electrons, steps)
}
