//! Fermi sea of a periodic one-dimensional tight-binding chain and the
//! effect of measuring the occupation of the origin site.
//!
//! Sites are labelled by signed positions `x ∈ [−(D−1)/2, (D−1)/2]`, stored
//! at index `x mod D`. Plane waves carry `k = 2πn/D` for the same symmetric
//! range of `n`, which is why `D` must be odd.

use std::f64::consts::PI;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, C64};
use crate::slater::{Choice, ModeVector, Occupation, SlaterState, ZERO_PROBABILITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeConfig {
    sites: usize,
    electrons: usize,
}

impl LatticeConfig {
    pub fn new(sites: usize, electrons: usize) -> Result<Self> {
        if sites.is_multiple_of(2) {
            return Err(Error::BadConfig(format!("site count {sites} must be odd")));
        }
        if electrons.is_multiple_of(2) {
            return Err(Error::BadConfig(format!("electron count {electrons} must be odd")));
        }
        if electrons > sites {
            return Err(Error::BadConfig(format!("{electrons} electrons on {sites} sites")));
        }
        Ok(LatticeConfig { sites, electrons })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn electrons(&self) -> usize {
        self.electrons
    }

    /// `ν = N / D`.
    pub fn filling(&self) -> f64 {
        self.electrons as f64 / self.sites as f64
    }

    /// Largest filled `|n|`.
    pub fn fermi_index(&self) -> i64 {
        (self.electrons as i64 - 1) / 2
    }

    /// Signed site positions in ascending order.
    pub fn positions(&self) -> impl Iterator<Item = i64> {
        let half = (self.sites as i64 - 1) / 2;
        -half..=half
    }

    pub fn site_index(&self, x: i64) -> usize {
        x.rem_euclid(self.sites as i64) as usize
    }
}

/// `|k⟩` with components `e^{ikx}/√D`, `k = 2πn/D`.
pub fn plane_wave(sites: usize, n: i64) -> Result<ModeVector> {
    let half = (sites as i64 - 1) / 2;
    if sites == 0 || n.abs() > half {
        return Err(Error::IndexOutOfRange {
            index: n,
            range: format!("[{}, {}]", -half, half),
        });
    }
    let k = 2.0 * PI * n as f64 / sites as f64;
    let norm = 1.0 / (sites as f64).sqrt();
    ModeVector::new(CVector::from_fn(sites, |x, _| C64::from_polar(norm, k * x as f64)))
}

/// The `N` lowest plane waves, `n = −(N−1)/2, …, (N−1)/2`.
pub fn fermi_sea(cfg: &LatticeConfig) -> Result<SlaterState> {
    let m = cfg.fermi_index();
    let mut orbitals = CMatrix::zeros(cfg.sites, cfg.electrons);
    for (j, n) in (-m..=m).enumerate() {
        orbitals.set_column(j, plane_wave(cfg.sites, n)?.components());
    }
    SlaterState::new(orbitals, c(1.0, 0.0))
}

/// Fourier transform over the filled states,
/// `|W_s⟩ = N^{-1/2} Σ_n e^{−2πi n s/N} |k_n⟩`.
pub fn w_orbital(cfg: &LatticeConfig, s: usize) -> Result<ModeVector> {
    if s >= cfg.electrons {
        return Err(Error::IndexOutOfRange {
            index: s as i64,
            range: format!("0..{}", cfg.electrons),
        });
    }
    let m = cfg.fermi_index();
    let n_f = cfg.electrons as f64;
    let mut v = CVector::zeros(cfg.sites);
    for n in -m..=m {
        let phase = C64::from_polar(1.0 / n_f.sqrt(), -2.0 * PI * (n * s as i64) as f64 / n_f);
        v += plane_wave(cfg.sites, n)?.components() * phase;
    }
    ModeVector::new(v)
}

/// Large-`D` form of `W_0(x)`: `sin(πνx) / (π√ν x)`, and `√ν` at the origin.
pub fn w0_closed_form(filling: f64, x: f64) -> f64 {
    if x == 0.0 {
        filling.sqrt()
    } else {
        (PI * filling * x).sin() / (PI * filling.sqrt() * x)
    }
}

/// Orbital left in place of `|x=0⟩` after finding the origin empty:
/// `−√(ν/(1−ν)) |0⟩ + √(1/(1−ν)) |W_0⟩`.
pub fn empty_origin_orbital(cfg: &LatticeConfig) -> Result<ModeVector> {
    let nu = cfg.filling();
    if 1.0 - nu < ZERO_PROBABILITY {
        return Err(Error::ImpossibleOutcome {
            outcome: "0".into(),
            probability: 1.0 - nu,
        });
    }
    let mut v = w_orbital(cfg, 0)?.components() * c((1.0 / (1.0 - nu)).sqrt(), 0.0);
    v[0] -= c((nu / (1.0 - nu)).sqrt(), 0.0);
    ModeVector::new(v)
}

/// Hopping Hamiltonian `t Σ_x (|x⟩⟨x+1| + h.c.)` with periodic boundaries.
pub fn hopping_hamiltonian(sites: usize, t: f64) -> CMatrix {
    let mut h = CMatrix::zeros(sites, sites);
    if sites < 2 {
        return h;
    }
    for x in 0..sites {
        let y = (x + 1) % sites;
        h[(x, y)] += c(t, 0.0);
        h[(y, x)] += c(t, 0.0);
    }
    h
}

/// One row of the origin-measurement profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub x: i64,
    pub density_before: f64,
    pub density_after: f64,
    /// Amplitude at `x` of the orbital that replaced the measured mode.
    pub orbital: C64,
    /// Closed-form value of that orbital at `x`, with `W_0` in its large-`D` form.
    pub closed_form: f64,
}

#[derive(Debug, Clone)]
pub struct OriginMeasurement {
    pub outcome: Occupation,
    pub probability: f64,
    pub post: SlaterState,
    pub profile: Vec<ProfileRow>,
}

/// Measures the occupation of site 0 with the orbitals written in the
/// `W_s` basis: the first orbital becomes `|x=0⟩` (outcome 1) or the
/// empty-origin orbital (outcome 0), and `W_1 … W_{N−1}` are untouched.
pub fn measure_origin(cfg: &LatticeConfig, choice: Choice<'_, Occupation>) -> Result<OriginMeasurement> {
    let nu = cfg.filling();
    let outcome = match choice {
        Choice::Forced(o) => o,
        Choice::Sample(rng) => sample_origin(rng, nu),
    };
    let (probability, first) = match outcome {
        Occupation::Filled => (nu, ModeVector::basis(cfg.sites, 0)?),
        Occupation::Empty => (1.0 - nu, empty_origin_orbital(cfg)?),
    };
    let mut orbitals = CMatrix::zeros(cfg.sites, cfg.electrons);
    orbitals.set_column(0, first.components());
    for s in 1..cfg.electrons {
        orbitals.set_column(s, w_orbital(cfg, s)?.components());
    }
    let post = SlaterState::new(orbitals, c(1.0, 0.0))?;
    let before = fermi_sea(cfg)?.densities();
    let after = post.densities();
    let scale = (1.0 / (1.0 - nu)).sqrt();
    let shift = (nu / (1.0 - nu)).sqrt();
    let profile = cfg
        .positions()
        .map(|x| {
            let i = cfg.site_index(x);
            let closed_form = match outcome {
                Occupation::Filled => f64::from(u8::from(x == 0)),
                Occupation::Empty => {
                    scale * w0_closed_form(nu, x as f64) - if x == 0 { shift } else { 0.0 }
                }
            };
            ProfileRow {
                x,
                density_before: before[i],
                density_after: after[i],
                orbital: first.components()[i],
                closed_form,
            }
        })
        .collect();
    Ok(OriginMeasurement {
        outcome,
        probability,
        post,
        profile,
    })
}

fn sample_origin(rng: &mut dyn RngCore, nu: f64) -> Occupation {
    if rng.random::<f64>() < nu {
        Occupation::Filled
    } else {
        Occupation::Empty
    }
}

/// `(x, post density − ν)` over the lattice.
pub fn exchange_hole_profile(cfg: &LatticeConfig, outcome: Occupation) -> Result<Vec<(i64, f64)>> {
    let nu = cfg.filling();
    let m = measure_origin(cfg, Choice::Forced(outcome))?;
    Ok(m.profile.iter().map(|r| (r.x, r.density_after - nu)).collect())
}
