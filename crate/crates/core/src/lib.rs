//! Classical simulation of fermionic linear optics on Slater determinants,
//! including single- and two-mode charge measurements, superpositions of
//! determinants, and a brute-force Fock-space reference.

pub mod bands;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod multi;
pub mod nogo;
pub mod random;
pub mod slater;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use multi::{Grouping, OutcomeSet, SlaterSum, SlaterTerm, TwoFermionW};
pub use slater::{Choice, ModeVector, Occupation, SlaterState};
