//! WKB pseudomodes for one-dimensional Dirac operators
//! `H_V = −iσ1 ∂ + mσ3 + V` with complex matrix potentials `V`.
//!
//! The analytic path builds the phase from truncated Taylor jets of the
//! potential and evaluates residual norms by quadrature; [`oracle`] applies
//! the operator to sampled spinors by finite differences as an independent
//! check.

pub mod analysis;
pub mod cutoff;
pub mod error;
pub mod jets;
pub mod normality;
pub mod oracle;
pub mod potential;
pub mod pseudomode;
pub mod quadrature;
pub mod wkb;

pub use error::{Error, ErrorKind, Result};
pub use jets::Jet;
pub use num_complex::Complex64;
pub use potential::{catalog, Component, Domain, Orientation, Params, PotentialSpec};
pub use cutoff::{Bump, CutoffPlan};
pub use wkb::{Sign, SpectralParameter};
