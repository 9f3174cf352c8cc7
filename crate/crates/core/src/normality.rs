//! Coefficient criterion for formal normality of `H_V`, decided on a grid
//! and cross-checked against the finite-difference commutator.
//!
//! `H_V` commutes with its formal adjoint iff either
//! - Im V11 = Im V22 = const, Re V12 = Re V21, Im V12 + Im V21 = 0, or
//! - Im V11 = Im V22 = const, Re V12 = Re V21, Im V12 = Im V21 = nonzero
//!   const, Re V22 − Re V11 − 2m = 0.
//!
//! "Constant" means constant on the supplied grid only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{commutator_fd, commutator_sup};
use crate::potential::PotentialSpec;

pub const MIN_NODES: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Commutator threshold relative to `scale²`.
pub const COMMUTATOR_REL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Normal,
    NonNormal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    First,
    Second,
    None,
}

/// Worst deviation of each condition over the grid.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ConditionMargins {
    /// max |Im V11 − Im V22|
    pub im_diagonal_difference: f64,
    /// max − min of Im V11
    pub im_v11_spread: f64,
    /// max |Re V12 − Re V21|
    pub re_offdiagonal_difference: f64,
    /// max |Im V12 + Im V21|
    pub im_offdiagonal_sum: f64,
    /// max |Im V12 − Im V21|
    pub im_offdiagonal_difference: f64,
    /// max − min of Im V12
    pub im_v12_spread: f64,
    /// min |Im V12|, which must stay away from zero in the second block
    pub im_v12_min_abs: f64,
    /// max |Re V22 − Re V11 − 2m|
    pub mass_shift: f64,
}

/// The condition set the two blocks are derived from, for reference.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IntermediateConditions {
    /// max ||Im V12| − |Im V21||
    pub abs_im_offdiagonal: f64,
    /// max − min of Im V12 + Im V21
    pub im_offdiagonal_sum_spread: f64,
    /// max |(Im V12 + Im V21)(Re V22 − Re V11 − 2m)|
    pub product: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalityVerdict {
    pub verdict: Verdict,
    pub matched_branch: Branch,
    pub condition_margins: ConditionMargins,
    pub intermediate: IntermediateConditions,
    pub tol: f64,
    /// max |V_ij| over the grid, at least the mass.
    pub scale: f64,
    pub commutator_sup: f64,
    pub commutator_tol: f64,
    /// Whether the commutator agrees with the verdict.
    pub consistent: bool,
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.map(f64::abs).fold(0.0, f64::max)
}

pub fn classify(spec: &PotentialSpec, grid: &[f64], tol: f64) -> Result<NormalityVerdict> {
    if grid.len() < MIN_NODES {
        return Err(Error::GridTooSmall(format!("{} nodes, need at least {MIN_NODES}", grid.len())));
    }
    let m = spec.mass;
    let vals: Vec<_> = grid.iter().map(|&x| spec.values(x)).collect();
    let col = |f: &dyn Fn(&[num_complex::Complex64; 4]) -> f64| -> Vec<f64> { vals.iter().map(f).collect() };
    let im11 = col(&|v| v[0].im);
    let im22 = col(&|v| v[3].im);
    let re12 = col(&|v| v[1].re);
    let re21 = col(&|v| v[2].re);
    let im12 = col(&|v| v[1].im);
    let im21 = col(&|v| v[2].im);
    let shift = col(&|v| v[3].re - v[0].re - 2.0 * m);
    let sum: Vec<f64> = im12.iter().zip(&im21).map(|(a, b)| a + b).collect();

    let margins = ConditionMargins {
        im_diagonal_difference: max_abs(im11.iter().zip(&im22).map(|(a, b)| a - b)),
        im_v11_spread: spread(&im11),
        re_offdiagonal_difference: max_abs(re12.iter().zip(&re21).map(|(a, b)| a - b)),
        im_offdiagonal_sum: max_abs(sum.iter().copied()),
        im_offdiagonal_difference: max_abs(im12.iter().zip(&im21).map(|(a, b)| a - b)),
        im_v12_spread: spread(&im12),
        im_v12_min_abs: im12.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min),
        mass_shift: max_abs(shift.iter().copied()),
    };
    let intermediate = IntermediateConditions {
        abs_im_offdiagonal: max_abs(im12.iter().zip(&im21).map(|(a, b)| a.abs() - b.abs())),
        im_offdiagonal_sum_spread: spread(&sum),
        product: max_abs(sum.iter().zip(&shift).map(|(a, b)| a * b)),
    };

    let common = margins.im_diagonal_difference <= tol && margins.im_v11_spread <= tol && margins.re_offdiagonal_difference <= tol;
    let first = common && margins.im_offdiagonal_sum <= tol;
    let second = common
        && margins.im_offdiagonal_difference <= tol
        && margins.im_v12_spread <= tol
        && margins.im_v12_min_abs > tol
        && margins.mass_shift <= tol;
    let matched_branch = if first {
        Branch::First
    } else if second {
        Branch::Second
    } else {
        Branch::None
    };
    let verdict = if matched_branch == Branch::None { Verdict::NonNormal } else { Verdict::Normal };

    let scale = vals.iter().flat_map(|v| v.iter()).map(|z| z.norm()).fold(m.abs(), f64::max);
    let commutator_tol = COMMUTATOR_REL_TOL * scale * scale;
    let sup = commutator_sup(&commutator_fd(spec, grid));
    let consistent = (verdict == Verdict::Normal) == (sup <= commutator_tol);
    Ok(NormalityVerdict {
        verdict,
        matched_branch,
        condition_margins: margins,
        intermediate,
        tol,
        scale,
        commutator_sup: sup,
        commutator_tol,
        consistent,
    })
}
