//! Finite-difference application of `H_V − λ` to sampled spinors.
//!
//! Nothing here touches the jet derivatives of the analytic residual: the
//! operator is applied to sampled values with 4th-order central stencils.
//! Small residual ratios (down to ~1e-11 at the top of the rate sweeps) sit
//! far below f64 cancellation noise in `−i f2' + (V11 + m − λ) f1`, so
//! samples and stencils are carried in double-double arithmetic.
//!
//! A pseudomode is sampled as an envelope `E(x)` with `Ψ = E e^{−ic(x−a)}`
//! (the carrier `c` removes the `O(λ)` oscillation). `E` is accumulated from
//! its logarithmic derivative by a Hermite-corrected trapezoid rule on the
//! same grid; the integrand is `P'` itself, not the panel quadrature.

use num_complex::{Complex, Complex64};
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::pseudomode::Pseudomode;
use crate::wkb::local_wkb;

pub type DdComplex = Complex<TwoFloat>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sampled nodes are kept where `D − min D` is at most this; beyond it the
/// spinor is below `e^{−35}` of its peak.
pub const SAMPLE_DECAY: f64 = 35.0;
const MAX_NODES: usize = 20_000_000;

pub fn dd(z: Complex64) -> DdComplex {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

pub fn lower(z: DdComplex) -> Complex64 {
    Complex64::new(f64::from(z.re), f64::from(z.im))
}

fn dd_scale(z: DdComplex, s: f64) -> DdComplex {
    let s = TwoFloat::from(s);
    Complex::new(z.re * s, z.im * s)
}

/// `1/z` from the f64 reciprocal and one Newton step. The library's
/// double-double division only carries f64 precision.
pub fn dd_recip(z: DdComplex) -> DdComplex {
    let r0 = dd(lower(z).inv());
    let one = dd(Complex64::new(1.0, 0.0));
    r0 + r0 * (one - z * r0)
}

fn dd_norm_sqr(z: DdComplex) -> f64 {
    f64::from(z.re * z.re + z.im * z.im)
}

/// `e^z` in double-double: Taylor series after scaling into `|z| ≤ 1/8`.
pub fn dd_exp(z: DdComplex) -> DdComplex {
    let mag = lower(z).norm();
    let squarings = if mag > 0.125 { (mag / 0.125).log2().ceil() as u32 } else { 0 };
    let w = dd_scale(z, 0.5f64.powi(squarings as i32));
    let one = dd(Complex64::new(1.0, 0.0));
    let mut sum = one;
    let mut term = one;
    for k in 1..40 {
        term = dd_scale(term * w, 1.0 / k as f64);
        sum = sum + term;
        if lower(term).norm() < 1e-34 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Uniform samples `f(x0 + i h)` of a spinor written as `E(x) e^{−ic(x−a)}`;
/// `values` holds `E`.
#[derive(Clone, Debug)]
pub struct SampledSpinor {
    pub x0: f64,
    pub h: f64,
    pub carrier: f64,
    pub anchor: f64,
    pub values: Vec<[DdComplex; 2]>,
}

impl SampledSpinor {
    /// Plain samples (no carrier).
    pub fn from_values(x0: f64, h: f64, values: Vec<[Complex64; 2]>) -> Self {
        SampledSpinor {
            x0,
            h,
            carrier: 0.0,
            anchor: x0,
            values: values.into_iter().map(|[a, b]| [dd(a), dd(b)]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// The spinor itself (carrier restored) at node `i`, rounded to f64.
    pub fn value(&self, i: usize) -> [Complex64; 2] {
        let c = (-I * self.carrier * (self.node(i) - self.anchor)).exp();
        [lower(self.values[i][0]) * c, lower(self.values[i][1]) * c]
    }

    /// Trapezoid L² norms of the two components.
    pub fn component_norms(&self) -> [f64; 2] {
        let n = self.values.len();
        let mut acc = [0.0; 2];
        for (i, v) in self.values.iter().enumerate() {
            let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            acc[0] += w * dd_norm_sqr(v[0]);
            acc[1] += w * dd_norm_sqr(v[1]);
        }
        [(acc[0] * self.h).sqrt(), (acc[1] * self.h).sqrt()]
    }

    pub fn norm(&self) -> f64 {
        let [a, b] = self.component_norms();
        a.hypot(b)
    }

    /// Largest `|Δf|/|f|` between neighbouring nodes, ignoring nodes where
    /// the spinor is below `1e-8` of its peak.
    pub fn resolution(&self) -> f64 {
        let mags: Vec<f64> = self.values.iter().map(|v| (dd_norm_sqr(v[0]) + dd_norm_sqr(v[1])).sqrt()).collect();
        let peak = mags.iter().copied().fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 1..self.values.len() {
            let m = mags[i].max(mags[i - 1]);
            if m <= 1e-8 * peak {
                continue;
            }
            let d0 = lower(self.values[i][0] - self.values[i - 1][0]);
            let d1 = lower(self.values[i][1] - self.values[i - 1][1]);
            worst = worst.max(d0.norm().hypot(d1.norm()) / m);
        }
        worst
    }
}

/// `(H_V − λ) f` on the interior nodes `2..len−2` of `s`.
///
/// Fails with `UnderResolved` when neighbouring samples differ by more than
/// a tenth of their size.
pub fn apply_dirac_fd(spec: &PotentialSpec, lambda: Complex64, s: &SampledSpinor) -> Result<SampledSpinor> {
    let n = s.values.len();
    if n < 5 {
        return Err(Error::invalid("grid", "needs at least 5 nodes"));
    }
    let res = s.resolution();
    if res > 0.1 {
        return Err(Error::UnderResolved { value: res });
    }
    let m = spec.mass;
    let inv = 1.0 / (12.0 * s.h);
    let deriv = |i: usize, k: usize| -> DdComplex {
        let v = &s.values;
        let num = (v[i - 2][k] - v[i + 2][k]) + dd_scale(v[i + 1][k] - v[i - 1][k], 8.0);
        dd_scale(num, inv)
    };
    let minus_i = dd(-I);
    let c = dd(Complex64::new(s.carrier, 0.0));
    let shift_minus = dd(Complex64::new(m, 0.0)) - dd(lambda);
    let shift_plus = dd(Complex64::new(-m, 0.0)) - dd(lambda);
    let mut out = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let [v11, v12, v21, v22] = spec.values(s.node(i));
        let [f1, f2] = s.values[i];
        let row1 = minus_i * deriv(i, 1) - c * f2 + dd(v12) * f2 + (dd(v11) + shift_minus) * f1;
        let row2 = minus_i * deriv(i, 0) - c * f1 + dd(v21) * f1 + (dd(v22) + shift_plus) * f2;
        out.push([row1, row2]);
    }
    Ok(SampledSpinor { x0: s.node(2), h: s.h, carrier: s.carrier, anchor: s.anchor, values: out })
}

/// Interval on which the pseudomode is above `e^{−SAMPLE_DECAY}` of its
/// peak, clipped to the cutoff support.
pub fn sampling_interval(pm: &Pseudomode) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for node in pm.nodes() {
        if node.decay() - pm.shift <= SAMPLE_DECAY && node.xi[0] != 0.0 {
            lo = lo.min(node.x);
            hi = hi.max(node.x);
        }
    }
    let (wlo, whi) = pm.window();
    let (slo, shi) = pm.plan.bump.support();
    // extend to the neighbouring panel ends so the edges are fully inside
    let lo = pm.panels.iter().rev().find(|p| p.a <= lo).map_or(wlo, |p| p.a).max(slo).max(wlo);
    let hi = pm.panels.iter().find(|p| p.b >= hi).map_or(whi, |p| p.b).min(shi).min(whi);
    (lo, hi)
}

/// Largest `|d ln E/dx| = |kP' − ic + iV21|` over the sampling interval,
/// plus the cutoff's `|ξ'/ξ|` where `ξ` is above the resolution floor.
pub fn envelope_rate(pm: &Pseudomode) -> f64 {
    let (lo, hi) = sampling_interval(pm);
    let k = pm.phase_scale;
    pm.nodes()
        .filter(|n| n.x >= lo && n.x <= hi)
        .map(|n| {
            let cut = if n.xi[0] > 1e-8 { (n.xi[1] / n.xi[0]).abs() } else { 0.0 };
            (k * n.dp - I * pm.carrier + I * n.v[2]).norm() + cut
        })
        .fold(0.0, f64::max)
}

/// Default spacing: the larger of 8192 nodes over the interval and
/// `40/π` nodes per unit of the envelope rate.
pub fn default_step(pm: &Pseudomode) -> f64 {
    let (lo, hi) = sampling_interval(pm);
    let width = hi - lo;
    let count = (40.0 * envelope_rate(pm) * width / std::f64::consts::PI).max(8192.0);
    width / count
}

/// `(P', P'')` at `x` with `P'` in double-double: the `O(λ)` leading term
/// is refined by one Newton step on the eikonal `w² = −V_λ`.
fn phase_derivatives(pm: &Pseudomode, x: f64) -> Result<(DdComplex, Complex64, [Complex64; 4], [f64; 3])> {
    let lambda = pm.param.lambda;
    let loc = local_wkb(&pm.spec, pm.param, pm.n, x)?;
    let (lead, rest) = loc.phase_derivative_parts(lambda);
    let [v11, _, _, v22] = loc.v;
    let m = pm.spec.mass;
    let l = dd(lambda);
    let mm = dd(Complex64::new(m, 0.0));
    let v_lambda = (l - mm - dd(v11)) * (l + mm - dd(v22));
    let w0 = dd(lead);
    let w = w0 - (v_lambda + w0 * w0) * dd_recip(dd_scale(w0, 2.0));
    let xi = pm.plan.bump.eval(x);
    Ok((w + dd(rest), loc.phase_second_derivative(lambda), loc.v, xi))
}

/// Samples `Ψ` of `pm` (with its phase scale) on `x0 + i h`, `i < count`.
pub fn sample_pseudomode(pm: &Pseudomode, x0: f64, h: f64, count: usize) -> Result<SampledSpinor> {
    if count < 2 || count > MAX_NODES || !(h > 0.0) {
        return Err(Error::invalid("grid", format!("{count} nodes with spacing {h}")));
    }
    let k = pm.phase_scale;
    let kd = dd(Complex64::new(k, 0.0));
    let c = pm.carrier;
    let m = pm.spec.mass;
    let lambda = pm.param.lambda;
    let start = {
        let Some((q, s)) = pm.reduced_phase(x0) else {
            return Err(Error::invalid("grid", format!("x0 = {x0} is outside the pseudomode window")));
        };
        (-I * s - k * q - I * (k - 1.0) * c * (x0 - pm.anchor) + pm.shift).exp()
    };
    let mut values = Vec::with_capacity(count);
    let mut e = dd(start);
    let mut prev: Option<(DdComplex, Complex64)> = None;
    for i in 0..count {
        let x = x0 + i as f64 * h;
        let (dp, ddp, v, xi) = phase_derivatives(pm, x)?;
        let v21_jet = pm.spec.jet(crate::potential::Component::V21, x, 1)?;
        // logarithmic derivative of E is −f
        let f = kd * dp + dd(-I * c) + dd(I * v[2]);
        let df = k * ddp + I * v21_jet.derivative(1);
        if let Some((f0, df0)) = prev {
            let incr = dd_scale(f0 + f, 0.5 * h) + dd(h * h / 12.0 * (df0 - df));
            e = e * dd_exp(-incr);
        }
        prev = Some((f, df));
        let l = dd(lambda);
        let d22 = l + dd(Complex64::new(m, 0.0)) - dd(v[3]);
        let first = dd_scale(e, xi[0]);
        let inner = dd(Complex64::new(xi[1], 0.0)) - dd_scale(kd * dp, xi[0]);
        let second = e * dd(-I) * inner * dd_recip(d22);
        values.push([first, second]);
    }
    Ok(SampledSpinor { x0, h, carrier: c, anchor: pm.anchor, values })
}

#[derive(Clone, Debug, Serialize)]
pub struct FdReport {
    pub ratio: f64,
    pub first_row_norm: f64,
    pub second_row_norm: f64,
    pub psi_norm: f64,
    pub first_component_norm: f64,
    pub h: f64,
    pub nodes: usize,
    pub interval: (f64, f64),
}

/// Samples `pm` over [`sampling_interval`] with spacing `h` rounded down
/// to a power of two, and applies the operator.
pub fn fd_residual(spec: &PotentialSpec, lambda: Complex64, pm: &Pseudomode, h: f64) -> Result<FdReport> {
    let (lo, hi) = sampling_interval(pm);
    if !(hi > lo) {
        return Err(Error::Numerical("pseudomode has an empty sampling interval".into()));
    }
    // a power-of-two step on a grid aligned to it keeps every node exact
    let h = 2f64.powi(h.log2().floor() as i32);
    let x0 = (lo / h).ceil() * h;
    let count = ((hi - x0) / h).floor() as usize + 1;
    let s = sample_pseudomode(pm, x0, h, count)?;
    let out = apply_dirac_fd(spec, lambda, &s)?;
    let [r1, r2] = out.component_norms();
    let [p1, p2] = s.component_norms();
    let psi = p1.hypot(p2);
    Ok(FdReport {
        ratio: r1.hypot(r2) / psi,
        first_row_norm: r1,
        second_row_norm: r2,
        psi_norm: psi,
        first_component_norm: p1,
        h,
        nodes: count,
        interval: (x0, x0 + (count - 1) as f64 * h),
    })
}

/// `‖(H_V − λ)Ψ‖ / ‖Ψ‖` by finite differences.
pub fn fd_residual_ratio(spec: &PotentialSpec, lambda: Complex64, pm: &Pseudomode, h: f64) -> Result<f64> {
    Ok(fd_residual(spec, lambda, pm, h)?.ratio)
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// Coefficients of `H_V H_{V*} − H_{V*} H_V = A(x) ∂ + B(x)` at one node.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CommutatorSample {
    pub x: f64,
    pub first_order: Matrix2,
    pub zeroth_order: Matrix2,
}

impl CommutatorSample {
    pub fn sup(&self) -> f64 {
        self.first_order
            .iter()
            .chain(self.zeroth_order.iter())
            .flat_map(|r| r.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

fn mat(v: [Complex64; 4]) -> Matrix2 {
    [[v[0], v[1]], [v[2], v[3]]]
}

fn adjoint(a: Matrix2) -> Matrix2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn mul(a: Matrix2, b: Matrix2) -> Matrix2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn comb(a: Matrix2, b: Matrix2, s: Complex64) -> Matrix2 {
    let mut out = a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += s * b[i][j];
        }
    }
    out
}

fn bracket(a: Matrix2, b: Matrix2) -> Matrix2 {
    comb(mul(a, b), mul(b, a), Complex64::new(-1.0, 0.0))
}

fn scale(a: Matrix2, s: Complex64) -> Matrix2 {
    comb([[Complex64::new(0.0, 0.0); 2]; 2], a, s)
}

/// Commutator coefficients at each grid node:
/// `A = i[V*−V, σ1]`, `B = [V, V*] − iσ1(V*' − V') + m[σ3, V*−V]`,
/// with `V'` from 4th-order central differences of sampled values.
pub fn commutator_fd(spec: &PotentialSpec, grid: &[f64]) -> Vec<CommutatorSample> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let sigma1 = [[zero, one], [one, zero]];
    let sigma3 = [[one, zero], [zero, -one]];
    grid.iter()
        .map(|&x| {
            let v = mat(spec.values(x));
            let w = comb(adjoint(v), v, -one);
            let hs = 1e-3 * x.abs().max(1.0);
            let at = |t: f64| mat(spec.values(x + t * hs));
            let mut dv = comb(comb(at(-2.0), at(2.0), -one), comb(at(1.0), at(-1.0), -one), Complex64::new(8.0, 0.0));
            dv = scale(dv, Complex64::new(1.0 / (12.0 * hs), 0.0));
            let dw = comb(adjoint(dv), dv, -one);
            let first_order = scale(bracket(w, sigma1), I);
            let zeroth_order = comb(
                comb(bracket(v, adjoint(v)), mul(sigma1, dw), -I),
                bracket(sigma3, w),
                Complex64::new(spec.mass, 0.0),
            );
            CommutatorSample { x, first_order, zeroth_order }
        })
        .collect()
}

/// Largest coefficient magnitude over the samples.
pub fn commutator_sup(samples: &[CommutatorSample]) -> f64 {
    samples.iter().map(CommutatorSample::sup).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::CutoffPlan;
    use crate::potential::{catalog, Params};
    use crate::pseudomode::{analytic_residual, assemble, assemble_on};
    use crate::wkb::SpectralParameter;

    fn spec(name: &str) -> PotentialSpec {
        catalog(name, &Params::new()).unwrap()
    }

    fn electric(lam: f64, n: usize) -> (PotentialSpec, Pseudomode) {
        let s = spec("bounded-electric");
        let plan = CutoffPlan::real(&s, lam).unwrap();
        let pm = assemble(&s, SpectralParameter::real(&s, lam), n, &plan).unwrap();
        (s, pm)
    }

    #[test]
    fn dd_helpers() {
        let z = Complex64::new(0.3, -1.7);
        let e = lower(dd_exp(dd(z)));
        assert!((e - z.exp()).norm() < 1e-15 * z.exp().norm());
        let w = dd(Complex64::new(1600.0, 0.25));
        let err = lower(w * dd_recip(w) - dd(Complex64::new(1.0, 0.0))).norm();
        assert!(err < 1e-30, "{err:e}");
    }

    #[test]
    fn eigen_ansatz_zero_potential() {
        let s = spec("zero");
        let (lam, m) = (5.0, s.mass);
        let mu = (lam * lam - m * m).sqrt();
        let c = mu / (lam + m);
        let h = 1e-3;
        let vals = (0..2000)
            .map(|i| {
                let e = (I * mu * (i as f64 * h)).exp();
                [e, c * e]
            })
            .collect();
        let out = apply_dirac_fd(&s, Complex64::new(lam, 0.0), &SampledSpinor::from_values(0.0, h, vals)).unwrap();
        assert_eq!(out.len(), 1996);
        assert!(out.norm() < 1e-9, "{}", out.norm());
    }

    #[test]
    fn constant_spinor() {
        let s = spec("zero");
        let m = s.mass;
        let f = [Complex64::new(0.5, 2.0), Complex64::new(-1.0, 0.25)];
        let out = apply_dirac_fd(&s, Complex64::new(0.0, 0.0), &SampledSpinor::from_values(-1.0, 0.1, vec![f; 20])).unwrap();
        for i in 0..out.len() {
            let [a, b] = out.value(i);
            assert!((a - m * f[0]).norm() < 1e-14);
            assert!((b + m * f[1]).norm() < 1e-14);
        }
    }

    #[test]
    fn under_resolution_rejected() {
        let s = spec("zero");
        let vals = (0..50).map(|i| [(I * 3.0 * i as f64).exp(); 2]).collect();
        let err = apply_dirac_fd(&s, Complex64::new(2.0, 0.0), &SampledSpinor::from_values(0.0, 1.0, vals)).unwrap_err();
        assert!(matches!(err, Error::UnderResolved { .. }));
    }

    #[test]
    fn zero_potential_box() {
        let s = spec("zero");
        let p = SpectralParameter::real(&s, 30.0);
        let pm = assemble_on(&s, p, 0, &CutoffPlan::none(), 0.0, Some((0.0, 4.0))).unwrap();
        let rep = fd_residual(&s, p.lambda, &pm, default_step(&pm)).unwrap();
        assert!(rep.ratio <= 1e-6, "{}", rep.ratio);
        assert_eq!(rep.interval, (0.0, 4.0));
    }

    #[test]
    fn agrees_with_analytic() {
        let (s, pm) = electric(400.0, 1);
        let a = analytic_residual(&pm).ratio;
        let rep = fd_residual(&s, pm.param.lambda, &pm, 2f64.powi(-10)).unwrap();
        assert!((rep.ratio / a - 1.0).abs() < 1e-3, "{} vs {a}", rep.ratio);
        // the second row vanishes identically
        assert!(rep.second_row_norm <= 1e-6 * rep.first_component_norm);
    }

    #[test]
    fn sampled_boundary_is_negligible() {
        let s = spec("polynomial-complex");
        let beta = 20.0;
        let plan = CutoffPlan::complex(&s, beta).unwrap();
        let tp = plan.turning.unwrap();
        let p = SpectralParameter::turning(&s, beta.powf(2.0 / 3.0 - 0.5), beta, tp.x_beta);
        let pm = assemble(&s, p, 2, &plan).unwrap();
        let (lo, hi) = sampling_interval(&pm);
        let h = default_step(&pm);
        let count = ((hi - lo) / h) as usize + 1;
        let smp = sample_pseudomode(&pm, lo, (hi - lo) / (count - 1) as f64, count).unwrap();
        let mags: Vec<f64> = (0..smp.len()).map(|i| smp.value(i)[0].norm().hypot(smp.value(i)[1].norm())).collect();
        let peak = mags.iter().copied().fold(0.0, f64::max);
        assert!(mags[0] <= 1e-12 * peak && mags[mags.len() - 1] <= 1e-12 * peak);
    }

    #[test]
    fn corrupted_phase_detected() {
        let (s, pm) = electric(100.0, 1);
        let a = analytic_residual(&pm).ratio;
        let bad = pm.with_phase_scale(1.01);
        let fd = fd_residual_ratio(&s, pm.param.lambda, &bad, default_step(&bad)).unwrap();
        assert!((fd / a - 1.0).abs() > 1e-2, "{fd} vs {a}");
    }

    #[test]
    fn fourth_order_convergence() {
        let (s, pm) = electric(400.0, 2);
        let a = analytic_residual(&pm).ratio;
        let gap = |k: i32| (fd_residual_ratio(&s, pm.param.lambda, &pm, 2f64.powi(-k)).unwrap() - a).abs();
        let q = gap(8) / gap(9);
        assert!((8.0..=32.0).contains(&q), "{q}");
    }

    #[test]
    fn commutator_examples() {
        let grid: Vec<f64> = (0..64).map(|i| -3.0 + 0.1 * i as f64).collect();
        assert_eq!(commutator_sup(&commutator_fd(&spec("zero"), &grid)), 0.0);

        let c = |re: f64, im: f64| -> crate::potential::ComponentFn {
            std::sync::Arc::new(move |x, k| Ok(crate::jets::Jet::constant(x, Complex64::new(re, im), k)))
        };
        let normal = PotentialSpec::new("normal", [c(0.0, 2.0), c(1.5, 0.0), c(1.5, 0.0), c(0.0, 2.0)], 1.0);
        assert!(commutator_sup(&commutator_fd(&normal, &grid)) < 1e-12);

        let ix: crate::potential::ComponentFn =
            std::sync::Arc::new(|x, k| Ok(crate::jets::Jet::variable(x, k).scale(Complex64::new(0.0, 1.0))));
        let skew = PotentialSpec::new("ix", [ix, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 1.0);
        let samples = commutator_fd(&skew, &grid);
        assert!(commutator_sup(&samples) > 0.1);
        // first-order part i[V*−V, σ1] with V*−V = diag(−2ix, 0)
        let s0 = samples[0];
        let expect = Complex64::new(2.0 * s0.x, 0.0);
        assert!((s0.first_order[0][1] - expect).norm() < 1e-12, "{:?}", s0.first_order);
        assert!((s0.first_order[1][0] + expect).norm() < 1e-12);
    }
}
