//! Phase functions of the WKB ansatz.
//!
//! With `V_λ = (λ−m−V11)(λ+m−V22)` and `L = K_λ'/K_λ`, the phase derivatives
//! solve `λ²(ψ_{-1}')² + V_λ = 0` and
//! `2ψ_{-1}' ψ_{ℓ+1}' = ψ_ℓ'' + L ψ_ℓ' − Σ_{j=0}^{ℓ} ψ_j' ψ_{ℓ−j}'`.
//! Every ψ_k' is carried as a jet in `x`, so ψ_k'' is a coefficient shift.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::potential::{Component, PotentialSpec};
use crate::quadrature::{integrate, Tolerance};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpectralParameter {
    pub lambda: Complex64,
    pub sign: Sign,
}

impl SpectralParameter {
    /// Real λ: plus sign when the sign of λ matches the potential's
    /// orientation (standard pattern with λ > 0, flipped pattern with λ < 0).
    pub fn real(spec: &PotentialSpec, lambda: f64) -> Self {
        let standard = spec.orientation.sign() > 0.0;
        let sign = if standard == (lambda > 0.0) { Sign::Plus } else { Sign::Minus };
        SpectralParameter { lambda: Complex64::new(lambda, 0.0), sign }
    }

    /// Complex λ = α + iβ around the turning point `x_beta`: plus sign iff
    /// `α − m − Re V11(x_β) > 0`.
    pub fn turning(spec: &PotentialSpec, alpha: f64, beta: f64, x_beta: f64) -> Self {
        let re = spec.value(Component::V11, x_beta).re;
        let sign = if alpha - spec.mass - re > 0.0 { Sign::Plus } else { Sign::Minus };
        SpectralParameter { lambda: Complex64::new(alpha, beta), sign }
    }
}

/// `(diagonal, off-diagonal)` jet depths needed for the phase of order `n`
/// together with its remainder `R_{λ,n}`.
pub fn jet_depth_required(n: usize) -> (usize, usize) {
    (n + 1, n)
}

/// Jet of `V_λ = (λ−m−V11)(λ+m−V22)` at `x`.
pub fn v_lambda(spec: &PotentialSpec, lambda: Complex64, x: f64, order: usize) -> Result<Jet> {
    let m = spec.mass;
    let a = -spec.jet(Component::V11, x, order)? + (lambda - m);
    let b = -spec.jet(Component::V22, x, order)? + (lambda + m);
    a.try_mul(&b)
}

/// Jet of `λ+m−V22` at `x`.
fn d22(spec: &PotentialSpec, lambda: Complex64, x: f64, order: usize) -> Result<Jet> {
    Ok(-spec.jet(Component::V22, x, order)? + (lambda + spec.mass))
}

/// Jet of `u' = −i(V21 − V12)`.
fn u_prime(spec: &PotentialSpec, x: f64, order: usize) -> Result<Jet> {
    let d = spec.jet(Component::V21, x, order)? - spec.jet(Component::V12, x, order)?;
    Ok(d.scale(-I))
}

/// `u(x) = −i∫_anchor^x (V21 − V12)`.
pub fn u_integral(spec: &PotentialSpec, anchor: f64, x: f64) -> Result<Complex64> {
    let r = integrate(
        |t| -I * (spec.value(Component::V21, t) - spec.value(Component::V12, t)),
        anchor,
        x,
        Tolerance { rel: 1e-12, abs: 1e-14, ..Default::default() },
    )?;
    Ok(r.value)
}

/// Jet of `K_λ = e^{u}/(λ+m−V22)` given the value `u0 = u(x)`.
pub fn k_lambda_with(spec: &PotentialSpec, lambda: Complex64, x: f64, order: usize, u0: Complex64) -> Result<Jet> {
    let mut coeffs = vec![u0];
    if order >= 1 {
        let up = u_prime(spec, x, order - 1)?;
        coeffs.extend(up.coeffs().iter().enumerate().map(|(j, c)| c / (j + 1) as f64));
    }
    let u = Jet::new(x, coeffs);
    let den = d22(spec, lambda, x, order)?;
    if den.value().norm() == 0.0 {
        return Err(Error::ZeroDivisor { anchor: x });
    }
    u.exp().try_div(&den)
}

/// Jet of `K_λ` with `u` accumulated by quadrature from `anchor`.
pub fn k_lambda(spec: &PotentialSpec, lambda: Complex64, x: f64, order: usize, anchor: f64) -> Result<Jet> {
    let u0 = u_integral(spec, anchor, x)?;
    k_lambda_with(spec, lambda, x, order, u0)
}

/// Jet of `K_λ'/K_λ = u' − (λ+m−V22)'/(λ+m−V22)`, of the given order.
pub fn log_k_derivative(spec: &PotentialSpec, lambda: Complex64, x: f64, order: usize) -> Result<Jet> {
    let den = d22(spec, lambda, x, order + 1)?;
    let ratio = den.derive()?.try_div(&den.truncate(order))?;
    u_prime(spec, x, order)?.try_sub(&ratio)
}

#[derive(Clone, Debug, Serialize)]
pub struct GuardReport {
    pub passed: bool,
    pub worst_margin: f64,
    pub worst_x: f64,
}

/// Samples `(α−m−Re V11)(α+m−Re V22)` on `[a, b]`.
pub fn guard_condition(spec: &PotentialSpec, lambda: Complex64, a: f64, b: f64, samples: usize) -> GuardReport {
    let alpha = lambda.re;
    let m = spec.mass;
    let mut worst = f64::INFINITY;
    let mut worst_x = a;
    let n = samples.max(2);
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        let v = spec.values(x);
        let g = (alpha - m - v[0].re) * (alpha + m - v[3].re);
        if !(g >= worst) {
            worst = g;
            worst_x = x;
        }
    }
    GuardReport { passed: worst > 0.0, worst_margin: worst, worst_x }
}

/// Everything the construction needs at one point.
#[derive(Clone, Debug)]
pub struct LocalWkb {
    pub x: f64,
    /// Jets of ψ_{-1}', ψ_0', …, ψ_{n-1}' (index k+1 holds ψ_k').
    pub psi: Vec<Jet>,
    pub v_lambda: Jet,
    pub log_k: Jet,
    /// `λ+m−V22(x)`.
    pub d22: Complex64,
    /// `[V11, V12, V21, V22]` at `x`.
    pub v: [Complex64; 4],
    /// `P' = Σ λ^{-k} ψ_k'`.
    pub phase_derivative: Complex64,
    pub remainder: Complex64,
}

impl LocalWkb {
    pub fn psi_value(&self, k: isize) -> Complex64 {
        self.psi[(k + 1) as usize].value()
    }

    /// `(λψ_{-1}', Σ_{k≥0} λ^{-k} ψ_k')`, which sum to `P'`. The first part
    /// is of size `|λ|`, the second `O(1)`.
    pub fn phase_derivative_parts(&self, lambda: Complex64) -> (Complex64, Complex64) {
        let lead = lambda * self.psi[0].value();
        let rest = self.psi[1..]
            .iter()
            .enumerate()
            .map(|(k, j)| lambda.powi(-(k as i32)) * j.value())
            .sum();
        (lead, rest)
    }

    /// `P'' = Σ λ^{-k} ψ_k''`.
    pub fn phase_second_derivative(&self, lambda: Complex64) -> Complex64 {
        self.psi
            .iter()
            .enumerate()
            .map(|(i, j)| lambda.powi(1 - i as i32) * j.derivative(1))
            .sum()
    }
}

/// Residuals of the eikonal and transport identities at one point.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub eikonal: f64,
    pub transport: Vec<f64>,
}

impl IdentityCheck {
    pub fn worst(&self) -> f64 {
        self.transport.iter().copied().fold(self.eikonal, f64::max)
    }
}

/// Phase data for a fixed λ and order `n`.
#[derive(Clone, Debug)]
pub struct WkbPhase {
    pub spec: PotentialSpec,
    pub param: SpectralParameter,
    pub n: usize,
    pub anchor: f64,
    /// Points supplied at build time with ψ_k' values and `P`.
    pub nodes: Vec<PhaseNode>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseNode {
    pub x: f64,
    pub psi: Vec<Complex64>,
    pub phase: Complex64,
    pub remainder: Complex64,
}

/// Evaluates ψ_{-1}'..ψ_{levels-2}' at `x` with jets of depth `depth`
/// (so ψ_k' carries order `depth − k − 1`).
fn psi_jets(spec: &PotentialSpec, param: SpectralParameter, x: f64, levels: usize, depth: usize) -> Result<(Vec<Jet>, Jet, Jet)> {
    let lambda = param.lambda;
    let vl = v_lambda(spec, lambda, x, depth)?;
    let log_k = if depth >= 1 {
        log_k_derivative(spec, lambda, x, depth - 1)?
    } else {
        Jet::constant(x, Complex64::new(0.0, 0.0), 0)
    };
    let mut psi = Vec::with_capacity(levels);
    let lead = vl.sqrt()?.scale(I * param.sign.factor() / lambda);
    psi.push(lead);
    // psi[l] holds ψ_ℓ' with ℓ = l − 1; each pass appends ψ_{ℓ+1}'.
    for l in 0..levels.saturating_sub(1) {
        let prev = &psi[l];
        let mut rhs = prev.derive()?.try_add(&log_k.try_mul(prev)?)?;
        for j in 1..=l {
            rhs = rhs.try_sub(&psi[j].try_mul(&psi[l + 1 - j])?)?;
        }
        let next = rhs.try_div(&psi[0].scale(Complex64::new(2.0, 0.0)))?;
        psi.push(next);
    }
    Ok((psi, vl, log_k))
}

/// Builds the local data at `x` for phase order `n`.
pub fn local_wkb(spec: &PotentialSpec, param: SpectralParameter, n: usize, x: f64) -> Result<LocalWkb> {
    let (diag, _) = jet_depth_required(n);
    let (psi, vl, log_k) = psi_jets(spec, param, x, n + 1, diag)?;
    let lambda = param.lambda;
    let mut p1 = Complex64::new(0.0, 0.0);
    for (i, j) in psi.iter().enumerate() {
        p1 += lambda.powi(1 - i as i32) * j.value();
    }
    let remainder = remainder_from(&psi, &log_k, lambda, n)?;
    let v = [
        spec.value(Component::V11, x),
        spec.value(Component::V12, x),
        spec.value(Component::V21, x),
        spec.value(Component::V22, x),
    ];
    Ok(LocalWkb {
        x,
        d22: lambda + spec.mass - v[3],
        v,
        psi,
        v_lambda: vl,
        log_k,
        phase_derivative: p1,
        remainder,
    })
}

/// `R_{λ,n} = Σ_{ℓ=−1}^{n−2} λ^{−(n+ℓ)} φ_{n+ℓ}`, or `λ(ψ_{-1}'' + Lψ_{-1}')`
/// for `n = 0`.
fn remainder_from(psi: &[Jet], log_k: &Jet, lambda: Complex64, n: usize) -> Result<Complex64> {
    let val = |k: usize| psi[k + 1].value();
    let lk = log_k.value();
    if n == 0 {
        let p = &psi[0];
        return Ok(lambda * (p.derivative(1) + lk * p.value()));
    }
    let last = &psi[n];
    let mut phi_top = last.derivative(1) + lk * last.value();
    for j in 0..n {
        phi_top -= val(j) * val(n - 1 - j);
    }
    let mut r = lambda.powi(-(n as i32 - 1)) * phi_top;
    for ell in 0..n.saturating_sub(1) {
        let mut phi = Complex64::new(0.0, 0.0);
        for j in ell + 1..n {
            phi -= val(j) * val(n + ell - j);
        }
        r += lambda.powi(-((n + ell) as i32)) * phi;
    }
    Ok(r)
}

impl WkbPhase {
    pub fn local(&self, x: f64) -> Result<LocalWkb> {
        local_wkb(&self.spec, self.param, self.n, x)
    }

    /// ψ_{-1}'(x), …, ψ_{n-1}'(x).
    pub fn psi_derivs(&self, x: f64) -> Result<Vec<Complex64>> {
        Ok(self.local(x)?.psi.iter().map(Jet::value).collect())
    }

    pub fn remainder(&self, x: f64) -> Result<Complex64> {
        Ok(self.local(x)?.remainder)
    }

    pub fn phase_derivative(&self, x: f64) -> Result<Complex64> {
        Ok(self.local(x)?.phase_derivative)
    }

    /// `P_{λ,n}(x) = ∫_anchor^x P'` by adaptive quadrature.
    pub fn phase(&self, x: f64) -> Result<Complex64> {
        self.segment(self.anchor, x)
    }

    /// `∫_a^b P'`.
    pub fn segment(&self, a: f64, b: f64) -> Result<Complex64> {
        if a == b {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut failure = None;
        let r = integrate(
            |t| match self.phase_derivative(t) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            a,
            b,
            Tolerance { rel: 1e-12, abs: 1e-13, ..Default::default() },
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(r.value),
        }
    }

    /// Relative residuals of the eikonal and transport identities at `x`.
    pub fn identities(&self, x: f64) -> Result<IdentityCheck> {
        let loc = self.local(x)?;
        Ok(identity_residuals(&loc, self.param.lambda))
    }
}

pub fn identity_residuals(loc: &LocalWkb, lambda: Complex64) -> IdentityCheck {
    let lead = loc.psi[0].value();
    let vl = loc.v_lambda.value();
    let eikonal = (lambda * lambda * lead * lead + vl).norm() / vl.norm();
    let lk = loc.log_k.value();
    let mut transport = Vec::new();
    for ell in -1..(loc.psi.len() as isize - 2) {
        let cur = &loc.psi[(ell + 1) as usize];
        let mut rhs = cur.derivative(1) + lk * cur.value();
        let mut scale = cur.derivative(1).norm() + (lk * cur.value()).norm();
        for j in 0..=ell {
            let t = loc.psi_value(j) * loc.psi_value(ell - j);
            rhs -= t;
            scale += t.norm();
        }
        let lhs = 2.0 * lead * loc.psi_value(ell + 1);
        transport.push((lhs - rhs).norm() / scale.max(lhs.norm()).max(1e-300));
    }
    IdentityCheck { eikonal, transport }
}

/// Builds the phase of order `n` and evaluates it at `eval_points`.
pub fn build_phase(
    spec: &PotentialSpec,
    param: SpectralParameter,
    n: usize,
    eval_points: &[f64],
    anchor: f64,
) -> Result<WkbPhase> {
    if n > spec.regularity {
        return Err(Error::InsufficientOrder { needed: n, have: spec.regularity });
    }
    let mut pts = eval_points.to_vec();
    pts.sort_by(f64::total_cmp);
    let mut phase = WkbPhase { spec: spec.clone(), param, n, anchor, nodes: Vec::new() };
    if let (Some(&lo), Some(&hi)) = (pts.first(), pts.last()) {
        let (lo, hi) = (lo.min(anchor), hi.max(anchor));
        let g = guard_condition(spec, param.lambda, lo, hi, 1024);
        if !g.passed && param.lambda.im == 0.0 {
            return Err(Error::Guard { x: g.worst_x, value: g.worst_margin });
        }
    }
    // P accumulated segment by segment outward from the anchor.
    let split = pts.partition_point(|&x| x < anchor);
    let mut values = vec![Complex64::new(0.0, 0.0); pts.len()];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut from = anchor;
    for i in split..pts.len() {
        acc += phase.segment(from, pts[i])?;
        values[i] = acc;
        from = pts[i];
    }
    acc = Complex64::new(0.0, 0.0);
    from = anchor;
    for i in (0..split).rev() {
        acc += phase.segment(from, pts[i])?;
        values[i] = acc;
        from = pts[i];
    }
    for (&x, p) in pts.iter().zip(values) {
        let loc = phase.local(x)?;
        phase.nodes.push(PhaseNode {
            x,
            psi: loc.psi.iter().map(Jet::value).collect(),
            phase: p,
            remainder: loc.remainder,
        });
    }
    Ok(phase)
}

/// Closed-form low-order phases and remainders in terms of derivatives of
/// `V_λ` and `K_λ` (plus sign; the minus sign flips the odd-in-√V_λ terms).
pub mod explicit {
    use super::*;

    pub struct Inputs {
        pub v: [Complex64; 4],
        pub k: [Complex64; 4],
        pub lambda: Complex64,
        pub sign: f64,
    }

    impl Inputs {
        pub fn new(vl: &Jet, kl: &Jet, lambda: Complex64, sign: Sign) -> Self {
            let d = |j: &Jet, i: usize| if i <= j.order() { j.derivative(i) } else { Complex64::new(0.0, 0.0) };
            Inputs {
                v: [d(vl, 0), d(vl, 1), d(vl, 2), d(vl, 3)],
                k: [d(kl, 0), d(kl, 1), d(kl, 2), d(kl, 3)],
                lambda,
                sign: sign.factor(),
            }
        }

        fn sqrt_v(&self) -> Complex64 {
            crate::jets::principal_sqrt(self.v[0]).unwrap_or(Complex64::new(f64::NAN, 0.0))
        }

        fn b1(&self) -> Complex64 {
            let [v, v1, v2, _] = self.v;
            let [k, k1, k2, _] = self.k;
            v2 / v - 1.25 * v1 * v1 / (v * v) + 2.0 * k2 / k - k1 * k1 / (k * k)
        }

        fn b2(&self) -> Complex64 {
            let [v, v1, v2, v3] = self.v;
            let [k, k1, k2, k3] = self.k;
            v3 / v - 4.5 * v1 * v2 / (v * v) + 3.75 * v1.powi(3) / v.powi(3)
                - (v1 / v) * (2.0 * k2 / k - k1 * k1 / (k * k))
                + 2.0 * k3 / k
                - 4.0 * k1 * k2 / (k * k)
                + 2.0 * k1.powi(3) / k.powi(3)
        }

        pub fn psi_m1(&self) -> Complex64 {
            self.sign * I * self.sqrt_v() / self.lambda
        }

        pub fn psi0(&self) -> Complex64 {
            self.v[1] / (4.0 * self.v[0]) + self.k[1] / (2.0 * self.k[0])
        }

        pub fn psi1(&self) -> Complex64 {
            self.sign * (-I * self.lambda / (8.0 * self.sqrt_v())) * self.b1()
        }

        pub fn psi2(&self) -> Complex64 {
            -self.lambda * self.lambda / (16.0 * self.v[0]) * self.b2()
        }

        pub fn r0(&self) -> Complex64 {
            let s = self.sqrt_v();
            self.sign * (I * self.v[1] / (2.0 * s) + I * (self.k[1] / self.k[0]) * s)
        }

        pub fn r1(&self) -> Complex64 {
            let [v, v1, v2, _] = self.v;
            let [k, k1, k2, _] = self.k;
            v2 / (4.0 * v) - 5.0 / 16.0 * v1 * v1 / (v * v) + k2 / (2.0 * k) - k1 * k1 / (4.0 * k * k)
        }

        pub fn r2(&self) -> Complex64 {
            let s = self.sqrt_v();
            self.sign * (-I / (8.0 * s)) * self.b2() + self.b1().powi(2) / (64.0 * self.v[0])
        }
    }

    /// Inputs at `x` computed from jets of `V_λ` and `K_λ` (K normalized to
    /// `u(x) = 0`, which leaves every ratio `K^{(j)}/K` unchanged).
    pub fn inputs_at(spec: &PotentialSpec, param: SpectralParameter, x: f64) -> Result<Inputs> {
        let vl = v_lambda(spec, param.lambda, x, 3)?;
        let kl = k_lambda_with(spec, param.lambda, x, 3, Complex64::new(0.0, 0.0))?;
        Ok(Inputs::new(&vl, &kl, param.lambda, param.sign))
    }
}
