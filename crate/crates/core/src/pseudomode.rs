//! The pseudomode `Ψ = (k1 u, k2 v)` with `u = ξ e^{−P}` and
//! `k2 v = k1 (−i u')/(λ+m−V22)`, and its residual.
//!
//! The second row of `(H_V − λ)Ψ` vanishes identically; the first row is
//! `(k1 e^{−P}/(λ+m−V22)) (−ξ'' + (2P' − K'/K) ξ' + R ξ)`.
//!
//! Norms are computed on K15 panels marched outward from the anchor. Only
//! moduli enter, so the fast phase never has to be resolved: the panels
//! carry the reduced phase `Q = P − i c (x − anchor)` with the carrier
//! `c = Im P'(anchor)`, and `|k1 e^{−P}| = e^{−D}` with `D = Re Q − Im S`,
//! `S = ∫ V21`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::cutoff::{CutoffMode, CutoffPlan};
use crate::error::{Error, Result};
use crate::potential::{Domain, PotentialSpec};
use crate::quadrature::{integrate, PanelRule, Tolerance};
use crate::wkb::{local_wkb, SpectralParameter};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Panels stop once `D − min D` exceeds this (weights below `e^{−2·300}`).
pub const DECAY_CUT: f64 = 300.0;
const MAX_PANELS: usize = 200_000;
const MAX_EXTENT: f64 = 1e12;

fn rule() -> &'static PanelRule {
    static RULE: OnceLock<PanelRule> = OnceLock::new();
    RULE.get_or_init(PanelRule::k15)
}

#[derive(Clone, Debug)]
pub struct Node {
    pub x: f64,
    pub xi: [f64; 3],
    /// Reduced phase `Q(x)`.
    pub q: Complex64,
    /// `S(x) = ∫_anchor^x V21`.
    pub s21: Complex64,
    /// Full `P'(x)`.
    pub dp: Complex64,
    pub log_k: Complex64,
    pub remainder: Complex64,
    pub d22: Complex64,
    pub v: [Complex64; 4],
}

impl Node {
    /// `−ln|k1 e^{−P}|`.
    pub fn decay(&self) -> f64 {
        self.q.re - self.s21.im
    }
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub q_a: Complex64,
    pub s21_a: Complex64,
    pub nodes: Vec<Node>,
    /// Kronrod − Gauss estimate of `∫ Q'` over the panel.
    pub phase_error: f64,
}

impl Panel {
    fn half(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    fn kronrod_sum(&self, f: impl Fn(&Node) -> Complex64) -> Complex64 {
        let r = rule();
        self.nodes.iter().zip(&r.kronrod).map(|(n, w)| f(n) * *w).sum::<Complex64>() * self.half()
    }
}

#[derive(Clone, Debug)]
pub struct Pseudomode {
    pub spec: PotentialSpec,
    pub param: SpectralParameter,
    pub n: usize,
    pub anchor: f64,
    pub plan: CutoffPlan,
    /// `c` in `Q = P − i c (x − anchor)`.
    pub carrier: f64,
    pub panels: Vec<Panel>,
    /// `min D`; every sampled value carries the factor `e^{shift}`.
    pub shift: f64,
    /// Multiplies `P` in sampled values (1 except in mutation tests).
    pub phase_scale: f64,
}

/// Builds the pseudomode on `supp ξ`, truncated where it has decayed by
/// `e^{−300}` relative to its peak.
pub fn assemble(spec: &PotentialSpec, param: SpectralParameter, n: usize, plan: &CutoffPlan) -> Result<Pseudomode> {
    let anchor = match (plan.mode, plan.turning) {
        (CutoffMode::ComplexLambda, Some(t)) => t.x_beta,
        _ => 0.0,
    };
    assemble_on(spec, param, n, plan, anchor, None)
}

/// As [`assemble`] with an explicit anchor and an optional hard box.
pub fn assemble_on(
    spec: &PotentialSpec,
    param: SpectralParameter,
    n: usize,
    plan: &CutoffPlan,
    anchor: f64,
    bounds: Option<(f64, f64)>,
) -> Result<Pseudomode> {
    if n > spec.regularity {
        return Err(Error::InsufficientOrder { needed: n, have: spec.regularity });
    }
    let (mut lo, mut hi) = plan.bump.support();
    if let Some((a, b)) = bounds {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if spec.domain == Domain::HalfLine {
        lo = lo.max(0.0);
    }
    if !(lo <= anchor && anchor <= hi) {
        return Err(Error::invalid("anchor", format!("{anchor} lies outside the window [{lo}, {hi}]")));
    }
    let carrier = local_wkb(spec, param, n, anchor)?.phase_derivative.im;
    let mut pm = Pseudomode {
        spec: spec.clone(),
        param,
        n,
        anchor,
        plan: plan.clone(),
        carrier,
        panels: Vec::new(),
        shift: 0.0,
        phase_scale: 1.0,
    };
    let mut breaks = Vec::new();
    for (a, b) in [plan.bump.left, plan.bump.right].into_iter().flatten() {
        breaks.push(a);
        breaks.push(b);
    }
    let right = pm.march(1.0, hi, &breaks)?;
    let left = pm.march(-1.0, lo, &breaks)?;
    let mut panels: Vec<Panel> = left.into_iter().rev().collect();
    panels.extend(right);
    pm.shift = panels
        .iter()
        .flat_map(|p| p.nodes.iter().map(Node::decay))
        .fold(0.0, f64::min);
    let lam = param.lambda;
    for p in &panels {
        for node in &p.nodes {
            let g = (lam.re - spec.mass - node.v[0].re) * (lam.re + spec.mass - node.v[3].re);
            if !(g > 0.0) {
                return Err(Error::Guard { x: node.x, value: g });
            }
        }
    }
    pm.panels = panels;
    Ok(pm)
}

impl Pseudomode {
    fn transition_cap(&self, a: f64, b: f64) -> f64 {
        let mut cap = f64::INFINITY;
        for (t0, t1) in [self.plan.bump.left, self.plan.bump.right].into_iter().flatten() {
            if a < t1 && b > t0 {
                cap = cap.min((t1 - t0) / 16.0);
            }
        }
        cap
    }

    /// Evaluates a panel on `[a, b]` given `Q`, `S` at the end it is glued to.
    fn make_panel(&self, a: f64, b: f64, from_left: bool, q0: Complex64, s0: Complex64) -> Result<Panel> {
        let r = rule();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut raw = Vec::with_capacity(r.len());
        for &t in &r.nodes {
            let x = mid + half * t;
            let loc = local_wkb(&self.spec, self.param, self.n, x)?;
            raw.push((x, loc));
        }
        let dq: Vec<Complex64> = raw.iter().map(|(_, l)| l.phase_derivative - I * self.carrier).collect();
        let v21: Vec<Complex64> = raw.iter().map(|(_, l)| l.v[2]).collect();
        let sum = |w: &[f64], f: &[Complex64]| f.iter().zip(w).map(|(v, w)| v * *w).sum::<Complex64>() * half;
        let (kq, gq) = (sum(&r.kronrod, &dq), sum(&r.gauss, &dq));
        let ks = sum(&r.kronrod, &v21);
        let (q_a, s_a) = if from_left { (q0, s0) } else { (q0 - kq, s0 - ks) };
        let nodes = raw
            .into_iter()
            .enumerate()
            .map(|(i, (x, loc))| Node {
                x,
                xi: self.plan.bump.eval(x),
                q: q_a + sum(&r.integ[i], &dq),
                s21: s_a + sum(&r.integ[i], &v21),
                dp: loc.phase_derivative,
                log_k: loc.log_k.value(),
                remainder: loc.remainder,
                d22: loc.d22,
                v: loc.v,
            })
            .collect();
        Ok(Panel { a, b, q_a, s21_a: s_a, nodes, phase_error: (kq - gq).norm() })
    }

    fn march(&self, dir: f64, limit: f64, breaks: &[f64]) -> Result<Vec<Panel>> {
        let mut panels = Vec::new();
        let mut x = self.anchor;
        let mut q = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut dmin: f64 = 0.0;
        let mut h: f64 = 0.05;
        while (limit - x) * dir > 1e-14 * (1.0 + x.abs()) {
            let mut step = h.min((limit - x).abs());
            for &bp in breaks {
                let d = (bp - x) * dir;
                if d > 1e-14 * (1.0 + x.abs()) {
                    step = step.min(d);
                }
            }
            let end = x + dir * step;
            let (a, b) = if dir > 0.0 { (x, end) } else { (end, x) };
            let cap = self.transition_cap(a, b);
            if step > cap {
                h = cap;
                continue;
            }
            let panel = self.make_panel(a, b, dir > 0.0, q, s)?;
            let r = rule();
            let kq = panel.kronrod_sum(|n| n.dp - I * self.carrier);
            let ks = panel.kronrod_sum(|n| n.v[2]);
            let gs = panel.nodes.iter().zip(&r.gauss).map(|(n, w)| n.v[2] * *w).sum::<Complex64>() * panel.half();
            let d_change = (kq.re - ks.im).abs();
            let ok = panel.phase_error <= 1e-11 * kq.norm().max(1.0) && (ks - gs).norm() <= 1e-11 * ks.norm().max(1.0) && d_change <= 2.0;
            if !ok {
                h = 0.5 * step;
                if h < 1e-13 * (1.0 + x.abs()) {
                    return Err(Error::Numerical(format!("panel refinement stalled at x = {x}")));
                }
                continue;
            }
            if dir > 0.0 {
                q += kq;
                s += ks;
            } else {
                q -= kq;
                s -= ks;
            }
            for node in &panel.nodes {
                dmin = dmin.min(node.decay());
            }
            panels.push(panel);
            x = end;
            if q.re - s.im - dmin > DECAY_CUT {
                break;
            }
            if panels.len() > MAX_PANELS || x.abs() > MAX_EXTENT {
                return Err(Error::Numerical(format!("pseudomode has not decayed by x = {x}")));
            }
            h = 2.0 * step;
        }
        Ok(panels)
    }

    /// `[lo, hi]` covered by panels.
    pub fn window(&self) -> (f64, f64) {
        match (self.panels.first(), self.panels.last()) {
            (Some(f), Some(l)) => (f.a, l.b),
            _ => (self.anchor, self.anchor),
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.panels.iter().flat_map(|p| p.nodes.iter())
    }

    fn locate(&self, x: f64) -> Option<&Panel> {
        let i = self.panels.partition_point(|p| p.b < x);
        self.panels.get(i).filter(|p| p.a <= x)
    }

    /// `(Q(x), S(x))` by spectral interpolation on the containing panel.
    pub fn reduced_phase(&self, x: f64) -> Option<(Complex64, Complex64)> {
        let p = self.locate(x)?;
        let half = p.half();
        let t = ((x - 0.5 * (p.a + p.b)) / half).clamp(-1.0, 1.0);
        let w = rule().primitive_weights(t);
        let q = p.q_a + p.nodes.iter().zip(&w).map(|(n, w)| (n.dp - I * self.carrier) * *w).sum::<Complex64>() * half;
        let s = p.s21_a + p.nodes.iter().zip(&w).map(|(n, w)| n.v[2] * *w).sum::<Complex64>() * half;
        Some((q, s))
    }

    /// `Ψ(x) e^{i c (x − anchor)}`, scaled by `e^{shift}`; zero outside the
    /// panel window.
    pub fn envelope(&self, x: f64) -> Result<[Complex64; 2]> {
        let zero = Complex64::new(0.0, 0.0);
        let Some((q, s)) = self.reduced_phase(x) else {
            return Ok([zero, zero]);
        };
        let k = self.phase_scale;
        let [xi, dxi, _] = self.plan.bump.eval(x);
        let loc = local_wkb(&self.spec, self.param, self.n, x)?;
        let e = (-I * s - k * q - I * (k - 1.0) * self.carrier * (x - self.anchor) + self.shift).exp();
        let first = e * xi;
        let second = e * (-I) * (dxi - xi * k * loc.phase_derivative) / loc.d22;
        Ok([first, second])
    }

    /// `Ψ(x)` scaled by `e^{shift}`.
    pub fn psi(&self, x: f64) -> Result<[Complex64; 2]> {
        let env = self.envelope(x)?;
        let c = (-I * self.carrier * (x - self.anchor)).exp();
        Ok([env[0] * c, env[1] * c])
    }

    /// Copy whose sampled values use `scale · P` in place of `P`.
    pub fn with_phase_scale(&self, scale: f64) -> Self {
        let mut out = self.clone();
        out.phase_scale = scale;
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub numerator_norm: f64,
    /// `‖k1 e^{−P}(−ξ'' + (2P'−K'/K)ξ')/(λ+m−V22)‖`.
    pub cutoff_norm: f64,
    /// `‖k1 e^{−P} R ξ/(λ+m−V22)‖`.
    pub remainder_norm: f64,
    pub denominator_norm: f64,
    /// `‖k1 u‖`.
    pub first_component_norm: f64,
    pub ratio: f64,
    pub kappa_part: f64,
    pub remainder_part: f64,
    /// `sup |R/(λ+m−V22)|` over the window.
    pub remainder_sup: f64,
    /// Natural log of the scale factor removed from all norms: the norms
    /// with `|k1 e^{−P}| = 1` at the anchor are these times `e^{−shift}`.
    pub shift: f64,
    pub quadrature_error_estimate: f64,
    pub window: (f64, f64),
    pub panels: usize,
}

/// Norms of the three-term residual expression.
pub fn analytic_residual(pm: &Pseudomode) -> ResidualReport {
    let r = rule();
    // num, cut, rem, den, first
    let mut k = [0.0f64; 5];
    let mut err = [0.0f64; 5];
    let mut rsup: f64 = 0.0;
    for p in &pm.panels {
        let half = p.half();
        let mut pk = [0.0f64; 5];
        let mut pg = [0.0f64; 5];
        for (i, node) in p.nodes.iter().enumerate() {
            let wgt = (-(node.decay() - pm.shift)).exp();
            let [xi, dxi, ddxi] = node.xi;
            let inv = 1.0 / node.d22;
            let cut = (-ddxi + (2.0 * node.dp - node.log_k) * dxi) * inv * wgt;
            let rem = node.remainder * xi * inv * wgt;
            let second = (dxi - xi * node.dp) * inv * wgt;
            let first = xi * wgt;
            let vals = [
                (cut + rem).norm_sqr(),
                cut.norm_sqr(),
                rem.norm_sqr(),
                first * first + second.norm_sqr(),
                first * first,
            ];
            rsup = rsup.max((node.remainder * inv).norm());
            for j in 0..5 {
                pk[j] += r.kronrod[i] * vals[j] * half;
                pg[j] += r.gauss[i] * vals[j] * half;
            }
        }
        for j in 0..5 {
            k[j] += pk[j];
            err[j] += (pk[j] - pg[j]).abs();
        }
    }
    let norm = |j: usize| k[j].max(0.0).sqrt();
    let den = norm(3);
    let rel_err = (0..5).filter(|&j| k[j] > 0.0).map(|j| err[j] / k[j]).fold(0.0, f64::max);
    let ratio = norm(0) / den;
    ResidualReport {
        numerator_norm: norm(0),
        cutoff_norm: norm(1),
        remainder_norm: norm(2),
        denominator_norm: den,
        first_component_norm: norm(4),
        ratio,
        kappa_part: norm(1) / den,
        remainder_part: norm(2) / den,
        remainder_sup: rsup,
        shift: pm.shift,
        quadrature_error_estimate: 0.5 * rel_err,
        window: pm.window(),
        panels: pm.panels.len(),
    }
}

/// `(‖f‖_{L²(a,b)}, error estimate)` by adaptive quadrature of `|f|²`.
pub fn l2_norm(mut f: impl FnMut(f64) -> Complex64, a: f64, b: f64) -> Result<(f64, f64)> {
    let r = integrate(|x| f(x).norm_sqr(), a, b, Tolerance { rel: 1e-13, abs: 1e-300, ..Default::default() })?;
    let v = r.value.max(0.0).sqrt();
    let e = if v > 0.0 { r.error / (2.0 * v) } else { r.error.sqrt() };
    Ok((v, e))
}
