//! Matrix potentials with jet-valued components, the example catalog, and
//! numerical checks of the growth/sign assumptions on sample grids.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::quadrature::{integrate, Tolerance};

pub type ComponentFn = Arc<dyn Fn(f64, usize) -> Result<Jet> + Send + Sync>;
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Params = BTreeMap<String, f64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Component {
    V11,
    V12,
    V21,
    V22,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::V11, Component::V12, Component::V21, Component::V22];

    fn index(self) -> usize {
        self as usize
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Component::V11 | Component::V22)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Domain {
    Line,
    HalfLine,
}

/// Which asymptotic sign pattern of `Im V11 + Im V22` the potential has.
/// `Standard`: negative at −∞, positive at +∞. `Flipped`: the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Standard,
    Flipped,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Standard => 1.0,
            Orientation::Flipped => -1.0,
        }
    }
}

/// Per-infinity metadata of the real-λ assumption.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SideMeta {
    pub nu: f64,
    pub mu: f64,
    pub eps: f64,
    pub a: f64,
    pub re_v11_bounded: bool,
    pub re_v22_bounded: bool,
    pub im_diff_bounded: bool,
}

impl SideMeta {
    pub fn all_bounded(&self) -> bool {
        self.re_v11_bounded && self.re_v22_bounded && self.im_diff_bounded
    }
}

/// Metadata of the complex-λ (turning point) assumption on the half-line.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TurningMeta {
    pub nu: f64,
    pub eps1: f64,
    pub p: f64,
    pub a: f64,
}

/// Records the highest jet order requested per component.
#[derive(Debug, Default)]
pub struct AccessLog {
    max_plus_one: [AtomicUsize; 4],
}

impl AccessLog {
    fn record(&self, c: Component, order: usize) {
        self.max_plus_one[c.index()].fetch_max(order + 1, Ordering::Relaxed);
    }

    /// Highest order requested, `None` if the component was never touched.
    pub fn max_order(&self, c: Component) -> Option<usize> {
        match self.max_plus_one[c.index()].load(Ordering::Relaxed) {
            0 => None,
            k => Some(k - 1),
        }
    }

    pub fn reset(&self) {
        for a in &self.max_plus_one {
            a.store(0, Ordering::Relaxed);
        }
    }
}

#[derive(Clone)]
pub struct PotentialSpec {
    pub name: String,
    pub params: Params,
    components: [ComponentFn; 4],
    pub mass: f64,
    pub regularity: usize,
    pub minus: SideMeta,
    pub plus: SideMeta,
    pub growth: RealFn,
    pub symmetric_offdiag: bool,
    pub domain: Domain,
    pub orientation: Orientation,
    pub eta: f64,
    pub eps1: f64,
    pub turning: Option<TurningMeta>,
    /// Default validation grid `(lo, hi)`.
    pub grid: (f64, f64),
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("mass", &self.mass)
            .field("regularity", &self.regularity)
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .finish()
    }
}

fn side(nu: f64, mu: f64, eps: f64, bounded: (bool, bool, bool)) -> SideMeta {
    SideMeta {
        nu,
        mu,
        eps,
        a: 1.0,
        re_v11_bounded: bounded.0,
        re_v22_bounded: bounded.1,
        im_diff_bounded: bounded.2,
    }
}

fn zero_component() -> ComponentFn {
    Arc::new(|x, k| Ok(Jet::constant(x, Complex64::new(0.0, 0.0), k)))
}

fn constant_component(c: Complex64) -> ComponentFn {
    Arc::new(move |x, k| Ok(Jet::constant(x, c, k)))
}

impl PotentialSpec {
    /// A spec with the given components and neutral metadata (Standard
    /// orientation, ν = −1, f(x) = x, μ = 1, ε = 0.1, bounded flags set).
    pub fn new(name: &str, components: [ComponentFn; 4], mass: f64) -> Self {
        let s = side(-1.0, 1.0, 0.1, (true, true, true));
        PotentialSpec {
            name: name.to_string(),
            params: Params::new(),
            components,
            mass,
            regularity: 4,
            minus: s,
            plus: s,
            growth: Arc::new(|x| x),
            symmetric_offdiag: false,
            domain: Domain::Line,
            orientation: Orientation::Standard,
            eta: 0.25,
            eps1: 0.5,
            turning: None,
            grid: (-50.0, 50.0),
        }
    }

    pub fn component_fn(&self, c: Component) -> &ComponentFn {
        &self.components[c.index()]
    }

    pub fn jet(&self, c: Component, x: f64, order: usize) -> Result<Jet> {
        (self.components[c.index()])(x, order)
    }

    pub fn value(&self, c: Component, x: f64) -> Complex64 {
        match self.jet(c, x, 0) {
            Ok(j) => j.value(),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// `[V11, V12, V21, V22]` at `x`.
    pub fn values(&self, x: f64) -> [Complex64; 4] {
        Component::ALL.map(|c| self.value(c, x))
    }

    pub fn min_mu(&self) -> f64 {
        self.minus.mu.min(self.plus.mu)
    }

    /// Copy whose components log the highest jet order requested.
    pub fn instrumented(&self) -> (PotentialSpec, Arc<AccessLog>) {
        let log = Arc::new(AccessLog::default());
        let mut out = self.clone();
        for c in Component::ALL {
            let inner = self.components[c.index()].clone();
            let log = log.clone();
            out.components[c.index()] = Arc::new(move |x, k| {
                log.record(c, k);
                inner(x, k)
            });
        }
        (out, log)
    }

    /// The mirror `−σ3 V σ3 − 2mσ3`: diagonal entries negated and shifted by
    /// `∓2m`, off-diagonal kept. Its diagonal imaginary sum has the opposite
    /// asymptotic pattern, and `σ3 (H_V − λ) σ3 = −(H_mirror + λ)` at the same
    /// mass, so the pseudomode of the mirror at `−λ` is `σ3` times the one of
    /// the original at `λ`.
    pub fn mirror(&self) -> PotentialSpec {
        let mut out = self.clone();
        let shift = 2.0 * self.mass;
        for (c, s) in [(Component::V11, -shift), (Component::V22, shift)] {
            let inner = self.components[c.index()].clone();
            out.components[c.index()] = Arc::new(move |x, k| Ok((-inner(x, k)?).add_const(real(s))));
        }
        out.name = format!("{}-mirror", self.name);
        out.orientation = match self.orientation {
            Orientation::Standard => Orientation::Flipped,
            Orientation::Flipped => Orientation::Standard,
        };
        out
    }

    /// Writes `x` into `params` and returns the value (catalog helper).
    fn param(params: &Params, key: &str, default: f64) -> f64 {
        params.get(key).copied().unwrap_or(default)
    }
}

/// Names accepted by [`catalog`] (each also accepts a `-mirror` suffix).
pub const CATALOG_NAMES: [&str; 10] = [
    "zero",
    "constant",
    "bounded-electric",
    "bounded-electric-asym",
    "log-electric",
    "exp-split",
    "superexponential",
    "logarithmic",
    "polynomial-complex",
    "exponential",
];

fn check_keys(params: &Params, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if k != "N" && !allowed.contains(&k.as_str()) {
            return Err(Error::invalid(k, "not a parameter of this potential"));
        }
    }
    Ok(())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `x / √(x² + 1)` as a jet.
fn smooth_sign(x: f64, k: usize) -> Result<Jet> {
    let t = Jet::variable(x, k);
    let r = (&t * &t).add_const(real(1.0)).sqrt()?;
    Ok(&t / &r)
}

/// `amp / (1 + x²)`.
fn lorentzian(amp: Complex64) -> ComponentFn {
    Arc::new(move |x, k| {
        let t = Jet::variable(x, k);
        Ok((&t * &t).add_const(real(1.0)).recip()?.scale(amp))
    })
}

/// `amp / (1 + x)` on the half-line.
fn half_line_decay(amp: f64) -> ComponentFn {
    Arc::new(move |x, k| {
        let t = Jet::variable(x, k);
        Ok(t.add_const(real(1.0)).recip()?.scale(real(amp)))
    })
}

/// Builds a catalog potential. Parameters are looked up by key; unknown keys
/// are rejected. The mass is `m` for every entry.
pub fn catalog(name: &str, params: &Params) -> Result<PotentialSpec> {
    if let Some(base) = name.strip_suffix("-mirror") {
        return Ok(catalog(base, params)?.mirror());
    }
    let p = |k: &str, d: f64| PotentialSpec::param(params, k, d);
    let m = p("m", 1.0);
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::invalid("m", "mass must be finite and nonnegative"));
    }
    let mut spec = match name {
        "zero" => {
            check_keys(params, &["m"])?;
            let mut s = PotentialSpec::new(name, [zero_component(), zero_component(), zero_component(), zero_component()], m);
            s.symmetric_offdiag = true;
            s
        }
        "constant" => {
            let keys = ["m", "a11r", "a11i", "a12r", "a12i", "a21r", "a21i", "a22r", "a22i"];
            check_keys(params, &keys)?;
            let c = |r: &str, i: &str| Complex64::new(p(r, 0.0), p(i, 0.0));
            let comps = [
                constant_component(c("a11r", "a11i")),
                constant_component(c("a12r", "a12i")),
                constant_component(c("a21r", "a21i")),
                constant_component(c("a22r", "a22i")),
            ];
            let mut s = PotentialSpec::new(name, comps, m);
            s.symmetric_offdiag = c("a12r", "a12i") == c("a21r", "a21i");
            s
        }
        "bounded-electric" => {
            check_keys(params, &["m", "u"])?;
            let u = lorentzian(real(p("u", 0.5)));
            let v11: ComponentFn = Arc::new(|x, k| Ok(smooth_sign(x, k)?.scale(I)));
            let mut s = PotentialSpec::new(name, [v11, u.clone(), u, zero_component()], m);
            s.symmetric_offdiag = true;
            s
        }
        "bounded-electric-asym" => {
            check_keys(params, &["m", "a", "b"])?;
            let (a, b) = (p("a", 0.3), p("b", 0.2));
            let v11: ComponentFn = Arc::new(|x, k| Ok(smooth_sign(x, k)?.scale(I)));
            let v12 = lorentzian(real(a));
            let v21: ComponentFn = Arc::new(move |x, k| {
                let t = Jet::variable(x, k);
                let d = (&t * &t).add_const(real(1.0)).recip()?;
                Ok((&t * &d).scale(Complex64::new(0.0, -b)))
            });
            PotentialSpec::new(name, [v11, v12, v21, zero_component()], m)
        }
        "log-electric" => {
            check_keys(params, &["m", "u"])?;
            let u = lorentzian(real(p("u", 0.5)));
            let v11: ComponentFn = Arc::new(|x, k| Ok(smooth_sign(x, k)?.scale(I)));
            let v22: ComponentFn = Arc::new(|x, k| Ok(Jet::variable(x, k).asinh()?.scale(I)));
            let mut s = PotentialSpec::new(name, [v11, u.clone(), u, v22], m);
            s.symmetric_offdiag = true;
            let unb = side(-1.0, 1.0, 0.1, (true, true, false));
            s.minus = unb;
            s.plus = unb;
            s
        }
        "exp-split" => {
            check_keys(params, &["m", "u", "mu", "eps"])?;
            let (mu, eps) = (p("mu", 0.5), p("eps", 0.1));
            let u = lorentzian(real(p("u", 0.5)));
            let v11: ComponentFn = Arc::new(|x, k| Ok(Jet::variable(x, k).exp().scale(Complex64::new(0.0, 0.5))));
            let v22: ComponentFn = Arc::new(|x, k| Ok((-Jet::variable(x, k)).exp().scale(Complex64::new(0.0, -0.5))));
            let mut s = PotentialSpec::new(name, [v11, u.clone(), u, v22], m);
            s.symmetric_offdiag = true;
            let unb = side(0.0, mu, eps, (true, true, false));
            s.minus = unb;
            s.plus = unb;
            s.eta = mu / 4.0;
            s.grid = (-12.0, 12.0);
            s
        }
        "superexponential" => {
            check_keys(params, &["m", "u"])?;
            let u = lorentzian(real(p("u", 0.5)));
            let v11: ComponentFn = Arc::new(|x, k| Ok(Jet::variable(x, k).sinh().exp().scale(I)));
            let v22: ComponentFn = Arc::new(|x, k| Ok((-Jet::variable(x, k).sinh()).exp().scale(-I)));
            let mut s = PotentialSpec::new(name, [v11, u.clone(), u, v22], m);
            s.symmetric_offdiag = true;
            let unb = side(1.0, 0.5, 0.1, (true, true, false));
            s.minus = unb;
            s.plus = unb;
            s.eta = 0.125;
            s.regularity = 3;
            s.growth = Arc::new(f64::cosh);
            s.grid = (-3.5, 3.5);
            s
        }
        "logarithmic" => {
            check_keys(params, &["m", "u"])?;
            let u = half_line_decay(p("u", 0.0));
            let mm = m;
            let v11: ComponentFn = Arc::new(move |x, k| Ok(Jet::variable(x, k).ln()?.scale(I).add_const(real(-mm))));
            let v22: ComponentFn = Arc::new(move |x, k| Ok(Jet::variable(x, k).ln()?.scale(I).add_const(real(mm))));
            let mut s = PotentialSpec::new(name, [v11, u.clone(), u, v22], m);
            s.symmetric_offdiag = true;
            s.domain = Domain::HalfLine;
            s.turning = Some(TurningMeta { nu: -1.0, eps1: 0.5, p: 1.0, a: 1.0 });
            s.grid = (2.0, 1e4);
            s
        }
        "polynomial-complex" => {
            check_keys(params, &["m", "gamma", "v"])?;
            let gamma = p("gamma", 1.0);
            if !(gamma > 0.0) {
                return Err(Error::invalid("gamma", "must be positive"));
            }
            let v = half_line_decay(p("v", 0.0));
            let d: ComponentFn = Arc::new(move |x, k| Ok(Jet::variable(x, k).powf(gamma)?.scale(I)));
            let mut s = PotentialSpec::new(name, [d.clone(), v.clone(), v, d], m);
            s.symmetric_offdiag = true;
            s.domain = Domain::HalfLine;
            s.turning = Some(TurningMeta { nu: -1.0, eps1: 0.5, p: 1.0, a: 1.0 });
            s.grid = (1.0, 400.0);
            s
        }
        "exponential" => {
            check_keys(params, &["m", "gamma", "v"])?;
            let gamma = p("gamma", 1.0);
            if !(gamma > 0.0) {
                return Err(Error::invalid("gamma", "must be positive"));
            }
            let v = half_line_decay(p("v", 0.0));
            let d: ComponentFn = Arc::new(move |x, k| Ok(Jet::variable(x, k).powf(gamma)?.exp().scale(I)));
            let mut s = PotentialSpec::new(name, [d.clone(), v.clone(), v, d], m);
            s.symmetric_offdiag = true;
            s.domain = Domain::HalfLine;
            s.turning = Some(TurningMeta { nu: gamma - 1.0, eps1: 0.5, p: 0.5, a: 1.0 });
            s.grid = (1.0, 3.0f64.powf(1.0 / gamma).max(2.0));
            s
        }
        _ => return Err(Error::UnknownPotential(name.to_string())),
    };
    spec.params = params.clone();
    spec.params.entry("m".into()).or_insert(m);
    if let Some(&n) = params.get("N") {
        if !(0.0..=8.0).contains(&n) || n.fract() != 0.0 {
            return Err(Error::invalid("N", "regularity must be an integer in 0..=8"));
        }
        spec.regularity = n as usize;
    }
    Ok(spec)
}

/// `F(x) = ∫_0^x (Im V11 + Im V22)`.
pub fn f_eval(spec: &PotentialSpec, x: f64) -> Result<f64> {
    let r = integrate(
        |t| spec.value(Component::V11, t).im + spec.value(Component::V22, t).im,
        0.0,
        x,
        Tolerance::default(),
    )?;
    Ok(r.value)
}

/// `U(x) = Im V12 + Im V21` (pointwise).
pub fn u_eval(spec: &PotentialSpec, x: f64) -> f64 {
    spec.value(Component::V12, x).im + spec.value(Component::V21, x).im
}

/// `∫_0^x U`.
pub fn u_primitive(spec: &PotentialSpec, x: f64) -> Result<f64> {
    Ok(integrate(|t| u_eval(spec, t), 0.0, x, Tolerance::default())?.value)
}

/// `∫_{x_β}^x (Im V11(t) − β) dt`.
pub fn f_turning_eval(spec: &PotentialSpec, x_beta: f64, x: f64, beta: f64) -> Result<f64> {
    let r = integrate(
        |t| spec.value(Component::V11, t).im - beta,
        x_beta,
        x,
        Tolerance::default(),
    )?;
    Ok(r.value)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionMargin {
    pub name: String,
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub conditions: Vec<ConditionMargin>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, margin: f64, passed: bool) {
        self.passed &= passed;
        self.conditions.push(ConditionMargin { name: name.into(), margin, passed });
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionMargin> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Settings for the "≲"-type checks, whose constants are not fixed.
#[derive(Clone, Copy, Debug)]
pub struct ValidationOptions {
    /// A ratio claimed to be `O(1)` passes when it stays below this.
    pub big_o_bound: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { big_o_bound: 1e3 }
    }
}

/// Ratio with the convention `0/0 = 0`.
fn ratio(num: f64, den: f64) -> f64 {
    if num <= 1e-300 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Cumulative integrals `∫_0^{x_i} g` along a sorted grid.
fn cumulative(grid: &[f64], g: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let tol = Tolerance::default();
    let mut out = vec![0.0; grid.len()];
    // Split at zero so both directions accumulate from the origin.
    let start = grid.partition_point(|&x| x < 0.0);
    let mut acc = 0.0;
    let mut prev = 0.0;
    for i in start..grid.len() {
        acc += integrate(&g, prev, grid[i], tol)?.value;
        prev = grid[i];
        out[i] = acc;
    }
    acc = 0.0;
    prev = 0.0;
    for i in (0..start).rev() {
        acc += integrate(&g, prev, grid[i], tol)?.value;
        prev = grid[i];
        out[i] = acc;
    }
    Ok(out)
}

/// Checks the real-λ growth/sign assumption on `grid` and reports margins.
pub fn validate_assumption_i(
    spec: &PotentialSpec,
    grid: &[f64],
    opts: ValidationOptions,
) -> Result<ValidationReport> {
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let lo = *grid.first().ok_or_else(|| Error::GridTooSmall("empty grid".into()))?;
    let hi = *grid.last().unwrap();
    if hi < spec.plus.a || lo > -spec.minus.a {
        return Err(Error::GridTooSmall(format!(
            "grid [{lo}, {hi}] does not reach beyond [-{}, {}]",
            spec.minus.a, spec.plus.a
        )));
    }
    let s = spec.orientation.sign();
    let big = opts.big_o_bound;
    let n_top = spec.regularity;
    let im_sum = |x: f64| spec.value(Component::V11, x).im + spec.value(Component::V22, x).im;
    let f_tilde: Vec<f64> = cumulative(&grid, im_sum)?.into_iter().map(|v| s * v).collect();
    let u_int = cumulative(&grid, |x| u_eval(spec, x))?;

    let mut rep = ValidationReport { passed: true, conditions: Vec::new() };
    for (label, meta, sgn) in [("minus", spec.minus, -1.0), ("plus", spec.plus, 1.0)] {
        let idx: Vec<usize> = (0..grid.len())
            .filter(|&i| sgn * grid[i] >= meta.a)
            .collect();
        let mut sign_margin = f64::INFINITY;
        let mut mu_margin = f64::INFINITY;
        let mut eps_margin = f64::INFINITY;
        let mut f_lin = f64::INFINITY;
        // O(·) ratios are judged on the outer half of the side region.
        let reach = idx.iter().map(|&i| grid[i].abs()).fold(0.0, f64::max);
        let tail_from = 0.5 * (meta.a + reach);
        let mut f_dom: f64 = 0.0;
        let mut diag_ratio: f64 = 0.0;
        let mut off_ratio: f64 = 0.0;
        for &i in &idx {
            let x = grid[i];
            let v = spec.values(x);
            let sum = v[0].im + v[3].im;
            sign_margin = sign_margin.min(sgn * s * sum);
            let abs_sum = v[0].im.abs() + v[3].im.abs();
            if abs_sum > 0.0 {
                mu_margin = mu_margin.min(sum.abs() / abs_sum - meta.mu);
            }
            let ft = f_tilde[i];
            eps_margin = eps_margin.min((2.0 * meta.eps * ft - u_int[i]) / ft.abs().max(1e-300));
            f_lin = f_lin.min(ft / x.abs());
            if x.abs() < tail_from {
                continue;
            }
            let fx = (spec.growth)(x).abs();
            f_dom = f_dom.max(ratio(fx, ft));
            for c in [Component::V11, Component::V22] {
                let j = spec.jet(c, x, n_top + 1)?;
                let base = j.value().norm();
                for n in 1..=n_top + 1 {
                    let r = ratio(j.derivative(n).norm(), fx.powf(n as f64 * meta.nu) * base);
                    diag_ratio = diag_ratio.max(r);
                }
            }
            let d = spec.jet(Component::V21, x, n_top)? - spec.jet(Component::V12, x, n_top)?;
            for n in 0..=n_top {
                let r = ratio(d.derivative(n).norm(), fx.powf((n + 1) as f64 * meta.nu));
                off_ratio = off_ratio.max(r);
            }
        }
        if idx.is_empty() {
            return Err(Error::GridTooSmall(format!("no grid point in the {label} region")));
        }
        rep.push(format!("sign_{label}"), sign_margin, sign_margin > 0.0);
        rep.push(format!("mu_{label}"), mu_margin, mu_margin >= -1e-12);
        rep.push(format!("eps_{label}"), eps_margin, eps_margin >= -1e-12);
        rep.push(format!("f_domination_{label}"), f_dom, f_dom.is_finite() && f_dom <= big);
        rep.push(format!("f_linear_growth_{label}"), f_lin, f_lin > 0.0);
        rep.push(format!("diag_derivatives_{label}"), diag_ratio, diag_ratio <= big);
        rep.push(format!("offdiag_derivatives_{label}"), off_ratio, off_ratio <= big);
        let eta = spec.eta;
        let eta_margin = (meta.mu - eta) / (eta * eta + (2.0 + 2.0 * eta).powi(2)).sqrt() - meta.eps;
        rep.push(format!("eta_{label}"), eta_margin, eta > 0.0 && eta < spec.min_mu() && eta_margin > 0.0);
        let eps_range = meta.eps > 0.0 && meta.eps < meta.mu / 2.0 && meta.mu > 0.0 && meta.mu <= 1.0;
        rep.push(format!("constants_{label}"), meta.mu / 2.0 - meta.eps, eps_range);
    }
    Ok(rep)
}

/// Checks the turning-point assumption on a half-line grid.
pub fn validate_assumption_iii(
    spec: &PotentialSpec,
    grid: &[f64],
    opts: ValidationOptions,
) -> Result<ValidationReport> {
    let meta = spec
        .turning
        .ok_or_else(|| Error::Assumption(format!("{} carries no turning-point metadata", spec.name)))?;
    if spec.regularity < 2 {
        return Err(Error::invalid("N", "turning-point construction needs N >= 2"));
    }
    let mut grid: Vec<f64> = grid.iter().copied().filter(|&x| x >= meta.a).collect();
    grid.sort_by(f64::total_cmp);
    if grid.len() < 8 {
        return Err(Error::GridTooSmall(format!("fewer than 8 grid points beyond a = {}", meta.a)));
    }
    let big = opts.big_o_bound;
    let nu = meta.nu;
    let mut rep = ValidationReport { passed: true, conditions: Vec::new() };

    let mut diff: f64 = 0.0;
    for &x in &grid {
        let v = spec.values(x);
        diff = diff.max((v[0].im - v[3].im).abs() / (1.0 + v[0].im.abs()));
    }
    rep.push("im_diagonal_equal", diff, diff <= 1e-10);
    if diff > 1e-10 {
        return Ok(rep);
    }

    let n_top = spec.regularity;
    let mut mono = f64::INFINITY;
    let mut low_a = f64::INFINITY;
    let mut low_b = f64::INFINITY;
    let mut low_c = f64::INFINITY;
    let mut diag_ratio: f64 = 0.0;
    let mut off_ratio: f64 = 0.0;
    let mut u_ratio = Vec::with_capacity(grid.len());
    let mut prev = f64::NEG_INFINITY;
    let tail_from = 0.5 * (meta.a + grid[grid.len() - 1]);
    for &x in &grid {
        let j = spec.jet(Component::V11, x, n_top + 1)?;
        let v0 = j.value().im;
        let v1 = j.derivative(1).im;
        let v2 = j.derivative(2).im;
        mono = mono.min(v0 - prev);
        prev = v0;
        low_a = low_a.min(v1 / x.powf(2.0 * nu + meta.eps1));
        low_b = low_b.min(if v2 == 0.0 { f64::INFINITY } else { v1 / (v2.abs() * x.powf(-nu)) });
        low_c = low_c.min(v1 / (v0.abs().powf(meta.p) * x.powf(2.0 * nu)));
        u_ratio.push(ratio(u_eval(spec, x).abs(), x.powf(-nu) * v1));
        if x < tail_from {
            continue;
        }
        for c in [Component::V11, Component::V22] {
            let jc = spec.jet(c, x, n_top + 1)?;
            let base = jc.value().norm();
            for n in 1..=n_top + 1 {
                diag_ratio = diag_ratio.max(ratio(jc.derivative(n).norm(), x.powf(n as f64 * nu) * base));
            }
        }
        let d = spec.jet(Component::V21, x, n_top)? - spec.jet(Component::V12, x, n_top)?;
        for n in 0..=n_top {
            off_ratio = off_ratio.max(ratio(d.derivative(n).norm(), x.powf((n + 1) as f64 * nu)));
        }
    }
    rep.push("monotone_increasing", mono, mono > 0.0);
    rep.push("unbounded", prev, prev > spec.value(Component::V11, grid[0]).im);
    rep.push("lower_bound_power", low_a, low_a >= 1.0 / big);
    rep.push("lower_bound_second_derivative", low_b, low_b >= 1.0 / big);
    rep.push("lower_bound_potential_power", low_c, low_c >= 1.0 / big);
    let q = u_ratio.len() / 4;
    let head = u_ratio[..q.max(1)].iter().copied().fold(0.0, f64::max);
    let tail = u_ratio[u_ratio.len() - q.max(1)..].iter().copied().fold(0.0, f64::max);
    rep.push("offdiag_small", tail, tail <= 1e-12 || tail <= head);
    rep.push("diag_derivatives", diag_ratio, diag_ratio <= big);
    rep.push("offdiag_derivatives", off_ratio, off_ratio <= big);
    Ok(rep)
}
