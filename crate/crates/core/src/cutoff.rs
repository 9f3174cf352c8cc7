//! Cutoffs localizing the pseudomode.
//!
//! Real λ: `ξ = 1` on `(−δ⁻+Δ⁻, δ⁺−Δ⁺)` and `ξ = 0` off `(−δ⁻, δ⁺)`, where
//! `δ^±` is the first point at which the growth gauge `g_±` reaches `|λ|`.
//! Complex λ: `ξ = 1` on `x_β ± δ_β/2` and `ξ = 0` off `x_β ± δ_β`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Component, PotentialSpec, SideMeta};

/// Search ceiling for `δ` and `x_β`.
pub const SEARCH_CEILING: f64 = 1e300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GaugeCase {
    /// Some of `Re V11`, `Re V22`, `Im V11 − Im V22` unbounded on this side.
    Unbounded,
    /// All three bounded.
    Bounded,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SideGauge {
    pub case: GaugeCase,
    pub nu: f64,
    /// `g ≡ 0`, hence `δ = ∞` and `Δ = 0`.
    pub trivial: bool,
}

impl SideGauge {
    fn new(meta: &SideMeta) -> Self {
        let case = if meta.all_bounded() { GaugeCase::Bounded } else { GaugeCase::Unbounded };
        SideGauge { case, nu: meta.nu, trivial: case == GaugeCase::Bounded && meta.nu <= 0.0 }
    }
}

/// The pair `g_−` on `(−∞, 0]`, `g_+` on `[0, ∞)`.
#[derive(Clone, Debug)]
pub struct GrowthGauge {
    spec: PotentialSpec,
    pub minus: SideGauge,
    pub plus: SideGauge,
    pub eta: f64,
    pub eps1: f64,
}

/// `(μ−η)/√(η²+(2+2η)²)`, which must exceed ε on both sides.
pub fn eta_margin(mu: f64, eta: f64) -> f64 {
    (mu - eta) / (eta * eta + (2.0 + 2.0 * eta).powi(2)).sqrt()
}

impl GrowthGauge {
    /// Builds the gauge, rejecting an `η` that is not small enough for the
    /// decay estimate (it is never shrunk silently).
    pub fn new(spec: &PotentialSpec) -> Result<Self> {
        let eta = spec.eta;
        if !(eta > 0.0 && eta < spec.min_mu()) {
            return Err(Error::Eta { eta, reason: format!("need 0 < eta < min(mu) = {}", spec.min_mu()) });
        }
        for (label, side) in [("minus", &spec.minus), ("plus", &spec.plus)] {
            let margin = eta_margin(side.mu, eta);
            if !(margin > side.eps) {
                return Err(Error::Eta {
                    eta,
                    reason: format!("{label} side: (mu-eta)/sqrt(eta^2+(2+2eta)^2) = {margin} <= eps = {}", side.eps),
                });
            }
        }
        if !(spec.eps1 > 0.0 && spec.eps1 < 1.0) {
            return Err(Error::invalid("eps1", "must lie in (0, 1)"));
        }
        Ok(GrowthGauge {
            spec: spec.clone(),
            minus: SideGauge::new(&spec.minus),
            plus: SideGauge::new(&spec.plus),
            eta,
            eps1: spec.eps1,
        })
    }

    pub fn side(&self, plus: bool) -> &SideGauge {
        if plus {
            &self.plus
        } else {
            &self.minus
        }
    }

    /// `g_±(x)`; the side is taken from the sign of `x` (`x = 0` counts as
    /// either, pick with `plus`).
    pub fn eval(&self, plus: bool, x: f64) -> f64 {
        let side = self.side(plus);
        if side.trivial {
            return 0.0;
        }
        let f_term = if side.nu > 0.0 {
            (self.spec.growth)(x).abs().powf(2.0 * side.nu / (1.0 - self.eps1))
        } else {
            0.0
        };
        match side.case {
            GaugeCase::Bounded => f_term,
            GaugeCase::Unbounded => {
                let m = self.spec.mass;
                let v = self.spec.values(x);
                let a = (v[0].re + m).abs() / self.eta;
                let b = (v[3].re - m).abs() / self.eta;
                let c = (v[0].im - v[3].im).abs() / self.eta;
                // NaN from overflowing components counts as unbounded.
                [a, b, c, f_term].into_iter().fold(0.0, |acc, t| if t.is_nan() { f64::INFINITY } else { acc.max(t) })
            }
        }
    }
}

/// Smallest `x ≥ 0` with `g(±x) = λ`, found by geometric marching and
/// bisection, then checked against `g ≤ λ` on `[0, δ]`.
fn first_crossing(gauge: &GrowthGauge, plus: bool, lambda: f64) -> Result<f64> {
    let s = if plus { 1.0 } else { -1.0 };
    let g = |x: f64| gauge.eval(plus, s * x);
    let g0 = g(0.0);
    if !(lambda > g0) {
        return Err(Error::LambdaBelowGauge { lambda, g0 });
    }
    let mut lo = 0.0;
    let mut hi = 1.0 / 64.0;
    loop {
        if !(g(hi) < lambda) {
            break;
        }
        lo = hi;
        hi = if hi < 1.0 { hi + 1.0 / 64.0 } else { hi * 1.03 };
        if hi > SEARCH_CEILING {
            return Err(Error::NoRoot { ceiling: SEARCH_CEILING });
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
            break;
        }
        if g(mid) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);
    for k in 0..=256 {
        let x = delta * k as f64 / 256.0;
        if g(x) > lambda * (1.0 + 1e-9) {
            return Err(Error::NonMonotone { x: s * x });
        }
    }
    Ok(delta)
}

/// `(δ⁻, δ⁺)` for `|λ|`; `+∞` on trivial sides.
pub fn delta_for_lambda(gauge: &GrowthGauge, lambda: f64) -> Result<(f64, f64)> {
    let lam = lambda.abs();
    let side = |plus: bool| {
        if gauge.side(plus).trivial {
            Ok(f64::INFINITY)
        } else {
            first_crossing(gauge, plus, lam)
        }
    };
    Ok((side(false)?, side(true)?))
}

/// `Δ = 0` on trivial sides, else `1/δ`; requires `Δ < δ`.
pub fn delta_width(delta: f64, trivial: bool) -> Result<f64> {
    if trivial {
        return Ok(0.0);
    }
    let width = 1.0 / delta;
    if !(width < delta) {
        return Err(Error::DegenerateCutoff { delta, width });
    }
    Ok(width)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TurningPoint {
    pub beta: f64,
    pub x_beta: f64,
    pub delta_beta: f64,
}

/// Root of `Im V11(x) = β` on the half-line, by doubling and bisection.
pub fn turning_point(spec: &PotentialSpec, beta: f64) -> Result<TurningPoint> {
    let meta = spec
        .turning
        .ok_or_else(|| Error::Assumption(format!("{} has no turning-point metadata", spec.name)))?;
    let v = |x: f64| spec.value(Component::V11, x).im;
    let start = spec.grid.0;
    if !(v(start) < beta) {
        return Err(Error::BetaBelowRange { beta });
    }
    let mut lo = start;
    let mut hi = start.max(1.0) * 2.0;
    while v(hi) < beta {
        lo = hi;
        hi *= 2.0;
        if hi > SEARCH_CEILING {
            return Err(Error::NoRoot { ceiling: SEARCH_CEILING });
        }
    }
    // Coarse monotonicity check over the bracket history.
    let mut prev = v(start);
    let ratio = hi / start;
    for k in 1..=128 {
        let x = start * ratio.powf(k as f64 / 128.0);
        let y = v(x);
        if y < prev {
            return Err(Error::NonMonotone { x });
        }
        prev = y;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if v(mid) < beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_beta = 0.5 * (lo + hi);
    Ok(TurningPoint { beta, x_beta, delta_beta: 0.5 * x_beta.powf(-meta.nu) })
}

/// Smooth step `H` on `[0, 1]` rising from 0 to 1:
/// `H = 1/(1+e^g)`, `g(t) = 1/t − 1/(1−t)`. Returns `(H, H', H'')`.
pub fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let s = 1.0 - t;
    let g = 1.0 / t - 1.0 / s;
    let e = (-g.abs()).exp();
    let sigma = if g > 0.0 { e / (1.0 + e) } else { 1.0 / (1.0 + e) };
    let w = e / ((1.0 + e) * (1.0 + e));
    let q = 1.0 / (t * t) + 1.0 / (s * s);
    let dq = -2.0 / (t * t * t) + 2.0 / (s * s * s);
    (sigma, w * q, w * ((1.0 - 2.0 * sigma) * q * q + dq))
}

/// Measured `sup|H'|` and `sup|H''|` (the constants `C_1`, `C_2` for a
/// transition of unit width).
pub fn step_constants() -> (f64, f64) {
    let n = 20_000;
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    for k in 1..n {
        let (_, d1, d2) = smooth_step(k as f64 / n as f64);
        c1 = c1.max(d1.abs());
        c2 = c2.max(d2.abs());
    }
    (c1, c2)
}

/// Product of a rising and a falling smooth transition. `None` on a side
/// means `ξ = 1` all the way out.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Bump {
    /// `(a, b)`: ξ rises from 0 at `a` to 1 at `b`.
    pub left: Option<(f64, f64)>,
    /// `(a, b)`: ξ falls from 1 at `a` to 0 at `b`.
    pub right: Option<(f64, f64)>,
}

impl Bump {
    pub fn one() -> Self {
        Bump { left: None, right: None }
    }

    /// ξ = 1 on `inner`, 0 off `outer`. An infinite outer end is allowed
    /// only with a matching inner end.
    pub fn new(inner: (f64, f64), outer: (f64, f64)) -> Result<Self> {
        let side = |near: f64, far: f64| -> Result<Option<(f64, f64)>> {
            if near == far {
                return Ok(None);
            }
            if !far.is_finite() || !near.is_finite() {
                return Err(Error::DegenerateCutoff { delta: far.abs(), width: (far - near).abs() });
            }
            Ok(Some((far, near)))
        };
        if !(outer.0 <= inner.0 && inner.0 < inner.1 && inner.1 <= outer.1) {
            return Err(Error::invalid("cutoff", "inner interval must lie inside the outer one"));
        }
        let left = side(inner.0, outer.0)?;
        let right = side(inner.1, outer.1)?.map(|(far, near)| (near, far));
        Ok(Bump { left, right })
    }

    /// `(ξ, ξ', ξ'')` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let mut out = [1.0, 0.0, 0.0];
        if let Some((a, b)) = self.left {
            let w = b - a;
            let (h, d1, d2) = smooth_step((x - a) / w);
            out = mul3(out, [h, d1 / w, d2 / (w * w)]);
        }
        if let Some((a, b)) = self.right {
            let w = b - a;
            let (h, d1, d2) = smooth_step((b - x) / w);
            out = mul3(out, [h, -d1 / w, d2 / (w * w)]);
        }
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    pub fn is_one(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }

    /// Closure of `{ξ > 0}`.
    pub fn support(&self) -> (f64, f64) {
        (
            self.left.map_or(f64::NEG_INFINITY, |t| t.0),
            self.right.map_or(f64::INFINITY, |t| t.1),
        )
    }

    /// `{ξ = 1}`.
    pub fn plateau(&self) -> (f64, f64) {
        (
            self.left.map_or(f64::NEG_INFINITY, |t| t.1),
            self.right.map_or(f64::INFINITY, |t| t.0),
        )
    }
}

fn mul3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CutoffMode {
    RealLambda,
    ComplexLambda,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffPlan {
    pub mode: CutoffMode,
    /// `(−δ⁻, δ⁺)` or `(x_β − δ_β, x_β + δ_β)`.
    pub outer: (f64, f64),
    /// `(Δ⁻, Δ⁺)` or `(δ_β/2, δ_β/2)`.
    pub widths: (f64, f64),
    pub bump: Bump,
    /// Measured `sup|ξ^{(j)}|·width^j` for `j = 1, 2`.
    pub deriv_bound_consts: (f64, f64),
    pub turning: Option<TurningPoint>,
}

impl CutoffPlan {
    /// Real-λ cutoff; negative λ uses `|λ|`.
    pub fn real(spec: &PotentialSpec, lambda: f64) -> Result<Self> {
        let gauge = GrowthGauge::new(spec)?;
        let (dm, dp) = delta_for_lambda(&gauge, lambda)?;
        let wm = delta_width(dm, gauge.minus.trivial)?;
        let wp = delta_width(dp, gauge.plus.trivial)?;
        let bump = Bump::new((-dm + wm, dp - wp), (-dm, dp))?;
        Ok(CutoffPlan {
            mode: CutoffMode::RealLambda,
            outer: (-dm, dp),
            widths: (wm, wp),
            deriv_bound_consts: if bump.is_one() { (0.0, 0.0) } else { step_constants() },
            bump,
            turning: None,
        })
    }

    /// Cutoff around the turning point for `Im λ = β`.
    pub fn complex(spec: &PotentialSpec, beta: f64) -> Result<Self> {
        let tp = turning_point(spec, beta)?;
        Self::around(tp)
    }

    pub fn around(tp: TurningPoint) -> Result<Self> {
        let (x, d) = (tp.x_beta, tp.delta_beta);
        if !(x - d > 0.0) {
            return Err(Error::DegenerateCutoff { delta: d, width: x });
        }
        let bump = Bump::new((x - 0.5 * d, x + 0.5 * d), (x - d, x + d))?;
        Ok(CutoffPlan {
            mode: CutoffMode::ComplexLambda,
            outer: (x - d, x + d),
            widths: (0.5 * d, 0.5 * d),
            bump,
            deriv_bound_consts: step_constants(),
            turning: Some(tp),
        })
    }

    /// The real-λ plan with no cutoff at all (ξ ≡ 1).
    pub fn none() -> Self {
        CutoffPlan {
            mode: CutoffMode::RealLambda,
            outer: (f64::NEG_INFINITY, f64::INFINITY),
            widths: (0.0, 0.0),
            bump: Bump::one(),
            deriv_bound_consts: (0.0, 0.0),
            turning: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{catalog, Params};
    use proptest::prelude::*;

    fn spec(name: &str) -> PotentialSpec {
        catalog(name, &Params::new()).unwrap()
    }

    #[test]
    fn linear_gauge_closed_form() {
        // Bounded diagonal with ν > 0 and f(x) = x: g = |x|^{2ν/(1−ε1)} = |x|
        // for ν = 1/4, ε1 = 1/2.
        let mut s = spec("bounded-electric");
        s.plus.nu = 0.25;
        let g = GrowthGauge::new(&s).unwrap();
        assert_eq!(g.plus.case, GaugeCase::Bounded);
        let (dm, dp) = delta_for_lambda(&g, 100.0).unwrap();
        assert_eq!(dm, f64::INFINITY);
        assert!((dp - 100.0).abs() < 1e-10);
    }

    #[test]
    fn exp_split_delta_is_arccosh() {
        let s = spec("exp-split");
        let g = GrowthGauge::new(&s).unwrap();
        for lam in [100.0, 400.0, 1600.0] {
            let (dm, dp) = delta_for_lambda(&g, lam).unwrap();
            let expect = (s.eta * lam).acosh();
            assert!((dp - expect).abs() < 1e-10 * expect);
            assert!((dm - expect).abs() < 1e-10 * expect);
            // within a bounded shift of the arcsinh form
            assert!((dp - (s.eta * lam).asinh()).abs() < 0.01);
        }
    }

    #[test]
    fn log_electric_delta_is_sinh() {
        let s = spec("log-electric");
        let g = GrowthGauge::new(&s).unwrap();
        let lam = 80.0;
        let (dm, dp) = delta_for_lambda(&g, lam).unwrap();
        // |Im V11 − Im V22| = |x/√(x²+1) − asinh x| ≈ asinh|x| − 1 for large |x|.
        let approx = (s.eta * lam + 1.0).sinh();
        assert!((dp / approx - 1.0).abs() < 0.05);
        assert!((dm / approx - 1.0).abs() < 0.05);
    }

    #[test]
    fn below_gauge_and_ceiling_errors() {
        let s = spec("exp-split");
        let g = GrowthGauge::new(&s).unwrap();
        assert!(matches!(delta_for_lambda(&g, 2.0), Err(Error::LambdaBelowGauge { .. })));
    }

    #[test]
    fn eta_condition_rejected() {
        let mut s = spec("exp-split");
        s.eta = 0.45;
        assert!(matches!(GrowthGauge::new(&s), Err(Error::Eta { .. })));
    }

    #[test]
    fn width_cases() {
        assert_eq!(delta_width(f64::INFINITY, true).unwrap(), 0.0);
        assert!((delta_width(100.0, false).unwrap() - 0.01).abs() < 1e-17);
        assert!(matches!(delta_width(0.5, false), Err(Error::DegenerateCutoff { .. })));
    }

    #[test]
    fn delta_grows_with_lambda() {
        for name in ["exp-split", "log-electric", "superexponential"] {
            let s = spec(name);
            let g = GrowthGauge::new(&s).unwrap();
            let mut prev = 0.0;
            // log-electric has δ ≈ sinh(ηλ), so stay below the search ceiling
            let mut lam = 20.0;
            for _ in 0..8 {
                let (_, dp) = delta_for_lambda(&g, lam).unwrap();
                assert!(dp > prev, "{name} {lam}");
                prev = dp;
                lam *= 2.0;
            }
        }
    }

    #[test]
    fn turning_points_closed_form() {
        let log = spec("logarithmic");
        let mut poly_p = Params::new();
        poly_p.insert("gamma".into(), 2.0);
        let poly = catalog("polynomial-complex", &poly_p).unwrap();
        let mut ex_p = Params::new();
        ex_p.insert("gamma".into(), 2.0);
        let ex = catalog("exponential", &ex_p).unwrap();
        for beta in [10.0f64, 20.0, 40.0] {
            let t = turning_point(&log, beta).unwrap();
            assert!((t.x_beta / beta.exp() - 1.0).abs() < 1e-12);
            assert!((t.delta_beta - t.x_beta / 2.0).abs() < 1e-12 * t.x_beta);
            let t = turning_point(&poly, beta).unwrap();
            assert!((t.x_beta / beta.sqrt() - 1.0).abs() < 1e-12);
            let t = turning_point(&ex, beta).unwrap();
            assert!((t.x_beta / beta.ln().sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(turning_point(&poly, 0.5), Err(Error::BetaBelowRange { .. })));
    }

    #[test]
    fn derivative_comparable_on_window() {
        let mut cases = vec![spec("logarithmic"), spec("polynomial-complex"), spec("exponential")];
        for g in [0.5, 2.0] {
            let mut p = Params::new();
            p.insert("gamma".into(), g);
            cases.push(catalog("polynomial-complex", &p).unwrap());
        }
        for s in &cases {
            for beta in [10.0, 40.0] {
                let t = turning_point(s, beta).unwrap();
                let d1 = |x: f64| s.jet(Component::V11, x, 1).unwrap().derivative(1).im;
                let c = d1(t.x_beta);
                for k in 0..=64 {
                    let x = t.x_beta - t.delta_beta + 2.0 * t.delta_beta * k as f64 / 64.0;
                    let r = d1(x) / c;
                    assert!((1.0 / 3.0..=3.0).contains(&r), "{} {beta} {r}", s.name);
                }
            }
        }
    }

    #[test]
    fn step_endpoints_and_constants() {
        assert_eq!(smooth_step(0.0).0, 0.0);
        assert_eq!(smooth_step(1.0).0, 1.0);
        let h = smooth_step(0.5).0;
        assert!(h > 0.0 && h < 1.0);
        let (c1, c2) = step_constants();
        assert!(c1 <= 4.0 && c2 <= 40.0, "{c1} {c2}");
    }

    #[test]
    fn step_derivatives_match_differences() {
        let h = 1e-5;
        for &t in &[0.1, 0.3, 0.5, 0.77, 0.9] {
            let (_, d1, d2) = smooth_step(t);
            let fd1 = (smooth_step(t + h).0 - smooth_step(t - h).0) / (2.0 * h);
            let fd2 = (smooth_step(t + h).1 - smooth_step(t - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-8 * d1.abs().max(1.0));
            assert!((d2 - fd2).abs() < 1e-6 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn identity_bump_for_bounded_case() {
        let plan = CutoffPlan::real(&spec("bounded-electric"), 200.0).unwrap();
        assert!(plan.bump.is_one());
        assert_eq!(plan.widths, (0.0, 0.0));
        assert_eq!(plan.bump.eval(1e6), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn complex_plan_support() {
        let plan = CutoffPlan::complex(&spec("polynomial-complex"), 50.0).unwrap();
        let t = plan.turning.unwrap();
        assert_eq!(plan.bump.support(), (t.x_beta - t.delta_beta, t.x_beta + t.delta_beta));
        assert_eq!(plan.bump.value(t.x_beta), 1.0);
        assert_eq!(plan.bump.value(t.x_beta + t.delta_beta * 1.01), 0.0);
    }

    proptest! {
        #[test]
        fn bump_bounds_scale_with_width(w in 1e-3f64..1e3, c in -50.0f64..50.0) {
            let bump = Bump::new((c - 2.0 * w, c + 3.0 * w), (c - 3.0 * w, c + 4.0 * w)).unwrap();
            let mut s1: f64 = 0.0;
            let mut s2: f64 = 0.0;
            for k in 0..=4000 {
                let x = c - 3.0 * w + 7.0 * w * k as f64 / 4000.0;
                let [v, d1, d2] = bump.eval(x);
                prop_assert!((0.0..=1.0).contains(&v));
                s1 = s1.max(d1.abs());
                s2 = s2.max(d2.abs());
            }
            prop_assert!(s1 * w <= 4.0);
            prop_assert!(s2 * w * w <= 40.0);
            prop_assert_eq!(bump.value(c), 1.0);
            prop_assert_eq!(bump.value(c + 4.0 * w), 0.0);
        }

        #[test]
        fn real_plan_support_relations(lam in 50.0f64..5000.0) {
            let plan = CutoffPlan::real(&spec("exp-split"), lam).unwrap();
            let (a, b) = plan.bump.plateau();
            let (c, d) = plan.bump.support();
            prop_assert!(c < a && a < b && b < d);
            prop_assert!((d - plan.outer.1).abs() < 1e-12 && (c - plan.outer.0).abs() < 1e-12);
            prop_assert!((b - (plan.outer.1 - plan.widths.1)).abs() < 1e-12);
        }
    }
}
