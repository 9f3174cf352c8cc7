//! Rate sweeps in `λ` and `β`, log-log fits, the complex-λ bound
//! `κ(β,c) + σ^{(N)}(β)`, pseudospectral region boundaries and plot data.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::CutoffPlan;
use crate::error::{Error, Result};
use crate::oracle::{envelope_rate, fd_residual_ratio};
use crate::potential::{f_turning_eval, Component, PotentialSpec};
use crate::pseudomode::{analytic_residual, assemble, Pseudomode};
use crate::wkb::SpectralParameter;

/// Relative analytic-vs-oracle gap above which a point is flagged.
pub const ORACLE_AGREEMENT: f64 = 1e-3;
pub const DEFAULT_C: f64 = 0.9;
/// Number of samples in a region polyline on `[β0, 10 β0]`.
pub const POLYLINE_SAMPLES: usize = 256;

/// Worker count from `DIRACWKB_THREADS`, if set.
pub fn thread_count() -> Option<usize> {
    std::env::var("DIRACWKB_THREADS").ok()?.parse().ok().filter(|&n| n > 0)
}

fn run_parallel<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_count().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitAxis {
    LogLambda,
    Beta,
    LogBeta,
}

impl FitAxis {
    fn map(self, a: f64) -> f64 {
        match self {
            FitAxis::LogLambda | FitAxis::LogBeta => a.abs().ln(),
            FitAxis::Beta => a,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least squares `y = slope·x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<Fit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(Fit { slope, intercept: my - slope * mx, r_squared, points_used: n })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    /// `λ` for real sweeps, `β` for complex ones.
    pub abscissa: f64,
    pub lambda: Complex64,
    pub ratio: f64,
    pub kappa: f64,
    pub remainder: f64,
    pub oracle: Option<f64>,
    pub oracle_agrees: Option<bool>,
    /// `κ(β,c) + σ^{(N)}(β)`, complex sweeps only.
    pub bound: Option<f64>,
    pub x_beta: Option<f64>,
    /// `Im V11'(x_β)`, complex sweeps only.
    pub v_prime: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Skipped {
    pub abscissa: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub skipped: Vec<Skipped>,
    pub fit_axis: FitAxis,
    pub fit: Option<Fit>,
    pub predicted_slope: Option<f64>,
}

impl SweepResult {
    /// Every point with an oracle value agrees with the analytic ratio.
    pub fn oracle_ok(&self) -> bool {
        self.points.iter().all(|p| p.oracle_agrees != Some(false))
    }

    /// Largest `ratio / bound` over points carrying a bound.
    pub fn bound_margin(&self) -> Option<f64> {
        self.points.iter().filter_map(|p| p.bound.map(|b| p.ratio / b)).reduce(f64::max)
    }
}

/// Fits `ln ratio` against `axis`, dropping the smallest abscissa; needs at
/// least 4 remaining points.
pub fn fit_points(points: &[SweepPoint], axis: FitAxis) -> Option<Fit> {
    if points.len() < 5 {
        return None;
    }
    let mut sorted: Vec<&SweepPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.abscissa.abs().total_cmp(&b.abscissa.abs()));
    let kept = &sorted[1..];
    let x: Vec<f64> = kept.iter().map(|p| axis.map(p.abscissa)).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.ratio.ln()).collect();
    least_squares(&x, &y)
}

/// Exponent of `λ` in the residual bound (without `κ`), taking the slower
/// side: `−(n+1)` bounded / `−n` unbounded for `ν ≤ 0`, and
/// `−(1+ε1)(n+1)/2` (+1 if unbounded) for `ν > 0`.
pub fn predicted_real_slope(spec: &PotentialSpec, n: usize, eps1: f64) -> f64 {
    let n = n as f64;
    let side = |s: &crate::potential::SideMeta| {
        let bounded = s.all_bounded();
        if s.nu <= 0.0 {
            if bounded {
                -(n + 1.0)
            } else {
                -n
            }
        } else {
            let base = -(1.0 + eps1) / 2.0 * (n + 1.0);
            if bounded {
                base
            } else {
                base + 1.0
            }
        }
    };
    side(&spec.minus).max(side(&spec.plus))
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub oracle: bool,
    /// Oracle spacing; by default `min(2^-12, 0.01/rate)`.
    pub oracle_step: Option<f64>,
    pub eps1: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { oracle: true, oracle_step: None, eps1: 0.5 }
    }
}

/// Default oracle spacing `min(2^-12, 0.01/rate)`.
pub fn default_oracle_step(pm: &Pseudomode) -> f64 {
    let rate = envelope_rate(pm);
    let h = 2f64.powi(-12);
    if rate > 0.0 {
        h.min(0.01 / rate)
    } else {
        h
    }
}

fn measure(pm: &Pseudomode, opts: &SweepOptions, abscissa: f64) -> Result<SweepPoint> {
    let rep = analytic_residual(pm);
    let (oracle, oracle_agrees) = if opts.oracle {
        let h = opts.oracle_step.unwrap_or_else(|| default_oracle_step(pm));
        let fd = fd_residual_ratio(&pm.spec, pm.param.lambda, pm, h)?;
        let agrees = if rep.ratio == 0.0 { fd <= 1e-12 } else { (fd / rep.ratio - 1.0).abs() <= ORACLE_AGREEMENT };
        (Some(fd), Some(agrees))
    } else {
        (None, None)
    };
    Ok(SweepPoint {
        abscissa,
        lambda: pm.param.lambda,
        ratio: rep.ratio,
        kappa: rep.kappa_part,
        remainder: rep.remainder_part,
        oracle,
        oracle_agrees,
        bound: None,
        x_beta: None,
        v_prime: None,
    })
}

fn collect(results: Vec<(f64, Result<SweepPoint>)>) -> (Vec<SweepPoint>, Vec<Skipped>) {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (a, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => skipped.push(Skipped { abscissa: a, reason: e.to_string() }),
        }
    }
    points.sort_by(|a, b| a.abscissa.total_cmp(&b.abscissa));
    skipped.sort_by(|a, b| a.abscissa.total_cmp(&b.abscissa));
    (points, skipped)
}

/// Real-λ sweep at order `n`. Points whose construction fails (guard,
/// cutoff) are skipped and recorded.
pub fn rate_sweep(spec: &PotentialSpec, n: usize, lambdas: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    if n > spec.regularity {
        return Err(Error::invalid("n", format!("exceeds the regularity {} of {}", spec.regularity, spec.name)));
    }
    let results: Vec<(f64, Result<SweepPoint>)> = run_parallel(|| {
        lambdas
            .par_iter()
            .map(|&lam| {
                let point = (|| {
                    let plan = CutoffPlan::real(spec, lam)?;
                    let pm = assemble(spec, SpectralParameter::real(spec, lam), n, &plan)?;
                    measure(&pm, opts, lam)
                })();
                (lam, point)
            })
            .collect()
    });
    let (points, skipped) = collect(results);
    let fit = fit_points(&points, FitAxis::LogLambda);
    Ok(SweepResult {
        points,
        skipped,
        fit_axis: FitAxis::LogLambda,
        fit,
        predicted_slope: Some(predicted_real_slope(spec, n, opts.eps1)),
    })
}

/// `κ(β,c) = e^{−cF(x_β, x_β−δ/2)} + e^{−cF(x_β, x_β+δ/2)}`.
pub fn kappa_bound(spec: &PotentialSpec, beta: f64, x_beta: f64, delta_beta: f64, c: f64) -> Result<f64> {
    let left = f_turning_eval(spec, x_beta, x_beta - delta_beta / 2.0, beta)?;
    let right = f_turning_eval(spec, x_beta, x_beta + delta_beta / 2.0, beta)?;
    Ok((-c * left).exp() + (-c * right).exp())
}

/// `σ^{(N)}(β) = Σ_{ℓ=−1}^{N−2} x_β^{(N+ℓ+2)ν} |α|^{−(N+ℓ+1)} (1 + β/|α|)^{N+ℓ+2}`,
/// summed in log space.
pub fn sigma_bound(n: usize, nu: f64, x_beta: f64, alpha: f64, beta: f64) -> f64 {
    let a = alpha.abs();
    let n = n as i64;
    (-1..=n - 2)
        .map(|l| {
            let k = (n + l) as f64;
            ((k + 2.0) * nu * x_beta.ln() - (k + 1.0) * a.ln() + (k + 2.0) * (1.0 + beta / a).ln()).exp()
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logarithmic,
    Polynomial,
    Exponential,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logarithmic" => Ok(Family::Logarithmic),
            "polynomial" => Ok(Family::Polynomial),
            "exponential" => Ok(Family::Exponential),
            _ => Err(Error::invalid("family", format!("unknown family '{s}'"))),
        }
    }
}

/// Lower boundary `β ↦ |α|_min(β)` of a pseudospectral region.
#[derive(Clone, Debug, Serialize)]
pub struct RegionSpec {
    pub family: Family,
    pub gamma: f64,
    pub n: usize,
    pub eta: f64,
    /// `ε_0` (or `ε̃_0` for polynomial `γ < 1`).
    pub eps0: f64,
    pub mass: f64,
    pub beta0: f64,
    /// Power of `β`.
    pub beta_power: f64,
    /// Power of `ln β` (exponential family).
    pub log_power: f64,
    /// Rate `e^{−rate·β}` (logarithmic family).
    pub exp_rate: f64,
    /// Polynomial `γ < 1`: the boundary is the constant `|α| = m`.
    pub constant: bool,
    /// Predicted decay exponent of the residual (per unit `β` for the
    /// logarithmic family, per unit `ln β` otherwise).
    pub predicted_slope: f64,
    /// Overrides the boundary when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_alpha: Option<f64>,
}

impl RegionSpec {
    pub fn boundary(&self, beta: f64) -> f64 {
        if let Some(a) = self.fixed_alpha {
            return a;
        }
        if self.constant {
            return self.mass;
        }
        let mut v = self.beta_power * beta.ln() - self.exp_rate * beta;
        if self.log_power != 0.0 {
            v += self.log_power * beta.ln().ln();
        }
        v.exp()
    }

    /// The same region with the boundary replaced by a fixed `|α|`, for
    /// sweeps along a horizontal line.
    pub fn with_constant_alpha(mut self, alpha: f64) -> Self {
        self.fixed_alpha = Some(alpha);
        self
    }

    pub fn fit_axis(&self) -> FitAxis {
        match self.family {
            Family::Logarithmic => FitAxis::Beta,
            _ => FitAxis::LogBeta,
        }
    }

    /// `(β, |α|_min)` at 256 points of `[β0, 10 β0]`.
    pub fn polyline(&self) -> Vec<(f64, f64)> {
        let n = POLYLINE_SAMPLES;
        (0..n)
            .map(|i| {
                let b = self.beta0 + 9.0 * self.beta0 * i as f64 / (n - 1) as f64;
                (b, self.boundary(b))
            })
            .collect()
    }
}

/// Parameters for [`region_boundary`]; `eta = None` picks the choice made
/// for the published figures.
#[derive(Clone, Debug)]
pub struct RegionParams {
    pub gamma: f64,
    pub n: usize,
    pub eta: Option<f64>,
    pub mass: f64,
    pub beta0: f64,
}

pub fn region_boundary(family: Family, p: &RegionParams) -> Result<RegionSpec> {
    let n = p.n;
    if n < 2 {
        return Err(Error::invalid("N", "must be at least 2"));
    }
    if !(p.gamma > 0.0) && family != Family::Logarithmic {
        return Err(Error::invalid("gamma", "must be positive"));
    }
    if !(p.beta0 > 0.0) {
        return Err(Error::invalid("beta0", "must be positive"));
    }
    let nf = n as f64;
    let g = p.gamma;
    let inv = 1.0 / (2.0 * nf - 1.0);
    let mut r = RegionSpec {
        family,
        gamma: g,
        n,
        eta: 0.0,
        eps0: 0.0,
        mass: p.mass,
        beta0: p.beta0,
        beta_power: 0.0,
        log_power: 0.0,
        exp_rate: 0.0,
        constant: false,
        predicted_slope: 0.0,
        fixed_alpha: None,
    };
    let check_eta = |eta: f64, eta0: f64| -> Result<f64> {
        if eta > 0.0 && eta < eta0 {
            Ok(eta)
        } else {
            Err(Error::invalid("eta", format!("{eta} outside (0, {eta0})")))
        }
    };
    match family {
        Family::Logarithmic => {
            let eta0 = 0.5 + 1.0 / (2.0 * (4.0 * nf - 1.0));
            let eta = check_eta(p.eta.unwrap_or(1.0 / (2.0 * (4.0 * nf - 1.0))), eta0)?;
            r.eta = eta;
            r.eps0 = inv / 2.0 - 1.0 / (2.0 * (4.0 * nf - 1.0));
            r.beta_power = 2.0 / 3.0;
            r.exp_rate = 0.5 + 1.0 / (2.0 * (4.0 * nf - 1.0)) - eta;
            r.predicted_slope = -(2.0 * nf + 1.0) * (eta + 1.0 / (2.0 * (2.0 * nf + 1.0)) - 1.0 / (2.0 * (4.0 * nf - 1.0)));
        }
        Family::Polynomial if g >= 1.0 => {
            let eps0 = (-1.0 / 6.0 + inv + (1.0 - 1.0 / g) / (4.0 * nf + 2.0) + 1.0 / ((4.0 * nf - 2.0) * g)).max(0.0);
            let eta0 = (0.5 + 0.5 / g + (1.0 / g - 1.0) / (4.0 * nf + 2.0)).min(1.0 / 3.0 + inv + (0.5 + 1.0 / (4.0 * nf - 2.0)) / g);
            let eta = check_eta(p.eta.unwrap_or(1.0 / ((4.0 * nf - 2.0) * g) + inv - eps0), eta0)?;
            r.eta = eta;
            r.eps0 = eps0;
            r.beta_power = 2.0 / 3.0 + eps0 + eta - nf * inv / g - inv;
            r.predicted_slope = -(2.0 * nf + 1.0)
                * (1.0 / 6.0 + eps0 + eta - inv - (1.0 - 1.0 / g) / (4.0 * nf + 2.0) - 1.0 / ((4.0 * nf - 2.0) * g));
        }
        Family::Polynomial => {
            let eps0 = (-1.0 / 6.0 + inv + (1.0 - 1.0 / g) / (2.0 * (4.0 * nf - 1.0)) + 1.0 / ((4.0 * nf - 2.0) * g)).max(0.0);
            let eta0 = ((1.0 / g - 1.0) * (0.5 + 1.0 / (2.0 * (4.0 * nf - 1.0)))).min(-2.0 / 3.0 + nf * inv / g + inv);
            let eta = check_eta(p.eta.unwrap_or(eta0 / 2.0), eta0)?;
            r.eta = eta;
            r.eps0 = eps0;
            r.constant = true;
            r.predicted_slope = -(2.0 * nf + 1.0)
                * (1.0 / 6.0 + eps0 + eta - inv - (1.0 - 1.0 / g) / (4.0 * nf + 2.0) - 1.0 / ((4.0 * nf - 2.0) * g));
        }
        Family::Exponential => {
            let eps0 = (1.0 / (4.0 * nf + 2.0) + inv - 1.0 / 6.0).max(0.0);
            let eta0 = (0.5 - 1.0 / (4.0 * nf + 2.0)).min(1.0 / 3.0 + inv);
            let eta = check_eta(p.eta.unwrap_or(inv), eta0)?;
            r.eta = eta;
            r.eps0 = eps0;
            r.beta_power = 2.0 / 3.0 + eps0 + eta - inv;
            let lead = if g <= 1.0 { nf * inv } else { (2.0 * nf - 2.0) * inv };
            r.log_power = lead * (g - 1.0) / g;
            r.predicted_slope = -(2.0 * nf + 1.0) * (1.0 / 6.0 + eps0 + eta - 1.0 / (4.0 * nf + 2.0) - inv);
        }
    }
    Ok(r)
}

/// `(α − m − Re V11)(α + m − Re V22) > 0` at `x_β`.
fn alpha_admissible(spec: &PotentialSpec, alpha: f64, x_beta: f64) -> bool {
    let v = spec.values(x_beta);
    let m = spec.mass;
    (alpha - m - v[0].re) * (alpha + m - v[3].re) > 0.0
}

/// Complex-λ sweep along `α = α_min(β)` from `rule`, at order `n`.
pub fn complex_sweep(
    spec: &PotentialSpec,
    n: usize,
    betas: &[f64],
    rule: &RegionSpec,
    c: f64,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let Some(tm) = spec.turning else {
        return Err(Error::invalid("potential", format!("{} has no turning-point data", spec.name)));
    };
    if n < 2 || n > spec.regularity {
        return Err(Error::invalid("N", format!("must lie in [2, {}]", spec.regularity)));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid("c", "must lie in (0, 1)"));
    }
    let results: Vec<(f64, Result<SweepPoint>)> = run_parallel(|| {
        betas
            .par_iter()
            .map(|&beta| {
                let point = (|| {
                    let plan = CutoffPlan::complex(spec, beta)?;
                    let tp = plan.turning.expect("complex plan carries its turning point");
                    let alpha = rule.boundary(beta);
                    if !alpha_admissible(spec, alpha, tp.x_beta) {
                        return Err(Error::Assumption(format!("alpha = {alpha} violates the sign condition at beta = {beta}")));
                    }
                    let pm = assemble(spec, SpectralParameter::turning(spec, alpha, beta, tp.x_beta), n, &plan)?;
                    let mut p = measure(&pm, opts, beta)?;
                    let bound = kappa_bound(spec, beta, tp.x_beta, tp.delta_beta, c)? + sigma_bound(n, tm.nu, tp.x_beta, alpha, beta);
                    p.bound = Some(bound);
                    p.x_beta = Some(tp.x_beta);
                    p.v_prime = Some(spec.jet(Component::V11, tp.x_beta, 1)?.derivative(1).im);
                    Ok(p)
                })();
                (beta, point)
            })
            .collect()
    });
    let (points, skipped) = collect(results);
    let fit = fit_points(&points, rule.fit_axis());
    Ok(SweepResult { points, skipped, fit_axis: rule.fit_axis(), fit, predicted_slope: Some(rule.predicted_slope) })
}

/// 17 significant digits; empty for missing values.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    }
}

pub const SWEEP_HEADER: &str = "abscissa,ratio,kappa,remainder,oracle,bound";

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in &result.points {
        let row = [Some(p.abscissa), Some(p.ratio), Some(p.kappa), Some(p.remainder), p.oracle, p.bound];
        out.push_str(&row.iter().map(|v| format_value(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn region_csv(region: &RegionSpec) -> String {
    let mut out = String::from("beta,alpha\n");
    for (b, a) in region.polyline() {
        out.push_str(&format!("{},{}\n", format_value(Some(b)), format_value(Some(a))));
    }
    out
}

/// Writes `text` to `path`.
pub fn emit(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
