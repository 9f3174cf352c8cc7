//! Maps a resolved [`RunConfig`] onto the library operations.

use diracwkb::analysis::{
    complex_sweep, default_oracle_step, rate_sweep, region_boundary, region_csv, sweep_csv, Family, RegionParams,
    RegionSpec, SweepOptions, SweepResult, DEFAULT_C, ORACLE_AGREEMENT,
};
use diracwkb::normality::{classify, Verdict, DEFAULT_TOL};
use diracwkb::oracle::fd_residual;
use diracwkb::potential::{linspace, validate_assumption_i, validate_assumption_iii, ValidationOptions, ValidationReport};
use diracwkb::pseudomode::{analytic_residual, assemble};
use diracwkb::{catalog, CutoffPlan, Error, ErrorKind, Params, PotentialSpec, Result, SpectralParameter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::range::parse_range;

pub const DEFAULT_GRID_NODES: usize = 401;
pub const DEFAULT_BETA0: f64 = 10.0;

/// Artifacts of a finished run. `failure` is set when the run completed but
/// its result breaks a check (oracle disagreement, failed validation).
#[derive(Debug)]
pub struct Outcome {
    /// CSV for sweeps and regions, JSON otherwise.
    pub artifact: String,
    pub report: Value,
    pub summary: Option<String>,
    pub failure: Option<Error>,
}

pub fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Assumption => 4,
    }
}

pub fn error_report(e: &Error) -> Value {
    let kind = match e.kind() {
        ErrorKind::Config => "config",
        ErrorKind::Numerical => "numerical",
        ErrorKind::Assumption => "assumption",
    };
    json!({ "error": { "kind": kind, "exit_code": exit_code(e.kind()), "message": e.to_string() } })
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::invalid(key, "required for this command"))
}

fn positive(v: Option<f64>, key: &str) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::invalid(key, "must be positive")),
        _ => Ok(v),
    }
}

fn potential(c: &RunConfig) -> Result<PotentialSpec> {
    let params: Params = c.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
    catalog(&need(&c.potential, "potential")?, &params)
}

fn grid(c: &RunConfig, default: (f64, f64)) -> Result<Vec<f64>> {
    let lo = c.grid_lo.unwrap_or(default.0);
    let hi = c.grid_hi.unwrap_or(default.1);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("grid", format!("need grid_lo < grid_hi, got [{lo}, {hi}]")));
    }
    Ok(linspace(lo, hi, c.grid_nodes.unwrap_or(DEFAULT_GRID_NODES)))
}

/// Assumption I for line entries, III for turning-point entries.
fn validation(spec: &PotentialSpec, grid: &[f64]) -> Result<ValidationReport> {
    if spec.turning.is_some() {
        validate_assumption_iii(spec, grid, ValidationOptions::default())
    } else {
        validate_assumption_i(spec, grid, ValidationOptions::default())
    }
}

fn failed_conditions(rep: &ValidationReport) -> String {
    rep.conditions.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn require_valid(spec: &PotentialSpec) -> Result<ValidationReport> {
    let rep = validation(spec, &linspace(spec.grid.0, spec.grid.1, DEFAULT_GRID_NODES))?;
    if !rep.passed {
        return Err(Error::Assumption(format!("{} fails: {}", spec.name, failed_conditions(&rep))));
    }
    Ok(rep)
}

fn sweep_options(c: &RunConfig) -> Result<SweepOptions> {
    let eps1 = c.eps1.unwrap_or(0.5);
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::invalid("eps1", "must lie in (0, 1)"));
    }
    Ok(SweepOptions { oracle: c.oracle.unwrap_or(true), oracle_step: positive(c.oracle_step, "oracle_step")?, eps1 })
}

fn family_of(c: &RunConfig, spec: Option<&PotentialSpec>) -> Result<Family> {
    if let Some(f) = &c.family {
        return f.parse();
    }
    match spec.map(|s| s.name.as_str()) {
        Some("logarithmic") => Ok(Family::Logarithmic),
        Some("polynomial-complex") => Ok(Family::Polynomial),
        Some("exponential") => Ok(Family::Exponential),
        _ => Err(Error::invalid("family", "required for this command")),
    }
}

fn region_rule(c: &RunConfig, spec: Option<&PotentialSpec>, n: usize, beta0: f64) -> Result<RegionSpec> {
    let family = family_of(c, spec)?;
    let gamma = c
        .gamma
        .or_else(|| spec.and_then(|s| s.params.get("gamma").copied()))
        .unwrap_or(1.0);
    let mass = c.mass.or(spec.map(|s| s.mass)).unwrap_or(1.0);
    let rule = region_boundary(family, &RegionParams { gamma, n, eta: c.eta, mass, beta0 })?;
    Ok(match c.alpha {
        Some(a) => rule.with_constant_alpha(a),
        None => rule,
    })
}

fn oracle_status(res: &SweepResult) -> Option<Error> {
    if res.points.is_empty() {
        return Some(Error::Numerical("no sweep point could be constructed".into()));
    }
    let bad: Vec<String> = res
        .points
        .iter()
        .filter(|p| p.oracle_agrees == Some(false))
        .map(|p| p.abscissa.to_string())
        .collect();
    (!bad.is_empty()).then(|| {
        Error::Numerical(format!("analytic and oracle ratios differ by more than {ORACLE_AGREEMENT:e} at {}", bad.join(", ")))
    })
}

fn slope_summary(res: &SweepResult) -> String {
    match (&res.fit, res.predicted_slope) {
        (Some(f), Some(p)) => format!("fitted slope {:.4} (predicted {p:.4}), R^2 {:.6}", f.slope, f.r_squared),
        (Some(f), None) => format!("fitted slope {:.4}", f.slope),
        _ => "too few points for a fit".into(),
    }
}

fn sweep_outcome(config: Value, res: SweepResult, validation: ValidationReport, extra: Value) -> Outcome {
    let failure = oracle_status(&res);
    Outcome {
        artifact: sweep_csv(&res),
        summary: Some(slope_summary(&res)),
        report: json!({
            "config": config,
            "validation": validation,
            "sweep": res,
            "oracle_ok": res.oracle_ok(),
            "bound_margin": res.bound_margin(),
            "extra": extra,
        }),
        failure,
    }
}

/// Executes one command. Errors before any result exists are returned as
/// `Err`; checks that fail on a finished result land in `Outcome::failure`.
pub fn run(c: &RunConfig) -> Result<Outcome> {
    let echo = serde_json::to_value(c).expect("config serializes");
    match need(&c.command, "command")? {
        Command::Validate => {
            let spec = potential(c)?;
            let rep = validation(&spec, &grid(c, spec.grid)?)?;
            let failure = (!rep.passed).then(|| Error::Assumption(failed_conditions(&rep)));
            let report = json!({ "config": echo, "validation": rep });
            Ok(Outcome { artifact: pretty(&report), report, summary: None, failure })
        }
        Command::Rates => {
            let spec = potential(c)?;
            let n = need(&c.n, "n")?;
            let lambdas = parse_range(&need(&c.lambdas, "lambdas")?, "lambdas")?;
            let opts = sweep_options(c)?;
            let valid = require_valid(&spec)?;
            let res = rate_sweep(&spec, n, &lambdas, &opts)?;
            Ok(sweep_outcome(echo, res, valid, Value::Null))
        }
        Command::ComplexRates => {
            let spec = potential(c)?;
            let n = need(&c.big_n, "N")?;
            let betas = parse_range(&need(&c.betas, "betas")?, "betas")?;
            if betas.iter().any(|&b| !(b > 0.0)) {
                return Err(Error::invalid("betas", "must be positive"));
            }
            let opts = sweep_options(c)?;
            let beta0 = c.beta0.unwrap_or(betas.iter().copied().fold(f64::INFINITY, f64::min));
            let rule = region_rule(c, Some(&spec), n, beta0)?;
            let cc = c.c.unwrap_or(DEFAULT_C);
            let valid = require_valid(&spec)?;
            let res = complex_sweep(&spec, n, &betas, &rule, cc, &opts)?;
            Ok(sweep_outcome(echo, res, valid, json!({ "region": rule, "c": cc })))
        }
        Command::Region => {
            let n = need(&c.big_n, "N")?;
            let beta0 = positive(c.beta0, "beta0")?.unwrap_or(DEFAULT_BETA0);
            let rule = region_rule(c, None, n, beta0)?;
            let report = json!({ "config": echo, "region": rule });
            Ok(Outcome { artifact: region_csv(&rule), report, summary: None, failure: None })
        }
        Command::Normality => normality(c, echo),
        Command::OracleCheck => oracle_check(c, echo),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn normality(c: &RunConfig, echo: Value) -> Result<Outcome> {
    let tol = positive(c.tol, "tol")?.unwrap_or(DEFAULT_TOL);
    let mut report = json!({ "config": echo });
    let mut failure = None;
    if let Some(name) = &c.potential {
        let spec = potential(c)?;
        let g = grid(c, spec.grid)?;
        let v = classify(&spec, &g, tol)?;
        if !v.consistent {
            failure = Some(Error::Numerical(format!("{name}: verdict and commutator disagree")));
        }
        report["normality"] = serde_json::to_value(&v).expect("verdict serializes");
    } else if c.draws.is_none() {
        return Err(Error::invalid("potential", "required unless draws is given"));
    }
    if let Some(draws) = c.draws {
        let g = grid(c, (-5.0, 5.0))?;
        let suite = random_suite(draws, c.seed.unwrap_or(0), &g, tol)?;
        if suite.disagreements > 0 && failure.is_none() {
            failure = Some(Error::Numerical(format!("{} of {} random draws disagree", suite.disagreements, 2 * draws)));
        }
        report["random_suite"] = json!({
            "draws": draws,
            "seed": c.seed.unwrap_or(0),
            "disagreements": suite.disagreements,
            "max_normal_commutator_ratio": suite.max_normal_ratio,
            "min_near_miss_commutator_ratio": suite.min_near_miss_ratio,
        });
    }
    Ok(Outcome { artifact: pretty(&report), report, summary: None, failure })
}

struct SuiteResult {
    disagreements: usize,
    /// Commutator sup over its threshold, worst case on each side.
    max_normal_ratio: f64,
    min_near_miss_ratio: f64,
}

fn constant_spec(m: f64, a: [(f64, f64); 4]) -> Result<PotentialSpec> {
    let mut p = Params::new();
    p.insert("m".into(), m);
    for (k, (re, im)) in ["11", "12", "21", "22"].iter().zip(a) {
        p.insert(format!("a{k}r"), re);
        p.insert(format!("a{k}i"), im);
    }
    catalog("constant", &p)
}

/// `draws` constant potentials from the two normal blocks, each followed by
/// a near miss breaking one condition by 1e-2 of the potential's scale.
fn random_suite(draws: usize, seed: u64, grid: &[f64], tol: f64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteResult { disagreements: 0, max_normal_ratio: 0.0, min_near_miss_ratio: f64::INFINITY };
    for _ in 0..draws {
        let second: bool = rng.gen();
        let m = rng.gen_range(0.1..3.0);
        let u: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-4.0..4.0));
        let a = if second {
            let c = u[4].signum() * (0.5 + u[4].abs());
            [(u[0], u[1]), (u[3], c), (u[3], c), (u[0] + 2.0 * m, u[1])]
        } else {
            [(u[0], u[1]), (u[3], u[4]), (u[3], -u[4]), (u[2], u[1])]
        };
        let v = classify(&constant_spec(m, a)?, grid, tol)?;
        if v.verdict != Verdict::Normal || !v.consistent {
            out.disagreements += 1;
        }
        out.max_normal_ratio = out.max_normal_ratio.max(v.commutator_sup / v.commutator_tol);

        let d = if rng.gen::<bool>() { 1e-2 } else { -1e-2 } * v.scale;
        let mut bad = a;
        match rng.gen_range(0..4) {
            0 => bad[0].1 += d,
            1 => bad[1].0 += d,
            2 => bad[2].1 += d,
            // Re V22 is free in the first block
            _ if second => bad[3].0 += d,
            _ => bad[1].1 += d,
        }
        let w = classify(&constant_spec(m, bad)?, grid, tol)?;
        if w.verdict != Verdict::NonNormal || !w.consistent {
            out.disagreements += 1;
        }
        out.min_near_miss_ratio = out.min_near_miss_ratio.min(w.commutator_sup / w.commutator_tol);
    }
    Ok(out)
}

fn oracle_check(c: &RunConfig, echo: Value) -> Result<Outcome> {
    let spec = potential(c)?;
    let (pm, order) = match (c.lambda, c.beta) {
        (Some(lam), None) => {
            let n = need(&c.n, "n")?;
            let plan = CutoffPlan::real(&spec, lam)?;
            (assemble(&spec, SpectralParameter::real(&spec, lam), n, &plan)?, n)
        }
        (None, Some(beta)) => {
            let n = need(&c.big_n, "N")?;
            let rule = region_rule(c, Some(&spec), n, c.beta0.unwrap_or(beta))?;
            let plan = CutoffPlan::complex(&spec, beta)?;
            let tp = plan.turning.ok_or_else(|| Error::invalid("beta", "no turning point for this potential"))?;
            let param = SpectralParameter::turning(&spec, rule.boundary(beta), beta, tp.x_beta);
            (assemble(&spec, param, n, &plan)?, n)
        }
        _ => return Err(Error::invalid("lambda", "give exactly one of lambda and beta")),
    };
    let analytic = analytic_residual(&pm);
    let h = positive(c.oracle_step, "oracle_step")?.unwrap_or_else(|| default_oracle_step(&pm));
    let fd = fd_residual(&spec, pm.param.lambda, &pm, h)?;
    let gap = (fd.ratio / analytic.ratio - 1.0).abs();
    let agrees = gap <= ORACLE_AGREEMENT;
    let report = json!({
        "config": echo,
        "order": order,
        "lambda": [pm.param.lambda.re, pm.param.lambda.im],
        "analytic": analytic,
        "finite_difference": fd,
        "relative_gap": gap,
        "tolerance": ORACLE_AGREEMENT,
        "agrees": agrees,
    });
    let failure = (!agrees).then(|| Error::Numerical(format!("relative gap {gap:e} exceeds {ORACLE_AGREEMENT:e}")));
    Ok(Outcome { artifact: pretty(&report), report, summary: None, failure })
}
