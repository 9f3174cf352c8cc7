use diracwkb::analysis::{emit, rate_sweep, sweep_csv, FitAxis, SweepOptions, SweepResult, SWEEP_HEADER};
use diracwkb::oracle::fd_residual;
use diracwkb::pseudomode::{analytic_residual, assemble};
use diracwkb::{catalog, CutoffPlan, Params, PotentialSpec, SpectralParameter};
use proptest::prelude::*;

fn spec(name: &str, m: f64) -> PotentialSpec {
    catalog(name, &[("m".to_string(), m)].into_iter().collect()).unwrap()
}

fn ratio(s: &PotentialSpec, lam: f64, n: usize) -> f64 {
    let plan = CutoffPlan::real(s, lam).unwrap();
    analytic_residual(&assemble(s, SpectralParameter::real(s, lam), n, &plan).unwrap()).ratio
}

#[test]
fn oracle_agrees_on_cutoff_entries() {
    for (name, lam) in [("log-electric", 200.0), ("exp-split", 800.0), ("superexponential", 100.0)] {
        let s = catalog(name, &Params::new()).unwrap();
        let plan = CutoffPlan::real(&s, lam).unwrap();
        let pm = assemble(&s, SpectralParameter::real(&s, lam), 1, &plan).unwrap();
        let a = analytic_residual(&pm).ratio;
        let h = diracwkb::analysis::default_oracle_step(&pm);
        let fd = fd_residual(&s, pm.param.lambda, &pm, h).unwrap();
        assert!((fd.ratio / a - 1.0).abs() < 1e-3, "{name}: {} vs {a}", fd.ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn mirror_at_negative_lambda(
        name in prop::sample::select(vec!["bounded-electric", "bounded-electric-asym", "log-electric", "exp-split"]),
        m in 0.0f64..2.0,
        lam in 80.0f64..600.0,
        n in 0usize..3,
    ) {
        let a = ratio(&spec(name, m), lam, n);
        let b = ratio(&spec(&format!("{name}-mirror"), m), -lam, n);
        prop_assert!((a / b - 1.0).abs() < 1e-6, "{} {}", a, b);
    }
}

fn scratch(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("diracwkb-{}-{name}", std::process::id()))
}

#[test]
fn empty_sweep_is_header_only() {
    let empty = SweepResult { points: vec![], skipped: vec![], fit_axis: FitAxis::LogLambda, fit: None, predicted_slope: None };
    let path = scratch("empty.csv");
    emit(&path, &sweep_csv(&empty)).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{SWEEP_HEADER}\n"));
    std::fs::remove_file(path).unwrap();
}

#[test]
fn six_point_sweep_rows() {
    let s = catalog("bounded-electric", &Params::new()).unwrap();
    let lams = [800.0, 100.0, 400.0, 1600.0, 200.0, 3200.0];
    let opts = SweepOptions { oracle: false, ..Default::default() };
    let r = rate_sweep(&s, 1, &lams, &opts).unwrap();
    let path = scratch("six.csv");
    emit(&path, &sweep_csv(&r)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(path).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    let abscissa: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(abscissa.windows(2).all(|w| w[0] < w[1]));
    for r in &rows {
        assert_eq!(r.len(), 6);
        assert!(r[1].parse::<f64>().unwrap() > 0.0);
        // 17 significant digits
        assert_eq!(r[1].split('e').next().unwrap().len(), 18);
        assert!(r[4].is_empty() && r[5].is_empty());
    }
}
