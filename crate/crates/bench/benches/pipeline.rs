use criterion::{black_box, criterion_group, criterion_main, Criterion};
use diracwkb::oracle::fd_residual;
use diracwkb::pseudomode::{analytic_residual, assemble};
use diracwkb::{catalog, Component, CutoffPlan, Jet, Params, SpectralParameter};

fn jets(c: &mut Criterion) {
    let mut g = c.benchmark_group("jets");
    for name in ["bounded-electric", "exp-split", "polynomial-complex"] {
        let spec = catalog(name, &Params::new()).unwrap();
        g.bench_function(format!("{name}/V11 order 6"), |b| {
            b.iter(|| spec.jet(Component::V11, black_box(1.7), 6).unwrap())
        });
    }
    g.bench_function("exp(x^1.5) order 8", |b| {
        b.iter(|| Jet::variable(black_box(2.3), 8).powf(1.5).unwrap().exp())
    });
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let spec = catalog("bounded-electric", &Params::new()).unwrap();
    let lam = 400.0;
    let plan = CutoffPlan::real(&spec, lam).unwrap();
    let param = SpectralParameter::real(&spec, lam);
    let pm = assemble(&spec, param, 2, &plan).unwrap();

    let mut g = c.benchmark_group("bounded-electric lambda=400 n=2");
    g.sample_size(10);
    g.bench_function("cutoff plan", |b| b.iter(|| CutoffPlan::real(&spec, black_box(lam)).unwrap()));
    g.bench_function("assemble", |b| b.iter(|| assemble(&spec, param, black_box(2), &plan).unwrap()));
    g.bench_function("analytic residual", |b| b.iter(|| analytic_residual(black_box(&pm))));
    g.bench_function("fd oracle h=2^-10", |b| {
        b.iter(|| fd_residual(&spec, pm.param.lambda, &pm, black_box(2f64.powi(-10))).unwrap())
    });
    g.finish();
}

criterion_group!(benches, jets, pipeline);
criterion_main!(benches);
