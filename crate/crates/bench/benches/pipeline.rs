use criterion::{black_box, criterion_group, criterion_main, Criterion};
use monodromy_bench::{generic_op, hyperbolic_op};
use monodromy_core::elmonodromy::{eigenfunction, el_for_class, Family};
use monodromy_core::fnspace::{xi_integral, TWO_PI};
use monodromy_core::hill::floquet;
use monodromy_core::pdeoracle::{propagate, Grid, WaveState};
use monodromy_core::stabilizer::{kirillov_family, periodic_stabilizer};
use monodromy_core::svaction::{classify_orbit, vector_invariant, SchrodingerOp};
use monodromy_core::{KirillovCase, Settings, XiMode};

fn hill(c: &mut Criterion) {
    let s = Settings::default();
    let h = generic_op().hill().unwrap();
    c.bench_function("floquet", |b| b.iter(|| floquet(black_box(&h), &s).unwrap()));
    c.bench_function("periodic_stabilizer", |b| b.iter(|| periodic_stabilizer(black_box(&h), &s).unwrap()));
    let xi = kirillov_family(KirillovCase::II { n: 1, alpha: 0.5, a: 1.0 }).unwrap().xi;
    c.bench_function("principal_value", |b| {
        b.iter(|| xi_integral(black_box(&xi), XiMode::PrincipalValue, s.zero_options(), s.quad_rtol).unwrap())
    });
}

fn orbit(c: &mut Criterion) {
    let s = Settings::default();
    let d = generic_op();
    c.bench_function("classify_generic", |b| b.iter(|| classify_orbit(black_box(&d), &s).unwrap()));
    c.bench_function("vector_invariant", |b| b.iter(|| vector_invariant(black_box(&d), &s).unwrap()));
    let ii = hyperbolic_op(0.4);
    c.bench_function("classify_hyperbolic", |b| b.iter(|| classify_orbit(black_box(&ii), &s).unwrap()));
}

fn pde(c: &mut Criterion) {
    let s = Settings::default();
    let op = SchrodingerOp::model(1.0, 0.0);
    let cls = classify_orbit(&op, &s).unwrap();
    let el = el_for_class(&op, &cls, &s).unwrap();
    let ef = eigenfunction(&cls, &el, Family::Hermite { n: 2 }).unwrap();
    let grid = Grid::new(16.0, 512, TWO_PI / 1024.0).unwrap();
    let psi0 = WaveState::from_fn(0.0, &grid.space, |x| ef.eval(0.0, x)).unwrap();
    let mut g = c.benchmark_group("pde");
    g.sample_size(10);
    g.bench_function("one_period_512x1024", |b| b.iter(|| propagate(&op, black_box(&psi0), TWO_PI, &grid).unwrap()));
    g.finish();
}

criterion_group!(benches, hill, orbit, pde);
criterion_main!(benches);
