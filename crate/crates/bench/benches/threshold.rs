use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use impulse_core::{
    default_coupling_bounds, force_psd, g_star, momentum_threshold, optimize_coupling,
    DetectionChain, MechanicalOscillator, QuadratureSpec, Readout, SensorConfig, SqueezingPolicy,
};

fn config(squeezing: SqueezingPolicy, eta: f64) -> SensorConfig {
    let osc = MechanicalOscillator::table1();
    SensorConfig::new(
        osc,
        Readout::slab(g_star(&osc).unwrap()).unwrap(),
        squeezing,
        DetectionChain::new(eta).unwrap(),
    )
    .unwrap()
}

fn cases() -> [(&'static str, SensorConfig); 3] {
    [
        ("coherent", config(SqueezingPolicy::NoSqueezing, 1.0)),
        ("fixed_r1", config(SqueezingPolicy::fixed(1.0, 0.3).unwrap(), 0.9)),
        ("optimal_r1", config(SqueezingPolicy::optimal(1.0).unwrap(), 0.9)),
    ]
}

fn bench_psd(c: &mut Criterion) {
    let mut group = c.benchmark_group("force_psd");
    for (name, cfg) in cases() {
        let nu = 1.01 * cfg.oscillator().omega_m();
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| force_psd(cfg, black_box(nu)).unwrap())
        });
    }
    group.finish();
}

fn bench_threshold(c: &mut Criterion) {
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("momentum_threshold");
    for (name, cfg) in cases() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| momentum_threshold(black_box(cfg), &quad).unwrap())
        });
    }
    group.finish();
}

fn bench_optimize(c: &mut Criterion) {
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("optimize_coupling");
    group.sample_size(10);
    for (name, cfg) in cases() {
        let bounds = default_coupling_bounds(&cfg).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| optimize_coupling(black_box(cfg), bounds, &quad).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_psd, bench_threshold, bench_optimize);
criterion_main!(benches);
