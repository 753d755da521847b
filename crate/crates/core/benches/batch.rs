use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use geese_core::catalog::default_catalog;
use geese_core::exec::ExecMode;
use geese_core::perf_models::{Regime, Role};
use geese_core::planner::{build_model, oracle_enumerate_with, usecase};
use geese_core::simulator::{run_monte_carlo, CollabConfig};

const MODES: [ExecMode; 2] = [ExecMode::Sequential, ExecMode::Parallel];

fn monte_carlo(c: &mut Criterion) {
    let cat = default_catalog();
    let cfg = CollabConfig::for_regime(&cat.calibration.links, Regime::Depth2, Role::Master, 3, 100, 50.0, 1);
    let mut g = c.benchmark_group("monte_carlo_100x100");
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| run_monte_carlo(&cfg, 100, mode).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let cat = default_catalog();
    let model = build_model(&usecase::location_a_request(), &cat).unwrap();
    let mut g = c.benchmark_group("oracle_location_a");
    g.sample_size(10);
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| oracle_enumerate_with(&model, mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, oracle);
criterion_main!(benches);
