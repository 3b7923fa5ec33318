//! Sequential (one worker) against the default rayon pool for the three
//! data-parallel kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cyclone_sde::enkf::{default_spread, forecast_ensemble, init_ensemble, TrainingData};
use cyclone_sde::par;
use cyclone_sde::simulate::{simulate, SimConfig};
use cyclone_sde::sindy::{build_system, SystemOptions};
use cyclone_sde::synthetic::generate_synthetic_tracks;
use cyclone_sde::{builtin_paper_model, full_basis};

const POOLS: [(&str, usize); 2] = [("sequential", 1), ("pool", 0)];

fn ensemble(c: &mut Criterion) {
    let model = builtin_paper_model();
    let track = generate_synthetic_tracks(1, 1, 40).unwrap().remove(0);
    let cfg = SimConfig {
        n_members: 100,
        ..SimConfig::default()
    };
    let mut g = c.benchmark_group("simulate_100_members");
    for (name, w) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_workers(w, || simulate(&model, &track, 30.0, &cfg).unwrap()))
        });
    }
    g.finish();
}

fn enkf_forecast(c: &mut Criterion) {
    let model = builtin_paper_model();
    let tracks = generate_synthetic_tracks(2, 20, 30).unwrap();
    let data = TrainingData::new(&tracks, &model).unwrap();
    let batch: Vec<_> = data.windows(12).into_iter().take(16).collect();
    let ens = init_ensemble(model.coefficients(), &default_spread(model.coefficients()), 100, 0).unwrap();
    let mut g = c.benchmark_group("forecast_ensemble_100x16");
    for (name, w) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_workers(w, || forecast_ensemble(&ens, &model, &data, &batch, 12).unwrap()))
        });
    }
    g.finish();
}

fn regression_system(c: &mut Criterion) {
    let tracks = generate_synthetic_tracks(3, 30, 40).unwrap();
    let basis = full_basis(3);
    let opts = SystemOptions::new(20);
    let mut g = c.benchmark_group("build_system_30_storms");
    g.sample_size(20);
    for (name, w) in POOLS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_workers(w, || build_system(&tracks, &basis, &opts).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, ensemble, enkf_forecast, regression_system);
criterion_main!(benches);
