//! Parallel vs sequential sample-point loops.
//!
//! `cargo bench -p kontact` runs both arms; build with
//! `--no-default-features` to compile rayon out entirely.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kontact::bjorken::{check_sigma_identity, BjorkenFlow};
use kontact::hddw::solve_at_samples;
use kontact::hydro::{hydro_kcontact_form, hydro_system};
use kontact::kcontact::verify_kcontact;
use kontact::Config;

fn arms() -> [(&'static str, Config); 2] {
    [("parallel", Config::default()), ("sequential", Config::default().sequential())]
}

fn hddw_solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("hddw_hydro4_32_points");
    g.sample_size(10);
    for (name, cfg) in arms() {
        let sys = hydro_system(4, &cfg).unwrap();
        let points = sys.chart().sample_domain().sample(32, cfg.seed, cfg.max_retries).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(solve_at_samples(&sys, &points, &cfg).unwrap()))
        });
    }
    g.finish();
}

fn rank_conditions(c: &mut Criterion) {
    let s = hydro_kcontact_form(4).unwrap();
    let mut g = c.benchmark_group("verify_kcontact_hydro4_100_points");
    g.sample_size(10);
    for (name, cfg) in arms() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| black_box(verify_kcontact(&s, 100, &cfg).unwrap())));
    }
    g.finish();
}

fn zero_tests(c: &mut Criterion) {
    let flow = BjorkenFlow::with_default_profile();
    let mut g = c.benchmark_group("sigma_identity_zero_test");
    for (name, base) in arms() {
        let cfg = Config { samples: 256, ..base };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(check_sigma_identity(&flow, &cfg).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, hddw_solves, rank_conditions, zero_tests);
criterion_main!(benches);
