use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use sobolev_core::radial::{ad_statistic, RadialLaw, RadialNull};
use sobolev_core::sampling::{sample_vmf, uniform_sphere};
use sobolev_core::specfun::{gegenbauer_eval, GegenbauerIndex};
use sobolev_core::{statistic, RngStream, WeightScheme};

fn gegenbauer(c: &mut Criterion) {
    let mut g = c.benchmark_group("gegenbauer");
    for k in [3u32, 20, 80] {
        let idx = GegenbauerIndex::on_sphere(k, 500).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(k), &idx, |b, &idx| {
            b.iter(|| gegenbauer_eval(idx, black_box(0.137)).unwrap())
        });
    }
    g.finish();
}

fn sobolev_statistic(c: &mut Criterion) {
    let mut rng = RngStream::new(1, 0).rng();
    let x = uniform_sphere(&mut rng, 500, 500).unwrap();
    let mut g = c.benchmark_group("statistic n=500 d=500");
    g.sample_size(10);
    for scheme in [WeightScheme::rayleigh(), WeightScheme::Finite(3), WeightScheme::DecayAdjusted(5)] {
        g.bench_with_input(BenchmarkId::from_parameter(&scheme), &scheme, |b, s| b.iter(|| statistic(&x, s).unwrap()));
    }
    g.finish();
}

fn vmf_sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("vmf 1000 draws d=100");
    let mut mu = vec![0.0; 101];
    mu[0] = 1.0;
    for kappa in [0.5, 10.0, 1000.0] {
        g.bench_with_input(BenchmarkId::from_parameter(kappa), &kappa, |b, &k| {
            let mut rng = RngStream::new(2, 0).rng();
            b.iter(|| sample_vmf(&mut rng, 1000, &mu, k).unwrap())
        });
    }
    g.finish();
}

fn anderson_darling(c: &mut Criterion) {
    let mut g = c.benchmark_group("anderson-darling n=1000");
    for law in [RadialLaw::Normal, RadialLaw::Student { nu: 5.0 }, RadialLaw::Stable { beta: 1.0, gamma0: 1.0 }] {
        let null = RadialNull::new(law, 100).unwrap();
        let radii = null.sample(&mut RngStream::new(3, 0).rng(), 1000).unwrap();
        g.bench_function(format!("{law:?}"), |b| b.iter(|| ad_statistic(&radii, &null).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, gegenbauer, sobolev_statistic, vmf_sampling, anderson_darling);
criterion_main!(benches);
