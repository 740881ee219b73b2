use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use fraclat::dynamics::{Propagator, SimConfig};
use fraclat::lattice::Dft;
use fraclat::manifold::{classify, isolating_bump};
use fraclat::oscillatory::{eval_j, lp_sup, Cutoff, PhaseSpec, QuadOptions};

fn fft(c: &mut Criterion) {
    let mut g = c.benchmark_group("fft2");
    for n in [64usize, 256, 1024] {
        let dft = Dft::new(n);
        let mut buf: Vec<Complex64> = (0..n * n).map(|k| Complex64::new((k % 7) as f64, (k % 3) as f64)).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                dft.fft2(&mut buf, false);
                dft.fft2(black_box(&mut buf), true);
            })
        });
    }
    g.finish();
}

fn strang_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("strang_step");
    for n in [128usize, 512] {
        let cfg = SimConfig::new(1.5, 3.0, 1.0, 16.0 / n as f64, n).unwrap();
        let prop = Propagator::new(&cfg).unwrap();
        let mut buf = cfg.initial_field().unwrap().into_values();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| prop.step(black_box(&mut buf)).unwrap()));
    }
    g.finish();
}

fn oscillatory(c: &mut Criterion) {
    let point = classify([0.6, 2.6], 1.5).unwrap();
    let cutoff = Cutoff::Localized(isolating_bump(&point).unwrap().bump);
    let phase = PhaseSpec::stationary_at(1.5, point.xi).unwrap();
    let opts = QuadOptions::default();
    let mut g = c.benchmark_group("eval_j");
    g.sample_size(10);
    for tau in [100.0, 400.0] {
        g.bench_with_input(BenchmarkId::from_parameter(tau), &tau, |b, &t| b.iter(|| eval_j(&phase, &cutoff, t, &opts).unwrap()));
    }
    g.finish();
    let mut g = c.benchmark_group("lp_sup");
    g.sample_size(10);
    g.bench_function("N=1,tau=100", |b| b.iter(|| lp_sup(1.5, 1.0, black_box(100.0)).unwrap()));
    g.finish();
}

criterion_group!(benches, fft, strang_step, oscillatory);
criterion_main!(benches);
