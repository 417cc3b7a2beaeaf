use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use imcgl::averaging::{
    n_search, verify_cone_inequality, Admissibility, CertificateOptions, DifferenceInput,
    NSearchOptions, DEFAULT_EPSILON,
};
use imcgl::dynamics::{absorbing_samples, integrate, IntegratorConfig, Scheme};
use imcgl::parallel::Execution;
use imcgl::sampling::smooth_field;
use imcgl::spectral::Lattice;
use imcgl::truncation::{Forcing, Model, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn model(radius: usize, n: u32, k: u32) -> Model {
    let p = ModelParams {
        n,
        k,
        ..Default::default()
    };
    Model::new(p, &Lattice::new(radius), Forcing::default()).unwrap()
}

fn bench_n_search(c: &mut Criterion) {
    let m = model(4, 12, 4);
    let cfg = IntegratorConfig::new(0.01, Scheme::Etd2, 0.0);
    let samples =
        absorbing_samples(&m, &mut ChaCha8Rng::seed_from_u64(1), 4, 5.0, 3.0, &cfg).unwrap();
    let mut g = c.benchmark_group("n_search");
    g.sample_size(10);
    for exec in MODES {
        let opts = NSearchOptions {
            exec,
            ..Default::default()
        };
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &opts,
            |b, opts| b.iter(|| n_search(&m, &samples, 8, DEFAULT_EPSILON, 9..=40, opts).unwrap()),
        );
    }
    g.finish();
}

fn bench_certificate(c: &mut Criterion) {
    let m = model(2, 6, 2);
    let lat = m.lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u1 = smooth_field(lat, &mut rng, 1.0, 4.0);
    let u2 = u1.add(&smooth_field(lat, &mut rng, 1.0, 0.5));
    let cfg = IntegratorConfig::new(0.01, Scheme::Etd2, 1.0);
    let t1 = integrate(&m, &u1, &cfg).unwrap();
    let t2 = integrate(&m, &u2, &cfg).unwrap();
    let record = Admissibility {
        n: 6,
        k: 2,
        epsilon: DEFAULT_EPSILON,
        norm: 0.0,
        samples: 1,
    };
    let mut g = c.benchmark_group("cone_certificate");
    g.sample_size(10);
    for exec in MODES {
        let opts = CertificateOptions {
            exec,
            ..CertificateOptions::new(1e6)
        };
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &opts,
            |b, opts| {
                b.iter(|| {
                    verify_cone_inequality(&m, &record, DifferenceInput::Pair(&t1, &t2), opts)
                        .unwrap()
                })
            },
        );
    }
    g.finish();
}

criterion_group!(benches, bench_n_search, bench_certificate);
criterion_main!(benches);
