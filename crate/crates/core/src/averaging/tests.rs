use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::dynamics::{integrate, IntegratorConfig, Scheme};
use crate::sampling::{random_field, smooth_field};
use crate::spectral::{project, Lattice, Projector, SpectralField, TORUS_VOLUME};
use crate::truncation::{Forcing, Model, ModelParams};

fn params() -> ModelParams {
    ModelParams {
        n: 6,
        k: 2,
        ..Default::default()
    }
}

fn gl(lat: &Arc<Lattice>) -> Model {
    Model::new(params(), lat, Forcing::default()).unwrap()
}

fn record(model: &Model) -> Admissibility {
    Admissibility {
        n: model.n(),
        k: model.k(),
        epsilon: DEFAULT_EPSILON,
        norm: 0.0,
        samples: 1,
    }
}

#[test]
fn transform_is_identity_without_cbar() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v = random_field(&lat, &mut rng, 1.0);
    let zero = SpectralField::zeros(&lat);
    assert_eq!(transform_to_z(&m, Context::Single(&zero), &v).unwrap(), v);
}

#[test]
fn transform_leaves_outer_blocks() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = smooth_field(&lat, &mut rng, 1.0, 6.0);
    let t = AveragingTransform::new(&m, Context::Single(&u)).unwrap();
    assert!(t.c_ub.norm() > 0.0);
    let v = random_field(&lat, &mut rng, 1.0);
    let outer = v.sub(&project(&v, Projector::Intermediate { n: 6, k: 2 }).unwrap());
    assert_eq!(t.to_z(&outer), outer);
    let full = t.to_z(&v);
    assert_ne!(full, v);
}

#[test]
fn transform_roundtrip_and_distortion() {
    let lat = Lattice::new(3);
    let p = ModelParams {
        n: 12,
        k: 3,
        ..Default::default()
    };
    let m = Model::new(p, &lat, Forcing::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let u1 = smooth_field(&lat, &mut rng, 1.0, 8.0);
        let u2 = smooth_field(&lat, &mut rng, 1.0, 8.0);
        let v = random_field(&lat, &mut rng, 1.0);
        for ctx in [Context::Single(&u1), Context::Pair(&u1, &u2)] {
            let t = AveragingTransform::new(&m, ctx).unwrap();
            let z = t.to_z(&v);
            let back = t.from_z(&z);
            assert!(back.sub(&v).norm() <= 1e-13 * v.norm());
            let distortion = z.sub(&v).norm() * 9.0 / v.norm();
            assert!(distortion <= t.c_ub.norm() / (2.0 * m.omega().abs()) + 1e-10);
        }
    }
}

#[test]
fn singular_transform_is_rejected() {
    let err = AveragingTransform::from_coefficients(
        Complex64::new(0.0, 0.0),
        Complex64::new(8.0, 0.0),
        1.0,
        6,
        2,
    );
    assert!(matches!(err, Err(crate::Error::TransformSingular { .. })));
}

#[test]
fn cone_form_examples() {
    let lat = Lattice::new(2);
    let vol = TORUS_VOLUME;
    let low = SpectralField::basis(&lat, 1, 0, 0).unwrap();
    let high = SpectralField::basis(&lat, 2, 1, 1).unwrap();
    assert!((cone_v(&low, 6) + vol).abs() < 1e-12 * vol);
    assert!((cone_v(&high, 6) - vol).abs() < 1e-12 * vol);
    let mix = low.add(&high);
    assert_eq!(cone_v(&mix, 6), 0.0);
    assert_eq!(classify(&mix, 6, 1e-9), ConeRegion::Boundary);
    assert_eq!(classify(&low, 6, 1e-9), ConeRegion::Inside);
    assert_eq!(classify(&high, 6, 1e-9), ConeRegion::Outside);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xi = random_field(&lat, &mut rng, 1.0);
    let p = project(&xi, Projector::Lower(6)).unwrap();
    let alt = xi.norm_sqr() - 2.0 * p.norm_sqr();
    assert!((cone_v(&xi, 6) - alt).abs() <= 1e-12 * xi.norm_sqr());
    assert!(
        (cone_v(&xi.scale_re(3.0), 6) - 9.0 * cone_v(&xi, 6)).abs() <= 1e-12 * xi.norm_sqr() * 9.0
    );
}

/// Columns of `I l₁(u) I` from the model's own `l₁` on a lattice wide enough
/// for the annulus.
fn black_box_matrix(u: &SpectralField, n: u32, k: u32, radius: usize) -> DMatrix<f64> {
    let big = Lattice::new(radius);
    let model = Model::new(params().with_split(n, k), &big, Forcing::default()).unwrap();
    let u = u.resample(&big);
    let lin = model.linearize(&u);
    let idx = big.indices_in(crate::spectral::EigenRange::Annulus { n, k });
    let d = 2 * idx.len();
    let mut mat = DMatrix::zeros(d, d);
    for (j, &i) in idx.iter().enumerate() {
        for (part, c) in [(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.0, 1.0))] {
            let mut e = SpectralField::zeros(&big);
            e.coeffs_mut()[i] = c;
            let col = lin.l1(&e).to_real_coords(&idx);
            for (r, x) in col.into_iter().enumerate() {
                mat[(r, 2 * j + part)] = x;
            }
        }
    }
    mat
}

fn power_oracle(mat: &DMatrix<f64>, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: nalgebra::DVector<f64> =
        nalgebra::DVector::from_fn(mat.ncols(), |_, _| StandardNormal.sample(&mut rng));
    let mut est = 0.0;
    for _ in 0..100_000 {
        x /= x.norm();
        let y = mat * &x;
        let next = y.norm();
        x = mat.transpose() * y;
        if (next - est).abs() <= 1e-14 * next {
            return next;
        }
        est = next;
    }
    est
}

#[test]
fn annulus_norm_matches_power_iteration() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = smooth_field(&lat, &mut rng, 1.0, 5.0);
    let report = sa_operator_norm(&m, std::slice::from_ref(&u), 12, 4, DEFAULT_EPSILON).unwrap();
    assert_eq!(report.annulus_dim, annulus_modes(12, 4).len());
    assert!(report.norm > 0.0);
    let mat = black_box_matrix(&u, 12, 4, 3);
    assert_eq!(mat.nrows(), 2 * report.annulus_dim);
    let oracle = power_oracle(&mat, 11);
    assert!(
        (report.norm - oracle).abs() <= 1e-8 * oracle,
        "{} vs {oracle}",
        report.norm
    );
    let op = AnnulusOperator::new(&SampleSpectrum::new(&m, &u).unwrap(), 12, 4).unwrap();
    assert!(op.l1_bound() >= report.norm);
    let p = op.power_norm(3, 1e-12, 50_000);
    assert!((p - report.norm).abs() <= 1e-6 * report.norm);
}

#[test]
fn annulus_norm_vanishes_at_zero() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let zero = SpectralField::zeros(&lat);
    let r = sa_operator_norm(&m, &[zero], 9, 2, DEFAULT_EPSILON).unwrap();
    assert_eq!(r.norm, 0.0);
    assert!(r.admissible);
    assert!(matches!(
        sa_operator_norm(&m, &[], 8, 1, DEFAULT_EPSILON),
        Err(crate::Error::EmptyAnnulus { .. })
    ));
}

#[test]
fn n_search_reports_rows() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let samples: Vec<SpectralField> = (0..3)
        .map(|_| smooth_field(&lat, &mut rng, 1.0, 2.0))
        .collect();
    let res = n_search(
        &m,
        &samples,
        2,
        DEFAULT_EPSILON,
        3..=20,
        &NSearchOptions::default(),
    )
    .unwrap();
    assert_eq!(res.rows.len(), 18);
    for row in &res.rows {
        assert_eq!(
            row.admissible,
            row.norm <= DEFAULT_EPSILON && row.annulus_dim > 0
        );
    }
    let dense = n_search(
        &m,
        &samples,
        2,
        DEFAULT_EPSILON,
        3..=8,
        &NSearchOptions {
            method: NormMethod::Dense,
            ..Default::default()
        },
    )
    .unwrap();
    for (a, b) in dense.rows.iter().zip(&res.rows) {
        assert_eq!(a.admissible, b.admissible, "N = {}", a.n);
    }
}

#[test]
fn certificate_requires_admissibility() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let cfg = IntegratorConfig::new(0.01, Scheme::Etd2, 0.1);
    let t = integrate(&m, &SpectralField::zeros(&lat), &cfg).unwrap();
    let mut bad = record(&m);
    bad.norm = 1.0;
    let opts = CertificateOptions::new(f64::INFINITY);
    assert!(matches!(
        verify_cone_inequality(&m, &bad, DifferenceInput::Pair(&t, &t), &opts),
        Err(crate::Error::Inadmissible { .. })
    ));
    let cert =
        verify_cone_inequality(&m, &record(&m), DifferenceInput::Pair(&t, &t), &opts).unwrap();
    assert!(cert.verdict);
    assert!(cert.samples.iter().all(|s| s.v == 0.0));
}

#[test]
fn zero_override_certificate_matches_closed_form() {
    let lat = Lattice::new(2);
    let m = Model::new(params(), &lat, Forcing::zero()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u1 = smooth_field(&lat, &mut rng, 1.0, 1.0);
    let u2 = smooth_field(&lat, &mut rng, 1.0, 1.0);
    let cfg = IntegratorConfig::new(5e-4, Scheme::Etd2, 0.2);
    let t1 = integrate(&m, &u1, &cfg).unwrap();
    let t2 = integrate(&m, &u2, &cfg).unwrap();
    let cert = verify_cone_inequality(
        &m,
        &record(&m),
        DifferenceInput::Pair(&t1, &t2),
        &CertificateOptions::new(f64::INFINITY),
    )
    .unwrap();
    assert!(cert.verdict);
    for (j, s) in cert.samples.iter().enumerate() {
        let Some(d) = s.dv_dt else { continue };
        let v = t1.states[j].sub(&t2.states[j]);
        let exact: f64 = (0..lat.len())
            .map(|i| {
                let a = lat.a_eig(i) as f64;
                let sign = if lat.a_eig(i) > 6 { 1.0 } else { -1.0 };
                -2.0 * a * sign * v.coeffs()[i].norm_sqr()
            })
            .sum::<f64>()
            * TORUS_VOLUME;
        assert!(
            (d - exact).abs() <= 1e-6 * exact.abs().max(v.norm_sqr()),
            "{d} vs {exact}"
        );
        assert_eq!(s.alpha, 13.0);
    }
}

#[test]
fn gl_pair_certificate() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u1 = smooth_field(&lat, &mut rng, 1.0, 4.0);
    let u2 = u1.add(&smooth_field(&lat, &mut rng, 1.0, 0.5));
    let cfg = IntegratorConfig::new(0.01, Scheme::Etd2, 1.0);
    let t1 = integrate(&m, &u1, &cfg).unwrap();
    let t2 = integrate(&m, &u2, &cfg).unwrap();
    let opts = CertificateOptions::new(1e6);
    let cert =
        verify_cone_inequality(&m, &record(&m), DifferenceInput::Pair(&t1, &t2), &opts).unwrap();
    assert!(cert.verdict, "excess {}", cert.max_excess);
    assert_eq!(cert.exit_events, 0);
    assert!(cert.alpha_min > 0.0);
    let var = verify_cone_inequality(
        &m,
        &record(&m),
        DifferenceInput::Variation(&t1, &u2.sub(&u1)),
        &opts,
    )
    .unwrap();
    assert!(var.verdict, "excess {}", var.max_excess);
    let tight = CertificateOptions::new(1e-6);
    assert!(matches!(
        verify_cone_inequality(&m, &record(&m), DifferenceInput::Pair(&t1, &t2), &tight),
        Err(crate::Error::MonitorViolated(_))
    ));
}

#[test]
fn zero_override_single_mode_squeezing() {
    let lat = Lattice::new(2);
    let m = Model::new(params(), &lat, Forcing::zero()).unwrap();
    let cfg = IntegratorConfig::new(0.01, Scheme::Etd2, 0.5);
    let base = integrate(&m, &SpectralField::zeros(&lat), &cfg).unwrap();
    let e = SpectralField::basis(&lat, 2, 1, 1).unwrap();
    let other = integrate(&m, &e, &cfg).unwrap();
    let r = estimate_squeezing(&m, DifferenceInput::Pair(&other, &base), (0.0, 0.5)).unwrap();
    assert!((r.rate - 7.0).abs() <= 1e-6, "{}", r.rate);
    assert!(r.fit_residual <= 1e-10);
    let low = integrate(&m, &SpectralField::basis(&lat, 1, 0, 0).unwrap(), &cfg).unwrap();
    assert!(matches!(
        estimate_squeezing(&m, DifferenceInput::Pair(&low, &base), (0.0, 0.5)),
        Err(crate::Error::ConeExit { .. })
    ));
}

#[test]
fn l3_l4_examples() {
    let lat = Lattice::new(2);
    let m = gl(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = random_field(&lat, &mut rng, 1.0);
    let r = bound_l3_l4(&m, &SpectralField::zeros(&lat), &v);
    assert_eq!(r.l3, 0.0);
    let big = smooth_field(&lat, &mut rng, 1.0, 2.5 * m.params().r0);
    let r = bound_l3_l4(&m, &big, &v);
    assert_eq!(r.l4, 0.0);
}
