use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::sampling::{random_field, smooth_field};
use crate::spectral::{Lattice, SpectralField};

const C0: Complex64 = Complex64::new(0.0, 0.0);

fn tight() -> ModelParams {
    ModelParams {
        f_support_radius: 1.5,
        r0: 2.5,
        r1: 3.0,
        rtilde: 12.0,
        c_star: 2.0,
        n: 8,
        k: 3,
        ..Default::default()
    }
}

fn model(p: ModelParams) -> Model {
    Model::new(p, &Lattice::new(3), Forcing::default()).unwrap()
}

/// Field whose rescaled coefficients `a^{s/2}u_n/C_*` have modulus up to `zmax`.
fn w_field(m: &Model, rng: &mut ChaCha8Rng, zmax: f64) -> SpectralField {
    let p = m.params();
    let lat = Arc::clone(m.lattice());
    let coeffs = (0..lat.len())
        .map(|i| {
            let r = rng.random_range(0.0..zmax);
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r * p.c_star * (lat.a_eig(i) as f64).powf(-0.5 * p.s), th)
        })
        .collect();
    SpectralField::from_coeffs(&lat, coeffs).unwrap()
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).norm() / b.norm().max(1e-300)
}

#[test]
fn w_is_identity_on_small_sobolev_ball() {
    let m = model(ModelParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let u = random_field(m.lattice(), &mut rng, 1.0);
        let cs = m.params().c_star;
        let u = u.scale_re(cs * cs / u.sobolev_norm(m.params().s));
        assert_eq!(m.truncate_w(&u), u);
    }
}

#[test]
fn w_kills_huge_coefficient() {
    let m = model(ModelParams::default());
    let u = SpectralField::basis(m.lattice(), 1, 1, 0)
        .unwrap()
        .scale_re(1e3);
    assert_eq!(m.truncate_w(&u).coeff(1, 1, 0), Some(C0));
}

#[test]
fn w_stays_under_uniform_bound() {
    let m = model(ModelParams::default());
    let s0 = m.params().s0;
    let bound = m.w_norm_bound(s0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..50 {
        let u = random_field(m.lattice(), &mut rng, 10f64.powi(i % 7 - 3));
        assert!(m.truncate_w(&u).sobolev_norm(s0) <= bound);
    }
}

#[test]
fn w_prime_matches_differences_and_bound() {
    let m = model(ModelParams::default());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let lmax = m.phi_prime_bound();
    for _ in 0..20 {
        let u = w_field(&m, &mut rng, 2.2);
        let v = w_field(&m, &mut rng, 1.0);
        let h = 1e-6;
        let fd = m
            .truncate_w(&u.add(&v.scale_re(h)))
            .sub(&m.truncate_w(&u))
            .scale_re(1.0 / h);
        let an = m.w_prime_apply(&u, &v);
        assert!(rel(&fd, &an) <= 1e-4, "{}", rel(&fd, &an));
        for kappa in [0.0, m.params().s0] {
            assert!(an.sobolev_norm(kappa) <= lmax * v.sobolev_norm(kappa) * (1.0 + 1e-12));
        }
    }
    let small = w_field(&m, &mut rng, 0.9);
    let v = random_field(m.lattice(), &mut rng, 1.0);
    assert_eq!(m.w_prime_apply(&small, &v), v);
}

#[test]
fn t_plateaus() {
    let p = tight();
    let m = model(p);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let u = random_field(m.lattice(), &mut rng, 1.0);
    let y_norm = |u: &SpectralField| {
        crate::spectral::project(u, crate::spectral::Projector::Lower(p.n))
            .unwrap()
            .sobolev_norm(1.0)
    };
    let low = u.scale_re(0.99 * p.r1 / y_norm(&u));
    assert!(m.map_t(&low).norm() == 0.0);
    let high = u.scale_re(1.01 * p.rtilde / y_norm(&u));
    let y = crate::spectral::project(&high, crate::spectral::Projector::Lower(p.n))
        .unwrap()
        .apply_a_power(0.5);
    assert!(m.map_t(&high).sub(&y.scale_re(-0.5)).norm() <= 1e-13 * y.norm());
    let v = random_field(m.lattice(), &mut rng, 1.0);
    let pv = crate::spectral::project(&v, crate::spectral::Projector::Lower(p.n)).unwrap();
    let form = m.t_prime_apply(&high, &pv).inner(&pv).re;
    let expected = -0.5 * pv.sobolev_norm_sqr(0.5);
    assert!((form - expected).abs() <= 1e-12 * expected.abs());
}

#[test]
fn t_prime_matches_differences() {
    let p = tight();
    let m = model(p);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for i in 0..20 {
        let u = smooth_field(m.lattice(), &mut rng, 0.5, 1.0);
        let z = p.r1 * p.r1 + (p.rtilde * p.rtilde - p.r1 * p.r1) * (0.1 + 0.8 * i as f64 / 19.0);
        let u = u.scale_re(z.sqrt() / m.map_t_input_norm(&u));
        let v = random_field(m.lattice(), &mut rng, 1.0);
        let h = 1e-5;
        let fd = m
            .map_t(&u.add(&v.scale_re(h)))
            .sub(&m.map_t(&u.sub(&v.scale_re(h))))
            .scale_re(0.5 / h);
        let an = m.t_prime_apply(&u, &v);
        assert!(rel(&fd, &an) <= 1e-4, "{}", rel(&fd, &an));
    }
}

#[test]
fn spatial_average_examples() {
    let p = ModelParams::default();
    let m = model(p);
    let lat = m.lattice();
    let (au, aub) = m.spatial_average(&SpectralField::zeros(lat));
    assert_eq!((au, aub), (Complex64::new(1.0, p.beta), C0));
    let c = Complex64::new(0.4, -0.7);
    let u = SpectralField::basis(lat, 0, 0, 0).unwrap().scale(c);
    let (au, aub) = m.spatial_average(&u);
    let g = Complex64::new(1.0, p.gamma);
    assert!((au - (Complex64::new(1.0, p.beta) - g * 2.0 * c.norm_sqr())).norm() < 1e-13);
    assert!((aub - (-g * c * c)).norm() < 1e-13);
    let e = SpectralField::basis(lat, 1, -2, 0).unwrap().scale_re(1e-3);
    assert!(m.spatial_average(&e).1.norm() < 1e-15);
}

#[test]
fn coefficients_follow_theta() {
    let p = tight();
    let m = model(p);
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let u = smooth_field(m.lattice(), &mut rng, 1.0, 0.9 * p.r0);
    let (cu, cub) = m.coefficients_c(&u);
    let (au, aub) = m.spatial_average(&m.truncate_w(&u));
    assert_eq!((cu, cub), (au, aub));
    let far = u.scale_re(2.0 * p.r0 / u.norm());
    assert_eq!(m.coefficients_c(&far), (C0, C0));
    let (cu, cub) = m.coefficients_c(&SpectralField::zeros(m.lattice()));
    assert_eq!((cu, cub), (Complex64::new(1.0, p.beta), C0));
    let sup = derivative_bound(&m);
    for _ in 0..20 {
        let scale = rng.random_range(0.0..0.2);
        let u = random_field(m.lattice(), &mut rng, scale);
        let (cu, cub) = m.coefficients_c(&u);
        assert!(cu.norm() + cub.norm() <= sup + 1e-12);
    }
}

#[test]
fn zero_override_gives_zero() {
    let lat = Lattice::new(3);
    let m = Model::new(tight(), &lat, Forcing::zero()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let u = random_field(&lat, &mut rng, 5.0);
    assert_eq!(m.nonlinearity_f(&u), SpectralField::zeros(&lat));
    assert_eq!(m.f_prime_apply(&u, &u), SpectralField::zeros(&lat));
}

#[test]
fn absorbing_region_reduces_to_f() {
    let p = ModelParams::default();
    let m = model(p);
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let u = smooth_field(m.lattice(), &mut rng, 2.0, 1.0);
    assert_eq!(m.truncate_w(&u), u);
    let f = m.nonlinearity_f(&u);
    let direct = m.pointwise_f(&u);
    assert!(f.max_abs_diff(&direct) <= 1e-13);
}

#[test]
fn linear_override_is_lambda_u_inside_ball() {
    let lat = Lattice::new(3);
    let m = Model::new(tight(), &lat, Forcing::linear(0.7)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let u = smooth_field(&lat, &mut rng, 1.0, 1.0);
    assert!(m.nonlinearity_f(&u).max_abs_diff(&u.scale_re(0.7)) <= 1e-13);
}

fn check_f_prime(m: &Model, rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let u = smooth_field(m.lattice(), rng, 0.6, scale);
    let v = smooth_field(m.lattice(), rng, 0.6, 1.0);
    let h = 1e-5;
    let fd = m
        .nonlinearity_f(&u.add(&v.scale_re(h)))
        .sub(&m.nonlinearity_f(&u.sub(&v.scale_re(h))))
        .scale_re(0.5 / h);
    let parts = m.f_prime_parts(&u, &v);
    let total = m.f_prime_apply(&u, &v);
    assert!(parts.total().max_abs_diff(&total) == 0.0);
    rel(&fd, &total)
}

#[test]
fn f_prime_matches_differences() {
    let m = model(tight());
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for i in 0..12 {
        let e = check_f_prime(&m, &mut rng, 0.5 + i as f64);
        assert!(e <= 1e-6, "{e}");
    }
    let md = model(tight()).with_dealias(true);
    let e = check_f_prime(&md, &mut rng, 2.0);
    assert!(e <= 1e-6, "{e}");
}

#[test]
fn f_prime_at_zero() {
    let p = ModelParams::default();
    let m = model(p);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let v = random_field(m.lattice(), &mut rng, 1e-4);
    let parts = m.f_prime_parts(&SpectralField::zeros(m.lattice()), &v);
    assert!(parts.l1.norm() <= 1e-14 * v.norm());
    assert!(parts.l2.max_abs_diff(&v.scale(Complex64::new(1.0, p.beta))) <= 1e-18);
    assert!(parts.l3.norm() == 0.0);
}

#[test]
fn interval_derivative() {
    let m = model(tight());
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let u1 = smooth_field(m.lattice(), &mut rng, 0.6, 2.0);
    let u2 = smooth_field(m.lattice(), &mut rng, 0.6, 2.0);
    let v = random_field(m.lattice(), &mut rng, 1.0);
    let same = m.f_prime_interval(&u1, &u1, &v);
    assert!(same.max_abs_diff(&m.f_prime_apply(&u1, &v)) <= 1e-12 * v.norm());
    let fine = m
        .with_split(8, 3)
        .unwrap()
        .with_quadrature(Quadrature::composite(8, 4));
    let diff = fine.f_prime_interval(&u1, &u2, &u1.sub(&u2));
    let exact = m.nonlinearity_f(&u1).sub(&m.nonlinearity_f(&u2));
    assert!(rel(&diff, &exact) <= 1e-6, "{}", rel(&diff, &exact));
    let a = m.f_prime_interval(&u1, &u2, &v);
    let b = m.f_prime_interval(&u2, &u1, &v);
    assert!(rel(&a, &b) <= 1e-12);
}

#[test]
fn t_audit_passes_across_transition() {
    let p = tight();
    let m = model(p);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for i in 0..8 {
        let u = random_field(m.lattice(), &mut rng, 1.0);
        let target = p.r1 * 0.9 + (p.rtilde * 1.1 - p.r1 * 0.9) * i as f64 / 7.0;
        let u = u.scale_re(target / m.map_t_input_norm(&u));
        let lam = t_audit_max_eigenvalue(&m, &u);
        assert!(lam <= T_AUDIT_TOL, "{lam}");
    }
}
