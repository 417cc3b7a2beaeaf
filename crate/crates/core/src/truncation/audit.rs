use nalgebra::{DMatrix, SymmetricEigen};

use super::model::Model;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::spectral::{EigenRange, SpectralField, TORUS_VOLUME};

/// Largest eigenvalue of the real quadratic form
/// `v ↦ Re(T'(u)v, v) - ½((N^{1/2} - A^{1/2})v, v)` on `P_N H`.
///
/// The audit passes when this is `<= 1e-10`.
pub fn t_audit_max_eigenvalue(model: &Model, u: &SpectralField) -> f64 {
    let lat = model.lattice();
    let n = model.n();
    let idx = lat.indices_in(EigenRange::AtMost(n));
    let dim = 2 * idx.len();
    let sqrt_n = (n as f64).sqrt();
    let mut cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        let v = SpectralField::from_real_coords(lat, &idx, &e);
        let tv = model.t_prime_apply(u, &v);
        let mut col = tv.to_real_coords(&idx);
        let a = lat.a_eig(idx[j / 2]) as f64;
        col[j] -= 0.5 * (sqrt_n - a.sqrt());
        cols.push(col);
    }
    let b = DMatrix::from_fn(dim, dim, |i, j| cols[j][i]);
    let sym = (&b + b.transpose()) * (0.5 * TORUS_VOLUME);
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Threshold used by the `T` audit.
pub const T_AUDIT_TOL: f64 = 1e-10;

/// Widens the transition of `varphi` (raising `R̃` by half each round) until the
/// `T` audit passes on every sample.
pub fn calibrate_varphi(
    params: ModelParams,
    build: impl Fn(ModelParams) -> Result<Model>,
    samples: &[SpectralField],
    max_rounds: usize,
) -> Result<ModelParams> {
    let mut p = params;
    let mut worst = f64::INFINITY;
    for _ in 0..max_rounds {
        let model = build(p)?;
        worst = samples
            .iter()
            .map(|u| t_audit_max_eigenvalue(&model, u))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst <= T_AUDIT_TOL {
            return Ok(p);
        }
        p.rtilde = p.r1 + 1.5 * (p.rtilde - p.r1);
    }
    Err(Error::NoConvergence {
        what: "varphi calibration",
        iterations: max_rounds,
        residual: worst,
    })
}

/// Largest `|f_u| + |f_ū|` over the plane (radial scan; both depend on `|u|` only).
pub fn derivative_bound(model: &Model) -> f64 {
    let nl = model.nonlinearity();
    let rmax = match nl.kind {
        super::params::NonlinearityKind::GinzburgLandau => model.params().f_support_radius,
        _ => 1.0,
    };
    (0..=20000)
        .map(|i| {
            let r = rmax * i as f64 / 20000.0;
            let d = nl.first(num_complex::Complex64::new(r, 0.0));
            d.fu.norm() + d.fub.norm()
        })
        .fold(0.0, f64::max)
}
