use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Projector, SpectralField};
use crate::truncation::Model;

/// Base point of the averaging transform: one trajectory state or a pair.
#[derive(Debug, Clone, Copy)]
pub enum Context<'a> {
    Single(&'a SpectralField),
    Pair(&'a SpectralField, &'a SpectralField),
}

impl Context<'_> {
    /// `(C_u, C_ū)` at the base point, interval averages for a pair.
    pub fn coefficients(&self, model: &Model) -> (Complex64, Complex64) {
        match *self {
            Context::Single(u) => model.coefficients_c(u),
            Context::Pair(u1, u2) => model.coefficients_c_interval(u1, u2),
        }
    }
}

/// Near-identity change of variables `v ↔ z` on the intermediate modes:
/// `z_n = v_n + i C_ū (v̄)_n / (2ω a_n)` for `N-K < a_n < N+K`.
#[derive(Debug, Clone, Copy)]
pub struct AveragingTransform {
    pub c_u: Complex64,
    pub c_ub: Complex64,
    pub omega: f64,
    pub n: u32,
    pub k: u32,
}

impl AveragingTransform {
    pub fn new(model: &Model, ctx: Context<'_>) -> Result<Self> {
        let (c_u, c_ub) = ctx.coefficients(model);
        Self::from_coefficients(c_u, c_ub, model.omega(), model.n(), model.k())
    }

    pub fn from_coefficients(
        c_u: Complex64,
        c_ub: Complex64,
        omega: f64,
        n: u32,
        k: u32,
    ) -> Result<Self> {
        let t = Self {
            c_u,
            c_ub,
            omega,
            n,
            k,
        };
        let factor = t.factor();
        if !(factor < 0.5) {
            return Err(Error::TransformSingular { factor });
        }
        Ok(t)
    }

    /// `|C_ū| / (2|ω|(N-K))`, the sup of the correction coefficient.
    pub fn factor(&self) -> f64 {
        self.c_ub.norm() / (2.0 * self.omega.abs() * (self.n - self.k) as f64)
    }

    fn coefficient(&self, a: u32) -> Complex64 {
        Complex64::new(0.0, 1.0) * self.c_ub / (2.0 * self.omega * a as f64)
    }

    fn apply(&self, v: &SpectralField, sign: f64, normalize: bool) -> SpectralField {
        if self.c_ub == Complex64::new(0.0, 0.0) {
            return v.clone();
        }
        let lat = v.lattice().clone();
        let band = Projector::Intermediate {
            n: self.n,
            k: self.k,
        };
        let vbar = v.conj_field();
        v.map_indexed(|i, x| {
            let a = lat.a_eig(i);
            if !band.contains(a) {
                return x;
            }
            let c = self.coefficient(a);
            let y = x + c * vbar.coeffs()[i] * sign;
            if normalize {
                y / (1.0 - c.norm_sqr())
            } else {
                y
            }
        })
    }

    pub fn to_z(&self, v: &SpectralField) -> SpectralField {
        self.apply(v, 1.0, false)
    }

    pub fn from_z(&self, z: &SpectralField) -> SpectralField {
        self.apply(z, -1.0, true)
    }
}

pub fn transform_to_z(model: &Model, ctx: Context<'_>, v: &SpectralField) -> Result<SpectralField> {
    Ok(AveragingTransform::new(model, ctx)?.to_z(v))
}

pub fn transform_from_z(
    model: &Model,
    ctx: Context<'_>,
    z: &SpectralField,
) -> Result<SpectralField> {
    Ok(AveragingTransform::new(model, ctx)?.from_z(z))
}
