use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::lattice::{EigenRange, Lattice};
use crate::error::{Error, Result};

/// `(2π)^3`, the Parseval constant of the torus `[-π, π]^3`.
pub const TORUS_VOLUME: f64 = 8.0 * PI * PI * PI;

/// Complex Fourier coefficients `u_n` of a (genuinely complex-valued) function on
/// the torus, stored densely over the cube `|k|,|l|,|m| <= G`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    lattice: Arc<Lattice>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.lattice.radius() == other.lattice.radius() && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(lattice: &Arc<Lattice>) -> Self {
        Self {
            lattice: Arc::clone(lattice),
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn from_coeffs(lattice: &Arc<Lattice>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::Resolution(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            lattice: Arc::clone(lattice),
            coeffs,
        })
    }

    /// Unit-coefficient basis function `e_n = e^{i n·x}`.
    pub fn basis(lattice: &Arc<Lattice>, k: i32, l: i32, m: i32) -> Result<Self> {
        let idx = lattice.index(k, l, m).ok_or_else(|| {
            Error::GridTooSmall(format!(
                "mode ({k},{l},{m}) outside radius {}",
                lattice.radius()
            ))
        })?;
        let mut f = Self::zeros(lattice);
        f.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn radius(&self) -> usize {
        self.lattice.radius()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: i32, l: i32, m: i32) -> Option<Complex64> {
        self.lattice.index(k, l, m).map(|i| self.coeffs[i])
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.radius() != other.radius() {
            return Err(Error::LatticeMismatch {
                left: self.radius(),
                right: other.radius(),
            });
        }
        Ok(())
    }

    /// Coefficients of the pointwise conjugate function: `(ū)_n = conj(u_{-n})`.
    pub fn conj_field(&self) -> Self {
        let n = self.coeffs.len();
        let coeffs = (0..n).map(|i| self.coeffs[n - 1 - i].conj()).collect();
        Self {
            lattice: Arc::clone(&self.lattice),
            coeffs,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            lattice: Arc::clone(&self.lattice),
            coeffs: self.coeffs.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Mode-wise map with access to the storage index.
    pub fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            lattice: Arc::clone(&self.lattice),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, &z)| f(i, z))
                .collect(),
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &Self) {
        debug_assert_eq!(self.radius(), other.radius());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        debug_assert_eq!(self.radius(), other.radius());
        Self {
            lattice: Arc::clone(&self.lattice),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `(u, v) = ∫ u v̄ dx = (2π)^3 Σ u_n conj(v_n)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.radius(), other.radius());
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * TORUS_VOLUME
    }

    pub fn norm_sqr(&self) -> f64 {
        TORUS_VOLUME * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// H-norm (`s = 0`).
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `‖u‖_{H^s} = ((2π)^3 Σ (1+|n|^2)^s |u_n|^2)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm_sqr(s).sqrt()
    }

    pub fn sobolev_norm_sqr(&self, s: f64) -> f64 {
        let lat = &self.lattice;
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (lat.a_eig(i) as f64).powf(s) * c.norm_sqr())
            .sum();
        TORUS_VOLUME * sum
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `A^p u`, applied mode-wise with `A = 1 - Δ`.
    pub fn apply_a_power(&self, p: f64) -> Self {
        let lat = Arc::clone(&self.lattice);
        self.map_indexed(|i, z| z * (lat.a_eig(i) as f64).powf(p))
    }

    /// Keeps only the coefficients whose eigenvalue lies in the window.
    pub fn restrict(&self, range: EigenRange) -> Self {
        let lat = Arc::clone(&self.lattice);
        self.map_indexed(|i, z| {
            if range.contains(lat.a_eig(i)) {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Embeds the field into a lattice of another radius, dropping modes that do
    /// not fit.
    pub fn resample(&self, lattice: &Arc<Lattice>) -> Self {
        let mut out = Self::zeros(lattice);
        for (i, m) in self.lattice.modes().iter().enumerate() {
            if let Some(j) = lattice.index(m.k, m.l, m.m) {
                out.coeffs[j] = self.coeffs[i];
            }
        }
        out
    }

    /// Real coordinates `(re_0, im_0, re_1, im_1, ...)` over the given mode indices.
    pub fn to_real_coords(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * indices.len());
        for &i in indices {
            out.push(self.coeffs[i].re);
            out.push(self.coeffs[i].im);
        }
        out
    }

    pub fn from_real_coords(lattice: &Arc<Lattice>, indices: &[usize], x: &[f64]) -> Self {
        debug_assert_eq!(x.len(), 2 * indices.len());
        let mut out = Self::zeros(lattice);
        for (j, &i) in indices.iter().enumerate() {
            out.coeffs[i] = Complex64::new(x[2 * j], x[2 * j + 1]);
        }
        out
    }
}

/// The spectral projectors on the split `u = u_+ + u_I + u_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projector {
    /// `P_N`: `a_eig <= N`.
    Lower(u32),
    /// `Q_N`: `a_eig > N`.
    Upper(u32),
    /// `I_{N,K}`: `N-K < a_eig < N+K`.
    Intermediate { n: u32, k: u32 },
    /// `P_{N,K} = P_N (1 - I_{N,K})`: `a_eig <= N-K`.
    LowerOuter { n: u32, k: u32 },
    /// `Q_{N,K} = Q_N (1 - I_{N,K})`: `a_eig >= N+K`.
    UpperOuter { n: u32, k: u32 },
}

impl Projector {
    pub fn contains(&self, a: u32) -> bool {
        let a = a as i64;
        match *self {
            Projector::Lower(n) => a <= n as i64,
            Projector::Upper(n) => a > n as i64,
            Projector::Intermediate { n, k } => a > n as i64 - k as i64 && a < (n + k) as i64,
            Projector::LowerOuter { n, k } => a <= n as i64 - k as i64,
            Projector::UpperOuter { n, k } => a >= (n + k) as i64,
        }
    }

    fn required_bound(&self) -> u32 {
        match *self {
            Projector::Lower(n) | Projector::Upper(n) => n,
            Projector::Intermediate { n, k }
            | Projector::LowerOuter { n, k }
            | Projector::UpperOuter { n, k } => n + k - 1,
        }
    }
}

/// Applies a spectral projector; errors when the eigenvalue window it needs is
/// not fully resolved by the cube.
pub fn project(u: &SpectralField, which: Projector) -> Result<SpectralField> {
    let bound = super::lattice::complete_eigen_bound(u.radius());
    if which.required_bound() > bound {
        return Err(Error::GridTooSmall(format!(
            "{which:?} needs a_eig up to {}, radius {} resolves {bound}",
            which.required_bound(),
            u.radius()
        )));
    }
    Ok(project_unchecked(u, which))
}

pub(crate) fn project_unchecked(u: &SpectralField, which: Projector) -> SpectralField {
    let lat = Arc::clone(u.lattice());
    u.map_indexed(|i, z| {
        if which.contains(lat.a_eig(i)) {
            z
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Lower / intermediate / higher mode decomposition.
#[derive(Debug, Clone)]
pub struct ModeSplit {
    pub plus: SpectralField,
    pub intermediate: SpectralField,
    pub minus: SpectralField,
}

impl ModeSplit {
    pub fn new(u: &SpectralField, n: u32, k: u32) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::invalid("K", "requires 0 < K < N"));
        }
        Ok(Self {
            plus: project(u, Projector::LowerOuter { n, k })?,
            intermediate: project(u, Projector::Intermediate { n, k })?,
            minus: project(u, Projector::UpperOuter { n, k })?,
        })
    }

    pub fn recombine(&self) -> SpectralField {
        self.plus.add(&self.intermediate).add(&self.minus)
    }
}

/// `e^{-(1+iω) a t}`, the diagonal symbol of the linear semigroup on a mode.
#[inline]
pub fn propagator_factor(a_eig: u32, t: f64, omega: f64) -> Complex64 {
    let a = a_eig as f64;
    Complex64::new(-a * t, -omega * a * t).exp()
}

/// `e^{-(1+iω)At} u`, exact and coefficient-wise.
pub fn apply_linear_propagator(u: &SpectralField, t: f64, omega: f64) -> SpectralField {
    let lat = Arc::clone(u.lattice());
    u.map_indexed(|i, z| z * propagator_factor(lat.a_eig(i), t, omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_mode_norm() {
        let lat = Lattice::new(2);
        let e0 = SpectralField::basis(&lat, 0, 0, 0).unwrap();
        for s in [0.0, 1.0, 2.5] {
            assert!((e0.sobolev_norm(s) - TORUS_VOLUME.sqrt()).abs() < 1e-12);
        }
        let e1 = SpectralField::basis(&lat, 1, 0, 0).unwrap();
        assert!((e1.sobolev_norm(2.0) - 2.0 * TORUS_VOLUME.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn propagator_on_zero_mode() {
        let lat = Lattice::new(1);
        let e0 = SpectralField::basis(&lat, 0, 0, 0).unwrap();
        let p = apply_linear_propagator(&e0, 1.0, 1.0);
        let expected = Complex64::new(-1.0, -1.0).exp();
        assert!((p.coeff(0, 0, 0).unwrap() - expected).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(&lat, &mut rng, 1.0);
        assert_eq!(apply_linear_propagator(&u, 0.0, 3.0), u);
    }

    #[test]
    fn propagator_contracts_by_e_minus_t() {
        let lat = Lattice::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_field(&lat, &mut rng, 1.0);
        let t = 0.3;
        let p = apply_linear_propagator(&u, t, 2.0);
        assert!(p.norm() < (-t).exp() * u.norm());
        let c = SpectralField::basis(&lat, 0, 0, 0)
            .unwrap()
            .scale(Complex64::new(0.3, -0.2));
        let pc = apply_linear_propagator(&c, t, 2.0);
        assert!((pc.norm() - (-t).exp() * c.norm()).abs() < 1e-14);
    }

    #[test]
    fn projector_algebra() {
        let lat = Lattice::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(&lat, &mut rng, 1.0);
        let (n, k) = (8, 3);
        let p = project(&u, Projector::Lower(n)).unwrap();
        let q = project(&u, Projector::Upper(n)).unwrap();
        assert_eq!(project(&p, Projector::Lower(n)).unwrap(), p);
        assert!(project(&p, Projector::Upper(n)).unwrap().norm() == 0.0);
        assert!(p.add(&q).max_abs_diff(&u) <= 1e-15);
        let split = ModeSplit::new(&u, n, k).unwrap();
        assert!(split.recombine().max_abs_diff(&u) <= 1e-15);
        assert!(project(&u, Projector::Lower(17)).is_err());
    }

    #[test]
    fn conj_field_is_involution() {
        let lat = Lattice::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_field(&lat, &mut rng, 1.0);
        assert_eq!(u.conj_field().conj_field(), u);
    }
}
