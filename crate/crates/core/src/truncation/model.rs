use std::sync::Arc;

use num_complex::Complex64;

use super::nonlinearity::Nonlinearity;
use super::params::{BumpSpec, Forcing, ModelParams};
use super::quadrature::Quadrature;
use crate::error::Result;
use crate::spectral::{EigenRange, GridTransform, Lattice, SpectralField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The modified nonlinearity `F` on a fixed lattice, together with its cut-offs.
///
/// All field arguments must live on the model lattice; mismatched fields panic.
#[derive(Debug)]
pub struct Model {
    params: ModelParams,
    bumps: BumpSpec,
    forcing: Forcing,
    nl: Nonlinearity,
    lattice: Arc<Lattice>,
    grid: GridTransform,
    dealias: bool,
    quad: Quadrature,
}

/// Each bracketed group of `F'(u)v`.
#[derive(Debug, Clone)]
pub struct FPrimeParts {
    pub l1: SpectralField,
    pub l2: SpectralField,
    pub l3: SpectralField,
    pub l4: SpectralField,
    pub t_prime: SpectralField,
}

impl FPrimeParts {
    pub fn total(&self) -> SpectralField {
        let mut out = self.l1.add(&self.l2);
        out.axpy(Complex64::new(1.0, 0.0), &self.l3);
        out.axpy(Complex64::new(1.0, 0.0), &self.l4);
        out.axpy(Complex64::new(-1.0, 0.0), &self.t_prime);
        out
    }
}

/// Per-mode data of the real Jacobian of `W` at `u`.
#[derive(Debug, Clone, Copy)]
struct WJac {
    rho: f64,
    rho1: f64,
    z: Complex64,
}

impl Model {
    pub fn new(params: ModelParams, lattice: &Arc<Lattice>, forcing: Forcing) -> Result<Self> {
        params.validate()?;
        lattice.require_complete(EigenRange::Annulus {
            n: params.n,
            k: params.k,
        })?;
        let nl = Nonlinearity::new(&params, forcing.f);
        Ok(Self {
            params,
            bumps: params.bumps(),
            forcing,
            nl,
            lattice: Arc::clone(lattice),
            grid: GridTransform::padded(lattice),
            dealias: false,
            quad: Quadrature::default(),
        })
    }

    /// Applies the 2/3 truncation to the pointwise products.
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn with_quadrature(mut self, quad: Quadrature) -> Self {
        self.quad = quad;
        self
    }

    /// Same model with a different mode split.
    pub fn with_split(&self, n: u32, k: u32) -> Result<Self> {
        let m = Model::new(self.params.with_split(n, k), &self.lattice, self.forcing)?;
        Ok(m.with_dealias(self.dealias)
            .with_quadrature(self.quad.clone()))
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn bumps(&self) -> &BumpSpec {
        &self.bumps
    }

    pub fn forcing(&self) -> Forcing {
        self.forcing
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn grid(&self) -> &GridTransform {
        &self.grid
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn omega(&self) -> f64 {
        self.params.omega
    }

    pub fn n(&self) -> u32 {
        self.params.n
    }

    pub fn k(&self) -> u32 {
        self.params.k
    }

    fn check(&self, u: &SpectralField) {
        assert_eq!(
            u.radius(),
            self.lattice.radius(),
            "field lattice does not match the model lattice"
        );
    }

    fn w_jac(&self, a: u32, c: Complex64) -> WJac {
        let cs = self.params.c_star;
        let z = c * ((a as f64).powf(0.5 * self.params.s) / cs);
        let (rho, rho1, _) = self.bumps.phi.eval(z.norm_sqr());
        WJac { rho, rho1, z }
    }

    /// `W(u)_n = C_* a^{-s/2} φ(a^{s/2} u_n / C_*)`.
    pub fn truncate_w(&self, u: &SpectralField) -> SpectralField {
        self.check(u);
        let cs = self.params.c_star;
        let lat = &self.lattice;
        u.map_indexed(|i, c| {
            let j = self.w_jac(lat.a_eig(i), c);
            if j.rho == 1.0 {
                c
            } else if j.rho == 0.0 {
                ZERO
            } else {
                j.z * j.rho * (cs * (lat.a_eig(i) as f64).powf(-0.5 * self.params.s))
            }
        })
    }

    /// `W'(u)v`, mode-wise real Jacobian of `φ`.
    pub fn w_prime_apply(&self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        self.check(u);
        self.check(v);
        let jac: Vec<WJac> = (0..u.coeffs().len())
            .map(|i| self.w_jac(self.lattice.a_eig(i), u.coeffs()[i]))
            .collect();
        apply_w_jac(&jac, v)
    }

    /// `sup_z ‖dφ(z)‖` over the real Jacobian, radial and angular directions.
    pub fn phi_prime_bound(&self) -> f64 {
        (0..=4000)
            .map(|i| {
                let r2 = 4.0 * i as f64 / 4000.0;
                let (rho, rho1, _) = self.bumps.phi.eval(r2);
                (rho + 2.0 * rho1 * r2).abs().max(rho.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Upper bound of `‖W(u)‖_{H^κ}` over all `u`, maximized mode by mode.
    pub fn w_norm_bound(&self, kappa: f64) -> f64 {
        let max_phi = (0..=4000)
            .map(|i| {
                let r = 2.0 * i as f64 / 4000.0;
                r * self.bumps.phi.value(r * r)
            })
            .fold(0.0, f64::max);
        let cs = self.params.c_star;
        let s = self.params.s;
        let sum: f64 = (0..self.lattice.len())
            .map(|i| (self.lattice.a_eig(i) as f64).powf(kappa - s))
            .sum();
        (crate::spectral::TORUS_VOLUME * sum).sqrt() * cs * max_phi
    }

    /// `θ(z)` and `θ'(z)` at `z = ‖u‖²_H`.
    pub fn theta(&self, z: f64) -> (f64, f64) {
        let (t, t1, _) = self.bumps.theta.eval(z);
        (t, t1)
    }

    fn sqrt_a_low(&self, u: &SpectralField) -> SpectralField {
        let n = self.params.n;
        let lat = &self.lattice;
        u.map_indexed(|i, c| {
            let a = lat.a_eig(i);
            if a <= n {
                c * (a as f64).sqrt()
            } else {
                ZERO
            }
        })
    }

    /// `‖A^{1/2}P_N u‖_H`, the argument scale of the `T` cut-off.
    pub fn map_t_input_norm(&self, u: &SpectralField) -> f64 {
        self.sqrt_a_low(u).norm()
    }

    /// `T(u) = varphi(‖A^{1/2}P_N u‖²) A^{1/2} P_N u`.
    pub fn map_t(&self, u: &SpectralField) -> SpectralField {
        self.check(u);
        let y = self.sqrt_a_low(u);
        let (phi, _) = self.bumps.varphi(y.norm_sqr());
        y.scale_re(phi)
    }

    /// `T'(u)v`.
    pub fn t_prime_apply(&self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        self.check(u);
        self.check(v);
        let y = self.sqrt_a_low(u);
        let (phi, phi1) = self.bumps.varphi(y.norm_sqr());
        t_prime(&y, phi, phi1, &self.sqrt_a_low(v))
    }

    /// `(⟨f_u(w)⟩, ⟨f_ū(w)⟩)` by grid quadrature.
    pub fn spatial_average(&self, w: &SpectralField) -> (Complex64, Complex64) {
        self.check(w);
        let g = self.grid.to_grid_unchecked(w);
        let (mut su, mut sub) = (ZERO, ZERO);
        for &x in &g {
            let d = self.nl.first(x);
            su += d.fu;
            sub += d.fub;
        }
        let m = g.len() as f64;
        (su / m, sub / m)
    }

    /// `(C_u(u), C_ū(u)) = θ(‖u‖²) (a_u, a_ū)(W(u))`.
    pub fn coefficients_c(&self, u: &SpectralField) -> (Complex64, Complex64) {
        let (th, _) = self.theta(u.norm_sqr());
        if th == 0.0 {
            return (ZERO, ZERO);
        }
        let (au, aub) = self.spatial_average(&self.truncate_w(u));
        (au * th, aub * th)
    }

    /// Interval coefficients `∫_0^1 C(s u1 + (1-s) u2) ds`.
    pub fn coefficients_c_interval(
        &self,
        u1: &SpectralField,
        u2: &SpectralField,
    ) -> (Complex64, Complex64) {
        if u1 == u2 {
            return self.coefficients_c(u1);
        }
        let (mut cu, mut cub) = (ZERO, ZERO);
        for (s, w) in self.quad.nodes.iter().zip(&self.quad.weights) {
            let (a, b) = self.coefficients_c(&convex(u1, u2, *s));
            cu += a * *w;
            cub += b * *w;
        }
        (cu, cub)
    }

    /// Pointwise `f(u, ū)` through the grid, with the same product handling as `F`.
    pub fn pointwise_f(&self, u: &SpectralField) -> SpectralField {
        self.check(u);
        let g: Vec<Complex64> = self
            .grid
            .to_grid_unchecked(u)
            .into_iter()
            .map(|x| self.nl.value(x))
            .collect();
        let mut out = self.grid.from_grid_owned(g);
        if self.dealias {
            self.grid.dealias(&mut out);
        }
        out
    }

    /// `F(u) = f(W) - a(W)W + θ(‖u‖²) a(W) u - T(u)`.
    pub fn nonlinearity_f(&self, u: &SpectralField) -> SpectralField {
        self.check(u);
        if self.forcing.is_zero() {
            return SpectralField::zeros(&self.lattice);
        }
        let w = self.truncate_w(u);
        let g = self.grid.to_grid_unchecked(&w);
        let (mut su, mut sub) = (ZERO, ZERO);
        let fg: Vec<Complex64> = g
            .iter()
            .map(|&x| {
                let d = self.nl.first(x);
                su += d.fu;
                sub += d.fub;
                d.f
            })
            .collect();
        let m = g.len() as f64;
        let (au, aub) = (su / m, sub / m);
        let mut out = self.grid.from_grid_owned(fg);
        if self.dealias {
            self.grid.dealias(&mut out);
        }
        let wb = w.conj_field();
        out.axpy(-au, &w);
        out.axpy(-aub, &wb);
        let (th, _) = self.theta(u.norm_sqr());
        if th != 0.0 {
            out.axpy(au * th, u);
            out.axpy(aub * th, &u.conj_field());
        }
        if self.forcing.t_enabled {
            out.axpy(Complex64::new(-1.0, 0.0), &self.map_t(u));
        }
        out
    }

    /// Right-hand side `-(1+iω)Au + F(u)`.
    pub fn time_derivative(&self, u: &SpectralField) -> SpectralField {
        let lin = Complex64::new(-1.0, -self.params.omega);
        let lat = &self.lattice;
        let mut out = u.map_indexed(|i, c| c * lin * lat.a_eig(i) as f64);
        out.axpy(Complex64::new(1.0, 0.0), &self.nonlinearity_f(u));
        out
    }

    /// Caches everything `F'(u)` needs so repeated applications are cheap.
    pub fn linearize(&self, u: &SpectralField) -> Linearization<'_> {
        Linearization::new(self, u)
    }

    pub fn f_prime_apply(&self, u: &SpectralField, v: &SpectralField) -> SpectralField {
        self.linearize(u).apply(v)
    }

    pub fn f_prime_parts(&self, u: &SpectralField, v: &SpectralField) -> FPrimeParts {
        self.linearize(u).parts(v)
    }

    pub fn linearize_interval(
        &self,
        u1: &SpectralField,
        u2: &SpectralField,
    ) -> IntervalLinearization<'_> {
        if u1 == u2 {
            return IntervalLinearization {
                terms: vec![(1.0, self.linearize(u1))],
            };
        }
        IntervalLinearization {
            terms: self
                .quad
                .nodes
                .iter()
                .zip(&self.quad.weights)
                .map(|(s, w)| (*w, self.linearize(&convex(u1, u2, *s))))
                .collect(),
        }
    }

    /// `∫_0^1 F'(s u1 + (1-s) u2) ds · v`.
    pub fn f_prime_interval(
        &self,
        u1: &SpectralField,
        u2: &SpectralField,
        v: &SpectralField,
    ) -> SpectralField {
        self.linearize_interval(u1, u2).apply(v)
    }
}

/// `s u1 + (1 - s) u2`.
pub(crate) fn convex(u1: &SpectralField, u2: &SpectralField, s: f64) -> SpectralField {
    u1.zip(u2, |a, b| a * s + b * (1.0 - s))
}

fn apply_w_jac(jac: &[WJac], v: &SpectralField) -> SpectralField {
    v.map_indexed(|i, c| {
        let j = jac[i];
        if j.rho1 == 0.0 {
            c * j.rho
        } else {
            c * j.rho + j.z * (2.0 * j.rho1 * (j.z.conj() * c).re)
        }
    })
}

/// `T'` from `y = A^{1/2}P_N u` and `x = A^{1/2}P_N v`.
fn t_prime(y: &SpectralField, phi: f64, phi1: f64, x: &SpectralField) -> SpectralField {
    let mut out = x.scale_re(phi);
    if phi1 != 0.0 {
        let c = 2.0 * phi1 * y.inner(x).re;
        out.axpy(Complex64::new(c, 0.0), y);
    }
    out
}

/// `F'(u)` frozen at one base point.
#[derive(Debug)]
pub struct Linearization<'a> {
    model: &'a Model,
    zero: bool,
    u: SpectralField,
    ubar: SpectralField,
    w: SpectralField,
    wbar: SpectralField,
    jac: Vec<WJac>,
    first: Vec<[Complex64; 2]>,
    second: Vec<[Complex64; 3]>,
    au: Complex64,
    aub: Complex64,
    theta: f64,
    theta1: f64,
    y: SpectralField,
    phi: f64,
    phi1: f64,
}

impl<'a> Linearization<'a> {
    fn new(model: &'a Model, u: &SpectralField) -> Self {
        model.check(u);
        let lat = &model.lattice;
        let zero = model.forcing.is_zero();
        let jac: Vec<WJac> = (0..u.coeffs().len())
            .map(|i| model.w_jac(lat.a_eig(i), u.coeffs()[i]))
            .collect();
        let w = model.truncate_w(u);
        let (mut first, mut second) = (Vec::new(), Vec::new());
        let (mut au, mut aub) = (ZERO, ZERO);
        if !zero {
            let g = model.grid.to_grid_unchecked(&w);
            first.reserve(g.len());
            second.reserve(g.len());
            for &x in &g {
                let d = model.nl.first(x);
                let s = model.nl.second(x);
                au += d.fu;
                aub += d.fub;
                first.push([d.fu, d.fub]);
                second.push([s.fuu, s.fuub, s.fubub]);
            }
            au /= g.len() as f64;
            aub /= g.len() as f64;
        }
        let (theta, theta1) = model.theta(u.norm_sqr());
        let y = model.sqrt_a_low(u);
        let (phi, phi1) = model.bumps.varphi(y.norm_sqr());
        Self {
            model,
            zero,
            u: u.clone(),
            ubar: u.conj_field(),
            wbar: w.conj_field(),
            w,
            jac,
            first,
            second,
            au,
            aub,
            theta,
            theta1,
            y,
            phi,
            phi1,
        }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn base(&self) -> &SpectralField {
        &self.u
    }

    /// `(C_u, C_ū)` at the base point.
    pub fn coefficients(&self) -> (Complex64, Complex64) {
        (self.au * self.theta, self.aub * self.theta)
    }

    pub fn parts(&self, v: &SpectralField) -> FPrimeParts {
        self.model.check(v);
        let lat = &self.model.lattice;
        let zeros = SpectralField::zeros(lat);
        let t_prime = if self.model.forcing.t_enabled {
            t_prime(&self.y, self.phi, self.phi1, &self.model.sqrt_a_low(v))
        } else {
            zeros.clone()
        };
        if self.zero {
            return FPrimeParts {
                l1: zeros.clone(),
                l2: zeros.clone(),
                l3: zeros.clone(),
                l4: zeros,
                t_prime,
            };
        }
        let grid = &self.model.grid;
        let d = apply_w_jac(&self.jac, v);
        let dbar = d.conj_field();
        let dg = grid.to_grid_unchecked(&d);
        let (mut dau, mut daub) = (ZERO, ZERO);
        let prod: Vec<Complex64> = dg
            .iter()
            .zip(self.first.iter().zip(&self.second))
            .map(|(&x, (f, s))| {
                let xb = x.conj();
                dau += s[0] * x + s[1] * xb;
                daub += s[1] * x + s[2] * xb;
                f[0] * x + f[1] * xb
            })
            .collect();
        let m = dg.len() as f64;
        dau /= m;
        daub /= m;

        let mut l1 = grid.from_grid_owned(prod);
        if self.model.dealias {
            grid.dealias(&mut l1);
        }
        l1.axpy(-self.au, &d);
        l1.axpy(-self.aub, &dbar);

        let mut l2 = v.scale(self.au * self.theta);
        l2.axpy(self.aub * self.theta, &v.conj_field());

        let mut l3 = self.w.scale(-dau);
        l3.axpy(-daub, &self.wbar);

        let ruv = self.u.inner(v).re;
        let cu = self.au * (2.0 * self.theta1 * ruv) + dau * self.theta;
        let cub = self.aub * (2.0 * self.theta1 * ruv) + daub * self.theta;
        let mut l4 = self.u.scale(cu);
        l4.axpy(cub, &self.ubar);

        FPrimeParts {
            l1,
            l2,
            l3,
            l4,
            t_prime,
        }
    }

    pub fn apply(&self, v: &SpectralField) -> SpectralField {
        if self.zero && !self.model.forcing.t_enabled {
            return SpectralField::zeros(&self.model.lattice);
        }
        self.parts(v).total()
    }

    /// `l_1(u)v` alone.
    pub fn l1(&self, v: &SpectralField) -> SpectralField {
        self.parts(v).l1
    }
}

/// Quadrature-weighted family of linearizations along a segment.
#[derive(Debug)]
pub struct IntervalLinearization<'a> {
    terms: Vec<(f64, Linearization<'a>)>,
}

impl IntervalLinearization<'_> {
    pub fn apply(&self, v: &SpectralField) -> SpectralField {
        self.combine(|lin| lin.apply(v))
    }

    pub fn l1(&self, v: &SpectralField) -> SpectralField {
        self.combine(|lin| lin.l1(v))
    }

    pub fn parts(&self, v: &SpectralField) -> FPrimeParts {
        let all: Vec<(f64, FPrimeParts)> =
            self.terms.iter().map(|(w, l)| (*w, l.parts(v))).collect();
        let sum = |pick: fn(&FPrimeParts) -> &SpectralField| {
            let mut acc = SpectralField::zeros(pick(&all[0].1).lattice());
            for (w, p) in &all {
                acc.axpy(Complex64::new(*w, 0.0), pick(p));
            }
            acc
        };
        FPrimeParts {
            l1: sum(|p| &p.l1),
            l2: sum(|p| &p.l2),
            l3: sum(|p| &p.l3),
            l4: sum(|p| &p.l4),
            t_prime: sum(|p| &p.t_prime),
        }
    }

    pub fn coefficients(&self) -> (Complex64, Complex64) {
        let (mut cu, mut cub) = (ZERO, ZERO);
        for (w, l) in &self.terms {
            let (a, b) = l.coefficients();
            cu += a * *w;
            cub += b * *w;
        }
        (cu, cub)
    }

    fn combine(&self, f: impl Fn(&Linearization<'_>) -> SpectralField) -> SpectralField {
        if self.terms.len() == 1 {
            return f(&self.terms[0].1);
        }
        let mut acc = SpectralField::zeros(&self.terms[0].1.model.lattice);
        for (w, l) in &self.terms {
            acc.axpy(Complex64::new(*w, 0.0), &f(l));
        }
        acc
    }
}
