use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gmres::gmres;
use crate::dynamics::{
    integrate_steps, qims_sup, IntegratorConfig, TangentPropagator, Trajectory, VariationMode,
};
use crate::error::{Error, Result};
use crate::spectral::{project_unchecked, EigenRange, Projector, SpectralField};
use crate::truncation::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Newton,
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BvpConfig {
    pub dt: f64,
    pub scheme: crate::dynamics::Scheme,
    /// Shooting tolerance on `‖P_N S(T)p - u_+^0‖_H`.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: Solver,
    /// Relative GMRES tolerance of each Newton step.
    pub forcing: f64,
    pub restart: usize,
    /// Rejects solves whose trajectory exceeds this high-mode smoothness bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qims_bound: Option<f64>,
    pub kappa: f64,
}

impl Default for BvpConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            scheme: crate::dynamics::Scheme::Etd2,
            tol: 1e-10,
            max_iter: 60,
            solver: Solver::Newton,
            forcing: 1e-4,
            restart: 120,
            qims_bound: None,
            kappa: 0.25,
        }
    }
}

impl BvpConfig {
    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::new(self.dt, self.scheme, self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        self.integrator().validate()?;
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if !(self.forcing > 0.0 && self.forcing < 1.0) {
            return Err(Error::invalid("forcing", "requires 0 < forcing < 1"));
        }
        if self.restart == 0 || self.max_iter == 0 {
            return Err(Error::invalid(
                "max_iter",
                "iteration limits must be positive",
            ));
        }
        Ok(())
    }

    /// Number of steps covering `horizon`, which must be a multiple of `dt`.
    pub fn steps(&self, horizon: f64) -> Result<usize> {
        IntegratorConfig::new(self.dt, self.scheme, horizon).steps()
    }
}

/// Converged shooting solve on `[-T, 0]`.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    /// `u_+^T`, the low modes at `t = -T`.
    pub start: SpectralField,
    pub trajectory: Trajectory,
    pub residual: f64,
    pub iterations: usize,
    pub solver: Solver,
}

impl BvpSolution {
    pub fn horizon(&self) -> f64 {
        -self.trajectory.t0
    }

    /// `Q_N u(0)`.
    pub fn upper_final(&self, n: u32) -> SpectralField {
        project_unchecked(self.trajectory.last(), Projector::Upper(n))
    }
}

/// Frozen-coefficient rate `λ_n(u)` of each low mode.
fn low_rates(model: &Model, u: &SpectralField, low: &[usize]) -> Vec<Complex64> {
    let (cu, _) = model.coefficients_c(u);
    let t_phi = if model.forcing().t_enabled {
        let y = model.map_t_input_norm(u);
        model.bumps().varphi(y * y).0
    } else {
        0.0
    };
    let lat = model.lattice();
    let w = Complex64::new(1.0, model.omega());
    low.iter()
        .map(|&i| {
            let a = lat.a_eig(i) as f64;
            -w * a + cu - t_phi * a.sqrt()
        })
        .collect()
}

/// `exp(-λ(u) t)` on the low modes of `u`.
pub(crate) fn diagonal_backward(model: &Model, u: &SpectralField, t: f64) -> SpectralField {
    let low = model.lattice().indices_in(EigenRange::AtMost(model.n()));
    let rates = low_rates(model, u, &low);
    let mut out = SpectralField::zeros(model.lattice());
    for (&i, r) in low.iter().zip(&rates) {
        out.coeffs_mut()[i] = u.coeffs()[i] * (-r * t).exp();
    }
    out
}

/// Inverse of the diagonal gain accumulated along `traj`, by the trapezoid rule.
fn preconditioner(model: &Model, traj: &Trajectory, low: &[usize]) -> Vec<Complex64> {
    let rates: Vec<Vec<Complex64>> = traj
        .states
        .iter()
        .map(|u| low_rates(model, u, low))
        .collect();
    let last = rates.len() - 1;
    (0..low.len())
        .map(|j| {
            let mut s = Complex64::new(0.0, 0.0);
            for (i, r) in rates.iter().enumerate() {
                let w = if i == 0 || i == last { 0.5 } else { 1.0 };
                s += r[j] * w;
            }
            (-s * traj.dt).exp()
        })
        .collect()
}

fn scale_low(v: &SpectralField, low: &[usize], d: &[Complex64]) -> SpectralField {
    let mut out = SpectralField::zeros(v.lattice());
    for (&i, di) in low.iter().zip(d) {
        out.coeffs_mut()[i] = v.coeffs()[i] * di;
    }
    out
}

struct Eval {
    traj: Trajectory,
    r: SpectralField,
    norm: f64,
}

fn evaluate(
    model: &Model,
    p: &SpectralField,
    target: &SpectralField,
    cfg: &BvpConfig,
    steps: usize,
) -> Result<Eval> {
    let traj = integrate_steps(model, p, &cfg.integrator(), -(steps as f64) * cfg.dt, steps)?;
    let r = project_unchecked(traj.last(), Projector::Lower(model.n())).sub(target);
    let norm = r.norm();
    Ok(Eval { traj, r, norm })
}

/// Finds `u_+^T` with `P_N S(T)(u_+^T, 0) = u_+^0` and returns the forward
/// trajectory on `[-T, 0]`. `guess` defaults to the diagonal backward image.
pub fn solve_bvp(
    model: &Model,
    u_plus0: &SpectralField,
    horizon: f64,
    cfg: &BvpConfig,
    guess: Option<&SpectralField>,
) -> Result<BvpSolution> {
    cfg.validate()?;
    u_plus0.ensure_finite("u_plus0")?;
    let n = model.n();
    let upper = project_unchecked(u_plus0, Projector::Upper(n)).norm();
    if upper > 0.0 {
        return Err(Error::invalid(
            "u_plus0",
            format!("has Q_N component of norm {upper:.3e}"),
        ));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    let steps = cfg.steps(horizon)?;
    let low = model.lattice().indices_in(EigenRange::AtMost(n));
    let mut p = match guess {
        Some(g) => project_unchecked(g, Projector::Lower(n)),
        None => diagonal_backward(model, u_plus0, horizon),
    };
    let mut cur = evaluate(model, &p, u_plus0, cfg, steps)?;
    let mut iterations = 0;
    while cur.norm > cfg.tol {
        if iterations == cfg.max_iter {
            return Err(Error::NoConvergence {
                what: "shooting",
                iterations,
                residual: cur.norm,
            });
        }
        iterations += 1;
        let d = preconditioner(model, &cur.traj, &low);
        let (next_p, next) = match cfg.solver {
            Solver::FixedPoint => {
                let delta = scale_low(&cur.r, &low, &d).scale_re(-1.0);
                line_search(model, &p, &delta, &cur, u_plus0, cfg, steps, iterations)?
            }
            Solver::Newton => {
                newton_step(model, &p, &cur, u_plus0, cfg, steps, &low, &d, iterations)?
            }
        };
        p = next_p;
        cur = next;
    }
    if let Some(bound) = cfg.qims_bound {
        let sup = qims_sup(model, &cur.traj, cfg.kappa);
        if !(sup <= bound) {
            return Err(Error::MonitorViolated(format!(
                "shooting trajectory reaches {sup:.3e} > {bound:.3e}"
            )));
        }
    }
    Ok(BvpSolution {
        start: p,
        trajectory: cur.traj,
        residual: cur.norm,
        iterations,
        solver: cfg.solver,
    })
}

#[allow(clippy::too_many_arguments)]
fn newton_step(
    model: &Model,
    p: &SpectralField,
    cur: &Eval,
    target: &SpectralField,
    cfg: &BvpConfig,
    steps: usize,
    low: &[usize],
    d: &[Complex64],
    iterations: usize,
) -> Result<(SpectralField, Eval)> {
    let lat = model.lattice();
    let tp = TangentPropagator::new(model, &cur.traj, VariationMode::Single)?;
    let lower = Projector::Lower(model.n());
    let apply = |y: &[f64]| -> Result<Vec<f64>> {
        let v = scale_low(&SpectralField::from_real_coords(lat, low, y), low, d);
        let out = project_unchecked(&tp.propagate_final(&v)?, lower);
        Ok(out.to_real_coords(low))
    };
    let b: Vec<f64> = cur.r.to_real_coords(low).iter().map(|x| -x).collect();
    let bn = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (y, out) = gmres(apply, &b, cfg.forcing * bn, cfg.restart, 2)?;
    if !(out.residual < bn) {
        return Err(Error::NoConvergence {
            what: "GMRES",
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    let delta = scale_low(&SpectralField::from_real_coords(lat, low, &y), low, d);
    line_search(model, p, &delta, cur, target, cfg, steps, iterations)
}

/// Backtracks along `delta` until the residual decreases sufficiently.
#[allow(clippy::too_many_arguments)]
fn line_search(
    model: &Model,
    p: &SpectralField,
    delta: &SpectralField,
    cur: &Eval,
    target: &SpectralField,
    cfg: &BvpConfig,
    steps: usize,
    iterations: usize,
) -> Result<(SpectralField, Eval)> {
    let mut lambda = 1.0;
    while lambda >= 1.0 / 1024.0 {
        let mut q = p.clone();
        q.axpy(Complex64::new(lambda, 0.0), delta);
        if let Ok(e) = evaluate(model, &q, target, cfg, steps) {
            if e.norm <= (1.0 - 1e-4 * lambda) * cur.norm {
                return Ok((q, e));
            }
        }
        lambda *= 0.5;
    }
    Err(Error::NoConvergence {
        what: "shooting line search",
        iterations,
        residual: cur.norm,
    })
}
