use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{apply_linear_propagator, propagator_factor, SpectralField};
use crate::truncation::{Model, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Etd1,
    #[default]
    Etd2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub horizon: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            scheme: Scheme::Etd2,
            dealias: false,
            horizon: 1.0,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, scheme: Scheme, horizon: f64) -> Self {
        Self {
            dt,
            scheme,
            dealias: false,
            horizon,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be non-negative and finite"));
        }
        Ok(())
    }

    /// Number of steps `m` with `horizon = m·dt`.
    pub fn steps(&self) -> Result<usize> {
        self.validate()?;
        steps_for(self.horizon, self.dt)
    }
}

pub(crate) fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    let m = (horizon / dt).round();
    if (m * dt - horizon).abs() > 1e-9 * horizon.max(dt) {
        return Err(Error::invalid(
            "horizon",
            format!("{horizon} is not a multiple of dt = {dt}"),
        ));
    }
    Ok(m as usize)
}

/// `φ1(z) = (e^z - 1)/z` and `φ2(z) = (e^z - 1 - z)/z²`, with `e^z` supplied.
fn phi_functions(z: Complex64, ez: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 1e-2 {
        let mut p1 = Complex64::new(0.0, 0.0);
        let mut p2 = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        let mut fact1 = 1.0;
        for j in 0..8 {
            // z^j/(j+1)! and z^j/(j+2)!
            fact1 *= (j + 1) as f64;
            p1 += term / fact1;
            p2 += term / (fact1 * (j + 2) as f64);
            term *= z;
        }
        (p1, p2)
    } else {
        let one = Complex64::new(1.0, 0.0);
        ((ez - one) / z, (ez - one - z) / (z * z))
    }
}

/// Mode-wise exponential-integrator weights for one step size.
#[derive(Debug)]
pub struct Stepper<'a> {
    model: &'a Model,
    dt: f64,
    scheme: Scheme,
    e: Vec<Complex64>,
    h_phi1: Vec<Complex64>,
    h_phi2: Vec<Complex64>,
}

/// Result of one step; `stage` is the ETD2 predictor.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub next: SpectralField,
    pub stage: Option<SpectralField>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model, dt: f64, scheme: Scheme) -> Self {
        let lat = model.lattice();
        let omega = model.omega();
        let mut e = Vec::with_capacity(lat.len());
        let mut h_phi1 = Vec::with_capacity(lat.len());
        let mut h_phi2 = Vec::with_capacity(lat.len());
        for i in 0..lat.len() {
            let a = lat.a_eig(i);
            let ez = propagator_factor(a, dt, omega);
            let z = Complex64::new(-(a as f64) * dt, -omega * a as f64 * dt);
            let (p1, p2) = phi_functions(z, ez);
            e.push(ez);
            h_phi1.push(p1 * dt);
            h_phi2.push(p2 * dt);
        }
        Self {
            model,
            dt,
            scheme,
            e,
            h_phi1,
            h_phi2,
        }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `E∘u + c∘g`.
    pub(crate) fn combine(
        &self,
        u: &SpectralField,
        c: &[Complex64],
        g: &SpectralField,
    ) -> SpectralField {
        let mut out = u.clone();
        for (i, x) in out.coeffs_mut().iter_mut().enumerate() {
            *x = *x * self.e[i] + c[i] * g.coeffs()[i];
        }
        out
    }

    pub(crate) fn add_weighted(&self, base: &mut SpectralField, c_phi2: bool, g: &SpectralField) {
        let w = if c_phi2 { &self.h_phi2 } else { &self.h_phi1 };
        for (i, x) in base.coeffs_mut().iter_mut().enumerate() {
            *x += w[i] * g.coeffs()[i];
        }
    }

    pub(crate) fn h_phi1(&self) -> &[Complex64] {
        &self.h_phi1
    }

    pub fn step_full(&self, u: &SpectralField) -> StepOutput {
        if self.model.forcing().is_zero() {
            let next = apply_linear_propagator(u, self.dt, self.model.omega());
            let stage = (self.scheme == Scheme::Etd2).then(|| next.clone());
            return StepOutput { next, stage };
        }
        let fu = self.model.nonlinearity_f(u);
        let a = self.combine(u, &self.h_phi1, &fu);
        match self.scheme {
            Scheme::Etd1 => StepOutput {
                next: a,
                stage: None,
            },
            Scheme::Etd2 => {
                let fa = self.model.nonlinearity_f(&a);
                let mut next = a.clone();
                self.add_weighted(&mut next, true, &fa.sub(&fu));
                StepOutput {
                    next,
                    stage: Some(a),
                }
            }
        }
    }

    pub fn step(&self, u: &SpectralField) -> SpectralField {
        self.step_full(u).next
    }
}

/// One step of the modified equation, failing on non-finite output.
pub fn step(model: &Model, u: &SpectralField, cfg: &IntegratorConfig) -> Result<SpectralField> {
    cfg.validate()?;
    u.ensure_finite("step input")?;
    let next = Stepper::new(model, cfg.dt, cfg.scheme).step(u);
    if !next.is_finite() {
        return Err(Error::Blowup { time: cfg.dt });
    }
    Ok(next)
}

/// Uniformly sampled solution with the integrator that produced it.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<SpectralField>,
    /// ETD2 predictor for each step `j -> j+1`; empty for ETD1.
    pub stages: Vec<SpectralField>,
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.time(j)).collect()
    }

    pub fn first(&self) -> &SpectralField {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralField {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// Errors unless `other` shares the time grid.
    pub fn check_grid(&self, other: &Trajectory) -> Result<()> {
        if self.len() != other.len()
            || self.dt != other.dt
            || self.t0 != other.t0
            || self.integrator.scheme != other.integrator.scheme
        {
            return Err(Error::TimeGridMismatch(format!(
                "{} samples, dt {}, t0 {} vs {} samples, dt {}, t0 {}",
                self.len(),
                self.dt,
                self.t0,
                other.len(),
                other.dt,
                other.t0
            )));
        }
        Ok(())
    }
}

/// Integrates from `t0` for `steps` steps.
pub fn integrate_steps(
    model: &Model,
    u0: &SpectralField,
    cfg: &IntegratorConfig,
    t0: f64,
    steps: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    u0.ensure_finite("initial state")?;
    let stepper = Stepper::new(model, cfg.dt, cfg.scheme);
    let mut states = Vec::with_capacity(steps + 1);
    let mut stages = Vec::new();
    states.push(u0.clone());
    for j in 0..steps {
        let out = stepper.step_full(&states[j]);
        if !out.next.is_finite() {
            return Err(Error::Blowup {
                time: t0 + (j + 1) as f64 * cfg.dt,
            });
        }
        if let Some(a) = out.stage {
            stages.push(a);
        }
        states.push(out.next);
    }
    Ok(Trajectory {
        t0,
        dt: cfg.dt,
        states,
        stages,
        params: *model.params(),
        integrator: IntegratorConfig {
            horizon: steps as f64 * cfg.dt,
            ..*cfg
        },
    })
}

/// Integrates over `[0, cfg.horizon]`.
pub fn integrate(model: &Model, u0: &SpectralField, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_steps(model, u0, cfg, 0.0, cfg.steps()?)
}

/// Final state only, without storing the path.
pub fn evolve(
    model: &Model,
    u0: &SpectralField,
    dt: f64,
    scheme: Scheme,
    steps: usize,
) -> Result<SpectralField> {
    let stepper = Stepper::new(model, dt, scheme);
    let mut u = u0.clone();
    for j in 0..steps {
        u = stepper.step(&u);
        if !u.is_finite() {
            return Err(Error::Blowup {
                time: (j + 1) as f64 * dt,
            });
        }
    }
    Ok(u)
}
