use super::integrator::{Scheme, Stepper, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{apply_linear_propagator, SpectralField};
use crate::truncation::{IntervalLinearization, Model};

/// Base of the equation of variations.
#[derive(Debug, Clone, Copy)]
pub enum VariationMode<'a> {
    /// `F'(u(t))` along the stored trajectory.
    Single,
    /// `∫_0^1 F'(s u1 + (1-s) u2) ds` with `u1` the stored trajectory.
    Pair(&'a Trajectory),
}

/// Cached linearizations are kept only below this many bytes.
const CACHE_BUDGET: usize = 512 << 20;

/// Exact tangent map of the discrete integrator along a stored base.
///
/// Propagating `v0` reproduces the derivative of the discrete flow, so the
/// difference quotients of `integrate` converge to it as `h -> 0`.
pub struct TangentPropagator<'a> {
    model: &'a Model,
    stepper: Stepper<'a>,
    base: &'a Trajectory,
    pair: Option<&'a Trajectory>,
    cache: Option<Vec<(IntervalLinearization<'a>, Option<IntervalLinearization<'a>>)>>,
}

impl std::fmt::Debug for TangentPropagator<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TangentPropagator")
            .field("steps", &self.steps())
            .field("cached", &self.cache.is_some())
            .finish()
    }
}

impl<'a> TangentPropagator<'a> {
    pub fn new(model: &'a Model, base: &'a Trajectory, mode: VariationMode<'a>) -> Result<Self> {
        let pair = match mode {
            VariationMode::Single => None,
            VariationMode::Pair(other) => {
                base.check_grid(other)?;
                Some(other)
            }
        };
        let scheme = base.integrator.scheme;
        let steps = base.len().saturating_sub(1);
        for t in std::iter::once(base).chain(pair) {
            if scheme == Scheme::Etd2 && t.stages.len() != steps {
                return Err(Error::TimeGridMismatch(format!(
                    "ETD2 base needs {steps} stages, found {}",
                    t.stages.len()
                )));
            }
            if t.states[0].radius() != model.lattice().radius() {
                return Err(Error::LatticeMismatch {
                    left: t.states[0].radius(),
                    right: model.lattice().radius(),
                });
            }
        }
        let mut tp = Self {
            model,
            stepper: Stepper::new(model, base.dt, scheme),
            base,
            pair,
            cache: None,
        };
        if !model.forcing().is_zero() && tp.cache_bytes() <= CACHE_BUDGET {
            tp.cache = Some((0..steps).map(|j| tp.linearize_step(j)).collect());
        }
        Ok(tp)
    }

    fn cache_bytes(&self) -> usize {
        let per = 16 * (5 * self.model.lattice().len() + 5 * self.model.grid().len());
        let terms = if self.pair.is_some() {
            self.model.quadrature().nodes.len()
        } else {
            1
        };
        let stages = if self.stepper.scheme() == Scheme::Etd2 {
            2
        } else {
            1
        };
        per * terms * stages * self.steps()
    }

    pub fn steps(&self) -> usize {
        self.base.len().saturating_sub(1)
    }

    fn segment(&self, j: usize, stage: bool) -> (&'a SpectralField, &'a SpectralField) {
        let pick = |t: &'a Trajectory| if stage { &t.stages[j] } else { &t.states[j] };
        let u1 = pick(self.base);
        (u1, self.pair.map(pick).unwrap_or(u1))
    }

    fn linearize_step(
        &self,
        j: usize,
    ) -> (IntervalLinearization<'a>, Option<IntervalLinearization<'a>>) {
        let (u1, u2) = self.segment(j, false);
        let lu = self.model.linearize_interval(u1, u2);
        let la = (self.stepper.scheme() == Scheme::Etd2).then(|| {
            let (a1, a2) = self.segment(j, true);
            self.model.linearize_interval(a1, a2)
        });
        (lu, la)
    }

    fn advance(
        &self,
        v: &SpectralField,
        lu: &IntervalLinearization<'_>,
        la: Option<&IntervalLinearization<'_>>,
    ) -> SpectralField {
        let jv = lu.apply(v);
        let av = self.stepper.combine(v, self.stepper.h_phi1(), &jv);
        match la {
            None => av,
            Some(la) => {
                let diff = la.apply(&av).sub(&jv);
                let mut out = av;
                self.stepper.add_weighted(&mut out, true, &diff);
                out
            }
        }
    }

    fn one_step(&self, j: usize, v: &SpectralField) -> SpectralField {
        if self.model.forcing().is_zero() {
            return apply_linear_propagator(v, self.stepper.dt(), self.model.omega());
        }
        match &self.cache {
            Some(c) => self.advance(v, &c[j].0, c[j].1.as_ref()),
            None => {
                let (lu, la) = self.linearize_step(j);
                self.advance(v, &lu, la.as_ref())
            }
        }
    }

    /// `v(t)` at every sample of the base.
    pub fn propagate(&self, v0: &SpectralField) -> Result<Vec<SpectralField>> {
        v0.ensure_finite("variation initial value")?;
        let mut out = Vec::with_capacity(self.base.len());
        out.push(v0.clone());
        for j in 0..self.steps() {
            let next = self.one_step(j, &out[j]);
            if !next.is_finite() {
                return Err(Error::Blowup {
                    time: self.base.time(j + 1),
                });
            }
            out.push(next);
        }
        Ok(out)
    }

    /// `v` at the end of the base.
    pub fn propagate_final(&self, v0: &SpectralField) -> Result<SpectralField> {
        v0.ensure_finite("variation initial value")?;
        let mut v = v0.clone();
        for j in 0..self.steps() {
            v = self.one_step(j, &v);
        }
        if !v.is_finite() {
            return Err(Error::Blowup {
                time: self.base.time(self.steps()),
            });
        }
        Ok(v)
    }
}

/// Solves the equation of variations along `base` with the base's scheme and step.
pub fn integrate_variation(
    model: &Model,
    base: &Trajectory,
    v0: &SpectralField,
    mode: VariationMode<'_>,
) -> Result<Trajectory> {
    let tp = TangentPropagator::new(model, base, mode)?;
    let states = tp.propagate(v0)?;
    Ok(Trajectory {
        t0: base.t0,
        dt: base.dt,
        states,
        stages: Vec::new(),
        params: base.params,
        integrator: base.integrator,
    })
}
