use serde::Serialize;

use super::bvp::{diagonal_backward, solve_bvp, BvpSolution};
use super::graph::{manifold_value, GraphConfig, GraphPoint};
use crate::averaging::{relative_misfit, AveragingTransform, Context};
use crate::dynamics::{affine_fit, integrate_steps};
use crate::error::{Error, Result};
use crate::parallel::{map_range, Execution};
use crate::spectral::{project_unchecked, Projector, SpectralField};
use crate::truncation::Model;

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub times: Vec<f64>,
    /// `‖Q_N S(t)p - M(P_N S(t)p)‖_H` at each time.
    pub distances: Vec<f64>,
    pub max_distance: f64,
}

/// Flows the graph point forward and re-evaluates the graph at the projected
/// state every `every` units up to `horizon`.
pub fn invariance_check(
    model: &Model,
    point: &GraphPoint,
    horizon: f64,
    every: f64,
    cfg: &GraphConfig,
) -> Result<InvarianceReport> {
    let dt = cfg.bvp.dt;
    let stride = cfg.bvp.steps(every)?.max(1);
    let steps = cfg.bvp.steps(horizon)?;
    let traj = integrate_steps(model, &point.state(), &cfg.bvp.integrator(), 0.0, steps)?;
    let n = model.n();
    let picks: Vec<usize> = (stride..=steps).step_by(stride).collect();
    let distances = picks
        .iter()
        .map(|&j| {
            let q = &traj.states[j];
            let m = manifold_value(model, &project_unchecked(q, Projector::Lower(n)), cfg)?;
            Ok(project_unchecked(q, Projector::Upper(n))
                .sub(&m.m_value)
                .norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(InvarianceReport {
        times: picks.iter().map(|&j| j as f64 * dt).collect(),
        max_distance: distances.iter().copied().fold(0.0, f64::max),
        distances,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    /// `‖M(u_1) - M(u_2)‖_H / ‖u_1 - u_2‖_H` per pair, absent for identical pairs.
    pub ratios: Vec<Option<f64>>,
    pub max_ratio: f64,
    /// Largest averaging-transform factor `δ` over the graph points.
    pub max_factor: f64,
    /// Cone aperture after distortion, `(1 + 2δ)/(1 - 2δ)`.
    pub bound: f64,
    pub within_bound: bool,
    pub excluded: usize,
}

/// Lipschitz ratios of the graph over pairs of low-mode points.
pub fn lipschitz_probe(
    model: &Model,
    pairs: &[(SpectralField, SpectralField)],
    cfg: &GraphConfig,
    exec: Execution,
) -> Result<LipschitzReport> {
    let evals = map_range(pairs.len() * 2, exec, |i| {
        let (a, b) = &pairs[i / 2];
        let u = if i % 2 == 0 { a } else { b };
        let p = manifold_value(model, u, cfg)?;
        let factor = AveragingTransform::new(model, Context::Single(&p.state()))?.factor();
        Ok((p.m_value, factor))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_factor = evals.iter().map(|e| e.1).fold(0.0, f64::max);
    let ratios: Vec<Option<f64>> = pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let du = a.sub(b).norm();
            (du > 0.0).then(|| evals[2 * i].0.sub(&evals[2 * i + 1].0).norm() / du)
        })
        .collect();
    let max_ratio = ratios.iter().flatten().copied().fold(0.0, f64::max);
    let bound = (1.0 + 2.0 * max_factor) / (1.0 - 2.0 * max_factor);
    Ok(LipschitzReport {
        excluded: ratios.iter().filter(|r| r.is_none()).count(),
        within_bound: max_ratio <= bound,
        max_ratio,
        max_factor,
        bound,
        ratios,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackingReport {
    pub times: Vec<f64>,
    /// `‖u(t) - ū(t)‖_H` against the trace through `P_N u(H)`.
    pub distances: Vec<f64>,
    pub rate: f64,
    pub intercept: f64,
    pub fit_residual: f64,
    /// Backward horizon beyond the window used for the trace.
    pub t_used: f64,
    /// Largest change of the distances between that horizon and one ladder
    /// step less, relative to the largest distance.
    pub sensitivity: f64,
    pub accepted: bool,
}

/// Fits the rate at which `u(t)` approaches the manifold trajectory sharing
/// its low modes at `t = horizon`.
pub fn tracking_experiment(
    model: &Model,
    u0: &SpectralField,
    horizon: f64,
    cfg: &GraphConfig,
) -> Result<TrackingReport> {
    u0.ensure_finite("u0")?;
    let n = model.n();
    let steps = cfg.bvp.steps(horizon)?;
    let traj = integrate_steps(model, u0, &cfg.bvp.integrator(), 0.0, steps)?;
    let target = project_unchecked(traj.last(), Projector::Lower(n));
    let point = manifold_value(model, &target, cfg)?;
    let (_, step) = cfg.ladder(model.n(), model.k());
    let mut sol: Option<BvpSolution> = None;
    let mut trace = |extra: f64| -> Result<Vec<f64>> {
        let total = horizon + extra;
        let (mut t, mut start) = match &sol {
            Some(s) => (s.horizon(), s.start.clone()),
            None => (point.t_used, point.start.clone()),
        };
        loop {
            let next = cfg.snap(if sol.is_none() {
                total
            } else {
                (t + step).min(total)
            });
            let guess = diagonal_backward(model, &start, next - t);
            let s = solve_bvp(model, &target, next, &cfg.bvp, Some(&guess))?;
            t = next;
            start = s.start.clone();
            sol = Some(s);
            if t >= total - 1e-9 {
                break;
            }
        }
        let s = sol.as_ref().expect("solved at least once");
        let off = s.trajectory.len() - (steps + 1);
        Ok((0..=steps)
            .map(|j| traj.states[j].sub(&s.trajectory.states[off + j]).norm())
            .collect())
    };
    let shorter = trace(point.t_used - step)?;
    let distances = trace(point.t_used)?;
    let scale = distances.iter().copied().fold(0.0, f64::max);
    let sensitivity = if scale > 0.0 {
        distances
            .iter()
            .zip(&shorter)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale
    } else {
        0.0
    };
    let (x, y): (Vec<f64>, Vec<f64>) = distances
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > 0.0)
        .map(|(j, d)| (j as f64 * cfg.bvp.dt, d.ln()))
        .unzip();
    let fit = affine_fit(&x, &y)
        .ok_or_else(|| Error::InsufficientData(format!("{} positive distances", x.len())))?;
    let fit_residual = relative_misfit(&x, &y, fit.intercept, fit.slope);
    Ok(TrackingReport {
        times: (0..=steps).map(|j| j as f64 * cfg.bvp.dt).collect(),
        rate: -fit.slope,
        intercept: fit.intercept,
        accepted: fit.slope < 0.0 && fit_residual <= 0.1,
        fit_residual,
        t_used: point.t_used,
        sensitivity,
        distances,
    })
}

/// Anything that maps low-mode points to graph values.
pub trait GraphEvaluator: Sync {
    fn eval(&self, u_plus: &SpectralField) -> Result<SpectralField>;
}

impl<F> GraphEvaluator for F
where
    F: Fn(&SpectralField) -> Result<SpectralField> + Sync,
{
    fn eval(&self, u_plus: &SpectralField) -> Result<SpectralField> {
        self(u_plus)
    }
}

/// The graph of the model evaluated by `manifold_value`.
pub struct ManifoldGraph<'a> {
    pub model: &'a Model,
    pub cfg: GraphConfig,
}

impl GraphEvaluator for ManifoldGraph<'_> {
    fn eval(&self, u_plus: &SpectralField) -> Result<SpectralField> {
        Ok(manifold_value(self.model, u_plus, &self.cfg)?.m_value)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionSmoothness {
    pub hs: Vec<f64>,
    /// `‖(M(u+hw) + M(u-hw))/2 - M(u)‖_H`, the deviation from the secant.
    pub defects: Vec<f64>,
    /// Fitted `1 + ε`; absent when fewer than two defects are resolved.
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub directions: Vec<DirectionSmoothness>,
    /// Smallest fitted exponent; absent when every direction exceeds the
    /// resolution of the ladder.
    pub exponent: Option<f64>,
}

/// Hölder exponent of the secant defect along each direction.
pub fn smoothness_probe<G: GraphEvaluator + ?Sized>(
    graph: &G,
    u_plus0: &SpectralField,
    directions: &[SpectralField],
    hs: &[f64],
    exec: Execution,
) -> Result<SmoothnessReport> {
    let center = graph.eval(u_plus0)?;
    let jobs = directions.len() * hs.len();
    let values = map_range(jobs, exec, |i| {
        let (w, h) = (&directions[i / hs.len()], hs[i % hs.len()]);
        let mut plus = u_plus0.clone();
        plus.axpy(h.into(), w);
        let mut minus = u_plus0.clone();
        minus.axpy((-h).into(), w);
        let (mp, mm) = (graph.eval(&plus)?, graph.eval(&minus)?);
        Ok(mp.add(&mm).scale_re(0.5).sub(&center).norm())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let resolved = center.norm().max(1.0) * 1e-13;
    let directions: Vec<DirectionSmoothness> = values
        .chunks(hs.len())
        .map(|defects| {
            let (x, y): (Vec<f64>, Vec<f64>) = hs
                .iter()
                .zip(defects)
                .filter(|(_, d)| **d > resolved)
                .map(|(h, d)| (h.ln(), d.ln()))
                .unzip();
            DirectionSmoothness {
                hs: hs.to_vec(),
                defects: defects.to_vec(),
                exponent: affine_fit(&x, &y).map(|f| f.slope),
            }
        })
        .collect();
    let exponent = directions
        .iter()
        .filter_map(|d| d.exponent)
        .fold(None, |acc: Option<f64>, e| {
            Some(acc.map_or(e, |a| a.min(e)))
        });
    Ok(SmoothnessReport {
        directions,
        exponent,
    })
}
