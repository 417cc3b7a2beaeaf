use serde::Serialize;

use super::spatial::{Admissibility, DEFAULT_EPSILON};
use super::transform::{AveragingTransform, Context};
use crate::dynamics::{integrate_variation, large_low_modes, qims_sup, Trajectory, VariationMode};
use crate::error::{Error, Result};
use crate::parallel::{map_range, Execution};
use crate::spectral::{project_unchecked, Projector, SpectralField};
use crate::truncation::Model;

/// Decay margin `μ` in `dV/dt + αV <= -μ‖z‖²`.
pub const MU: f64 = 0.125;

/// `V(ξ) = ‖Q_N ξ‖² - ‖P_N ξ‖²`.
pub fn cone_v(xi: &SpectralField, n: u32) -> f64 {
    let q = project_unchecked(xi, Projector::Upper(n)).norm_sqr();
    let p = project_unchecked(xi, Projector::Lower(n)).norm_sqr();
    q - p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeRegion {
    Inside,
    Boundary,
    Outside,
}

/// Classifies `z` with the boundary band `|V(z)| <= band·‖z‖²`.
pub fn classify(z: &SpectralField, n: u32, band: f64) -> ConeRegion {
    let v = cone_v(z, n);
    let edge = band * z.norm_sqr();
    if v.abs() <= edge {
        ConeRegion::Boundary
    } else if v < 0.0 {
        ConeRegion::Inside
    } else {
        ConeRegion::Outside
    }
}

/// Membership of `v` in the floating cone at `ctx`, decided on `z`.
pub fn in_cone(
    model: &Model,
    ctx: Context<'_>,
    v: &SpectralField,
    band: f64,
) -> Result<ConeRegion> {
    let z = AveragingTransform::new(model, ctx)?.to_z(v);
    Ok(classify(&z, model.n(), band))
}

/// Difference data to certify: two trajectories, or one trajectory with an
/// initial variation.
#[derive(Debug, Clone, Copy)]
pub enum DifferenceInput<'a> {
    Pair(&'a Trajectory, &'a Trajectory),
    Variation(&'a Trajectory, &'a SpectralField),
}

/// Sampled difference `v(t)` with the base data of each sample.
pub(crate) struct DifferenceSeries<'a> {
    pub first: &'a Trajectory,
    pub second: Option<&'a Trajectory>,
    pub v: Vec<SpectralField>,
}

impl<'a> DifferenceSeries<'a> {
    pub fn build(model: &Model, input: DifferenceInput<'a>) -> Result<Self> {
        match input {
            DifferenceInput::Pair(a, b) => {
                a.check_grid(b)?;
                let v = a
                    .states
                    .iter()
                    .zip(&b.states)
                    .map(|(x, y)| x.sub(y))
                    .collect();
                Ok(Self {
                    first: a,
                    second: Some(b),
                    v,
                })
            }
            DifferenceInput::Variation(a, v0) => {
                let v = integrate_variation(model, a, v0, VariationMode::Single)?.states;
                Ok(Self {
                    first: a,
                    second: None,
                    v,
                })
            }
        }
    }

    pub fn context(&self, j: usize) -> Context<'_> {
        match self.second {
            Some(b) => Context::Pair(&self.first.states[j], &b.states[j]),
            None => Context::Single(&self.first.states[j]),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateOptions {
    /// Smoothness loss `κ` of the high-mode monitor.
    pub kappa: f64,
    /// Bound every trajectory must respect in the high-mode monitor.
    pub qims_bound: f64,
    /// `scale` in the tolerance `10·dt²·scale·(1+‖z‖²)`.
    pub tol_scale: f64,
    /// Relative half-width of the cone boundary band.
    pub band: f64,
    pub exec: Execution,
}

impl CertificateOptions {
    pub fn new(qims_bound: f64) -> Self {
        Self {
            kappa: 0.25,
            qims_bound,
            tol_scale: 1.0,
            band: 1e-6,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSample {
    pub t: f64,
    pub v: f64,
    pub z_norm_sq: f64,
    pub alpha: f64,
    /// Five-point derivative of `V`, interior samples only.
    pub dv_dt: Option<f64>,
    /// `dV/dt + αV + μ‖z‖²`, interior samples only.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub region: ConeRegion,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeCertificate {
    pub n: u32,
    pub k: u32,
    pub mu: f64,
    pub dt: f64,
    pub samples: Vec<CertificateSample>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Largest `residual - tolerance` over interior samples.
    pub max_excess: f64,
    /// Samples outside the band after the difference was inside the cone.
    pub exit_events: usize,
    pub exit_times: Vec<f64>,
    /// Largest `max(|C_ū|)/(2|ω|(N-K))` met along the series.
    pub max_transform_factor: f64,
    pub verdict: bool,
}

/// Checks the admissibility record against the model split.
pub fn require_admissible(model: &Model, record: &Admissibility) -> Result<()> {
    let ok = record.n == model.n()
        && record.k == model.k()
        && record.epsilon <= DEFAULT_EPSILON
        && record.admissible();
    if ok {
        Ok(())
    } else {
        Err(Error::Inadmissible {
            n: model.n(),
            k: model.k(),
            eps: record.epsilon.min(DEFAULT_EPSILON),
        })
    }
}

fn five_point(values: &[f64], j: usize, dt: f64) -> f64 {
    (values[j - 2] - 8.0 * values[j - 1] + 8.0 * values[j + 1] - values[j + 2]) / (12.0 * dt)
}

/// Discrete check of `dV/dt + αV <= -μ‖z‖²` along a difference of solutions.
pub fn verify_cone_inequality(
    model: &Model,
    record: &Admissibility,
    input: DifferenceInput<'_>,
    opts: &CertificateOptions,
) -> Result<ConeCertificate> {
    require_admissible(model, record)?;
    let series = DifferenceSeries::build(model, input)?;
    let len = series.len();
    if len < 5 {
        return Err(Error::InsufficientData(format!(
            "cone certificate needs at least 5 samples, got {len}"
        )));
    }
    for traj in [Some(series.first), series.second].into_iter().flatten() {
        let sup = qims_sup(model, traj, opts.kappa);
        if !(sup <= opts.qims_bound) {
            return Err(Error::MonitorViolated(format!(
                "high-mode norm {sup:.4e} exceeds bound {:.4e}",
                opts.qims_bound
            )));
        }
    }
    let n = model.n();
    let k = model.k() as f64;
    let dt = series.first.dt;
    let per_sample: Vec<Result<(f64, f64, f64, f64)>> = map_range(len, opts.exec, |j| {
        let ctx = series.context(j);
        let tr = AveragingTransform::new(model, ctx)?;
        let z = tr.to_z(&series.v[j]);
        let alpha = match ctx {
            Context::Single(u) => {
                let chi = if large_low_modes(model, u) { 1.0 } else { 0.0 };
                2.0 * (n as f64 + 0.5 - tr.c_u.re - k / 8.0 * chi)
            }
            Context::Pair(a, b) => {
                let chi = [a, b].iter().filter(|u| large_low_modes(model, u)).count() as f64;
                2.0 * n as f64 + 1.0 - 2.0 * tr.c_u.re - k / 16.0 * chi
            }
        };
        Ok((cone_v(&z, n), z.norm_sqr(), alpha, tr.factor()))
    });
    let per_sample: Vec<(f64, f64, f64, f64)> = per_sample.into_iter().collect::<Result<_>>()?;
    let v: Vec<f64> = per_sample.iter().map(|s| s.0).collect();
    let tol_base = 10.0 * dt * dt * opts.tol_scale;
    let mut samples = Vec::with_capacity(len);
    let mut max_excess = f64::NEG_INFINITY;
    let mut entered = false;
    let mut exit_times = Vec::new();
    for (j, &(vj, zz, alpha, _)) in per_sample.iter().enumerate() {
        let tolerance = tol_base * (1.0 + zz);
        let (dv_dt, residual) = if j >= 2 && j + 2 < len {
            let d = five_point(&v, j, dt);
            let r = d + alpha * vj + MU * zz;
            max_excess = max_excess.max(r - tolerance);
            (Some(d), Some(r))
        } else {
            (None, None)
        };
        let edge = opts.band * zz;
        let region = if vj.abs() <= edge {
            ConeRegion::Boundary
        } else if vj < 0.0 {
            ConeRegion::Inside
        } else {
            ConeRegion::Outside
        };
        if entered && vj > edge {
            exit_times.push(series.first.time(j));
        }
        if vj <= 0.0 {
            entered = true;
        }
        samples.push(CertificateSample {
            t: series.first.time(j),
            v: vj,
            z_norm_sq: zz,
            alpha,
            dv_dt,
            residual,
            tolerance,
            region,
        });
    }
    let alpha_min = per_sample.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let alpha_max = per_sample
        .iter()
        .map(|s| s.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_transform_factor = per_sample.iter().map(|s| s.3).fold(0.0, f64::max);
    Ok(ConeCertificate {
        n,
        k: model.k(),
        mu: MU,
        dt,
        samples,
        alpha_min,
        alpha_max,
        max_excess,
        exit_events: exit_times.len(),
        exit_times,
        max_transform_factor,
        verdict: max_excess <= 0.0,
    })
}
