use serde::Serialize;

use super::cone::{cone_v, DifferenceInput, DifferenceSeries};
use super::transform::AveragingTransform;
use crate::dynamics::affine_fit;
use crate::error::{Error, Result};
use crate::truncation::Model;

#[derive(Debug, Clone, Serialize)]
pub struct SqueezingReport {
    pub times: Vec<f64>,
    pub log_norms: Vec<f64>,
    /// `γ_est`, minus the slope of `log‖v‖_H`.
    pub rate: f64,
    pub intercept: f64,
    /// RMS deviation from the fitted line over the range of `log‖v‖_H`.
    pub fit_residual: f64,
    pub decaying: bool,
}

/// Normalized RMS misfit of a least-squares line.
pub(crate) fn relative_misfit(x: &[f64], y: &[f64], intercept: f64, slope: f64) -> f64 {
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    let span = y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - y.iter().copied().fold(f64::INFINITY, f64::min);
    if span > 0.0 {
        rms / span
    } else {
        0.0
    }
}

/// Fits `log‖v(t)‖_H` on the time window `[t_start, t_end]`, requiring the
/// difference to stay outside the floating cone there.
pub fn estimate_squeezing(
    model: &Model,
    input: DifferenceInput<'_>,
    window: (f64, f64),
) -> Result<SqueezingReport> {
    let series = DifferenceSeries::build(model, input)?;
    let traj = series.first;
    let (mut times, mut logs) = (Vec::new(), Vec::new());
    for j in 0..series.len() {
        let t = traj.time(j);
        if t < window.0 - 1e-12 || t > window.1 + 1e-12 {
            continue;
        }
        let v = &series.v[j];
        let z = AveragingTransform::new(model, series.context(j))?.to_z(v);
        if cone_v(&z, model.n()) <= 0.0 {
            return Err(Error::ConeExit { time: t });
        }
        times.push(t);
        logs.push(v.norm().ln());
    }
    let fit = affine_fit(&times, &logs).ok_or_else(|| {
        Error::InsufficientData(format!("window {window:?} holds {} samples", times.len()))
    })?;
    let fit_residual = relative_misfit(&times, &logs, fit.intercept, fit.slope);
    Ok(SqueezingReport {
        rate: -fit.slope,
        intercept: fit.intercept,
        fit_residual,
        decaying: fit.slope < 0.0,
        times,
        log_norms: logs,
    })
}
