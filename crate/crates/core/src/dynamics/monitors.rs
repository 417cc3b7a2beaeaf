use num_complex::Complex64;
use serde::Serialize;

use super::integrator::Trajectory;
use crate::error::Result;
use crate::spectral::{project_unchecked, Projector, SpectralField};
use crate::truncation::{convex, Model};

/// Sup of a sampled series together with the sample that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupAt {
    pub value: f64,
    pub index: usize,
}

impl SupAt {
    fn of(values: &[f64], from: usize) -> Self {
        let mut best = SupAt {
            value: f64::NEG_INFINITY,
            index: from,
        };
        for (i, &v) in values.iter().enumerate().skip(from) {
            if v > best.value {
                best = SupAt { value: v, index: i };
            }
        }
        best
    }
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineFit {
    pub intercept: f64,
    pub slope: f64,
}

pub fn affine_fit(x: &[f64], y: &[f64]) -> Option<AffineFit> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some(AffineFit {
        intercept: my - slope * mx,
        slope,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipativityReport {
    pub n: u32,
    pub kappa: f64,
    pub tail_start: usize,
    /// `‖Q_N u‖_{H^{2-κ}}` per sample.
    pub q_low: Vec<f64>,
    /// `‖Q_N u‖_{H^{2+s0-κ}}` per sample.
    pub q_high: Vec<f64>,
    /// `‖Q_N ∂t u‖_{H^{s0-κ}}` per sample.
    pub q_dt: Vec<f64>,
    pub sup_q_low: SupAt,
    pub sup_q_high: SupAt,
    pub sup_q_dt: SupAt,
    /// Sup of `‖Q_N u‖_{H^{2+s0-κ}} + ‖Q_N ∂t u‖_{H^{s0-κ}}` over the tail.
    pub qims: SupAt,
    pub qims_bound: f64,
    pub qims_ok: bool,
    /// Fit of `‖Q_N F(u)‖_{H^{s0}}` against `‖Q_N u‖_{H^{s0}}` over the tail.
    pub q_f_fit: Option<AffineFit>,
}

/// Tail sups of the high-mode norms and the combined smoothness check against
/// `qims_bound`. Samples before `tail_from` (a time offset from the start) are
/// reported but excluded from the sups.
pub fn monitor_dissipativity(
    model: &Model,
    traj: &Trajectory,
    kappa: f64,
    qims_bound: f64,
    tail_from: f64,
) -> DissipativityReport {
    let n = model.n();
    let s0 = model.params().s0;
    let q = Projector::Upper(n);
    let mut q_low = Vec::with_capacity(traj.len());
    let mut q_high = Vec::with_capacity(traj.len());
    let mut q_dt = Vec::with_capacity(traj.len());
    let mut qf = Vec::with_capacity(traj.len());
    let mut qu = Vec::with_capacity(traj.len());
    for u in &traj.states {
        let qu_field = project_unchecked(u, q);
        q_low.push(qu_field.sobolev_norm(2.0 - kappa));
        q_high.push(qu_field.sobolev_norm(2.0 + s0 - kappa));
        let dt = project_unchecked(&model.time_derivative(u), q);
        q_dt.push(dt.sobolev_norm(s0 - kappa));
        qf.push(project_unchecked(&model.nonlinearity_f(u), q).sobolev_norm(s0));
        qu.push(qu_field.sobolev_norm(s0));
    }
    let tail_start = ((tail_from / traj.dt).ceil() as usize).min(traj.len().saturating_sub(1));
    let combined: Vec<f64> = q_high.iter().zip(&q_dt).map(|(a, b)| a + b).collect();
    let qims = SupAt::of(&combined, tail_start);
    DissipativityReport {
        n,
        kappa,
        tail_start,
        sup_q_low: SupAt::of(&q_low, tail_start),
        sup_q_high: SupAt::of(&q_high, tail_start),
        sup_q_dt: SupAt::of(&q_dt, tail_start),
        qims,
        qims_bound,
        qims_ok: qims.value <= qims_bound,
        q_f_fit: affine_fit(&qu[tail_start..], &qf[tail_start..]),
        q_low,
        q_high,
        q_dt,
    }
}

/// Sup over the whole trajectory of the quantity bounded by the smoothness
/// assumption on high modes.
pub fn qims_sup(model: &Model, traj: &Trajectory, kappa: f64) -> f64 {
    let q = Projector::Upper(model.n());
    let s0 = model.params().s0;
    traj.states
        .iter()
        .map(|u| {
            project_unchecked(u, q).sobolev_norm(2.0 + s0 - kappa)
                + project_unchecked(&model.time_derivative(u), q).sobolev_norm(s0 - kappa)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct CbarRateReport {
    pub alpha: f64,
    pub n: u32,
    pub times: Vec<f64>,
    /// `|d/dt C_ū(α u1 + (1-α) u2)|` per sample.
    pub rate: Vec<f64>,
    /// Number of trajectories with `‖P_N u_i‖_{H^1} >= 4R̃` per sample.
    pub indicator: Vec<u8>,
    pub sup_rate: SupAt,
    /// `sup rate / N^{1/2}` over samples with the indicator off.
    pub c_calm: Option<f64>,
    /// `sup rate / (N^{1/2} + N·χ)` over all samples.
    pub c_all: f64,
}

/// Indicator of `‖P_N u‖_{H^1} >= 4R̃` (ties count as on).
pub fn large_low_modes(model: &Model, u: &SpectralField) -> bool {
    let p = project_unchecked(u, Projector::Lower(model.n()));
    p.sobolev_norm(1.0) >= 4.0 * model.params().rtilde
}

/// Centered differences of a uniformly sampled series, one-sided at the ends.
pub fn centered_derivative(values: &[Complex64], dt: f64) -> Vec<Complex64> {
    let n = values.len();
    if n < 2 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    (0..n)
        .map(|j| {
            if j == 0 {
                (values[1] - values[0]) / dt
            } else if j == n - 1 {
                (values[n - 1] - values[n - 2]) / dt
            } else {
                (values[j + 1] - values[j - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Rate of change of `C_ū` along a trajectory or a convex combination of two.
pub fn monitor_cbar_rate(
    model: &Model,
    u1: &Trajectory,
    u2: Option<&Trajectory>,
    alpha: f64,
) -> Result<CbarRateReport> {
    if let Some(u2) = u2 {
        u1.check_grid(u2)?;
    }
    let n = model.n();
    let mut cbar = Vec::with_capacity(u1.len());
    let mut indicator = Vec::with_capacity(u1.len());
    for j in 0..u1.len() {
        let a = &u1.states[j];
        let (mix, chi) = match u2 {
            Some(t2) => {
                let b = &t2.states[j];
                (
                    convex(a, b, alpha),
                    large_low_modes(model, a) as u8 + large_low_modes(model, b) as u8,
                )
            }
            None => (a.clone(), large_low_modes(model, a) as u8),
        };
        cbar.push(model.coefficients_c(&mix).1);
        indicator.push(chi);
    }
    let rate: Vec<f64> = centered_derivative(&cbar, u1.dt)
        .iter()
        .map(|c| c.norm())
        .collect();
    let sqrt_n = (n as f64).sqrt();
    let calm: Vec<f64> = rate
        .iter()
        .zip(&indicator)
        .filter(|(_, &c)| c == 0)
        .map(|(r, _)| r / sqrt_n)
        .collect();
    let c_all = rate
        .iter()
        .zip(&indicator)
        .map(|(r, &c)| r / (sqrt_n + n as f64 * c as f64))
        .fold(0.0, f64::max);
    Ok(CbarRateReport {
        alpha,
        n,
        times: u1.times(),
        sup_rate: SupAt::of(&rate, 0),
        c_calm: (!calm.is_empty()).then(|| calm.iter().copied().fold(0.0, f64::max)),
        c_all,
        rate,
        indicator,
    })
}
