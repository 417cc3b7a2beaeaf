use serde::{Deserialize, Serialize};

use super::bvp::{diagonal_backward, solve_bvp, BvpConfig};
use crate::dynamics::affine_fit;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;
use crate::truncation::Model;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub bvp: BvpConfig,
    /// Stop once `‖M_T - M_{T-ΔT}‖_H <= tol`.
    pub tol: f64,
    /// First ladder horizon; `5/(N-K+1)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    /// Ladder increment; equal to the first horizon when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_ladder: Option<f64>,
    pub t_max: f64,
    /// Minimum number of ladder steps, so that the gap fit has data.
    pub min_steps: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            bvp: BvpConfig::default(),
            tol: 1e-6,
            t0: None,
            dt_ladder: None,
            t_max: 30.0,
            min_steps: 3,
        }
    }
}

impl GraphConfig {
    pub(crate) fn snap(&self, t: f64) -> f64 {
        let dt = self.bvp.dt;
        ((t / dt).round() * dt).max(dt)
    }

    /// `(T_0, ΔT)`, both multiples of the step.
    pub fn ladder(&self, n: u32, k: u32) -> (f64, f64) {
        let t0 = self.snap(self.t0.unwrap_or(5.0 / (n - k + 1) as f64));
        (t0, self.snap(self.dt_ladder.unwrap_or(t0)))
    }

    pub fn validate(&self) -> Result<()> {
        self.bvp.validate()?;
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::invalid("t_max", "must be positive"));
        }
        if self.min_steps < 2 {
            return Err(Error::invalid(
                "min_steps",
                "needs at least two ladder steps",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderStep {
    pub t: f64,
    pub shooting_residual: f64,
    pub iterations: usize,
    /// `‖M_T - M_{T-ΔT}‖_H`, absent on the first step.
    pub gap: Option<f64>,
}

/// One evaluation of the graph map.
#[derive(Debug, Clone)]
pub struct GraphPoint {
    pub u_plus: SpectralField,
    /// `M(u_+)`, supported on `Q_N`.
    pub m_value: SpectralField,
    pub t_used: f64,
    pub shooting_residual: f64,
    pub cauchy_gap: f64,
    pub ladder: Vec<LadderStep>,
    /// Exponential rate fitted to the positive gaps, when at least two exist.
    pub gap_rate: Option<f64>,
    /// Low modes at `t = -T` of the final solve.
    pub start: SpectralField,
}

impl GraphPoint {
    /// `u_+ + M(u_+)`.
    pub fn state(&self) -> SpectralField {
        self.u_plus.add(&self.m_value)
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.ladder.iter().filter_map(|s| s.gap).collect()
    }
}

/// Evaluates `M(u_+^0)` as the limit of `Q_N u(0)` over a horizon ladder.
pub fn manifold_value(
    model: &Model,
    u_plus0: &SpectralField,
    cfg: &GraphConfig,
) -> Result<GraphPoint> {
    cfg.validate()?;
    let (t0, dt) = cfg.ladder(model.n(), model.k());
    let n = model.n();
    let mut ladder = Vec::new();
    let mut t = t0;
    let mut guess: Option<SpectralField> = None;
    let mut prev: Option<SpectralField> = None;
    loop {
        let sol = solve_bvp(model, u_plus0, t, &cfg.bvp, guess.as_ref())?;
        let m = sol.upper_final(n);
        let gap = prev.as_ref().map(|p| m.sub(p).norm());
        ladder.push(LadderStep {
            t,
            shooting_residual: sol.residual,
            iterations: sol.iterations,
            gap,
        });
        let gaps: Vec<f64> = ladder.iter().filter_map(|s| s.gap).collect();
        if let Some(g) = gap {
            if g <= cfg.tol && ladder.len() >= cfg.min_steps {
                return Ok(GraphPoint {
                    u_plus: u_plus0.clone(),
                    m_value: m,
                    t_used: t,
                    shooting_residual: sol.residual,
                    cauchy_gap: g,
                    gap_rate: gap_rate(&ladder),
                    ladder,
                    start: sol.start,
                });
            }
            if gaps.len() >= 2 && g > gaps[gaps.len() - 2] {
                return Err(Error::NoGraphConvergence { gaps });
            }
        }
        if t + dt > cfg.t_max + 1e-9 {
            return Err(Error::NoGraphConvergence { gaps });
        }
        guess = Some(diagonal_backward(model, &sol.start, dt));
        prev = Some(m);
        t = cfg.snap(t + dt);
    }
}

fn gap_rate(ladder: &[LadderStep]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = ladder
        .iter()
        .filter_map(|s| s.gap.filter(|g| *g > 0.0).map(|g| (s.t, g.ln())))
        .unzip();
    affine_fit(&x, &y).map(|f| -f.slope)
}
