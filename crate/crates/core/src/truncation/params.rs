use serde::{Deserialize, Serialize};

use super::bump::Bump;
use crate::error::{Error, Result};

/// Fixed scalars of the modified equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub omega: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `f` vanishes for `|u| >= f_support_radius` and is exact GL for half of it.
    pub f_support_radius: f64,
    pub c_star: f64,
    pub s: f64,
    pub s0: f64,
    pub r0: f64,
    pub r1: f64,
    pub rtilde: f64,
    pub n: u32,
    pub k: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega: 2.0,
            beta: 1.0,
            gamma: 0.5,
            f_support_radius: 2.5,
            c_star: 10.0,
            s: 3.5,
            s0: 1.75,
            r0: 20.0,
            r1: 40.0,
            rtilde: 160.0,
            n: 12,
            k: 4,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega", self.omega),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("f_support_radius", self.f_support_radius),
            ("c_star", self.c_star),
            ("s", self.s),
            ("s0", self.s0),
            ("r0", self.r0),
            ("r1", self.r1),
            ("rtilde", self.rtilde),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(key, "must be finite"));
            }
        }
        if self.omega == 0.0 {
            return Err(Error::invalid(
                "omega",
                "omega ≠ 0 is required (dispersion must not vanish)",
            ));
        }
        if !(self.s0 > 1.5 && self.s0 < 2.0) {
            return Err(Error::invalid("s0", "requires 3/2 < s0 < 2"));
        }
        if !(self.s > self.s0 + 1.5 && self.s < 4.0) {
            return Err(Error::invalid("s", "requires s0 + 3/2 < s < 4"));
        }
        if !(self.k > 0 && self.k < self.n) {
            return Err(Error::invalid("K", "requires 0 < K < N"));
        }
        if !(self.r1 > 0.0) {
            return Err(Error::invalid("r1", "requires R1 > 0"));
        }
        if !(self.rtilde > self.r1) {
            return Err(Error::invalid("rtilde", "requires Rtilde > R1"));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::invalid("r0", "requires R0 > 0"));
        }
        if !(self.c_star > 0.0) {
            return Err(Error::invalid("c_star", "requires C_star > 0"));
        }
        if !(self.f_support_radius > 0.0) {
            return Err(Error::invalid("f_support_radius", "must be positive"));
        }
        Ok(())
    }

    pub fn with_split(mut self, n: u32, k: u32) -> Self {
        self.n = n;
        self.k = k;
        self
    }

    pub fn bumps(&self) -> BumpSpec {
        BumpSpec {
            phi: Bump::new(1.0, 4.0),
            varphi: Bump::new(self.r1 * self.r1, self.rtilde * self.rtilde),
            theta: Bump::new(self.r0 * self.r0, 4.0 * self.r0 * self.r0),
            f_support: Bump::new(
                0.25 * self.f_support_radius * self.f_support_radius,
                self.f_support_radius * self.f_support_radius,
            ),
        }
    }
}

/// The cut-off profiles, each a plateau function of a squared modulus or norm.
///
/// `varphi` is stored as the plateau bump `b`; the cut-off of `T` is `-(1 - b)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    pub phi: Bump,
    pub varphi: Bump,
    pub theta: Bump,
    pub f_support: Bump,
}

impl BumpSpec {
    /// `varphi(z)` and its first derivative.
    pub fn varphi(&self, z: f64) -> (f64, f64) {
        let (b, b1, _) = self.varphi.eval(z);
        (-0.5 * (1.0 - b), 0.5 * b1)
    }
}

/// Which pointwise nonlinearity the model uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// Ginzburg–Landau cubic with compact radial cut-off.
    #[default]
    GinzburgLandau,
    /// `f ≡ 0`.
    Zero,
    /// `f(u) = λ u`, no cut-off.
    Linear { lambda: f64 },
}

/// Test overrides for the nonlinearity and the `T` correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forcing {
    #[serde(default)]
    pub f: NonlinearityKind,
    #[serde(default = "yes")]
    pub t_enabled: bool,
}

fn yes() -> bool {
    true
}

impl Default for Forcing {
    fn default() -> Self {
        Self {
            f: NonlinearityKind::GinzburgLandau,
            t_enabled: true,
        }
    }
}

impl Forcing {
    /// `F ≡ 0`.
    pub fn zero() -> Self {
        Self {
            f: NonlinearityKind::Zero,
            t_enabled: false,
        }
    }

    pub fn linear(lambda: f64) -> Self {
        Self {
            f: NonlinearityKind::Linear { lambda },
            t_enabled: false,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f == NonlinearityKind::Zero && !self.t_enabled
    }
}
