//! C^∞ cut-off profiles.

fn psi(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let p = (-1.0 / x).exp();
    let x2 = x * x;
    (p, p / x2, p * (1.0 / (x2 * x2) - 2.0 / (x2 * x)))
}

/// Smooth monotone step from 0 (x ≤ 0) to 1 (x ≥ 1) with its first two
/// derivatives, built from `e^{-1/x}`.
pub fn smooth_step(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (a, a1, a2) = psi(x);
    let (b, b1, b2) = psi(1.0 - x);
    let d = a + b;
    let d1 = a1 - b1;
    let d2 = a2 + b2;
    let s = a / d;
    let s1 = (a1 - s * d1) / d;
    let s2 = (a2 - s * d2 - 2.0 * s1 * d1) / d;
    (s, s1, s2)
}

/// Plateau function equal to 1 for `z <= lo` and 0 for `z >= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
}

impl Bump {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(hi > lo);
        Self { lo, hi }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.eval(z).0
    }

    /// Value and first two derivatives in `z`.
    pub fn eval(&self, z: f64) -> (f64, f64, f64) {
        let w = self.hi - self.lo;
        let (s, s1, s2) = smooth_step((z - self.lo) / w);
        (1.0 - s, -s1 / w, -s2 / (w * w))
    }

    /// Largest `|d/dz|` of the profile.
    pub fn max_slope(&self) -> f64 {
        (0..=2000)
            .map(|i| smooth_step(i as f64 / 2000.0).1)
            .fold(0.0, f64::max)
            / (self.hi - self.lo)
    }
}
