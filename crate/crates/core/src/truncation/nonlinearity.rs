use num_complex::Complex64;

use super::bump::Bump;
use super::params::{ModelParams, NonlinearityKind};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Value and Wirtinger derivatives `(f, ∂f/∂u, ∂f/∂ū)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrder {
    pub f: Complex64,
    pub fu: Complex64,
    pub fub: Complex64,
}

/// Second Wirtinger derivatives `(f_uu, f_uū, f_ūū)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrder {
    pub fuu: Complex64,
    pub fuub: Complex64,
    pub fubub: Complex64,
}

/// Pointwise nonlinearity `f(u, ū)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub beta: f64,
    pub gamma: f64,
    pub support: Bump,
}

impl Nonlinearity {
    pub fn new(params: &ModelParams, kind: NonlinearityKind) -> Self {
        Self {
            kind,
            beta: params.beta,
            gamma: params.gamma,
            support: params.bumps().f_support,
        }
    }

    fn lin(&self) -> Complex64 {
        Complex64::new(1.0, self.beta)
    }

    fn cub(&self) -> Complex64 {
        Complex64::new(1.0, self.gamma)
    }

    pub fn value(&self, u: Complex64) -> Complex64 {
        match self.kind {
            NonlinearityKind::Zero => ZERO,
            NonlinearityKind::Linear { lambda } => u * lambda,
            NonlinearityKind::GinzburgLandau => {
                let r2 = u.norm_sqr();
                let chi = self.support.value(r2);
                if chi == 0.0 {
                    return ZERO;
                }
                (self.lin() * u - self.cub() * u * r2) * chi
            }
        }
    }

    pub fn first(&self, u: Complex64) -> FirstOrder {
        match self.kind {
            NonlinearityKind::Zero => FirstOrder {
                f: ZERO,
                fu: ZERO,
                fub: ZERO,
            },
            NonlinearityKind::Linear { lambda } => FirstOrder {
                f: u * lambda,
                fu: Complex64::new(lambda, 0.0),
                fub: ZERO,
            },
            NonlinearityKind::GinzburgLandau => {
                let r2 = u.norm_sqr();
                let (chi, chi1, _) = self.support.eval(r2);
                if chi == 0.0 && chi1 == 0.0 {
                    return FirstOrder {
                        f: ZERO,
                        fu: ZERO,
                        fub: ZERO,
                    };
                }
                let c = self.cub();
                let g = self.lin() * u - c * u * r2;
                let gu = self.lin() - c * (2.0 * r2);
                let gub = -c * u * u;
                FirstOrder {
                    f: g * chi,
                    fu: gu * chi + g * u.conj() * chi1,
                    fub: gub * chi + g * u * chi1,
                }
            }
        }
    }

    pub fn second(&self, u: Complex64) -> SecondOrder {
        match self.kind {
            NonlinearityKind::Zero | NonlinearityKind::Linear { .. } => SecondOrder {
                fuu: ZERO,
                fuub: ZERO,
                fubub: ZERO,
            },
            NonlinearityKind::GinzburgLandau => {
                let r2 = u.norm_sqr();
                let (chi, chi1, chi2) = self.support.eval(r2);
                let c = self.cub();
                let ub = u.conj();
                let g = self.lin() * u - c * u * r2;
                let gu = self.lin() - c * (2.0 * r2);
                let gub = -c * u * u;
                let guu = -c * ub * 2.0;
                let guub = -c * u * 2.0;
                let chi_u = ub * chi1;
                let chi_ub = u * chi1;
                let chi_uu = ub * ub * chi2;
                let chi_uub = Complex64::new(chi2 * r2 + chi1, 0.0);
                let chi_ubub = u * u * chi2;
                SecondOrder {
                    fuu: guu * chi + gu * chi_u * 2.0 + g * chi_uu,
                    fuub: guub * chi + gu * chi_ub + gub * chi_u + g * chi_uub,
                    fubub: gub * chi_ub * 2.0 + g * chi_ubub,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gl() -> Nonlinearity {
        Nonlinearity::new(&ModelParams::default(), NonlinearityKind::GinzburgLandau)
    }

    #[test]
    fn linearization_at_zero() {
        let d = gl().first(ZERO);
        assert_eq!(d.f, ZERO);
        assert_eq!(d.fu, Complex64::new(1.0, 1.0));
        assert_eq!(d.fub, ZERO);
    }

    #[test]
    fn unit_value() {
        let p = ModelParams::default();
        let f = gl().value(Complex64::new(1.0, 0.0));
        assert!((f - Complex64::new(0.0, p.beta - p.gamma)).norm() < 1e-15);
    }

    #[test]
    fn vanishes_outside_support() {
        assert_eq!(gl().value(Complex64::new(8.0, 0.1)), ZERO);
    }

    fn check_directional(n: &Nonlinearity, u: Complex64, dir: Complex64) -> (f64, f64) {
        let h = 1e-6;
        let d = n.first(u);
        let fd = (n.value(u + dir * h) - n.value(u - dir * h)) / (2.0 * h);
        let an = d.fu * dir + d.fub * dir.conj();
        let s = n.second(u);
        let fd_u = (n.first(u + dir * h).fu - n.first(u - dir * h).fu) / (2.0 * h);
        let an_u = s.fuu * dir + s.fuub * dir.conj();
        let fd_ub = (n.first(u + dir * h).fub - n.first(u - dir * h).fub) / (2.0 * h);
        let an_ub = s.fuub * dir + s.fubub * dir.conj();
        let e1 = (fd - an).norm() / (1.0 + an.norm());
        let e2 =
            ((fd_u - an_u).norm() + (fd_ub - an_ub).norm()) / (1.0 + an_u.norm() + an_ub.norm());
        (e1, e2)
    }

    proptest! {
        #[test]
        fn derivatives_match_differences(
            r in 0.0f64..7.9, th in 0.0f64..6.3, dr in -1.0f64..1.0, di in -1.0f64..1.0
        ) {
            let u = Complex64::from_polar(r, th);
            let (e1, e2) = check_directional(&gl(), u, Complex64::new(dr, di));
            prop_assert!(e1 <= 1e-5, "first order {e1}");
            prop_assert!(e2 <= 1e-4, "second order {e2}");
        }
    }
}
