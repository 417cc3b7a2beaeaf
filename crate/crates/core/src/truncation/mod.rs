//! Cut-offs, truncated nonlinearity and its derivatives.

mod audit;
mod bump;
mod model;
mod nonlinearity;
mod params;
mod quadrature;

pub use audit::{calibrate_varphi, derivative_bound, t_audit_max_eigenvalue, T_AUDIT_TOL};
pub use bump::{smooth_step, Bump};
pub(crate) use model::convex;
pub use model::{FPrimeParts, IntervalLinearization, Linearization, Model};
pub use nonlinearity::{FirstOrder, Nonlinearity, SecondOrder};
pub use params::{BumpSpec, Forcing, ModelParams, NonlinearityKind};
pub use quadrature::{gauss_legendre, Quadrature};

#[cfg(test)]
mod tests;
