//! Time integration of the modified equation and of its linearization.

mod integrator;
mod monitors;
mod samples;
mod variation;

pub use integrator::{
    evolve, integrate, integrate_steps, step, IntegratorConfig, Scheme, StepOutput, Stepper,
    Trajectory,
};
pub use monitors::{
    affine_fit, centered_derivative, large_low_modes, monitor_cbar_rate, monitor_dissipativity,
    qims_sup, AffineFit, CbarRateReport, DissipativityReport, SupAt,
};
pub use samples::absorbing_samples;
pub use variation::{integrate_variation, TangentPropagator, VariationMode};
