use rand::Rng;

use super::integrator::{evolve, IntegratorConfig};
use crate::error::Result;
use crate::sampling::smooth_field;
use crate::spectral::SpectralField;
use crate::truncation::Model;

/// States reached after evolving smooth random data of H-norm `h_norm` for
/// time `relax`; draws from the absorbing set of the truncated flow.
pub fn absorbing_samples<R: Rng + ?Sized>(
    model: &Model,
    rng: &mut R,
    count: usize,
    h_norm: f64,
    relax: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<SpectralField>> {
    let steps = super::integrator::steps_for(relax, cfg.dt)?;
    (0..count)
        .map(|_| {
            let u0 = smooth_field(model.lattice(), rng, 1.0, h_norm);
            evolve(model, &u0, cfg.dt, cfg.scheme, steps)
        })
        .collect()
}
