//! Torus Fourier infrastructure.

mod field;
mod lattice;
mod transform;

pub(crate) use field::project_unchecked;
pub use field::{
    apply_linear_propagator, project, propagator_factor, ModeSplit, Projector, SpectralField,
    TORUS_VOLUME,
};
pub use lattice::{complete_eigen_bound, enumerate_modes, EigenRange, Lattice, ModeIndex};
pub use transform::{fft_friendly, GridTransform};
