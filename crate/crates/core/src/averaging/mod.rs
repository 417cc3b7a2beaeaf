//! Temporal averaging on intermediate modes, floating cones and the
//! spatial-averaging block norm.

mod cone;
mod spatial;
mod squeezing;
mod transform;

pub use cone::{
    classify, cone_v, in_cone, require_admissible, verify_cone_inequality, CertificateOptions,
    CertificateSample, ConeCertificate, ConeRegion, DifferenceInput, MU,
};
pub use spatial::{
    annulus_modes, bound_l3_l4, n_search, sa_operator_norm, Admissibility, AnnulusOperator,
    L34Report, NSearchOptions, NSearchResult, NormMethod, SAOperatorReport, SampleSpectrum,
    DEFAULT_EPSILON,
};
pub(crate) use squeezing::relative_misfit;
pub use squeezing::{estimate_squeezing, SqueezingReport};
pub use transform::{transform_from_z, transform_to_z, AveragingTransform, Context};

#[cfg(test)]
mod tests;
