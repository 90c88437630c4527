//! Cell-centered fields on box domains and the operators the analyses share.

mod difference;
mod displacement;
mod domain;
pub mod io;
mod mollify;
mod partition;
mod reduce;
mod scalar;
mod variation;

pub use difference::{difference_quotient, difference_quotient_with, l1_difference_over, Sampling};
pub use displacement::{
    symmetric_gradient, AffineMap, Dilated, DisplacementField, DisplacementSampler, PlusAffine,
    StrainField,
};
pub use domain::{BoxDomain, Region};
pub use mollify::{mollify, mollify_displacement, Mollified, MollifierSpec};
pub use partition::PartitionField;
pub(crate) use reduce::{chunked, ordered_sum};
pub use scalar::ScalarField;
pub use variation::{face_count_tv, for_each_face, total_variation, TotalVariation};
