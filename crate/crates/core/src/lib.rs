//! Closed-form microstructures for the cubic-to-tetragonal transformation and the
//! numerical probes that measure them: energies, Besov difference quotients, empirical
//! H-measures, dimension estimates and blow-up profiles.

pub mod besov;
pub mod constructions;
pub mod crystallography;
pub mod energy;
pub mod error;
pub mod fft;
pub mod fields;
pub mod fit;
pub mod hmeasure;
pub mod scaling;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/wells.md")]
    mod wells {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    mod constructions {}
    #[doc = include_str!("../../../book/src/besov.md")]
    mod besov {}
    #[doc = include_str!("../../../book/src/hmeasure.md")]
    mod hmeasure {}
    #[doc = include_str!("../../../book/src/scaling.md")]
    mod scaling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
