//! Numerical laboratory for non-Hermitian random band matrices.
//!
//! Variance profiles, seeded samplers, the self-consistent equation for the
//! Hermitized resolvent, spectral statistics and the Monte-Carlo experiments
//! built from them.

pub mod ensemble;
pub mod error;
pub mod experiments;
mod fmt;
pub mod profile;
pub mod selfconsistent;
pub mod spectra;

pub use error::{Error, Result};
pub use faer::Mat;
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/profiles.md")]
    mod profiles {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/selfconsistent.md")]
    mod selfconsistent {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
