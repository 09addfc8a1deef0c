//! Aggregation and disaggregation of random-coefficient AR(1) processes.
//!
//! A mixture density for the AR(1) coefficient determines the spectrum,
//! autocovariances and Wold representation of the aggregate; see the
//! modules for each step and the guide in `book/` for worked examples.

pub mod disaggregate;
pub mod error;
pub mod mixture;
pub mod panel;
pub mod powerlaw;
pub mod quad;
pub mod spectral;
pub mod specfun;
pub mod wold;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mixtures.md")]
    mod mixtures {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/disaggregation.md")]
    mod disaggregation {}
    #[doc = include_str!("../../../book/src/wold.md")]
    mod wold {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
