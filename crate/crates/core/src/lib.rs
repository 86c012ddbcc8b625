//! Weighted spherical means on the positive orthant, the hyperbolic Riesz
//! B-potential built from them, and reconstruction of a function from its
//! means.
//!
//! The guide in `book/` walks through the modules in dependency order.

pub mod cli;
pub mod error;
pub mod field;
pub mod inversion;
pub mod means;
pub mod potential;
pub mod quadrature;
pub mod specfun;
pub mod spectral;
pub mod translation;

pub use error::{Error, Result};

// The guide's code blocks, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/specfun.md")]
    mod specfun {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/translation.md")]
    mod translation {}
    #[doc = include_str!("../../../book/src/means.md")]
    mod means {}
    #[doc = include_str!("../../../book/src/potential.md")]
    mod potential {}
    #[doc = include_str!("../../../book/src/inversion.md")]
    mod inversion {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
