//! Gaussian multiplicative chaos built from circle averages of a Dirichlet
//! Gaussian free field on the unit disk and the unit square.
//!
//! - [`domain`]: Green functions, conformal radii, clipped circles, chords.
//! - [`gff`]: exact and grid samplers for circle averages.
//! - [`measures`]: base measures as weighted atoms.
//! - [`gmc`]: reweighting, mass ladders and convergence fits.
//! - [`analysis`]: dimension, projections, Fourier decay, Hölder exponents.
//! - [`criteria`]: the threshold algebra in `gamma`.

// `!(x > 0.0)` style guards also reject NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod criteria;
pub mod domain;
pub mod error;
pub mod gff;
pub mod gmc;
pub mod measures;
pub(crate) mod quad;

pub use error::{Error, Result};

/// Library version, recorded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Guide chapters, compiled as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/backends.md")]
    mod backends {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/chaos.md")]
    mod chaos {}
    #[doc = include_str!("../../../book/src/thresholds.md")]
    mod thresholds {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
