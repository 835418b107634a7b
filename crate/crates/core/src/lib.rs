//! Coarse entropy of maps on unbounded metric spaces.
//!
//! The coarse entropy `h_inf(f)` counts `R`-separated `delta`-pseudoorbits
//! of length `n`, takes the exponential growth rate in `n`, and then lets
//! `R` and `delta` go to infinity in that order. This crate discretizes the
//! count on grids, bounds it from below with realized pseudoorbit families
//! and from above with shadowing and coding arguments, and fits growth
//! rates over explicit schedules.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod coarse;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod maps;
pub mod orbits;
pub mod spaces;

pub use budget::Budget;
pub use error::{Error, Result};
pub use maps::MapDescriptor;
pub use spaces::{Point, SpaceDescriptor};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spaces-and-maps.md")]
    mod spaces_and_maps {}
    #[doc = include_str!("../../../book/src/pseudoorbits.md")]
    mod pseudoorbits {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/estimating.md")]
    mod estimating {}
    #[doc = include_str!("../../../book/src/coarse-checks.md")]
    mod coarse_checks {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
