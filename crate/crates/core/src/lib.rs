//! Explicit return-map model of a Bykov heteroclinic network.
//!
//! The first-return map to the wall of the cylinder around `sigma_1` is
//!
//! ```text
//! P(x, y) = (x - K log y  (mod 2pi),  y^delta + lambda sin(x - K log y))
//! ```
//!
//! Everything here is built on that map: fixed points and their bifurcation
//! thresholds ([`fixedpoints`]), horizontal strips of the countable horseshoe
//! ([`horseshoe`]), n-pulse connections ([`pulses`]) and a discretized
//! chain-accessibility region ([`chains`]).

pub mod chains;
mod error;
pub mod fixedpoints;
pub mod horseshoe;
pub mod maps;
mod numeric;
mod params;
pub mod pulses;

pub use error::{Error, Result};
pub use maps::SectionPoint;
pub use params::ModelParams;
