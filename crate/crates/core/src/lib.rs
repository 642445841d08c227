//! Simulation and analysis toolkit for strontium circular Rydberg atoms whose
//! ionic core is optically active.
//!
//! Layers, bottom up: [`atomic`] (level structure and core shifts),
//! [`dynamics`] (pulse propagators over an explicit composite basis),
//! [`sequences`] (declarative pulse chains and synthetic spectra),
//! [`analysis`] (least-squares pipelines) and [`runner`] (configuration and
//! reproduction recipes).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod atomic;
pub mod dynamics;
pub mod error;
pub mod par;
pub mod runner;
pub mod sequences;
pub mod units;

pub use error::{Error, Result};
