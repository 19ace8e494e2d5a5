//! Simulation and analysis toolkit for a CubeSat-borne, polarization-entangled
//! photon-pair source.
//!
//! The crate is split along the physical chain of the experiment:
//!
//! - [`polarization`]: two-photon density matrices, analyzer projections,
//!   correlation functions, CHSH, visibility and QBER.
//! - [`source`]: crystal tilt phase, signal/idler wavelengths, laser
//!   mode-hop maps and pair rates.
//! - [`geometry`]: Monte Carlo ray tracing of the lens-free collection geometry.
//! - [`detection`]: Poisson count statistics, accidentals and detector bias.
//! - [`mission`]: orbital ambient temperature and the heater controller.
//! - [`runner`]: sweeps, curve fits, CHSH extraction, heatmap surveys and
//!   full mission runs, plus the scenario config format and result writers.
//!
//! Angles are degrees at every public boundary unless a name says otherwise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod geometry;
pub mod mission;
pub mod polarization;
pub mod runner;
pub mod seeds;
pub mod source;

pub use error::{Error, Result};
