//! Modeling toolkit for a fiber ring resonator that contains a tapered
//! nanofiber section.
//!
//! The crate is organised by subsystem:
//!
//! * [`resonator`]: closed-form coupling-fiber transmission, the exact
//!   all-pass ring response and the finesse/Q/FSR relations.
//! * [`spectrum`]: synthesis of transmission scans, dip detection,
//!   per-resonance Lorentzian fits and the one-parameter global fit of the
//!   intrinsic decay rate over a coupling sweep.
//! * [`bessel`] and [`mode`]: the HE11 mode of a vacuum-clad step-index
//!   cylinder, its intensity profile and the distance dependence of the
//!   emitter coupling strength.
//! * [`cqed`]: cooperativities, collective coupling, length scaling and the
//!   multimode polariton spectrum.
//! * [`io`]: CSV and JSON file formats shared with the command-line tool.
//!
//! Rates (κ, g, γ) are angular frequencies in rad/s throughout. Free spectral
//! ranges, linewidths and scan axes are ordinary frequencies in Hz.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod cqed;
pub mod error;
pub mod io;
pub mod mode;
pub mod resonator;
pub mod spectrum;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a rate quoted as `2π × hz` into rad/s.
#[inline]
pub fn two_pi_times(hz: f64) -> f64 {
    std::f64::consts::TAU * hz
}

/// Converts an angular rate in rad/s into `rate / 2π` in Hz.
#[inline]
pub fn over_two_pi(rad_per_s: f64) -> f64 {
    rad_per_s / std::f64::consts::TAU
}
