//! Coupling-fiber response of a ring resonator.
//!
//! Near a resonance the field transmission through the coupling fiber is
//!
//! ```text
//!        κ₀ − κ_ext + i(ω − ω₀)
//!   t = ------------------------ ,    T = |t|²
//!        κ₀ + κ_ext + i(ω − ω₀)
//! ```
//!
//! with κ₀ the intrinsic field decay rate and κ_ext the out-coupling rate.
//! The exact all-pass ring response is also provided for scans that cover
//! several free spectral ranges.
//!
//! # Ring amplitude ↔ rate mapping
//!
//! With `ν = ν_FSR` and the round-trip amplitude `a = e^{-x}` and through-port
//! amplitude `r = e^{-y}`, write `s = x + y` and `d = x - y`. The exact ring
//! power transmission is
//!
//! ```text
//!   T(φ) = (sinh²(d/2) + sin²(φ/2)) / (sinh²(s/2) + sin²(φ/2))
//! ```
//!
//! so the mapping
//!
//! ```text
//!   κ             = 2ν·sinh(s/2)
//!   κ₀ − κ_ext    = 2ν·sinh(d/2)
//! ```
//!
//! reproduces the Lorentzian exactly on resonance and in its width, leaving
//! only the `2 sin(φ/2)` vs `φ` curvature of the detuning axis as the
//! difference. To first order this is the familiar `κ₀ ≈ -ln(a)·ν`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

/// Relative tolerance on `fsr × length × group_index = c`.
pub const FSR_CONSISTENCY_TOL: f64 = 1e-9;

/// Default relative band around κ₀ inside which coupling counts as critical.
pub const DEFAULT_CRITICAL_TOL: f64 = 0.01;

/// Loaded finesse below which the single-resonance Lorentzian is flagged as
/// no longer well resolved.
pub const LORENTZIAN_MIN_FINESSE: f64 = 20.0;

/// Parameters of one resonance of the ring.
///
/// All rates are angular frequencies in rad/s. `fsr_hz` is in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    pub kappa0: f64,
    pub kappa_ext: f64,
    pub omega0: f64,
    pub fsr_hz: f64,
    pub length_m: f64,
    pub group_index: f64,
}

impl ResonatorParams {
    /// Builds parameters from the geometric length and group index; the FSR
    /// is derived.
    pub fn new(kappa0: f64, kappa_ext: f64, omega0: f64, length_m: f64, group_index: f64) -> Result<Self> {
        let fsr_hz = fsr_from_length(length_m, group_index)?;
        let p = Self {
            kappa0,
            kappa_ext,
            omega0,
            fsr_hz,
            length_m,
            group_index,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from a measured FSR and length; the group index is
    /// back-computed as `c / (ν_FSR · l)`.
    pub fn from_fsr(kappa0: f64, kappa_ext: f64, omega0: f64, fsr_hz: f64, length_m: f64) -> Result<Self> {
        let group_index = group_index_from_fsr(fsr_hz, length_m)?;
        let p = Self {
            kappa0,
            kappa_ext,
            omega0,
            fsr_hz,
            length_m,
            group_index,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("kappa0", self.kappa0)?;
        non_negative("kappa_ext", self.kappa_ext)?;
        positive("omega0", self.omega0)?;
        positive("fsr_hz", self.fsr_hz)?;
        positive("length_m", self.length_m)?;
        if !(self.group_index > 1.0) || !self.group_index.is_finite() {
            return Err(Error::domain(format!(
                "group_index must exceed 1, got {}",
                self.group_index
            )));
        }
        let product = self.fsr_hz * self.length_m * self.group_index;
        if ((product - SPEED_OF_LIGHT) / SPEED_OF_LIGHT).abs() > FSR_CONSISTENCY_TOL {
            return Err(Error::domain(format!(
                "fsr_hz * length_m * group_index = {product} differs from c"
            )));
        }
        Ok(())
    }

    /// Same resonator with a different out-coupling rate.
    pub fn with_kappa_ext(&self, kappa_ext: f64) -> Result<Self> {
        let p = Self { kappa_ext, ..*self };
        p.validate()?;
        Ok(p)
    }

    /// Total field decay rate κ = κ₀ + κ_ext.
    pub fn kappa_total(&self) -> f64 {
        self.kappa0 + self.kappa_ext
    }

    /// Loaded FWHM linewidth in Hz (κ/π).
    pub fn linewidth_hz(&self) -> f64 {
        self.kappa_total() / PI
    }

    pub fn loaded_finesse(&self) -> f64 {
        PI * self.fsr_hz / self.kappa_total()
    }

    /// Whether κ/2π is small enough against ν_FSR for the single-resonance
    /// Lorentzian to hold.
    pub fn is_well_resolved(&self) -> bool {
        self.loaded_finesse() >= LORENTZIAN_MIN_FINESSE
    }

    pub fn regime(&self, rel_tol: f64) -> Result<CouplingRegime> {
        classify_regime(self.kappa0, self.kappa_ext, rel_tol)
    }

    pub fn ring_amplitudes(&self) -> Result<RingAmplitudes> {
        ring_from_rates(self.kappa0, self.kappa_ext, self.length_m, self.group_index)
    }
}

/// Field amplitudes of the exact all-pass ring model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingAmplitudes {
    /// Field transmission `a` per round trip; 1 means lossless.
    pub round_trip_amp: f64,
    /// Beam-splitter through-port field amplitude `r`; 1 means decoupled.
    pub through_amp: f64,
}

impl RingAmplitudes {
    pub fn new(round_trip_amp: f64, through_amp: f64) -> Result<Self> {
        let amps = Self {
            round_trip_amp,
            through_amp,
        };
        amps.validate()?;
        Ok(amps)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("round_trip_amp", self.round_trip_amp),
            ("through_amp", self.through_amp),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::domain(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingRegime {
    Undercoupled,
    Critical,
    Overcoupled,
}

impl std::fmt::Display for CouplingRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CouplingRegime::Undercoupled => "undercoupled",
            CouplingRegime::Critical => "critical",
            CouplingRegime::Overcoupled => "overcoupled",
        })
    }
}

/// Complex field transmission at absolute angular frequency `omega`.
pub fn field_transmission(params: &ResonatorParams, omega: f64) -> Result<Complex64> {
    field_transmission_at_detuning(params, omega - params.omega0)
}

/// Complex field transmission at angular detuning `delta = ω − ω₀`.
///
/// Use this form when the detuning is known directly; subtracting two
/// optical frequencies costs about eight significant digits.
pub fn field_transmission_at_detuning(params: &ResonatorParams, delta: f64) -> Result<Complex64> {
    params.validate()?;
    Ok(lorentzian_field(params.kappa0, params.kappa_ext, delta))
}

pub fn power_transmission(params: &ResonatorParams, omega: f64) -> Result<f64> {
    field_transmission(params, omega).map(|t| t.norm_sqr())
}

pub fn power_transmission_at_detuning(params: &ResonatorParams, delta: f64) -> Result<f64> {
    field_transmission_at_detuning(params, delta).map(|t| t.norm_sqr())
}

#[inline]
pub(crate) fn lorentzian_field(kappa0: f64, kappa_ext: f64, delta: f64) -> Complex64 {
    Complex64::new(kappa0 - kappa_ext, delta) / Complex64::new(kappa0 + kappa_ext, delta)
}

/// On-resonance power transmission `((2κ₀ − κ)/κ)²` for total decay κ.
#[inline]
pub fn on_resonance_transmission(kappa0: f64, kappa_total: f64) -> f64 {
    let t = (2.0 * kappa0 - kappa_total) / kappa_total;
    t * t
}

/// Exact all-pass ring field transmission
/// `(r − a·e^{iφ}) / (1 − r·a·e^{iφ})` at round-trip phase `φ`.
pub fn exact_ring_transmission(amps: &RingAmplitudes, round_trip_phase: f64) -> Result<Complex64> {
    amps.validate()?;
    let (a, r) = (amps.round_trip_amp, amps.through_amp);
    if a == 1.0 && r == 1.0 {
        return Err(Error::DegenerateRing);
    }
    let e = Complex64::from_polar(1.0, round_trip_phase);
    Ok((r - a * e) / (1.0 - r * a * e))
}

/// Ring amplitudes whose near-resonance response matches the given rates.
pub fn ring_from_rates(
    kappa0: f64,
    kappa_ext: f64,
    length_m: f64,
    group_index: f64,
) -> Result<RingAmplitudes> {
    non_negative("kappa0", kappa0)?;
    non_negative("kappa_ext", kappa_ext)?;
    let fsr = fsr_from_length(length_m, group_index)?;
    let s = 2.0 * ((kappa0 + kappa_ext) / (2.0 * fsr)).asinh();
    let d = 2.0 * ((kappa0 - kappa_ext) / (2.0 * fsr)).asinh();
    let x = 0.5 * (s + d);
    let y = 0.5 * (s - d);
    RingAmplitudes::new((-x.max(0.0)).exp(), (-y.max(0.0)).exp())
}

/// Inverse of [`ring_from_rates`]: returns `(κ₀, κ_ext)` in rad/s.
pub fn rates_from_ring(amps: &RingAmplitudes, length_m: f64, group_index: f64) -> Result<(f64, f64)> {
    amps.validate()?;
    let fsr = fsr_from_length(length_m, group_index)?;
    let x = -amps.round_trip_amp.ln();
    let y = -amps.through_amp.ln();
    let sh_s = (0.5 * (x + y)).sinh();
    let sh_d = (0.5 * (x - y)).sinh();
    Ok((fsr * (sh_s + sh_d), fsr * (sh_s - sh_d)))
}

/// Round-trip phase accumulated at ordinary-frequency detuning `detuning_hz`.
#[inline]
pub fn round_trip_phase(detuning_hz: f64, fsr_hz: f64) -> f64 {
    TAU * detuning_hz / fsr_hz
}

pub fn classify_regime(kappa0: f64, kappa_ext: f64, rel_tol: f64) -> Result<CouplingRegime> {
    non_negative("kappa0", kappa0)?;
    non_negative("kappa_ext", kappa_ext)?;
    non_negative("rel_tol", rel_tol)?;
    let diff = kappa_ext - kappa0;
    Ok(if diff.abs() <= rel_tol * kappa0 {
        CouplingRegime::Critical
    } else if diff < 0.0 {
        CouplingRegime::Undercoupled
    } else {
        CouplingRegime::Overcoupled
    })
}

/// Unloaded finesse `π·ν_FSR/κ₀` = ν_FSR / Δν with Δν = κ₀/π the unloaded
/// FWHM in Hz.
pub fn finesse(kappa0: f64, fsr_hz: f64) -> Result<f64> {
    if kappa0 == 0.0 {
        return Err(Error::InfiniteFinesse);
    }
    positive("kappa0", kappa0)?;
    positive("fsr_hz", fsr_hz)?;
    Ok(PI * fsr_hz / kappa0)
}

/// Quality factor `ω₀ / (2κ₀)`.
pub fn quality_factor(omega0: f64, kappa0: f64) -> Result<f64> {
    positive("omega0", omega0)?;
    positive("kappa0", kappa0)?;
    Ok(omega0 / (2.0 * kappa0))
}

/// ν_FSR = c / (n_g · l).
pub fn fsr_from_length(length_m: f64, group_index: f64) -> Result<f64> {
    positive("length_m", length_m)?;
    positive("group_index", group_index)?;
    Ok(SPEED_OF_LIGHT / (group_index * length_m))
}

/// n_g = c / (ν_FSR · l).
pub fn group_index_from_fsr(fsr_hz: f64, length_m: f64) -> Result<f64> {
    positive("fsr_hz", fsr_hz)?;
    positive("length_m", length_m)?;
    Ok(SPEED_OF_LIGHT / (fsr_hz * length_m))
}

/// Loaded FWHM in Hz for total field decay rate κ.
#[inline]
pub fn fwhm_hz(kappa_total: f64) -> f64 {
    kappa_total / PI
}

pub(crate) fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

pub(crate) fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be non-negative and finite, got {v}"
        )))
    }
}
