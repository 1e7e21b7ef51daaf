//! HE11 mode of a step-index cylinder (core index `n_core`, radius `a`,
//! cladding index `n_clad`).
//!
//! With `u = h·a`, `w = q·a`, `h² = n_core²k² − β²`, `q² = β² − n_clad²k²`, the
//! HE₁ₘ eigenvalue equation is
//!
//! ```text
//!  J₀(u)        n_core² + n_clad²   K₁'(w)      1
//! -------  = − ----------------- · -------- + ---- − R
//! u·J₁(u)        2 n_core²          w·K₁(w)     u²
//!
//! R = sqrt( ((n_core² − n_clad²)/(2 n_core²))² (K₁'(w)/(w K₁(w)))²
//!           + (β/(n_core k))² (1/w² + 1/u²)² )
//! ```
//!
//! which is the HE branch of the usual product form
//! `(J₁'/(uJ₁) + K₁'/(wK₁))·(n_core² J₁'/(uJ₁) + n_clad² K₁'/(wK₁)) = (β/k)² (1/u² + 1/w²)²`.
//!
//! Field components for one circular polarization `f = ±1`, amplitude
//! normalised to `E_z(core) = J₁(hr)`, with `s = (1/u² + 1/w²) / (J₁'/(uJ₁) + K₁'/(wK₁))`:
//!
//! ```text
//! core      e_r = i β/(2h) [(1−s)J₀(hr) − (1+s)J₂(hr)]
//!           e_φ =  −β/(2h) [(1−s)J₀(hr) + (1+s)J₂(hr)]
//!           e_z =  J₁(hr)
//! cladding  e_r = i β/(2q) c [(1−s)K₀(qr) + (1+s)K₂(qr)]
//!           e_φ =  −β/(2q) c [(1−s)K₀(qr) − (1+s)K₂(qr)]
//!           e_z =  c K₁(qr),             c = J₁(u)/K₁(w)
//! ```
//!
//! and `E = (e_r r̂ + f e_φ φ̂ + e_z ẑ) e^{i(fφ + βz)}`. The quasi-linear mode
//! polarized along φ = 0 is `(E₊ + E₋)/√2`, so
//! `|E|² = 2[(|e_r|² + |e_z|²) cos²φ + |e_φ|² sin²φ]`.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::bessel::{j012, k012};
use crate::resonator::positive;
use crate::{Error, Result};

/// First zero of J₀; single-mode cutoff of the V number.
pub const SINGLE_MODE_CUTOFF: f64 = 2.404_825_557_695_773;

const ROOT_GRID_POINTS: usize = 2000;
const NEFF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberGeometry {
    pub radius_m: f64,
    pub wavelength_m: f64,
    pub n_core: f64,
    pub n_clad: f64,
}

impl FiberGeometry {
    pub fn new(radius_m: f64, wavelength_m: f64, n_core: f64, n_clad: f64) -> Result<Self> {
        let g = Self {
            radius_m,
            wavelength_m,
            n_core,
            n_clad,
        };
        g.validate()?;
        Ok(g)
    }

    /// Vacuum-clad silica nanofiber of radius 250 nm at 852 nm.
    pub fn nanofiber_852() -> Self {
        Self {
            radius_m: 250e-9,
            wavelength_m: 852e-9,
            n_core: 1.45,
            n_clad: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("radius_m", self.radius_m)?;
        positive("wavelength_m", self.wavelength_m)?;
        if !(self.n_clad >= 1.0) || !self.n_clad.is_finite() {
            return Err(Error::domain(format!("n_clad must be >= 1, got {}", self.n_clad)));
        }
        if !(self.n_core > self.n_clad) || !self.n_core.is_finite() {
            return Err(Error::domain(format!(
                "n_core ({}) must exceed n_clad ({})",
                self.n_core, self.n_clad
            )));
        }
        Ok(())
    }

    /// Vacuum wavenumber k = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength_m
    }

    pub fn v_number(&self) -> f64 {
        self.wavenumber() * self.radius_m * (self.n_core.powi(2) - self.n_clad.powi(2)).sqrt()
    }

    pub fn is_single_mode(&self) -> bool {
        self.v_number() < SINGLE_MODE_CUTOFF
    }
}

/// Amplitude ratios that fix the hybrid-mode field components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldCoefficients {
    pub s: f64,
    /// β²s/(k² n_core²), enters the core magnetic field.
    pub s_core: f64,
    /// β²s/(k² n_clad²), enters the cladding magnetic field.
    pub s_clad: f64,
    /// J₁(ha)/K₁(qa), matches E_z across the surface.
    pub clad_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub beta: f64,
    pub n_eff: f64,
    pub h: f64,
    pub q: f64,
    pub field_coeffs: FieldCoefficients,
    pub v_number: f64,
    pub single_mode: bool,
    /// Scaled eigenvalue-equation residual at the returned root.
    pub residual: f64,
    /// Maximum of the unnormalised quasi-linear |E|² over the transverse plane.
    pub peak_intensity: f64,
}

/// Electric field components of one circular HE11 mode at radius `r`.
/// `e_r` is the coefficient of `i`; `e_phi` and `e_z` are real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectricComponents {
    pub e_r: f64,
    pub e_phi: f64,
    pub e_z: f64,
}

/// Magnetic field components times the vacuum impedance Z₀.
/// `h_r` is real; `h_phi` and `h_z` are coefficients of `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticComponents {
    pub h_r: f64,
    pub h_phi: f64,
    pub h_z: f64,
}

struct Eigen {
    /// J₀(u)/(u J₁(u))
    j_ratio: f64,
    /// K₁'(w)/(w K₁(w))
    k_ratio: f64,
    /// J₁'(u)/(u J₁(u))
    jp_ratio: f64,
    u: f64,
    w: f64,
}

fn eigen_terms(geom: &FiberGeometry, n_eff: f64) -> Eigen {
    let k = geom.wavenumber();
    let a = geom.radius_m;
    let u = k * a * (geom.n_core * geom.n_core - n_eff * n_eff).sqrt();
    let w = k * a * (n_eff * n_eff - geom.n_clad * geom.n_clad).sqrt();
    let [j0, j1, j2] = j012(u);
    let [k0, k1, k2] = k012(w);
    Eigen {
        j_ratio: j0 / (u * j1),
        k_ratio: -0.5 * (k0 + k2) / (w * k1),
        jp_ratio: 0.5 * (j0 - j2) / (u * j1),
        u,
        w,
    }
}

/// HE-branch residual `(lhs − rhs, scale)` at trial index `n_eff`.
fn he_residual(geom: &FiberGeometry, n_eff: f64) -> (f64, f64) {
    let (n1, n2) = (geom.n_core, geom.n_clad);
    let e = eigen_terms(geom, n_eff);
    let inv_u2 = 1.0 / (e.u * e.u);
    let inv_w2 = 1.0 / (e.w * e.w);
    let c1 = (n1 * n1 + n2 * n2) / (2.0 * n1 * n1);
    let c2 = (n1 * n1 - n2 * n2) / (2.0 * n1 * n1);
    let b = n_eff / n1;
    let r = ((c2 * e.k_ratio).powi(2) + (b * (inv_u2 + inv_w2)).powi(2)).sqrt();
    let f = e.j_ratio + c1 * e.k_ratio - inv_u2 + r;
    let scale = e.j_ratio.abs() + (c1 * e.k_ratio).abs() + inv_u2 + r;
    (f, scale)
}

/// Scaled residual of the HE11 eigenvalue equation at `n_eff`.
pub fn characteristic_residual(geom: &FiberGeometry, n_eff: f64) -> f64 {
    let (f, scale) = he_residual(geom, n_eff);
    f / scale
}

/// Finds the fundamental HE11 root.
///
/// The open interval (n_clad, n_core) is scanned from the core side on a
/// 2000-point grid; the first sign change brackets HE11 (its `u` stays below
/// 2.405, well short of the first pole at the J₁ zero 3.83). The bracket is
/// bisected to 1e-12 in n_eff and finished with a secant step.
pub fn solve_he11(geom: &FiberGeometry) -> Result<ModeSolution> {
    geom.validate()?;
    let (n1, n2) = (geom.n_core, geom.n_clad);
    let f = |n: f64| he_residual(geom, n).0;

    let step = (n1 - n2) / ROOT_GRID_POINTS as f64;
    let mut bracket = None;
    let mut hi = n1 - 0.5 * step;
    let mut f_hi = f(hi);
    for i in 1..ROOT_GRID_POINTS {
        let lo = n1 - (i as f64 + 0.5) * step;
        let f_lo = f(lo);
        if f_lo.is_finite() && f_hi.is_finite() && f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi, f_lo, f_hi));
            break;
        }
        hi = lo;
        f_hi = f_lo;
    }
    if bracket.is_none() {
        // Weakly guided: the root sits inside the last half cell above
        // n_clad. Walk toward n_clad geometrically.
        let mut gap = 0.5 * step;
        for _ in 0..60 {
            gap *= 0.25;
            let lo = n2 + gap;
            let f_lo = f(lo);
            if f_lo.is_finite() && f_hi.is_finite() && f_lo.signum() != f_hi.signum() {
                bracket = Some((lo, hi, f_lo, f_hi));
                break;
            }
            hi = lo;
            f_hi = f_lo;
        }
    }
    let (mut lo, mut hi, mut f_lo, mut f_hi) = bracket.ok_or_else(|| {
        Error::NoGuidedMode(format!(
            "no sign change of the HE11 equation, V = {}",
            geom.v_number()
        ))
    })?;

    while hi - lo > NEFF_TOL * n1 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            f_lo = 0.0;
            f_hi = 0.0;
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let mut n_eff = if f_hi != f_lo {
        hi - f_hi * (hi - lo) / (f_hi - f_lo)
    } else {
        0.5 * (lo + hi)
    };
    if !(n_eff >= lo && n_eff <= hi) {
        n_eff = 0.5 * (lo + hi);
    }

    let k = geom.wavenumber();
    let beta = n_eff * k;
    let h = k * (n1 * n1 - n_eff * n_eff).sqrt();
    let q = k * (n_eff * n_eff - n2 * n2).sqrt();
    let e = eigen_terms(geom, n_eff);
    let s = (1.0 / (e.u * e.u) + 1.0 / (e.w * e.w)) / (e.jp_ratio + e.k_ratio);
    let [_, j1a, _] = j012(e.u);
    let [_, k1a, _] = k012(e.w);
    let b2 = (beta / k).powi(2);
    let field_coeffs = FieldCoefficients {
        s,
        s_core: b2 * s / (n1 * n1),
        s_clad: b2 * s / (n2 * n2),
        clad_scale: j1a / k1a,
    };
    let mut mode = ModeSolution {
        beta,
        n_eff,
        h,
        q,
        field_coeffs,
        v_number: geom.v_number(),
        single_mode: geom.is_single_mode(),
        residual: characteristic_residual(geom, n_eff),
        peak_intensity: 1.0,
    };
    mode.peak_intensity = find_peak_intensity(&mode, geom);
    Ok(mode)
}

/// Electric field of one circular polarization at radius `r`; points with
/// `r ≥ a` are evaluated on the cladding side.
pub fn electric_components(mode: &ModeSolution, geom: &FiberGeometry, r: f64) -> ElectricComponents {
    let c = &mode.field_coeffs;
    let s = c.s;
    if r < geom.radius_m {
        let [j0, j1, j2] = j012(mode.h * r);
        let pre = mode.beta / (2.0 * mode.h);
        ElectricComponents {
            e_r: pre * ((1.0 - s) * j0 - (1.0 + s) * j2),
            e_phi: -pre * ((1.0 - s) * j0 + (1.0 + s) * j2),
            e_z: j1,
        }
    } else {
        let [k0, k1, k2] = k012(mode.q * r);
        let pre = mode.beta / (2.0 * mode.q) * c.clad_scale;
        ElectricComponents {
            e_r: pre * ((1.0 - s) * k0 + (1.0 + s) * k2),
            e_phi: -pre * ((1.0 - s) * k0 - (1.0 + s) * k2),
            e_z: c.clad_scale * k1,
        }
    }
}

/// Magnetic field (times Z₀) of one circular polarization at radius `r`.
pub fn magnetic_components(mode: &ModeSolution, geom: &FiberGeometry, r: f64) -> MagneticComponents {
    let c = &mode.field_coeffs;
    let k = geom.wavenumber();
    let hz_pre = mode.beta * c.s / k;
    if r < geom.radius_m {
        let n2 = geom.n_core * geom.n_core;
        let s1 = c.s_core;
        let [j0, j1, j2] = j012(mode.h * r);
        let pre = k * n2 / (2.0 * mode.h);
        MagneticComponents {
            h_r: pre * ((1.0 - s1) * j0 + (1.0 + s1) * j2),
            h_phi: pre * ((1.0 - s1) * j0 - (1.0 + s1) * j2),
            h_z: hz_pre * j1,
        }
    } else {
        let n2 = geom.n_clad * geom.n_clad;
        let s2 = c.s_clad;
        let [k0, k1, k2] = k012(mode.q * r);
        let pre = k * n2 / (2.0 * mode.q) * c.clad_scale;
        MagneticComponents {
            h_r: pre * ((1.0 - s2) * k0 - (1.0 + s2) * k2),
            h_phi: pre * ((1.0 - s2) * k0 + (1.0 + s2) * k2),
            h_z: hz_pre * c.clad_scale * k1,
        }
    }
}

fn raw_intensity(mode: &ModeSolution, geom: &FiberGeometry, r: f64, phi: f64) -> f64 {
    let e = electric_components(mode, geom, r);
    let (sn, cs) = phi.sin_cos();
    2.0 * ((e.e_r * e.e_r + e.e_z * e.e_z) * cs * cs + e.e_phi * e.e_phi * sn * sn)
}

fn find_peak_intensity(mode: &ModeSolution, geom: &FiberGeometry) -> f64 {
    // |E|² is linear in cos²φ, so the maximum sits on φ = 0 or φ = π/2.
    let a = geom.radius_m;
    let n = 400;
    let mut best = (0.0, 0.0, 0.0_f64, (0.0, 0.0));
    for phi in [0.0, FRAC_PI_2] {
        let inside: Vec<f64> = (0..n).map(|i| a * i as f64 / n as f64).collect();
        let outside: Vec<f64> = (0..=n).map(|i| a * (1.0 + 3.0 * i as f64 / n as f64)).collect();
        for grid in [inside, outside] {
            for (idx, &r) in grid.iter().enumerate() {
                let v = raw_intensity(mode, geom, r, phi);
                if v > best.2 {
                    let lo = if idx > 0 { grid[idx - 1] } else { r };
                    let hi = if idx + 1 < grid.len() { grid[idx + 1] } else { r };
                    best = (r, phi, v, (lo, hi));
                }
            }
        }
    }
    let (r0, phi, v0, (lo, hi)) = best;
    // Stay on the side of the surface the grid maximum came from.
    let (lo, hi) = if r0 < a {
        (lo, hi.min(a * (1.0 - 1e-15)))
    } else {
        (lo.max(a), hi)
    };
    let refined = golden_max(|r| raw_intensity(mode, geom, r, phi), lo, hi);
    v0.max(refined)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if hi <= lo {
        return f(lo);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    f(lo).max(f(hi)).max(f1).max(f2)
}

/// Normalised |E|² of the quasi-linearly polarized mode (polarization axis
/// along φ = 0), with maximum 1 over the transverse plane.
pub fn intensity_profile(mode: &ModeSolution, geom: &FiberGeometry, r: f64, phi: f64) -> f64 {
    // the clamp only removes last-ulp overshoot at the peak itself
    (raw_intensity(mode, geom, r.abs(), phi) / mode.peak_intensity).min(1.0)
}

/// Evanescent 1/e field decay length 1/q, in meters.
pub fn evanescent_decay_length(mode: &ModeSolution) -> f64 {
    1.0 / mode.q
}

/// Azimuth (0 or π/2) of the larger intensity just outside the surface.
pub fn surface_peak_azimuth(mode: &ModeSolution, geom: &FiberGeometry) -> f64 {
    let a = geom.radius_m;
    if raw_intensity(mode, geom, a, 0.0) >= raw_intensity(mode, geom, a, FRAC_PI_2) {
        0.0
    } else {
        FRAC_PI_2
    }
}

/// Emitter coupling strength at `distance_m` from the surface, scaled from
/// the surface value by the local field amplitude:
/// `g(d) = g_surface · sqrt(I(a + d) / I(a))` along the surface-peak azimuth.
pub fn coupling_strength_at(
    mode: &ModeSolution,
    geom: &FiberGeometry,
    distance_m: f64,
    g_surface: f64,
) -> Result<f64> {
    if !(distance_m >= 0.0) || !distance_m.is_finite() {
        return Err(Error::domain(format!(
            "distance_m must be >= 0, got {distance_m}"
        )));
    }
    positive("g_surface", g_surface)?;
    let a = geom.radius_m;
    let phi = surface_peak_azimuth(mode, geom);
    let ratio = raw_intensity(mode, geom, a + distance_m, phi) / raw_intensity(mode, geom, a, phi);
    Ok(g_surface * ratio.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r_m: f64,
    pub phi_rad: f64,
    pub intensity: f64,
}

/// Normalised intensity on a polar grid `r ∈ [0, r_max]`, `φ ∈ [0, 2π)`.
pub fn profile_grid(
    mode: &ModeSolution,
    geom: &FiberGeometry,
    r_max_m: f64,
    n_r: usize,
    n_phi: usize,
) -> Result<Vec<ProfileSample>> {
    positive("r_max_m", r_max_m)?;
    if n_r < 2 || n_phi < 1 {
        return Err(Error::domain("profile grid needs n_r >= 2 and n_phi >= 1"));
    }
    let mut out = Vec::with_capacity(n_r * n_phi);
    for i in 0..n_r {
        let r = r_max_m * i as f64 / (n_r - 1) as f64;
        for j in 0..n_phi {
            let phi = TAU * j as f64 / n_phi as f64;
            out.push(ProfileSample {
                r_m: r,
                phi_rad: phi,
                intensity: intensity_profile(mode, geom, r, phi),
            });
        }
    }
    Ok(out)
}
