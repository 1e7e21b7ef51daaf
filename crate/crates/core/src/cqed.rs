//! Cavity-QED figures of merit and their dependence on resonator length.
//!
//! Length scaling is anchored at a measured reference point. For a guided
//! mode the mode area does not depend on length, so `g ∝ l^{-1/2}` and
//! `ν_FSR ∝ 1/l`. The unloaded decay rate follows the round-trip loss
//! `L(l) = L_taper + α·l` (dB), converted exactly to the amplitude exponent
//! `x = L·ln10/20` and to a rate with the same mapping the resonator model
//! uses, `κ₀ = 2ν_FSR·sinh(x/2)`. The taper loss is not an input: it is what
//! remains of the reference round-trip loss after the fiber contribution.

use std::f64::consts::{LN_10, TAU};

use serde::{Deserialize, Serialize};

use crate::resonator::{positive, LORENTZIAN_MIN_FINESSE};
use crate::{Error, Result};

/// Upper end of the multimode threshold search, in meters.
pub const THRESHOLD_SEARCH_MAX_M: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Dipole decay rate γ, rad/s.
    pub gamma: f64,
    /// Single-atom coupling g at the trap distance, rad/s.
    pub g_single: f64,
    pub n_atoms: u64,
}

impl AtomParams {
    pub fn new(gamma: f64, g_single: f64, n_atoms: u64) -> Result<Self> {
        let p = Self {
            gamma,
            g_single,
            n_atoms,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.gamma)?;
        positive("g_single", self.g_single)?;
        if self.n_atoms == 0 {
            return Err(Error::domain("n_atoms must be at least 1"));
        }
        Ok(())
    }
}

/// Anchor point from which all length-scaling curves are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReference {
    pub l_ref: f64,
    pub kappa0_ref: f64,
    pub g_ref: f64,
    pub fsr_ref: f64,
    pub alpha_fiber_db_per_km: f64,
    /// Per-round-trip loss of the tapered section in dB, derived from the
    /// anchor in [`ScalingReference::from_anchors`].
    pub taper_loss_db: f64,
}

impl ScalingReference {
    pub fn from_anchors(
        l_ref: f64,
        kappa0_ref: f64,
        g_ref: f64,
        fsr_ref: f64,
        alpha_fiber_db_per_km: f64,
    ) -> Result<Self> {
        positive("l_ref", l_ref)?;
        positive("kappa0_ref", kappa0_ref)?;
        positive("g_ref", g_ref)?;
        positive("fsr_ref", fsr_ref)?;
        if !(alpha_fiber_db_per_km >= 0.0) || !alpha_fiber_db_per_km.is_finite() {
            return Err(Error::domain(format!(
                "alpha_fiber_db_per_km must be >= 0, got {alpha_fiber_db_per_km}"
            )));
        }
        let total_db = loss_db_from_kappa0(kappa0_ref, fsr_ref);
        let taper_loss_db = total_db - alpha_fiber_db_per_km * l_ref * 1e-3;
        if taper_loss_db < 0.0 {
            return Err(Error::domain(format!(
                "fiber loss alone ({} dB) exceeds the anchored round-trip loss ({total_db} dB)",
                alpha_fiber_db_per_km * l_ref * 1e-3
            )));
        }
        Ok(Self {
            l_ref,
            kappa0_ref,
            g_ref,
            fsr_ref,
            alpha_fiber_db_per_km,
            taper_loss_db,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let rebuilt = Self::from_anchors(
            self.l_ref,
            self.kappa0_ref,
            self.g_ref,
            self.fsr_ref,
            self.alpha_fiber_db_per_km,
        )?;
        if (rebuilt.taper_loss_db - self.taper_loss_db).abs() > 1e-9 * rebuilt.taper_loss_db.max(1e-3) {
            return Err(Error::domain("taper_loss_db is inconsistent with the anchors"));
        }
        Ok(())
    }

    /// Total round-trip loss in dB at length `l`.
    pub fn round_trip_loss_db(&self, length_m: f64) -> f64 {
        self.taper_loss_db + self.alpha_fiber_db_per_km * length_m * 1e-3
    }
}

/// Round-trip power loss in dB implied by an unloaded decay rate.
pub fn loss_db_from_kappa0(kappa0: f64, fsr_hz: f64) -> f64 {
    let x = 2.0 * (kappa0 / (2.0 * fsr_hz)).asinh();
    2.0 * x * 10.0 / LN_10
}

/// Unloaded decay rate (rad/s) for a round-trip loss in dB.
pub fn kappa0_from_loss_db(loss_db: f64, fsr_hz: f64) -> f64 {
    let x = loss_db * LN_10 / 20.0;
    2.0 * fsr_hz * (0.5 * x).sinh()
}

/// C₀ = g² / (2κγ).
///
/// Pass the unloaded κ₀ to reproduce the quoted single-atom value; with the
/// loaded κ = κ₀ + κ_ext at critical coupling the result halves.
pub fn single_atom_cooperativity(g: f64, kappa: f64, gamma: f64) -> Result<f64> {
    positive("g", g)?;
    positive("kappa", kappa)?;
    positive("gamma", gamma)?;
    Ok(g * g / (2.0 * kappa * gamma))
}

/// g_coll = √N · g.
pub fn collective_coupling(g: f64, n_atoms: u64) -> f64 {
    (n_atoms as f64).sqrt() * g
}

/// C_coll = N · C₀.
pub fn collective_cooperativity(c0: f64, n_atoms: u64) -> f64 {
    n_atoms as f64 * c0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub length_m: f64,
    pub g: f64,
    pub g_coll: f64,
    pub fsr_hz: f64,
    pub kappa0: f64,
    pub c0: f64,
    pub c_coll: f64,
    /// Unloaded finesse at this length.
    pub finesse: f64,
}

impl ScalingPoint {
    /// Whether the single-resonance Lorentzian description still holds.
    pub fn lorentzian_valid(&self) -> bool {
        self.finesse >= LORENTZIAN_MIN_FINESSE
    }
}

pub fn scale_with_length(
    reference: &ScalingReference,
    atoms: &AtomParams,
    length_m: f64,
) -> Result<ScalingPoint> {
    positive("length_m", length_m)?;
    atoms.validate()?;
    let ratio = reference.l_ref / length_m;
    let g = reference.g_ref * ratio.sqrt();
    let fsr_hz = reference.fsr_ref * ratio;
    let kappa0 = kappa0_from_loss_db(reference.round_trip_loss_db(length_m), fsr_hz);
    let c0 = single_atom_cooperativity(g, kappa0, atoms.gamma)?;
    Ok(ScalingPoint {
        length_m,
        g,
        g_coll: collective_coupling(g, atoms.n_atoms),
        fsr_hz,
        kappa0,
        c0,
        c_coll: collective_cooperativity(c0, atoms.n_atoms),
        finesse: std::f64::consts::PI * fsr_hz / kappa0,
    })
}

/// Sweep over `points` lengths in `[l_min, l_max]`, logarithmically spaced
/// when `log_spacing` is set.
pub fn length_sweep(
    reference: &ScalingReference,
    atoms: &AtomParams,
    l_min: f64,
    l_max: f64,
    points: usize,
    log_spacing: bool,
) -> Result<Vec<ScalingPoint>> {
    positive("l_min", l_min)?;
    positive("l_max", l_max)?;
    if l_max < l_min {
        return Err(Error::domain(format!("l_max ({l_max}) < l_min ({l_min})")));
    }
    if points == 0 {
        return Err(Error::domain("sweep needs at least one point"));
    }
    let lengths: Vec<f64> = if points == 1 || l_min == l_max {
        vec![l_min; points.min(1)]
    } else if log_spacing {
        let (a, b) = (l_min.ln(), l_max.ln());
        (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
            .collect()
    } else {
        (0..points)
            .map(|i| l_min + (l_max - l_min) * i as f64 / (points - 1) as f64)
            .collect()
    };
    lengths
        .into_iter()
        .map(|l| scale_with_length(reference, atoms, l))
        .collect()
}

/// Smallest length at which g_coll/2π reaches ν_FSR.
///
/// Brackets on a logarithmic grid over (0, 10⁴ m] and bisects in log l.
pub fn multimode_threshold(reference: &ScalingReference, atoms: &AtomParams) -> Result<f64> {
    atoms.validate()?;
    let excess = |l: f64| -> Result<f64> {
        let p = scale_with_length(reference, atoms, l)?;
        Ok(p.g_coll / TAU - p.fsr_hz)
    };

    let mut lo = 1e-6;
    let mut f_lo = excess(lo)?;
    let mut guard = 0;
    while f_lo >= 0.0 {
        lo *= 1e-3;
        f_lo = excess(lo)?;
        guard += 1;
        if guard > 50 {
            return Err(Error::NoThreshold {
                max_length_m: THRESHOLD_SEARCH_MAX_M,
            });
        }
    }

    let n = 1000;
    let (a, b) = (lo.ln(), THRESHOLD_SEARCH_MAX_M.ln());
    let mut bracket = None;
    let mut prev = lo;
    for i in 1..=n {
        let l = (a + (b - a) * i as f64 / n as f64).exp();
        if excess(l)? >= 0.0 {
            bracket = Some((prev, l));
            break;
        }
        prev = l;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoThreshold {
        max_length_m: THRESHOLD_SEARCH_MAX_M,
    })?;
    while hi / lo - 1.0 > 1e-14 {
        let mid = (lo * hi).sqrt();
        if excess(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bare ring-mode angular frequencies `2π·ν_FSR·m`, `m = −(M−1)/2 … (M−1)/2`.
pub fn bare_mode_frequencies(fsr_hz: f64, n_modes: usize) -> Result<Vec<f64>> {
    positive("fsr_hz", fsr_hz)?;
    if n_modes == 0 || n_modes.is_multiple_of(2) {
        return Err(Error::domain(format!(
            "n_modes must be odd and >= 1, got {n_modes}"
        )));
    }
    let half = (n_modes / 2) as i64;
    Ok((-half..=half).map(|m| TAU * fsr_hz * m as f64).collect())
}

/// Eigenfrequencies (rad/s, ascending) of one collective atomic excitation at
/// `detuning_offset` coupled with strength `g_coll` to `n_modes` ring modes.
///
/// The Hamiltonian is the symmetric arrowhead matrix
///
/// ```text
/// | δ   g   g   …  g  |
/// | g   ω₁             |
/// | g       ω₂         |
/// | …           ⋱      |
/// | g              ω_M |
/// ```
///
/// whose eigenvalues are the roots of the secular function
/// `f(λ) = λ − δ − g² Σ 1/(λ − ωₘ)`. `f` increases monotonically between
/// consecutive poles, so each of the M−1 gaps holds one root and one more lies
/// beyond each end; every root is bisected to full precision.
pub fn multimode_polariton_spectrum(
    g_coll: f64,
    fsr_hz: f64,
    n_modes: usize,
    detuning_offset: f64,
) -> Result<Vec<f64>> {
    if !(g_coll >= 0.0) || !g_coll.is_finite() {
        return Err(Error::domain(format!("g_coll must be >= 0, got {g_coll}")));
    }
    if !detuning_offset.is_finite() {
        return Err(Error::domain("detuning_offset must be finite"));
    }
    let poles = bare_mode_frequencies(fsr_hz, n_modes)?;
    if g_coll == 0.0 {
        let mut out = poles;
        out.push(detuning_offset);
        out.sort_by(f64::total_cmp);
        return Ok(out);
    }
    arrowhead_eigenvalues(detuning_offset, g_coll, &poles)
}

/// Eigenvalues of the arrowhead matrix with apex `apex`, uniform border
/// `border` (> 0) and strictly increasing diagonal `poles`.
pub fn arrowhead_eigenvalues(apex: f64, border: f64, poles: &[f64]) -> Result<Vec<f64>> {
    positive("border", border)?;
    if poles.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("poles must be strictly increasing"));
    }
    let g2 = border * border;
    let secular = |lambda: f64| -> f64 {
        let s: f64 = poles.iter().map(|&p| 1.0 / (lambda - p)).sum();
        lambda - apex - g2 * s
    };
    let spread = border * (poles.len() as f64).sqrt();
    let lo_all = poles.first().copied().unwrap_or(apex).min(apex) - spread;
    let hi_all = poles.last().copied().unwrap_or(apex).max(apex) + spread;
    let widen = |v: f64, dir: f64| v + dir * (1e-9 * v.abs().max(spread) + f64::MIN_POSITIVE);

    let mut out = Vec::with_capacity(poles.len() + 1);
    let mut left = widen(lo_all, -1.0);
    for i in 0..=poles.len() {
        let right = if i < poles.len() {
            poles[i]
        } else {
            widen(hi_all, 1.0)
        };
        out.push(bisect_increasing(&secular, left, right));
        if i < poles.len() {
            left = poles[i];
        }
    }
    Ok(out)
}

/// Root of a function that increases across `(lo, hi)`; endpoints may be
/// poles.
fn bisect_increasing(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{over_two_pi, two_pi_times};

    fn paper_atoms() -> AtomParams {
        AtomParams::new(two_pi_times(2.6e6), two_pi_times(1.5e6), 2000).unwrap()
    }

    fn paper_reference() -> ScalingReference {
        ScalingReference::from_anchors(2.35, two_pi_times(0.58e6), two_pi_times(1.5e6), 87.5e6, 1.5).unwrap()
    }

    #[test]
    fn cooperativity_examples() {
        let k0 = two_pi_times(0.58e6);
        let gamma = two_pi_times(2.6e6);
        let c0 = single_atom_cooperativity(two_pi_times(1.5e6), k0, gamma).unwrap();
        assert!((c0 - 0.746).abs() < 5e-4, "{c0}");
        let c0_2 = single_atom_cooperativity(two_pi_times(3.0e6), k0, gamma).unwrap();
        assert!((c0_2 / c0 - 4.0).abs() < 1e-12);
        let c_surf = single_atom_cooperativity(two_pi_times(5e6), k0, gamma).unwrap();
        assert!((c_surf - 8.29).abs() < 5e-3, "{c_surf}");
        // loaded κ at critical coupling halves it
        let c_loaded = single_atom_cooperativity(two_pi_times(1.5e6), 2.0 * k0, gamma).unwrap();
        assert!((c_loaded - 0.373).abs() < 1e-3);
        assert!(single_atom_cooperativity(0.0, k0, gamma).is_err());
    }

    #[test]
    fn collective_examples() {
        let g = two_pi_times(1.5e6);
        assert_eq!(collective_coupling(g, 1), g);
        assert_eq!(collective_coupling(g, 4), 2.0 * g);
        assert!((over_two_pi(collective_coupling(g, 2000)) / 1e6 - 67.1).abs() < 0.05);
        assert!((collective_cooperativity(0.74, 2000) - 1480.0).abs() < 1e-9);
        assert_eq!(collective_cooperativity(0.5, 1), 0.5);
        assert!((collective_cooperativity(0.746, 2000) - 1492.0).abs() < 1e-9);
    }

    #[test]
    fn taper_loss_is_derived() {
        let r = paper_reference();
        assert!((r.taper_loss_db - 0.36).abs() < 0.005, "{}", r.taper_loss_db);
        assert!(r.validate().is_ok());
        let mut bad = r;
        bad.taper_loss_db = 0.5;
        assert!(bad.validate().is_err());
        assert!(ScalingReference::from_anchors(2.35, two_pi_times(0.58e6), 1.0, 87.5e6, 1e6).is_err());
    }

    #[test]
    fn loss_rate_conversion_round_trips() {
        for k0 in [1e5, two_pi_times(0.58e6), 3e7] {
            let db = loss_db_from_kappa0(k0, 87.5e6);
            assert!((kappa0_from_loss_db(db, 87.5e6) / k0 - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn anchors_are_a_fixed_point() {
        let r = paper_reference();
        let p = scale_with_length(&r, &paper_atoms(), r.l_ref).unwrap();
        assert_eq!(p.g, r.g_ref);
        assert_eq!(p.fsr_hz, r.fsr_ref);
        assert!((p.kappa0 / r.kappa0_ref - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lossless_fiber_keeps_cooperativity() {
        let r = ScalingReference::from_anchors(2.35, two_pi_times(0.58e6), two_pi_times(1.5e6), 87.5e6, 0.0)
            .unwrap();
        let atoms = paper_atoms();
        let c_ref = scale_with_length(&r, &atoms, 2.35).unwrap().c0;
        for l in [0.5, 1.0, 7.0, 100.0, 500.0] {
            let c = scale_with_length(&r, &atoms, l).unwrap().c0;
            assert!((c / c_ref - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn long_resonator_still_strongly_coupled() {
        let r = paper_reference();
        let atoms = paper_atoms();
        let at_ref = scale_with_length(&r, &atoms, r.l_ref).unwrap();
        let at_100 = scale_with_length(&r, &atoms, 100.0).unwrap();
        assert!(at_100.c_coll < at_ref.c_coll);
        assert!(at_100.c_coll > 100.0);
        assert!(at_100.lorentzian_valid());
    }

    #[test]
    fn threshold_examples() {
        let r = paper_reference();
        let atoms = paper_atoms();
        let l_star = multimode_threshold(&r, &atoms).unwrap();
        let closed = r.l_ref * (TAU * r.fsr_ref / collective_coupling(r.g_ref, 2000)).powi(2);
        assert!((l_star - 4.0).abs() < 0.05, "{l_star}");
        assert!((l_star / closed - 1.0).abs() < 1e-10);

        let quad = AtomParams {
            n_atoms: 8000,
            ..atoms
        };
        let l_quad = multimode_threshold(&r, &quad).unwrap();
        assert!((l_star / l_quad - 4.0).abs() < 1e-9);

        // g_coll,ref = 2π ν_FSR,ref at l_ref
        let g_ref = TAU * r.fsr_ref / 2000f64.sqrt();
        let r2 = ScalingReference::from_anchors(r.l_ref, r.kappa0_ref, g_ref, r.fsr_ref, 1.5).unwrap();
        let l2 = multimode_threshold(&r2, &atoms).unwrap();
        assert!((l2 / r.l_ref - 1.0).abs() < 1e-10);

        let p = scale_with_length(&r, &atoms, l_star).unwrap();
        assert!((p.g_coll / TAU - p.fsr_hz).abs() < 1e-4 * p.fsr_hz);
    }

    #[test]
    fn no_threshold_for_tiny_coupling() {
        let r = ScalingReference::from_anchors(2.35, two_pi_times(0.58e6), 1.0, 87.5e6, 1.5).unwrap();
        let atoms = AtomParams::new(two_pi_times(2.6e6), 1.0, 1).unwrap();
        assert!(matches!(
            multimode_threshold(&r, &atoms),
            Err(Error::NoThreshold { .. })
        ));
    }

    #[test]
    fn polariton_small_cases() {
        let g = two_pi_times(20e6);
        let ev = multimode_polariton_spectrum(g, 87.5e6, 1, 0.0).unwrap();
        assert_eq!(ev.len(), 2);
        assert!((ev[0] + g).abs() < 1e-9 * g && (ev[1] - g).abs() < 1e-9 * g);

        let ev = multimode_polariton_spectrum(0.0, 10e6, 3, 1234.0).unwrap();
        let mut expect = vec![-TAU * 10e6, 0.0, 1234.0, TAU * 10e6];
        expect.sort_by(f64::total_cmp);
        assert_eq!(ev, expect);

        assert!(multimode_polariton_spectrum(g, 87.5e6, 0, 0.0).is_err());
        assert!(multimode_polariton_spectrum(g, 87.5e6, 4, 0.0).is_err());
    }

    #[test]
    fn polariton_interlacing_and_trace() {
        let fsr = 51.4e6;
        let g = TAU * 1.3 * fsr;
        let ev = multimode_polariton_spectrum(g, fsr, 5, 0.3e6).unwrap();
        let poles = bare_mode_frequencies(fsr, 5).unwrap();
        for (i, p) in poles.iter().enumerate() {
            assert!(ev[i] < *p && *p < ev[i + 1]);
        }
        let trace: f64 = poles.iter().sum::<f64>() + 0.3e6;
        let sum: f64 = ev.iter().sum();
        assert!((sum - trace).abs() < 1e-10 * ev.iter().map(|v| v.abs()).fold(0.0, f64::max));
        assert!(ev.windows(2).all(|w| w[1] > w[0]));
    }
}
