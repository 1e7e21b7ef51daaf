//! Transmission scans: synthesis, dip detection, Lorentzian fits and the
//! one-parameter global fit of κ₀ over a beam-splitter sweep.
//!
//! The per-resonance model in ordinary frequency `f` is
//!
//! ```text
//!   T(f) = B − (B − T_r) · γ² / (γ² + (f − f_c)²),     γ = κ/2π  (HWHM, Hz)
//! ```
//!
//! which is `|t|²` from the resonator model scaled by a baseline `B`.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::resonator::{
    exact_ring_transmission, on_resonance_transmission, power_transmission_at_detuning, round_trip_phase,
    ResonatorParams,
};
use crate::{Error, Result};

pub const MIN_TRACE_SAMPLES: usize = 8;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;
const REL_STEP_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-10;
/// Half-width of the fit window around a detected dip, in FWHM.
const FIT_WINDOW_FWHM: f64 = 10.0;

/// Sampled transmission scan. Detunings are `(ω − ω_ref)/2π` in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub detunings: Vec<f64>,
    pub transmissions: Vec<f64>,
    /// Standard deviation of the additive noise used in synthesis (0 for
    /// ideal traces).
    pub noise_sigma: f64,
    pub seed: Option<u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SpectrumTrace {
    pub fn new(detunings: Vec<f64>, transmissions: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        let t = Self {
            detunings,
            transmissions,
            noise_sigma,
            seed: None,
            warnings: Vec::new(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.detunings.len() != self.transmissions.len() {
            return Err(Error::domain(format!(
                "trace arrays differ in length ({} vs {})",
                self.detunings.len(),
                self.transmissions.len()
            )));
        }
        if self.detunings.len() < MIN_TRACE_SAMPLES {
            return Err(Error::domain(format!(
                "trace needs at least {MIN_TRACE_SAMPLES} samples, got {}",
                self.detunings.len()
            )));
        }
        if self.detunings.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("trace detunings must be strictly increasing"));
        }
        if self.transmissions.iter().any(|t| !t.is_finite()) || self.detunings.iter().any(|d| !d.is_finite())
        {
            return Err(Error::domain("trace contains non-finite values"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::domain("noise_sigma must be >= 0"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Same trace with the detuning axis shifted by `offset_hz`.
    pub fn shifted(&self, offset_hz: f64) -> Self {
        Self {
            detunings: self.detunings.iter().map(|d| d + offset_hz).collect(),
            ..self.clone()
        }
    }
}

/// Synthesizes a scan of `span_hz` centred on the resonance.
///
/// Scans wider than one FSR use the exact ring response so that every
/// resonance in the window appears; narrower scans use the Lorentzian.
/// Noise is additive Gaussian on the power transmission, clipped at 0, and
/// drawn from a ChaCha8 stream seeded with `seed`.
pub fn synthesize_trace(
    params: &ResonatorParams,
    span_hz: f64,
    n_samples: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<SpectrumTrace> {
    params.validate()?;
    if !(span_hz > 0.0) || !span_hz.is_finite() {
        return Err(Error::domain(format!("span_hz must be positive, got {span_hz}")));
    }
    if n_samples < MIN_TRACE_SAMPLES {
        return Err(Error::domain(format!(
            "n_samples must be at least {MIN_TRACE_SAMPLES}, got {n_samples}"
        )));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::domain(format!(
            "noise_sigma must be >= 0, got {noise_sigma}"
        )));
    }

    let mut warnings = Vec::new();
    if !params.is_well_resolved() {
        warnings.push(format!(
            "loaded finesse {:.2} is below the Lorentzian validity bound",
            params.loaded_finesse()
        ));
    }
    if span_hz < params.linewidth_hz() {
        warnings.push(format!(
            "span {span_hz} Hz is narrower than the linewidth {} Hz; the dip is not resolved",
            params.linewidth_hz()
        ));
    }

    let detunings: Vec<f64> = (0..n_samples)
        .map(|i| span_hz * (i as f64 / (n_samples - 1) as f64 - 0.5))
        .collect();
    let mut transmissions = if span_hz > params.fsr_hz {
        let amps = params.ring_amplitudes()?;
        detunings
            .iter()
            .map(|&f| {
                exact_ring_transmission(&amps, round_trip_phase(f, params.fsr_hz)).map(|t| t.norm_sqr())
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        detunings
            .iter()
            .map(|&f| power_transmission_at_detuning(params, TAU * f))
            .collect::<Result<Vec<_>>>()?
    };

    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::domain(e.to_string()))?;
        for t in transmissions.iter_mut() {
            *t = (*t + normal.sample(&mut rng)).max(0.0);
        }
    }

    Ok(SpectrumTrace {
        detunings,
        transmissions,
        noise_sigma,
        seed: Some(seed),
        warnings,
    })
}

/// Initial guess for one resonance dip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceGuess {
    pub center_hz: f64,
    /// FWHM in Hz.
    pub width_hz: f64,
    pub depth: f64,
    pub baseline: f64,
    /// Detuning window the fit should use.
    pub window_hz: (f64, f64),
}

/// Finds resonance dips deeper than 3σ below the baseline.
///
/// Noisy traces are smoothed by a five-point moving average before local
/// minima are ranked by topographic prominence, so that noise ripples on
/// the floor of a dip do not count as separate resonances.
pub fn detect_resonances(trace: &SpectrumTrace) -> Result<Vec<ResonanceGuess>> {
    trace.validate()?;
    let n = trace.len();
    let y = if trace.noise_sigma > 0.0 {
        moving_average(&trace.transmissions, 5)
    } else {
        trace.transmissions.clone()
    };

    let baseline = {
        let mut sorted = y.clone();
        sorted.sort_by(f64::total_cmp);
        let p90 = sorted[((n - 1) as f64 * 0.9).round() as usize];
        p90 - 1.28 * trace.noise_sigma / 5f64.sqrt()
    };
    let threshold = (3.0 * trace.noise_sigma).max(1e-9);

    let mut guesses = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] < y[i - 1] && y[i] <= y[i + 1]) {
            continue;
        }
        if prominence(&y, i) <= threshold || baseline - y[i] <= threshold {
            continue;
        }
        let depth = baseline - y[i];
        let half = baseline - 0.5 * depth;
        let left = crossing(&trace.detunings, &y, i, half, -1);
        let right = crossing(&trace.detunings, &y, i, half, 1);
        let width_hz = match (left, right) {
            (Some(l), Some(r)) => r - l,
            (Some(l), None) => 2.0 * (trace.detunings[i] - l),
            (None, Some(r)) => 2.0 * (r - trace.detunings[i]),
            (None, None) => trace.detunings[n - 1] - trace.detunings[0],
        };
        guesses.push(ResonanceGuess {
            center_hz: trace.detunings[i],
            width_hz,
            depth,
            baseline,
            window_hz: (trace.detunings[0], trace.detunings[n - 1]),
        });
    }

    for k in 0..guesses.len() {
        let g = guesses[k];
        let mut lo = g.center_hz - FIT_WINDOW_FWHM * g.width_hz;
        let mut hi = g.center_hz + FIT_WINDOW_FWHM * g.width_hz;
        if k > 0 {
            lo = lo.max(0.5 * (guesses[k - 1].center_hz + g.center_hz));
        }
        if k + 1 < guesses.len() {
            hi = hi.min(0.5 * (guesses[k + 1].center_hz + g.center_hz));
        }
        guesses[k].window_hz = (lo.max(trace.detunings[0]), hi.min(trace.detunings[n - 1]));
    }
    Ok(guesses)
}

fn moving_average(y: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            y[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Height of the lower of the two maxima separating minimum `i` from any
/// deeper point (or the trace edge).
fn prominence(y: &[f64], i: usize) -> f64 {
    let mut left_max = y[i];
    for j in (0..i).rev() {
        if y[j] < y[i] {
            break;
        }
        left_max = left_max.max(y[j]);
    }
    let mut right_max = y[i];
    for &v in &y[i + 1..] {
        if v < y[i] {
            break;
        }
        right_max = right_max.max(v);
    }
    left_max.min(right_max) - y[i]
}

fn crossing(x: &[f64], y: &[f64], from: usize, level: f64, dir: isize) -> Option<f64> {
    let mut j = from as isize;
    loop {
        let next = j + dir;
        if next < 0 || next as usize >= y.len() {
            return None;
        }
        let (a, b) = (j as usize, next as usize);
        if y[b] >= level {
            let t = (level - y[a]) / (y[b] - y[a]);
            return Some(x[a] + t * (x[b] - x[a]));
        }
        j = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitUncertainties {
    pub center_hz: f64,
    pub kappa_total: f64,
    pub t_res: f64,
    pub baseline: f64,
}

/// Lorentzian fit of one resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub center_hz: f64,
    /// Total field decay rate κ = κ₀ + κ_ext, rad/s.
    pub kappa_total: f64,
    /// Transmission at the dip centre.
    pub t_res: f64,
    pub baseline: f64,
    pub uncertainties: FitUncertainties,
    pub converged: bool,
    pub iterations: usize,
    pub residual_rms: f64,
}

impl FitResult {
    /// On-resonance transmission relative to the fitted baseline.
    pub fn normalized_t_res(&self) -> f64 {
        self.t_res / self.baseline
    }

    /// FWHM in Hz.
    pub fn linewidth_hz(&self) -> f64 {
        self.kappa_total / PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            initial_damping: 1e-3,
        }
    }
}

pub fn fit_lorentzian(trace: &SpectrumTrace, guess: &ResonanceGuess) -> Result<FitResult> {
    fit_lorentzian_with(trace, guess, &FitOptions::default())
}

/// Least-squares Lorentzian fit by damped Gauss–Newton (Levenberg–Marquardt
/// with diagonal scaling) over (centre, κ, T_r, baseline).
///
/// Internally the detuning axis is measured from the guessed centre in units
/// of the guessed half width, which keeps all four parameters of order one.
/// T_r is kept in `[0, baseline]` by projection, and held at zero while the
/// gradient pushes it below.
#[allow(clippy::needless_range_loop)]
pub fn fit_lorentzian_with(
    trace: &SpectrumTrace,
    guess: &ResonanceGuess,
    opts: &FitOptions,
) -> Result<FitResult> {
    trace.validate()?;
    if !(guess.depth > 0.0) {
        return Err(Error::FlatFit);
    }
    if !(guess.width_hz > 0.0) || !guess.center_hz.is_finite() {
        return Err(Error::domain("guess needs a positive width and finite centre"));
    }
    let (lo, hi) = guess.window_hz;
    if guess.center_hz < trace.detunings[0] || guess.center_hz > trace.detunings[trace.len() - 1] {
        return Err(Error::domain("guess centre lies outside the scan window"));
    }

    let origin = guess.center_hz;
    let unit = 0.5 * guess.width_hz;
    let (u, y): (Vec<f64>, Vec<f64>) = trace
        .detunings
        .iter()
        .zip(&trace.transmissions)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(f, t)| ((f - origin) / unit, *t))
        .unzip();
    let n = u.len();
    if n < MIN_TRACE_SAMPLES {
        return Err(Error::domain(format!("fit window holds only {n} samples")));
    }

    let mut theta = [0.0, 1.0, (guess.baseline - guess.depth).max(0.0), guess.baseline];
    let mut cost = sum_sq(&residuals(&u, &y, &theta));
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let r = residuals(&u, &y, &theta);
        let (jtj, mut jtr) = normal_equations(&u, &r, &theta);
        // T_r resting on zero with the descent direction pointing below it is
        // held fixed for this step.
        let pinned = theta[2] <= 0.0 && jtr[2] > 0.0;
        if pinned {
            jtr[2] = 0.0;
        }
        if jtr.iter().all(|g| g.abs() < GRADIENT_TOL) {
            converged = true;
            break;
        }
        let mut a = jtj;
        for k in 0..4 {
            a[k][k] += lambda * jtj[k][k].max(1e-300);
        }
        if pinned {
            for k in 0..4 {
                a[2][k] = 0.0;
                a[k][2] = 0.0;
            }
            a[2][2] = 1.0;
        }
        let Some(step) = solve4(a, [-jtr[0], -jtr[1], -jtr[2], -jtr[3]]) else {
            lambda *= 10.0;
            continue;
        };
        let trial = project([
            theta[0] + step[0],
            theta[1] + step[1],
            theta[2] + step[2],
            theta[3] + step[3],
        ]);
        let trial_cost = sum_sq(&residuals(&u, &y, &trial));
        let rel_step = (0..4)
            .map(|k| {
                let scale = if k == 1 {
                    theta[1].abs()
                } else {
                    theta[k].abs().max(1.0)
                };
                (trial[k] - theta[k]).abs() / scale
            })
            .fold(0.0, f64::max);
        if trial_cost <= cost {
            theta = trial;
            cost = trial_cost;
            lambda = (lambda / 10.0).max(1e-12);
            if rel_step < REL_STEP_TOL {
                converged = true;
                break;
            }
        } else {
            if rel_step < REL_STEP_TOL {
                converged = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e30 {
                break;
            }
        }
    }

    let [uc, gamma, tr, b] = theta;
    if !(b - tr > 1e-12 * b.abs().max(1.0)) {
        return Err(Error::FlatFit);
    }
    let r = residuals(&u, &y, &theta);
    let (jtj, _) = normal_equations(&u, &r, &theta);
    let dof = (n - 4).max(1) as f64;
    let s2 = cost / dof;
    let var = invert4_diag(jtj).unwrap_or([f64::INFINITY; 4]);
    let sd = |k: usize| (s2 * var[k]).abs().sqrt();

    Ok(FitResult {
        center_hz: origin + uc * unit,
        kappa_total: TAU * gamma * unit,
        t_res: tr,
        baseline: b,
        uncertainties: FitUncertainties {
            center_hz: sd(0) * unit,
            kappa_total: sd(1) * TAU * unit,
            t_res: sd(2),
            baseline: sd(3),
        },
        converged,
        iterations,
        residual_rms: (cost / n as f64).sqrt(),
    })
}

/// Detects every dip in `trace` and fits each one.
pub fn fit_all(trace: &SpectrumTrace) -> Result<Vec<FitResult>> {
    detect_resonances(trace)?
        .iter()
        .map(|g| fit_lorentzian(trace, g))
        .collect()
}

#[inline]
fn model(u: f64, theta: &[f64; 4]) -> f64 {
    let [uc, g, tr, b] = *theta;
    let d = u - uc;
    b - (b - tr) * g * g / (g * g + d * d)
}

fn residuals(u: &[f64], y: &[f64], theta: &[f64; 4]) -> Vec<f64> {
    u.iter().zip(y).map(|(&ui, &yi)| model(ui, theta) - yi).collect()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn project(mut theta: [f64; 4]) -> [f64; 4] {
    theta[1] = theta[1].abs().max(1e-12);
    theta[2] = theta[2].clamp(0.0, theta[3].max(0.0));
    theta
}

/// JᵀJ and Jᵀr with the analytic Jacobian of [`model`].
#[allow(clippy::needless_range_loop)]
fn normal_equations(u: &[f64], r: &[f64], theta: &[f64; 4]) -> ([[f64; 4]; 4], [f64; 4]) {
    let [uc, g, tr, b] = *theta;
    let depth = b - tr;
    let mut jtj = [[0.0; 4]; 4];
    let mut jtr = [0.0; 4];
    for (&ui, &ri) in u.iter().zip(r) {
        let d = ui - uc;
        let den = g * g + d * d;
        let l = g * g / den;
        let den2 = den * den;
        let j = [
            -depth * 2.0 * d * g * g / den2,
            -depth * 2.0 * g * d * d / den2,
            l,
            1.0 - l,
        ];
        for a in 0..4 {
            jtr[a] += j[a] * ri;
            for c in a..4 {
                jtj[a][c] += j[a] * j[c];
            }
        }
    }
    for a in 0..4 {
        for c in 0..a {
            jtj[a][c] = jtj[c][a];
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn invert4_diag(a: [[f64; 4]; 4]) -> Option<[f64; 4]> {
    let mut out = [0.0; 4];
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        out[k] = solve4(a, e)?[k];
    }
    Some(out)
}

/// One `{κ, T_r}` point of a coupling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Total field decay rate, rad/s.
    pub kappa_total: f64,
    pub t_res: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CouplingSweepDataset {
    pub points: Vec<SweepPoint>,
}

impl CouplingSweepDataset {
    pub fn new(points: Vec<SweepPoint>) -> Result<Self> {
        let d = Self { points };
        d.validate()?;
        Ok(d)
    }

    /// Dataset from per-resonance fits.
    ///
    /// Both the fitted κ and the fitted T_r are uncertain, so each point is
    /// weighted by the inverse of its effective variance
    /// `σ_T² + (∂T_r/∂κ)² σ_κ²`, with the slope taken at a preliminary
    /// uniformly weighted κ₀. Fits without finite positive uncertainties fall
    /// back to uniform weights.
    pub fn from_fits(fits: &[FitResult]) -> Result<Self> {
        let mut points: Vec<SweepPoint> = fits
            .iter()
            .map(|f| SweepPoint {
                kappa_total: f.kappa_total,
                t_res: f.normalized_t_res(),
                weight: 1.0,
            })
            .collect();
        let known = fits.iter().all(|f| {
            let u = &f.uncertainties;
            u.t_res > 0.0 && u.t_res.is_finite() && u.kappa_total >= 0.0 && u.kappa_total.is_finite()
        });
        let uniform = Self::new(points.clone())?;
        if !known {
            return Ok(uniform);
        }
        let kappa0 = match global_kappa0_fit(&uniform) {
            Ok(fit) => fit.kappa0,
            Err(Error::Underdetermined(_)) => return Ok(uniform),
            Err(e) => return Err(e),
        };
        for (p, f) in points.iter_mut().zip(fits) {
            let slope =
                -4.0 * (2.0 * kappa0 / p.kappa_total - 1.0) * kappa0 / (p.kappa_total * p.kappa_total);
            let sigma_t = f.uncertainties.t_res / f.baseline;
            let var = sigma_t * sigma_t + (slope * f.uncertainties.kappa_total).powi(2);
            p.weight = 1.0 / var;
        }
        Self::new(points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Underdetermined(format!(
                "a coupling sweep needs at least 2 points, got {}",
                self.points.len()
            )));
        }
        for p in &self.points {
            if !(p.kappa_total > 0.0) || !p.kappa_total.is_finite() {
                return Err(Error::domain(format!(
                    "kappa_total must be positive, got {}",
                    p.kappa_total
                )));
            }
            if !p.t_res.is_finite() {
                return Err(Error::domain("t_res must be finite"));
            }
            if !(p.weight > 0.0) || !p.weight.is_finite() {
                return Err(Error::domain(format!(
                    "weight must be positive, got {}",
                    p.weight
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa0Fit {
    /// Unloaded field decay rate κ₀, rad/s.
    pub kappa0: f64,
    pub std_error: f64,
    /// Weighted RMS of `T_r − ((2κ₀ − κ)/κ)²`.
    pub residual_rms: f64,
}

/// Fits κ₀ as the only free parameter of `T_r = ((2κ₀ − κ)/κ)²`.
///
/// The weighted cost is scanned over `(0, max κ]` to locate the global
/// basin, minimised there by Brent's method (golden section with parabolic
/// steps) and polished with Gauss–Newton steps. The standard error is the
/// inverse curvature scaled by the reduced χ².
///
/// The model depends only on |2κ₀ − κ|, so no attempt is made to decide
/// which side of critical coupling a point is on.
pub fn global_kappa0_fit(dataset: &CouplingSweepDataset) -> Result<Kappa0Fit> {
    dataset.validate()?;
    let pts = &dataset.points;
    let k_min = pts.iter().map(|p| p.kappa_total).fold(f64::INFINITY, f64::min);
    let k_max = pts.iter().map(|p| p.kappa_total).fold(0.0, f64::max);
    if k_max - k_min <= 1e-12 * k_max {
        return Err(Error::Underdetermined("all points share the same kappa".into()));
    }

    let cost = |k0: f64| -> f64 {
        pts.iter()
            .map(|p| {
                let r = p.t_res - on_resonance_transmission(k0, p.kappa_total);
                p.weight * r * r
            })
            .sum()
    };

    let grid = 2000;
    let xs: Vec<f64> = (1..=grid).map(|i| k_max * i as f64 / grid as f64).collect();
    let (best, _) = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, cost(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is non-empty");
    let lo = if best == 0 { 0.5 * xs[0] } else { xs[best - 1] };
    let hi = if best + 1 < xs.len() {
        xs[best + 1]
    } else {
        xs[best]
    };
    let mut k0 = brent_minimize(&cost, lo, hi, 1e-12);

    // Gauss–Newton polish: model m = (2k0/κ − 1)², dm/dk0 = 4(2k0/κ − 1)/κ.
    for _ in 0..20 {
        let (mut num, mut den) = (0.0, 0.0);
        for p in pts {
            let a = 2.0 * k0 / p.kappa_total - 1.0;
            let r = p.t_res - a * a;
            let j = 4.0 * a / p.kappa_total;
            num += p.weight * j * r;
            den += p.weight * j * j;
        }
        if den <= 0.0 {
            break;
        }
        let next = k0 + num / den;
        if !(next > 0.0) || cost(next) > cost(k0) {
            break;
        }
        let done = (next - k0).abs() <= 1e-15 * k0;
        k0 = next;
        if done {
            break;
        }
    }

    let s_min = cost(k0);
    let weight_sum: f64 = pts.iter().map(|p| p.weight).sum();
    let info: f64 = pts
        .iter()
        .map(|p| {
            let j = 4.0 * (2.0 * k0 / p.kappa_total - 1.0) / p.kappa_total;
            p.weight * j * j
        })
        .sum();
    let dof = (pts.len() - 1) as f64;
    let std_error = if info > 0.0 {
        (s_min / dof / info).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(Kappa0Fit {
        kappa0: k0,
        std_error,
        residual_rms: (s_min / weight_sum).sqrt(),
    })
}

/// Brent's minimisation on `[a, b]`.
fn brent_minimize(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let xm = 0.5 * (a + b);
        let tol1 = rel_tol * x.abs() + 1e-300;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    x
}

/// Configuration of a simulated beam-splitter sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSimulation {
    pub settings: usize,
    /// Smallest and largest κ_ext as multiples of κ₀ (log-spaced between).
    pub kappa_ext_ratio_range: (f64, f64),
    /// Scan span per setting in loaded linewidths (FWHM).
    pub span_linewidths: f64,
    pub samples: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SweepSimulation {
    fn default() -> Self {
        Self {
            settings: 12,
            kappa_ext_ratio_range: (0.2, 5.0),
            span_linewidths: 10.0,
            samples: 2001,
            noise_sigma: 0.01,
            seed: 1,
        }
    }
}

/// κ_ext values of a sweep, log-spaced over the configured ratio range.
pub fn sweep_kappa_ext(kappa0: f64, sim: &SweepSimulation) -> Result<Vec<f64>> {
    let (lo, hi) = sim.kappa_ext_ratio_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::domain("kappa_ext ratio range must satisfy 0 < lo <= hi"));
    }
    if sim.settings == 0 {
        return Err(Error::domain("a sweep needs at least one setting"));
    }
    if sim.settings == 1 {
        return Ok(vec![kappa0 * (lo * hi).sqrt()]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..sim.settings)
        .map(|i| kappa0 * (a + (b - a) * i as f64 / (sim.settings - 1) as f64).exp())
        .collect())
}

/// Synthesizes and fits one scan per beam-splitter setting. Setting `i` uses
/// seed `sim.seed + i`. Every setting must yield exactly one fitted dip.
pub fn simulate_coupling_sweep(base: &ResonatorParams, sim: &SweepSimulation) -> Result<Vec<FitResult>> {
    sweep_kappa_ext(base.kappa0, sim)?
        .into_iter()
        .enumerate()
        .map(|(i, kext)| {
            let p = base.with_kappa_ext(kext)?;
            let trace = synthesize_trace(
                &p,
                sim.span_linewidths * p.linewidth_hz(),
                sim.samples,
                sim.noise_sigma,
                sim.seed.wrapping_add(i as u64),
            )?;
            fit_single_dip(&trace)
        })
        .collect()
}

/// Fits the deepest dip of a trace expected to hold one resonance.
pub fn fit_single_dip(trace: &SpectrumTrace) -> Result<FitResult> {
    let guesses = detect_resonances(trace)?;
    let guess = guesses
        .iter()
        .max_by(|a, b| a.depth.total_cmp(&b.depth))
        .ok_or(Error::FlatFit)?;
    fit_lorentzian(trace, guess)
}
