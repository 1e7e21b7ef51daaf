use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fiberring_core::cqed::{
    length_sweep, multimode_polariton_spectrum, multimode_threshold, scale_with_length,
};
use fiberring_core::io::{
    eigen_rows, sha256_hex, write_dataset_csv, write_eigen_csv, write_fit_report_json, write_profile_csv,
    write_scaling_csv, write_trace_csv, FitReport,
};
use fiberring_core::mode::{
    coupling_strength_at, evanescent_decay_length, profile_grid, solve_he11, surface_peak_azimuth,
};
use fiberring_core::resonator::{finesse, quality_factor};
use fiberring_core::spectrum::{
    fit_all, global_kappa0_fit, simulate_coupling_sweep, sweep_kappa_ext, synthesize_trace,
    CouplingSweepDataset, SweepPoint,
};
use fiberring_core::{over_two_pi, two_pi_times, Error};
use serde_json::json;

use crate::config::{Models, RunConfig};
use crate::output::{to_json, write_atomic, Report};
use crate::{MultimodeArgs, ScalingArgs, Span, SpectrumArgs, SweepArgs};

fn mhz(rad_per_s: f64) -> f64 {
    over_two_pi(rad_per_s) * 1e-6
}

pub fn spectrum(config: &RunConfig, models: &Models, args: &SpectrumArgs, out: &Path) -> Result<Report> {
    let mut params = models.resonator;
    if let Some(regime) = args.regime {
        params = params.with_kappa_ext(regime.kappa_ext_ratio() * params.kappa0)?;
    }
    let span_hz = match args.span {
        Some(Span::Hz(v)) => v,
        Some(Span::Fsr(n)) => n * params.fsr_hz,
        Some(Span::Linewidths(n)) => n * params.linewidth_hz(),
        None => config.spectrum.span_linewidths * params.linewidth_hz(),
    };
    let samples = args.samples.map_or(config.spectrum.samples, |s| s as usize);
    let noise = args.noise.unwrap_or(config.spectrum.noise_sigma);
    let seed = args.seed.unwrap_or(config.spectrum.seed);

    let trace = synthesize_trace(&params, span_hz, samples, noise, seed)?;
    let csv = write_trace_csv(&trace)?;
    let mut outputs = vec![write_atomic(out, "trace.csv", &csv)?];
    let mut warnings = trace.warnings.clone();
    let mut text = format!(
        "trace: {samples} samples over {:.4} MHz, κ/2π = {:.4} MHz ({}), noise σ = {noise}, seed {seed}\n",
        span_hz * 1e-6,
        mhz(params.kappa_total()),
        params.regime(fiberring_core::resonator::DEFAULT_CRITICAL_TOL)?,
    );

    let mut fit_json = serde_json::Value::Null;
    if args.fit {
        let mut fits = fit_all(&trace)?;
        if fits.is_empty() {
            bail!("no resonance dip found in the synthesized trace");
        }
        fits.sort_by(|a, b| a.center_hz.total_cmp(&b.center_hz));
        let primary = fits
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.center_hz.abs().total_cmp(&b.1.center_hz.abs()))
            .map(|(i, _)| i)
            .expect("fits is non-empty");
        for f in fits.iter().filter(|f| !f.converged) {
            warnings.push(format!(
                "fit at {:.4} MHz stopped after {} iterations without converging",
                f.center_hz * 1e-6,
                f.iterations
            ));
        }
        for f in &fits {
            let u = &f.uncertainties;
            writeln!(
                text,
                "resonance at {:+.4} MHz: κ/2π = {:.4} ± {:.4} MHz, T_r = {:.3e} ± {:.1e}, baseline {:.4}",
                f.center_hz * 1e-6,
                mhz(f.kappa_total),
                mhz(u.kappa_total),
                f.t_res,
                u.t_res,
                f.baseline
            )?;
        }
        let fit = fits.remove(primary);
        let report = FitReport {
            input_sha256: sha256_hex(csv.as_bytes()),
            fit,
            other_resonances: fits,
            warnings: warnings.clone(),
        };
        outputs.push(write_atomic(
            out,
            "fit.json",
            &(write_fit_report_json(&report)? + "\n"),
        )?);
        fit_json = serde_json::to_value(&report)?;
    }

    Ok(Report {
        command: "spectrum",
        outputs,
        warnings,
        results: json!({
            "span_hz": span_hz,
            "samples": samples,
            "noise_sigma": noise,
            "seed": seed,
            "kappa0_over_2pi_hz": over_two_pi(params.kappa0),
            "kappa_ext_over_2pi_hz": over_two_pi(params.kappa_ext),
            "fit": fit_json,
        }),
        text,
    })
}

pub fn coupling_sweep(models: &Models, args: &SweepArgs, out: &Path) -> Result<Report> {
    let mut sim = models.sweep;
    if let Some(n) = args.settings {
        sim.settings = n as usize;
    }
    if let Some(s) = args.noise {
        sim.noise_sigma = s;
    }
    if let Some(s) = args.seed {
        sim.seed = s;
    }
    let base = &models.resonator;
    let kappa_ext = sweep_kappa_ext(base.kappa0, &sim)?;
    let fits = simulate_coupling_sweep(base, &sim)?;
    let mut warnings = Vec::new();

    let dataset = match CouplingSweepDataset::from_fits(&fits) {
        Ok(d) => d,
        Err(Error::Underdetermined(_)) => CouplingSweepDataset {
            points: fits
                .iter()
                .map(|f| SweepPoint {
                    kappa_total: f.kappa_total,
                    t_res: f.normalized_t_res(),
                    weight: 1.0,
                })
                .collect(),
        },
        Err(e) => return Err(e.into()),
    };
    let mut outputs = vec![write_atomic(out, "sweep.csv", &write_dataset_csv(&dataset)?)?];

    let mut text = String::new();
    for (k, f) in kappa_ext.iter().zip(&fits) {
        writeln!(
            text,
            "κ_ext/2π = {:.4} MHz: κ/2π = {:.4} MHz, T_r = {:.4}",
            mhz(*k),
            mhz(f.kappa_total),
            f.normalized_t_res()
        )?;
    }

    let global = match global_kappa0_fit(&dataset) {
        Ok(fit) => {
            let f = finesse(fit.kappa0, base.fsr_hz)?;
            let q = quality_factor(base.omega0, fit.kappa0)?;
            writeln!(
                text,
                "κ₀/2π = {:.4} ± {:.4} MHz (configured {:.4} MHz), F = {f:.2}, Q = {q:.3e}",
                mhz(fit.kappa0),
                mhz(fit.std_error),
                mhz(base.kappa0)
            )?;
            json!({
                "kappa0_over_2pi_hz": over_two_pi(fit.kappa0),
                "std_error_over_2pi_hz": over_two_pi(fit.std_error),
                "residual_rms": fit.residual_rms,
                "finesse": f,
                "quality_factor": q,
            })
        }
        Err(Error::Underdetermined(msg)) => {
            warnings.push(format!("global κ₀ fit is underdetermined: {msg}"));
            serde_json::Value::Null
        }
        Err(e) => return Err(e.into()),
    };

    let settings: Vec<_> = kappa_ext
        .iter()
        .zip(&fits)
        .map(|(k, f)| {
            json!({
                "kappa_ext_over_2pi_hz": over_two_pi(*k),
                "kappa_total_over_2pi_hz": over_two_pi(f.kappa_total),
                "t_res": f.normalized_t_res(),
                "converged": f.converged,
            })
        })
        .collect();
    let results = json!({
        "settings": settings,
        "noise_sigma": sim.noise_sigma,
        "seed": sim.seed,
        "configured_kappa0_over_2pi_hz": over_two_pi(base.kappa0),
        "global_fit": global,
        "warnings": warnings,
    });
    outputs.push(write_atomic(out, "kappa0.json", &to_json(&results)?)?);

    Ok(Report {
        command: "coupling-sweep",
        outputs,
        warnings,
        results,
        text,
    })
}

pub fn mode(config: &RunConfig, models: &Models, out: &Path) -> Result<Report> {
    let geom = &models.geometry;
    let g = &config.geometry;
    let mode = solve_he11(geom)?;
    let profile = profile_grid(
        &mode,
        geom,
        g.profile_r_max_m,
        g.profile_radial_points,
        g.profile_azimuthal_points,
    )?;
    let mut outputs = vec![write_atomic(out, "profile.csv", &write_profile_csv(&profile)?)?];

    let g_surface = two_pi_times(g.g_surface_over_2pi_hz);
    let g_atom = coupling_strength_at(&mode, geom, g.atom_distance_m, g_surface)?;
    let mut warnings = Vec::new();
    if !mode.single_mode {
        warnings.push(format!(
            "V = {:.3} exceeds the single-mode cutoff; higher-order modes are also guided",
            mode.v_number
        ));
    }
    let results = json!({
        "v_number": mode.v_number,
        "single_mode": mode.single_mode,
        "n_eff": mode.n_eff,
        "beta_per_m": mode.beta,
        "h_per_m": mode.h,
        "q_per_m": mode.q,
        "decay_length_m": evanescent_decay_length(&mode),
        "characteristic_residual": mode.residual,
        "surface_peak_azimuth_rad": surface_peak_azimuth(&mode, geom),
        "g_surface_over_2pi_hz": g.g_surface_over_2pi_hz,
        "atom_distance_m": g.atom_distance_m,
        "g_at_distance_over_2pi_hz": over_two_pi(g_atom),
    });
    outputs.push(write_atomic(out, "mode.json", &to_json(&results)?)?);

    let text = format!(
        "V = {:.4}, n_eff = {:.10}, decay length = {:.1} nm\ng/2π at {:.0} nm from the surface = {:.4} MHz (surface {:.4} MHz)\n",
        mode.v_number,
        mode.n_eff,
        evanescent_decay_length(&mode) * 1e9,
        g.atom_distance_m * 1e9,
        mhz(g_atom),
        g.g_surface_over_2pi_hz * 1e-6
    );
    Ok(Report {
        command: "mode",
        outputs,
        warnings,
        results,
        text,
    })
}

pub fn scaling(config: &RunConfig, models: &Models, args: &ScalingArgs, out: &Path) -> Result<Report> {
    let s = &config.scaling;
    let l_min = args.lmin.unwrap_or(s.l_min_m);
    let l_max = args.lmax.unwrap_or(s.l_max_m);
    let points = args.points.map_or(s.points, |p| p as usize);
    if l_min > l_max {
        bail!("l_min ({l_min} m) exceeds l_max ({l_max} m)");
    }
    let reference = &models.scaling;
    let sweep = length_sweep(reference, &models.atoms, l_min, l_max, points, s.log_spacing)?;
    let mut outputs = vec![write_atomic(out, "scaling.csv", &write_scaling_csv(&sweep)?)?];
    let mut warnings = Vec::new();

    let invalid = sweep.iter().filter(|p| !p.lorentzian_valid()).count();
    if invalid > 0 {
        warnings.push(format!(
            "{invalid} of {} lengths have finesse below the Lorentzian validity bound",
            sweep.len()
        ));
    }

    let anchor = scale_with_length(reference, &models.atoms, reference.l_ref)?;
    let closed_form = reference.l_ref * (std::f64::consts::TAU * reference.fsr_ref / anchor.g_coll).powi(2);
    let threshold = match multimode_threshold(reference, &models.atoms) {
        Ok(l) => Some(l),
        Err(e @ Error::NoThreshold { .. }) => {
            warnings.push(e.to_string());
            None
        }
        Err(e) => return Err(e).context("multimode threshold"),
    };

    let results = json!({
        "multimode_threshold_m": threshold,
        "closed_form_threshold_m": closed_form,
        "taper_loss_db": reference.taper_loss_db,
        "alpha_fiber_db_per_km": reference.alpha_fiber_db_per_km,
        "reference": {
            "length_m": anchor.length_m,
            "g_over_2pi_hz": over_two_pi(anchor.g),
            "g_coll_over_2pi_hz": over_two_pi(anchor.g_coll),
            "c0": anchor.c0,
            "c_coll": anchor.c_coll,
            "finesse": anchor.finesse,
        },
        "rows": sweep.len(),
    });
    outputs.push(write_atomic(out, "threshold.json", &to_json(&results)?)?);

    let mut text = format!(
        "{} lengths from {l_min} m to {l_max} m; at {} m: C0 = {:.4}, C_coll = {:.1}\n",
        sweep.len(),
        reference.l_ref,
        anchor.c0,
        anchor.c_coll
    );
    match threshold {
        Some(l) => writeln!(
            text,
            "multimode threshold l* = {l:.4} m (closed form {closed_form:.4} m)"
        )?,
        None => writeln!(text, "no multimode threshold below the search limit")?,
    }
    Ok(Report {
        command: "scaling",
        outputs,
        warnings,
        results,
        text,
    })
}

pub fn multimode(config: &RunConfig, models: &Models, args: &MultimodeArgs, out: &Path) -> Result<Report> {
    let m = &config.multimode;
    let modes = args.modes.unwrap_or(m.modes);
    let length = args.length.unwrap_or(m.length_m);
    let point = scale_with_length(&models.scaling, &models.atoms, length)?;
    let g_coll = args.gcoll.map_or(point.g_coll, two_pi_times);
    let fsr_hz = args.fsr.unwrap_or(point.fsr_hz);
    let detuning = two_pi_times(args.detuning.unwrap_or(m.detuning_offset_over_2pi_hz));

    let eig = multimode_polariton_spectrum(g_coll, fsr_hz, modes, detuning)?;
    let rows = eigen_rows(&eig);
    let outputs = vec![write_atomic(out, "polaritons.csv", &write_eigen_csv(&rows)?)?];

    let gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap_to_next_over_2pi_hz).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let results = json!({
        "modes": modes,
        "length_m": length,
        "g_coll_over_2pi_hz": over_two_pi(g_coll),
        "fsr_hz": fsr_hz,
        "frequencies_over_2pi_hz": rows.iter().map(|r| r.frequency_over_2pi_hz).collect::<Vec<_>>(),
        "min_gap_over_2pi_hz": min_gap,
        "max_gap_over_2pi_hz": max_gap,
        "gap_ratio": max_gap / min_gap,
    });

    let mut text = format!(
        "{modes} modes, g_coll/2π = {:.3} MHz, FSR = {:.3} MHz\n",
        mhz(g_coll),
        fsr_hz * 1e-6
    );
    for r in &rows {
        writeln!(
            text,
            "  {:>3}  {:+12.4} MHz",
            r.index,
            r.frequency_over_2pi_hz * 1e-6
        )?;
    }
    writeln!(
        text,
        "gaps from {:.4} to {:.4} MHz",
        min_gap * 1e-6,
        max_gap * 1e-6
    )?;
    Ok(Report {
        command: "multimode",
        outputs,
        warnings: Vec::new(),
        results,
        text,
    })
}
