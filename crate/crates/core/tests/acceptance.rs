//! Acceptance checks. Run with `cargo test -p fiberring-core --test acceptance`
//! (add `--release` for the Monte-Carlo part to finish in a few seconds).
//! Each check prints one PASS/FAIL line; the process fails if any check does.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;

use fiberring_core::cqed::{
    arrowhead_eigenvalues, collective_cooperativity, multimode_threshold, scale_with_length,
    single_atom_cooperativity, AtomParams, ScalingReference,
};
use fiberring_core::mode::{
    characteristic_residual, coupling_strength_at, electric_components, magnetic_components, solve_he11,
    FiberGeometry,
};
use fiberring_core::resonator::{
    exact_ring_transmission, finesse, fsr_from_length, power_transmission_at_detuning, quality_factor,
    round_trip_phase, ResonatorParams,
};
use fiberring_core::spectrum::{
    fit_single_dip, global_kappa0_fit, simulate_coupling_sweep, synthesize_trace, CouplingSweepDataset,
    SweepSimulation,
};
use fiberring_core::{two_pi_times, SPEED_OF_LIGHT};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KAPPA0_HZ: f64 = 0.58e6;
const FSR_HZ: f64 = 87.5e6;
const LENGTH_M: f64 = 2.35;
const G_HZ: f64 = 1.5e6;
const GAMMA_HZ: f64 = 2.6e6;
const N_ATOMS: u64 = 2000;
const WAVELENGTH_M: f64 = 852e-9;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn base_params(kappa_ext: f64) -> ResonatorParams {
    let omega0 = TAU * SPEED_OF_LIGHT / WAVELENGTH_M;
    ResonatorParams::from_fsr(two_pi_times(KAPPA0_HZ), kappa_ext, omega0, FSR_HZ, LENGTH_M).unwrap()
}

fn finesse_reproduction() -> Outcome {
    let f = finesse(two_pi_times(KAPPA0_HZ), FSR_HZ).unwrap();
    check(
        (f - 75.4).abs() <= 0.1 && (f - 75.0).abs() <= 1.0,
        format!("F = {f:.4}"),
    )
}

fn quality_factor_check() -> Outcome {
    let omega0 = TAU * SPEED_OF_LIGHT / 851e-9;
    let q = quality_factor(omega0, two_pi_times(KAPPA0_HZ)).unwrap();
    check((q / 3.0e8 - 1.0).abs() <= 0.05, format!("Q = {q:.4e}"))
}

fn cooperativity_chain() -> Outcome {
    let c0 = single_atom_cooperativity(
        two_pi_times(G_HZ),
        two_pi_times(KAPPA0_HZ),
        two_pi_times(GAMMA_HZ),
    )
    .unwrap();
    let c_coll = collective_cooperativity(c0, N_ATOMS);
    check(
        (c0 - 0.746).abs() <= 0.01 && (1480.0..=1500.0).contains(&c_coll),
        format!("C0 = {c0:.4}, C_coll = {c_coll:.1}"),
    )
}

fn multimode_threshold_check() -> Outcome {
    let reference =
        ScalingReference::from_anchors(LENGTH_M, two_pi_times(KAPPA0_HZ), two_pi_times(G_HZ), FSR_HZ, 1.5)
            .unwrap();
    let atoms = AtomParams::new(two_pi_times(GAMMA_HZ), two_pi_times(G_HZ), N_ATOMS).unwrap();
    let l_star = multimode_threshold(&reference, &atoms).unwrap();
    let g_coll_ref = two_pi_times(G_HZ) * (N_ATOMS as f64).sqrt();
    let closed = LENGTH_M * (TAU * FSR_HZ / g_coll_ref).powi(2);
    check(
        (l_star - 4.0).abs() <= 0.05 && (l_star / closed - 1.0).abs() < 1e-9,
        format!("l* = {l_star:.6} m, closed form {closed:.6} m"),
    )
}

fn fsr_consistency() -> Outcome {
    let n_g = SPEED_OF_LIGHT / (FSR_HZ * LENGTH_M);
    let fsr = fsr_from_length(LENGTH_M, n_g).unwrap();
    let rel = (fsr / FSR_HZ - 1.0).abs();
    check(
        rel <= 1e-9 && (1.44..=1.48).contains(&n_g),
        format!("FSR rel err = {rel:.2e}, n_g = {n_g:.5}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn fit_recovery() -> Outcome {
    let kappa0 = two_pi_times(KAPPA0_HZ);
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, ratio) in [("under", 0.3), ("critical", 1.0), ("over", 3.0)] {
        let p = base_params(ratio * kappa0);
        let lw = p.linewidth_hz();
        let mut k_err = Vec::new();
        let mut c_err = Vec::new();
        for seed in 0..100u64 {
            let trace = synthesize_trace(&p, 10.0 * lw, 2001, 0.01, seed).unwrap();
            let fit = fit_single_dip(&trace).unwrap();
            k_err.push((fit.kappa_total / p.kappa_total() - 1.0).abs());
            c_err.push(fit.center_hz.abs() / lw);
        }
        let (mk, mc) = (median(k_err), median(c_err));
        ok &= mk < 0.02 && mc < 0.1;
        detail.push(format!("{name}: median |dκ/κ| = {mk:.2e}, |dc|/lw = {mc:.2e}"));
    }

    let base = base_params(kappa0);
    let mut covered = 0;
    for trial in 0..100u64 {
        let sim = SweepSimulation {
            seed: 1000 * trial,
            ..SweepSimulation::default()
        };
        let fits = simulate_coupling_sweep(&base, &sim).unwrap();
        let fit = global_kappa0_fit(&CouplingSweepDataset::from_fits(&fits).unwrap()).unwrap();
        if (fit.kappa0 - kappa0).abs() <= 3.0 * fit.std_error {
            covered += 1;
        }
    }
    ok &= covered >= 95;
    detail.push(format!("global κ0 within 3σ in {covered}/100"));
    check(ok, detail.join("; "))
}

fn airy_lorentzian_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_f = 0.0;
    for loaded_f in [20.0, 25.0, 30.0, 50.0, 75.0, 100.0, 300.0, 1000.0] {
        let kappa = PI * FSR_HZ / loaded_f;
        for split in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let p = ResonatorParams::from_fsr(split * kappa, (1.0 - split) * kappa, 1e15, FSR_HZ, LENGTH_M)
                .unwrap();
            let amps = p.ring_amplitudes().unwrap();
            for i in 0..=400 {
                let delta = kappa * (i as f64 / 200.0 - 1.0);
                let hz = delta / TAU;
                let lor = power_transmission_at_detuning(&p, delta).unwrap();
                let airy = exact_ring_transmission(&amps, round_trip_phase(hz, FSR_HZ))
                    .unwrap()
                    .norm_sqr();
                let d = (lor - airy).abs();
                if d > worst {
                    worst = d;
                    worst_f = loaded_f;
                }
            }
        }
    }
    check(worst < 1e-3, format!("max |ΔT| = {worst:.3e} (at F = {worst_f})"))
}

fn mode_solver_physics() -> Outcome {
    let geom = FiberGeometry::nanofiber_852();
    let mode = solve_he11(&geom).unwrap();
    let residual = characteristic_residual(&geom, mode.n_eff).abs();
    let a = geom.radius_m;
    let inside = a * (1.0 - 1e-15);
    let (ei, eo) = (
        electric_components(&mode, &geom, inside),
        electric_components(&mode, &geom, a),
    );
    let (hi, ho) = (
        magnetic_components(&mode, &geom, inside),
        magnetic_components(&mode, &geom, a),
    );
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    let bc = [
        rel(ei.e_phi, eo.e_phi),
        rel(ei.e_z, eo.e_z),
        rel(geom.n_core.powi(2) * ei.e_r, geom.n_clad.powi(2) * eo.e_r),
        rel(hi.h_r, ho.h_r),
        rel(hi.h_phi, ho.h_phi),
        rel(hi.h_z, ho.h_z),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let ratio = coupling_strength_at(&mode, &geom, 200e-9, 1.0).unwrap();
    check(
        residual < 1e-12
            && bc < 1e-9
            && mode.n_eff > 1.0
            && mode.n_eff < 1.45
            && (ratio / 0.30 - 1.0).abs() <= 0.2,
        format!(
            "residual = {residual:.1e}, BC mismatch = {bc:.1e}, n_eff = {:.10}, g(200 nm)/g(0) = {ratio:.4}",
            mode.n_eff
        ),
    )
}

fn scaling_invariance() -> Outcome {
    let atoms = AtomParams::new(two_pi_times(GAMMA_HZ), two_pi_times(G_HZ), N_ATOMS).unwrap();
    let lengths: Vec<f64> = (0..200).map(|i| 0.5 * 1000f64.powf(i as f64 / 199.0)).collect();

    let lossless =
        ScalingReference::from_anchors(LENGTH_M, two_pi_times(KAPPA0_HZ), two_pi_times(G_HZ), FSR_HZ, 0.0)
            .unwrap();
    let c_ref = scale_with_length(&lossless, &atoms, LENGTH_M).unwrap().c0;
    let spread = lengths
        .iter()
        .map(|&l| (scale_with_length(&lossless, &atoms, l).unwrap().c0 / c_ref - 1.0).abs())
        .fold(0.0, f64::max);

    let lossy =
        ScalingReference::from_anchors(LENGTH_M, two_pi_times(KAPPA0_HZ), two_pi_times(G_HZ), FSR_HZ, 1.5)
            .unwrap();
    let c: Vec<f64> = lengths
        .iter()
        .map(|&l| scale_with_length(&lossy, &atoms, l).unwrap().c0)
        .collect();
    let decreasing = c.windows(2).all(|w| w[1] < w[0]);
    check(
        spread <= 1e-12 && decreasing,
        format!("lossless C0 spread = {spread:.1e}, lossy strictly decreasing = {decreasing}"),
    )
}

fn arrowhead_eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_dense: f64 = 0.0;
    let mut invariants_ok = true;
    for trial in 0..1000 {
        let m = 1 + trial % 11;
        let mut poles: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
        poles.sort_by(f64::total_cmp);
        poles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let apex = rng.random_range(-10.0..10.0);
        let border = rng.random_range(0.01..5.0);
        let eig = arrowhead_eigenvalues(apex, border, &poles).unwrap();
        let n = poles.len() + 1;

        let mut dense = DMatrix::<f64>::zeros(n, n);
        dense[(0, 0)] = apex;
        for (k, &p) in poles.iter().enumerate() {
            dense[(k + 1, k + 1)] = p;
            dense[(0, k + 1)] = border;
            dense[(k + 1, 0)] = border;
        }
        let mut reference: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        let scale = reference.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for (a, b) in eig.iter().zip(&reference) {
            worst_dense = worst_dense.max((a - b).abs() / scale);
        }

        let interlaced = poles
            .iter()
            .enumerate()
            .all(|(k, &p)| eig[k] <= p && p <= eig[k + 1]);
        let trace = apex + poles.iter().sum::<f64>();
        let trace_err = (eig.iter().sum::<f64>() - trace).abs() / scale;
        invariants_ok &= interlaced && trace_err < 1e-10 && eig.len() == n;
    }
    check(
        worst_dense < 1e-10 && invariants_ok,
        format!("max dense mismatch = {worst_dense:.1e}, invariants hold = {invariants_ok}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("finesse reproduction", finesse_reproduction),
        ("quality factor", quality_factor_check),
        ("cooperativity chain", cooperativity_chain),
        ("multimode threshold", multimode_threshold_check),
        ("FSR consistency", fsr_consistency),
        ("fit recovery", fit_recovery),
        ("Airy/Lorentzian equivalence", airy_lorentzian_equivalence),
        ("mode solver physics", mode_solver_physics),
        ("scaling invariance", scaling_invariance),
        ("arrowhead eigensolver", arrowhead_eigensolver),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failures += 1;
        }
        println!("[{tag}] {:>2}. {name}: {}", i + 1, out.detail);
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
