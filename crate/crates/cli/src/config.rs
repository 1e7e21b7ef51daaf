use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fiberring_core::cqed::{AtomParams, ScalingReference};
use fiberring_core::mode::FiberGeometry;
use fiberring_core::resonator::ResonatorParams;
use fiberring_core::spectrum::SweepSimulation;
use fiberring_core::{two_pi_times, SPEED_OF_LIGHT};
use serde::Deserialize;

pub const PAPER_ANCHORS: &str = include_str!("../config/paper_anchors.toml");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub resonator: ResonatorBlock,
    pub atoms: AtomsBlock,
    pub geometry: GeometryBlock,
    pub spectrum: SpectrumBlock,
    pub coupling_sweep: SweepBlock,
    pub scaling: ScalingBlock,
    pub multimode: MultimodeBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorBlock {
    pub kappa0_over_2pi_hz: f64,
    pub kappa_ext_over_2pi_hz: f64,
    pub fsr_hz: f64,
    pub length_m: f64,
    pub wavelength_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsBlock {
    pub gamma_over_2pi_hz: f64,
    pub g_over_2pi_hz: f64,
    pub n_atoms: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub radius_m: f64,
    pub wavelength_m: f64,
    pub n_core: f64,
    pub n_clad: f64,
    pub g_surface_over_2pi_hz: f64,
    pub atom_distance_m: f64,
    pub profile_r_max_m: f64,
    pub profile_radial_points: usize,
    pub profile_azimuthal_points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub span_linewidths: f64,
    pub samples: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub settings: usize,
    pub kappa_ext_min_ratio: f64,
    pub kappa_ext_max_ratio: f64,
    pub span_linewidths: f64,
    pub samples: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingBlock {
    pub alpha_fiber_db_per_km: f64,
    pub l_min_m: f64,
    pub l_max_m: f64,
    pub points: usize,
    pub log_spacing: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultimodeBlock {
    pub modes: usize,
    pub length_m: f64,
    pub detuning_offset_over_2pi_hz: f64,
}

/// Physical models built from a config, all validated.
#[derive(Debug, Clone)]
pub struct Models {
    pub resonator: ResonatorParams,
    pub atoms: AtomParams,
    pub geometry: FiberGeometry,
    pub scaling: ScalingReference,
    pub sweep: SweepSimulation,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let (text, origin) = match path {
            Some(p) => (
                std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?,
                p.display().to_string(),
            ),
            None => (
                PAPER_ANCHORS.to_string(),
                "built-in paper_anchors.toml".to_string(),
            ),
        };
        toml::from_str(&text).with_context(|| format!("parsing {origin}"))
    }

    /// Builds and validates every model block, so that a bad value anywhere
    /// in the file is reported before any command runs.
    pub fn models(&self) -> Result<Models> {
        let r = &self.resonator;
        let resonator = ResonatorParams::from_fsr(
            two_pi_times(r.kappa0_over_2pi_hz),
            two_pi_times(r.kappa_ext_over_2pi_hz),
            angular_frequency(r.wavelength_m)?,
            r.fsr_hz,
            r.length_m,
        )
        .context("[resonator]")?;

        let a = &self.atoms;
        let atoms = AtomParams::new(
            two_pi_times(a.gamma_over_2pi_hz),
            two_pi_times(a.g_over_2pi_hz),
            a.n_atoms,
        )
        .context("[atoms]")?;

        let g = &self.geometry;
        let geometry =
            FiberGeometry::new(g.radius_m, g.wavelength_m, g.n_core, g.n_clad).context("[geometry]")?;
        check(
            g.g_surface_over_2pi_hz > 0.0,
            "[geometry] g_surface_over_2pi_hz must be positive",
        )?;
        check(
            g.atom_distance_m >= 0.0,
            "[geometry] atom_distance_m must be >= 0",
        )?;
        check(
            g.profile_r_max_m > 0.0,
            "[geometry] profile_r_max_m must be positive",
        )?;
        check(
            g.profile_radial_points >= 2 && g.profile_azimuthal_points >= 1,
            "[geometry] profile grid needs >= 2 radial and >= 1 azimuthal points",
        )?;

        let s = &self.scaling;
        let scaling = ScalingReference::from_anchors(
            r.length_m,
            resonator.kappa0,
            atoms.g_single,
            r.fsr_hz,
            s.alpha_fiber_db_per_km,
        )
        .context("[scaling]")?;
        check(
            s.l_min_m > 0.0 && s.l_max_m >= s.l_min_m,
            "[scaling] need 0 < l_min_m <= l_max_m",
        )?;
        check(s.points >= 1, "[scaling] points must be >= 1")?;

        let sp = &self.spectrum;
        check(
            sp.span_linewidths > 0.0,
            "[spectrum] span_linewidths must be positive",
        )?;
        check(sp.samples >= 8, "[spectrum] samples must be >= 8")?;
        check(sp.noise_sigma >= 0.0, "[spectrum] noise_sigma must be >= 0")?;

        let c = &self.coupling_sweep;
        check(c.settings >= 1, "[coupling_sweep] settings must be >= 1")?;
        check(
            c.kappa_ext_min_ratio > 0.0 && c.kappa_ext_max_ratio >= c.kappa_ext_min_ratio,
            "[coupling_sweep] need 0 < kappa_ext_min_ratio <= kappa_ext_max_ratio",
        )?;
        check(
            c.span_linewidths > 0.0,
            "[coupling_sweep] span_linewidths must be positive",
        )?;
        check(c.samples >= 8, "[coupling_sweep] samples must be >= 8")?;
        check(c.noise_sigma >= 0.0, "[coupling_sweep] noise_sigma must be >= 0")?;
        let sweep = SweepSimulation {
            settings: c.settings,
            kappa_ext_ratio_range: (c.kappa_ext_min_ratio, c.kappa_ext_max_ratio),
            span_linewidths: c.span_linewidths,
            samples: c.samples,
            noise_sigma: c.noise_sigma,
            seed: c.seed,
        };

        let m = &self.multimode;
        check(!m.modes.is_multiple_of(2), "[multimode] modes must be odd")?;
        check(m.length_m > 0.0, "[multimode] length_m must be positive")?;
        check(
            m.detuning_offset_over_2pi_hz.is_finite(),
            "[multimode] detuning offset must be finite",
        )?;

        Ok(Models {
            resonator,
            atoms,
            geometry,
            scaling,
            sweep,
        })
    }
}

fn angular_frequency(wavelength_m: f64) -> Result<f64> {
    check(wavelength_m > 0.0, "[resonator] wavelength_m must be positive")?;
    Ok(two_pi_times(SPEED_OF_LIGHT / wavelength_m))
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        anyhow::bail!("{msg}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_validates() {
        let cfg = RunConfig::load(None).unwrap();
        let m = cfg.models().unwrap();
        assert!((m.resonator.loaded_finesse() - 75.43 / 2.0).abs() < 0.01);
        assert!((m.scaling.taper_loss_db - 0.358).abs() < 1e-3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = PAPER_ANCHORS.replace("[atoms]", "[atoms]\ng_hz = 1.0");
        let err = toml::from_str::<RunConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("g_hz"));
    }

    #[test]
    fn invalid_geometry_rejected() {
        let text = PAPER_ANCHORS.replace("n_clad = 1.0", "n_clad = 1.5");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert!(cfg.models().is_err());
    }
}
