//! File formats shared by the library and the command-line tool.
//!
//! All tables are CSV with a single header row. Floats are written in their
//! shortest round-trip form, so parsing an emitted file reproduces the values
//! bit for bit. Trace files may start with `# key=value` metadata lines.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cqed::ScalingPoint;
use crate::mode::ProfileSample;
use crate::spectrum::{CouplingSweepDataset, FitResult, SpectrumTrace, SweepPoint};
use crate::{over_two_pi, Error, Result};

pub const TRACE_HEADER: &str = "detuning_hz,transmission";
pub const PROFILE_HEADER: &str = "r_m,phi_rad,intensity";
pub const SCALING_HEADER: &str =
    "length_m,g_over_2pi_hz,g_coll_over_2pi_hz,fsr_hz,kappa0_over_2pi_hz,c0,c_coll";
pub const DATASET_HEADER: &str = "kappa_total_rad_per_s,t_res,weight";
pub const EIGEN_HEADER: &str = "index,frequency_over_2pi_hz,gap_to_next_over_2pi_hz";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    detuning_hz: f64,
    transmission: f64,
}

/// One row of the length-scaling table. Rates are reported as `rate/2π` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub length_m: f64,
    pub g_over_2pi_hz: f64,
    pub g_coll_over_2pi_hz: f64,
    pub fsr_hz: f64,
    pub kappa0_over_2pi_hz: f64,
    pub c0: f64,
    pub c_coll: f64,
}

impl From<&ScalingPoint> for ScalingRow {
    fn from(p: &ScalingPoint) -> Self {
        Self {
            length_m: p.length_m,
            g_over_2pi_hz: over_two_pi(p.g),
            g_coll_over_2pi_hz: over_two_pi(p.g_coll),
            fsr_hz: p.fsr_hz,
            kappa0_over_2pi_hz: over_two_pi(p.kappa0),
            c0: p.c0,
            c_coll: p.c_coll,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct DatasetRow {
    kappa_total_rad_per_s: f64,
    t_res: f64,
    weight: f64,
}

/// Polariton eigenfrequency with the gap to the next one up (absent for the
/// highest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub index: usize,
    pub frequency_over_2pi_hz: f64,
    pub gap_to_next_over_2pi_hz: Option<f64>,
}

/// Rows for a sorted list of angular eigenfrequencies.
pub fn eigen_rows(eigenfrequencies: &[f64]) -> Vec<EigenRow> {
    eigenfrequencies
        .iter()
        .enumerate()
        .map(|(i, &w)| EigenRow {
            index: i,
            frequency_over_2pi_hz: over_two_pi(w),
            gap_to_next_over_2pi_hz: eigenfrequencies.get(i + 1).map(|n| over_two_pi(n - w)),
        })
        .collect()
}

/// Report written next to a fitted trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// SHA-256 of the trace file the fit was computed from.
    pub input_sha256: String,
    /// Fit of the resonance closest to zero detuning.
    #[serde(flatten)]
    pub fit: FitResult,
    /// Fits of any further resonances in the scan, in detuning order.
    #[serde(default)]
    pub other_resonances: Vec<FitResult>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_rows<T: Serialize>(prefix: String, rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(prefix.into_bytes());
    for row in rows {
        w.serialize(row).map_err(|e| Error::domain(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::domain(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::domain(e.to_string()))
}

fn read_rows<T: DeserializeOwned>(text: &str, header: &str) -> Result<Vec<T>> {
    let skipped = text.lines().take_while(|l| l.starts_with('#')).count();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = rdr
        .headers()
        .map_err(|e| parse_error(&e))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(Error::Parse {
            line: skipped + 1,
            msg: format!("expected header `{header}`, found `{found}`"),
        });
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| parse_error(&e)))
        .collect()
}

fn parse_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// Trace CSV with `noise_sigma`, `seed` and any warnings as metadata.
pub fn write_trace_csv(trace: &SpectrumTrace) -> Result<String> {
    trace.validate()?;
    let mut prefix = format!("# units=hz\n# noise_sigma={}\n", trace.noise_sigma);
    if let Some(seed) = trace.seed {
        prefix.push_str(&format!("# seed={seed}\n"));
    }
    for w in &trace.warnings {
        prefix.push_str(&format!("# warning={}\n", w.replace('\n', " ")));
    }
    write_rows(
        prefix,
        trace
            .detunings
            .iter()
            .zip(&trace.transmissions)
            .map(|(&d, &t)| TraceRow {
                detuning_hz: d,
                transmission: t,
            }),
    )
}

pub fn read_trace_csv(text: &str) -> Result<SpectrumTrace> {
    let mut noise_sigma = 0.0;
    let mut seed = None;
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate().take_while(|(_, l)| l.starts_with('#')) {
        let Some((key, value)) = line[1..].split_once('=') else {
            continue;
        };
        let bad = |msg: String| Error::Parse { line: i + 1, msg };
        match key.trim() {
            "noise_sigma" => {
                noise_sigma = value
                    .trim()
                    .parse()
                    .map_err(|e| bad(format!("noise_sigma: {e}")))?
            }
            "seed" => seed = Some(value.trim().parse().map_err(|e| bad(format!("seed: {e}")))?),
            "warning" => warnings.push(value.to_string()),
            "units" if value.trim() != "hz" => {
                return Err(bad(format!("unsupported units `{}`", value.trim())))
            }
            _ => {}
        }
    }
    let rows: Vec<TraceRow> = read_rows(text, TRACE_HEADER)?;
    let trace = SpectrumTrace {
        detunings: rows.iter().map(|r| r.detuning_hz).collect(),
        transmissions: rows.iter().map(|r| r.transmission).collect(),
        noise_sigma,
        seed,
        warnings,
    };
    trace.validate()?;
    Ok(trace)
}

pub fn write_profile_csv(samples: &[ProfileSample]) -> Result<String> {
    write_rows(String::new(), samples)
}

pub fn read_profile_csv(text: &str) -> Result<Vec<ProfileSample>> {
    read_rows(text, PROFILE_HEADER)
}

pub fn write_scaling_csv(points: &[ScalingPoint]) -> Result<String> {
    write_rows(String::new(), points.iter().map(ScalingRow::from))
}

pub fn read_scaling_csv(text: &str) -> Result<Vec<ScalingRow>> {
    read_rows(text, SCALING_HEADER)
}

pub fn write_dataset_csv(dataset: &CouplingSweepDataset) -> Result<String> {
    write_rows(
        String::new(),
        dataset.points.iter().map(|p| DatasetRow {
            kappa_total_rad_per_s: p.kappa_total,
            t_res: p.t_res,
            weight: p.weight,
        }),
    )
}

/// Parses a sweep table without validating it, so that a one-point table can
/// still be loaded and reported as underdetermined by the fit.
pub fn read_dataset_csv(text: &str) -> Result<CouplingSweepDataset> {
    let rows: Vec<DatasetRow> = read_rows(text, DATASET_HEADER)?;
    Ok(CouplingSweepDataset {
        points: rows
            .into_iter()
            .map(|r| SweepPoint {
                kappa_total: r.kappa_total_rad_per_s,
                t_res: r.t_res,
                weight: r.weight,
            })
            .collect(),
    })
}

pub fn write_eigen_csv(rows: &[EigenRow]) -> Result<String> {
    write_rows(String::new(), rows)
}

pub fn read_eigen_csv(text: &str) -> Result<Vec<EigenRow>> {
    read_rows(text, EIGEN_HEADER)
}

pub fn write_fit_report_json(report: &FitReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::domain(e.to_string()))
}

pub fn read_fit_report_json(text: &str) -> Result<FitReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })
}
