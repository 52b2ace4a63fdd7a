//! CSV and JSON emission. Floats are written as `{:.16e}`, which carries 17
//! significant digits and reloads bit-identically.

use std::path::Path;

use dicke_niba::analysis::{SweepRow, ScalingReport};
use dicke_niba::fcs::CumulantSet;
use dicke_niba::HalfInt;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const STEADY_HEADER: [&str; 2] = ["m", "P"];
pub const CUMULANT_HEADER: [&str; 5] = ["J", "S", "FF", "err_J", "err_S"];
pub const SWEEP_HEADER: [&str; 7] = ["N", "alpha", "J", "S", "FF", "err_J", "err_S"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(CliError::csv)?;
    for row in rows {
        w.write_record(row).map_err(CliError::csv)?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.to_string()))
}

/// `m,P`; m is a half-integer and printed exactly.
pub fn steady_csv(m: &[HalfInt], populations: &[f64]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &STEADY_HEADER,
        m.iter().zip(populations).map(|(m, &p)| [format!("{}", m.value()), num(p)]),
    )
}

fn cumulant_fields(c: &CumulantSet) -> [String; 5] {
    [c.flux, c.noise, c.ff, c.err_flux, c.err_noise].map(num)
}

pub fn cumulants_csv(c: &CumulantSet) -> Result<Vec<u8>, CliError> {
    csv_bytes(&CUMULANT_HEADER, [cumulant_fields(c)])
}

/// One row per (N, α) in sweep order; failed points carry NaN.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            let mut fields = vec![r.n.to_string(), num(r.alpha)];
            fields.extend(cumulant_fields(&r.cumulants));
            fields
        }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SteadyRecord {
    pub m: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct CumulantRecord {
    #[serde(rename = "J")]
    pub flux: f64,
    #[serde(rename = "S")]
    pub noise: f64,
    #[serde(rename = "FF")]
    pub ff: f64,
    #[serde(rename = "err_J")]
    pub err_flux: f64,
    #[serde(rename = "err_S")]
    pub err_noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "N")]
    pub n: u32,
    pub alpha: f64,
    #[serde(flatten)]
    pub cumulants: CumulantRecord,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv)?;
    let found: Vec<String> = r.headers().map_err(CliError::csv)?.iter().map(str::to_string).collect();
    if found != header {
        return Err(CliError::Csv(format!("{}: header {found:?}, expected {header:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(CliError::csv)).collect()
}

pub fn read_steady(path: &Path) -> Result<Vec<SteadyRecord>, CliError> {
    read_csv(path, &STEADY_HEADER)
}

pub fn read_cumulants(path: &Path) -> Result<CumulantRecord, CliError> {
    let rows: Vec<CumulantRecord> = read_csv(path, &CUMULANT_HEADER)?;
    match rows.as_slice() {
        [row] => Ok(*row),
        _ => Err(CliError::Csv(format!("{}: expected one row, found {}", path.display(), rows.len()))),
    }
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRecord>, CliError> {
    read_csv(path, &SWEEP_HEADER)
}

/// Optimum at one size, with the flux and noise evaluated there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    #[serde(rename = "N")]
    pub n: u32,
    pub alpha_opt: f64,
    pub objective_opt: f64,
    #[serde(rename = "J_opt")]
    pub flux_opt: Option<f64>,
    #[serde(rename = "S_opt")]
    pub noise_opt: Option<f64>,
    pub bracket: [f64; 2],
    pub evaluations: usize,
}

/// Fixed field set of the scaling report. `gamma` is the exponent of
/// α_opt ∝ N^{-gamma}; the value fit is objective_opt = slope N + intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingJson {
    pub objective: String,
    pub gamma: f64,
    pub gamma_stderr: f64,
    pub r_squared: f64,
    pub prefactor: f64,
    pub gamma_without_smallest: Option<f64>,
    pub gamma_with_single_qubit: Option<f64>,
    pub value_slope: f64,
    pub value_intercept: f64,
    pub value_r_squared: f64,
    pub points: Vec<ScalingEntry>,
}

impl ScalingJson {
    /// `at_opt` holds the cumulants at each optimum, if they could be computed.
    pub fn new(report: &ScalingReport, at_opt: &[Option<CumulantSet>]) -> Self {
        let points = report
            .points
            .iter()
            .zip(at_opt)
            .map(|(p, c)| ScalingEntry {
                n: p.n,
                alpha_opt: p.opt.alpha_opt,
                objective_opt: p.opt.value_opt,
                flux_opt: c.as_ref().map(|c| c.flux),
                noise_opt: c.as_ref().map(|c| c.noise),
                bracket: [p.opt.bracket.0, p.opt.bracket.1],
                evaluations: p.opt.evaluations,
            })
            .collect();
        Self {
            objective: report.objective.name().to_string(),
            gamma: report.alpha_fit.gamma,
            gamma_stderr: report.alpha_fit.gamma_stderr,
            r_squared: report.alpha_fit.r_squared,
            prefactor: report.alpha_fit.prefactor,
            gamma_without_smallest: report.gamma_without_smallest,
            gamma_with_single_qubit: report.gamma_with_single_qubit,
            value_slope: report.value_fit.slope,
            value_intercept: report.value_fit.intercept,
            value_r_squared: report.value_fit.r_squared,
            points,
        }
    }
}
