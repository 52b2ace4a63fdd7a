//! Run configuration: a flat TOML document of physical, sweep, solver and
//! output keys. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use dicke_niba::analysis::OptOptions;
use dicke_niba::fcs::FdOptions;
use dicke_niba::{BathLabel, BathParams, Params, SystemParams};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_OMEGA_C: f64 = 10.0;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub eps0: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "alpha_S")]
    pub alpha_source: Option<f64>,
    #[serde(rename = "alpha_D")]
    pub alpha_drain: Option<f64>,
    pub omega_c: Option<f64>,
    #[serde(rename = "omega_c_S")]
    pub omega_c_source: Option<f64>,
    #[serde(rename = "omega_c_D")]
    pub omega_c_drain: Option<f64>,
    #[serde(rename = "T_S")]
    pub t_source: Option<f64>,
    #[serde(rename = "T_D")]
    pub t_drain: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_points: Option<usize>,
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<u32>>,
    pub fd_step: Option<f64>,
    pub tolerance: Option<f64>,
    pub out_path: Option<PathBuf>,
}

fn require<T: Copy>(value: Option<T>, key: &'static str) -> Result<T, CliError> {
    value.ok_or(CliError::MissingKey(key))
}

/// Either the shared key or both per-bath keys, never a mix.
fn per_bath(
    shared: Option<f64>,
    source: Option<f64>,
    drain: Option<f64>,
    keys: [&'static str; 3],
    default: Option<f64>,
) -> Result<(f64, f64), CliError> {
    match (shared, source, drain) {
        (Some(v), None, None) => Ok((v, v)),
        (None, Some(s), Some(d)) => Ok((s, d)),
        (Some(_), Some(_), _) => Err(CliError::Conflict(keys[0], keys[1])),
        (Some(_), None, Some(_)) => Err(CliError::Conflict(keys[0], keys[2])),
        (None, Some(_), None) => Err(CliError::MissingKey(keys[2])),
        (None, None, Some(_)) => Err(CliError::MissingKey(keys[1])),
        (None, None, None) => default.map(|v| (v, v)).ok_or(CliError::MissingKey(keys[0])),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn temperatures(&self) -> Result<(f64, f64), CliError> {
        Ok((require(self.t_source, "T_S")?, require(self.t_drain, "T_D")?))
    }

    fn cutoffs(&self) -> Result<(f64, f64), CliError> {
        per_bath(
            self.omega_c,
            self.omega_c_source,
            self.omega_c_drain,
            ["omega_c", "omega_c_S", "omega_c_D"],
            Some(DEFAULT_OMEGA_C),
        )
    }

    fn build(&self, n: u32, alphas: (f64, f64)) -> Result<Params, CliError> {
        let (t_s, t_d) = self.temperatures()?;
        let (wc_s, wc_d) = self.cutoffs()?;
        Ok(Params::new(
            SystemParams::with_unit_tunneling(n, self.eps0.unwrap_or(0.0))?,
            BathParams::new(BathLabel::Source, alphas.0, wc_s, t_s)?,
            BathParams::new(BathLabel::Drain, alphas.1, wc_d, t_d)?,
        )?)
    }

    /// Single-point parameters; needs N and a coupling.
    pub fn params(&self) -> Result<Params, CliError> {
        let n = require(self.n, "N")?;
        let alphas = per_bath(
            self.alpha,
            self.alpha_source,
            self.alpha_drain,
            ["alpha", "alpha_S", "alpha_D"],
            None,
        )?;
        self.build(n, alphas)
    }

    /// Template for sweeps and optimizations, where the coupling is the
    /// scanned variable and any configured alpha is ignored.
    pub fn template(&self) -> Result<Params, CliError> {
        let n = self.sizes()?[0];
        let a = self.opt_options().alpha_min;
        self.build(n, (a, a))
    }

    /// N_list, falling back to a single N.
    pub fn sizes(&self) -> Result<Vec<u32>, CliError> {
        match (&self.n_list, self.n) {
            (Some(list), _) if list.is_empty() => Err(CliError::Invalid("N_list", "must not be empty".into())),
            (Some(list), _) => Ok(list.clone()),
            (None, Some(n)) => Ok(vec![n]),
            (None, None) => Err(CliError::MissingKey("N_list")),
        }
    }

    pub fn opt_options(&self) -> OptOptions {
        let d = OptOptions::default();
        OptOptions {
            alpha_min: self.alpha_min.unwrap_or(d.alpha_min),
            alpha_max: self.alpha_max.unwrap_or(d.alpha_max),
            points: self.alpha_points.unwrap_or(d.points),
            ..d
        }
    }

    pub fn fd_options(&self) -> FdOptions {
        let d = FdOptions::default();
        FdOptions {
            step: self.fd_step.or(d.step),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            ..d
        }
    }
}
