//! Command-line front end for the collective-qubit transport model.
//!
//! Exit codes: 0 on success, 2 for usage, configuration and input errors,
//! 1 for numerical failures and I/O.

pub mod config;
pub mod output;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use dicke_niba::analysis::{scaling, sweep, Objective, RowStatus, SweepSpec};
use dicke_niba::fcs::{cumulants_fd_with, flux_direct, Cgf};
use dicke_niba::kernel_exact::{
    compare_with_marcus, exact_rate_table, propagator, spectrum, spectrum_len, PropagatorGrid, PropagatorSpec,
};
use dicke_niba::liouvillian::{build_generator, steady_state};
use dicke_niba::rates::{jump_moments, marcus_rates};
use serde::Serialize;
use thiserror::Error;

use config::RunConfig;
use output::{num, ScalingJson};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {}: {source}", path.display())]
    ReadConfig { path: PathBuf, source: io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("missing config key `{0}`")]
    MissingKey(&'static str),
    #[error("config keys `{0}` and `{1}` are mutually exclusive")]
    Conflict(&'static str, &'static str),
    #[error("invalid config key `{0}`: {1}")]
    Invalid(&'static str, String),
    #[error(transparent)]
    Model(#[from] dicke_niba::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ReadConfig { .. }
            | CliError::Parse(_)
            | CliError::MissingKey(_)
            | CliError::Conflict(..)
            | CliError::Invalid(..) => 2,
            CliError::Model(e) if e.is_input_error() => 2,
            _ => 1,
        }
    }

    fn csv(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dicke-niba", version, about = "Photon transport through collective qubits at strong coupling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; overrides `out_path`. Defaults to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Flux,
    Noise,
    C3,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Flux => Objective::Flux,
            ObjectiveArg::Noise => Objective::Noise,
            ObjectiveArg::C3 => Objective::C3,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state populations, CSV `m,P`.
    Steady(Common),
    /// Flux, noise and Fano factor, CSV `J,S,FF,err_J,err_S`.
    Cumulants(Common),
    /// Cumulants over the α grid and N_list, CSV `N,alpha,J,S,FF,err_J,err_S`.
    Sweep(Common),
    /// Optimal coupling per N and the power-law fit, JSON.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "flux")]
        objective: ObjectiveArg,
    },
    /// Exact-kernel rates and spectra against the Marcus limit, JSON.
    ValidateKernel {
        #[command(flatten)]
        common: Common,
        /// Directory for propagator and spectrum grids as CSV.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Steady(c) | Command::Cumulants(c) | Command::Sweep(c) => c,
            Command::Scaling { common, .. } | Command::ValidateKernel { common, .. } => common,
        }
    }
}

fn emit(bytes: &[u8], target: Option<&Path>) -> Result<(), CliError> {
    match target {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => io::stdout().write_all(bytes).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let cfg = RunConfig::load(&common.config)?;
    let target = common.out.clone().or_else(|| cfg.out_path.clone());
    let bytes = match &cli.command {
        Command::Steady(_) => {
            let params = cfg.params()?;
            let ss = Cgf::new(&params)?.steady_state()?;
            output::steady_csv(&params.ladder().m_values(), &ss.populations)?
        }
        Command::Cumulants(_) => {
            let c = cumulants_fd_with(&cfg.params()?, &cfg.fd_options())?;
            output::cumulants_csv(&c)?
        }
        Command::Sweep(_) => run_sweep(&cfg)?,
        Command::Scaling { objective, .. } => run_scaling(&cfg, (*objective).into())?,
        Command::ValidateKernel { dump_dir, .. } => run_validate(&cfg, dump_dir.as_deref())?,
    };
    emit(&bytes, target.as_deref())
}

fn run_sweep(cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    let opts = cfg.opt_options();
    let alphas = dicke_niba::analysis::log_grid(opts.alpha_min, opts.alpha_max, opts.points)?;
    let mut spec = SweepSpec::new(cfg.template()?, alphas, cfg.sizes()?)?;
    spec.fd = cfg.fd_options();
    let result = sweep(&spec)?;
    for row in &result.rows {
        match &row.status {
            RowStatus::Ok => {}
            RowStatus::RouteMismatch { direct } => eprintln!(
                "warning: N = {}, alpha = {}: CGF flux {} differs from direct flux {}",
                row.n,
                num(row.alpha),
                num(row.cumulants.flux),
                num(*direct)
            ),
            RowStatus::Failed(msg) => eprintln!("warning: N = {}, alpha = {}: {msg}", row.n, num(row.alpha)),
        }
    }
    output::sweep_csv(&result.rows)
}

fn run_scaling(cfg: &RunConfig, objective: Objective) -> Result<Vec<u8>, CliError> {
    let template = cfg.template()?;
    let report = scaling(&template, &cfg.sizes()?, objective, &cfg.opt_options())?;
    let fd = cfg.fd_options();
    let at_opt: Vec<_> = report
        .points
        .iter()
        .map(|p| {
            template
                .with_size(p.n)
                .and_then(|t| t.with_alpha(p.opt.alpha_opt))
                .and_then(|params| cumulants_fd_with(&params, &fd))
                .ok()
        })
        .collect();
    Ok(json_bytes(&ScalingJson::new(&report, &at_opt)))
}

#[derive(Debug, Serialize)]
struct BathCheck {
    sum_rule: f64,
    peak_deviation: f64,
    l1_distance: f64,
    propagator_error: f64,
}

#[derive(Debug, Serialize)]
struct LinkCheck {
    m: f64,
    kappa_plus_exact: f64,
    kappa_plus_marcus: f64,
    err_plus: f64,
    kappa_minus_exact: f64,
    kappa_minus_marcus: f64,
    err_minus: f64,
}

#[derive(Debug, Serialize)]
struct KernelReport {
    source: BathCheck,
    drain: BathCheck,
    max_relative_error: f64,
    flux_exact: f64,
    flux_marcus: f64,
    links: Vec<LinkCheck>,
}

fn dump_grids(dir: &Path, name: &str, prop: &PropagatorGrid, spec: &dicke_niba::kernel_exact::CorrelationSpectrum) -> Result<(), CliError> {
    let write = |file: String, bytes: Vec<u8>| {
        let path = dir.join(file);
        fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "re_Q", "im_Q"]).map_err(CliError::csv)?;
    for (t, q) in prop.times().iter().zip(&prop.q_values) {
        w.write_record([num(*t), num(q.re), num(q.im)]).map_err(CliError::csv)?;
    }
    write(format!("propagator_{name}.csv"), w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["omega", "C"]).map_err(CliError::csv)?;
    for (o, c) in spec.omegas.iter().zip(&spec.c_values) {
        w.write_record([num(*o), num(*c)]).map_err(CliError::csv)?;
    }
    write(format!("spectrum_{name}.csv"), w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?)
}

fn run_validate(cfg: &RunConfig, dump_dir: Option<&Path>) -> Result<Vec<u8>, CliError> {
    let params = cfg.params()?;
    let grid = PropagatorSpec::for_baths(&params.baths());
    let ps = propagator(&params.source, &grid)?;
    let pd = propagator(&params.drain, &grid)?;
    let len = spectrum_len(&[&ps, &pd], 0.05);
    let cs = spectrum(&ps, len)?;
    let cd = spectrum(&pd, len)?;
    if let Some(dir) = dump_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        dump_grids(dir, "source", &ps, &cs)?;
        dump_grids(dir, "drain", &pd, &cd)?;
    }
    let check = |prop: &PropagatorGrid, spec, bath| -> Result<BathCheck, CliError> {
        let cmp = compare_with_marcus(spec, bath)?;
        Ok(BathCheck {
            sum_rule: spec.sum_rule(),
            peak_deviation: cmp.peak_deviation,
            l1_distance: cmp.l1_distance,
            propagator_error: prop.error_estimate,
        })
    };
    let ladder = params.ladder();
    let exact = exact_rate_table(&ladder, &cs, &cd)?;
    let marcus = marcus_rates(&ladder, &params.source, &params.drain)?;
    let flux = |rates, moments| -> Result<f64, CliError> {
        let ss = steady_state(&build_generator(rates)?)?;
        Ok(flux_direct(rates, moments, &ss)?)
    };
    let links = (0..marcus.len())
        .map(|i| LinkCheck {
            m: ladder.m(i).value(),
            kappa_plus_exact: exact.rates.kappa_plus(i),
            kappa_plus_marcus: marcus.kappa_plus(i),
            err_plus: exact.errors_plus[i],
            kappa_minus_exact: exact.rates.kappa_minus(i),
            kappa_minus_marcus: marcus.kappa_minus(i),
            err_minus: exact.errors_minus[i],
        })
        .collect();
    let report = KernelReport {
        source: check(&ps, &cs, &params.source)?,
        drain: check(&pd, &cd, &params.drain)?,
        max_relative_error: exact.max_relative_error(),
        flux_exact: flux(&exact.rates, &exact.moments)?,
        flux_marcus: flux(&marcus, &jump_moments(&ladder, &params.source, &params.drain)?)?,
        links,
    };
    Ok(json_bytes(&report))
}
