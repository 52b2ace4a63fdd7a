//! Coupling sweeps, optimal-coupling search and finite-size scaling fits.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fcs::{flux_direct, Cgf, CumulantSet, FdOptions};
use crate::model::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Flux,
    Noise,
    C3,
}

impl Objective {
    fn order(self) -> usize {
        match self {
            Objective::Flux => 1,
            Objective::Noise => 2,
            Objective::C3 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Flux => "flux",
            Objective::Noise => "noise",
            Objective::C3 => "c3",
        }
    }
}

/// `points` log-spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && max.is_finite()) {
        return Err(Error::Domain(format!("log grid needs 0 < min < max, got [{min}, {max}]")));
    }
    if points < 2 {
        return Err(Error::Domain(format!("log grid needs at least 2 points, got {points}")));
    }
    let (lo, hi) = (min.ln(), max.ln());
    let step = (hi - lo) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|k| (lo + k as f64 * step).exp()).collect();
    grid[0] = min;
    grid[points - 1] = max;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// α_S and α_D are both set to each swept α.
    pub template: Params,
    pub alphas: Vec<f64>,
    pub sizes: Vec<u32>,
    pub fd: FdOptions,
}

impl SweepSpec {
    pub fn new(template: Params, alphas: Vec<f64>, sizes: Vec<u32>) -> Result<Self> {
        let spec = Self {
            template,
            alphas,
            sizes,
            fd: FdOptions::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.sizes.is_empty() {
            return Err(Error::Domain("sweep needs at least one alpha and one N".into()));
        }
        if !self.alphas.windows(2).all(|w| w[0] < w[1]) || self.alphas[0] < 0.0 {
            return Err(Error::invalid("alpha", "sweep grid must be nonnegative and strictly increasing"));
        }
        let mut sorted = self.sizes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.sizes.len() || sorted[0] == 0 {
            return Err(Error::invalid("N_list", "sizes must be distinct and positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// Finite-difference and direct flux disagree beyond their error budget.
    RouteMismatch { direct: f64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: u32,
    pub alpha: f64,
    /// NaN fields when the row failed.
    pub cumulants: CumulantSet,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// N-major, α-minor.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != RowStatus::Ok).count()
    }

    /// Rows for one N, in α order.
    pub fn for_size(&self, n: u32) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.n == n).collect()
    }
}

fn failed_cumulants() -> CumulantSet {
    CumulantSet {
        flux: f64::NAN,
        noise: f64::NAN,
        c3: None,
        ff: f64::NAN,
        fd_step: f64::NAN,
        err_flux: f64::NAN,
        err_noise: f64::NAN,
        err_c3: None,
    }
}

/// One (N, α) point, cross-checked against the direct flux.
pub fn sweep_point(template: &Params, n: u32, alpha: f64, fd: &FdOptions) -> SweepRow {
    let run = || -> Result<(CumulantSet, f64)> {
        let params = template.with_size(n)?.with_alpha(alpha)?;
        let cgf = Cgf::new(&params)?;
        let c = cgf.cumulants(fd)?;
        let direct = flux_direct(cgf.rates(), cgf.moments(), &cgf.steady_state()?)?;
        Ok((c, direct))
    };
    match run() {
        Ok((c, direct)) => {
            let budget = 10.0 * c.err_flux + 1e-6 * c.flux.abs().max(direct.abs()) + 1e-300;
            let status = if (c.flux - direct).abs() <= budget {
                RowStatus::Ok
            } else {
                RowStatus::RouteMismatch { direct }
            };
            SweepRow {
                n,
                alpha,
                cumulants: c,
                status,
            }
        }
        Err(e) => SweepRow {
            n,
            alpha,
            cumulants: failed_cumulants(),
            status: RowStatus::Failed(e.to_string()),
        },
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let items: Vec<(u32, f64)> = spec
        .sizes
        .iter()
        .flat_map(|&n| spec.alphas.iter().map(move |&a| (n, a)))
        .collect();
    let rows = items
        .par_iter()
        .map(|&(n, alpha)| sweep_point(&spec.template, n, alpha, &spec.fd))
        .collect();
    Ok(SweepResult { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptOptions {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub points: usize,
    /// Relative α tolerance of the golden-section refinement.
    pub tolerance: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            alpha_min: 1e-3,
            alpha_max: 10.0,
            points: 60,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptResult {
    pub alpha_opt: f64,
    pub value_opt: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub evaluations: usize,
}

/// Objective value at one α: direct flux, or finite-difference noise / c3.
///
/// Cumulants are bounded by a few times the slowest link rate, so a ladder
/// whose link rates leave the double-precision range contributes 0 here.
pub fn objective_value(template: &Params, n: u32, alpha: f64, objective: Objective) -> Result<f64> {
    match raw_objective(template, n, alpha, objective) {
        Err(Error::DisconnectedLadder { .. } | Error::RateRangeUnderflow { .. }) => Ok(0.0),
        other => other,
    }
}

fn raw_objective(template: &Params, n: u32, alpha: f64, objective: Objective) -> Result<f64> {
    let params = template.with_size(n)?.with_alpha(alpha)?;
    let cgf = Cgf::new(&params)?;
    match objective {
        Objective::Flux => flux_direct(cgf.rates(), cgf.moments(), &cgf.steady_state()?),
        Objective::Noise => Ok(cgf.cumulants(&FdOptions::with_order(objective.order()))?.noise),
        Objective::C3 => cgf
            .cumulants(&FdOptions::with_order(objective.order()))?
            .c3
            .ok_or_else(|| Error::Numerical("third cumulant missing".into())),
    }
}

pub fn optimize_alpha(template: &Params, n: u32, objective: Objective, opts: &OptOptions) -> Result<OptResult> {
    maximize_log(|a| objective_value(template, n, a, objective), opts)
}

/// Interior maximum of `f` over α: coarse log grid, unimodality check, then
/// golden section in ln α.
pub fn maximize_log<F>(f: F, opts: &OptOptions) -> Result<OptResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", format!("must be positive, got {}", opts.tolerance)));
    }
    let grid = log_grid(opts.alpha_min, opts.alpha_max, opts.points)?;
    let values = grid.par_iter().map(|&a| f(a)).collect::<Result<Vec<f64>>>()?;
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("objective not finite at alpha = {}", grid[k])));
    }
    let best = (0..values.len()).fold(0, |b, k| if values[k] > values[b] { k } else { b });
    if best == 0 || best == values.len() - 1 {
        return Err(Error::MonotoneObjective {
            alpha: grid[best],
            value: values[best],
        });
    }
    let slopes: Vec<bool> = values
        .windows(2)
        .filter(|w| w[1] != w[0])
        .map(|w| w[1] > w[0])
        .collect();
    let sign_changes = slopes.windows(2).filter(|w| w[0] != w[1]).count();
    if sign_changes != 1 {
        return Err(Error::NotUnimodal { sign_changes });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (grid[best - 1].ln(), grid[best + 1].ln());
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1.exp())?, f(x2.exp())?);
    let mut evaluations = grid.len() + 2;
    while hi - lo > opts.tolerance {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1.exp())?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2.exp())?;
        }
        evaluations += 1;
    }
    let (x, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let (x, v) = if values[best] > v { (grid[best].ln(), values[best]) } else { (x, v) };
    Ok(OptResult {
        alpha_opt: x.exp(),
        value_opt: v,
        bracket: (grid[best - 1], grid[best + 1]),
        tolerance: opts.tolerance,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    /// y ∝ x^{-γ}.
    pub gamma: f64,
    pub gamma_stderr: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_linear(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Domain(format!("linear fit needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("linear fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LinearFit {
        slope,
        slope_stderr: (sse / (nf - 2.0) / sxx).sqrt(),
        intercept,
        r_squared,
        points: n,
    })
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::Domain(format!("power-law fit needs positive data, got ({}, {})", p.0, p.1)));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let lin = fit_linear(&logs)?;
    Ok(PowerLawFit {
        gamma: -lin.slope,
        gamma_stderr: lin.slope_stderr,
        prefactor: lin.intercept.exp(),
        r_squared: lin.r_squared,
        points: lin.points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n: u32,
    pub opt: OptResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub objective: Objective,
    pub points: Vec<ScalingPoint>,
    /// α_opt ∝ N^{-γ}.
    pub alpha_fit: PowerLawFit,
    /// Optimal objective value linear in N.
    pub value_fit: LinearFit,
    /// γ refitted without the smallest N.
    pub gamma_without_smallest: Option<f64>,
    /// γ refitted with the single-qubit point added.
    pub gamma_with_single_qubit: Option<f64>,
}

impl ScalingReport {
    pub fn alpha_points(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.n as f64, p.opt.alpha_opt)).collect()
    }

    pub fn value_points(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.n as f64, p.opt.value_opt)).collect()
    }
}

pub fn scaling(template: &Params, sizes: &[u32], objective: Objective, opts: &OptOptions) -> Result<ScalingReport> {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.first() == Some(&0) {
        return Err(Error::invalid("N_list", "sizes must be positive"));
    }
    let mut all = sizes.clone();
    let extra_single = !sizes.contains(&1);
    if extra_single {
        all.insert(0, 1);
    }
    let results: Vec<(u32, Result<OptResult>)> = all
        .par_iter()
        .map(|&n| (n, optimize_alpha(template, n, objective, opts)))
        .collect();
    let mut points = Vec::with_capacity(sizes.len());
    let mut single = None;
    for (n, r) in results {
        if extra_single && n == 1 {
            single = r.ok();
            continue;
        }
        points.push(ScalingPoint { n, opt: r? });
    }
    let alpha_pts: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.opt.alpha_opt)).collect();
    let value_pts: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.opt.value_opt)).collect();
    let alpha_fit = fit_power_law(&alpha_pts)?;
    let value_fit = fit_linear(&value_pts)?;
    let gamma_without_smallest = fit_power_law(&alpha_pts[1..]).ok().map(|f| f.gamma);
    let gamma_with_single_qubit = single.and_then(|s| {
        let mut pts = vec![(1.0, s.alpha_opt)];
        pts.extend_from_slice(&alpha_pts);
        fit_power_law(&pts).ok().map(|f| f.gamma)
    });
    Ok(ScalingReport {
        objective,
        points,
        alpha_fit,
        value_fit,
        gamma_without_smallest,
        gamma_with_single_qubit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcs::cumulants_fd;
    use rand::prelude::*;

    fn moderate_bias() -> Params {
        Params::symmetric(2, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap()
    }

    #[test]
    fn log_grid_endpoints_and_spacing() {
        let g = log_grid(1e-3, 10.0, 60).unwrap();
        assert_eq!(g.len(), 60);
        assert_eq!((g[0], g[59]), (1e-3, 10.0));
        let r = g[1] / g[0];
        assert!(g.windows(2).all(|w| ((w[1] / w[0]) - r).abs() < 1e-12));
        assert!(log_grid(0.0, 1.0, 5).is_err());
        assert!(log_grid(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn degenerate_sweep_matches_direct_call() {
        let spec = SweepSpec::new(moderate_bias(), vec![0.2], vec![3]).unwrap();
        let r = sweep(&spec).unwrap();
        assert_eq!(r.rows.len(), 1);
        let direct = cumulants_fd(&moderate_bias().with_size(3).unwrap().with_alpha(0.2).unwrap(), 2).unwrap();
        assert_eq!(r.rows[0].cumulants, direct);
        assert_eq!(r.rows[0].status, RowStatus::Ok);
    }

    #[test]
    fn sweep_order_and_determinism() {
        let spec = SweepSpec::new(moderate_bias(), log_grid(0.01, 1.0, 5).unwrap(), vec![4, 2]).unwrap();
        let a = sweep(&spec).unwrap();
        let b = sweep(&spec).unwrap();
        assert_eq!(a, b);
        let keys: Vec<(u32, f64)> = a.rows.iter().map(|r| (r.n, r.alpha)).collect();
        let expected: Vec<(u32, f64)> = [4, 2]
            .iter()
            .flat_map(|&n| spec.alphas.iter().map(move |&x| (n, x)))
            .collect();
        assert_eq!(keys, expected);
        assert_eq!(a.failures(), 0);
    }

    #[test]
    fn failed_rows_are_flagged_not_fatal() {
        let spec = SweepSpec::new(moderate_bias(), vec![0.0, 0.1], vec![2]).unwrap();
        let r = sweep(&spec).unwrap();
        assert!(matches!(r.rows[0].status, RowStatus::Failed(_)));
        assert!(r.rows[0].cumulants.flux.is_nan());
        assert_eq!(r.rows[1].status, RowStatus::Ok);
    }

    #[test]
    fn sweep_spec_validation() {
        assert!(SweepSpec::new(moderate_bias(), vec![0.2, 0.1], vec![2]).is_err());
        assert!(SweepSpec::new(moderate_bias(), vec![0.1], vec![2, 2]).is_err());
        assert!(SweepSpec::new(moderate_bias(), vec![0.1], vec![0]).is_err());
    }

    #[test]
    fn synthetic_optimum() {
        let a0 = 0.037;
        let r = maximize_log(|a| Ok(a * (-a / a0).exp()), &OptOptions::default()).unwrap();
        assert!(((r.alpha_opt - a0) / a0).abs() < 1e-4);
        assert!(r.bracket.0 < r.alpha_opt && r.alpha_opt < r.bracket.1);
    }

    #[test]
    fn monotone_and_multimodal_objectives_are_rejected() {
        let e = maximize_log(Ok, &OptOptions::default()).unwrap_err();
        assert!(matches!(e, Error::MonotoneObjective { alpha, .. } if alpha == 10.0));
        let bumpy = |a: f64| Ok((-(a.ln() + 4.0).powi(2)).exp() + (-(a.ln() - 1.0).powi(2)).exp());
        assert!(matches!(
            maximize_log(bumpy, &OptOptions::default()),
            Err(Error::NotUnimodal { .. })
        ));
    }

    #[test]
    fn flux_optimum_is_interior_and_stable_under_grid_refinement() {
        let coarse = optimize_alpha(&moderate_bias(), 6, Objective::Flux, &OptOptions::default()).unwrap();
        let fine = optimize_alpha(
            &moderate_bias(),
            6,
            Objective::Flux,
            &OptOptions {
                points: 119,
                ..OptOptions::default()
            },
        )
        .unwrap();
        assert!(((coarse.alpha_opt - fine.alpha_opt) / fine.alpha_opt).abs() < 1e-3);
        assert!(coarse.value_opt > 0.0);
    }

    #[test]
    fn optimal_coupling_shrinks_with_size() {
        let opts = OptOptions::default();
        let a: Vec<f64> = [2, 4, 6]
            .iter()
            .map(|&n| optimize_alpha(&moderate_bias(), n, Objective::Flux, &opts).unwrap().alpha_opt)
            .collect();
        assert!(a[0] > a[1] && a[1] > a[2]);
    }

    #[test]
    fn underflowed_ladder_counts_as_zero_objective() {
        let p = moderate_bias().with_size(12).unwrap().with_alpha(10.0).unwrap();
        assert!(matches!(Cgf::new(&p).unwrap().steady_state(), Err(Error::DisconnectedLadder { .. })));
        assert_eq!(objective_value(&moderate_bias(), 12, 10.0, Objective::Flux).unwrap(), 0.0);
        // one decade lower the ladder is still connected and the flux already negligible
        let j = objective_value(&moderate_bias(), 12, 1.0, Objective::Flux).unwrap();
        assert!(j > 0.0 && j < 1e-30);
    }

    #[test]
    fn exact_power_law_and_line() {
        let f = fit_power_law(&[(2.0, 0.25), (4.0, 0.0625), (8.0, 0.015625)]).unwrap();
        assert!((f.gamma - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let l = fit_linear(&[(1.0, 4.0), (2.0, 7.0), (5.0, 16.0), (6.0, 19.0)]).unwrap();
        assert!((l.slope - 3.0).abs() < 1e-12 && (l.intercept - 1.0).abs() < 1e-12);
        assert!((l.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fits_reject_bad_input() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0)]).is_err());
        assert!(fit_linear(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_linear(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_err());
    }

    #[test]
    fn noisy_power_law_recovers_exponent() {
        let mut rng = StdRng::seed_from_u64(7);
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
            .iter()
            .map(|&n: &f64| (n, 0.5 * n.powi(-2) * (1.0 + 0.05 * rng.random_range(-1.0..1.0))))
            .collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((1.9..=2.1).contains(&f.gamma), "{}", f.gamma);
    }

    #[test]
    fn scaling_report_small() {
        let r = scaling(&moderate_bias(), &[2, 3, 4], Objective::Flux, &OptOptions::default()).unwrap();
        assert_eq!(r.points.len(), 3);
        assert!(r.alpha_fit.gamma > 1.0);
        assert!(r.value_fit.slope > 0.0);
        assert!(r.gamma_without_smallest.is_none());
        assert!(r.gamma_with_single_qubit.is_some());
    }
}
