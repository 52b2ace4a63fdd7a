//! Cumulants of the energy current into the drain.
//!
//! The scaled CGF G(s) is the Perron root of the real-tilt generator W(s),
//! s = iχ. Cumulants are its derivatives at s = 0, taken by central finite
//! differences with one Richardson step. The flux also has a closed route,
//! J = Σ_m (q⁺_m κ⁺_m P_m + q⁻_m κ⁻_m P_{m+1}), used as a cross-check.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::liouvillian::{build_generator, build_tilted_generator, dominant_eigenvalue, steady_state, SteadyState};
use crate::model::{Ladder, Params};
use crate::rates::{moments_with_kernel, rates_with_kernel, real_tilt_with_kernel, JumpMoments, MarcusKernel, RateTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantSet {
    /// J = dG/ds at 0.
    pub flux: f64,
    /// S = d²G/ds² at 0.
    pub noise: f64,
    pub c3: Option<f64>,
    /// S / J.
    pub ff: f64,
    /// Step behind the reported flux.
    pub fd_step: f64,
    pub err_flux: f64,
    pub err_noise: f64,
    pub err_c3: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    /// 1, 2 or 3.
    pub order: usize,
    /// Initial step; `None` picks 1e-3 / max(max|q±|, 1).
    pub step: Option<f64>,
    /// Relative error target for each cumulant.
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            order: 2,
            step: None,
            tolerance: 1e-6,
            max_halvings: 10,
        }
    }
}

impl FdOptions {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }
}

/// Evaluates G(s) for one parameter point.
#[derive(Debug, Clone)]
pub struct Cgf {
    ladder: Ladder,
    kernel: MarcusKernel,
    rates: RateTable,
    moments: JumpMoments,
}

impl Cgf {
    pub fn new(params: &Params) -> Result<Self> {
        let ladder = params.ladder();
        let kernel = MarcusKernel::for_params(params)?;
        let rates = rates_with_kernel(&ladder, &kernel);
        let moments = moments_with_kernel(&ladder, &kernel);
        Ok(Self {
            ladder,
            kernel,
            rates,
            moments,
        })
    }

    /// Same CGF with every rate carried by a different prefactor.
    pub fn with_prefactor(&self, prefactor: f64) -> Self {
        Self {
            rates: self.rates.with_prefactor(prefactor),
            ..self.clone()
        }
    }

    pub fn rates(&self) -> &RateTable {
        &self.rates
    }

    pub fn moments(&self) -> &JumpMoments {
        &self.moments
    }

    pub fn prefactor(&self) -> f64 {
        self.rates.prefactor
    }

    pub fn default_step(&self) -> f64 {
        1e-3 / self.moments.max_abs().max(1.0)
    }

    /// G(s) in absolute units.
    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok(self.eval_scaled(s)? * self.rates.prefactor)
    }

    /// G(s) in units of the prefactor.
    pub fn eval_scaled(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            build_generator(&self.rates)?;
            return Ok(0.0);
        }
        let tilted = real_tilt_with_kernel(&self.ladder, &self.kernel, self.rates.clone(), s);
        Ok(dominant_eigenvalue(&build_tilted_generator(&tilted)?)?.scaled)
    }

    pub fn steady_state(&self) -> Result<SteadyState> {
        steady_state(&build_generator(&self.rates)?)
    }

    pub fn cumulants(&self, opts: &FdOptions) -> Result<CumulantSet> {
        let q = self.moments.max_abs().max(1.0);
        let opts = FdOptions {
            step: Some(opts.step.unwrap_or_else(|| self.default_step())),
            ..*opts
        };
        let scaled = cumulants_from_cgf(|s| self.eval_scaled(s), &opts, q)?;
        Ok(scaled.rescaled(self.rates.prefactor))
    }
}

impl CumulantSet {
    fn rescaled(self, a: f64) -> Self {
        Self {
            flux: self.flux * a,
            noise: self.noise * a,
            c3: self.c3.map(|c| c * a),
            ff: self.ff,
            fd_step: self.fd_step,
            err_flux: self.err_flux * a,
            err_noise: self.err_noise * a,
            err_c3: self.err_c3.map(|e| e * a),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Estimate {
    value: f64,
    err: f64,
    step: f64,
    coarse: f64,
    fine: f64,
}

/// Cumulants of an arbitrary CGF `g`.
///
/// `energy_scale` sets the absolute error floor 1e-12·energy_scale^k for the
/// k-th cumulant, so a vanishing cumulant still counts as converged.
pub fn cumulants_from_cgf<F>(g: F, opts: &FdOptions, energy_scale: f64) -> Result<CumulantSet>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(1..=3).contains(&opts.order) {
        return Err(Error::Domain(format!("cumulant order must be 1, 2 or 3, got {}", opts.order)));
    }
    let h0 = opts.step.unwrap_or(1e-3 / energy_scale.max(1.0));
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::invalid("fd_step", format!("must be positive, got {h0}")));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", format!("must be positive, got {}", opts.tolerance)));
    }
    let cache: RefCell<HashMap<u64, f64>> = RefCell::new(HashMap::new());
    let eval = |s: f64| -> Result<f64> {
        if let Some(v) = cache.borrow().get(&s.to_bits()) {
            return Ok(*v);
        }
        let v = g(s)?;
        if !v.is_finite() {
            return Err(Error::Numerical(format!("CGF is not finite at s = {s:e}")));
        }
        cache.borrow_mut().insert(s.to_bits(), v);
        Ok(v)
    };

    let mut out = [None; 3];
    for (k, slot) in out.iter_mut().enumerate().take(opts.order) {
        let est = best_estimate(&eval, k + 1, h0, opts.max_halvings)?;
        let floor = 1e-12 * energy_scale.powi(k as i32 + 1);
        if !(est.err <= opts.tolerance * est.value.abs() + floor) {
            return Err(Error::StencilNotConverged {
                coarse: est.coarse,
                fine: est.fine,
            });
        }
        *slot = Some(est);
    }
    let flux = out[0].expect("order >= 1");
    let (noise, err_noise) = out[1].map_or((f64::NAN, f64::NAN), |e| (e.value, e.err));
    Ok(CumulantSet {
        flux: flux.value,
        noise,
        c3: out[2].map(|e| e.value),
        ff: noise / flux.value,
        fd_step: flux.step,
        err_flux: flux.err,
        err_noise,
        err_c3: out[2].map(|e| e.err),
    })
}

/// Richardson pair at h and h/2, halving h while the error estimate shrinks.
fn best_estimate<F>(eval: &F, k: usize, h0: f64, max_halvings: usize) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut h = h0;
    let mut best = richardson(eval, k, h)?;
    for _ in 0..max_halvings {
        h *= 0.5;
        let next = richardson(eval, k, h)?;
        if next.err < best.err {
            best = next;
        } else {
            break;
        }
        if best.err == 0.0 {
            break;
        }
    }
    Ok(best)
}

fn richardson<F>(eval: &F, k: usize, h: f64) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let coarse = central(eval, k, h)?;
    let fine = central(eval, k, 0.5 * h)?;
    let value = fine + (fine - coarse) / 3.0;
    Ok(Estimate {
        value,
        err: (value - fine).abs(),
        step: h,
        coarse,
        fine,
    })
}

fn central<F>(eval: &F, k: usize, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    Ok(match k {
        1 => (eval(h)? - eval(-h)?) / (2.0 * h),
        2 => (eval(h)? - 2.0 * eval(0.0)? + eval(-h)?) / (h * h),
        _ => (eval(2.0 * h)? - 2.0 * eval(h)? + 2.0 * eval(-h)? - eval(-2.0 * h)?) / (2.0 * h * h * h),
    })
}

pub fn cumulants_fd(params: &Params, order: usize) -> Result<CumulantSet> {
    Cgf::new(params)?.cumulants(&FdOptions::with_order(order))
}

pub fn cumulants_fd_with(params: &Params, opts: &FdOptions) -> Result<CumulantSet> {
    Cgf::new(params)?.cumulants(opts)
}

/// J = Σ_m (q⁺_m κ⁺_m P_m + q⁻_m κ⁻_m P_{m+1}), absolute units.
pub fn flux_direct(rates: &RateTable, moments: &JumpMoments, ss: &SteadyState) -> Result<f64> {
    let n = rates.len();
    if moments.q_plus.len() != n || moments.q_minus.len() != n || ss.populations.len() != n + 1 {
        return Err(Error::Domain(format!(
            "inconsistent sizes: {n} rates, {} moments, {} populations",
            moments.q_plus.len(),
            ss.populations.len()
        )));
    }
    let p = &ss.populations;
    Ok((0..n)
        .map(|i| {
            moments.q_plus[i] * rates.kappa_plus(i) * p[i] + moments.q_minus[i] * rates.kappa_minus(i) * p[i + 1]
        })
        .sum())
}

/// Largest |G(s) - G(-(β_D-β_S) - s)| / max(|G(s)|, |G(s')|) over the samples.
pub fn gc_deviation(params: &Params, s_samples: &[f64]) -> Result<f64> {
    let cgf = Cgf::new(params)?;
    let axis = -params.beta_bias();
    let mut worst: f64 = 0.0;
    for &s in s_samples {
        let a = cgf.eval_scaled(s)?;
        let b = cgf.eval_scaled(axis - s)?;
        let scale = a.abs().max(b.abs());
        if scale > 0.0 {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: u32, alpha: f64, ts: f64, td: f64) -> Params {
        Params::symmetric(n, 0.0, alpha, 10.0, ts, td).unwrap()
    }

    #[test]
    fn synthetic_polynomial_cgf() {
        let g = |s: f64| Ok(0.3 * s + 0.7 * s * s + 0.2 * s * s * s);
        let c = cumulants_from_cgf(g, &FdOptions::with_order(3), 1.0).unwrap();
        assert!((c.flux - 0.3).abs() < 1e-10);
        assert!((c.noise - 1.4).abs() < 1e-10);
        assert!((c.c3.unwrap() - 1.2).abs() < 1e-8);
        assert!((c.ff - 1.4 / 0.3).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_order() {
        let g = |s: f64| Ok(s);
        assert!(cumulants_from_cgf(g, &FdOptions::with_order(4), 1.0).is_err());
        assert!(cumulants_from_cgf(g, &FdOptions::with_order(0), 1.0).is_err());
    }

    #[test]
    fn noisy_cgf_reports_unconverged_stencil() {
        let g = |s: f64| Ok(s + 1e-3 * (s * 1e9).sin());
        let err = cumulants_from_cgf(g, &FdOptions::with_order(1), 1.0).unwrap_err();
        assert!(matches!(err, Error::StencilNotConverged { .. }));
    }

    #[test]
    fn single_qubit_flux_and_noise() {
        let p = params(1, 0.1, 4.0, 2.0);
        let cgf = Cgf::new(&p).unwrap();
        let c = cgf.cumulants(&FdOptions::with_order(3)).unwrap();
        let kappa = cgf.rates().kappa_plus(0);
        let d = cgf.moments().d;
        let db = p.beta_bias();
        // κ⁺ = κ⁻ gives G(s) = κ(exp(D Δβ s + D s²) - 1).
        let j = kappa * d * db;
        let s = kappa * ((d * db).powi(2) + 2.0 * d);
        let c3 = kappa * ((d * db).powi(3) + 6.0 * d * d * db);
        assert!((c.flux - 0.03226).abs() < 5e-6, "{}", c.flux);
        assert!(((c.flux - j) / j).abs() < 1e-9);
        assert!(((c.noise - s) / s).abs() < 1e-8);
        assert!(((c.c3.unwrap() - c3) / c3).abs() < 1e-5);
        let ss = cgf.steady_state().unwrap();
        let direct = flux_direct(cgf.rates(), cgf.moments(), &ss).unwrap();
        assert!(((direct - j) / j).abs() < 1e-12);
    }

    #[test]
    fn zero_bias_has_no_flux() {
        let p = params(6, 0.3, 3.0, 3.0);
        let cgf = Cgf::new(&p).unwrap();
        let a = cgf.prefactor();
        let c = cgf.cumulants(&FdOptions::default()).unwrap();
        assert!(c.flux.abs() <= 1e-10 * a, "{}", c.flux);
        assert!(c.flux.abs() <= c.err_flux.max(1e-10 * a));
        assert!(c.noise > 0.0);
        let direct = flux_direct(cgf.rates(), cgf.moments(), &cgf.steady_state().unwrap()).unwrap();
        assert!(direct.abs() <= 1e-12 * a, "{direct}");
    }

    #[test]
    fn flux_routes_agree_on_grid() {
        for &alpha in &[0.05, 0.1, 0.2, 0.4, 0.8] {
            for &n in &[1, 2, 4, 6, 8] {
                let cgf = Cgf::new(&params(n, alpha, 4.0, 2.0)).unwrap();
                let c = cgf.cumulants(&FdOptions::with_order(2)).unwrap();
                let direct = flux_direct(cgf.rates(), cgf.moments(), &cgf.steady_state().unwrap()).unwrap();
                let rel = ((c.flux - direct) / direct).abs();
                assert!(rel < 1e-6, "alpha={alpha} n={n} fd={} direct={direct}", c.flux);
                assert!(c.flux > 0.0 && c.noise > 0.0);
            }
        }
    }

    #[test]
    fn fano_factor_ignores_rate_scale() {
        let cgf = Cgf::new(&params(4, 0.2, 4.0, 2.0)).unwrap();
        let c1 = cgf.cumulants(&FdOptions::default()).unwrap();
        let c2 = cgf.with_prefactor(7.5 * cgf.prefactor()).cumulants(&FdOptions::default()).unwrap();
        assert!(((c2.flux / c1.flux) - 7.5).abs() < 1e-10 * 7.5);
        assert!(((c1.ff - c2.ff) / c1.ff).abs() < 1e-10);
    }

    #[test]
    fn gc_axis_example() {
        let p = params(4, 0.5, 4.0, 2.0);
        assert_eq!(-p.beta_bias(), -0.25);
        let cgf = Cgf::new(&p).unwrap();
        let a = cgf.eval(0.1).unwrap();
        let b = cgf.eval(-0.35).unwrap();
        assert!(((a - b) / a).abs() < 1e-9);
        assert!(gc_deviation(&p, &[0.1, 0.5, -1.0, 2.0]).unwrap() < 1e-9);
    }

    #[test]
    fn equal_temperatures_give_even_cgf() {
        let p = params(3, 0.4, 2.5, 2.5);
        let cgf = Cgf::new(&p).unwrap();
        for &s in &[0.05, 0.3, 1.1] {
            let (a, b) = (cgf.eval(s).unwrap(), cgf.eval(-s).unwrap());
            assert!(((a - b) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_direct_checks_sizes() {
        let cgf = Cgf::new(&params(2, 0.1, 4.0, 2.0)).unwrap();
        let bad = SteadyState {
            populations: vec![1.0],
            residual: 0.0,
        };
        assert!(matches!(
            flux_direct(cgf.rates(), cgf.moments(), &bad),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]
        #[test]
        fn gc_symmetry_strong_coupling(
            alpha in 0.5f64..5.0,
            n in 1u32..10,
            ts in 2.0f64..20.0,
            td in 1.0f64..5.0,
            s in -1.0f64..1.0,
        ) {
            let p = params(n, alpha, ts, td);
            prop_assert!(gc_deviation(&p, &[s, 0.3 * s]).unwrap() <= 1e-9);
        }

        #[test]
        fn second_law_and_positive_noise(alpha in 0.01f64..3.0, n in 1u32..9, ts in 2.1f64..10.0) {
            let c = cumulants_fd(&params(n, alpha, ts, 2.0), 2).unwrap();
            prop_assert!(c.flux >= -c.err_flux);
            prop_assert!(c.noise >= -c.err_noise);
        }
    }
}
