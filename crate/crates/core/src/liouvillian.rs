//! Tridiagonal (tilted) rate generator on the Dicke ladder.
//!
//! Populations obey dP/dt = W(s) P with
//!
//! ```text
//! W[i][i]   = -(κ⁻_{i-1} + κ⁺_i)      (never tilted)
//! W[i+1][i] =  κ⁺_i(s)                 (i -> i+1)
//! W[i][i+1] =  κ⁻_i(s)                 (i+1 -> i)
//! ```
//!
//! All entries are kept in units of the Marcus prefactor A; `scale` converts
//! eigenvalues back to absolute units.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, max_abs, solve_dense};
use crate::model::{BathParams, HalfInt, SystemParams};
use crate::rates::{MarcusKernel, RateTable, RealTiltedRates, TiltedRateTable};

#[derive(Debug, Clone, PartialEq)]
pub struct TiltedGenerator {
    /// Untilted κ⁺_i, which also set the diagonal.
    pub kappa_plus: Vec<f64>,
    pub kappa_minus: Vec<f64>,
    /// κ⁺_i(s), sub-diagonal.
    pub lower: Vec<f64>,
    /// κ⁻_i(s), super-diagonal.
    pub upper: Vec<f64>,
    /// lower·upper - κ⁺κ⁻ per link, formed without cancellation when possible.
    pub product_excess: Vec<f64>,
    pub tilt: f64,
    pub scale: f64,
}

impl TiltedGenerator {
    pub fn dim(&self) -> usize {
        self.kappa_plus.len() + 1
    }

    pub fn diag(&self, i: usize) -> f64 {
        let down = if i > 0 { self.kappa_minus[i - 1] } else { 0.0 };
        let up = self.kappa_plus.get(i).copied().unwrap_or(0.0);
        -(down + up)
    }

    pub fn max_rate(&self) -> f64 {
        (0..self.dim()).fold(0.0, |acc, i| acc.max(-self.diag(i)))
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            w[i][i] = self.diag(i);
        }
        for i in 0..n - 1 {
            w[i + 1][i] = self.lower[i];
            w[i][i + 1] = self.upper[i];
        }
        w
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let w = self.to_dense();
        (0..self.dim()).map(|c| w.iter().map(|row| row[c]).sum()).collect()
    }

    fn check_connected(&self, j: HalfInt) -> Result<()> {
        for (i, (&p, &m)) in self.kappa_plus.iter().zip(&self.kappa_minus).enumerate() {
            if !(p >= f64::MIN_POSITIVE && m >= f64::MIN_POSITIVE) {
                return Err(Error::DisconnectedLadder {
                    m: HalfInt(2 * i as i64 - j.twice()).value(),
                });
            }
        }
        Ok(())
    }

    fn half_j(&self) -> HalfInt {
        HalfInt(self.kappa_plus.len() as i64)
    }
}

pub fn build_generator(rates: &RateTable) -> Result<TiltedGenerator> {
    build_tilted_generator(&RealTiltedRates::untilted(rates.clone()))
}

pub fn build_tilted_generator(rates: &RealTiltedRates) -> Result<TiltedGenerator> {
    let n = rates.base.len();
    if rates.base.scaled_minus.len() != n || rates.log_tilt_plus.len() != n || rates.log_tilt_minus.len() != n {
        return Err(Error::Domain("rate arrays have inconsistent lengths".into()));
    }
    let base = &rates.base;
    let lower = (0..n).map(|i| rates.scaled_plus(i)).collect();
    let upper = (0..n).map(|i| rates.scaled_minus(i)).collect();
    let product_excess = (0..n)
        .map(|i| {
            let kk = base.scaled_plus[i] * base.scaled_minus[i];
            if kk == 0.0 {
                0.0
            } else {
                kk * (rates.log_tilt_plus[i] + rates.log_tilt_minus[i]).exp_m1()
            }
        })
        .collect();
    Ok(TiltedGenerator {
        kappa_plus: base.scaled_plus.clone(),
        kappa_minus: base.scaled_minus.clone(),
        lower,
        upper,
        product_excess,
        tilt: rates.s,
        scale: base.prefactor,
    })
}

/// Generator for a complex counting field; used for structural checks only.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGenerator {
    pub diag: Vec<f64>,
    pub lower: Vec<Complex64>,
    pub upper: Vec<Complex64>,
    pub chi: Complex64,
    pub scale: f64,
}

impl ComplexGenerator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        let mut w = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            w[i][i] = Complex64::new(self.diag[i], 0.0);
        }
        for i in 0..n - 1 {
            w[i + 1][i] = self.lower[i];
            w[i][i + 1] = self.upper[i];
        }
        w
    }
}

/// Complex-χ generator; the diagonal comes from the untilted table.
pub fn build_complex_generator(untilted: &RateTable, tilted: &TiltedRateTable) -> Result<ComplexGenerator> {
    let n = untilted.len();
    if tilted.scaled_plus.len() != n || tilted.scaled_minus.len() != n {
        return Err(Error::Domain("tilted and untilted tables differ in length".into()));
    }
    let diag = (0..=n)
        .map(|i| {
            let down = if i > 0 { untilted.scaled_minus[i - 1] } else { 0.0 };
            let up = untilted.scaled_plus.get(i).copied().unwrap_or(0.0);
            -(down + up)
        })
        .collect();
    Ok(ComplexGenerator {
        diag,
        lower: tilted.scaled_plus.clone(),
        upper: tilted.scaled_minus.clone(),
        chi: tilted.chi,
        scale: untilted.prefactor,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub populations: Vec<f64>,
    /// ‖W P‖∞ / max-rate.
    pub residual: f64,
}

/// Null vector of W(0), by LU solve with the last row swapped for Σ P = 1.
pub fn steady_state(gen: &TiltedGenerator) -> Result<SteadyState> {
    if gen.tilt != 0.0 {
        return Err(Error::Domain("steady state requires the untilted generator".into()));
    }
    gen.check_connected(gen.half_j())?;
    let n = gen.dim();
    let norm = gen.max_rate();
    let mut a = gen.to_dense();
    for row in a.iter_mut() {
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    let w = a.clone();
    a[n - 1] = vec![1.0; n];
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut p = solve_dense(a, rhs).ok_or_else(|| Error::Numerical("steady-state system is singular".into()))?;
    if p.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return Err(Error::Numerical(format!("steady state has invalid entries: {p:?}")));
    }
    for v in p.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= total;
    }
    let residual = max_abs(&mat_vec(&w, &p));
    Ok(SteadyState {
        populations: p,
        residual,
    })
}

/// Long-time propagation by repeated squaring of the uniformized step
/// I + W/Λ. Cross-check only.
pub fn relax_steady_state(gen: &TiltedGenerator, squarings: u32) -> Result<Vec<f64>> {
    gen.check_connected(gen.half_j())?;
    let n = gen.dim();
    let lambda = 1.01 * gen.max_rate();
    let mut m = gen.to_dense();
    for (i, row) in m.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= lambda;
        }
        row[i] += 1.0;
    }
    for _ in 0..squarings {
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let mik = m[i][k];
                if mik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[i][j] += mik * m[k][j];
                }
            }
        }
        m = next;
    }
    let start = vec![1.0 / n as f64; n];
    let mut p = mat_vec(&m, &start);
    let total: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= total;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerronRoot {
    /// G in absolute units (scale × scaled).
    pub value: f64,
    /// G in units of the generator's prefactor.
    pub scaled: f64,
    pub bisection_steps: usize,
}

const MAX_BISECTION_STEPS: usize = 4000;

/// Largest eigenvalue of a real-tilt generator.
///
/// The generator is symmetrizable (off-diagonal products are ≥ 0), so the
/// Sturm count of W - λ decides whether λ lies above the Perron root. The
/// LDLᵀ pivots are tracked through their excess over -κ⁺_i,
///
/// e_0 = λ,  e_{i+1} = λ + (κ⁻_i e_i - δ_i) / (κ⁺_i + e_i),
///
/// where δ_i = κ⁺_i(s)κ⁻_i(s) - κ⁺_iκ⁻_i. λ exceeds the root exactly when every
/// κ⁺_i + e_i and the final e_N are positive. Only small quantities are ever
/// subtracted, so roots far below the largest rate keep their relative accuracy.
pub fn dominant_eigenvalue(gen: &TiltedGenerator) -> Result<PerronRoot> {
    gen.check_connected(gen.half_j())?;
    let n = gen.kappa_plus.len();
    let norm = gen.max_rate();
    let a: Vec<f64> = gen.kappa_plus.iter().map(|v| v / norm).collect();
    let b: Vec<f64> = gen.kappa_minus.iter().map(|v| v / norm).collect();
    if let Some(i) = (0..n).find(|&i| a[i] * b[i] < f64::MIN_POSITIVE) {
        return Err(Error::RateRangeUnderflow {
            m: HalfInt(2 * i as i64 - gen.half_j().twice()).value(),
        });
    }
    let delta: Vec<f64> = gen.product_excess.iter().map(|v| v / (norm * norm)).collect();
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::Numerical(format!("tilt s = {} overflows the generator", gen.tilt)));
    }

    let above_root = |lambda: f64| -> bool {
        let mut e = lambda;
        for i in 0..n {
            let pivot = a[i] + e;
            if !(pivot > 0.0) {
                return false;
            }
            e = lambda + (b[i] * e - delta[i]) / pivot;
        }
        e > 0.0
    };

    // G ≥ max diagonal entry; Gershgorin on the symmetrized form bounds it above.
    let diag = |i: usize| -(if i > 0 { b[i - 1] } else { 0.0 } + a.get(i).copied().unwrap_or(0.0));
    let coupling = |i: usize| ((a[i] * b[i] + delta[i]).max(0.0)).sqrt();
    let mut lo = (0..=n).map(diag).fold(f64::NEG_INFINITY, f64::max);
    let mut hi = (0..=n)
        .map(|i| {
            let left = if i > 0 { coupling(i - 1) } else { 0.0 };
            let right = if i < n { coupling(i) } else { 0.0 };
            diag(i) + left + right
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut widen = 0;
    while !above_root(hi) {
        hi += (hi - lo).abs().max(1.0);
        widen += 1;
        if widen > 64 {
            return Err(Error::NoConvergence {
                iterations: widen,
                detail: "could not bracket the Perron root from above".into(),
            });
        }
    }
    if above_root(lo) {
        // lo is a lower bound by construction; only round-off can land here.
        lo -= 1e-300_f64.max(lo.abs() * f64::EPSILON);
    }

    let mut steps = 0;
    while steps < MAX_BISECTION_STEPS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if above_root(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().min(hi.abs()) && lo.signum() == hi.signum() {
            break;
        }
    }
    if steps == MAX_BISECTION_STEPS {
        return Err(Error::NoConvergence {
            iterations: steps,
            detail: format!("bracket [{lo:e}, {hi:e}] did not collapse"),
        });
    }
    let scaled = (lo + 0.5 * (hi - lo)) * norm;
    Ok(PerronRoot {
        value: scaled * gen.scale,
        scaled,
        bisection_steps: steps,
    })
}

/// Right Perron vector, normalized to unit sum, with ‖(W - G)v‖∞ / max-rate.
///
/// Solves (W - G)v = 0 with the last row replaced by Σ v = 1. The left
/// Perron vector is strictly positive, so that row is redundant at the root.
pub fn perron_vector(gen: &TiltedGenerator, root: &PerronRoot) -> Result<(Vec<f64>, f64)> {
    let n = gen.dim();
    let norm = gen.max_rate();
    let w = gen.to_dense();
    let g = root.scaled;
    let mut a: Vec<Vec<f64>> = w
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(k, &x)| if i == k { (x - g) / norm } else { x / norm })
                .collect()
        })
        .collect();
    a[n - 1] = vec![1.0; n];
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut v = solve_dense(a, rhs).ok_or_else(|| Error::Numerical("Perron system is singular".into()))?;
    if v.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(Error::Numerical(format!("Perron vector has invalid entries: {v:?}")));
    }
    for x in v.iter_mut() {
        *x = x.max(0.0);
    }
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
    let mut r = mat_vec(&w, &v);
    for (ri, vi) in r.iter_mut().zip(&v) {
        *ri -= g * vi;
    }
    Ok((v, max_abs(&r) / norm))
}

/// Geometric population P_m ∝ y^{m+j} over the N+1 levels.
pub fn geometric_population(n: u32, y: f64) -> Vec<f64> {
    let levels = n as usize + 1;
    if y == 1.0 {
        return vec![1.0 / levels as f64; levels];
    }
    let ln_y = y.ln();
    let top = if ln_y > 0.0 { n as f64 * ln_y } else { 0.0 };
    let weights: Vec<f64> = (0..levels).map(|i| (i as f64 * ln_y - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Off-resonant closed form P_m = y^{N/2}(1-y) y^m / (1 - y^{N+1}), with
/// y = γ⁺/γ⁻ from Marcus kernels at the level-independent gap Δ_m ≈ -ε₀.
///
/// Intended for ξ ≪ |ε₀|; the caller owns that check.
pub fn analytic_population(sys: &SystemParams, source: &BathParams, drain: &BathParams) -> Result<Vec<f64>> {
    let kernel = MarcusKernel::new(sys.tunneling, source, drain)?;
    let gap = -sys.eps0;
    let shift = kernel.xi_source + kernel.xi_drain;
    let ln_y = ((gap - shift).powi(2) - (gap + shift).powi(2)) / (4.0 * kernel.w);
    Ok(geometric_population(sys.n, ln_y.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;
    use crate::rates::{marcus_rates, tilted_rates, tilted_rates_real};

    fn generator(p: &Params) -> TiltedGenerator {
        build_generator(&marcus_rates(&p.ladder(), &p.source, &p.drain).unwrap()).unwrap()
    }

    fn tilted(p: &Params, s: f64) -> TiltedGenerator {
        build_tilted_generator(&tilted_rates_real(&p.ladder(), &p.source, &p.drain, s).unwrap()).unwrap()
    }

    #[test]
    fn columns_conserve_probability() {
        for n in [1, 2, 5, 12] {
            let g = generator(&Params::symmetric(n, 0.3, 0.2, 10.0, 4.0, 2.0).unwrap());
            let max = g.max_rate();
            for c in g.column_sums() {
                assert!(c.abs() <= 1e-15 * max);
            }
        }
    }

    #[test]
    fn two_level_generator_layout() {
        let p = Params::symmetric(1, 0.4, 0.2, 10.0, 4.0, 2.0).unwrap();
        let l = p.ladder();
        let r = marcus_rates(&l, &p.source, &p.drain).unwrap();
        let t = tilted_rates(&l, &p.source, &p.drain, Complex64::new(0.3, 0.0)).unwrap();
        let g = build_complex_generator(&r, &t).unwrap();
        let w = g.to_dense();
        assert_eq!(w[0][0].re, -r.scaled_plus[0]);
        assert_eq!(w[1][1].re, -r.scaled_minus[0]);
        assert_eq!(w[1][0], t.scaled_plus[0]);
        assert_eq!(w[0][1], t.scaled_minus[0]);
    }

    #[test]
    fn six_qubit_structure() {
        let g = generator(&Params::symmetric(6, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap());
        assert_eq!(g.dim(), 7);
        assert_eq!(g.lower.len(), 6);
        assert_eq!(g.upper.len(), 6);
        // no κ⁻ below the bottom level, no κ⁺ above the top one
        assert_eq!(g.diag(0), -g.kappa_plus[0]);
        assert_eq!(g.diag(6), -g.kappa_minus[5]);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let p = Params::symmetric(3, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap();
        let mut r = marcus_rates(&p.ladder(), &p.source, &p.drain).unwrap();
        r.scaled_minus.pop();
        assert!(matches!(build_generator(&r), Err(Error::Domain(_))));
    }

    #[test]
    fn two_level_steady_state() {
        let p = Params::symmetric(1, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap();
        let ss = steady_state(&generator(&p)).unwrap();
        assert!((ss.populations[0] - 0.5).abs() < 1e-15);
        assert!((ss.populations[1] - 0.5).abs() < 1e-15);

        let p = Params::symmetric(1, 1.3, 0.1, 10.0, 4.0, 2.0).unwrap();
        let g = generator(&p);
        let ss = steady_state(&g).unwrap();
        let (kp, km) = (g.kappa_plus[0], g.kappa_minus[0]);
        assert!((ss.populations[0] - km / (kp + km)).abs() < 1e-15);
    }

    #[test]
    fn six_qubit_population_shape() {
        let p = Params::symmetric(6, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap();
        let ss = steady_state(&generator(&p)).unwrap();
        let pop = &ss.populations;
        assert!(ss.residual <= 1e-12);
        assert!((pop.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for i in 0..7 {
            assert!((pop[i] - pop[6 - i]).abs() <= 1e-12 * pop[i]);
        }
        assert!(pop[0] > pop[1] && pop[1] > pop[2] && pop[2] > pop[3]);
        assert!(pop[3] < pop[4] && pop[4] < pop[5] && pop[5] < pop[6]);
    }

    #[test]
    fn neighbour_ratio_matches_rate_ratio() {
        let p = Params::symmetric(8, 0.6, 0.25, 10.0, 6.0, 1.5).unwrap();
        let g = generator(&p);
        let ss = steady_state(&g).unwrap();
        for i in 0..8 {
            let ratio = ss.populations[i + 1] / ss.populations[i];
            let expected = g.kappa_plus[i] / g.kappa_minus[i];
            assert!(((ratio - expected) / expected).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_temperatures_give_gibbs_state() {
        let t = 2.5;
        let p = Params::symmetric(7, 0.8, 0.15, 10.0, t, t).unwrap();
        let l = p.ladder();
        let ss = steady_state(&generator(&p)).unwrap();
        let weights: Vec<f64> = l.energies.iter().map(|e| (-e / t).exp()).collect();
        let z: f64 = weights.iter().sum();
        for (pm, w) in ss.populations.iter().zip(&weights) {
            assert!(((pm - w / z) / (w / z)).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxation_agrees_with_linear_solve() {
        let p = Params::symmetric(4, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap();
        let g = generator(&p);
        let ss = steady_state(&g).unwrap();
        let relaxed = relax_steady_state(&g, 40).unwrap();
        for (a, b) in ss.populations.iter().zip(&relaxed) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn underflowed_rate_is_reported() {
        let p = Params::symmetric(40, 0.0, 10.0, 10.0, 0.5, 0.5).unwrap();
        let g = generator(&p);
        assert!(matches!(steady_state(&g), Err(Error::DisconnectedLadder { .. })));
        assert!(matches!(dominant_eigenvalue(&g), Err(Error::DisconnectedLadder { .. })));
    }

    #[test]
    fn rate_products_below_double_range_are_reported() {
        // connected ladder, but κ⁺κ⁻ on the edge link is below 1e-308
        let p = Params::symmetric(10, 0.0, 10.0, 10.0, 4.0, 2.0).unwrap();
        let g = generator(&p);
        assert!(steady_state(&g).is_ok());
        assert!(matches!(dominant_eigenvalue(&g), Err(Error::RateRangeUnderflow { .. })));
    }

    #[test]
    fn perron_root_vanishes_without_tilt() {
        for (n, alpha) in [(1, 0.1), (6, 0.3), (12, 2.0)] {
            let g = generator(&Params::symmetric(n, 0.0, alpha, 10.0, 4.0, 2.0).unwrap());
            let root = dominant_eigenvalue(&g).unwrap();
            assert!(root.scaled.abs() <= 1e-12 * g.max_rate());
        }
    }

    #[test]
    fn two_level_closed_form() {
        let p = Params::symmetric(1, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap();
        for k in 0..=16 {
            let s = -0.5 + 0.05 * k as f64;
            let g = tilted(&p, s);
            let (a, b) = (g.kappa_plus[0], g.kappa_minus[0]);
            let prod = g.lower[0] * g.upper[0];
            let closed = -(a + b) / 2.0 + ((a - b).powi(2) / 4.0 + prod).sqrt();
            let root = dominant_eigenvalue(&g).unwrap();
            assert!((root.scaled - closed).abs() <= 1e-10 * closed.abs().max(1e-300), "s = {s}");
        }
    }

    #[test]
    fn two_level_tiny_root_keeps_relative_accuracy() {
        // Strong coupling and off-resonance make G many decades below the rates.
        let p = Params::symmetric(1, 6.0, 3.0, 10.0, 4.0, 2.0).unwrap();
        let g = tilted(&p, 1e-9);
        let (a, b) = (g.kappa_plus[0], g.kappa_minus[0]);
        let d = g.product_excess[0];
        // rationalized quadratic root, free of cancellation
        let oracle = d / ((a + b) / 2.0 + ((a - b).powi(2) / 4.0 + a * b + d).sqrt());
        let root = dominant_eigenvalue(&g).unwrap();
        assert!(oracle.abs() < 1e-8 * g.max_rate());
        let naive = -(a + b) / 2.0 + ((a - b).powi(2) / 4.0 + g.lower[0] * g.upper[0]).sqrt();
        assert!(((naive - oracle) / oracle).abs() > 1e-9);
        assert!(((root.scaled - oracle) / oracle).abs() < 1e-10);
    }

    #[test]
    fn perron_vector_at_zero_tilt_is_steady_state() {
        let p = Params::symmetric(6, 0.2, 0.1, 10.0, 4.0, 2.0).unwrap();
        let g = generator(&p);
        let root = dominant_eigenvalue(&g).unwrap();
        let (v, residual) = perron_vector(&g, &root).unwrap();
        let ss = steady_state(&g).unwrap();
        assert!(residual <= 1e-10);
        for (a, b) in v.iter().zip(&ss.populations) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn perron_vector_residual_with_tilt() {
        let p = Params::symmetric(8, 0.0, 0.2, 10.0, 4.0, 2.0).unwrap();
        for s in [-0.4, -0.1, 0.05, 0.3] {
            let g = tilted(&p, s);
            let root = dominant_eigenvalue(&g).unwrap();
            let (v, residual) = perron_vector(&g, &root).unwrap();
            assert!(residual <= 1e-10, "s = {s}: residual {residual:e}");
            assert!(v.iter().all(|x| *x > 0.0));
        }
    }

    #[test]
    fn geometric_population_examples() {
        assert_eq!(geometric_population(4, 1.0), vec![0.2; 5]);
        let p = geometric_population(2, 2.0);
        for (a, b) in p.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let big = geometric_population(30, 1e12);
        assert!(big.iter().all(|v| v.is_finite()));
        assert!((big[30] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn analytic_population_in_off_resonant_regime() {
        let p = Params::symmetric(6, 5.0, 5e-4, 10.0, 4.0, 2.0).unwrap();
        assert!(p.ladder().xi_total / 5.0 < 1e-3);
        let exact = steady_state(&generator(&p)).unwrap();
        let approx = analytic_population(&p.system, &p.source, &p.drain).unwrap();
        let worst = exact
            .populations
            .iter()
            .zip(&approx)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(worst <= 1e-2, "max deviation {worst}");
    }

    #[test]
    fn cgf_is_convex_across_symmetry_axis() {
        let p = Params::symmetric(6, 0.0, 0.1, 10.0, 4.0, 2.0).unwrap();
        let axis = -p.beta_bias() / 2.0;
        let values: Vec<f64> = (0..21)
            .map(|k| {
                let s = axis - 0.5 + 0.05 * k as f64;
                dominant_eigenvalue(&tilted(&p, s)).unwrap().scaled
            })
            .collect();
        for w in values.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
    }
}
