//! Exact Ohmic bath kernel: propagator Q_v(t), spectrum C_v(ω), and rates by
//! frequency-domain convolution, beyond the Marcus short-time expansion.
//!
//! For J_v(ω) = α ω e^{-ω/ω_c} the propagator has the Matsubara form
//!
//! ```text
//! Re Q(t) = (α/π) [ ½ ln(1 + ω_c²t²) + Σ_{n≥1} ln(1 + t²/(1/ω_c + nβ)²) ]
//! Im Q(t) = (α/π) arctan(ω_c t)
//! ```
//!
//! The sum is taken explicitly up to `MATSUBARA_TERMS` and closed with a
//! midpoint Euler-Maclaurin tail.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{ladder_coefficient, BathParams, Ladder, Sign};
use crate::rates::{marcus_density, JumpMoments, RateTable};

const MATSUBARA_TERMS: usize = 128;

/// Re Q at which the time grid stops; e^{-30} ≈ 9e-14.
pub const DECAY_TARGET: f64 = 30.0;

pub const DEFAULT_MAX_POINTS: usize = 1 << 18;

fn re_q_series(bath: &BathParams, t: f64, terms: usize) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        return 0.0;
    }
    let a = 1.0 / bath.omega_c;
    let beta = bath.beta();
    let mut sum = 0.5 * (bath.omega_c * t).powi(2).ln_1p();
    for n in 1..=terms {
        let u = a + n as f64 * beta;
        sum += (t / u).powi(2).ln_1p();
    }
    let u = a + (terms as f64 + 0.5) * beta;
    let integral = (2.0 * t * (t / u).atan() - u * (t / u).powi(2).ln_1p()) / beta;
    let slope = -2.0 * beta * t * t / (u * (u * u + t * t));
    sum += integral + slope / 24.0;
    bath.alpha / PI * sum
}

/// Q_v(t) for any real t; Q(-t) = Q(t)*.
pub fn propagator_value(bath: &BathParams, t: f64) -> Complex64 {
    let re = re_q_series(bath, t, MATSUBARA_TERMS);
    let im = bath.alpha / PI * (bath.omega_c * t).atan();
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSpec {
    pub dt: f64,
    /// Fixed end of the grid; `None` grows it until Re Q ≥ `DECAY_TARGET`.
    pub t_max: Option<f64>,
    pub max_points: usize,
}

impl PropagatorSpec {
    /// Step resolving both the cutoff and the thermal Gaussian of every bath.
    pub fn for_baths(baths: &[BathParams]) -> Self {
        let dt = baths
            .iter()
            .map(|b| {
                let thermal = b.xi() * b.temperature;
                let gauss = if thermal > 0.0 { 0.4 / thermal.sqrt() } else { f64::INFINITY };
                (0.2 / b.omega_c).min(gauss)
            })
            .fold(f64::INFINITY, f64::min);
        Self {
            dt,
            t_max: None,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

/// Q_v on the uniform grid t_n = n·dt, n = 0..len.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorGrid {
    pub bath: BathParams,
    pub dt: f64,
    pub t_max: f64,
    pub q_values: Vec<Complex64>,
    /// Change of Re Q(t_max) when the explicit Matsubara sum is halved.
    pub error_estimate: f64,
}

impl PropagatorGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..self.q_values.len()).map(|n| n as f64 * self.dt).collect()
    }

    /// e^{-Re Q(t_max)}, the weight dropped by the truncation.
    pub fn remainder(&self) -> f64 {
        (-self.q_values.last().map_or(0.0, |q| q.re)).exp()
    }
}

pub fn propagator(bath: &BathParams, spec: &PropagatorSpec) -> Result<PropagatorGrid> {
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {}", spec.dt)));
    }
    let mut q_values = vec![Complex64::new(0.0, 0.0)];
    match spec.t_max {
        Some(t_max) => {
            let steps = (t_max / spec.dt).ceil() as usize;
            if steps + 1 > spec.max_points {
                return Err(Error::OutsideValidity(format!(
                    "t_max = {t_max} needs {} points, limit {}",
                    steps + 1,
                    spec.max_points
                )));
            }
            q_values.extend((1..=steps).map(|n| propagator_value(bath, n as f64 * spec.dt)));
        }
        None => loop {
            let n = q_values.len();
            if n >= spec.max_points {
                return Err(Error::OutsideValidity(format!(
                    "Re Q reaches only {:.3} after {n} steps (α = {}, T = {}); the kernel decays too slowly",
                    q_values[n - 1].re,
                    bath.alpha,
                    bath.temperature
                )));
            }
            let q = propagator_value(bath, n as f64 * spec.dt);
            q_values.push(q);
            if q.re >= DECAY_TARGET {
                break;
            }
        },
    }
    let t_max = (q_values.len() - 1) as f64 * spec.dt;
    let error_estimate = (re_q_series(bath, t_max, MATSUBARA_TERMS) - re_q_series(bath, t_max, MATSUBARA_TERMS / 2)).abs();
    Ok(PropagatorGrid {
        bath: *bath,
        dt: spec.dt,
        t_max,
        q_values,
        error_estimate,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    /// e^{-Q(t_n)}.
    Exact(Vec<Complex64>),
    Marcus(BathParams),
}

/// C_v(ω) on ω_k = (k - L/2)·dω, dω = 2π/(L·dt).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpectrum {
    pub omegas: Vec<f64>,
    pub c_values: Vec<f64>,
    pub d_omega: f64,
    pub dt: f64,
    source: Source,
}

impl CorrelationSpectrum {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn is_marcus(&self) -> bool {
        matches!(self.source, Source::Marcus(_))
    }

    /// (1/2π)∫C dω on the grid.
    pub fn sum_rule(&self) -> f64 {
        self.c_values.iter().sum::<f64>() * self.d_omega / (2.0 * PI)
    }

    /// C(sign·ω_k + shift) on the grid, sign = ±1.
    pub fn sample(&self, sign: f64, shift: f64) -> Vec<f64> {
        match &self.source {
            Source::Marcus(bath) => self
                .omegas
                .iter()
                .map(|&w| marcus_density(bath, sign * w + shift).expect("validated at construction"))
                .collect(),
            Source::Exact(weights) => {
                let len = self.len();
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for (n, (b, f)) in buf.iter_mut().zip(weights).enumerate() {
                    *b = f * Complex64::from_polar(1.0, shift * n as f64 * self.dt);
                }
                let direction = if sign > 0.0 { FftDirection::Inverse } else { FftDirection::Forward };
                FftPlanner::new().plan_fft(len, direction).process(&mut buf);
                (0..len)
                    .map(|k| self.dt * (2.0 * buf[(k + len / 2) % len].re - 1.0))
                    .collect()
            }
        }
    }

    /// C(ω) at an arbitrary frequency by direct summation.
    pub fn density_at(&self, omega: f64) -> f64 {
        match &self.source {
            Source::Marcus(bath) => marcus_density(bath, omega).expect("validated at construction"),
            Source::Exact(weights) => {
                let tail: f64 = weights
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(n, f)| (f * Complex64::from_polar(1.0, omega * n as f64 * self.dt)).re)
                    .sum();
                self.dt * (1.0 + 2.0 * tail)
            }
        }
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len() && self.dt == other.dt
    }
}

/// Power-of-two length that holds every propagator twice over and gives
/// frequency spacing no coarser than `max_d_omega`.
pub fn spectrum_len(props: &[&PropagatorGrid], max_d_omega: f64) -> usize {
    let longest = props.iter().map(|p| p.q_values.len()).max().unwrap_or(1);
    let dt = props.first().map_or(1.0, |p| p.dt);
    let resolution = (2.0 * PI / (max_d_omega * dt)).ceil() as usize;
    (2 * longest).max(resolution).next_power_of_two()
}

pub fn spectrum(prop: &PropagatorGrid, len: usize) -> Result<CorrelationSpectrum> {
    let threshold = (-DECAY_TARGET).exp();
    let remainder = prop.remainder();
    if remainder > threshold {
        return Err(Error::Truncation { remainder, threshold });
    }
    if len < 2 * prop.q_values.len() {
        return Err(Error::Domain(format!(
            "spectrum length {len} is shorter than twice the {} time points",
            prop.q_values.len()
        )));
    }
    let weights: Vec<Complex64> = prop.q_values.iter().map(|q| (-q).exp()).collect();
    let mut spec = CorrelationSpectrum {
        omegas: grid(len, prop.dt),
        c_values: Vec::new(),
        d_omega: 2.0 * PI / (len as f64 * prop.dt),
        dt: prop.dt,
        source: Source::Exact(weights),
    };
    spec.c_values = spec.sample(1.0, 0.0);
    Ok(spec)
}

/// Gaussian Marcus density on the same kind of grid, for like-for-like checks.
pub fn marcus_spectrum(bath: &BathParams, dt: f64, len: usize) -> Result<CorrelationSpectrum> {
    marcus_density(bath, 0.0)?;
    let mut spec = CorrelationSpectrum {
        omegas: grid(len, dt),
        c_values: Vec::new(),
        d_omega: 2.0 * PI / (len as f64 * dt),
        dt,
        source: Source::Marcus(*bath),
    };
    spec.c_values = spec.sample(1.0, 0.0);
    Ok(spec)
}

fn grid(len: usize, dt: f64) -> Vec<f64> {
    let dw = 2.0 * PI / (len as f64 * dt);
    (0..len).map(|k| (k as f64 - (len / 2) as f64) * dw).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRate {
    pub value: Complex64,
    /// |I_h - I_2h| of the trapezoidal integral, in rate units.
    pub error: f64,
    /// Drain energy gained per jump, d ln κ/d(iχ) at the given χ.
    pub moment: Complex64,
}

/// κ^±_m(χ) = (Δ/2)² g⁺_m/(2π) e^{iχσ} ∫ C_S(-ω) C_D(ω + σ) e^{iωχ} dω, σ = ∓Δ_m.
///
/// This is the convolution over C_S(∓ω) C_D(±ω ∓ Δ_m) with ω → -ω applied to
/// the down jump, so both signs share one grid. `index` runs over m = -j..j.
pub fn exact_rate(
    ladder: &Ladder,
    source: &CorrelationSpectrum,
    drain: &CorrelationSpectrum,
    index: usize,
    sign: Sign,
    chi: Complex64,
) -> Result<ExactRate> {
    if !source.same_grid(drain) {
        return Err(Error::Domain(format!(
            "spectra grids differ: {} points at dt = {} vs {} points at dt = {}",
            source.len(),
            source.dt,
            drain.len(),
            drain.dt
        )));
    }
    if index >= ladder.size() {
        return Err(Error::Domain(format!("level index {index} outside the ladder")));
    }
    let g = ladder_coefficient(ladder.j, ladder.m(index), Sign::Plus)?;
    let zero = Complex64::new(0.0, 0.0);
    if g == 0.0 {
        return Ok(ExactRate {
            value: zero,
            error: 0.0,
            moment: zero,
        });
    }
    let gap = ladder.gaps[index];
    let shift = match sign {
        Sign::Plus => -gap,
        Sign::Minus => gap,
    };
    let cs = source.sample(-1.0, 0.0);
    let cd = drain.sample(1.0, shift);
    let i_chi = Complex64::i() * chi;
    let integrand: Vec<Complex64> = source
        .omegas
        .iter()
        .zip(cs.iter().zip(&cd))
        .map(|(&w, (&a, &b))| a * b * (i_chi * w).exp())
        .collect();
    let peak = integrand.iter().fold(0.0, |acc: f64, v| acc.max(v.norm()));
    let edge = integrand[0].norm().max(integrand[integrand.len() - 1].norm());
    if !(peak > 0.0) || edge > 1e-12 * peak {
        return Err(Error::Domain(format!(
            "rate integrand not contained in ω ∈ [{:.3}, {:.3}] (edge/peak = {:.2e})",
            source.omegas[0],
            source.omegas[source.len() - 1],
            edge / peak
        )));
    }
    let dw = source.d_omega;
    let fine: Complex64 = integrand.iter().sum::<Complex64>() * dw;
    let coarse: Complex64 = integrand.iter().step_by(2).sum::<Complex64>() * (2.0 * dw);
    let weighted: Complex64 = integrand
        .iter()
        .zip(&source.omegas)
        .map(|(v, &w)| v * w)
        .sum::<Complex64>()
        * dw;
    let pre = 0.25 * ladder.tunneling * ladder.tunneling * g / (2.0 * PI);
    let phase = (i_chi * shift).exp();
    Ok(ExactRate {
        value: fine * phase * pre,
        error: (fine - coarse).norm() * phase.norm() * pre,
        moment: weighted / fine + shift,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactRateTable {
    /// Rates with prefactor (Δ/2)².
    pub rates: RateTable,
    pub moments: JumpMoments,
    pub errors_plus: Vec<f64>,
    pub errors_minus: Vec<f64>,
}

impl ExactRateTable {
    pub fn max_relative_error(&self) -> f64 {
        (0..self.rates.len())
            .map(|i| {
                (self.errors_plus[i] / self.rates.kappa_plus(i)).max(self.errors_minus[i] / self.rates.kappa_minus(i))
            })
            .fold(0.0, f64::max)
    }
}

/// Untilted exact rates and jump moments for every link of the ladder.
pub fn exact_rate_table(
    ladder: &Ladder,
    source: &CorrelationSpectrum,
    drain: &CorrelationSpectrum,
) -> Result<ExactRateTable> {
    let n = ladder.gaps.len();
    let zero = Complex64::new(0.0, 0.0);
    let pre = 0.25 * ladder.tunneling * ladder.tunneling;
    let mut table = ExactRateTable {
        rates: RateTable {
            scaled_plus: Vec::with_capacity(n),
            scaled_minus: Vec::with_capacity(n),
            prefactor: pre,
            w: f64::NAN,
        },
        moments: JumpMoments {
            q_plus: Vec::with_capacity(n),
            q_minus: Vec::with_capacity(n),
            d: f64::NAN,
        },
        errors_plus: Vec::with_capacity(n),
        errors_minus: Vec::with_capacity(n),
    };
    for i in 0..n {
        let up = exact_rate(ladder, source, drain, i, Sign::Plus, zero)?;
        let down = exact_rate(ladder, source, drain, i, Sign::Minus, zero)?;
        table.rates.scaled_plus.push(up.value.re / pre);
        table.rates.scaled_minus.push(down.value.re / pre);
        table.moments.q_plus.push(up.moment.re);
        table.moments.q_minus.push(down.moment.re);
        table.errors_plus.push(up.error);
        table.errors_minus.push(down.error);
    }
    Ok(table)
}

/// Time-domain form κ^±_m(χ) = (Δ/2)² g⁺_m ∫dτ e^{-Q_S(τ) - Q_D(τ-χ) ∓ iΔ_m τ}
/// for real χ, with the drain alone shifted by the counting field.
pub fn time_domain_rate(
    ladder: &Ladder,
    source: &BathParams,
    drain: &BathParams,
    index: usize,
    sign: Sign,
    chi: f64,
    spec: &PropagatorSpec,
) -> Result<Complex64> {
    if index >= ladder.gaps.len() {
        return Err(Error::Domain(format!("link index {index} outside the ladder")));
    }
    let t_max = match spec.t_max {
        Some(t) => t,
        None => {
            let s = propagator(source, spec)?;
            let d = propagator(drain, spec)?;
            s.t_max.max(d.t_max) + chi.abs()
        }
    };
    let steps = (t_max / spec.dt).ceil() as i64;
    let gap = ladder.gaps[index];
    let sigma = match sign {
        Sign::Plus => -1.0,
        Sign::Minus => 1.0,
    };
    let sum: Complex64 = (-steps..=steps)
        .map(|n| {
            let tau = n as f64 * spec.dt;
            let phase = Complex64::new(0.0, sigma * gap * tau);
            (-propagator_value(source, tau) - propagator_value(drain, tau - chi) + phase).exp()
        })
        .sum();
    let g = ladder.g_plus[index];
    Ok(sum * spec.dt * 0.25 * ladder.tunneling * ladder.tunneling * g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcusComparison {
    /// |C(ξ) - C_M(ξ)| / C_M(ξ) at the Marcus peak.
    pub peak_deviation: f64,
    /// (1/2π)∫|C - C_M| dω.
    pub l1_distance: f64,
}

pub fn compare_with_marcus(spec: &CorrelationSpectrum, bath: &BathParams) -> Result<MarcusComparison> {
    let xi = bath.xi();
    let peak = marcus_density(bath, xi)?;
    let l1 = spec
        .omegas
        .iter()
        .zip(&spec.c_values)
        .map(|(&w, &c)| Ok((c - marcus_density(bath, w)?).abs()))
        .sum::<Result<f64>>()?
        * spec.d_omega
        / (2.0 * PI);
    Ok(MarcusComparison {
        peak_deviation: (spec.density_at(xi) - peak).abs() / peak,
        l1_distance: l1,
    })
}

/// Exact spectra for both baths on one shared grid.
pub fn spectra_pair(source: &BathParams, drain: &BathParams) -> Result<(CorrelationSpectrum, CorrelationSpectrum)> {
    let spec = PropagatorSpec::for_baths(&[*source, *drain]);
    let ps = propagator(source, &spec)?;
    let pd = propagator(drain, &spec)?;
    let len = spectrum_len(&[&ps, &pd], 0.05);
    Ok((spectrum(&ps, len)?, spectrum(&pd, len)?))
}
