//! Marcus-limit transition rates between adjacent ladder levels.
//!
//! Short-time expansion of the bath propagator, Q_v(τ) ≈ ξ_v(τ²/β_v + iτ),
//! turns every bath density into a Gaussian, and the two-bath convolution
//! that defines κ^±_m into a closed form:
//!
//! κ^±_m = (Δ/2)² g⁺_m √(π/W) exp[-(Δ_m ± ξ_S ± ξ_D)² / 4W],  W = T_S ξ_S + T_D ξ_D.
//!
//! Rates are stored in units of the common prefactor A = (Δ/2)² √(π/W) and
//! built from their logarithms, so deep off-resonant exponents underflow to
//! zero instead of producing NaN.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BathParams, Ladder, Params};

/// Gaussian bath density C_v(ω) = √(πβ_v/ξ_v) exp[-β_v(ω - ξ_v)²/(4ξ_v)].
pub fn marcus_density(bath: &BathParams, omega: f64) -> Result<f64> {
    let xi = bath.xi();
    if xi <= 0.0 {
        return Err(Error::SingularBath(format!(
            "{:?} bath has zero reorganization energy",
            bath.label
        )));
    }
    let beta = bath.beta();
    Ok((PI * beta / xi).sqrt() * (-beta * (omega - xi).powi(2) / (4.0 * xi)).exp())
}

/// Scalars shared by every Marcus rate of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcusKernel {
    pub xi_source: f64,
    pub xi_drain: f64,
    pub t_source: f64,
    pub t_drain: f64,
    /// W = T_S ξ_S + T_D ξ_D.
    pub w: f64,
    /// D = T_S T_D ξ_S ξ_D / W.
    pub d: f64,
    /// A = (Δ/2)² √(π/W).
    pub prefactor: f64,
}

impl MarcusKernel {
    pub fn new(tunneling: f64, source: &BathParams, drain: &BathParams) -> Result<Self> {
        let (xi_source, xi_drain) = (source.xi(), drain.xi());
        let (t_source, t_drain) = (source.temperature, drain.temperature);
        let w = t_source * xi_source + t_drain * xi_drain;
        if !(w > 0.0) {
            return Err(Error::SingularBath(
                "W = T_S xi_S + T_D xi_D vanishes; both couplings are zero".into(),
            ));
        }
        let d = t_source * t_drain * xi_source * xi_drain / w;
        let prefactor = 0.25 * tunneling * tunneling * (PI / w).sqrt();
        Ok(Self {
            xi_source,
            xi_drain,
            t_source,
            t_drain,
            w,
            d,
            prefactor,
        })
    }

    pub fn for_params(params: &Params) -> Result<Self> {
        Self::new(params.system.tunneling, &params.source, &params.drain)
    }

    /// ln(κ^±/A) for gap `gap` and coefficient `g`; -∞ when g = 0.
    fn log_scaled(&self, g: f64, gap: f64, plus: bool) -> f64 {
        if g <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let shift = self.xi_source + self.xi_drain;
        let centre = if plus { gap + shift } else { gap - shift };
        g.ln() - centre * centre / (4.0 * self.w)
    }

    /// Mean drain-energy gain per jump, q^± = ∓Δ_m - D(1/T_S + (∓Δ_m - ξ_D)/(T_D ξ_D)).
    ///
    /// Written over the common denominator W so that a vanishing drain
    /// coupling stays finite.
    fn moment(&self, gap: f64, plus: bool) -> f64 {
        let signed = if plus { -gap } else { gap };
        (signed * self.t_drain * self.xi_drain - self.t_drain * self.xi_source * self.xi_drain
            + self.t_source * self.xi_source * self.xi_drain)
            / self.w
    }
}

/// κ^±_m for m = -j..j-1, in units of `prefactor`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub scaled_plus: Vec<f64>,
    pub scaled_minus: Vec<f64>,
    pub prefactor: f64,
    pub w: f64,
}

impl RateTable {
    pub fn len(&self) -> usize {
        self.scaled_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled_plus.is_empty()
    }

    pub fn kappa_plus(&self, i: usize) -> f64 {
        self.prefactor * self.scaled_plus[i]
    }

    pub fn kappa_minus(&self, i: usize) -> f64 {
        self.prefactor * self.scaled_minus[i]
    }

    /// Same table with the global prefactor replaced.
    pub fn with_prefactor(&self, prefactor: f64) -> Self {
        Self {
            prefactor,
            ..self.clone()
        }
    }

    pub fn max_scaled(&self) -> f64 {
        self.scaled_plus
            .iter()
            .chain(&self.scaled_minus)
            .fold(0.0, |acc, &k| acc.max(k))
    }
}

pub fn marcus_rates(ladder: &Ladder, source: &BathParams, drain: &BathParams) -> Result<RateTable> {
    let kernel = MarcusKernel::new(ladder.tunneling, source, drain)?;
    Ok(rates_with_kernel(ladder, &kernel))
}

pub(crate) fn rates_with_kernel(ladder: &Ladder, kernel: &MarcusKernel) -> RateTable {
    let (plus, minus) = ladder
        .gaps
        .iter()
        .zip(&ladder.g_plus)
        .map(|(&gap, &g)| {
            (
                kernel.log_scaled(g, gap, true).exp(),
                kernel.log_scaled(g, gap, false).exp(),
            )
        })
        .unzip();
    RateTable {
        scaled_plus: plus,
        scaled_minus: minus,
        prefactor: kernel.prefactor,
        w: kernel.w,
    }
}

/// Counting-field dressed rates κ^±_m(χ) = κ^±_m F^±_m(χ) for complex χ.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedRateTable {
    pub chi: Complex64,
    pub scaled_plus: Vec<Complex64>,
    pub scaled_minus: Vec<Complex64>,
    pub prefactor: f64,
}

impl TiltedRateTable {
    pub fn kappa_plus(&self, i: usize) -> Complex64 {
        self.scaled_plus[i] * self.prefactor
    }

    pub fn kappa_minus(&self, i: usize) -> Complex64 {
        self.scaled_minus[i] * self.prefactor
    }
}

/// F^±_m(χ) in exponent form: ln F^± = iχ q^±_m - Dχ².
pub fn tilted_rates(
    ladder: &Ladder,
    source: &BathParams,
    drain: &BathParams,
    chi: Complex64,
) -> Result<TiltedRateTable> {
    let kernel = MarcusKernel::new(ladder.tunneling, source, drain)?;
    let i_chi = Complex64::i() * chi;
    let gauss = -kernel.d * chi * chi;
    let dress = |g: f64, gap: f64, plus: bool| {
        let log_rate = kernel.log_scaled(g, gap, plus);
        if log_rate == f64::NEG_INFINITY {
            Complex64::new(0.0, 0.0)
        } else {
            (log_rate + i_chi * kernel.moment(gap, plus) + gauss).exp()
        }
    };
    let (plus, minus) = ladder
        .gaps
        .iter()
        .zip(&ladder.g_plus)
        .map(|(&gap, &g)| (dress(g, gap, true), dress(g, gap, false)))
        .unzip();
    Ok(TiltedRateTable {
        chi,
        scaled_plus: plus,
        scaled_minus: minus,
        prefactor: kernel.prefactor,
    })
}

/// Rates on the real tilt axis s = iχ, kept as base rates plus log tilts.
///
/// κ^±_m(s) = κ^±_m exp(log_tilt^±_m). Keeping the tilt separate lets the
/// generator form κ⁺κ⁻(e^{t⁺+t⁻} - 1) without cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTiltedRates {
    pub s: f64,
    pub base: RateTable,
    pub log_tilt_plus: Vec<f64>,
    pub log_tilt_minus: Vec<f64>,
}

impl RealTiltedRates {
    pub fn untilted(base: RateTable) -> Self {
        let n = base.len();
        Self {
            s: 0.0,
            base,
            log_tilt_plus: vec![0.0; n],
            log_tilt_minus: vec![0.0; n],
        }
    }

    pub fn scaled_plus(&self, i: usize) -> f64 {
        dress(self.base.scaled_plus[i], self.log_tilt_plus[i])
    }

    pub fn scaled_minus(&self, i: usize) -> f64 {
        dress(self.base.scaled_minus[i], self.log_tilt_minus[i])
    }
}

fn dress(rate: f64, log_tilt: f64) -> f64 {
    if rate == 0.0 {
        0.0
    } else {
        (rate.ln() + log_tilt).exp()
    }
}

/// Real-axis fast path: ln F^±_m(-is) = s q^±_m + D s².
pub fn tilted_rates_real(ladder: &Ladder, source: &BathParams, drain: &BathParams, s: f64) -> Result<RealTiltedRates> {
    let kernel = MarcusKernel::new(ladder.tunneling, source, drain)?;
    Ok(real_tilt_with_kernel(ladder, &kernel, rates_with_kernel(ladder, &kernel), s))
}

pub(crate) fn real_tilt_with_kernel(ladder: &Ladder, kernel: &MarcusKernel, base: RateTable, s: f64) -> RealTiltedRates {
    let gauss = kernel.d * s * s;
    let (plus, minus) = ladder
        .gaps
        .iter()
        .map(|&gap| {
            (
                s * kernel.moment(gap, true) + gauss,
                s * kernel.moment(gap, false) + gauss,
            )
        })
        .unzip();
    RealTiltedRates {
        s,
        base,
        log_tilt_plus: plus,
        log_tilt_minus: minus,
    }
}

/// Per-jump mean drain-energy gains q^±_m and the coupling combination D.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpMoments {
    pub q_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    pub d: f64,
}

impl JumpMoments {
    pub fn max_abs(&self) -> f64 {
        self.q_plus
            .iter()
            .chain(&self.q_minus)
            .fold(0.0, |acc, &q| acc.max(q.abs()))
    }
}

pub fn jump_moments(ladder: &Ladder, source: &BathParams, drain: &BathParams) -> Result<JumpMoments> {
    let kernel = MarcusKernel::new(ladder.tunneling, source, drain)?;
    Ok(moments_with_kernel(ladder, &kernel))
}

pub(crate) fn moments_with_kernel(ladder: &Ladder, kernel: &MarcusKernel) -> JumpMoments {
    let (q_plus, q_minus) = ladder
        .gaps
        .iter()
        .map(|&gap| (kernel.moment(gap, true), kernel.moment(gap, false)))
        .unzip();
    JumpMoments {
        q_plus,
        q_minus,
        d: kernel.d,
    }
}
