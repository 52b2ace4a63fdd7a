//! Physical parameters and the polaron-dressed collective-spin ladder.
//!
//! Energies are in units of the tunneling strength (Δ = 1 by convention),
//! with ħ = k_B = 1. Magnetic quantum numbers are half-integers and are
//! stored doubled (`2m`) so that level indexing stays in integers.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BathLabel {
    Source,
    Drain,
}

/// Ohmic photon bath, J(ω) = α ω e^{-ω/ω_c}, held at temperature T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub label: BathLabel,
    pub alpha: f64,
    pub omega_c: f64,
    pub temperature: f64,
}

impl BathParams {
    pub fn new(label: BathLabel, alpha: f64, omega_c: f64, temperature: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return Err(Error::invalid("omega_c", format!("must be finite and > 0, got {omega_c}")));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            let name = match label {
                BathLabel::Source => "T_S",
                BathLabel::Drain => "T_D",
            };
            return Err(Error::invalid(name, format!("must be finite and > 0, got {temperature}")));
        }
        Ok(Self {
            label,
            alpha,
            omega_c,
            temperature,
        })
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    /// Reorganization energy ξ_v = α_v ω_{c,v} / π.
    pub fn xi(&self) -> f64 {
        self.alpha * self.omega_c / PI
    }

    /// Ohmic spectral density J_v(ω).
    pub fn spectral_density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            0.0
        } else {
            self.alpha * omega * (-omega / self.omega_c).exp()
        }
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.label, alpha, self.omega_c, self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: u32,
    pub eps0: f64,
    pub tunneling: f64,
}

impl SystemParams {
    pub fn new(n: u32, eps0: f64, tunneling: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N", "qubit count must be >= 1"));
        }
        if !eps0.is_finite() {
            return Err(Error::invalid("eps0", "must be finite"));
        }
        if !(tunneling.is_finite() && tunneling > 0.0) {
            return Err(Error::invalid("tunneling", format!("must be > 0, got {tunneling}")));
        }
        Ok(Self { n, eps0, tunneling })
    }

    /// Unit tunneling, the convention used throughout.
    pub fn with_unit_tunneling(n: u32, eps0: f64) -> Result<Self> {
        Self::new(n, eps0, 1.0)
    }
}

/// Complete input for one model evaluation: N qubits between a source and a drain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub system: SystemParams,
    pub source: BathParams,
    pub drain: BathParams,
}

impl Params {
    pub fn new(system: SystemParams, source: BathParams, drain: BathParams) -> Result<Self> {
        if source.label != BathLabel::Source || drain.label != BathLabel::Drain {
            return Err(Error::Domain("baths must be given as (Source, Drain)".into()));
        }
        Ok(Self {
            system,
            source,
            drain,
        })
    }

    /// Symmetric baths: common α and ω_c, distinct temperatures.
    pub fn symmetric(n: u32, eps0: f64, alpha: f64, omega_c: f64, t_source: f64, t_drain: f64) -> Result<Self> {
        Self::new(
            SystemParams::with_unit_tunneling(n, eps0)?,
            BathParams::new(BathLabel::Source, alpha, omega_c, t_source)?,
            BathParams::new(BathLabel::Drain, alpha, omega_c, t_drain)?,
        )
    }

    pub fn baths(&self) -> [BathParams; 2] {
        [self.source, self.drain]
    }

    pub fn ladder(&self) -> Ladder {
        build_ladder(&self.system, &self.baths())
    }

    /// Same parameters with both couplings set to `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Ok(Self {
            system: self.system,
            source: self.source.with_alpha(alpha)?,
            drain: self.drain.with_alpha(alpha)?,
        })
    }

    pub fn with_size(&self, n: u32) -> Result<Self> {
        Ok(Self {
            system: SystemParams::new(n, self.system.eps0, self.system.tunneling)?,
            ..*self
        })
    }

    /// β_D - β_S; positive when the source is hotter.
    pub fn beta_bias(&self) -> f64 {
        self.drain.beta() - self.source.beta()
    }
}

/// Total reorganization energy ξ = Σ_v α_v ω_{c,v} / π.
pub fn reorganization_energy(baths: &[BathParams]) -> f64 {
    baths.iter().map(BathParams::xi).sum()
}

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// g^±_m = j(j+1) - m(m±1), evaluated exactly from the doubled quantum numbers.
pub fn ladder_coefficient(j: HalfInt, m: HalfInt, sign: Sign) -> Result<f64> {
    let (tj, tm) = (j.twice(), m.twice());
    if tj < 0 || tm.abs() > tj || (tj - tm) % 2 != 0 {
        return Err(Error::Domain(format!("m = {m} is not a level of the j = {j} ladder")));
    }
    // 4 g = 2j(2j+2) - 2m(2m ± 2)
    let shift = match sign {
        Sign::Plus => 2,
        Sign::Minus => -2,
    };
    let four_g = tj * (tj + 2) - tm * (tm + shift);
    Ok(four_g as f64 / 4.0)
}

/// Eigen-ladder of H_s = -ε₀ J_z - ξ J_z² on the |j, m⟩ basis, m = -j..j.
///
/// Level arrays are indexed by `i = m + j`; gap and coefficient arrays by the
/// lower level of each adjacent pair, `i = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub j: HalfInt,
    pub eps0: f64,
    pub tunneling: f64,
    pub xi_total: f64,
    pub energies: Vec<f64>,
    pub gaps: Vec<f64>,
    pub g_plus: Vec<f64>,
    pub g_minus: Vec<f64>,
}

impl Ladder {
    pub fn size(&self) -> usize {
        self.energies.len()
    }

    pub fn m(&self, index: usize) -> HalfInt {
        HalfInt(2 * index as i64 - self.j.twice())
    }

    pub fn m_values(&self) -> Vec<HalfInt> {
        (0..self.size()).map(|i| self.m(i)).collect()
    }

    pub fn index_of(&self, m: HalfInt) -> Option<usize> {
        let shifted = m.twice() + self.j.twice();
        if shifted < 0 || shifted % 2 != 0 || shifted / 2 >= self.size() as i64 {
            None
        } else {
            Some((shifted / 2) as usize)
        }
    }
}

pub fn build_ladder(sys: &SystemParams, baths: &[BathParams]) -> Ladder {
    let xi = reorganization_energy(baths);
    let j = HalfInt(sys.n as i64);
    let energy = |m: f64| -sys.eps0 * m - xi * m * m;
    let mut ladder = Ladder {
        j,
        eps0: sys.eps0,
        tunneling: sys.tunneling,
        xi_total: xi,
        energies: Vec::with_capacity(sys.n as usize + 1),
        gaps: Vec::with_capacity(sys.n as usize),
        g_plus: Vec::with_capacity(sys.n as usize),
        g_minus: Vec::with_capacity(sys.n as usize + 1),
    };
    for i in 0..=sys.n as usize {
        let m = ladder.m(i);
        ladder.energies.push(energy(m.value()));
        ladder
            .g_minus
            .push(ladder_coefficient(j, m, Sign::Minus).expect("m within ladder"));
        if i < sys.n as usize {
            // closed form keeps the ε₀ = 0 antisymmetry exact
            ladder.gaps.push(-sys.eps0 - (2.0 * m.value() + 1.0) * xi);
            ladder
                .g_plus
                .push(ladder_coefficient(j, m, Sign::Plus).expect("m within ladder"));
        }
    }
    ladder
}
