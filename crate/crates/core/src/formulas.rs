//! Closed-form predictions for the coincidence signal and phase spread.
//!
//! These are the analytic side of every comparison against the simulator.
//! Factorial ratios go through an exact integer path while they fit and a
//! log-factorial path beyond that.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Largest argument for which factorials are formed as exact integers.
const EXACT_FACTORIAL_LIMIT: u64 = 20;

/// Truncation target for coherent-state photon distributions.
pub const COHERENT_TAIL: f64 = 1e-12;

pub fn ln_factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_LIMIT {
        ((1..=n).product::<u64>() as f64).ln()
    } else {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }
}

/// `(n)! / (n − k)!`, the falling factorial.
fn falling_factorial(n: u64, k: u64) -> f64 {
    if n <= EXACT_FACTORIAL_LIMIT {
        ((n - k + 1)..=n).product::<u64>() as f64
    } else {
        (ln_factorial(n) - ln_factorial(n - k)).exp()
    }
}

/// `2^{N−1} N^N`, in log form.
fn ln_suppression(ports: u64) -> f64 {
    (ports - 1) as f64 * 2f64.ln() + ports as f64 * (ports as f64).ln()
}

/// `prefactor · (1 + parity_sign · cos(harmonic · φ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatternFormula {
    pub prefactor: f64,
    pub parity_sign: f64,
    pub harmonic: u32,
}

impl PatternFormula {
    pub fn zero(harmonic: u32) -> Self {
        Self {
            prefactor: 0.0,
            parity_sign: parity_sign(harmonic),
            harmonic,
        }
    }

    pub fn value(&self, phi: f64) -> f64 {
        self.prefactor * (1.0 + self.parity_sign * (self.harmonic as f64 * phi).cos())
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        let h = self.harmonic as f64;
        -self.prefactor * self.parity_sign * h * (h * phi).sin()
    }

    /// Peak value `2 · prefactor`.
    pub fn peak(&self) -> f64 {
        2.0 * self.prefactor
    }
}

/// `−(−1)^N`.
fn parity_sign(ports: u32) -> f64 {
    if ports.is_multiple_of(2) {
        -1.0
    } else {
        1.0
    }
}

fn check_ports(ports: u32) -> Result<()> {
    if ports < 2 {
        Err(Error::InvalidParameter(format!("need N ≥ 2, got {ports}")))
    } else {
        Ok(())
    }
}

/// Fock state with N photons: prefactor `N! / (2^{N−1} N^N)`.
pub fn fock_pattern(ports: u32) -> Result<PatternFormula> {
    excess_pattern(ports, 0)
}

/// The Fock prefactor as a reduced fraction `(numerator, denominator)`.
pub fn fock_prefactor_fraction(ports: u32) -> Result<(u128, u128)> {
    check_ports(ports)?;
    let overflow = || Error::InvalidParameter(format!("N = {ports} too large for exact fraction"));
    let num: u128 = (1..=ports as u128)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .ok_or_else(overflow)?;
    let den = 2u128
        .checked_pow(ports - 1)
        .and_then(|p| {
            (ports as u128)
                .checked_pow(ports)
                .and_then(|q| p.checked_mul(q))
        })
        .ok_or_else(overflow)?;
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Fock state with `N + E` photons: prefactor `(N+E)!/E! / (2^{N−1} N^N)`.
/// A negative excess yields the zero pattern.
pub fn excess_pattern(ports: u32, excess: i64) -> Result<PatternFormula> {
    check_ports(ports)?;
    if excess < 0 {
        return Ok(PatternFormula::zero(ports));
    }
    let n = ports as u64;
    let total = n + excess as u64;
    let gain = falling_factorial(total, n);
    let prefactor = if total <= EXACT_FACTORIAL_LIMIT && n <= 12 {
        let suppression = 2f64.powi(ports as i32 - 1) * (n as f64).powi(ports as i32);
        gain / suppression
    } else {
        (gain.ln() - ln_suppression(n)).exp()
    };
    Ok(PatternFormula {
        prefactor,
        parity_sign: parity_sign(ports),
        harmonic: ports,
    })
}

/// Pattern of an arbitrary single-channel input with photon-number weights
/// `|c_J|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralPattern {
    pub components: Vec<(f64, PatternFormula)>,
}

impl GeneralPattern {
    pub fn value(&self, phi: f64) -> f64 {
        self.components.iter().map(|(w, p)| w * p.value(phi)).sum()
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        self.components
            .iter()
            .map(|(w, p)| w * p.derivative(phi))
            .sum()
    }
}

pub fn general_pattern(ports: u32, weights: &BTreeMap<u32, f64>) -> Result<GeneralPattern> {
    check_ports(ports)?;
    let total: f64 = weights.values().sum();
    if (total - 1.0).abs() > 1e-12 || weights.values().any(|w| *w < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "photon-number weights sum to {total}"
        )));
    }
    let components = weights
        .iter()
        .filter(|(&j, &w)| j >= ports && w > 0.0)
        .map(|(&j, &w)| Ok((w, excess_pattern(ports, j as i64 - ports as i64)?)))
        .collect::<Result<_>>()?;
    Ok(GeneralPattern { components })
}

/// Signal and variance of the number-entangled state under the reduced
/// operator: mean `K(1 − (−1)^N cos Nφ)`, variance `K² sin² Nφ`, `K = N!/N^N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoonFormula {
    pub ports: u32,
    pub scale: f64,
}

impl NoonFormula {
    pub fn mean(&self, phi: f64) -> f64 {
        self.scale * (1.0 + parity_sign(self.ports) * (self.ports as f64 * phi).cos())
    }

    pub fn variance(&self, phi: f64) -> f64 {
        self.scale * self.scale * (self.ports as f64 * phi).sin().powi(2)
    }
}

pub fn noon_signal_and_variance(ports: u32) -> Result<NoonFormula> {
    check_ports(ports)?;
    let n = ports as u64;
    let scale = (ln_factorial(n) - n as f64 * (n as f64).ln()).exp();
    Ok(NoonFormula { ports, scale })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseClosedForms {
    /// Heisenberg limit `1/N`.
    pub noon: f64,
    /// Fock state with N photons, `√(2^{N−1})/N`.
    pub fock: f64,
    /// Shot noise `1/√(N+E)`.
    pub shot: f64,
}

pub fn noise_closed_forms(ports: u32, excess: u32) -> Result<NoiseClosedForms> {
    check_ports(ports)?;
    let n = ports as f64;
    Ok(NoiseClosedForms {
        noon: 1.0 / n,
        fock: 2f64.powf((n - 1.0) / 2.0) / n,
        shot: shot_noise(ports + excess),
    })
}

pub fn shot_noise(photons: u32) -> f64 {
    1.0 / (photons as f64).sqrt()
}

/// `√(8πN) / (2e)^N`, the large-N form of the Fock prefactor.
pub fn stirling_scaling(ports: u32) -> Result<f64> {
    check_ports(ports)?;
    let n = ports as f64;
    Ok((8.0 * PI * n).sqrt() / (2.0 * E).powf(n))
}

/// Photon-number distribution `|c_J|²` of a coherent state with the given
/// mean, truncated at the smallest `J_max` whose Poisson tail is below
/// [`COHERENT_TAIL`] and renormalized over `0..=J_max`.
pub fn coherent_weights(mean: f64) -> Result<BTreeMap<u32, f64>> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "coherent mean must be positive, got {mean}"
        )));
    }
    let pmf = |j: u32| (-mean + j as f64 * mean.ln() - ln_factorial(j as u64)).exp();
    // Tail above j, summed directly to avoid 1 − (sum) cancellation.
    let tail_above = |j: u32| {
        let mut acc = 0.0;
        let mut k = j + 1;
        loop {
            let p = pmf(k);
            acc += p;
            if k as f64 > mean && p < 1e-30 {
                break acc;
            }
            k += 1;
        }
    };
    let mut j_max = mean.floor() as u32;
    while tail_above(j_max) >= COHERENT_TAIL {
        j_max += 1;
    }
    let raw: Vec<f64> = (0..=j_max).map(pmf).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(j, p)| (j as u32, p / total))
        .collect())
}
