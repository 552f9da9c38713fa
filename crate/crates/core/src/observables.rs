//! The N-channel coincidence observable `Π_j A†_j A_j`, its moments, the
//! photon-presence projector, and harmonic analysis of phase scans.
//!
//! Two moment conventions are kept apart:
//!
//! * [`MomentConvention::DetectorStatistics`] evaluates the product of
//!   output photon numbers on the exact output distribution.
//! * [`MomentConvention::ReducedOperator`] evaluates `B†B / N^N` with
//!   `B = a₁^N − (−a₂)^N` on the two interferometer modes, with the
//!   N − 2 idle ports traced out as vacuum.
//!
//! First moments coincide; second moments differ once more than two photons
//! are involved.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{inner_product, PureState};
use crate::phase::{PhaseGrid, TrigInterpolant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MomentConvention {
    #[serde(rename = "detector")]
    DetectorStatistics,
    #[serde(rename = "reduced")]
    ReducedOperator,
}

impl MomentConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DetectorStatistics => "detector",
            Self::ReducedOperator => "reduced",
        }
    }
}

impl std::str::FromStr for MomentConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detector" | "detector_statistics" => Ok(Self::DetectorStatistics),
            "reduced" | "reduced_operator" => Ok(Self::ReducedOperator),
            other => Err(Error::InvalidParameter(format!(
                "unknown convention {other:?}"
            ))),
        }
    }
}

/// First and second moment of an observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

impl MomentResult {
    /// Derives the variance, clamping rounding-level negatives to zero.
    pub fn from_moments(mean: f64, second_moment: f64) -> Self {
        let variance = (second_moment - mean * mean).max(0.0);
        Self {
            mean,
            second_moment,
            variance,
        }
    }

    pub const ZERO: Self = Self {
        mean: 0.0,
        second_moment: 0.0,
        variance: 0.0,
    };

    /// Moments of `gain · Î`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self::from_moments(gain * self.mean, gain * gain * self.second_moment)
    }

    /// Weighted sum of moments, as for a convex mixture of states.
    pub fn mixture<I: IntoIterator<Item = (f64, Self)>>(parts: I) -> Self {
        let (mean, second) = parts.into_iter().fold((0.0, 0.0), |(m, s), (w, r)| {
            (m + w * r.mean, s + w * r.second_moment)
        });
        Self::from_moments(mean, second)
    }
}

/// Moments of `Π_j n̂_j` from the exact output number distribution.
pub fn coincidence_moments_detector(state_out: &PureState) -> Result<MomentResult> {
    let dist = state_out.number_distribution()?;
    let (mean, second) = dist.iter().fold((0.0, 0.0), |(m, s), (occ, p)| {
        let v = occ.count_product();
        (m + p * v, s + p * v * v)
    });
    Ok(MomentResult::from_moments(mean, second))
}

fn require_two_modes(state: &PureState) -> Result<()> {
    if state.modes() == 2 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "reduced moments need the two interferometer modes, got {}",
            state.modes()
        )))
    }
}

fn parity(ports: usize) -> f64 {
    if ports.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `B|ψ⟩` with `B = a₁^N − (−1)^N a₂^N`.
fn reduced_lowering(state: &PureState, ports: usize) -> Result<PureState> {
    let n = ports as u32;
    let first = state.apply_annihilation_power(0, n)?;
    let second = state.apply_annihilation_power(1, n)?;
    first.add(&second.scaled((-parity(ports)).into()))
}

/// `B†|χ⟩`.
fn reduced_raising(state: &PureState, ports: usize) -> Result<PureState> {
    let n = ports as u32;
    let first = state.apply_creation_power(0, n)?;
    let second = state.apply_creation_power(1, n)?;
    first.add(&second.scaled((-parity(ports)).into()))
}

/// Moments of `B†B / N^N` for a state on the two interferometer modes
/// (after the phase, before the N-port).
pub fn coincidence_moments_reduced(state_a: &PureState, ports: usize) -> Result<MomentResult> {
    require_two_modes(state_a)?;
    state_a.require_normalized()?;
    if ports < 2 {
        return Err(Error::InvalidParameter("reduced moments need N ≥ 2".into()));
    }
    let scale = (ports as f64).powi(ports as i32);
    let lowered = reduced_lowering(state_a, ports)?;
    let mean = lowered.norm_sqr() / scale;
    if lowered.is_zero() {
        return Ok(MomentResult::ZERO);
    }
    let number_like = reduced_raising(&lowered, ports)?;
    let second = number_like.norm_sqr() / (scale * scale);
    Ok(MomentResult::from_moments(mean, second))
}

/// First moment from the expanded form: two N-particle intensity terms and
/// the pair of N-particle cross-mode terms.
pub fn first_moment_crosscheck(state_a: &PureState, ports: usize) -> Result<f64> {
    require_two_modes(state_a)?;
    state_a.require_normalized()?;
    let n = ports as u32;
    let x1 = state_a.apply_annihilation_power(0, n)?;
    let x2 = state_a.apply_annihilation_power(1, n)?;
    let intensity = x1.norm_sqr() + x2.norm_sqr();
    // ⟨a₁†ᴺ a₂ᴺ⟩ + ⟨a₁ᴺ a₂†ᴺ⟩
    let cross = inner_product(&x1, &x2)? + inner_product(&x2, &x1)?;
    let scale = (ports as f64).powi(ports as i32);
    Ok((intensity - parity(ports) * cross.re) / scale)
}

/// `⟨Π_j (1 − |0⟩⟨0|_j)⟩`: probability that every output channel is occupied.
pub fn presence_expectation(state_out: &PureState) -> Result<f64> {
    let dist = state_out.number_distribution()?;
    Ok(dist
        .iter()
        .filter(|(occ, _)| occ.all_occupied())
        .map(|(_, p)| p)
        .sum())
}

/// Moments of the presence projector (a Bernoulli variable).
pub fn presence_moments(state_out: &PureState) -> Result<MomentResult> {
    let p = presence_expectation(state_out)?;
    Ok(MomentResult::from_moments(p, p))
}

/// Magnitudes `|c_k|` of the complex Fourier coefficients of a sampled
/// pattern, `f(φ) = Σ_k c_k e^{ikφ}`, for `k = 0..=max_harmonic`.
pub fn harmonic_spectrum(
    grid: &PhaseGrid,
    values: &[f64],
    max_harmonic: usize,
) -> Result<BTreeMap<usize, f64>> {
    if grid.len() < 2 * max_harmonic + 1 {
        return Err(Error::Aliasing {
            points: grid.len(),
            degree: max_harmonic,
        });
    }
    let interp = TrigInterpolant::fit(grid, values)?;
    Ok((0..=max_harmonic)
        .map(|k| (k, interp.coefficient(k as i64).norm()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{balanced_splitter_with_phase, build_full_network, evolve, NetworkSpec};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn chain_output(photons: u32, ports: usize, phi: f64) -> PureState {
        let spec = NetworkSpec {
            ports,
            phase: phi,
            include_front_splitter: true,
        };
        let input = PureState::fock(ports, 0, photons).unwrap();
        evolve(&input, &build_full_network(&spec).unwrap()).unwrap()
    }

    fn inside(photons: u32, phi: f64) -> PureState {
        evolve(
            &PureState::fock(2, 0, photons).unwrap(),
            &balanced_splitter_with_phase(phi),
        )
        .unwrap()
    }

    fn noon(n: u32, phi: f64) -> PureState {
        let h = FRAC_1_SQRT_2;
        PureState::from_terms(
            2,
            [
                (vec![n, 0], Complex64::new(h, 0.0)),
                (vec![0, n], Complex64::from_polar(h, n as f64 * phi)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn detector_moments_examples() {
        let h = FRAC_1_SQRT_2;
        let hom = PureState::from_terms(
            2,
            [
                (vec![2, 0], Complex64::new(h, 0.0)),
                (vec![0, 2], Complex64::new(-h, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(coincidence_moments_detector(&hom).unwrap().mean, 0.0);

        let m = coincidence_moments_detector(&chain_output(2, 2, PI / 2.0)).unwrap();
        assert!((m.mean - 0.5).abs() < 1e-14);

        for ports in 2..=5 {
            let m = coincidence_moments_detector(&chain_output(1, ports, 0.9)).unwrap();
            assert_eq!(m.mean, 0.0);
        }
    }

    #[test]
    fn reduced_moments_examples() {
        for k in 0..13 {
            let phi = 0.1 + k as f64 * 0.5;
            let m = coincidence_moments_reduced(&inside(2, phi), 2).unwrap();
            let expected = (1.0 - (2.0 * phi).cos()) / 4.0;
            assert!((m.mean - expected).abs() < 1e-14);
            assert!((m.second_moment - expected).abs() < 1e-14);

            let m3 = coincidence_moments_reduced(&inside(3, phi), 3).unwrap();
            let expected = 2.0 / 81.0 * (1.0 + (3.0 * phi).cos());
            assert!((m3.second_moment - expected).abs() < 1e-14);

            let n3 = coincidence_moments_reduced(&noon(3, phi), 3).unwrap();
            let expected = 4.0 / 81.0 * (3.0 * phi).sin().powi(2);
            assert!((n3.variance - expected).abs() < 1e-14);
        }
        assert!(coincidence_moments_reduced(&PureState::vacuum(3), 3).is_err());
    }

    #[test]
    fn crosscheck_examples() {
        for k in 0..9 {
            let phi = k as f64 * 0.7;
            let v = first_moment_crosscheck(&inside(2, phi), 2).unwrap();
            assert!((v - (1.0 - (2.0 * phi).cos()) / 4.0).abs() < 1e-14);
            let v = first_moment_crosscheck(&noon(4, phi), 4).unwrap();
            assert!((v - 24.0 / 256.0 * (1.0 - (4.0 * phi).cos())).abs() < 1e-14);
        }
        assert_eq!(
            first_moment_crosscheck(&PureState::vacuum(2), 3).unwrap(),
            0.0
        );
    }

    #[test]
    fn presence_examples() {
        for k in 0..10 {
            let phi = 0.05 + k as f64 * 0.6;
            let out = chain_output(2, 2, phi);
            let p = presence_expectation(&out).unwrap();
            let m = coincidence_moments_detector(&out).unwrap().mean;
            assert!((p - m).abs() < 1e-15);

            let out = chain_output(3, 2, phi);
            let p = presence_expectation(&out).unwrap();
            let m = coincidence_moments_detector(&out).unwrap().mean;
            assert!(p <= m);
            if m > 1e-6 {
                assert!(p < m);
            }
        }
        assert_eq!(presence_expectation(&PureState::vacuum(3)).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_when_photons_equal_ports() {
        for ports in 2..=5 {
            let m = coincidence_moments_detector(&chain_output(ports as u32, ports, 0.37)).unwrap();
            assert!((m.second_moment - m.mean).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_excess_is_zero() {
        for ports in 3..=5 {
            for photons in 0..ports as u32 {
                let out = chain_output(photons, ports, 1.1);
                assert_eq!(coincidence_moments_detector(&out).unwrap().mean, 0.0);
                assert_eq!(presence_expectation(&out).unwrap(), 0.0);
                let r = coincidence_moments_reduced(&inside(photons, 1.1), ports).unwrap();
                assert_eq!(r, MomentResult::ZERO);
            }
        }
    }

    #[test]
    fn harmonic_spectrum_cases() {
        let grid = PhaseGrid::new(49).unwrap();
        let constant = vec![0.3; 49];
        let s = harmonic_spectrum(&grid, &constant, 24).unwrap();
        assert!((s[&0] - 0.3).abs() < 1e-15);
        assert!(s.iter().skip(1).all(|(_, v)| *v < 1e-15));

        let fringe: Vec<f64> = grid
            .points()
            .map(|p| (1.0 - (2.0 * p).cos()) / 4.0)
            .collect();
        let s = harmonic_spectrum(&grid, &fringe, 24).unwrap();
        assert!((s[&0] - 0.25).abs() < 1e-13);
        assert!((s[&2] - 0.125).abs() < 1e-13);
        for (k, v) in &s {
            if *k != 0 && *k != 2 {
                assert!(*v <= 1e-13, "harmonic {k}: {v}");
            }
        }

        assert!(matches!(
            harmonic_spectrum(&PhaseGrid::new(9).unwrap(), &[0.0; 9], 5),
            Err(Error::Aliasing { .. })
        ));
    }
}
