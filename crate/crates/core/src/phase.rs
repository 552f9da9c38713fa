//! Phase spread `Δφ = ΔI / |∂⟨I⟩/∂φ|` over a phase scan.
//!
//! Every pattern produced by the simulator is a trigonometric polynomial in
//! φ whose degree is bounded by the photon number, so a uniform grid with
//! `M ≥ 2·degree + 1` points determines it exactly. Slopes and off-grid
//! values come from the trigonometric interpolant rather than from finite
//! differences.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, InputState, DEFAULT_PHASE_POINTS};
use crate::formulas::shot_noise;
use crate::observables::{MomentConvention, MomentResult};

/// Slopes at or below this magnitude are treated as zero.
pub const SLOPE_FLOOR: f64 = 1e-10;
/// Variances at or below this are treated as zero.
pub const VARIANCE_FLOOR: f64 = 1e-14;
/// A refined signal minimum below this fraction of the peak counts as a
/// fringe zero.
const ZERO_SIGNAL_FRACTION: f64 = 1e-9;

/// `M` equally spaced phases `φ_m = (m + ½)·2π/M`, `M` odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseGrid {
    points: usize,
}

impl PhaseGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points < 3 || points.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "phase grid needs an odd number of points ≥ 3, got {points}"
            )));
        }
        Ok(Self { points })
    }

    /// Smallest odd grid of at least `minimum` points that resolves `degree`.
    pub fn resolving(degree: u32, minimum: usize) -> Self {
        let needed = (2 * degree as usize + 1).max(minimum).max(3);
        Self { points: needed | 1 }
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        TAU / self.points as f64
    }

    pub fn phi(&self, m: usize) -> f64 {
        (m as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|m| self.phi(m))
    }

    pub fn resolves(&self, degree: u32) -> bool {
        self.points > 2 * degree as usize
    }

    pub fn require_resolves(&self, degree: u32) -> Result<()> {
        if self.resolves(degree) {
            Ok(())
        } else {
            Err(Error::Aliasing {
                points: self.points,
                degree: degree as usize,
            })
        }
    }
}

/// Trigonometric interpolant `f(φ) = Σ_{|k|≤K} c_k e^{ikφ}` through samples
/// on a [`PhaseGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrigInterpolant {
    max_harmonic: i64,
    coefficients: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn fit(grid: &PhaseGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} samples on a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        let m = grid.len();
        let k_max = (m as i64 - 1) / 2;
        let coefficients = (-k_max..=k_max)
            .map(|k| {
                let sum: Complex64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| Complex64::from_polar(v, -(k as f64) * grid.phi(i)))
                    .sum();
                sum / m as f64
            })
            .collect();
        Ok(Self {
            max_harmonic: k_max,
            coefficients,
        })
    }

    pub fn max_harmonic(&self) -> i64 {
        self.max_harmonic
    }

    /// `c_k`; zero outside the resolved band.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        if k.abs() > self.max_harmonic {
            Complex64::default()
        } else {
            self.coefficients[(k + self.max_harmonic) as usize]
        }
    }

    fn eval_weighted(&self, phi: f64, weight: impl Fn(f64) -> Complex64) -> f64 {
        (-self.max_harmonic..=self.max_harmonic)
            .map(|k| {
                weight(k as f64) * self.coefficient(k) * Complex64::from_polar(1.0, k as f64 * phi)
            })
            .sum::<Complex64>()
            .re
    }

    pub fn value(&self, phi: f64) -> f64 {
        self.eval_weighted(phi, |_| Complex64::new(1.0, 0.0))
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        self.eval_weighted(phi, |k| Complex64::new(0.0, k))
    }

    pub fn second_derivative(&self, phi: f64) -> f64 {
        self.eval_weighted(phi, |k| Complex64::new(-k * k, 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum DeltaPhi {
    Finite(f64),
    /// Flat signal with nonzero noise.
    Infinite,
    /// Flat signal and no noise (0/0).
    Undefined,
}

impl DeltaPhi {
    pub fn classify(variance: f64, slope: f64) -> Self {
        if slope.abs() > SLOPE_FLOOR {
            Self::Finite(variance.max(0.0).sqrt() / slope.abs())
        } else if variance > VARIANCE_FLOOR {
            Self::Infinite
        } else {
            Self::Undefined
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Self::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
            Self::Undefined => f64::NAN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoisePoint {
    pub phi: f64,
    pub moments: MomentResult,
    pub slope: f64,
    pub delta_phi: DeltaPhi,
}

/// Moments sampled on a grid together with their interpolants.
#[derive(Clone, Debug)]
pub struct Scan {
    pub grid: PhaseGrid,
    pub degree: u32,
    pub points: Vec<NoisePoint>,
    mean: TrigInterpolant,
    second: TrigInterpolant,
}

impl Scan {
    /// Evaluates `moments` at every grid phase. `degree` bounds the
    /// trigonometric degree of both moments in φ.
    pub fn run<F>(grid: PhaseGrid, degree: u32, moments: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<MomentResult> + Sync,
    {
        grid.require_resolves(degree)?;
        let samples: Vec<MomentResult> = (0..grid.len())
            .into_par_iter()
            .map(|m| moments(grid.phi(m)))
            .collect::<Result<_>>()?;
        Self::from_samples(grid, degree, samples)
    }

    pub fn from_samples(grid: PhaseGrid, degree: u32, samples: Vec<MomentResult>) -> Result<Self> {
        grid.require_resolves(degree)?;
        let means: Vec<f64> = samples.iter().map(|s| s.mean).collect();
        let seconds: Vec<f64> = samples.iter().map(|s| s.second_moment).collect();
        let mean = TrigInterpolant::fit(&grid, &means)?;
        let second = TrigInterpolant::fit(&grid, &seconds)?;
        let points = samples
            .into_iter()
            .enumerate()
            .map(|(m, moments)| {
                let phi = grid.phi(m);
                let slope = mean.derivative(phi);
                NoisePoint {
                    phi,
                    moments,
                    slope,
                    delta_phi: DeltaPhi::classify(moments.variance, slope),
                }
            })
            .collect();
        Ok(Self {
            grid,
            degree,
            points,
            mean,
            second,
        })
    }

    pub fn mean_interpolant(&self) -> &TrigInterpolant {
        &self.mean
    }

    pub fn mean_at(&self, phi: f64) -> f64 {
        self.mean.value(phi)
    }

    pub fn slope_at(&self, phi: f64) -> f64 {
        self.mean.derivative(phi)
    }

    pub fn variance_at(&self, phi: f64) -> f64 {
        let m = self.mean.value(phi);
        (self.second.value(phi) - m * m).max(0.0)
    }

    /// Phase spread at an arbitrary φ from the interpolants.
    pub fn delta_phi_at(&self, phi: f64) -> DeltaPhi {
        DeltaPhi::classify(self.variance_at(phi), self.slope_at(phi))
    }

    /// Infimum of Δφ over φ.
    ///
    /// Grid minima are refined by golden-section search. At fringe zeros,
    /// where signal and noise vanish together, the limit is taken from
    /// symmetric pairs `φ₀ ± h` with Richardson extrapolation in `h²`; the
    /// zero itself is never evaluated.
    pub fn min_phase_spread(&self) -> Result<PhaseSpreadMinimum> {
        let n = self.grid.len();
        let means: Vec<f64> = self.points.iter().map(|p| p.moments.mean).collect();
        let peak = means.iter().cloned().fold(0.0, f64::max);
        if peak <= VARIANCE_FLOOR {
            return Err(Error::NoSignal);
        }
        let degree = self.degree.max(1) as f64;
        let step = self.grid.step();
        let h0 = (0.05 / degree).min(step / 4.0);

        let mut candidates: Vec<PhaseSpreadMinimum> = Vec::new();
        let mut zeros: Vec<f64> = Vec::new();

        for i in 0..n {
            let (prev, next) = ((i + n - 1) % n, (i + 1) % n);
            if means[i] <= means[prev] && means[i] <= means[next] {
                let phi0 = self.refine_signal_minimum(self.grid.phi(i), step);
                if self.mean.value(phi0) <= ZERO_SIGNAL_FRACTION * peak {
                    zeros.push(phi0);
                    if let Some(limit) = self.limit_at_zero(phi0, h0) {
                        candidates.push(PhaseSpreadMinimum {
                            phi_star: wrap(phi0),
                            delta_phi_min: limit,
                        });
                    }
                }
            }
        }

        let grid_values: Vec<f64> = self
            .points
            .iter()
            .map(|p| p.delta_phi.finite().unwrap_or(f64::INFINITY))
            .collect();
        for i in 0..n {
            let (prev, next) = ((i + n - 1) % n, (i + 1) % n);
            let v = grid_values[i];
            if !v.is_finite() || v > grid_values[prev] || v > grid_values[next] {
                continue;
            }
            let center = self.grid.phi(i);
            for (lo, hi) in split_around_zeros(center - step, center + step, &zeros, h0) {
                if let Some(found) = self.golden_section(lo, hi) {
                    candidates.push(found);
                }
            }
        }

        candidates
            .into_iter()
            .filter(|c| c.delta_phi_min.is_finite() && c.delta_phi_min > 0.0)
            .min_by(|a, b| a.delta_phi_min.total_cmp(&b.delta_phi_min))
            .ok_or(Error::NoSignal)
    }

    /// Smallest and largest signal over a period, refined off-grid.
    pub fn signal_extrema(&self) -> (f64, f64) {
        let n = self.grid.len();
        let step = self.grid.step();
        let means: Vec<f64> = self.points.iter().map(|p| p.moments.mean).collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let (prev, next) = (means[(i + n - 1) % n], means[(i + 1) % n]);
            if means[i] <= prev && means[i] <= next {
                let phi = self.refine_extremum(self.grid.phi(i), step, false);
                lo = lo.min(self.mean.value(phi));
            }
            if means[i] >= prev && means[i] >= next {
                let phi = self.refine_extremum(self.grid.phi(i), step, true);
                hi = hi.max(self.mean.value(phi));
            }
        }
        (lo, hi)
    }

    /// `(max − min)/(max + min)` of the signal.
    pub fn visibility(&self) -> f64 {
        let (lo, hi) = self.signal_extrema();
        (hi - lo) / (hi + lo)
    }

    fn refine_signal_minimum(&self, start: f64, step: f64) -> f64 {
        self.refine_extremum(start, step, false)
    }

    /// Newton iteration on the slope, seeded at a grid extremum of the mean.
    fn refine_extremum(&self, start: f64, step: f64, maximize: bool) -> f64 {
        let sign = if maximize { -1.0 } else { 1.0 };
        let mut phi = start;
        for _ in 0..50 {
            let d1 = self.mean.derivative(phi);
            let d2 = sign * self.mean.second_derivative(phi);
            if d2 <= 0.0 {
                break;
            }
            let d1 = sign * d1;
            let next = phi - d1 / d2;
            if (next - start).abs() > step {
                break;
            }
            let done = (next - phi).abs() < 1e-15;
            phi = next;
            if done {
                break;
            }
        }
        phi
    }

    fn limit_at_zero(&self, phi0: f64, h0: f64) -> Option<f64> {
        let symmetric = |h: f64| -> Option<f64> {
            let left = self.delta_phi_at(phi0 - h).finite()?;
            let right = self.delta_phi_at(phi0 + h).finite()?;
            Some(0.5 * (left + right))
        };
        let s1 = symmetric(h0)?;
        let s2 = symmetric(h0 / 2.0)?;
        let s3 = symmetric(h0 / 4.0)?;
        let r1 = (4.0 * s2 - s1) / 3.0;
        let r2 = (4.0 * s3 - s2) / 3.0;
        Some((16.0 * r2 - r1) / 15.0)
    }

    fn golden_section(&self, mut lo: f64, mut hi: f64) -> Option<PhaseSpreadMinimum> {
        let f = |phi: f64| self.delta_phi_at(phi).finite().unwrap_or(f64::INFINITY);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > 1e-10 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = f(x2);
            }
        }
        let phi = 0.5 * (lo + hi);
        let best = [(lo, f(lo)), (phi, f(phi)), (hi, f(hi))]
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        best.1.is_finite().then(|| PhaseSpreadMinimum {
            phi_star: wrap(best.0),
            delta_phi_min: best.1,
        })
    }
}

fn wrap(phi: f64) -> f64 {
    phi.rem_euclid(TAU)
}

/// Sub-intervals of `[lo, hi]` that stay at least `gap` away from every zero
/// (zeros compared modulo 2π).
fn split_around_zeros(lo: f64, hi: f64, zeros: &[f64], gap: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = Vec::new();
    for &z in zeros {
        let shift = ((lo - z) / TAU).ceil() * TAU;
        let mut zz = z + shift;
        while zz <= hi + gap {
            if zz >= lo - gap {
                cuts.push(zz);
            }
            zz += TAU;
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut start = lo;
    for z in cuts {
        let end = z - gap;
        if end > start {
            out.push((start, end));
        }
        start = start.max(z + gap);
    }
    if hi > start {
        out.push((start, hi));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseSpreadMinimum {
    pub phi_star: f64,
    pub delta_phi_min: f64,
}

/// Distance between two phases on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Phase where the Fock-state spread is smallest: 0 for even N, π/N for odd N.
pub fn fock_minimum_location(ports: u32) -> f64 {
    if ports.is_multiple_of(2) {
        0.0
    } else {
        PI / ports as f64
    }
}

/// Largest photon number simulated for a noise-surface cell.
pub const SURFACE_MAX_PHOTONS: u32 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sheet {
    /// Fock state with N photons (independent of E).
    Fock,
    /// Fock state with N + E photons.
    Excess,
    /// `1/√(N+E)`.
    Shot,
    /// Excess sheet evaluated under detector statistics.
    ExcessDetector,
}

impl Sheet {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fock => "fock",
            Self::Excess => "excess",
            Self::Shot => "shot",
            Self::ExcessDetector => "excess_detector",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceCell {
    pub ports: u32,
    pub excess: u32,
    pub sheet: Sheet,
    /// Minimum phase spread; `None` when the cell is beyond the simulation
    /// limits.
    pub delta_phi: Option<f64>,
}

impl SurfaceCell {
    pub fn log10(&self) -> Option<f64> {
        self.delta_phi.map(f64::log10)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseSurface {
    pub ports: Vec<u32>,
    pub excess: Vec<u32>,
    pub convention: MomentConvention,
    pub cells: Vec<SurfaceCell>,
}

impl NoiseSurface {
    pub fn cell(&self, ports: u32, excess: u32, sheet: Sheet) -> Option<&SurfaceCell> {
        self.cells
            .iter()
            .find(|c| c.ports == ports && c.excess == excess && c.sheet == sheet)
    }
}

/// Minimum phase spread of a Fock state with `photons` photons into an
/// N-port, or `None` if it cannot be simulated.
pub fn fock_min_phase_spread(
    ports: u32,
    photons: u32,
    convention: MomentConvention,
) -> Option<f64> {
    if photons > SURFACE_MAX_PHOTONS {
        return None;
    }
    let grid = PhaseGrid::resolving(photons, DEFAULT_PHASE_POINTS);
    let spec = ExperimentSpec::new(ports as usize, InputState::Fock { photons }, convention)
        .with_phase_points(grid.len());
    spec.scan()
        .and_then(|s| s.min_phase_spread())
        .ok()
        .map(|m| m.delta_phi_min)
}

/// Minimum phase spread over a grid of port counts and photon excesses.
/// Cells are computed in parallel and returned in (N, E, sheet) order.
pub fn noise_surface(
    ports: &[u32],
    excess: &[u32],
    convention: MomentConvention,
    include_detector_sheet: bool,
) -> Result<NoiseSurface> {
    if ports.is_empty() || excess.is_empty() {
        return Err(Error::InvalidParameter("empty noise-surface range".into()));
    }
    if let Some(bad) = ports.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidParameter(format!("port count {bad} below 2")));
    }
    let mut sheets = vec![Sheet::Fock, Sheet::Excess, Sheet::Shot];
    if include_detector_sheet {
        sheets.push(Sheet::ExcessDetector);
    }
    let jobs: Vec<(u32, u32, Sheet)> = ports
        .iter()
        .flat_map(|&n| excess.iter().map(move |&e| (n, e)))
        .flat_map(|(n, e)| sheets.iter().map(move |&s| (n, e, s)))
        .collect();
    // The Fock sheet does not depend on E; compute it once per N.
    let fock: Vec<(u32, Option<f64>)> = ports
        .par_iter()
        .map(|&n| (n, fock_min_phase_spread(n, n, convention)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(n, e, sheet)| {
            let delta_phi = match sheet {
                Sheet::Fock => fock.iter().find(|(p, _)| *p == n).and_then(|(_, v)| *v),
                Sheet::Excess => fock_min_phase_spread(n, n + e, convention),
                Sheet::ExcessDetector => {
                    fock_min_phase_spread(n, n + e, MomentConvention::DetectorStatistics)
                }
                Sheet::Shot => Some(shot_noise(n + e)),
            };
            SurfaceCell {
                ports: n,
                excess: e,
                sheet,
                delta_phi,
            }
        })
        .collect();
    Ok(NoiseSurface {
        ports: ports.to_vec(),
        excess: excess.to_vec(),
        convention,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::{fock_pattern, noon_signal_and_variance};

    #[test]
    fn grid_layout() {
        let g = PhaseGrid::new(49).unwrap();
        assert_eq!(g.len(), 49);
        assert!((g.phi(0) - TAU / 98.0).abs() < 1e-15);
        assert!(g.resolves(24));
        assert!(!g.resolves(25));
        assert!(PhaseGrid::new(48).is_err());
        assert_eq!(PhaseGrid::resolving(30, 49).len(), 61);
        assert_eq!(PhaseGrid::resolving(3, 49).len(), 49);
    }

    #[test]
    fn spectral_derivative_matches_analytic() {
        let grid = PhaseGrid::new(49).unwrap();
        for n in 2..=6 {
            let f = fock_pattern(n).unwrap();
            let values: Vec<f64> = grid.points().map(|p| f.value(p)).collect();
            let interp = TrigInterpolant::fit(&grid, &values).unwrap();
            for phi in grid.points().chain([0.0, 1.234, 5.0]) {
                assert!((interp.derivative(phi) - f.derivative(phi)).abs() <= 1e-11);
                assert!((interp.value(phi) - f.value(phi)).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn classification() {
        assert_eq!(DeltaPhi::classify(0.25, 0.5), DeltaPhi::Finite(1.0));
        assert_eq!(DeltaPhi::classify(0.25, 0.0), DeltaPhi::Infinite);
        assert_eq!(DeltaPhi::classify(0.0, 1e-12), DeltaPhi::Undefined);
    }

    fn fock_scan_reduced_closed_form(n: u32) -> Scan {
        // Reduced-convention Fock moments in closed form.
        let k = fock_pattern(n).unwrap();
        let a = 2f64.powi(n as i32) * k.prefactor * k.prefactor;
        let grid = PhaseGrid::new(49).unwrap();
        Scan::run(grid, n, |phi| {
            let u = k.value(phi) / k.prefactor;
            Ok(MomentResult::from_moments(k.value(phi), a * u))
        })
        .unwrap()
    }

    #[test]
    fn fock_minimum_is_a_fringe_zero_limit() {
        for n in 2..=6 {
            let scan = fock_scan_reduced_closed_form(n);
            let min = scan.min_phase_spread().unwrap();
            let expected = 2f64.powf((n as f64 - 1.0) / 2.0) / n as f64;
            assert!(
                (min.delta_phi_min - expected).abs() < 1e-8,
                "N={n}: {min:?}"
            );
            let loc = fock_minimum_location(n);
            let d = (0..n)
                .map(|j| circular_distance(min.phi_star, loc + j as f64 * TAU / n as f64))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6, "N={n}: {}", min.phi_star);
        }
    }

    #[test]
    fn noon_is_flat() {
        let f = noon_signal_and_variance(3).unwrap();
        let scan = Scan::run(PhaseGrid::new(49).unwrap(), 3, |phi| {
            let m = f.mean(phi);
            Ok(MomentResult::from_moments(m, f.variance(phi) + m * m))
        })
        .unwrap();
        for p in &scan.points {
            if let DeltaPhi::Finite(v) = p.delta_phi {
                assert!((v - 1.0 / 3.0).abs() < 1e-9);
            }
        }
        assert!((scan.min_phase_spread().unwrap().delta_phi_min - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn gain_invariance() {
        let base = fock_scan_reduced_closed_form(3);
        let grid = base.grid;
        let gained = Scan::from_samples(
            grid,
            3,
            base.points.iter().map(|p| p.moments.scaled(0.37)).collect(),
        )
        .unwrap();
        for (a, b) in base.points.iter().zip(&gained.points) {
            if let (DeltaPhi::Finite(x), DeltaPhi::Finite(y)) = (a.delta_phi, b.delta_phi) {
                assert!((x - y).abs() <= 1e-9 * x.max(1.0));
            }
        }
    }

    #[test]
    fn aliasing_and_no_signal() {
        let grid = PhaseGrid::new(9).unwrap();
        assert!(matches!(
            Scan::run(grid, 5, |_| Ok(MomentResult::ZERO)),
            Err(Error::Aliasing { .. })
        ));
        let flat = Scan::run(grid, 2, |_| Ok(MomentResult::ZERO)).unwrap();
        assert_eq!(flat.min_phase_spread(), Err(Error::NoSignal));
    }

    #[test]
    fn splitting_intervals() {
        let parts = split_around_zeros(-0.2, 0.2, &[0.0], 0.01);
        assert_eq!(parts.len(), 2);
        assert!((parts[0].1 + 0.01).abs() < 1e-15);
        assert!((parts[1].0 - 0.01).abs() < 1e-15);
        let wrapped = split_around_zeros(6.1, 6.4, &[0.0], 0.01);
        assert_eq!(wrapped.len(), 2);
        assert_eq!(split_around_zeros(1.0, 2.0, &[0.0], 0.01), vec![(1.0, 2.0)]);
    }

    /// Coherent arms are eigenstates of `a1^N − (−1)^N a2^N`, so the spread
    /// follows from `⟨[a^N, a†^N]⟩ = Σ_{k≥1} C(N,k)² k! x^(N−k)` with `x = n̄/2`:
    /// `min Δφ² = 2 Σ / (4 N² x^N)`.
    #[test]
    fn coherent_minimum_matches_commutator() {
        let commutator = |n: u32, x: f64| -> f64 {
            let mut binom = 1.0;
            let mut fact = 1.0;
            let mut sum = 0.0;
            for k in 1..=n {
                binom = binom * (n - k + 1) as f64 / k as f64;
                fact *= k as f64;
                sum += binom * binom * fact * x.powi((n - k) as i32);
            }
            sum
        };
        for n in [2u32, 3] {
            for mean in [4.0, 8.0, 12.0] {
                let x = mean / 2.0;
                let expected =
                    (2.0 * commutator(n, x) / (4.0 * (n * n) as f64 * x.powi(n as i32))).sqrt();
                let spec = ExperimentSpec::new(
                    n as usize,
                    InputState::Coherent { mean },
                    MomentConvention::ReducedOperator,
                );
                let grid = PhaseGrid::resolving(spec.photon_bound().unwrap(), DEFAULT_PHASE_POINTS);
                let min = spec
                    .with_phase_points(grid.len())
                    .scan()
                    .unwrap()
                    .min_phase_spread()
                    .unwrap();
                assert!(
                    (min.delta_phi_min - expected).abs() < 1e-6,
                    "N={n} n̄={mean}: {} vs {expected}",
                    min.delta_phi_min
                );
            }
        }
    }
}
