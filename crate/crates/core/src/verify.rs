//! Named verification suites comparing the simulator against closed forms
//! and independent routes. Each suite yields a list of [`Check`]s; the CLI
//! `verify` command and the acceptance tests both run them.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::detectors::{lossy_signal_ancilla, lossy_signal_scaled, sample_clicks, LossSpec};
use crate::error::{Error, Result};
use crate::experiment::{DetectorKind, ExperimentSpec, InputState};
use crate::fock::PureState;
use crate::formulas::{
    excess_pattern, fock_pattern, fock_prefactor_fraction, general_pattern, noise_closed_forms,
    noon_signal_and_variance, shot_noise,
};
use crate::networks::{
    balanced_splitter_with_phase, build_full_network, channel_intensities, conserves_photon_number,
    dft_nport, evolve, NetworkSpec,
};
use crate::observables::{
    coincidence_moments_detector, first_moment_crosscheck, harmonic_spectrum, presence_expectation,
    MomentConvention,
};
use crate::phase::{
    circular_distance, fock_minimum_location, noise_surface, DeltaPhi, PhaseGrid, Scan, Sheet,
};

use MomentConvention::{DetectorStatistics as Detector, ReducedOperator as Reduced};

/// One comparison. `pass` iff `|actual − expected| ≤ tol`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn close(name: impl Into<String>, expected: f64, actual: f64, tol: f64) -> Self {
        let pass = (actual - expected).abs() <= tol;
        Self {
            name: name.into(),
            expected,
            actual,
            tol,
            pass,
        }
    }

    /// A largest-deviation figure that must not exceed `tol`.
    pub fn max_error(name: impl Into<String>, error: f64, tol: f64) -> Self {
        let mut c = Self::close(name, 0.0, error, tol);
        c.pass &= error.is_finite();
        c
    }

    /// `actual ∈ [lo, hi]`, reported as midpoint ± half-width.
    pub fn within(name: impl Into<String>, lo: f64, hi: f64, actual: f64) -> Self {
        Self {
            name: name.into(),
            expected: 0.5 * (lo + hi),
            actual,
            tol: 0.5 * (hi - lo),
            pass: actual >= lo && actual <= hi,
        }
    }

    pub fn holds(name: impl Into<String>, condition: bool) -> Self {
        Self {
            name: name.into(),
            expected: 1.0,
            actual: if condition { 1.0 } else { 0.0 },
            tol: 0.0,
            pass: condition,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub const SUITES: &[&str] = &[
    "prefactors",
    "fringe",
    "halving",
    "patterns",
    "excess",
    "superposition",
    "noon",
    "fock-noise",
    "shot-noise",
    "loss",
    "threshold",
    "conventions",
    "sampling",
    "structure",
];

/// Runs a suite by name; `all` concatenates every suite.
pub fn run_suite(name: &str) -> Result<Report> {
    let checks = match name {
        "prefactors" => prefactors()?,
        "fringe" => fringe()?,
        "halving" => halving()?,
        "patterns" => patterns()?,
        "excess" => excess()?,
        "superposition" => superposition()?,
        "noon" => noon()?,
        "fock-noise" => fock_noise()?,
        "shot-noise" => shot_noise_floor()?,
        "loss" => loss()?,
        "threshold" => threshold()?,
        "conventions" => conventions()?,
        "sampling" => sampling()?,
        "structure" => structure()?,
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(run_suite(s)?.checks);
            }
            all
        }
        other => return Err(Error::InvalidParameter(format!("unknown suite {other:?}"))),
    };
    Ok(Report {
        suite: name.to_string(),
        checks,
    })
}

fn default_grid() -> PhaseGrid {
    PhaseGrid::new(crate::experiment::DEFAULT_PHASE_POINTS).expect("default grid is valid")
}

fn fock_spec(ports: usize, photons: u32, convention: MomentConvention) -> ExperimentSpec {
    ExperimentSpec::new(ports, InputState::Fock { photons }, convention)
}

/// Largest `|f(φ) − g(φ)|` over the scan's grid means.
fn max_mean_error(scan: &Scan, expected: impl Fn(f64) -> f64) -> f64 {
    scan.points
        .iter()
        .map(|p| (p.moments.mean - expected(p.phi)).abs())
        .fold(0.0, f64::max)
}

fn prefactors() -> Result<Vec<Check>> {
    let listed = [
        (2, 1u128, 4u128),
        (3, 1, 18),
        (4, 3, 256),
        (5, 3, 1250),
        (6, 5, 10368),
    ];
    listed
        .iter()
        .map(|&(n, num, den)| {
            let (a, b) = fock_prefactor_fraction(n)?;
            let exact = a == num && b == den;
            let mut c = Check::close(
                format!("N={n} prefactor {num}/{den}"),
                num as f64 / den as f64,
                fock_pattern(n)?.prefactor,
                1e-16,
            );
            c.pass &= exact;
            Ok(c)
        })
        .collect()
}

fn fringe() -> Result<Vec<Check>> {
    let grid = default_grid();
    let (mut e1, mut e2, mut coinc) = (0.0f64, 0.0f64, 0.0f64);
    for phi in grid.points() {
        let spec = NetworkSpec {
            ports: 2,
            phase: phi,
            include_front_splitter: true,
        };
        let out = evolve(&PureState::basis(&[1, 0])?, &build_full_network(&spec)?)?;
        let i = channel_intensities(&out);
        e1 = e1.max((i[0] - (1.0 + phi.cos()) / 2.0).abs());
        e2 = e2.max((i[1] - (1.0 - phi.cos()) / 2.0).abs());
        coinc = coinc.max(coincidence_moments_detector(&out)?.mean.abs());
    }
    Ok(vec![
        Check::max_error("single photon ⟨I₁⟩ = (1+cosφ)/2", e1, 1e-12),
        Check::max_error("single photon ⟨I₂⟩ = (1−cosφ)/2", e2, 1e-12),
        Check::max_error("single photon coincidence = 0", coinc, 0.0),
    ])
}

fn halving() -> Result<Vec<Check>> {
    let expected = |phi: f64| (1.0 - (2.0 * phi).cos()) / 4.0;
    let mut checks = Vec::new();
    for conv in [Detector, Reduced] {
        let scan = fock_spec(2, 2, conv).scan()?;
        checks.push(Check::max_error(
            format!("Fock-2 N=2 ({}) mean = (1−cos2φ)/4", conv.as_str()),
            max_mean_error(&scan, expected),
            1e-10,
        ));
        if conv == Detector {
            let means: Vec<f64> = scan.points.iter().map(|p| p.moments.mean).collect();
            let spectrum = harmonic_spectrum(&scan.grid, &means, (scan.grid.len() - 1) / 2)?;
            checks.push(Check::close("harmonic 0", 0.25, spectrum[&0], 1e-12));
            checks.push(Check::close("harmonic 2", 0.125, spectrum[&2], 1e-12));
            let stray = spectrum
                .iter()
                .filter(|(k, _)| **k != 0 && **k != 2)
                .map(|(_, v)| *v)
                .fold(0.0, f64::max);
            checks.push(Check::max_error("other harmonics", stray, 1e-12));
        }
    }
    Ok(checks)
}

fn patterns() -> Result<Vec<Check>> {
    let mut checks = prefactors()?;
    for n in 2..=6u32 {
        let f = fock_pattern(n)?;
        let scan = fock_spec(n as usize, n, Detector).scan()?;
        checks.push(Check::max_error(
            format!("Fock-{n} N={n} mean = prefactor·(1−(−1)^N cos Nφ)"),
            max_mean_error(&scan, |phi| f.value(phi)),
            1e-10,
        ));
        checks.push(Check::close(
            format!("Fock-{n} N={n} visibility"),
            1.0,
            scan.visibility(),
            1e-9,
        ));
    }
    Ok(checks)
}

fn excess() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (n, e) in [(2u32, 1u32), (2, 2), (2, 3), (3, 1), (3, 2), (4, 1)] {
        let f = excess_pattern(n, e as i64)?;
        let spec = ExperimentSpec::new(n as usize, InputState::Excess { excess: e }, Detector);
        let scan = spec.scan()?;
        checks.push(Check::max_error(
            format!("N={n} E={e} mean = (N+E)!/E!·pattern"),
            max_mean_error(&scan, |phi| f.value(phi)),
            1e-10,
        ));
    }
    for n in 2..=4usize {
        for photons in 0..n as u32 {
            let worst = [Detector, Reduced]
                .into_iter()
                .map(|conv| {
                    let scan = fock_spec(n, photons, conv).scan()?;
                    Ok(max_mean_error(&scan, |_| 0.0))
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            checks.push(Check::max_error(
                format!("N={n} with {photons} photons gives zero"),
                worst,
                0.0,
            ));
        }
    }
    Ok(checks)
}

fn superposition_input() -> InputState {
    let a = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    InputState::Superposition {
        amplitudes: vec![(2, a), (3, a), (4, a)],
    }
}

fn superposition() -> Result<Vec<Check>> {
    let mut weights = BTreeMap::new();
    for j in [2, 3, 4] {
        weights.insert(j, 1.0 / 3.0);
    }
    let closed = general_pattern(2, &weights)?;
    let mixed = InputState::Mixed {
        components: vec![(1.0 / 3.0, 2), (1.0 / 3.0, 3), (1.0 / 3.0, 4)],
    };
    let mut checks = Vec::new();
    for conv in [Detector, Reduced] {
        let pure = ExperimentSpec::new(2, superposition_input(), conv).scan()?;
        let mix = ExperimentSpec::new(2, mixed.clone(), conv).scan()?;
        checks.push(Check::max_error(
            format!("superposition ({}) = weighted closed form", conv.as_str()),
            max_mean_error(&pure, |phi| closed.value(phi)),
            1e-10,
        ));
        let gap = pure
            .points
            .iter()
            .zip(&mix.points)
            .map(|(a, b)| (a.moments.mean - b.moments.mean).abs())
            .fold(0.0, f64::max);
        checks.push(Check::max_error(
            format!("superposition ({}) = dephased mixture", conv.as_str()),
            gap,
            1e-11,
        ));
    }
    Ok(checks)
}

fn noon() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in 2..=5u32 {
        let f = noon_signal_and_variance(n)?;
        let scan =
            ExperimentSpec::new(n as usize, InputState::Noon { photons: n }, Reduced).scan()?;
        let mean_err = max_mean_error(&scan, |phi| f.mean(phi));
        let var_err = scan
            .points
            .iter()
            .map(|p| (p.moments.variance - f.variance(p.phi)).abs())
            .fold(0.0, f64::max);
        let target = 1.0 / n as f64;
        let mut dphi_err = 0.0f64;
        let mut counted = 0;
        for p in &scan.points {
            if let DeltaPhi::Finite(v) = p.delta_phi {
                dphi_err = dphi_err.max((v - target).abs());
                counted += 1;
            }
        }
        checks.push(Check::max_error(format!("NOON-{n} mean"), mean_err, 1e-10));
        checks.push(Check::max_error(
            format!("NOON-{n} variance = K² sin² Nφ"),
            var_err,
            1e-10,
        ));
        checks.push(Check::max_error(
            format!("NOON-{n} Δφ = 1/N on grid"),
            dphi_err,
            1e-9,
        ));
        checks.push(Check::holds(
            format!("NOON-{n} has non-degenerate points"),
            counted > 0,
        ));
    }
    Ok(checks)
}

fn fock_noise() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in 2..=5u32 {
        let min = fock_spec(n as usize, n, Reduced)
            .scan()?
            .min_phase_spread()?;
        let expected = noise_closed_forms(n, 0)?.fock;
        checks.push(Check::close(
            format!("Fock-{n} min Δφ = √(2^(N−1))/N"),
            expected,
            min.delta_phi_min,
            1e-6,
        ));
        // The pattern has period 2π/N; compare against the nearest image.
        let loc = fock_minimum_location(n);
        let dist = (0..n)
            .map(|j| circular_distance(min.phi_star, loc + j as f64 * TAU / n as f64))
            .fold(f64::INFINITY, f64::min);
        checks.push(Check::max_error(
            format!("Fock-{n} minimum location"),
            dist,
            1e-6,
        ));
    }
    Ok(checks)
}

fn shot_noise_floor() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for mean in [8.0, 12.0] {
        for n in [2usize, 3] {
            let spec = ExperimentSpec::new(n, InputState::Coherent { mean }, Reduced);
            let bound = spec.photon_bound()?;
            let spec = spec.with_phase_points(PhaseGrid::resolving(bound, 49).len());
            let min = spec.scan()?.min_phase_spread()?;
            let floor = 1.0 / mean.sqrt();
            checks.push(Check::within(
                format!("coherent n̄={mean} N={n} min Δφ ∈ [1, 1.15]/√n̄"),
                floor,
                1.15 * floor,
                min.delta_phi_min,
            ));
        }
    }
    let ports: Vec<u32> = (2..=6).collect();
    let excesses: Vec<u32> = (0..=12).collect();
    let surface = noise_surface(&ports, &excesses, Reduced, false)?;
    for &n in &ports {
        let values: Vec<(u32, f64)> = excesses
            .iter()
            .filter_map(|&e| {
                surface
                    .cell(n, e, Sheet::Excess)
                    .and_then(|c| c.delta_phi)
                    .map(|v| (e, v))
            })
            .collect();
        let rises = values
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::holds(
            format!(
                "N={n} excess sheet non-increasing in E ({} cells)",
                values.len()
            ),
            rises <= 1e-9,
        ));
        let below = values
            .iter()
            .map(|&(e, v)| shot_noise(n + e) - v)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::holds(
            format!("N={n} excess sheet ≥ shot noise − 1e-9"),
            below <= 1e-9,
        ));
    }
    Ok(checks)
}

fn loss() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let photons = 2 + (case % 2) as u32;
        let phi = rng.gen_range(0.0..TAU);
        let loss = LossSpec::new(
            (0..2)
                .map(|_| Complex64::from_polar(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..TAU)))
                .collect(),
        )?;
        let out = fock_spec(2, photons, Detector).output_states_at(phi)?;
        let state = &out.components()[0].1;
        let lossless = coincidence_moments_detector(state)?.mean;
        let ancilla = lossy_signal_ancilla(state, &loss)?;
        worst = worst.max((ancilla - lossy_signal_scaled(lossless, &loss)).abs());
    }
    let mut checks = vec![Check::max_error(
        "ancilla loss = T × lossless (20 cases)",
        worst,
        1e-10,
    )];

    for photons in [2u32, 3] {
        let base = fock_spec(2, photons, Reduced);
        let lossy = base.clone().with_loss(LossSpec::real(&[0.83, 0.47])?);
        let (a, b) = (base.scan()?, lossy.scan()?);
        let pointwise = a
            .points
            .iter()
            .zip(&b.points)
            .filter_map(|(x, y)| Some((x.delta_phi.finite()? - y.delta_phi.finite()?).abs()))
            .fold(0.0, f64::max);
        let minimum =
            (a.min_phase_spread()?.delta_phi_min - b.min_phase_spread()?.delta_phi_min).abs();
        checks.push(Check::max_error(
            format!("Fock-{photons} Δφ(φ) unchanged by loss"),
            pointwise,
            1e-9,
        ));
        checks.push(Check::max_error(
            format!("Fock-{photons} min Δφ unchanged by loss"),
            minimum,
            1e-9,
        ));
    }
    Ok(checks)
}

fn threshold() -> Result<Vec<Check>> {
    let grid = PhaseGrid::new(101)?;
    let mut checks = Vec::new();
    for photons in [2u32, 3, 4] {
        let spec = fock_spec(2, photons, Detector);
        let (mut ordered, mut zeros_agree, mut equal_err) = (true, true, 0.0f64);
        for phi in grid.points().chain([0.0, PI / 2.0, PI]) {
            let out = spec.output_states_at(phi)?;
            let state = &out.components()[0].1;
            let p = presence_expectation(state)?;
            let m = coincidence_moments_detector(state)?.mean;
            ordered &= p >= 0.0 && p <= m + 1e-15;
            zeros_agree &= (p < 1e-12) == (m < 1e-12);
            equal_err = equal_err.max((p - m).abs());
        }
        checks.push(Check::holds(
            format!("{photons} photons: 0 ≤ ⟨P⟩ ≤ ⟨I⟩"),
            ordered,
        ));
        checks.push(Check::holds(
            format!("{photons} photons: zero sets coincide"),
            zeros_agree,
        ));
        if photons == 2 {
            checks.push(Check::max_error("2 photons: ⟨P⟩ = ⟨I⟩", equal_err, 1e-12));
        }
    }
    let via_spec = fock_spec(2, 3, Detector).with_detector(DetectorKind::Threshold);
    let m = via_spec.moments_at(0.9)?;
    checks.push(Check::close(
        "threshold moments are Bernoulli",
        m.mean,
        m.second_moment,
        1e-15,
    ));
    Ok(checks)
}

fn convention_scenarios() -> Vec<(usize, InputState)> {
    let mut out: Vec<(usize, InputState)> = (2..=6)
        .map(|n| (n, InputState::Fock { photons: n as u32 }))
        .collect();
    for (n, e) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 1)] {
        out.push((n, InputState::Excess { excess: e }));
    }
    out.push((2, superposition_input()));
    for n in 2..=5 {
        out.push((n, InputState::Noon { photons: n as u32 }));
    }
    out
}

fn conventions() -> Result<Vec<Check>> {
    let grid = default_grid();
    let mut checks = Vec::new();
    for (ports, input) in convention_scenarios() {
        let detector = ExperimentSpec::new(ports, input.clone(), Detector);
        let reduced = ExperimentSpec::new(ports, input.clone(), Reduced);
        let mut worst = 0.0f64;
        for phi in grid.points() {
            let d = detector.moments_at(phi)?.mean;
            let r = reduced.moments_at(phi)?.mean;
            let x: f64 = reduced
                .arm_states_at(phi)?
                .iter()
                .map(|(w, s)| Ok(w * first_moment_crosscheck(s, ports)?))
                .sum::<Result<f64>>()?;
            worst = worst
                .max((d - r).abs())
                .max((d - x).abs())
                .max((r - x).abs());
        }
        checks.push(Check::max_error(
            format!("N={ports} {} first moments agree", describe(&input)),
            worst,
            1e-11,
        ));
    }
    // Known divergence of second moments for three photons in three ports.
    let phi = 0.4f64;
    let shape = 1.0 + (3.0 * phi).cos();
    let d = fock_spec(3, 3, Detector).moments_at(phi)?.second_moment / shape;
    let r = fock_spec(3, 3, Reduced).moments_at(phi)?.second_moment / shape;
    checks.push(Check::close(
        "Fock-3 detector second moment coefficient 1/18",
        1.0 / 18.0,
        d,
        1e-12,
    ));
    checks.push(Check::close(
        "Fock-3 reduced second moment coefficient 2/81",
        2.0 / 81.0,
        r,
        1e-12,
    ));
    checks.push(Check::holds(
        "Fock-3 second moments differ between conventions",
        (d - r).abs() > 1e-3,
    ));
    Ok(checks)
}

fn describe(input: &InputState) -> String {
    match input {
        InputState::Fock { photons } => format!("Fock-{photons}"),
        InputState::Excess { excess } => format!("excess E={excess}"),
        InputState::Coherent { mean } => format!("coherent n̄={mean}"),
        InputState::Noon { photons } => format!("NOON-{photons}"),
        InputState::Superposition { .. } => "superposition".into(),
        InputState::Mixed { .. } => "mixture".into(),
    }
}

fn sampling() -> Result<Vec<Check>> {
    let out = fock_spec(2, 2, Detector).output_states_at(PI / 2.0)?;
    let state = &out.components()[0].1;
    let a = sample_clicks(state, 100_000, 7, None)?;
    let b = sample_clicks(state, 100_000, 7, None)?;
    let bytes_a = serde_json::to_string(&a).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let bytes_b = serde_json::to_string(&b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(vec![
        Check::close(
            "Fock-2 N=2 φ=π/2 coincidence rate within 4σ of 1/2",
            0.5,
            a.coincidence_rate,
            4.0 * a.standard_error,
        ),
        Check::holds("repeated sampling is byte-identical", bytes_a == bytes_b),
    ])
}

fn structure() -> Result<Vec<Check>> {
    let mut unitarity = 0.0f64;
    for k in 0..25 {
        let phi = k as f64 * TAU / 25.0;
        unitarity = unitarity.max(balanced_splitter_with_phase(phi).unitarity_residual());
        for ports in 2..=8 {
            let spec = NetworkSpec {
                ports,
                phase: phi,
                include_front_splitter: true,
            };
            unitarity = unitarity.max(build_full_network(&spec)?.unitarity_residual());
        }
    }
    for n in 1..=12 {
        unitarity = unitarity.max(dft_nport(n)?.unitarity_residual());
    }

    let mut norm = 0.0f64;
    let mut conserved = true;
    for ports in 2..=6usize {
        for photons in 0..=8u32 {
            let spec = NetworkSpec {
                ports,
                phase: 0.3 + photons as f64,
                include_front_splitter: true,
            };
            let out = evolve(
                &PureState::fock(ports, 0, photons)?,
                &build_full_network(&spec)?,
            )?;
            norm = norm.max((out.norm() - 1.0).abs());
            conserved &= conserves_photon_number(&out, photons);
        }
    }

    let mut slope = 0.0f64;
    for n in 2..=6u32 {
        for (photons, conv) in [(n, Reduced), (n, Detector), (n + 1, Reduced)] {
            let f = excess_pattern(n, photons as i64 - n as i64)?;
            let scan = fock_spec(n as usize, photons, conv).scan()?;
            for p in &scan.points {
                slope = slope.max((p.slope - f.derivative(p.phi)).abs());
            }
        }
    }
    Ok(vec![
        Check::max_error("unitarity residual", unitarity, 1e-12),
        Check::max_error("evolve norm deviation", norm, 1e-12),
        Check::holds("evolve conserves photon number", conserved),
        Check::max_error("spectral slope vs analytic derivative", slope, 1e-11),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope").is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        for name in ["prefactors", "fringe", "halving", "sampling"] {
            let r = run_suite(name).unwrap();
            assert!(r.passed(), "{name}: {:?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn check_constructors() {
        assert!(Check::within("x", 1.0, 2.0, 1.5).pass);
        assert!(!Check::within("x", 1.0, 2.0, 2.5).pass);
        assert!(!Check::max_error("x", f64::NAN, 1.0).pass);
        assert!(Check::holds("x", true).pass);
    }
}
