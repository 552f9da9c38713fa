//! Detector imperfections: per-channel loss, threshold (presence-only)
//! response, and a seeded Monte Carlo click sampler.
//!
//! Loss mixes each output channel `j` with its own vacuum ancilla through a
//! beam splitter of amplitude transmission `τ_j`. The ancilla route builds
//! the doubled mode space explicitly; the scaled route multiplies the
//! lossless signal by `T = Π|τ_j|²`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{MixedEnsemble, Occupation, PureState};
use crate::networks::{evolve, ModeUnitary};
use crate::observables::presence_expectation;

/// Largest analyzer size accepted by the explicit ancilla simulation.
pub const ANCILLA_MAX_PORTS: usize = 4;
/// Largest photon number accepted by the explicit ancilla simulation.
pub const ANCILLA_MAX_PHOTONS: u32 = 8;

const SAMPLE_BLOCK: u64 = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    transmissions: Vec<Complex64>,
}

impl LossSpec {
    pub fn new(transmissions: Vec<Complex64>) -> Result<Self> {
        if transmissions.is_empty() {
            return Err(Error::InvalidParameter(
                "loss needs at least one channel".into(),
            ));
        }
        for t in &transmissions {
            if !(t.re.is_finite() && t.im.is_finite()) || t.norm() > 1.0 + 1e-14 {
                return Err(Error::InvalidParameter(format!(
                    "transmission amplitude {t} must satisfy |τ| ≤ 1"
                )));
            }
        }
        Ok(Self { transmissions })
    }

    /// Real transmission amplitudes.
    pub fn real(transmissions: &[f64]) -> Result<Self> {
        Self::new(
            transmissions
                .iter()
                .map(|&t| Complex64::new(t, 0.0))
                .collect(),
        )
    }

    pub fn lossless(ports: usize) -> Self {
        Self {
            transmissions: vec![Complex64::new(1.0, 0.0); ports],
        }
    }

    pub fn channels(&self) -> usize {
        self.transmissions.len()
    }

    pub fn transmission(&self, channel: usize) -> Complex64 {
        self.transmissions[channel]
    }

    /// `ρ_j = √(1 − |τ_j|²)`, chosen real and non-negative.
    pub fn reflection(&self, channel: usize) -> f64 {
        (1.0 - self.transmissions[channel].norm_sqr())
            .max(0.0)
            .sqrt()
    }

    /// Survival probability `|τ_j|²` of a photon in channel `j`.
    pub fn survival(&self, channel: usize) -> f64 {
        self.transmissions[channel].norm_sqr().min(1.0)
    }

    /// `T = Π_k |τ_k|²`.
    pub fn transmission_factor(&self) -> f64 {
        (0..self.channels()).map(|j| self.survival(j)).product()
    }

    fn check_channels(&self, modes: usize) -> Result<()> {
        if self.channels() == modes {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{} loss channels for {modes} output modes",
                self.channels()
            )))
        }
    }

    /// The `2N`-mode network coupling channel `j` to ancilla `N + j`:
    /// detected `A'†_j = τ_j* A†_j + ρ_j V†_j`.
    pub fn ancilla_network(&self) -> ModeUnitary {
        let n = self.channels();
        let mut rows = vec![vec![Complex64::default(); 2 * n]; 2 * n];
        for j in 0..n {
            let t = self.transmission(j);
            let r = Complex64::new(self.reflection(j), 0.0);
            rows[j][j] = t.conj();
            rows[j][n + j] = r.conj();
            rows[n + j][j] = -r;
            rows[n + j][n + j] = t;
        }
        ModeUnitary::new(rows).expect("per-channel loss splitters are unitary")
    }
}

/// Lossy coincidence signal by rescaling: `T · base_mean`.
pub fn lossy_signal_scaled(base_mean: f64, loss: &LossSpec) -> f64 {
    loss.transmission_factor() * base_mean
}

/// Distribution of the detected channels after explicit ancilla coupling
/// and tracing out the ancillas.
pub fn ancilla_marginal_distribution(
    state_out: &PureState,
    loss: &LossSpec,
) -> Result<BTreeMap<Occupation, f64>> {
    let n = state_out.modes();
    loss.check_channels(n)?;
    if n > ANCILLA_MAX_PORTS {
        return Err(Error::InvalidParameter(format!(
            "ancilla simulation supports at most {ANCILLA_MAX_PORTS} channels, got {n}"
        )));
    }
    let photons = state_out.max_total().unwrap_or(0);
    if photons > ANCILLA_MAX_PHOTONS {
        return Err(Error::Capacity {
            requested: photons,
            cap: ANCILLA_MAX_PHOTONS,
        });
    }
    let extended = state_out.pad_modes(2 * n)?;
    let after = evolve(&extended, &loss.ancilla_network())?;
    let mut marginal: BTreeMap<Occupation, f64> = BTreeMap::new();
    for (occ, p) in after.number_distribution()? {
        let kept = Occupation::new(occ.counts()[..n].to_vec());
        *marginal.entry(kept).or_default() += p;
    }
    Ok(marginal)
}

/// Coincidence mean after loss, from the ancilla-traced distribution.
pub fn lossy_signal_ancilla(state_out: &PureState, loss: &LossSpec) -> Result<f64> {
    let marginal = ancilla_marginal_distribution(state_out, loss)?;
    Ok(marginal
        .iter()
        .map(|(occ, p)| p * occ.count_product())
        .sum())
}

/// Lossy output distribution by independent binomial thinning of each
/// channel, which is what tracing a vacuum ancilla does to a Fock input.
pub fn thinned_distribution(
    dist: &BTreeMap<Occupation, f64>,
    loss: &LossSpec,
) -> Result<BTreeMap<Occupation, f64>> {
    let mut out: BTreeMap<Occupation, f64> = BTreeMap::new();
    for (occ, &p) in dist {
        loss.check_channels(occ.modes())?;
        let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), p)];
        for (j, &n) in occ.counts().iter().enumerate() {
            let eta = loss.survival(j);
            let mut next = Vec::with_capacity(partial.len() * (n as usize + 1));
            for (prefix, w) in &partial {
                for k in 0..=n {
                    let b = binomial_pmf(n, k, eta);
                    if b > 0.0 {
                        let mut counts = prefix.clone();
                        counts.push(k);
                        next.push((counts, w * b));
                    }
                }
            }
            partial = next;
        }
        for (counts, w) in partial {
            *out.entry(Occupation::new(counts)).or_default() += w;
        }
    }
    Ok(out)
}

fn binomial_pmf(n: u32, k: u32, p: f64) -> f64 {
    let coeff = crate::networks::multinomial(n, &[k, n - k]);
    coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Threshold detectors: probability that every channel registers at least
/// one photon.
pub fn threshold_response(state_out: &PureState) -> Result<f64> {
    presence_expectation(state_out)
}

/// Number distribution of a mixed output ensemble.
pub fn ensemble_distribution(ensemble: &MixedEnsemble) -> Result<BTreeMap<Occupation, f64>> {
    let mut out: BTreeMap<Occupation, f64> = BTreeMap::new();
    for (w, s) in ensemble.components() {
        for (occ, p) in s.number_distribution()? {
            *out.entry(occ).or_default() += w * p;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub trials: u64,
    /// Empirical mean of `Π_j n_j`. Equals the all-fire rate when no
    /// channel can hold more than one photon.
    pub coincidence_rate: f64,
    /// Fraction of trials in which every channel was occupied.
    pub presence_rate: f64,
    /// Standard error of `coincidence_rate`.
    pub standard_error: f64,
    pub presence_standard_error: f64,
    pub seed: u64,
}

/// Draws `trials` output configurations from `state_out` (after loss, if
/// given) and tallies coincidence products and all-channel presence.
pub fn sample_clicks(
    state_out: &PureState,
    trials: u64,
    seed: u64,
    loss: Option<&LossSpec>,
) -> Result<SampleReport> {
    let dist = state_out.number_distribution()?;
    let dist = match loss {
        Some(l) => thinned_distribution(&dist, l)?,
        None => dist,
    };
    sample_distribution(&dist, trials, seed)
}

/// Seeded sampling from an explicit distribution. Trials are split into
/// fixed blocks, block `b` drawing from stream `b` of the seeded generator,
/// so the report does not depend on thread scheduling.
pub fn sample_distribution(
    dist: &BTreeMap<Occupation, f64>,
    trials: u64,
    seed: u64,
) -> Result<SampleReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let total: f64 = dist.values().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization { norm_sqr: total });
    }
    let mut cumulative = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for (occ, p) in dist {
        acc += p;
        cumulative.push((acc, occ.count_product() as u64, occ.all_occupied()));
    }

    let blocks = trials.div_ceil(SAMPLE_BLOCK);
    let tallies: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = SAMPLE_BLOCK.min(trials - b * SAMPLE_BLOCK);
            let mut t = Tally::default();
            for _ in 0..count {
                let u: f64 = rng.gen::<f64>() * acc;
                let idx = cumulative
                    .partition_point(|(c, _, _)| *c <= u)
                    .min(cumulative.len() - 1);
                let (_, product, present) = cumulative[idx];
                t.product_sum += product as u128;
                t.product_sq_sum += (product as u128) * (product as u128);
                t.present += present as u64;
            }
            t
        })
        .collect();
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);

    let n = trials as f64;
    let rate = t.product_sum as f64 / n;
    let var = (t.product_sq_sum as f64 / n - rate * rate).max(0.0);
    let presence = t.present as f64 / n;
    Ok(SampleReport {
        trials,
        coincidence_rate: rate,
        presence_rate: presence,
        standard_error: (var / n).sqrt(),
        presence_standard_error: (presence * (1.0 - presence) / n).sqrt(),
        seed,
    })
}

#[derive(Clone, Copy, Default)]
struct Tally {
    product_sum: u128,
    product_sq_sum: u128,
    present: u64,
}

impl Tally {
    fn merge(self, other: Self) -> Self {
        Self {
            product_sum: self.product_sum + other.product_sum,
            product_sq_sum: self.product_sq_sum + other.product_sq_sum,
            present: self.present + other.present,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::{build_full_network, NetworkSpec};
    use crate::observables::coincidence_moments_detector;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{PI, TAU};

    fn chain_output(photons: u32, ports: usize, phi: f64) -> PureState {
        let spec = NetworkSpec {
            ports,
            phase: phi,
            include_front_splitter: true,
        };
        evolve(
            &PureState::fock(ports, 0, photons).unwrap(),
            &build_full_network(&spec).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scaled_loss() {
        assert_eq!(lossy_signal_scaled(0.3, &LossSpec::lossless(3)), 0.3);
        let half = 0.5f64.sqrt();
        let l = LossSpec::real(&[half, half]).unwrap();
        assert!((l.transmission_factor() - 0.25).abs() < 1e-15);
        assert!(LossSpec::real(&[1.2]).is_err());
        assert!(l.ancilla_network().unitarity_residual() < 1e-15);
    }

    #[test]
    fn ancilla_edge_cases() {
        let out = chain_output(2, 2, 1.0);
        let lossless = coincidence_moments_detector(&out).unwrap().mean;
        let v = lossy_signal_ancilla(&out, &LossSpec::lossless(2)).unwrap();
        assert!((v - lossless).abs() < 1e-14);
        let dead = LossSpec::real(&[1.0, 0.0]).unwrap();
        assert!(lossy_signal_ancilla(&out, &dead).unwrap().abs() < 1e-15);
        assert!(lossy_signal_ancilla(&chain_output(2, 5, 1.0), &LossSpec::lossless(5)).is_err());
        assert!(lossy_signal_ancilla(&out, &LossSpec::lossless(3)).is_err());
    }

    #[test]
    fn threshold_examples() {
        let out = chain_output(2, 2, 0.8);
        let coinc = coincidence_moments_detector(&out).unwrap().mean;
        assert!((threshold_response(&out).unwrap() - coinc).abs() < 1e-15);
        let out = chain_output(4, 2, PI / 4.0);
        let coinc = coincidence_moments_detector(&out).unwrap().mean;
        assert!(threshold_response(&out).unwrap() < coinc);
        assert_eq!(threshold_response(&PureState::vacuum(2)).unwrap(), 0.0);
    }

    #[test]
    fn sampler_determinism_and_certainty() {
        let s = PureState::basis(&[1, 1]).unwrap();
        for seed in [0, 1, 99] {
            let r = sample_clicks(&s, 1000, seed, None).unwrap();
            assert_eq!(r.presence_rate, 1.0);
            assert_eq!(r.coincidence_rate, 1.0);
            assert_eq!(r.standard_error, 0.0);
        }
        let out = chain_output(3, 2, 0.9);
        let a = sample_clicks(&out, 20_000, 5, None).unwrap();
        let b = sample_clicks(&out, 20_000, 5, None).unwrap();
        assert_eq!(a, b);
        let c = sample_clicks(&out, 20_000, 6, None).unwrap();
        assert_ne!(a, c);
        assert!(sample_clicks(&out, 0, 5, None).is_err());
    }

    #[test]
    fn sampler_statistics() {
        let out = chain_output(2, 2, PI / 2.0);
        let r = sample_clicks(&out, 100_000, 7, None).unwrap();
        assert!((r.coincidence_rate - 0.5).abs() <= 4.0 * r.standard_error);
    }

    #[test]
    fn empirical_distribution_matches_exact() {
        // Kolmogorov–Smirnov style: max CDF gap over the ordered support.
        for (photons, ports, phi) in [(3u32, 2usize, 0.7), (3, 3, 1.9), (4, 2, 2.5)] {
            let out = chain_output(photons, ports, phi);
            let dist = out.number_distribution().unwrap();
            let keys: Vec<&Occupation> = dist.keys().collect();
            let trials = 40_000u64;
            // Point-mass sampling via a one-hot distribution per config.
            let mut counts = vec![0u64; keys.len()];
            let mut cumulative = Vec::new();
            let mut acc = 0.0;
            for p in dist.values() {
                acc += p;
                cumulative.push(acc);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..trials {
                let u: f64 = rng.gen::<f64>() * acc;
                let i = cumulative.partition_point(|c| *c <= u).min(keys.len() - 1);
                counts[i] += 1;
            }
            let mut emp = 0.0;
            let mut gap: f64 = 0.0;
            for (i, c) in counts.iter().enumerate() {
                emp += *c as f64 / trials as f64;
                gap = gap.max((emp - cumulative[i]).abs());
            }
            // 99.9% KS critical value ≈ 1.95/√n.
            assert!(gap < 1.95 / (trials as f64).sqrt(), "gap {gap}");
        }
    }

    #[test]
    fn thinning_equals_ancilla_marginal() {
        let out = chain_output(3, 3, 0.4);
        let loss = LossSpec::real(&[0.9, 0.5, 0.75]).unwrap();
        let ancilla = ancilla_marginal_distribution(&out, &loss).unwrap();
        let thinned = thinned_distribution(&out.number_distribution().unwrap(), &loss).unwrap();
        for (occ, p) in &ancilla {
            let q = thinned.get(occ).copied().unwrap_or(0.0);
            assert!((p - q).abs() < 1e-13, "{occ}: {p} vs {q}");
        }
        for (occ, q) in &thinned {
            assert!((ancilla.get(occ).copied().unwrap_or(0.0) - q).abs() < 1e-13);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn loss_factorizes(
            photons in 2u32..=4,
            phi in 0.0f64..TAU,
            t1 in 0.0f64..=1.0,
            t2 in 0.0f64..=1.0,
            p1 in 0.0f64..TAU,
            p2 in 0.0f64..TAU,
        ) {
            let out = chain_output(photons, 2, phi);
            let loss = LossSpec::new(vec![Complex64::from_polar(t1, p1), Complex64::from_polar(t2, p2)]).unwrap();
            let lossless = coincidence_moments_detector(&out).unwrap().mean;
            let ancilla = lossy_signal_ancilla(&out, &loss).unwrap();
            prop_assert!((ancilla - lossy_signal_scaled(lossless, &loss)).abs() <= 1e-10);
        }

        #[test]
        fn threshold_ordering(photons in 0u32..=5, phi in 0.0f64..TAU) {
            let out = chain_output(photons, 2, phi);
            let p = threshold_response(&out).unwrap();
            let m = coincidence_moments_detector(&out).unwrap().mean;
            prop_assert!(p >= 0.0 && p <= m + 1e-15);
            prop_assert_eq!(p < 1e-12, m < 1e-12);
        }
    }
}
