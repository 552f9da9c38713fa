//! Multi-mode bosonic pure states in the occupation-number basis.
//!
//! States are sparse maps from [`Occupation`] vectors to complex amplitudes.
//! Ladder operators act term by term and never renormalize; the zero state
//! (empty map) is a legal intermediate value.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Default upper bound on total photon number per basis term.
pub const DEFAULT_PHOTON_CAP: u32 = 24;

/// Amplitudes with modulus below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// Accepted deviation of `⟨ψ|ψ⟩` from one for operations that require a
/// normalized state.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Photon counts per mode; the Fock basis label `|n₁, n₂, …⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(Vec<u32>);

impl Occupation {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, mode: usize) -> u32 {
        self.0[mode]
    }

    /// Product of the per-mode counts, the eigenvalue of `Π n̂_j`.
    pub fn count_product(&self) -> f64 {
        self.0.iter().map(|&n| n as f64).product()
    }

    /// True when every mode holds at least one photon.
    pub fn all_occupied(&self) -> bool {
        self.0.iter().all(|&n| n > 0)
    }

    fn with(&self, mode: usize, count: u32) -> Self {
        let mut counts = self.0.clone();
        counts[mode] = count;
        Self(counts)
    }
}

impl From<Vec<u32>> for Occupation {
    fn from(counts: Vec<u32>) -> Self {
        Self(counts)
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

/// Sparse pure state over a fixed number of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    modes: usize,
    cap: u32,
    terms: BTreeMap<Occupation, Amplitude>,
}

impl PureState {
    /// The zero vector. Only meaningful as an intermediate result.
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            cap: DEFAULT_PHOTON_CAP,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(modes: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::vacuum(modes), Complex64::new(1.0, 0.0));
        Self {
            modes,
            cap: DEFAULT_PHOTON_CAP,
            terms,
        }
    }

    /// A single basis vector `|counts⟩` with unit amplitude.
    pub fn basis(counts: &[u32]) -> Result<Self> {
        Self::from_terms(counts.len(), [(counts.to_vec(), Complex64::new(1.0, 0.0))])
    }

    /// `(a†_mode)^n / √n! |0⟩` in a space of `modes` modes.
    pub fn fock(modes: usize, mode: usize, n: u32) -> Result<Self> {
        if mode >= modes {
            return Err(Error::Dimension(format!(
                "mode {mode} out of range for {modes} modes"
            )));
        }
        let mut counts = vec![0; modes];
        counts[mode] = n;
        Self::basis(&counts)
    }

    /// Builds a state from raw terms, summing repeated keys and pruning
    /// negligible amplitudes. Uses the default photon cap.
    pub fn from_terms<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Amplitude)>,
    {
        Self::from_terms_with_cap(modes, DEFAULT_PHOTON_CAP, terms)
    }

    pub fn from_terms_with_cap<I>(modes: usize, cap: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Amplitude)>,
    {
        let mut map: BTreeMap<Occupation, Amplitude> = BTreeMap::new();
        for (counts, amp) in terms {
            if counts.len() != modes {
                return Err(Error::Dimension(format!(
                    "occupation of length {} in a {modes}-mode state",
                    counts.len()
                )));
            }
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::InvalidParameter("non-finite amplitude".into()));
            }
            let key = Occupation(counts);
            let total = key.total();
            if total > cap {
                return Err(Error::Capacity {
                    requested: total,
                    cap,
                });
            }
            *map.entry(key).or_default() += amp;
        }
        map.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        Ok(Self {
            modes,
            cap,
            terms: map,
        })
    }

    /// Same state with a different photon cap.
    pub fn with_cap(mut self, cap: u32) -> Result<Self> {
        if let Some(requested) = self.max_total().filter(|&t| t > cap) {
            return Err(Error::Capacity { requested, cap });
        }
        self.cap = cap;
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Amplitude)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, counts: &[u32]) -> Amplitude {
        self.terms
            .get(&Occupation(counts.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    /// Largest total photon number among stored terms.
    pub fn max_total(&self) -> Option<u32> {
        self.terms.keys().map(Occupation::total).max()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::Normalization {
                norm_sqr: self.norm_sqr(),
            })
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::Normalization { norm_sqr: 0.0 });
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: Amplitude) -> Self {
        self.map_terms(|occ, amp| Some((occ.clone(), amp * factor)))
    }

    /// Sum of two states over the same modes.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_modes(other)?;
        let cap = self.cap.max(other.cap);
        Self::from_terms_with_cap(
            self.modes,
            cap,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(k, a)| (k.0.clone(), *a)),
        )
    }

    /// Appends vacuum modes until the state spans `total` modes.
    pub fn pad_modes(&self, total: usize) -> Result<Self> {
        if total < self.modes {
            return Err(Error::Dimension(format!(
                "cannot pad a {}-mode state to {total} modes",
                self.modes
            )));
        }
        let terms = self.terms.iter().map(|(k, a)| {
            let mut counts = k.0.clone();
            counts.resize(total, 0);
            (Occupation(counts), *a)
        });
        Ok(Self {
            modes: total,
            cap: self.cap,
            terms: terms.collect(),
        })
    }

    /// `a†_mode |ψ⟩`, unnormalized.
    pub fn apply_creation(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if let Some(total) = self.max_total() {
            if total + 1 > self.cap {
                return Err(Error::Capacity {
                    requested: total + 1,
                    cap: self.cap,
                });
            }
        }
        Ok(self.map_terms(|occ, amp| {
            let n = occ.get(mode);
            Some((occ.with(mode, n + 1), amp * ((n + 1) as f64).sqrt()))
        }))
    }

    /// `a_mode |ψ⟩`, unnormalized. Terms with an empty mode vanish.
    pub fn apply_annihilation(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        Ok(self.map_terms(|occ, amp| {
            let n = occ.get(mode);
            (n > 0).then(|| (occ.with(mode, n - 1), amp * (n as f64).sqrt()))
        }))
    }

    /// `(a†_mode)^power |ψ⟩`.
    pub fn apply_creation_power(&self, mode: usize, power: u32) -> Result<Self> {
        (0..power).try_fold(self.clone(), |s, _| s.apply_creation(mode))
    }

    /// `(a_mode)^power |ψ⟩`.
    pub fn apply_annihilation_power(&self, mode: usize, power: u32) -> Result<Self> {
        (0..power).try_fold(self.clone(), |s, _| s.apply_annihilation(mode))
    }

    /// Probability of each occupation configuration. Requires a normalized
    /// state.
    pub fn number_distribution(&self) -> Result<BTreeMap<Occupation, f64>> {
        self.require_normalized()?;
        Ok(self
            .terms
            .iter()
            .map(|(k, a)| (k.clone(), a.norm_sqr()))
            .collect())
    }

    fn map_terms<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&Occupation, Amplitude) -> Option<(Occupation, Amplitude)>,
    {
        let mut terms: BTreeMap<Occupation, Amplitude> = BTreeMap::new();
        for (occ, amp) in &self.terms {
            if let Some((k, a)) = f(occ, *amp) {
                *terms.entry(k).or_default() += a;
            }
        }
        terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        Self {
            modes: self.modes,
            cap: self.cap,
            terms,
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.modes {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "mode {mode} out of range for {} modes",
                self.modes
            )))
        }
    }

    fn check_modes(&self, other: &Self) -> Result<()> {
        if self.modes == other.modes {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{}-mode and {}-mode states",
                self.modes, other.modes
            )))
        }
    }
}

/// `⟨bra|ket⟩ = Σ conj(bra[n]) ket[n]`.
pub fn inner_product(bra: &PureState, ket: &PureState) -> Result<Amplitude> {
    bra.check_modes(ket)?;
    let (small, large, conj_small) = if bra.terms.len() <= ket.terms.len() {
        (bra, ket, true)
    } else {
        (ket, bra, false)
    };
    Ok(small
        .terms
        .iter()
        .filter_map(|(k, a)| large.terms.get(k).map(|b| (a, b)))
        .map(|(a, b)| {
            if conj_small {
                a.conj() * b
            } else {
                b.conj() * a
            }
        })
        .sum())
}

/// Convex combination of normalized pure states.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedEnsemble {
    components: Vec<(f64, PureState)>,
}

impl MixedEnsemble {
    pub fn new(components: Vec<(f64, PureState)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("empty ensemble".into()));
        }
        let modes = components[0].1.modes();
        let mut total = 0.0;
        for (w, s) in &components {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "ensemble weight {w} outside (0, 1]"
                )));
            }
            if s.modes() != modes {
                return Err(Error::Dimension("ensemble mixes mode counts".into()));
            }
            s.require_normalized()?;
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "ensemble weights sum to {total}"
            )));
        }
        Ok(Self { components })
    }

    pub fn pure(state: PureState) -> Result<Self> {
        Self::new(vec![(1.0, state)])
    }

    pub fn components(&self) -> &[(f64, PureState)] {
        &self.components
    }

    pub fn modes(&self) -> usize {
        self.components[0].1.modes()
    }

    /// Weighted sum of a per-component expectation value.
    pub fn expectation<F>(&self, mut f: F) -> Result<f64>
    where
        F: FnMut(&PureState) -> Result<f64>,
    {
        self.components
            .iter()
            .try_fold(0.0, |acc, (w, s)| Ok(acc + w * f(s)?))
    }
}
