//! Linear-optical mode transformations and exact state evolution.
//!
//! Convention: rows index output modes, columns index input modes, and the
//! output creation operators are `A†_j = Σ_k U[j][k] a†_k`. Evolving a state
//! written in input operators therefore substitutes
//! `a†_k = Σ_j conj(U[j][k]) A†_j`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{Occupation, PureState};

/// Unitarity residual accepted by [`ModeUnitary::new`].
pub const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Square complex matrix acting on creation operators.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ModeUnitary {
    /// Builds a matrix from rows and checks it is unitary to
    /// [`UNITARITY_TOLERANCE`].
    pub fn new(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let u = Self::from_rows_unchecked(rows)?;
        let residual = u.unitarity_residual();
        if residual > UNITARITY_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary (residual {residual:e})"
            )));
        }
        Ok(u)
    }

    fn from_rows_unchecked(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("matrix is not square".into()));
        }
        Ok(Self {
            dim,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex64::default(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.entries.chunks(self.dim)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![Complex64::default(); n * n];
        for j in 0..n {
            for k in 0..n {
                entries[k * n + j] = self.get(j, k).conj();
            }
        }
        Self { dim: n, entries }
    }

    /// `max |(U U† − I)[j][k]|`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let dot: Complex64 = (0..n).map(|m| self.get(j, m) * self.get(k, m).conj()).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn product(left: &Self, right: &Self) -> Self {
        let n = left.dim;
        let mut entries = vec![Complex64::default(); n * n];
        for j in 0..n {
            for k in 0..n {
                entries[j * n + k] = (0..n).map(|m| left.get(j, m) * right.get(m, k)).sum();
            }
        }
        Self { dim: n, entries }
    }
}

/// Balanced beam splitter followed by the phase `e^{−iφ}` on the second arm:
/// `a†₁ = (α† + β†)/√2`, `a†₂ = e^{−iφ}(α† − β†)/√2`.
pub fn balanced_splitter_with_phase(phase: f64) -> ModeUnitary {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let shifted = Complex64::from_polar(FRAC_1_SQRT_2, -phase);
    ModeUnitary {
        dim: 2,
        entries: vec![h, h, shifted, -shifted],
    }
}

/// Balanced N-port with `U[j][k] = exp(2πi·j·k/N)/√N` (zero-based indices).
pub fn dft_nport(ports: usize) -> Result<ModeUnitary> {
    if ports == 0 {
        return Err(Error::Dimension("an N-port needs at least one port".into()));
    }
    let scale = 1.0 / (ports as f64).sqrt();
    let mut entries = Vec::with_capacity(ports * ports);
    for j in 0..ports {
        for k in 0..ports {
            // Reduce the exponent mod N so large products keep full precision.
            let e = (j * k) % ports;
            entries.push(Complex64::from_polar(
                scale,
                2.0 * PI * e as f64 / ports as f64,
            ));
        }
    }
    Ok(ModeUnitary {
        dim: ports,
        entries,
    })
}

/// Places `u` on `targets` inside a `total`-mode identity.
pub fn embed(u: &ModeUnitary, targets: &[usize], total: usize) -> Result<ModeUnitary> {
    if targets.len() != u.dim() {
        return Err(Error::Dimension(format!(
            "{} target modes for a {}-mode element",
            targets.len(),
            u.dim()
        )));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= total {
            return Err(Error::Dimension(format!(
                "target mode {t} out of range for {total} modes"
            )));
        }
        if targets[..i].contains(&t) {
            return Err(Error::Dimension(format!("target mode {t} repeated")));
        }
    }
    let mut out = ModeUnitary::identity(total);
    for (a, &ta) in targets.iter().enumerate() {
        for (b, &tb) in targets.iter().enumerate() {
            out.entries[ta * total + tb] = u.get(a, b);
        }
    }
    Ok(out)
}

/// The network `first` followed by `then`, i.e. the product `then · first`.
pub fn compose(first: &ModeUnitary, then: &ModeUnitary) -> Result<ModeUnitary> {
    if first.dim() != then.dim() {
        return Err(Error::Dimension(format!(
            "cannot compose {}-mode and {}-mode networks",
            first.dim(),
            then.dim()
        )));
    }
    Ok(ModeUnitary::product(then, first))
}

/// Wiring of the interferometer plus N-port analyzer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkSpec {
    pub ports: usize,
    pub phase: f64,
    pub include_front_splitter: bool,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ports < 2 {
            return Err(Error::InvalidParameter(format!(
                "the analyzer needs at least 2 ports, got {}",
                self.ports
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::InvalidParameter("phase must be finite".into()));
        }
        Ok(())
    }
}

/// Splitter and phase on modes 1–2, then the N-port; or the N-port alone
/// when the state is prepared inside the interferometer.
pub fn build_full_network(spec: &NetworkSpec) -> Result<ModeUnitary> {
    spec.validate()?;
    let nport = dft_nport(spec.ports)?;
    if !spec.include_front_splitter {
        return Ok(nport);
    }
    let front = embed(
        &balanced_splitter_with_phase(spec.phase),
        &[0, 1],
        spec.ports,
    )?;
    compose(&front, &nport)
}

/// Sends `state` through `u` by multinomial expansion of each basis term.
pub fn evolve(state: &PureState, u: &ModeUnitary) -> Result<PureState> {
    let modes = u.dim();
    if state.modes() != modes {
        return Err(Error::Dimension(format!(
            "{}-mode state through a {modes}-mode network",
            state.modes()
        )));
    }
    // Column k of the substitution: a†_k = Σ_j conj(U[j][k]) A†_j.
    let columns: Vec<Vec<Complex64>> = (0..modes)
        .map(|k| (0..modes).map(|j| u.get(j, k).conj()).collect())
        .collect();

    let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let norm: f64 = occ.counts().iter().map(|&n| factorial(n)).product();
        let mut poly: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        poly.insert(vec![0; modes], amp / norm.sqrt());
        for (k, &n) in occ.counts().iter().enumerate() {
            if n == 0 {
                continue;
            }
            let factor = expand_power(&columns[k], n);
            poly = multiply(&poly, &factor);
        }
        for (monomial, coeff) in poly {
            let weight: f64 = monomial.iter().map(|&m| factorial(m)).product();
            *out.entry(monomial).or_default() += coeff * weight.sqrt();
        }
    }
    PureState::from_terms_with_cap(modes, state.cap(), out)
}

/// Coefficients of `(Σ_j w_j x_j)^n` keyed by exponent vectors.
fn expand_power(weights: &[Complex64], n: u32) -> BTreeMap<Vec<u32>, Complex64> {
    let mut out = BTreeMap::new();
    let mut exponents = vec![0u32; weights.len()];
    compositions(n, 0, &mut exponents, &mut |m| {
        let mut term = Complex64::new(multinomial(n, m), 0.0);
        for (w, &e) in weights.iter().zip(m) {
            if e > 0 {
                term *= w.powu(e);
            }
        }
        if term.norm() > 0.0 {
            out.insert(m.to_vec(), term);
        }
    });
    out
}

fn multiply(
    a: &BTreeMap<Vec<u32>, Complex64>,
    b: &BTreeMap<Vec<u32>, Complex64>,
) -> BTreeMap<Vec<u32>, Complex64> {
    let mut out: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    for (ka, va) in a {
        for (kb, vb) in b {
            let key: Vec<u32> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            *out.entry(key).or_default() += va * vb;
        }
    }
    out
}

/// Calls `f` with every vector of `exps.len()` non-negative entries summing
/// to `remaining`, filling from index `at`.
fn compositions(remaining: u32, at: usize, exps: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
    if at + 1 == exps.len() {
        exps[at] = remaining;
        f(exps);
        return;
    }
    for e in (0..=remaining).rev() {
        exps[at] = e;
        compositions(remaining - e, at + 1, exps, f);
    }
    exps[at] = 0;
}

/// `n! / Π m_j!` as an exact integer product of binomials, converted to f64.
pub(crate) fn multinomial(n: u32, parts: &[u32]) -> f64 {
    let mut exact: Option<u128> = Some(1);
    let mut approx = 1.0f64;
    let mut seen = 0u32;
    for &m in parts {
        seen += m;
        let b = binomial(seen, m);
        exact = exact.and_then(|acc| b.and_then(|b| acc.checked_mul(b)));
        approx *= b.map_or_else(|| binomial_f64(seen, m), |b| b as f64);
    }
    debug_assert_eq!(seen, n);
    exact.map_or(approx, |e| e as f64)
}

fn binomial(n: u32, k: u32) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Single-channel output intensities `⟨A†_j A_j⟩` of a state.
pub fn channel_intensities(state: &PureState) -> Vec<f64> {
    let mut out = vec![0.0; state.modes()];
    for (occ, amp) in state.terms() {
        for (j, &n) in occ.counts().iter().enumerate() {
            out[j] += amp.norm_sqr() * n as f64;
        }
    }
    out
}

/// Whether every term of `state` carries `photons` in total.
pub fn conserves_photon_number(state: &PureState, photons: u32) -> bool {
    state
        .terms()
        .all(|(occ, _)| Occupation::total(occ) == photons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn splitter_entries() {
        let u = balanced_splitter_with_phase(0.0);
        let h = FRAC_1_SQRT_2;
        let expected = ModeUnitary::new(vec![
            vec![c(h, 0.0), c(h, 0.0)],
            vec![c(h, 0.0), c(-h, 0.0)],
        ])
        .unwrap();
        assert!(u.max_deviation(&expected) < 1e-16);

        let u = balanced_splitter_with_phase(PI);
        assert!((u.get(1, 0) - c(-h, 0.0)).norm() < 1e-15);
        assert!((u.get(1, 1) - c(h, 0.0)).norm() < 1e-15);
        for phi in [0.0, 0.3, 1.7, -2.2, 100.0] {
            assert!(balanced_splitter_with_phase(phi).unitarity_residual() <= 1e-15);
        }
    }

    #[test]
    fn dft_entries() {
        assert!(
            dft_nport(1)
                .unwrap()
                .max_deviation(&ModeUnitary::identity(1))
                == 0.0
        );
        let d2 = dft_nport(2).unwrap();
        assert!(d2.max_deviation(&balanced_splitter_with_phase(0.0)) < 1e-15);
        // 1-based (j=2, k=3) is zero-based (1, 2): exp(iπ)/2.
        assert!((dft_nport(4).unwrap().get(1, 2) - c(-0.5, 0.0)).norm() < 1e-15);
        for n in 1..=12 {
            assert!(dft_nport(n).unwrap().unitarity_residual() <= 1e-13);
        }
        assert!(matches!(dft_nport(0), Err(Error::Dimension(_))));
    }

    #[test]
    fn embedding() {
        let id = embed(&ModeUnitary::identity(2), &[0, 1], 4).unwrap();
        assert_eq!(id, ModeUnitary::identity(4));

        let s = balanced_splitter_with_phase(0.4);
        let e = embed(&s, &[0, 1], 3).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(e.get(j, k), s.get(j, k));
            }
            assert_eq!(e.get(j, 2), c(0.0, 0.0));
            assert_eq!(e.get(2, j), c(0.0, 0.0));
        }
        assert_eq!(e.get(2, 2), c(1.0, 0.0));
        let full = compose(&e, &dft_nport(3).unwrap()).unwrap();
        assert!(full.unitarity_residual() <= 1e-13);

        assert!(embed(&s, &[1, 1], 3).is_err());
        assert!(embed(&s, &[0, 3], 3).is_err());
        assert!(embed(&s, &[0], 3).is_err());
    }

    #[test]
    fn composition() {
        let f = dft_nport(5).unwrap();
        let id = compose(&f, &f.adjoint()).unwrap();
        assert!(id.max_deviation(&ModeUnitary::identity(5)) <= 1e-13);
        let same = compose(&ModeUnitary::identity(5), &f).unwrap();
        assert!(same.max_deviation(&f) <= 1e-15);
        assert!(compose(&f, &dft_nport(4).unwrap()).is_err());
    }

    #[test]
    fn evolve_examples() {
        let f2 = dft_nport(2).unwrap();
        let vac = evolve(&PureState::vacuum(2), &f2).unwrap();
        assert!((vac.amplitude(&[0, 0]) - c(1.0, 0.0)).norm() < 1e-15);

        let one = evolve(&PureState::basis(&[1, 0]).unwrap(), &f2).unwrap();
        assert!((one.amplitude(&[1, 0]) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((one.amplitude(&[0, 1]) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);

        // Hong–Ou–Mandel: |1,1⟩ → (|2,0⟩ − |0,2⟩)/√2 up to a global phase.
        let hom = evolve(
            &PureState::basis(&[1, 1]).unwrap(),
            &balanced_splitter_with_phase(0.0),
        )
        .unwrap();
        assert_eq!(hom.len(), 2);
        assert!(hom.amplitude(&[1, 1]).norm() < 1e-15);
        let a = hom.amplitude(&[2, 0]);
        let b = hom.amplitude(&[0, 2]);
        assert!((a.norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b + a).norm() < 1e-15);
    }

    #[test]
    fn single_photon_fringe_on_grid() {
        for m in 0..25 {
            let phi = 2.0 * PI * m as f64 / 25.0;
            let spec = NetworkSpec {
                ports: 2,
                phase: phi,
                include_front_splitter: true,
            };
            let u = build_full_network(&spec).unwrap();
            let out = evolve(&PureState::basis(&[1, 0]).unwrap(), &u).unwrap();
            let i = channel_intensities(&out);
            assert!((i[0] - (1.0 + phi.cos()) / 2.0).abs() <= 1e-12);
            assert!((i[1] - (1.0 - phi.cos()) / 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn full_network_builder() {
        let spec = NetworkSpec {
            ports: 2,
            phase: 0.0,
            include_front_splitter: true,
        };
        let out = evolve(
            &PureState::basis(&[1, 0]).unwrap(),
            &build_full_network(&spec).unwrap(),
        )
        .unwrap();
        assert!((channel_intensities(&out)[0] - 1.0).abs() < 1e-15);

        let spec = NetworkSpec {
            ports: 3,
            phase: 0.7,
            include_front_splitter: false,
        };
        assert_eq!(build_full_network(&spec).unwrap(), dft_nport(3).unwrap());

        for ports in 2..=8 {
            for phi in [0.0, 0.5, 2.0, 4.0] {
                let spec = NetworkSpec {
                    ports,
                    phase: phi,
                    include_front_splitter: true,
                };
                assert!(build_full_network(&spec).unwrap().unitarity_residual() <= 1e-12);
            }
        }
        let bad = NetworkSpec {
            ports: 1,
            phase: 0.0,
            include_front_splitter: true,
        };
        assert!(build_full_network(&bad).is_err());
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(4, &[2, 2]), 6.0);
        assert_eq!(multinomial(5, &[1, 2, 2]), 30.0);
        assert_eq!(multinomial(3, &[0, 3, 0]), 1.0);
        let big = multinomial(40, &[20, 20]);
        assert_eq!(big, 137_846_528_820.0);
        assert!((SQRT_2 * SQRT_2 - 2.0).abs() < 1e-15);
    }

    fn small_state() -> impl Strategy<Value = PureState> {
        prop::collection::vec(
            ((0u32..3, 0u32..3, 0u32..2), (-1.0f64..1.0, -1.0f64..1.0)),
            1..6,
        )
        .prop_filter_map("non-zero", |terms| {
            let s = PureState::from_terms(
                3,
                terms
                    .into_iter()
                    .map(|((a, b, c), (re, im))| (vec![a, b, c], Complex64::new(re, im))),
            )
            .ok()?;
            (s.norm() > 1e-3).then(|| s.normalized().unwrap())
        })
    }

    proptest! {
        #[test]
        fn evolve_roundtrip_and_norm(s in small_state(), phi in 0.0f64..6.3) {
            let front = embed(&balanced_splitter_with_phase(phi), &[0, 1], 3).unwrap();
            let u = compose(&front, &dft_nport(3).unwrap()).unwrap();
            let out = evolve(&s, &u).unwrap();
            prop_assert!((out.norm() - 1.0).abs() <= 1e-12);
            let back = evolve(&out, &u.adjoint()).unwrap();
            for (occ, amp) in s.terms() {
                prop_assert!((back.amplitude(occ.counts()) - amp).norm() <= 1e-11);
            }
            for (occ, amp) in back.terms() {
                prop_assert!((s.amplitude(occ.counts()) - amp).norm() <= 1e-11);
            }
        }

        #[test]
        fn evolve_conserves_photon_number(n in 0u32..8, phi in 0.0f64..6.3, ports in 2usize..5) {
            let spec = NetworkSpec { ports, phase: phi, include_front_splitter: true };
            let input = PureState::fock(ports, 0, n).unwrap();
            let out = evolve(&input, &build_full_network(&spec).unwrap()).unwrap();
            prop_assert!(conserves_photon_number(&out, n));
            prop_assert!((out.norm() - 1.0).abs() <= 1e-12);
        }
    }
}
