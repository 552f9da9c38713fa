//! Scenario description and per-phase evaluation.
//!
//! An [`ExperimentSpec`] fixes the analyzer size, what is fed into the
//! interferometer, how the coincidence signal is read out, and the phase
//! grid. [`ExperimentSpec::moments_at`] is the single entry point that turns
//! a phase into signal moments; scans, surfaces and the CLI all go through it.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detectors::LossSpec;
use crate::error::{Error, Result};
use crate::fock::{MixedEnsemble, PureState, DEFAULT_PHOTON_CAP};
use crate::formulas::coherent_weights;
use crate::networks::{balanced_splitter_with_phase, build_full_network, evolve, NetworkSpec};
use crate::observables::{
    coincidence_moments_detector, coincidence_moments_reduced, presence_moments, MomentConvention,
    MomentResult,
};
use crate::phase::{PhaseGrid, Scan};

/// Default number of phase samples, `2 · cap + 1`.
pub const DEFAULT_PHASE_POINTS: usize = 2 * DEFAULT_PHOTON_CAP as usize + 1;

/// What enters the interferometer.
///
/// Everything except `Noon` is fed through the single input channel α with
/// β empty. `Noon` is prepared directly on the two interferometer arms and
/// bypasses the front splitter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputState {
    Fock {
        photons: u32,
    },
    /// Fock state with `ports + excess` photons.
    Excess {
        excess: u32,
    },
    Coherent {
        mean: f64,
    },
    Noon {
        photons: u32,
    },
    /// Coherent superposition `Σ c_J |J⟩_α` (normalized on use).
    Superposition {
        amplitudes: Vec<(u32, Complex64)>,
    },
    /// Incoherent mixture of α-channel Fock states.
    Mixed {
        components: Vec<(f64, u32)>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Photon-number resolving; signal is `Π_j n_j`.
    Number,
    /// Presence-only; signal is the all-channels-occupied projector.
    Threshold,
}

impl DetectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Number => "number",
            Self::Threshold => "threshold",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "number" => Ok(Self::Number),
            "threshold" => Ok(Self::Threshold),
            other => Err(Error::InvalidParameter(format!(
                "unknown detector {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub ports: usize,
    pub input: InputState,
    pub phase_points: usize,
    pub convention: MomentConvention,
    pub detector: DetectorKind,
    pub loss: Option<LossSpec>,
    pub seed: Option<u64>,
    pub photon_cap: u32,
}

/// One mixture component of the prepared input.
#[derive(Clone, Debug, PartialEq)]
enum Prepared {
    /// State on (α, β), sent through splitter, phase and N-port.
    Channel(PureState),
    /// Number-entangled state on the two arms with `photons` quanta.
    Noon(u32),
}

impl ExperimentSpec {
    pub fn new(ports: usize, input: InputState, convention: MomentConvention) -> Self {
        Self {
            ports,
            input,
            phase_points: DEFAULT_PHASE_POINTS,
            convention,
            detector: DetectorKind::Number,
            loss: None,
            seed: None,
            photon_cap: DEFAULT_PHOTON_CAP,
        }
    }

    pub fn with_detector(mut self, detector: DetectorKind) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_loss(mut self, loss: LossSpec) -> Self {
        self.loss = Some(loss);
        self
    }

    pub fn with_phase_points(mut self, points: usize) -> Self {
        self.phase_points = points;
        self
    }

    pub fn validate(&self) -> Result<()> {
        NetworkSpec {
            ports: self.ports,
            phase: 0.0,
            include_front_splitter: true,
        }
        .validate()?;
        if let Some(loss) = &self.loss {
            if loss.channels() != self.ports {
                return Err(Error::InvalidParameter(format!(
                    "{} loss amplitudes for {} ports",
                    loss.channels(),
                    self.ports
                )));
            }
        }
        PhaseGrid::new(self.phase_points)?;
        self.prepared_components()?;
        Ok(())
    }

    /// Upper bound on the photon number of any input component, which also
    /// bounds the trigonometric degree of every moment in φ.
    pub fn photon_bound(&self) -> Result<u32> {
        Ok(match &self.input {
            InputState::Fock { photons } | InputState::Noon { photons } => *photons,
            InputState::Excess { excess } => self.ports as u32 + excess,
            InputState::Coherent { mean } => {
                coherent_weights(*mean)?.keys().last().copied().unwrap_or(0)
            }
            InputState::Superposition { amplitudes } => {
                amplitudes.iter().map(|(j, _)| *j).max().unwrap_or(0)
            }
            InputState::Mixed { components } => {
                components.iter().map(|(_, j)| *j).max().unwrap_or(0)
            }
        })
    }

    /// Photon cap in force. Coherent inputs raise it to their truncation
    /// point so the tail rule is honoured.
    pub fn effective_cap(&self) -> Result<u32> {
        let bound = self.photon_bound()?;
        match self.input {
            InputState::Coherent { .. } => Ok(self.photon_cap.max(bound)),
            _ if bound > self.photon_cap => Err(Error::Capacity {
                requested: bound,
                cap: self.photon_cap,
            }),
            _ => Ok(self.photon_cap),
        }
    }

    pub fn grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(self.phase_points)
    }

    fn prepared_components(&self) -> Result<Vec<(f64, Prepared)>> {
        let cap = self.effective_cap()?;
        let fock = |j: u32| -> Result<PureState> { PureState::fock(2, 0, j)?.with_cap(cap) };
        Ok(match &self.input {
            InputState::Fock { photons } => vec![(1.0, Prepared::Channel(fock(*photons)?))],
            InputState::Excess { excess } => {
                vec![(1.0, Prepared::Channel(fock(self.ports as u32 + excess)?))]
            }
            InputState::Noon { photons } => {
                if *photons == 0 {
                    return Err(Error::InvalidParameter(
                        "NOON state needs at least one photon".into(),
                    ));
                }
                vec![(1.0, Prepared::Noon(*photons))]
            }
            InputState::Coherent { mean } => {
                let terms = coherent_weights(*mean)?
                    .into_iter()
                    .map(|(j, w)| (vec![j, 0], Complex64::new(w.sqrt(), 0.0)));
                let state = PureState::from_terms_with_cap(2, cap, terms)?.normalized()?;
                vec![(1.0, Prepared::Channel(state))]
            }
            InputState::Superposition { amplitudes } => {
                if amplitudes.is_empty() {
                    return Err(Error::InvalidParameter("empty superposition".into()));
                }
                let terms = amplitudes.iter().map(|(j, a)| (vec![*j, 0], *a));
                let state = PureState::from_terms_with_cap(2, cap, terms)?.normalized()?;
                vec![(1.0, Prepared::Channel(state))]
            }
            InputState::Mixed { components } => {
                let states = components
                    .iter()
                    .map(|(w, j)| Ok((*w, fock(*j)?)))
                    .collect::<Result<Vec<_>>>()?;
                MixedEnsemble::new(states.clone())?;
                states
                    .into_iter()
                    .map(|(w, s)| (w, Prepared::Channel(s)))
                    .collect()
            }
        })
    }

    /// State on the two interferometer arms (after the phase, before the
    /// N-port) for each mixture component.
    pub fn arm_states_at(&self, phi: f64) -> Result<Vec<(f64, PureState)>> {
        let splitter = balanced_splitter_with_phase(phi);
        self.prepared_components()?
            .into_iter()
            .map(|(w, c)| {
                let s = match c {
                    Prepared::Channel(s) => evolve(&s, &splitter)?,
                    Prepared::Noon(n) => noon_state(n, phi, self.effective_cap()?)?,
                };
                Ok((w, s))
            })
            .collect()
    }

    /// Output-channel states for each mixture component, before any loss.
    pub fn output_states_at(&self, phi: f64) -> Result<MixedEnsemble> {
        let components = self
            .prepared_components()?
            .into_iter()
            .map(|(w, c)| {
                let (state, front) = match c {
                    Prepared::Channel(s) => (s, true),
                    Prepared::Noon(n) => (noon_state(n, phi, self.effective_cap()?)?, false),
                };
                let network = build_full_network(&NetworkSpec {
                    ports: self.ports,
                    phase: phi,
                    include_front_splitter: front,
                })?;
                Ok((w, evolve(&state.pad_modes(self.ports)?, &network)?))
            })
            .collect::<Result<Vec<_>>>()?;
        MixedEnsemble::new(components)
    }

    /// Signal moments at one phase under the configured convention,
    /// detector and loss. Loss rescales the signal operator by `T`.
    pub fn moments_at(&self, phi: f64) -> Result<MomentResult> {
        let lossless = self.lossless_moments_at(phi)?;
        Ok(match &self.loss {
            Some(loss) => lossless.scaled(loss.transmission_factor()),
            None => lossless,
        })
    }

    pub fn lossless_moments_at(&self, phi: f64) -> Result<MomentResult> {
        match (self.detector, self.convention) {
            (DetectorKind::Threshold, _) => {
                let out = self.output_states_at(phi)?;
                mix(out.components(), presence_moments)
            }
            (DetectorKind::Number, MomentConvention::DetectorStatistics) => {
                let out = self.output_states_at(phi)?;
                mix(out.components(), coincidence_moments_detector)
            }
            (DetectorKind::Number, MomentConvention::ReducedOperator) => {
                let arms = self.arm_states_at(phi)?;
                mix(&arms, |s| coincidence_moments_reduced(s, self.ports))
            }
        }
    }

    /// Moments on the configured phase grid, with interpolants for Δφ.
    pub fn scan(&self) -> Result<Scan> {
        self.validate()?;
        Scan::run(self.grid()?, self.photon_bound()?, |phi| {
            self.moments_at(phi)
        })
    }
}

fn mix<F>(components: &[(f64, PureState)], f: F) -> Result<MomentResult>
where
    F: Fn(&PureState) -> Result<MomentResult>,
{
    let parts = components
        .iter()
        .map(|(w, s)| Ok((*w, f(s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentResult::mixture(parts))
}

/// `(|n,0⟩ + e^{inφ}|0,n⟩)/√2` on the two interferometer arms.
pub fn noon_state(photons: u32, phi: f64, cap: u32) -> Result<PureState> {
    PureState::from_terms_with_cap(
        2,
        cap,
        [
            (vec![photons, 0], Complex64::new(FRAC_1_SQRT_2, 0.0)),
            (
                vec![0, photons],
                Complex64::from_polar(FRAC_1_SQRT_2, photons as f64 * phi),
            ),
        ],
    )
}

/// Photon-number weights `|c_J|²` of a single-channel input, if it has a
/// definite single-channel form.
pub fn photon_number_weights(input: &InputState, ports: u32) -> Result<BTreeMap<u32, f64>> {
    let mut out = BTreeMap::new();
    match input {
        InputState::Fock { photons } => {
            out.insert(*photons, 1.0);
        }
        InputState::Excess { excess } => {
            out.insert(ports + excess, 1.0);
        }
        InputState::Coherent { mean } => return coherent_weights(*mean),
        InputState::Superposition { amplitudes } => {
            let total: f64 = amplitudes.iter().map(|(_, a)| a.norm_sqr()).sum();
            for (j, a) in amplitudes {
                *out.entry(*j).or_default() += a.norm_sqr() / total;
            }
        }
        InputState::Mixed { components } => {
            for (w, j) in components {
                *out.entry(*j).or_default() += w;
            }
        }
        InputState::Noon { .. } => {
            return Err(Error::InvalidParameter(
                "NOON input is not a single-channel state".into(),
            ))
        }
    }
    Ok(out)
}
