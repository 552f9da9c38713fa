//! Exact simulation of a two-path interferometer read out by a balanced
//! N-port analyzer with N-fold coincidence detection.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: sparse multi-mode Fock states and ladder operators.
//! * [`networks`]: beam splitter, phase and discrete-Fourier N-port
//!   unitaries, and exact state evolution through them.
//! * [`observables`]: coincidence and presence observables, their moments
//!   under two conventions, and harmonic analysis.
//! * [`formulas`]: closed-form predictions used as oracles.
//! * [`phase`]: phase-spread scans, minimum search and noise surfaces.
//! * [`detectors`]: loss, threshold response and click sampling.
//! * [`experiment`]: scenario specs tying the above together.
//! * [`verify`]: named verification suites with pass/fail reports.

pub mod detectors;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod formulas;
pub mod networks;
pub mod observables;
pub mod phase;
pub mod verify;

pub use error::{Error, Result};
