//! Simulation and estimation toolkit for single-photon interference from a
//! pair of entangled two-level atoms sharing one free-space optical mode.
//!
//! The crate is organised bottom-up:
//!
//! * [`quantum`]: two-qubit states, concurrence, fidelity and parity.
//! * [`emission`]: the post-herald state and the witness-photon fringe.
//! * [`montecarlo`]: attempt-level counting statistics and rate budgets.
//! * [`estimation`]: fringe fits, parity-based concurrence, g2 model.
//! * [`gradiometry`]: magnetic-gradient driven phase evolution.
//! * [`calibration`]: piezo mirror ramp, Michelson readout, delay table.
//!
//! Randomness is drawn from counter-based streams ([`rng`]) so that every
//! simulation is reproducible for a given seed, however it is sharded.

pub mod calibration;
pub mod emission;
mod error;
pub mod estimation;
pub mod gradiometry;
pub mod montecarlo;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};
