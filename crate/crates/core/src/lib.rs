//! Simulation core for time-multiplexed discrete-time quantum walks.
//!
//! A photonic walker lives on the integer line with its polarization as the
//! coin. Every step applies a position-dependent coin (the schedule an
//! electro-optic modulator would execute) followed by the polarization-
//! dependent shift `|x,H> -> |x+1,H>`, `|x,V> -> |x-1,V>`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and any IO live in the `qwalk` companion crate.
//!
//! Module map:
//!
//! - [`state`]: sparse walker state, shift and coin-field actions, read-out.
//! - [`coin`]: EOM, waveplate and named coin operators.
//! - [`schedule`]: per-(step, position) coin programs and their text form.
//! - [`engine`]: schedule evolution with an optional loss model.
//! - [`protocols`]: finite graphs, in-situ state preparation, state transfer.
//! - [`photonics`]: timing, photon budget, outcoupling and step-count math.
//! - [`analysis`]: distance, fidelity, tomography and Monte Carlo error bars.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod coin;
pub mod engine;
mod error;
pub mod photonics;
pub mod protocols;
pub mod schedule;
pub mod state;

pub use coin::{CoinOperator, CoinSpec, NamedCoin};
pub use engine::{evolve, Chessboard, LossModel, RunRecord};
pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use schedule::Schedule;
pub use state::{CoinState, Polarization, ProbabilityRow, WalkState};

/// Complex amplitude type used throughout the crate.
pub type C64 = num_complex::Complex64;
