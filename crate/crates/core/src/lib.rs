//! Desk-scale simulation of wireless two-way time transfer (TWTT) between
//! two nodes of a distributed antenna array.
//!
//! The processing chain mirrors a software-radio implementation:
//!
//! 1. [`waveform`] synthesizes a pulsed two-tone or LFM complex baseband pulse.
//! 2. [`channel`] delays it by the propagation time (including the
//!    sub-sample part) and adds white Gaussian noise at a target SNR.
//! 3. [`estimator`] recovers the delay with a matched filter, a parabolic
//!    (QLS) peak refinement and a precomputed bias lookup table.
//! 4. [`twtt`] runs the four-timestamp exchange over [`clock`] models and
//!    recovers clock offset and propagation delay.
//! 5. [`analysis`] evaluates the Cramér–Rao bound the measurements are
//!    compared against, and [`harness`] runs seeded Monte Carlo sweeps and
//!    writes CSV/JSON reports.

pub mod analysis;
pub mod channel;
pub mod clock;
pub mod error;
pub mod estimator;
pub(crate) mod fft;
pub mod harness;
pub mod rng;
pub mod signal;
pub mod stats;
pub mod twtt;
pub mod waveform;

pub use error::{Error, Result};
pub use signal::SampledSignal;

pub use num_complex::Complex64;
