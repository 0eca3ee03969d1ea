//! Outage-probability toolkit for a single-cell mmWave downlink in which a
//! macro base station with a large antenna array serves grouped users through
//! two-stage statistical beamforming, assisted by a single-antenna pico
//! station acting as a decode-and-forward relay for part of one group.
//!
//! The crate has two independent paths to every quantity of interest:
//!
//! * an **analytic** path (`outage`, `averaging`, `noise_limited`, `cell`)
//!   built from eigenvalue spectra of small effective matrices and adaptive
//!   quadrature over the cell geometry, and
//! * a **Monte Carlo** path (`simulation`) that drops users, samples channels
//!   and computes SINRs literally.
//!
//! Agreement between the two is the correctness argument; the test suite and
//! the `acceptance` integration target enforce it.

pub mod averaging;
pub mod cell;
pub mod channel;
pub mod error;
pub mod gamma;
pub mod geometry;
pub mod noise_limited;
pub mod numerics;
pub mod outage;
pub mod params;
pub mod precoding;
pub mod qform;
pub mod rng;
pub mod scenario;
pub mod simulation;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
