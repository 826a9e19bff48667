//! Design and characterization toolkit for merged-element transmon (MET)
//! qubits: junctions large enough that their own parallel-plate capacitance
//! provides the transmon shunt.
//!
//! The crate is organized around the measurement workflow:
//!
//! - [`qubit`] — Cooper-pair-box spectrum solver in the charge basis, its
//!   inverse (spectroscopy → energies), charge dispersion, SQUID flux tuning.
//! - [`design`] — junction geometry → capacitance → E_C, tunnel resistance →
//!   critical current → E_J, and assembled device predictions.
//! - [`loss`] — participation-weighted loss budgets, Q ↔ T1 conversion,
//!   junction loss-tangent bounds, and scaling projections.
//! - [`spectro`] — flux-map spectroscopy simulation with embedded two-level
//!   system defects, avoided-crossing detection, TLS density estimates.
//! - [`fit`] — Levenberg-Marquardt engine plus the measurement models:
//!   exponential T1 decay, stretched-exponential T2 echo, Dynes-broadened
//!   SIS tunneling curves, and per-device statistics.
//! - [`trace`] / [`report`] — CSV/JSON interchange formats, device registry,
//!   and deterministic report generation.
//!
//! All numerical routines are pure functions of their inputs. With the
//! `parallel` feature (on by default) embarrassingly parallel inner loops run
//! on rayon; outputs are bit-identical to the sequential fallback.

pub mod constants;
pub mod design;
pub mod error;
pub mod fit;
pub mod loss;
pub mod qubit;
pub mod report;
pub mod spectro;
pub mod trace;

pub(crate) mod parallel;

pub use error::{Error, Result};
