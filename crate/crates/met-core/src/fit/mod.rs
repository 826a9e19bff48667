//! Nonlinear least-squares engine and the measurement models built on it:
//! exponential T1 decay, stretched-exponential T2 echo, Dynes-broadened SIS
//! tunneling curves, and per-device summary statistics.

mod lm;
mod models;
mod quad;
mod sis;

pub use lm::{lm_fit, FitResult};
pub use models::{
    exp_decay_model, fit_t1, fit_t1_batch, fit_t2_stretched, median, sample_stats,
    stretched_exp_model, summarize_device, DeviceSummary, SampleStats, T1Fit, T2Fit,
};
pub use quad::integrate_with_breakpoints;
pub use sis::{dynes_dos, fit_dynes, sis_conductance, sis_current, DynesFit};
