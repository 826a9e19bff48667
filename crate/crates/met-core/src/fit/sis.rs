//! SIS tunneling current with a Dynes-broadened BCS density of states, and
//! the gap fit used on cryogenic I-V / dI/dV traces.
//!
//! The tunneling current between two superconductors through a barrier of
//! normal resistance R_n is
//!
//!   I(V) = (1/R_n) ∫ N1(ε) N2(ε + eV) [f(ε) − f(ε + eV)] dε
//!
//! with the Dynes density of states N(E) = |Re[(E − iγ)/√((E − iγ)² − Δ²)]|.
//! Energies are handled in volts (E/e), so the μeV gap values map directly
//! onto the gap voltages seen in the data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::fit::lm::{lm_fit_with_step, FitResult};
use crate::fit::quad::integrate_with_breakpoints;
use crate::trace::{MeasurementTrace, TraceKind};

/// Dynes-broadened quasiparticle density of states (normalized to 1 far
/// above the gap). `energy` and `gap` share units; `gamma` regularizes the
/// BCS singularity at |E| = Δ.
pub fn dynes_dos(energy: f64, gap: f64, gamma: f64) -> f64 {
    let z = Complex64::new(energy, -gamma);
    let w = z / (z * z - gap * gap).sqrt();
    w.re.abs()
}

/// Overflow-safe Fermi factor with the T → 0 step-function limit.
fn fermi(energy_v: f64, kt_v: f64) -> f64 {
    if kt_v <= 0.0 {
        return if energy_v < 0.0 {
            1.0
        } else if energy_v > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let a = energy_v / kt_v;
    if a > 700.0 {
        0.0
    } else if a < -700.0 {
        1.0
    } else {
        1.0 / (1.0 + a.exp())
    }
}

/// SIS tunneling current (A) at bias `v_volts`.
///
/// Odd in V by construction, and ohmic (I → V/R_n) far above the gap sum.
pub fn sis_current(
    v_volts: f64,
    gap1_uev: f64,
    gap2_uev: f64,
    gamma_uev: f64,
    temperature_k: f64,
    rn_ohm: f64,
) -> Result<f64> {
    if !(gap1_uev > 0.0) || !(gap2_uev > 0.0) {
        return Err(Error::InvalidInput("gaps must be positive".into()));
    }
    if gamma_uev < 0.0 || temperature_k < 0.0 || !(rn_ohm > 0.0) {
        return Err(Error::InvalidInput(
            "gamma and temperature must be non-negative, resistance positive".into(),
        ));
    }
    if !v_volts.is_finite() {
        return Err(Error::InvalidInput("bias voltage must be finite".into()));
    }
    if v_volts == 0.0 {
        return Ok(0.0);
    }
    // Enforce exact odd symmetry by folding to V > 0.
    let sign = v_volts.signum();
    let v = v_volts.abs();

    let d1 = gap1_uev * 1e-6;
    let d2 = gap2_uev * 1e-6;
    let g = gamma_uev * 1e-6;
    let kt = BOLTZMANN * temperature_k / ELEMENTARY_CHARGE;

    let limit = 10.0 * d1.max(d2).max(v);
    let edges = [-d1, d1, -v - d2, -v + d2];
    let mut breakpoints = edges.to_vec();
    breakpoints.extend_from_slice(&[0.0, -v]);

    let integrand = |e: f64| {
        dynes_dos(e, d1, g) * dynes_dos(e + v, d2, g) * (fermi(e, kt) - fermi(e + v, kt))
    };
    // Tight enough that the quadrature noise floor stays far below the
    // finite-difference steps taken while fitting.
    let tol = 1e-9 * v.max(d1 + d2);
    let window =
        integrate_with_breakpoints(&integrand, -limit, limit, &breakpoints, &edges, tol)?;
    Ok(sign * window / rn_ohm)
}

/// dI/dV (S) by central differences on [`sis_current`].
pub fn sis_conductance(
    v_volts: f64,
    gap1_uev: f64,
    gap2_uev: f64,
    gamma_uev: f64,
    temperature_k: f64,
    rn_ohm: f64,
    step_volts: f64,
) -> Result<f64> {
    if !(step_volts > 0.0) {
        return Err(Error::InvalidInput("derivative step must be positive".into()));
    }
    let hi = sis_current(v_volts + step_volts, gap1_uev, gap2_uev, gamma_uev, temperature_k, rn_ohm)?;
    let lo = sis_current(v_volts - step_volts, gap1_uev, gap2_uev, gamma_uev, temperature_k, rn_ohm)?;
    Ok((hi - lo) / (2.0 * step_volts))
}

/// Gap fit to an I-V or dI/dV trace, assuming a symmetric junction
/// (Δ1 = Δ2 = Δ).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynesFit {
    /// Superconducting gap (μeV).
    pub gap_uev: f64,
    /// Dynes broadening (μeV).
    pub gamma_uev: f64,
    /// Normal-state resistance (Ω).
    pub rn_ohm: f64,
    /// Mean measured sub-gap conductance relative to 1/R_n; lower values
    /// indicate a cleaner junction.
    pub subgap_conductance_ratio: f64,
    pub fit: FitResult,
}

/// Dynes lower bound keeps the DOS finite inside the fit (μeV).
const GAMMA_FLOOR_UEV: f64 = 1e-3;

/// Fit (Δ, γ, R_n) to a gap-edge trace at fixed temperature.
///
/// The trace must span the gap edge: the conductance peak near V = 2Δ/e is
/// used to seed Δ, and the high-bias tail seeds R_n.
pub fn fit_dynes(trace: &MeasurementTrace, temperature_k: f64) -> Result<DynesFit> {
    if !matches!(trace.kind, TraceKind::Iv | TraceKind::Didv) {
        return Err(Error::InvalidInput(format!(
            "Dynes fit needs an iv or didv trace, got {:?}",
            trace.kind
        )));
    }
    trace.check_fittable()?;
    let x = &trace.x;
    let y = &trace.y;

    // Conductance data for seeding: the trace itself, or dI/dV of an IV.
    let g_data: Vec<f64> = match trace.kind {
        TraceKind::Didv => y.clone(),
        _ => numeric_gradient(x, y),
    };

    // Seed Δ from the positive-bias conductance peak (V_peak ≈ 2Δ/e).
    let mut v_peak = 0.0;
    let mut g_peak = f64::NEG_INFINITY;
    for i in 0..x.len() {
        if x[i] > 0.0 && g_data[i] > g_peak {
            g_peak = g_data[i];
            v_peak = x[i];
        }
    }
    if !(v_peak > 0.0) {
        return Err(Error::InvalidInput(
            "trace does not cover positive bias across the gap edge".into(),
        ));
    }
    let gap0_uev = 0.5 * v_peak * 1e6;

    // Seed R_n from the outer 10% of points on each side.
    let tail = (x.len() / 10).max(2);
    let rn0 = match trace.kind {
        TraceKind::Didv => {
            let g_tail: f64 = g_data[..tail]
                .iter()
                .chain(g_data[x.len() - tail..].iter())
                .sum::<f64>()
                / (2 * tail) as f64;
            if g_tail > 0.0 {
                1.0 / g_tail
            } else {
                return Err(Error::InvalidInput("non-positive tail conductance".into()));
            }
        }
        _ => {
            let dv = x[x.len() - 1] - x[0];
            let di = y[x.len() - 1] - y[0];
            if di <= 0.0 {
                return Err(Error::InvalidInput("I-V trace has non-positive overall slope".into()));
            }
            dv / di
        }
    };

    // Differentiation step tied to the voltage grid, so the model is a fixed
    // functional of the data layout rather than of the evolving gap estimate.
    let model_step = didv_step_for_grid(x);

    let init = [gap0_uev, 1.0, rn0];
    let lower = [0.2 * gap0_uev, GAMMA_FLOOR_UEV, 0.1 * rn0];
    let upper = [5.0 * gap0_uev, 100.0, 10.0 * rn0];
    let names = ["gap_uev", "gamma_uev", "rn_ohm"];

    let kind = trace.kind;
    let model = move |v: f64, p: &[f64]| -> f64 {
        let out = match kind {
            TraceKind::Didv => sis_conductance(v, p[0], p[0], p[1], temperature_k, p[2], model_step),
            _ => sis_current(v, p[0], p[0], p[1], temperature_k, p[2]),
        };
        out.unwrap_or(f64::NAN)
    };

    // Differenced steps must clear the quadrature noise inside the model.
    let fit = lm_fit_with_step(model, x, y, &init, &lower, &upper, &names, 1e-3)?;
    let gap_uev = fit.param("gap_uev");
    let gamma_uev = fit.param("gamma_uev");
    let rn_ohm = fit.param("rn_ohm");

    // Junction-quality figure: measured sub-gap conductance vs normal state.
    let window = 0.8 * 2.0 * gap_uev * 1e-6;
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..x.len() {
        if x[i].abs() <= window {
            acc += g_data[i];
            count += 1;
        }
    }
    let subgap_conductance_ratio = if count > 0 {
        (acc / count as f64) * rn_ohm
    } else {
        f64::NAN
    };

    Ok(DynesFit {
        gap_uev,
        gamma_uev,
        rn_ohm,
        subgap_conductance_ratio,
        fit,
    })
}

/// Differentiation step used by the conductance model for a given voltage
/// grid: a quarter of the median grid spacing.
pub fn didv_step_for_grid(x: &[f64]) -> f64 {
    0.25 * median_step(x)
}

fn numeric_gradient(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    for i in 0..n {
        if i == 0 {
            g[i] = (y[1] - y[0]) / (x[1] - x[0]);
        } else if i == n - 1 {
            g[i] = (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
        } else {
            g[i] = (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]);
        }
    }
    g
}

fn median_step(x: &[f64]) -> f64 {
    let mut steps: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    steps[steps.len() / 2]
}
