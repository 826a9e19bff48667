//! Cooper-pair-box / transmon spectrum solver in the charge basis.
//!
//! The Hamiltonian is H = 4 E_C (n − n_g)² − (E_J/2) Σ (|n⟩⟨n+1| + h.c.),
//! truncated to charge states n = −N..+N. The matrix is symmetric
//! tridiagonal — diagonal 4 E_C (n − n_g)², off-diagonal −E_J/2 — so the
//! lowest levels come from Sturm bisection rather than a dense solver.
//! Energies are expressed as frequencies throughout (GHz, i.e. E/h).

mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation is doubled until f01 moves by less than this (GHz, 1 kHz).
const F01_TOL_GHZ: f64 = 1e-6;
/// Half-bandwidth cap; needing more charge states than this signals
/// pathological inputs.
const MAX_HALF_BANDWIDTH: usize = 512;
/// Default half-bandwidth of the charge basis.
pub const DEFAULT_TRUNCATION: usize = 20;

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

/// Circuit-level transmon Hamiltonian parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransmonParams {
    /// Josephson energy E_J/h (GHz).
    pub e_j_ghz: f64,
    /// Charging energy E_C/h (GHz).
    pub e_c_ghz: f64,
    /// Dimensionless offset charge.
    #[serde(default)]
    pub n_g: f64,
    /// Starting half-bandwidth N of the charge basis (states n = −N..+N).
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

impl TransmonParams {
    pub fn new(e_j_ghz: f64, e_c_ghz: f64) -> Self {
        Self {
            e_j_ghz,
            e_c_ghz,
            n_g: 0.0,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn with_ng(mut self, n_g: f64) -> Self {
        self.n_g = n_g;
        self
    }

    pub fn with_truncation(mut self, truncation: usize) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_c_ghz > 0.0) || !self.e_c_ghz.is_finite() {
            return Err(Error::InvalidInput(format!(
                "charging energy must be positive, got {} GHz",
                self.e_c_ghz
            )));
        }
        if self.e_j_ghz < 0.0 || !self.e_j_ghz.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Josephson energy must be non-negative, got {} GHz",
                self.e_j_ghz
            )));
        }
        if !self.n_g.is_finite() {
            return Err(Error::InvalidInput("offset charge must be finite".into()));
        }
        if self.truncation < 4 {
            return Err(Error::InvalidInput(format!(
                "charge-basis truncation must be at least 4, got {}",
                self.truncation
            )));
        }
        Ok(())
    }
}

/// Transition ladder of the transmon, ground-state referenced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Eigenfrequencies relative to the ground state (GHz); `levels_ghz[0] = 0`.
    pub levels_ghz: Vec<f64>,
    /// 0→1 transition frequency (GHz).
    pub f01_ghz: f64,
    /// 1→2 transition frequency (GHz).
    pub f12_ghz: f64,
    /// Anharmonicity f12 − f01 (GHz); negative in the transmon regime.
    pub alpha_ghz: f64,
    pub ej_over_ec: f64,
}

/// Two-junction SQUID loop parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SquidParams {
    /// Total Josephson energy of both junctions, E_JΣ/h (GHz).
    pub e_j_sum_ghz: f64,
    /// Junction asymmetry d ∈ [0, 1); 0 for equal-area junctions.
    #[serde(default)]
    pub asymmetry: f64,
    /// Applied flux in units of the flux quantum Φ0.
    #[serde(default)]
    pub flux_phi0: f64,
}

impl SquidParams {
    pub fn validate(&self) -> Result<()> {
        if self.e_j_sum_ghz < 0.0 || !self.e_j_sum_ghz.is_finite() {
            return Err(Error::InvalidInput(
                "SQUID total Josephson energy must be non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.asymmetry) {
            return Err(Error::InvalidInput(format!(
                "SQUID asymmetry must lie in [0, 1), got {}",
                self.asymmetry
            )));
        }
        if !self.flux_phi0.is_finite() {
            return Err(Error::InvalidInput("flux must be finite".into()));
        }
        Ok(())
    }
}

/// Effective Josephson energy of a SQUID loop at the given flux (GHz).
///
/// E_J(Φ) = E_JΣ √(cos²(πΦ) + d² sin²(πΦ)), the numerically stable form of
/// E_JΣ |cos(πΦ)| √(1 + d² tan²(πΦ)). Periodic in flux with period Φ0,
/// maximal at Φ = 0, and bounded below by d·E_JΣ.
pub fn squid_effective_ej(squid: &SquidParams) -> f64 {
    let phase = std::f64::consts::PI * squid.flux_phi0;
    let (s, c) = phase.sin_cos();
    let d = squid.asymmetry;
    squid.e_j_sum_ghz * (c * c + d * d * s * s).sqrt()
}

/// The spectrum is 1-periodic and even in the offset charge; fold it to
/// [0, 1/2] so those symmetries hold exactly at finite truncation.
fn reduced_ng(n_g: f64) -> f64 {
    (n_g - n_g.round()).abs()
}

/// Absolute eigenfrequencies (GHz) of the charge-basis Hamiltonian at fixed
/// half-bandwidth, lowest `count` of them.
fn absolute_levels(e_j: f64, e_c: f64, n_g: f64, half_bandwidth: usize, count: usize) -> Vec<f64> {
    let dim = 2 * half_bandwidth + 1;
    let mut diag = Vec::with_capacity(dim);
    for i in 0..dim {
        let n = i as f64 - half_bandwidth as f64;
        let dn = n - n_g;
        diag.push(4.0 * e_c * dn * dn);
    }
    let off = vec![-0.5 * e_j; dim - 1];
    tridiag::lowest_eigenvalues(&diag, &off, count)
}

/// Starting half-bandwidth: wide enough that the lowest levels are already
/// well inside the basis for the given E_J/E_C.
fn starting_bandwidth(e_j: f64, e_c: f64, truncation: usize) -> usize {
    let ratio = (e_j / e_c).max(0.0);
    let heuristic = (4.0 * ratio.sqrt()).ceil() as usize;
    truncation.max(DEFAULT_TRUNCATION).max(heuristic).min(MAX_HALF_BANDWIDTH)
}

/// Absolute levels converged in truncation: the half-bandwidth is doubled
/// until f01 shifts by less than 1 kHz, up to the cap.
fn converged_levels(params: &TransmonParams, count: usize) -> Result<Vec<f64>> {
    let n_g = reduced_ng(params.n_g);
    let mut n = starting_bandwidth(params.e_j_ghz, params.e_c_ghz, params.truncation);
    let mut prev = absolute_levels(params.e_j_ghz, params.e_c_ghz, n_g, n, count);
    loop {
        if n >= MAX_HALF_BANDWIDTH {
            return Err(Error::NoConvergence(format!(
                "f01 still moving at the charge-basis cap N = {MAX_HALF_BANDWIDTH} \
                 (E_J = {} GHz, E_C = {} GHz)",
                params.e_j_ghz, params.e_c_ghz
            )));
        }
        let next_n = (2 * n).min(MAX_HALF_BANDWIDTH);
        let next = absolute_levels(params.e_j_ghz, params.e_c_ghz, n_g, next_n, count);
        let drift = ((next[1] - next[0]) - (prev[1] - prev[0])).abs();
        if drift < F01_TOL_GHZ {
            return Ok(next);
        }
        log::debug!("truncation {n} -> {next_n}: f01 drift {drift:.3e} GHz");
        n = next_n;
        prev = next;
    }
}

/// Lowest `n_levels` transitions of the transmon.
///
/// Requires `n_levels >= 2` (the anharmonicity needs three levels) and
/// `n_levels <= 2 * truncation`.
pub fn spectrum(params: &TransmonParams, n_levels: usize) -> Result<SpectrumResult> {
    params.validate()?;
    if n_levels < 2 {
        return Err(Error::InvalidInput(
            "at least two levels are needed for f01 and f12".into(),
        ));
    }
    if n_levels > 2 * params.truncation {
        return Err(Error::InvalidInput(format!(
            "n_levels = {} exceeds 2 * truncation = {}",
            n_levels,
            2 * params.truncation
        )));
    }
    let absolute = converged_levels(params, n_levels + 1)?;
    let ground = absolute[0];
    let levels_ghz: Vec<f64> = absolute.iter().map(|e| e - ground).collect();
    let f01_ghz = levels_ghz[1];
    let f12_ghz = levels_ghz[2] - levels_ghz[1];
    Ok(SpectrumResult {
        f01_ghz,
        f12_ghz,
        alpha_ghz: f12_ghz - f01_ghz,
        ej_over_ec: params.e_j_ghz / params.e_c_ghz,
        levels_ghz,
    })
}

/// Charge dispersion of level `m`: |E_m(n_g = 1/2) − E_m(n_g = 0)| in GHz.
pub fn charge_dispersion(params: &TransmonParams, m: usize) -> Result<f64> {
    params.validate()?;
    if m + 1 > 2 * params.truncation {
        return Err(Error::InvalidInput(format!(
            "level index {m} exceeds the charge basis (truncation {})",
            params.truncation
        )));
    }
    let count = m + 2;
    let disp_at = |half_bandwidth: usize| -> f64 {
        let e0 = absolute_levels(params.e_j_ghz, params.e_c_ghz, 0.0, half_bandwidth, count);
        let e5 = absolute_levels(params.e_j_ghz, params.e_c_ghz, 0.5, half_bandwidth, count);
        (e5[m] - e0[m]).abs()
    };
    let mut n = starting_bandwidth(params.e_j_ghz, params.e_c_ghz, params.truncation);
    let mut prev = disp_at(n);
    loop {
        if n >= MAX_HALF_BANDWIDTH {
            return Err(Error::NoConvergence(
                "charge dispersion still moving at the charge-basis cap".into(),
            ));
        }
        let next_n = (2 * n).min(MAX_HALF_BANDWIDTH);
        let cur = disp_at(next_n);
        if (cur - prev).abs() < (1e-12_f64).max(1e-6 * cur.abs()) {
            return Ok(cur);
        }
        n = next_n;
        prev = cur;
    }
}

/// Evaluate (f01, alpha) at n_g = 0 for the inversion residuals.
fn f01_alpha(e_j: f64, e_c: f64) -> Result<(f64, f64)> {
    let params = TransmonParams::new(e_j, e_c);
    let s = spectrum(&params, 2)?;
    Ok((s.f01_ghz, s.alpha_ghz))
}

/// Lowest E_J/E_C accepted by the inversion; below this the inputs are not
/// in the transmon regime and the asymptotic Newton seed is unreliable.
pub const MIN_INVERSION_RATIO: f64 = 5.0;

/// Recover (E_J, E_C) from measured f01 and anharmonicity, at n_g = 0.
///
/// Two-dimensional Newton iteration with a finite-difference Jacobian,
/// seeded from the transmon asymptotics E_C⁰ = |α|,
/// E_J⁰ = (f01 + E_C⁰)²/(8 E_C⁰); falls back to nested bisection if Newton
/// stalls. The returned parameters reproduce the inputs to 1 kHz.
pub fn invert_spectroscopy(f01_ghz: f64, alpha_ghz: f64) -> Result<TransmonParams> {
    if !(f01_ghz > 0.0) || !f01_ghz.is_finite() {
        return Err(Error::InvalidInput(format!(
            "f01 must be positive, got {f01_ghz} GHz"
        )));
    }
    if !(alpha_ghz < 0.0) || !alpha_ghz.is_finite() {
        return Err(Error::InvalidInput(format!(
            "anharmonicity must be negative in the transmon regime, got {alpha_ghz} GHz"
        )));
    }
    if alpha_ghz.abs() >= f01_ghz {
        return Err(Error::InvalidInput(
            "|alpha| must be smaller than f01".into(),
        ));
    }

    let ec0 = -alpha_ghz;
    let ej0 = (f01_ghz + ec0).powi(2) / (8.0 * ec0);
    if let Some(params) = newton_invert(f01_ghz, alpha_ghz, ej0, ec0) {
        return Ok(params);
    }
    log::debug!("Newton inversion stalled for (f01 = {f01_ghz}, alpha = {alpha_ghz}); bisecting");
    bisect_invert(f01_ghz, alpha_ghz)
}

fn newton_invert(f01_t: f64, alpha_t: f64, ej0: f64, ec0: f64) -> Option<TransmonParams> {
    let mut e_j = ej0;
    let mut e_c = ec0;
    let eval = |ej: f64, ec: f64| -> Option<(f64, f64)> {
        if ej <= 0.0 || ec <= 0.0 {
            return None;
        }
        f01_alpha(ej, ec).ok()
    };
    let (mut f, mut a) = eval(e_j, e_c)?;
    for _ in 0..40 {
        let rf = f - f01_t;
        let ra = a - alpha_t;
        if rf.abs() < F01_TOL_GHZ && ra.abs() < F01_TOL_GHZ {
            let params = TransmonParams::new(e_j, e_c);
            if params.e_j_ghz / params.e_c_ghz < MIN_INVERSION_RATIO {
                return None;
            }
            return Some(params);
        }
        // Forward-difference Jacobian, relative step 1e-6.
        let hj = 1e-6 * e_j.abs();
        let hc = 1e-6 * e_c.abs();
        let (fj, aj) = eval(e_j + hj, e_c)?;
        let (fc, ac) = eval(e_j, e_c + hc)?;
        let j00 = (fj - f) / hj;
        let j01 = (fc - f) / hc;
        let j10 = (aj - a) / hj;
        let j11 = (ac - a) / hc;
        let det = j00 * j11 - j01 * j10;
        if det.abs() < 1e-300 || !det.is_finite() {
            return None;
        }
        let dj = (rf * j11 - ra * j01) / det;
        let dc = (ra * j00 - rf * j10) / det;

        // Backtracking line search on the residual norm.
        let norm0 = rf.hypot(ra);
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let ej_new = e_j - step * dj;
            let ec_new = e_c - step * dc;
            if let Some((fn_, an_)) = eval(ej_new, ec_new) {
                if (fn_ - f01_t).hypot(an_ - alpha_t) < norm0 {
                    e_j = ej_new;
                    e_c = ec_new;
                    f = fn_;
                    a = an_;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            return None;
        }
    }
    None
}

/// Nested bisection fallback: f01 is monotone increasing in E_J at fixed
/// E_C, and alpha decreases (grows in magnitude) with E_C at matched f01.
fn bisect_invert(f01_t: f64, alpha_t: f64) -> Result<TransmonParams> {
    let ej_for_ec = |e_c: f64| -> Result<f64> {
        let mut lo = MIN_INVERSION_RATIO * e_c;
        let f_lo = f01_alpha(lo, e_c)?.0;
        if f_lo > f01_t {
            return Err(Error::NoSolution(format!(
                "f01 = {f01_t} GHz unreachable above E_J/E_C = {MIN_INVERSION_RATIO} at E_C = {e_c} GHz"
            )));
        }
        let mut hi = lo;
        loop {
            hi *= 2.0;
            if hi / e_c > 1e6 {
                return Err(Error::NoSolution(
                    "f01 unreachable inside the E_J search box".into(),
                ));
            }
            if f01_alpha(hi, e_c)?.0 >= f01_t {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo) < 1e-12 * mid.max(1.0) {
                break;
            }
            if f01_alpha(mid, e_c)?.0 < f01_t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let residual = |e_c: f64| -> Result<(f64, f64)> {
        let e_j = ej_for_ec(e_c)?;
        let (_, a) = f01_alpha(e_j, e_c)?;
        Ok((a - alpha_t, e_j))
    };

    let mut ec_lo = 0.05 * alpha_t.abs();
    let mut ec_hi = 5.0 * alpha_t.abs();
    let (r_lo, _) = residual(ec_lo)?;
    let (r_hi, _) = residual(ec_hi)?;
    // alpha(E_C) is decreasing, so the residual goes from + to −.
    if r_lo < 0.0 || r_hi > 0.0 {
        return Err(Error::NoSolution(format!(
            "no (E_J, E_C) in the search box reproduces f01 = {f01_t} GHz, alpha = {alpha_t} GHz; \
             inputs are outside the transmon regime"
        )));
    }
    let mut e_j = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (ec_lo + ec_hi);
        let (r, ej) = residual(mid)?;
        e_j = ej;
        if r.abs() < F01_TOL_GHZ || (ec_hi - ec_lo) < 1e-14 * mid {
            let params = TransmonParams::new(ej, mid);
            let (f, a) = f01_alpha(ej, mid)?;
            if (f - f01_t).abs() < F01_TOL_GHZ && (a - alpha_t).abs() < 10.0 * F01_TOL_GHZ {
                return Ok(params);
            }
            break;
        }
        if r > 0.0 {
            ec_lo = mid;
        } else {
            ec_hi = mid;
        }
    }
    let _ = e_j;
    Err(Error::NoConvergence(format!(
        "inversion bisection failed for f01 = {f01_t} GHz, alpha = {alpha_t} GHz"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_ej_is_analytic() {
        // E_J = 0: levels are 4 E_C (n - n_g)^2.
        let p = TransmonParams::new(0.0, 0.289);
        let s = spectrum(&p, 3).unwrap();
        assert_relative_eq!(s.f01_ghz, 4.0 * 0.289, max_relative = 1e-12);
        // n = ±1 are degenerate at n_g = 0.
        assert!((s.levels_ghz[2] - s.levels_ghz[1]).abs() < 1e-9);
    }

    #[test]
    fn zero_ej_charge_degeneracy() {
        let p = TransmonParams::new(0.0, 0.289).with_ng(0.5);
        let s = spectrum(&p, 2).unwrap();
        assert!(s.f01_ghz.abs() < 1e-9, "f01 = {}", s.f01_ghz);
    }

    #[test]
    fn design_point_matches_dense_oracle_value() {
        // Frozen from an independent dense diagonalization at N = 60.
        let p = TransmonParams::new(11.92, 0.289);
        let s = spectrum(&p, 2).unwrap();
        assert_relative_eq!(s.f01_ghz, 4.9418763298157495, epsilon = 1e-9);
        assert_relative_eq!(s.alpha_ghz, -0.33886990243046355, epsilon = 1e-9);
        // Within 2% of the asymptote sqrt(8 EJ EC) - EC.
        let asym = (8.0f64 * 11.92 * 0.289).sqrt() - 0.289;
        assert!((s.f01_ghz - asym).abs() / s.f01_ghz < 0.02);
    }

    #[test]
    fn ng_periodicity_and_parity_are_exact() {
        let base = TransmonParams::new(5.0, 0.25);
        for ng in [0.1, 0.37, 0.5, 0.93] {
            let s0 = spectrum(&base.with_ng(ng), 3).unwrap();
            let s1 = spectrum(&base.with_ng(ng + 1.0), 3).unwrap();
            let s2 = spectrum(&base.with_ng(-ng), 3).unwrap();
            for k in 0..s0.levels_ghz.len() {
                assert_eq!(s0.levels_ghz[k], s1.levels_ghz[k], "periodicity at ng={ng}");
                assert_eq!(s0.levels_ghz[k], s2.levels_ghz[k], "parity at ng={ng}");
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(spectrum(&TransmonParams::new(5.0, 0.0), 2).is_err());
        assert!(spectrum(&TransmonParams::new(5.0, -0.1), 2).is_err());
        assert!(spectrum(&TransmonParams::new(-1.0, 0.2), 2).is_err());
        assert!(spectrum(&TransmonParams::new(5.0, 0.2).with_truncation(3), 2).is_err());
        // n_levels beyond the basis.
        assert!(spectrum(&TransmonParams::new(5.0, 0.2).with_truncation(4), 9).is_err());
    }

    #[test]
    fn dispersion_zero_ej_analytic() {
        // E_J = 0, m = 0: |4 E_C/4 - 0| = E_C.
        let p = TransmonParams::new(0.0, 0.289);
        let d = charge_dispersion(&p, 0).unwrap();
        assert_relative_eq!(d, 0.289, max_relative = 1e-10);
    }

    #[test]
    fn dispersion_oracle_value() {
        // Frozen from the dense oracle: E_J/E_C = 25 at E_C = 0.4, m = 1.
        let p = TransmonParams::new(10.0, 0.4);
        let d = charge_dispersion(&p, 1).unwrap();
        assert_relative_eq!(d, 2.099760323487576e-3, max_relative = 1e-6);
    }

    #[test]
    fn dispersion_decreases_with_ratio() {
        let e_c = 0.289;
        let mut prev = f64::INFINITY;
        for ratio in [10.0, 20.0, 40.0, 80.0] {
            let d = charge_dispersion(&TransmonParams::new(ratio * e_c, e_c), 0).unwrap();
            assert!(d < prev, "dispersion not decreasing at ratio {ratio}");
            prev = d;
        }
    }

    #[test]
    fn invert_table_rows() {
        // Published integers for these two rows are 21 and 32; exact
        // diagonalization lands within the ±20% cross-check window, with a
        // known positive offset (E_J/E_C = 22.91 and 32.29 respectively).
        let p = invert_spectroscopy(3.808, -0.414).unwrap();
        let ratio = p.e_j_ghz / p.e_c_ghz;
        assert_relative_eq!(ratio, 22.9092, max_relative = 1e-3);
        assert!((ratio - 21.0).abs() / 21.0 < 0.20);

        let p = invert_spectroscopy(4.978, -0.404).unwrap();
        let ratio = p.e_j_ghz / p.e_c_ghz;
        assert_relative_eq!(ratio, 32.2871, max_relative = 1e-3);
        assert!((ratio - 32.0).abs() / 32.0 < 0.20);
    }

    #[test]
    fn invert_round_trip() {
        for (f, a) in [(3.808, -0.414), (4.96, -0.34), (6.2, -0.25)] {
            let p = invert_spectroscopy(f, a).unwrap();
            let s = spectrum(&p, 2).unwrap();
            assert!((s.f01_ghz - f).abs() < 1e-6, "f01 mismatch: {}", s.f01_ghz);
            assert!((s.alpha_ghz - a).abs() < 1e-6, "alpha mismatch: {}", s.alpha_ghz);
        }
    }

    #[test]
    fn invert_rejects_invalid() {
        assert!(invert_spectroscopy(-1.0, -0.3).is_err());
        assert!(invert_spectroscopy(5.0, 0.3).is_err());
        assert!(invert_spectroscopy(5.0, -6.0).is_err());
    }

    #[test]
    fn squid_flux_tuning() {
        let sq = |flux: f64, d: f64| SquidParams {
            e_j_sum_ghz: 20.0,
            asymmetry: d,
            flux_phi0: flux,
        };
        assert_relative_eq!(squid_effective_ej(&sq(0.0, 0.0)), 20.0);
        assert!(squid_effective_ej(&sq(0.5, 0.0)).abs() < 1e-12);
        assert_relative_eq!(
            squid_effective_ej(&sq(0.25, 0.0)),
            20.0 / 2f64.sqrt(),
            max_relative = 1e-12
        );
        // Asymmetric loop floor d * E_JΣ.
        assert_relative_eq!(squid_effective_ej(&sq(0.5, 0.3)), 6.0, max_relative = 1e-12);
        // Periodic in flux.
        assert_relative_eq!(
            squid_effective_ej(&sq(0.13, 0.2)),
            squid_effective_ej(&sq(1.13, 0.2)),
            max_relative = 1e-12
        );
    }
}
