//! Forward and inverse merged-element transmon design.
//!
//! Forward chain: junction geometry → parallel-plate capacitance → E_C,
//! tunnel resistance and gap → critical current (Ambegaokar-Baratoff) → E_J,
//! then the charge-basis spectrum for f01 and anharmonicity. The inverse
//! starts from spectroscopy targets and returns the junction area and room-
//! temperature resistance that realize them.
//!
//! Display units follow lab conventions: fF, nA, GHz, μeV. Conversions to SI
//! happen inside the formulas.

use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, FLUX_QUANTUM, PLANCK, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::qubit::{self, TransmonParams};

/// Physical description of a MET tunnel junction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JunctionSpec {
    /// Junction area (μm²).
    pub area_um2: f64,
    /// Tunnel-barrier oxide thickness (nm).
    pub oxide_nm: f64,
    /// Relative dielectric constant of the barrier.
    pub eps_r: f64,
    /// Room-temperature tunnel resistance (Ω).
    pub rn_room_ohm: f64,
    /// Multiplicative room→cryogenic resistance conversion.
    #[serde(default = "default_cold_factor")]
    pub cold_factor: f64,
    /// Superconducting gap Δ (μeV).
    pub gap_uev: f64,
}

fn default_cold_factor() -> f64 {
    1.0
}

impl JunctionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.area_um2 < 0.0 || !self.area_um2.is_finite() {
            return Err(Error::InvalidInput("junction area must be non-negative".into()));
        }
        if !(self.oxide_nm > 0.0) {
            return Err(Error::InvalidInput("oxide thickness must be positive".into()));
        }
        if self.eps_r < 1.0 {
            return Err(Error::InvalidInput("dielectric constant must be at least 1".into()));
        }
        if !(self.rn_room_ohm > 0.0) {
            return Err(Error::InvalidInput("tunnel resistance must be positive".into()));
        }
        if !(self.cold_factor > 0.0) {
            return Err(Error::InvalidInput("cold factor must be positive".into()));
        }
        if !(self.gap_uev > 0.0) {
            return Err(Error::InvalidInput("superconducting gap must be positive".into()));
        }
        Ok(())
    }
}

/// Assembled device-level predictions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceDesign {
    /// Junction capacitance (fF).
    pub c_jj_ff: f64,
    /// Antenna/coplanar stray capacitance (fF).
    pub c_stray_ff: f64,
    /// Total shunt capacitance (fF).
    pub c_total_ff: f64,
    /// Critical current (nA).
    pub i_c_na: f64,
    /// Josephson energy E_J/h (GHz).
    pub e_j_ghz: f64,
    /// Charging energy E_C/h (GHz).
    pub e_c_ghz: f64,
    /// 0→1 transition frequency (GHz).
    pub f01_ghz: f64,
    /// Anharmonicity f12 − f01 (GHz).
    pub alpha_ghz: f64,
    pub ej_over_ec: f64,
    /// Junction participation C_JJ / C_total.
    pub p_jj: f64,
}

/// Parallel-plate capacitance ε0 εr A / d (fF).
pub fn plate_capacitance(area_um2: f64, thickness_nm: f64, eps_r: f64) -> Result<f64> {
    if !(thickness_nm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "plate thickness must be positive, got {thickness_nm} nm"
        )));
    }
    if area_um2 < 0.0 || eps_r < 0.0 {
        return Err(Error::InvalidInput("area and eps_r must be non-negative".into()));
    }
    let c_farad = VACUUM_PERMITTIVITY * eps_r * (area_um2 * 1e-12) / (thickness_nm * 1e-9);
    Ok(c_farad * 1e15)
}

/// Charging energy E_C/h = e²/(2 C h) (GHz) for a total capacitance in fF.
pub fn charging_energy(c_total_ff: f64) -> Result<f64> {
    if !(c_total_ff > 0.0) {
        return Err(Error::InvalidInput(format!(
            "total capacitance must be positive, got {c_total_ff} fF"
        )));
    }
    let c = c_total_ff * 1e-15;
    Ok(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * c * PLANCK) / 1e9)
}

/// Total capacitance (fF) that produces the given charging energy (GHz).
pub fn capacitance_for_charging_energy(e_c_ghz: f64) -> Result<f64> {
    if !(e_c_ghz > 0.0) {
        return Err(Error::InvalidInput("charging energy must be positive".into()));
    }
    let c = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * e_c_ghz * 1e9 * PLANCK);
    Ok(c * 1e15)
}

/// Ambegaokar-Baratoff critical current I_c = πΔ/(2e R_cold) (nA), with
/// R_cold = cold_factor · R_room.
pub fn critical_current(gap_uev: f64, rn_room_ohm: f64, cold_factor: f64) -> Result<f64> {
    if !(gap_uev > 0.0) || !(rn_room_ohm > 0.0) || !(cold_factor > 0.0) {
        return Err(Error::InvalidInput(
            "gap, resistance and cold factor must all be positive".into(),
        ));
    }
    let gap_volts = gap_uev * 1e-6;
    let r_cold = cold_factor * rn_room_ohm;
    Ok(std::f64::consts::PI * gap_volts / (2.0 * r_cold) * 1e9)
}

/// Room-temperature resistance (Ω) targeting the given critical current.
pub fn resistance_for_critical_current(gap_uev: f64, i_c_na: f64, cold_factor: f64) -> Result<f64> {
    if !(gap_uev > 0.0) || !(i_c_na > 0.0) || !(cold_factor > 0.0) {
        return Err(Error::InvalidInput(
            "gap, current and cold factor must all be positive".into(),
        ));
    }
    let gap_volts = gap_uev * 1e-6;
    let r_cold = std::f64::consts::PI * gap_volts / (2.0 * i_c_na * 1e-9);
    Ok(r_cold / cold_factor)
}

/// Josephson energy E_J/h = Φ0 I_c / (2π h) = I_c/(4πe) (GHz).
pub fn josephson_energy(i_c_na: f64) -> Result<f64> {
    if i_c_na < 0.0 || !i_c_na.is_finite() {
        return Err(Error::InvalidInput(format!(
            "critical current must be non-negative, got {i_c_na} nA"
        )));
    }
    Ok(i_c_na * 1e-9 / (4.0 * std::f64::consts::PI * ELEMENTARY_CHARGE) / 1e9)
}

/// Critical current (nA) for a given Josephson energy (GHz).
pub fn critical_current_for_ej(e_j_ghz: f64) -> Result<f64> {
    if e_j_ghz < 0.0 {
        return Err(Error::InvalidInput("Josephson energy must be non-negative".into()));
    }
    Ok(2.0 * std::f64::consts::PI * e_j_ghz * 1e9 * PLANCK / FLUX_QUANTUM * 1e9)
}

/// Junction participation ratio C_JJ / C_total.
pub fn participation(c_jj_ff: f64, c_total_ff: f64) -> Result<f64> {
    if !(c_total_ff > 0.0) {
        return Err(Error::InvalidInput("total capacitance must be positive".into()));
    }
    if c_jj_ff < 0.0 || c_jj_ff > c_total_ff {
        return Err(Error::InvalidInput(format!(
            "junction capacitance {c_jj_ff} fF outside [0, {c_total_ff}] fF"
        )));
    }
    Ok(c_jj_ff / c_total_ff)
}

/// Full forward chain from a junction spec to device predictions.
///
/// A zero junction area is rejected here: the resulting device would have no
/// junction capacitance and the spectrum would be meaningless.
pub fn design_forward(spec: &JunctionSpec, c_stray_ff: f64) -> Result<DeviceDesign> {
    spec.validate()?;
    if !(spec.area_um2 > 0.0) {
        return Err(Error::InvalidInput("junction area must be positive for a device design".into()));
    }
    if c_stray_ff < 0.0 {
        return Err(Error::InvalidInput("stray capacitance must be non-negative".into()));
    }
    let i_c_na = critical_current(spec.gap_uev, spec.rn_room_ohm, spec.cold_factor)?;
    design_forward_with_ic(spec, c_stray_ff, i_c_na)
}

/// Forward chain with the critical current pinned directly, bypassing the
/// resistance → current conversion (used when targeting a known I_c).
pub fn design_forward_with_ic(
    spec: &JunctionSpec,
    c_stray_ff: f64,
    i_c_na: f64,
) -> Result<DeviceDesign> {
    spec.validate()?;
    if !(spec.area_um2 > 0.0) {
        return Err(Error::InvalidInput("junction area must be positive for a device design".into()));
    }
    let c_jj_ff = plate_capacitance(spec.area_um2, spec.oxide_nm, spec.eps_r)?;
    let c_total_ff = c_jj_ff + c_stray_ff;
    let e_c_ghz = charging_energy(c_total_ff)?;
    let e_j_ghz = josephson_energy(i_c_na)?;
    let s = qubit::spectrum(&TransmonParams::new(e_j_ghz, e_c_ghz), 2)?;
    Ok(DeviceDesign {
        c_jj_ff,
        c_stray_ff,
        c_total_ff,
        i_c_na,
        e_j_ghz,
        e_c_ghz,
        f01_ghz: s.f01_ghz,
        alpha_ghz: s.alpha_ghz,
        ej_over_ec: s.ej_over_ec,
        p_jj: participation(c_jj_ff, c_total_ff)?,
    })
}

/// Lowest E_J/E_C considered a designable transmon; spectroscopy targets
/// that invert below this ratio are rejected as outside the regime.
pub const MIN_DESIGN_RATIO: f64 = 10.0;

/// Invert spectroscopy targets into a junction spec.
///
/// Runs the spectrum inversion, converts E_C to a total capacitance, strips
/// the stray contribution, and sizes the junction area and room-temperature
/// resistance. `design_forward` on the result reproduces the targets to
/// better than 1 MHz.
pub fn design_inverse(
    target_f01_ghz: f64,
    target_alpha_ghz: f64,
    oxide_nm: f64,
    eps_r: f64,
    c_stray_ff: f64,
    gap_uev: f64,
) -> Result<JunctionSpec> {
    let params = qubit::invert_spectroscopy(target_f01_ghz, target_alpha_ghz)?;
    let ratio = params.e_j_ghz / params.e_c_ghz;
    if ratio < MIN_DESIGN_RATIO {
        return Err(Error::NoSolution(format!(
            "targets invert to E_J/E_C = {ratio:.1}, below the transmon design floor of {MIN_DESIGN_RATIO}"
        )));
    }
    let c_total_ff = capacitance_for_charging_energy(params.e_c_ghz)?;
    let c_jj_ff = c_total_ff - c_stray_ff;
    if !(c_jj_ff > 0.0) {
        return Err(Error::NoSolution(format!(
            "stray capacitance {c_stray_ff} fF exceeds the required total of {c_total_ff:.2} fF"
        )));
    }
    let unit_c = plate_capacitance(1.0, oxide_nm, eps_r)?;
    let area_um2 = c_jj_ff / unit_c;
    let i_c_na = critical_current_for_ej(params.e_j_ghz)?;
    let rn_room_ohm = resistance_for_critical_current(gap_uev, i_c_na, 1.0)?;
    Ok(JunctionSpec {
        area_um2,
        oxide_nm,
        eps_r,
        rn_room_ohm,
        cold_factor: 1.0,
        gap_uev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plate_capacitance_reference_points() {
        // 1.4 μm², 2 nm, εr 10 → ~62 fF; frozen constant evaluations.
        assert_relative_eq!(
            plate_capacitance(1.4, 2.0, 10.0).unwrap(),
            61.9793146896,
            max_relative = 1e-10
        );
        assert_eq!(plate_capacitance(0.0, 2.0, 10.0).unwrap(), 0.0);
        assert_relative_eq!(
            plate_capacitance(2.4, 2.0, 10.0).unwrap(),
            106.2502537536,
            max_relative = 1e-10
        );
        assert!(plate_capacitance(1.0, 0.0, 10.0).is_err());
        assert!(plate_capacitance(1.0, -2.0, 10.0).is_err());
    }

    #[test]
    fn charging_energy_reference_points() {
        assert_relative_eq!(
            charging_energy(67.0).unwrap(),
            0.28910790036804657,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            charging_energy(60.0).unwrap(),
            0.3228371554109854,
            max_relative = 1e-12
        );
        // Monotone decreasing toward zero for huge capacitance.
        assert!(charging_energy(1e15).unwrap() < 1e-9);
        assert!(charging_energy(0.0).is_err());
        assert!(charging_energy(-1.0).is_err());
    }

    #[test]
    fn critical_current_reference_points() {
        assert_relative_eq!(
            critical_current(191.0, 9000.0, 1.0).unwrap(),
            33.335788713091695,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            critical_current(200.0, 13090.0, 1.0).unwrap(),
            23.999943877691315,
            max_relative = 1e-12
        );
        // Open junction limit.
        assert!(critical_current(200.0, 1e18, 1.0).unwrap() < 1e-6);
        assert!(critical_current(0.0, 1e4, 1.0).is_err());
        assert!(critical_current(200.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn ambegaokar_baratoff_identity() {
        // I_c * R_cold = πΔ/2e, algebraically.
        for (gap, rn, cf) in [(200.0, 13090.0, 1.0), (191.0, 9000.0, 1.2), (180.0, 6600.0, 1.15)] {
            let ic = critical_current(gap, rn, cf).unwrap();
            let lhs = ic * 1e-9 * (cf * rn);
            let rhs = std::f64::consts::PI * gap * 1e-6 / 2.0;
            assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        }
    }

    #[test]
    fn josephson_energy_reference_points() {
        assert_relative_eq!(
            josephson_energy(24.0).unwrap(),
            11.920404258640213,
            max_relative = 1e-12
        );
        assert_eq!(josephson_energy(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            josephson_energy(48.0).unwrap(),
            23.840808517280426,
            max_relative = 1e-12
        );
        assert!(josephson_energy(-1.0).is_err());
    }

    #[test]
    fn participation_reference_points() {
        let p = participation(61.9793146896, 66.9793146896).unwrap();
        assert_relative_eq!(p, 0.9253500872146672, max_relative = 1e-12);
        assert!((p - 0.93).abs() < 0.01);
        assert_eq!(participation(0.0, 67.0).unwrap(), 0.0);
        // Area-scaled conventional junction: 62 * (0.03/1.4) = 1.33 fF in 60 fF.
        let p = participation(61.9793146896 * (0.03 / 1.4), 60.0).unwrap();
        assert!((p - 0.022).abs() < 0.001);
        assert!(participation(10.0, 5.0).is_err());
        assert!(participation(-1.0, 5.0).is_err());
    }

    fn met_spec() -> JunctionSpec {
        JunctionSpec {
            area_um2: 1.4,
            oxide_nm: 2.0,
            eps_r: 10.0,
            rn_room_ohm: 13089.96938995747, // targets 24 nA at 200 μeV
            cold_factor: 1.0,
            gap_uev: 200.0,
        }
    }

    #[test]
    fn forward_design_met_target() {
        let d = design_forward_with_ic(&met_spec(), 5.0, 24.0).unwrap();
        assert_relative_eq!(d.c_total_ff, 66.9793146896, max_relative = 1e-10);
        assert!((d.ej_over_ec - 41.21894969257218).abs() < 1e-6);
        // Frozen spectrum values from the dense oracle.
        assert_relative_eq!(d.f01_ghz, 4.943538818860879, epsilon = 1e-8);
        assert_relative_eq!(d.alpha_ghz, -0.33912741932392176, epsilon = 1e-8);
        assert_relative_eq!(d.p_jj, 0.9253500872146672, max_relative = 1e-10);
    }

    #[test]
    fn forward_design_larger_junction() {
        let mut spec = met_spec();
        spec.area_um2 = 1.9;
        let d = design_forward_with_ic(&spec, 5.0, 24.0).unwrap();
        assert_relative_eq!(d.c_jj_ff, 84.1147842216, max_relative = 1e-10);
        let base = design_forward_with_ic(&met_spec(), 5.0, 24.0).unwrap();
        assert!(d.e_c_ghz < base.e_c_ghz);
        assert!(d.ej_over_ec > base.ej_over_ec);
        // Larger area → smaller |anharmonicity|.
        assert!(d.alpha_ghz.abs() < base.alpha_ghz.abs());
        assert_relative_eq!(d.f01_ghz, 4.3235205247653195, epsilon = 1e-8);
    }

    #[test]
    fn forward_design_rejects_zero_area() {
        let mut spec = met_spec();
        spec.area_um2 = 0.0;
        assert!(design_forward(&spec, 5.0).is_err());
    }

    #[test]
    fn forward_uses_resistance_chain() {
        let d = design_forward(&met_spec(), 5.0).unwrap();
        assert_relative_eq!(d.i_c_na, 24.0, max_relative = 1e-10);
    }

    #[test]
    fn inverse_design_recovers_forward() {
        let spec = met_spec();
        let d = design_forward(&spec, 5.0).unwrap();
        let rec = design_inverse(d.f01_ghz, d.alpha_ghz, 2.0, 10.0, 5.0, 200.0).unwrap();
        assert_relative_eq!(rec.area_um2, spec.area_um2, max_relative = 1e-3);
        assert_relative_eq!(rec.rn_room_ohm, spec.rn_room_ohm, max_relative = 1e-3);
        // And forward on the recovered spec reproduces the targets to 1 MHz.
        let d2 = design_forward(&rec, 5.0).unwrap();
        assert!((d2.f01_ghz - d.f01_ghz).abs() < 1e-3);
        assert!((d2.alpha_ghz - d.alpha_ghz).abs() < 1e-3);
    }

    #[test]
    fn inverse_design_asymptotic_target() {
        // (4.96 GHz, -0.289 GHz): exact inversion gives E_C = 0.2529 GHz,
        // i.e. a somewhat larger junction than the asymptotic E_C = |α|
        // estimate of 1.4 μm² would suggest. Frozen oracle values.
        let spec = design_inverse(4.96, -0.289, 2.0, 10.0, 5.0, 200.0).unwrap();
        assert_relative_eq!(spec.area_um2, 1.616853187, max_relative = 1e-4);
        assert_relative_eq!(spec.rn_room_ohm, 11556.3933, max_relative = 1e-4);
        let d = design_forward(&spec, 5.0).unwrap();
        assert!((d.f01_ghz - 4.96).abs() < 1e-3);
        assert!((d.alpha_ghz + 0.289).abs() < 1e-3);
    }

    #[test]
    fn inverse_design_rejects_outside_regime() {
        // α = -2 GHz at f01 = 5 GHz inverts to E_J/E_C ≈ 8.4, below the
        // design floor.
        assert!(design_inverse(5.0, -2.0, 2.0, 10.0, 5.0, 200.0).is_err());
    }
}
