//! Participation-weighted loss accounting.
//!
//! Total loss is the participation-weighted sum over channels,
//! Γ_Q = Σ_i p_i tanδ_i, with Q = 1/Γ_Q and the junction-limited relaxation
//! time T1 = Q/(2π f01). The junction loss-tangent bound and the scaling
//! projection to small-junction transmons follow directly from the same sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One dielectric loss channel: an energy participation fraction paired with
/// a loss tangent. Per-nm surface participations must be pre-multiplied by an
/// effective layer thickness before ingestion; see [`surface_channel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossChannel {
    pub name: String,
    /// Dimensionless energy participation fraction in [0, 1].
    pub participation: f64,
    /// Dimensionless loss tangent, ≥ 0.
    pub tan_delta: f64,
}

impl LossChannel {
    pub fn new(name: impl Into<String>, participation: f64, tan_delta: f64) -> Self {
        Self {
            name: name.into(),
            participation,
            tan_delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.participation) {
            return Err(Error::InvalidInput(format!(
                "channel '{}': participation {} outside [0, 1]",
                self.name, self.participation
            )));
        }
        if self.tan_delta < 0.0 || !self.tan_delta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "channel '{}': loss tangent must be non-negative",
                self.name
            )));
        }
        Ok(())
    }
}

/// Convert a per-nm surface participation into a dimensionless channel by
/// multiplying an effective contamination-layer thickness. The thickness is
/// deliberately an explicit input: there is no defensible default.
pub fn surface_channel(
    name: impl Into<String>,
    participation_per_nm: f64,
    layer_thickness_nm: f64,
    tan_delta: f64,
) -> Result<LossChannel> {
    if participation_per_nm < 0.0 || layer_thickness_nm < 0.0 {
        return Err(Error::InvalidInput(
            "surface participation and layer thickness must be non-negative".into(),
        ));
    }
    let channel = LossChannel::new(name, participation_per_nm * layer_thickness_nm, tan_delta);
    channel.validate()?;
    Ok(channel)
}

/// A budget of loss channels with its derived figures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossBudget {
    pub channels: Vec<LossChannel>,
    /// Total loss Γ_Q = Σ p_i tanδ_i.
    pub gamma_q: f64,
    /// Quality factor 1/Γ_Q (infinite for an empty budget).
    pub q: f64,
    /// Qubit frequency used for the T1 limit (GHz).
    pub f01_ghz: f64,
    /// Loss-limited relaxation time Q/(2π f01) (μs).
    pub t1_limit_us: f64,
}

/// Total loss Γ_Q of a set of channels.
///
/// Rejects budgets whose participations sum above 1 (they would not be
/// energy fractions of one mode).
pub fn total_loss(channels: &[LossChannel]) -> Result<f64> {
    let mut p_sum = 0.0;
    let mut gamma = 0.0;
    for ch in channels {
        ch.validate()?;
        p_sum += ch.participation;
        gamma += ch.participation * ch.tan_delta;
    }
    if p_sum > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "channel participations sum to {p_sum}, above 1"
        )));
    }
    Ok(gamma)
}

/// Assemble a budget: total loss plus the derived Q and T1 limit at f01.
pub fn build_budget(channels: Vec<LossChannel>, f01_ghz: f64) -> Result<LossBudget> {
    if !(f01_ghz > 0.0) {
        return Err(Error::InvalidInput("f01 must be positive".into()));
    }
    let gamma_q = total_loss(&channels)?;
    let q = if gamma_q > 0.0 { 1.0 / gamma_q } else { f64::INFINITY };
    let t1_limit_us = t1_from_q(f01_ghz, q)?;
    Ok(LossBudget {
        channels,
        gamma_q,
        q,
        f01_ghz,
        t1_limit_us,
    })
}

/// Quality factor Q = 2π f01 T1 (f01 in GHz, T1 in μs).
pub fn q_from_t1(f01_ghz: f64, t1_us: f64) -> Result<f64> {
    if !(f01_ghz > 0.0) || t1_us < 0.0 {
        return Err(Error::InvalidInput(
            "f01 must be positive and T1 non-negative".into(),
        ));
    }
    Ok(2.0 * std::f64::consts::PI * f01_ghz * 1e9 * t1_us * 1e-6)
}

/// Relaxation time T1 = Q/(2π f01) (μs); exact inverse of [`q_from_t1`].
pub fn t1_from_q(f01_ghz: f64, q: f64) -> Result<f64> {
    if !(f01_ghz > 0.0) || q < 0.0 {
        return Err(Error::InvalidInput(
            "f01 must be positive and Q non-negative".into(),
        ));
    }
    Ok(q / (2.0 * std::f64::consts::PI * f01_ghz * 1e9) * 1e6)
}

/// Upper bound on the junction loss tangent assuming all loss is junction
/// loss: tanδ_JJ ≤ (1/Q)/p_JJ.
pub fn junction_loss_bound(q: f64, p_jj: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidInput("Q must be positive".into()));
    }
    if !(p_jj > 0.0 && p_jj <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "junction participation must lie in (0, 1], got {p_jj}"
        )));
    }
    Ok(1.0 / q / p_jj)
}

/// Caveat attached to every scaling projection.
pub const SCALING_CAVEAT: &str = "assumes the large- and small-junction devices share the same \
oxide thickness and junction loss tangent; oxidation conditions differ in practice";

/// Junction-limited T1 projection for a small-junction device.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingProjection {
    /// Measured mean T1 of the large-junction device (μs).
    pub met_mean_t1_us: f64,
    /// Participation ratio p_met / p_conv applied.
    pub participation_ratio: f64,
    /// Projected junction-limited T1 (ms).
    pub projected_t1_ms: f64,
    /// Assumption under which the projection holds.
    pub caveat: String,
}

/// Scale a measured T1 by an explicit participation ratio.
pub fn scale_by_ratio(met_mean_t1_us: f64, ratio: f64) -> Result<ScalingProjection> {
    if !(met_mean_t1_us > 0.0) || !(ratio > 0.0) {
        return Err(Error::InvalidInput(
            "T1 and participation ratio must be positive".into(),
        ));
    }
    Ok(ScalingProjection {
        met_mean_t1_us,
        participation_ratio: ratio,
        projected_t1_ms: met_mean_t1_us * ratio * 1e-3,
        caveat: SCALING_CAVEAT.to_string(),
    })
}

/// Junction-limited T1 for a conventional device with participation `p_conv`,
/// scaled from a MET measurement at participation `p_met`.
pub fn scale_to_conventional(
    met_mean_t1_us: f64,
    p_met: f64,
    p_conv: f64,
) -> Result<ScalingProjection> {
    if !(p_conv > 0.0) {
        return Err(Error::InvalidInput("conventional participation must be positive".into()));
    }
    if p_conv > p_met {
        return Err(Error::InvalidInput(
            "conventional participation must not exceed the MET participation".into(),
        ));
    }
    scale_by_ratio(met_mean_t1_us, p_met / p_conv)
}

/// Fractional reduction of one participation relative to another
/// (e.g. substrate-vacuum participation of a MET vs a conventional design).
pub fn participation_reduction(p_met: f64, p_conv: f64) -> Result<f64> {
    if !(p_conv > 0.0) || p_met < 0.0 {
        return Err(Error::InvalidInput("participations must be positive".into()));
    }
    Ok(1.0 - p_met / p_conv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn total_loss_single_channel() {
        let g = total_loss(&[LossChannel::new("jj", 0.93, 5e-7)]).unwrap();
        assert_relative_eq!(g, 4.65e-7, max_relative = 1e-12);
    }

    #[test]
    fn total_loss_empty_is_zero() {
        assert_eq!(total_loss(&[]).unwrap(), 0.0);
    }

    #[test]
    fn total_loss_rejects_oversubscribed() {
        let chans = vec![
            LossChannel::new("a", 0.7, 1e-6),
            LossChannel::new("b", 0.5, 1e-6),
        ];
        assert!(total_loss(&chans).is_err());
        assert!(total_loss(&[LossChannel::new("bad", -0.1, 1e-6)]).is_err());
        assert!(total_loss(&[LossChannel::new("bad", 0.1, -1e-6)]).is_err());
    }

    #[test]
    fn substrate_vacuum_comparison() {
        // Per-nm participations with the same effective layer and loss
        // tangent: the contribution ratio is 3.5/5.0 = 0.70.
        let met = surface_channel("sv-met", 3.5e-5, 3.0, 2e-3).unwrap();
        let conv = surface_channel("sv-conv", 5.0e-5, 3.0, 2e-3).unwrap();
        let ratio = total_loss(&[met]).unwrap() / total_loss(&[conv]).unwrap();
        assert_relative_eq!(ratio, 0.70, max_relative = 1e-12);
        assert_relative_eq!(
            participation_reduction(3.5e-5, 5.0e-5).unwrap(),
            0.30,
            max_relative = 1e-12
        );
    }

    #[test]
    fn q_reference_points() {
        let q = q_from_t1(3.808, 89.9).unwrap();
        assert_relative_eq!(q, 2.1509806315116137e6, max_relative = 1e-12);
        assert!((q / 1e6 - 2.2).abs() <= 0.05);
        assert_eq!(q_from_t1(5.0, 0.0).unwrap(), 0.0);
        let q = q_from_t1(4.610, 16.1).unwrap();
        assert!((q / 1e6 - 0.47).abs() <= 0.005);
        assert!(q_from_t1(0.0, 10.0).is_err());
    }

    #[test]
    fn q_t1_round_trip() {
        for (f, t1) in [(3.808, 89.9), (4.978, 34.4), (5.0, 0.013)] {
            let q = q_from_t1(f, t1).unwrap();
            assert_relative_eq!(t1_from_q(f, q).unwrap(), t1, max_relative = 1e-14);
        }
    }

    #[test]
    fn junction_bound_reference_points() {
        let b = junction_loss_bound(2.2e6, 0.93).unwrap();
        assert!((b - 4.9e-7).abs() < 0.02e-7, "bound {b}");
        assert_relative_eq!(junction_loss_bound(1e6, 1.0).unwrap(), 1e-6, max_relative = 1e-12);
        let b = junction_loss_bound(1.0e6, 0.93).unwrap();
        assert!((b - 1.08e-6).abs() < 0.01e-6);
        assert!(junction_loss_bound(1e6, 0.0).is_err());
        assert!(junction_loss_bound(0.0, 0.9).is_err());
    }

    #[test]
    fn junction_bound_dominates_synthetic_budgets() {
        // With non-junction channels present, attributing all loss to the
        // junction always over-estimates its tangent.
        let tan_jj = 4e-7;
        let channels = vec![
            LossChannel::new("jj", 0.93, tan_jj),
            LossChannel::new("sv", 0.05, 2e-6),
            LossChannel::new("ma", 0.02, 1e-6),
        ];
        let gamma = total_loss(&channels).unwrap();
        let bound = junction_loss_bound(1.0 / gamma, 0.93).unwrap();
        assert!(bound >= tan_jj);
    }

    #[test]
    fn scaling_projection_reference_points() {
        let p = scale_by_ratio(89.9, 46.0).unwrap();
        assert!((p.projected_t1_ms - 4.135).abs() < 0.01);
        let p = scale_by_ratio(89.9, 1.0).unwrap();
        assert_relative_eq!(p.projected_t1_ms, 89.9e-3, max_relative = 1e-12);
        let p = scale_to_conventional(89.9, 0.93, 0.02).unwrap();
        assert_relative_eq!(p.participation_ratio, 46.5, max_relative = 1e-12);
        assert!((p.projected_t1_ms - 4.18).abs() < 0.01);
        assert!(!p.caveat.is_empty());
        assert!(scale_to_conventional(89.9, 0.93, 0.0).is_err());
        assert!(scale_to_conventional(89.9, 0.02, 0.93).is_err());
    }

    #[test]
    fn budget_assembly() {
        let b = build_budget(vec![LossChannel::new("jj", 0.93, 5e-7)], 4.96).unwrap();
        assert_relative_eq!(b.gamma_q, 4.65e-7, max_relative = 1e-12);
        assert_relative_eq!(b.q, 1.0 / 4.65e-7, max_relative = 1e-12);
        assert_relative_eq!(
            b.t1_limit_us,
            t1_from_q(4.96, b.q).unwrap(),
            max_relative = 1e-12
        );
    }
}
