//! Decay-curve models and device-level summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::lm::{lm_fit, FitResult};
use crate::loss;
use crate::parallel;
use crate::qubit;
use crate::trace::{MeasurementTrace, TraceKind};

/// P1(t) = A + B exp(−t/τ); parameters [A, B, τ].
pub fn exp_decay_model(t: f64, p: &[f64]) -> f64 {
    p[0] + p[1] * (-t / p[2]).exp()
}

/// P1(t) = A + B exp[−(t/τ)ⁿ]; parameters [A, B, τ, n]. Identical to
/// [`exp_decay_model`] at n = 1.
pub fn stretched_exp_model(t: f64, p: &[f64]) -> f64 {
    p[0] + p[1] * (-(t / p[2]).powf(p[3])).exp()
}

/// Baseline/amplitude/time-constant seed shared by the decay fits.
/// Returns None when the trace has no usable amplitude.
fn decay_seed(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = y.len();
    let tail = (n / 10).max(2).min(n - 1);
    let baseline = y[n - tail..].iter().sum::<f64>() / tail as f64;
    let amplitude = y[0] - baseline;
    let y_lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (y_hi - y_lo).abs() <= 1e-12 * y_hi.abs().max(1.0) || amplitude == 0.0 {
        return None;
    }
    // First crossing of 1/e of the initial amplitude.
    let mut tau = (x[n - 1] - x[0]) / 3.0;
    for i in 0..n {
        if (y[i] - baseline) / amplitude <= (-1.0f64).exp() {
            if x[i] > x[0] {
                tau = x[i] - x[0];
            }
            break;
        }
    }
    Some((baseline, amplitude, tau))
}

/// Exponential T1 fit of a decay trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct T1Fit {
    /// Relaxation time (μs).
    pub t1_us: f64,
    pub baseline: f64,
    pub amplitude: f64,
    pub fit: FitResult,
}

/// Fit P1(t) = A + B exp(−t/T1) to a `t1_decay` trace (x in seconds).
pub fn fit_t1(trace: &MeasurementTrace) -> Result<T1Fit> {
    if trace.kind != TraceKind::T1Decay {
        return Err(Error::InvalidInput(format!(
            "T1 fit needs a t1_decay trace, got {:?}",
            trace.kind
        )));
    }
    trace.check_fittable()?;
    let (a0, b0, tau0) = decay_seed(&trace.x, &trace.y).ok_or_else(|| {
        Error::NoSolution("trace is constant: decay amplitude and T1 are unidentifiable".into())
    })?;
    let span = trace.x[trace.x.len() - 1] - trace.x[0];
    let fit = lm_fit(
        exp_decay_model,
        &trace.x,
        &trace.y,
        &[a0, b0, tau0],
        &[f64::NEG_INFINITY, f64::NEG_INFINITY, 1e-6 * span],
        &[f64::INFINITY, f64::INFINITY, 1e4 * span],
        &["baseline", "amplitude", "tau_s"],
    )?;
    Ok(T1Fit {
        t1_us: fit.param("tau_s") * 1e6,
        baseline: fit.param("baseline"),
        amplitude: fit.param("amplitude"),
        fit,
    })
}

/// Fit a batch of T1 traces; order follows the input. Runs in parallel with
/// the `parallel` feature.
pub fn fit_t1_batch(traces: &[MeasurementTrace]) -> Vec<Result<T1Fit>> {
    parallel::map_slice(traces, fit_t1)
}

/// Stretched-exponential T2-echo fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct T2Fit {
    /// Echo decay time (μs).
    pub t2_us: f64,
    /// Stretch exponent n ∈ [0.5, 3].
    pub exponent: f64,
    pub baseline: f64,
    pub amplitude: f64,
    pub fit: FitResult,
}

/// Fit P1(t) = A + B exp[−(t/T2)ⁿ] to a `t2_echo` trace (x in seconds).
pub fn fit_t2_stretched(trace: &MeasurementTrace) -> Result<T2Fit> {
    if trace.kind != TraceKind::T2Echo {
        return Err(Error::InvalidInput(format!(
            "T2 fit needs a t2_echo trace, got {:?}",
            trace.kind
        )));
    }
    trace.check_fittable()?;
    let (a0, b0, tau0) = decay_seed(&trace.x, &trace.y).ok_or_else(|| {
        Error::NoSolution("trace is constant: decay amplitude and T2 are unidentifiable".into())
    })?;
    let span = trace.x[trace.x.len() - 1] - trace.x[0];
    let fit = lm_fit(
        stretched_exp_model,
        &trace.x,
        &trace.y,
        &[a0, b0, tau0, 1.0],
        &[f64::NEG_INFINITY, f64::NEG_INFINITY, 1e-6 * span, 0.5],
        &[f64::INFINITY, f64::INFINITY, 1e4 * span, 3.0],
        &["baseline", "amplitude", "tau_s", "exponent"],
    )?;
    Ok(T2Fit {
        t2_us: fit.param("tau_s") * 1e6,
        exponent: fit.param("exponent"),
        baseline: fit.param("baseline"),
        amplitude: fit.param("amplitude"),
        fit,
    })
}

/// best/mean/std over a nonempty sample (sample standard deviation, N−1;
/// a single sample reports std = 0).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleStats {
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

pub fn sample_stats(samples: &[f64]) -> Result<SampleStats> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let n = samples.len();
    let best = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SampleStats {
        best,
        mean,
        std,
        count: n,
    })
}

/// Median (mean of the middle pair for even counts).
pub fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// One device row in the Table-style report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceSummary {
    pub id: String,
    pub f01_ghz: f64,
    /// Anharmonicity magnitude |f12 − f01| (MHz), tabulated positive.
    pub alpha_mhz: f64,
    /// From spectrum inversion of (f01, α); absent when inversion fails.
    pub ej_over_ec: Option<f64>,
    pub t1_best_us: Option<f64>,
    pub t1_mean_us: Option<f64>,
    pub t1_std_us: Option<f64>,
    pub t2_best_us: Option<f64>,
    pub t2_mean_us: Option<f64>,
    pub t2_std_us: Option<f64>,
    /// Mean quality factor 2π f01 · mean T1.
    pub mean_q: Option<f64>,
    /// Gaps and caveats, e.g. missing traces or a single-shot std.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Aggregate per-device statistics. `alpha_ghz` is the signed anharmonicity
/// (negative for transmons); T2 samples may be empty.
pub fn summarize_device(
    id: &str,
    t1_samples_us: &[f64],
    t2_samples_us: &[f64],
    f01_ghz: f64,
    alpha_ghz: f64,
) -> Result<DeviceSummary> {
    if t1_samples_us.is_empty() {
        return Err(Error::InvalidInput("device needs at least one T1 sample".into()));
    }
    let mut flags = Vec::new();
    let t1 = sample_stats(t1_samples_us)?;
    if t1.count == 1 {
        flags.push("single T1 sample: std reported as 0".to_string());
    }
    let t2 = if t2_samples_us.is_empty() {
        None
    } else {
        Some(sample_stats(t2_samples_us)?)
    };
    let ej_over_ec = match qubit::invert_spectroscopy(f01_ghz, alpha_ghz) {
        Ok(p) => Some(p.e_j_ghz / p.e_c_ghz),
        Err(e) => {
            flags.push(format!("E_J/E_C inversion failed: {e}"));
            None
        }
    };
    let mean_q = loss::q_from_t1(f01_ghz, t1.mean)?;
    Ok(DeviceSummary {
        id: id.to_string(),
        f01_ghz,
        alpha_mhz: alpha_ghz.abs() * 1e3,
        ej_over_ec,
        t1_best_us: Some(t1.best),
        t1_mean_us: Some(t1.mean),
        t1_std_us: Some(t1.std),
        t2_best_us: t2.map(|s| s.best),
        t2_mean_us: t2.map(|s| s.mean),
        t2_std_us: t2.map(|s| s.std),
        mean_q: Some(mean_q),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn synthetic_decay(
        t1_us: f64,
        n_points: usize,
        span_us: f64,
        noise: f64,
        seed: u64,
    ) -> MeasurementTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let x: Vec<f64> = (0..n_points)
            .map(|i| i as f64 * span_us * 1e-6 / (n_points - 1) as f64)
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| {
                let clean = 0.02 + 0.95 * (-t / (t1_us * 1e-6)).exp();
                if noise > 0.0 {
                    clean + normal.sample(&mut rng)
                } else {
                    clean
                }
            })
            .collect();
        MeasurementTrace::new(TraceKind::T1Decay, x, y).unwrap()
    }

    #[test]
    fn t1_noiseless_round_trip() {
        let trace = synthetic_decay(34.4, 51, 200.0, 0.0, 0);
        let fit = fit_t1(&trace).unwrap();
        assert_relative_eq!(fit.t1_us, 34.4, max_relative = 1e-6);
        assert!(fit.fit.converged);
    }

    #[test]
    fn t1_with_noise_recovers_within_three_percent() {
        // 2% additive noise, 51 points over [0, 400 μs], T1 = 89.9 μs.
        let trace = synthetic_decay(89.9, 51, 400.0, 0.02, 42);
        let fit = fit_t1(&trace).unwrap();
        assert!(
            (fit.t1_us - 89.9).abs() / 89.9 < 0.03,
            "recovered {}",
            fit.t1_us
        );
    }

    #[test]
    fn t1_constant_trace_is_unidentifiable() {
        let x: Vec<f64> = (0..16).map(|i| i as f64 * 1e-5).collect();
        let y = vec![0.4; 16];
        let trace = MeasurementTrace::new(TraceKind::T1Decay, x, y).unwrap();
        assert!(matches!(fit_t1(&trace), Err(Error::NoSolution(_))));
    }

    #[test]
    fn t1_rejects_wrong_kind_and_short_traces() {
        let x: Vec<f64> = (0..16).map(|i| i as f64 * 1e-5).collect();
        let y: Vec<f64> = x.iter().map(|&t| (-t / 1e-4).exp()).collect();
        let trace = MeasurementTrace::new(TraceKind::Iv, x.clone(), y.clone()).unwrap();
        assert!(fit_t1(&trace).is_err());
        let short =
            MeasurementTrace::new(TraceKind::T1Decay, x[..4].to_vec(), y[..4].to_vec()).unwrap();
        assert!(fit_t1(&short).is_err());
    }

    fn synthetic_stretched(
        t2_us: f64,
        n_exp: f64,
        n_points: usize,
        span_us: f64,
        noise: f64,
        seed: u64,
    ) -> MeasurementTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let x: Vec<f64> = (0..n_points)
            .map(|i| i as f64 * span_us * 1e-6 / (n_points - 1) as f64)
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&t| {
                let clean = 0.03 + 0.9 * (-(t / (t2_us * 1e-6)).powf(n_exp)).exp();
                if noise > 0.0 {
                    clean + normal.sample(&mut rng)
                } else {
                    clean
                }
            })
            .collect();
        MeasurementTrace::new(TraceKind::T2Echo, x, y).unwrap()
    }

    #[test]
    fn t2_noiseless_round_trip() {
        let trace = synthetic_stretched(21.1, 1.37, 61, 80.0, 0.0, 0);
        let fit = fit_t2_stretched(&trace).unwrap();
        assert_relative_eq!(fit.t2_us, 21.1, max_relative = 1e-6);
        assert_relative_eq!(fit.exponent, 1.37, max_relative = 1e-6);
    }

    #[test]
    fn t2_with_noise_recovers_within_five_percent() {
        let trace = synthetic_stretched(21.1, 1.37, 61, 80.0, 0.02, 7);
        let fit = fit_t2_stretched(&trace).unwrap();
        assert!((fit.t2_us - 21.1).abs() / 21.1 < 0.05, "T2 {}", fit.t2_us);
        assert!(
            (fit.exponent - 1.37).abs() / 1.37 < 0.05,
            "n {}",
            fit.exponent
        );
    }

    #[test]
    fn stretched_with_pinned_unity_exponent_matches_plain_fit() {
        let trace = synthetic_decay(50.0, 51, 250.0, 0.01, 3);
        let plain = fit_t1(&trace).unwrap();
        let span = trace.x[trace.x.len() - 1] - trace.x[0];
        let seed = decay_seed(&trace.x, &trace.y).unwrap();
        let pinned = lm_fit(
            stretched_exp_model,
            &trace.x,
            &trace.y,
            &[seed.0, seed.1, seed.2, 1.0],
            &[f64::NEG_INFINITY, f64::NEG_INFINITY, 1e-6 * span, 1.0],
            &[f64::INFINITY, f64::INFINITY, 1e4 * span, 1.0],
            &["baseline", "amplitude", "tau_s", "exponent"],
        )
        .unwrap();
        assert_relative_eq!(
            pinned.param("tau_s") * 1e6,
            plain.t1_us,
            max_relative = 1e-8
        );
        assert_relative_eq!(
            pinned.param("baseline"),
            plain.baseline,
            max_relative = 1e-6
        );
    }

    #[test]
    fn stretched_model_nests_plain_exponential() {
        for t in [0.0, 1e-6, 5e-5, 3e-4] {
            let p4 = [0.1, 0.8, 4e-5, 1.0];
            let p3 = [0.1, 0.8, 4e-5];
            assert_relative_eq!(
                stretched_exp_model(t, &p4),
                exp_decay_model(t, &p3),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn noisy_fits_land_within_three_stderr_most_of_the_time() {
        // 200 seeded trials per model; ≥ 95% of recovered time constants
        // must sit within 3 reported standard errors of the truth.
        let t1_hits = crate::parallel::map_indexed(200, |seed| {
            let trace = synthetic_decay(89.9, 51, 400.0, 0.02, seed as u64);
            let fit = fit_t1(&trace).unwrap();
            let err = fit.fit.stderr_of("tau_s") * 1e6;
            ((fit.t1_us - 89.9).abs() <= 3.0 * err) as u32
        });
        let hits: u32 = t1_hits.iter().sum();
        assert!(hits >= 190, "T1 coverage {hits}/200");

        let t2_hits = crate::parallel::map_indexed(200, |seed| {
            let trace = synthetic_stretched(21.1, 1.37, 61, 80.0, 0.02, 1000 + seed as u64);
            let fit = fit_t2_stretched(&trace).unwrap();
            let err = fit.fit.stderr_of("tau_s") * 1e6;
            ((fit.t2_us - 21.1).abs() <= 3.0 * err) as u32
        });
        let hits: u32 = t2_hits.iter().sum();
        assert!(hits >= 190, "T2 coverage {hits}/200");
    }

    #[test]
    fn stats_hand_arithmetic() {
        let s = sample_stats(&[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(s.best, 30.0);
        assert_eq!(s.mean, 20.0);
        assert_relative_eq!(s.std, 10.0, max_relative = 1e-12);
        let single = sample_stats(&[5.0]).unwrap();
        assert_eq!(single.best, 5.0);
        assert_eq!(single.std, 0.0);
        assert!(sample_stats(&[]).is_err());
    }

    #[test]
    fn summary_hand_arithmetic() {
        let s = summarize_device("X1", &[10.0, 20.0, 30.0], &[], 5.0, -0.3).unwrap();
        assert_eq!(s.t1_best_us, Some(30.0));
        assert_eq!(s.t1_mean_us, Some(20.0));
        assert!((s.mean_q.unwrap() - 6.28e5).abs() / 6.28e5 < 1e-3);
        assert!(s.t2_mean_us.is_none());
        assert_eq!(s.alpha_mhz, 300.0);
        // Permutation invariance.
        let s2 = summarize_device("X1", &[30.0, 10.0, 20.0], &[], 5.0, -0.3).unwrap();
        assert_eq!(s.t1_mean_us, s2.t1_mean_us);
        assert_eq!(s.t1_std_us, s2.t1_std_us);
        // Single sample flagged.
        let s3 = summarize_device("X2", &[12.0], &[], 4.5, -0.4).unwrap();
        assert_eq!(s3.t1_std_us, Some(0.0));
        assert!(!s3.flags.is_empty());
        assert!(summarize_device("X3", &[], &[], 4.5, -0.4).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn batch_fit_preserves_order() {
        let traces: Vec<MeasurementTrace> = (0..8)
            .map(|i| synthetic_decay(10.0 + i as f64 * 5.0, 41, 300.0, 0.0, i as u64))
            .collect();
        let fits = fit_t1_batch(&traces);
        for (i, fit) in fits.iter().enumerate() {
            let want = 10.0 + i as f64 * 5.0;
            let got = fit.as_ref().unwrap().t1_us;
            assert_relative_eq!(got, want, max_relative = 1e-5);
        }
    }
}
