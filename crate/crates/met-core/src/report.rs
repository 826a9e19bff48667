//! Device registry and deterministic report generation.
//!
//! A registry is a JSON list of device records. Each record carries the
//! measured (f01, α), the junction spec, and either pre-computed T1/T2
//! statistics or references to trace CSV files that get fitted on the fly.
//! Regenerating a report from identical inputs is byte-identical: no
//! wall-clock timestamps, fixed field order, and row order pinned to the
//! registry regardless of how the per-device work is scheduled.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{self, JunctionSpec};
use crate::error::{Error, Result};
use crate::fit::{self, DeviceSummary, SampleStats};
use crate::loss::{self, ScalingProjection};
use crate::parallel;
use crate::trace::{parse_trace_csv, TraceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceType {
    Annealed,
    Unannealed,
}

impl std::fmt::Display for DeviceType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeviceType::Annealed => write!(f, "annealed"),
            DeviceType::Unannealed => write!(f, "unannealed"),
        }
    }
}

/// Reference to a trace CSV on disk, relative to the registry file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRef {
    pub kind: TraceKind,
    pub path: String,
}

/// One device in the registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub id: String,
    pub device_type: DeviceType,
    pub junction: JunctionSpec,
    /// Stray (antenna) capacitance added to the junction capacitance.
    #[serde(default = "default_stray")]
    pub c_stray_ff: f64,
    /// Measured qubit frequency (GHz).
    pub f01_ghz: f64,
    /// Measured anharmonicity magnitude (MHz), tabulated positive.
    pub alpha_mhz: f64,
    /// Readout resonator frequency (GHz); metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_ghz: Option<f64>,
    /// Qubit-resonator coupling g/2π (MHz); metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_g_mhz: Option<f64>,
    /// Pre-computed statistics, used when no traces are referenced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<SampleStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_us: Option<SampleStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TraceRef>,
}

fn default_stray() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registry {
    pub devices: Vec<DeviceRecord>,
}

impl Registry {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let reg: Registry = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut seen = std::collections::HashSet::new();
        for d in &reg.devices {
            if !seen.insert(d.id.clone()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate device id '{}' in registry",
                    d.id
                )));
            }
        }
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// Per-type population medians over the per-device means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeMedians {
    pub device_type: DeviceType,
    pub device_count: usize,
    pub median_t1_us: Option<f64>,
    pub median_q: Option<f64>,
}

/// Loss figures derived from the best device in the registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossProjection {
    pub reference_device: String,
    pub mean_q: f64,
    pub p_jj: f64,
    /// Upper bound on the junction loss tangent, (1/Q)/p_JJ.
    pub junction_tan_delta_bound: f64,
    /// Junction-limited T1 scaled to a conventional junction participation.
    pub scaled: ScalingProjection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    /// SHA-256 over the registry JSON and every referenced trace file.
    pub input_sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<DeviceSummary>,
    pub medians: Vec<TypeMedians>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<LossProjection>,
    pub provenance: Provenance,
}

/// Conventional-transmon junction participation used for the scaling
/// projection (upper end of the typical small-junction range).
pub const CONVENTIONAL_P_JJ: f64 = 0.02;

fn summarize_record(record: &DeviceRecord, base_dir: &Path) -> DeviceSummary {
    let mut flags = Vec::new();

    let mut t1_samples: Vec<f64> = Vec::new();
    let mut t2_samples: Vec<f64> = Vec::new();
    for tr in &record.traces {
        let path = base_dir.join(&tr.path);
        match tr.kind {
            TraceKind::T1Decay => match parse_trace_csv(&path, tr.kind).and_then(|t| fit::fit_t1(&t)) {
                Ok(f) => t1_samples.push(f.t1_us),
                Err(e) => flags.push(format!("trace '{}': {e}", tr.path)),
            },
            TraceKind::T2Echo => {
                match parse_trace_csv(&path, tr.kind).and_then(|t| fit::fit_t2_stretched(&t)) {
                    Ok(f) => t2_samples.push(f.t2_us),
                    Err(e) => flags.push(format!("trace '{}': {e}", tr.path)),
                }
            }
            other => flags.push(format!(
                "trace '{}': kind {other:?} is not aggregated into the summary",
                tr.path
            )),
        }
    }

    let t1 = if !t1_samples.is_empty() {
        fit::sample_stats(&t1_samples).ok()
    } else {
        record.t1_us
    };
    let t2 = if !t2_samples.is_empty() {
        fit::sample_stats(&t2_samples).ok()
    } else {
        record.t2_us
    };

    let alpha_ghz = -record.alpha_mhz.abs() * 1e-3;
    let ej_over_ec = match crate::qubit::invert_spectroscopy(record.f01_ghz, alpha_ghz) {
        Ok(p) => Some(p.e_j_ghz / p.e_c_ghz),
        Err(e) => {
            flags.push(format!("E_J/E_C inversion failed: {e}"));
            None
        }
    };

    let mean_q = t1.map(|s| loss::q_from_t1(record.f01_ghz, s.mean).unwrap_or(f64::NAN));
    if t1.is_none() {
        flags.push("no T1 data: statistics left blank".to_string());
    }
    if let Some(s) = t1 {
        if s.count == 1 {
            flags.push("single T1 sample: std reported as 0".to_string());
        }
    }

    DeviceSummary {
        id: record.id.clone(),
        f01_ghz: record.f01_ghz,
        alpha_mhz: record.alpha_mhz.abs(),
        ej_over_ec,
        t1_best_us: t1.map(|s| s.best),
        t1_mean_us: t1.map(|s| s.mean),
        t1_std_us: t1.map(|s| s.std),
        t2_best_us: t2.map(|s| s.best),
        t2_mean_us: t2.map(|s| s.mean),
        t2_std_us: t2.map(|s| s.std),
        mean_q,
        flags,
    }
}

fn hash_inputs(registry_text: &str, registry: &Registry, base_dir: &Path) -> String {
    let mut hasher = Sha256::new();
    hasher.update(registry_text.as_bytes());
    for d in &registry.devices {
        for tr in &d.traces {
            hasher.update(tr.path.as_bytes());
            if let Ok(bytes) = fs::read(base_dir.join(&tr.path)) {
                hasher.update(&bytes);
            }
        }
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Generate the full report. `base_dir` anchors relative trace paths;
/// `registry_text` is the raw JSON (hashed into the provenance block).
pub fn generate_report(registry: &Registry, registry_text: &str, base_dir: &Path) -> Result<Report> {
    // Per-device fan-out; row order follows the registry regardless of
    // scheduling.
    let rows: Vec<DeviceSummary> =
        parallel::map_slice(&registry.devices, |record| summarize_record(record, base_dir));

    let mut medians = Vec::new();
    for ty in [DeviceType::Annealed, DeviceType::Unannealed] {
        let t1s: Vec<f64> = rows
            .iter()
            .zip(&registry.devices)
            .filter(|(r, d)| d.device_type == ty && r.t1_mean_us.is_some())
            .map(|(r, _)| r.t1_mean_us.unwrap())
            .collect();
        let qs: Vec<f64> = rows
            .iter()
            .zip(&registry.devices)
            .filter(|(r, d)| d.device_type == ty && r.mean_q.is_some())
            .map(|(r, _)| r.mean_q.unwrap())
            .collect();
        let count = registry.devices.iter().filter(|d| d.device_type == ty).count();
        if count == 0 {
            continue;
        }
        medians.push(TypeMedians {
            device_type: ty,
            device_count: count,
            median_t1_us: fit::median(&t1s),
            median_q: fit::median(&qs),
        });
    }

    // Projection from the device with the highest mean Q.
    let projection = rows
        .iter()
        .zip(&registry.devices)
        .filter(|(r, _)| r.mean_q.is_some() && r.t1_mean_us.is_some())
        .max_by(|(a, _), (b, _)| a.mean_q.unwrap().total_cmp(&b.mean_q.unwrap()))
        .and_then(|(row, record)| {
            let c_jj =
                design::plate_capacitance(record.junction.area_um2, record.junction.oxide_nm, record.junction.eps_r)
                    .ok()?;
            let p_jj = design::participation(c_jj, c_jj + record.c_stray_ff).ok()?;
            let q = row.mean_q.unwrap();
            let bound = loss::junction_loss_bound(q, p_jj).ok()?;
            let scaled =
                loss::scale_to_conventional(row.t1_mean_us.unwrap(), p_jj, CONVENTIONAL_P_JJ).ok()?;
            Some(LossProjection {
                reference_device: row.id.clone(),
                mean_q: q,
                p_jj,
                junction_tan_delta_bound: bound,
                scaled,
            })
        });

    Ok(Report {
        rows,
        medians,
        projection,
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_sha256: hash_inputs(registry_text, registry, base_dir),
        },
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Table-style CSV: one row per device, blank cells for missing data.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        out.push_str(
            "qubit_id,f01_ghz,alpha_mhz,ej_over_ec,t1_best_us,t1_mean_us,t1_std_us,\
             t2_best_us,t2_mean_us,t2_std_us,mean_q_millions\n",
        );
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.4},{:.1},{},{},{},{},{},{},{},{}",
                r.id,
                r.f01_ghz,
                r.alpha_mhz,
                cell(r.ej_over_ec),
                cell(r.t1_best_us),
                cell(r.t1_mean_us),
                cell(r.t1_std_us),
                cell(r.t2_best_us),
                cell(r.t2_mean_us),
                cell(r.t2_std_us),
                cell(r.mean_q.map(|q| q / 1e6)),
            );
        }
        out
    }
}
