//! Tagged measurement traces and their CSV interchange format.
//!
//! Headers are fixed per kind so files are bit-exact across tools:
//! `delay_s,p1` for decays, `voltage_V,current_A` for I-V,
//! `voltage_V,conductance_S` for dI/dV, `freq_GHz,amplitude` for flux-map
//! slices. Values are written with Rust's shortest round-trip float
//! formatting, so write → parse is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    T1Decay,
    T2Echo,
    Iv,
    Didv,
    FluxmapSlice,
}

impl TraceKind {
    /// Fixed CSV header for this trace kind.
    pub fn header(&self) -> &'static str {
        match self {
            TraceKind::T1Decay | TraceKind::T2Echo => "delay_s,p1",
            TraceKind::Iv => "voltage_V,current_A",
            TraceKind::Didv => "voltage_V,conductance_S",
            TraceKind::FluxmapSlice => "freq_GHz,amplitude",
        }
    }

    pub fn parse_name(name: &str) -> Result<Self> {
        match name {
            "t1" | "t1_decay" => Ok(TraceKind::T1Decay),
            "t2" | "t2_echo" => Ok(TraceKind::T2Echo),
            "iv" => Ok(TraceKind::Iv),
            "didv" => Ok(TraceKind::Didv),
            "fluxmap_slice" => Ok(TraceKind::FluxmapSlice),
            other => Err(Error::InvalidInput(format!("unknown trace kind '{other}'"))),
        }
    }
}

/// A tagged (x, y) measurement series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementTrace {
    pub kind: TraceKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl MeasurementTrace {
    /// Build a validated trace: equal lengths, finite values, strictly
    /// increasing x.
    pub fn new(kind: TraceKind, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "x has {} points but y has {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("trace needs at least two points".into()));
        }
        for (i, (&xv, &yv)) in x.iter().zip(y.iter()).enumerate() {
            if !xv.is_finite() || !yv.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite value at row {}",
                    i + 1
                )));
            }
        }
        for i in 1..x.len() {
            if x[i] <= x[i - 1] {
                return Err(Error::InvalidInput(format!(
                    "x must be strictly increasing; row {} repeats or reverses",
                    i + 1
                )));
            }
        }
        Ok(Self {
            kind,
            x,
            y,
            device_id: None,
            timestamp: None,
        })
    }

    /// Traces must carry at least eight points before fitting.
    pub fn check_fittable(&self) -> Result<()> {
        if self.x.len() < 8 {
            return Err(Error::InvalidInput(format!(
                "fitting needs at least 8 points, trace has {}",
                self.x.len()
            )));
        }
        Ok(())
    }
}

/// Parse a trace CSV, validating the header against the expected kind.
/// Errors carry the 1-based line number of the offending row.
pub fn parse_trace_csv(path: &Path, kind: TraceKind) -> Result<MeasurementTrace> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trace_str(&text, kind, &path.display().to_string())
}

pub fn parse_trace_str(text: &str, kind: TraceKind, origin: &str) -> Result<MeasurementTrace> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((no, line)) => break (no, line.trim()),
            None => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: 1,
                    message: "empty file".into(),
                })
            }
        }
    };
    if header.1 != kind.header() {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: header.0 + 1,
            message: format!(
                "header '{}' does not match expected '{}'",
                header.1,
                kind.header()
            ),
        });
    }

    let mut x = Vec::new();
    let mut y = Vec::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |field: Option<&str>, what: &str| -> Result<f64> {
            let raw = field.ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: no + 1,
                message: format!("missing {what} column"),
            })?;
            let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                path: origin.to_string(),
                line: no + 1,
                message: format!("cannot parse {what} value '{}'", raw.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: no + 1,
                    message: format!("non-finite {what} value"),
                });
            }
            Ok(v)
        };
        let xv = parse(cols.next(), "x")?;
        let yv = parse(cols.next(), "y")?;
        if cols.next().is_some() {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: no + 1,
                message: "too many columns".into(),
            });
        }
        if let Some(&prev) = x.last() {
            if xv <= prev {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: no + 1,
                    message: "x values must be strictly increasing".into(),
                });
            }
        }
        x.push(xv);
        y.push(yv);
    }
    MeasurementTrace::new(kind, x, y)
}

/// Serialize a trace to its CSV form (shortest round-trip floats).
pub fn trace_to_csv(trace: &MeasurementTrace) -> String {
    let mut out = String::with_capacity(trace.x.len() * 24 + 24);
    out.push_str(trace.kind.header());
    out.push('\n');
    for (xv, yv) in trace.x.iter().zip(trace.y.iter()) {
        let _ = writeln!(out, "{xv},{yv}");
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &MeasurementTrace) -> Result<()> {
    fs::write(path, trace_to_csv(trace)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
