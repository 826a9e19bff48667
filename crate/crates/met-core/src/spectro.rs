//! Flux-map spectroscopy simulation with embedded two-level-system defects,
//! avoided-crossing detection, and TLS density estimation.
//!
//! Each bias point is independent: the SQUID flux sets the bare qubit
//! frequency, the qubit + TLS single-excitation Hamiltonian (an arrowhead
//! matrix with the couplings on the qubit row/column) is diagonalized, and
//! the branches are rendered as Lorentzian ridges weighted by their qubit
//! character, plus seeded per-pixel noise. The noise stream is a pure
//! function of (seed, bias index), so parallel and serial assembly agree
//! bit for bit.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::qubit::{self, SquidParams, TransmonParams};

/// A static two-level defect coupled to the qubit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TlsDefect {
    pub freq_ghz: f64,
    /// Coupling g (GHz); the on-resonance branch splitting is 2g.
    pub g_ghz: f64,
    #[serde(default)]
    pub label: String,
}

impl TlsDefect {
    pub fn validate(&self) -> Result<()> {
        if !(self.g_ghz > 0.0) || !(self.freq_ghz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "defect '{}': frequency and coupling must be positive",
                self.label
            )));
        }
        Ok(())
    }
}

/// Uniform grid specification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn validate(&self, what: &str) -> Result<()> {
        if self.points < 2 || !(self.max > self.min) {
            return Err(Error::InvalidInput(format!(
                "{what} grid must be strictly increasing with at least 2 points"
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.min + i as f64 * step).collect()
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }
}

/// Two-dimensional spectroscopy scan configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxMapConfig {
    /// Coil bias grid (A).
    pub bias_a: GridSpec,
    /// Flux transfer: flux(Φ0) = flux_per_amp · bias + flux_offset.
    pub flux_per_amp: f64,
    #[serde(default)]
    pub flux_offset_phi0: f64,
    /// Total SQUID Josephson energy E_JΣ/h (GHz).
    pub e_j_sum_ghz: f64,
    /// SQUID asymmetry d ∈ [0, 1).
    #[serde(default)]
    pub asymmetry: f64,
    /// Charging energy E_C/h (GHz).
    pub e_c_ghz: f64,
    /// Pump frequency grid (GHz).
    pub freq_ghz: GridSpec,
    /// Lorentzian FWHM of the rendered ridges (GHz).
    pub linewidth_ghz: f64,
    /// Gaussian per-pixel noise amplitude (map units).
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

impl FluxMapConfig {
    pub fn validate(&self) -> Result<()> {
        self.bias_a.validate("bias")?;
        self.freq_ghz.validate("frequency")?;
        if !(self.linewidth_ghz > 0.0) {
            return Err(Error::InvalidInput("linewidth must be positive".into()));
        }
        if self.noise_amplitude < 0.0 {
            return Err(Error::InvalidInput("noise amplitude must be non-negative".into()));
        }
        if !(self.e_c_ghz > 0.0) {
            return Err(Error::InvalidInput("charging energy must be positive".into()));
        }
        if !self.flux_per_amp.is_finite() || !self.flux_offset_phi0.is_finite() {
            return Err(Error::InvalidInput("flux transfer must be finite".into()));
        }
        SquidParams {
            e_j_sum_ghz: self.e_j_sum_ghz,
            asymmetry: self.asymmetry,
            flux_phi0: 0.0,
        }
        .validate()
    }
}

/// One eigenbranch of the coupled qubit-TLS system at a bias point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Branch {
    pub freq_ghz: f64,
    /// |⟨qubit|branch⟩|²; sets the rendered ridge brightness.
    pub qubit_weight: f64,
}

/// Simulated (or loaded) two-dimensional spectroscopy map.
#[derive(Debug, Clone)]
pub struct FluxMap {
    pub bias_a: Vec<f64>,
    pub freq_ghz: Vec<f64>,
    /// Row-major amplitude: `amplitude[bias_index][freq_index]`.
    pub amplitude: Vec<Vec<f64>>,
    /// Eigenbranches per bias point (empty for maps loaded from CSV).
    pub branches: Vec<Vec<Branch>>,
    /// Ridge FWHM when known (simulated maps).
    pub linewidth_ghz: Option<f64>,
    /// Noise amplitude when known (simulated maps).
    pub noise_amplitude: Option<f64>,
    pub warnings: Vec<String>,
}

/// Branch frequencies and qubit weights of the coupled single-excitation
/// Hamiltonian: qubit at `f01`, defects on the diagonal, couplings g on the
/// qubit row/column.
fn coupled_branches(f01_ghz: f64, defects: &[TlsDefect]) -> Vec<Branch> {
    let d = defects.len();
    if d == 0 {
        return vec![Branch {
            freq_ghz: f01_ghz,
            qubit_weight: 1.0,
        }];
    }
    let dim = d + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    h[(0, 0)] = f01_ghz;
    for (k, defect) in defects.iter().enumerate() {
        h[(k + 1, k + 1)] = defect.freq_ghz;
        h[(0, k + 1)] = defect.g_ghz;
        h[(k + 1, 0)] = defect.g_ghz;
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .into_iter()
        .map(|col| Branch {
            freq_ghz: eig.eigenvalues[col],
            qubit_weight: eig.eigenvectors[(0, col)].powi(2),
        })
        .collect()
}

fn simulate_row(
    config: &FluxMapConfig,
    defects: &[TlsDefect],
    biases: &[f64],
    freqs: &[f64],
    row: usize,
) -> Result<(Vec<f64>, Vec<Branch>)> {
    let flux = config.flux_per_amp * biases[row] + config.flux_offset_phi0;
    let e_j = qubit::squid_effective_ej(&SquidParams {
        e_j_sum_ghz: config.e_j_sum_ghz,
        asymmetry: config.asymmetry,
        flux_phi0: flux,
    });
    let f01 = qubit::spectrum(&TransmonParams::new(e_j, config.e_c_ghz), 2)?.f01_ghz;
    let branches = coupled_branches(f01, defects);

    let half_width = 0.5 * config.linewidth_ghz;
    let mut amps: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            branches
                .iter()
                .map(|b| {
                    let u = (f - b.freq_ghz) / half_width;
                    b.qubit_weight / (1.0 + u * u)
                })
                .sum()
        })
        .collect();

    if config.noise_amplitude > 0.0 {
        // Noise is a pure function of (seed, row): one ChaCha stream per row.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(row as u64 + 1);
        let normal = Normal::new(0.0, config.noise_amplitude)
            .map_err(|e| Error::InvalidInput(format!("noise amplitude: {e}")))?;
        for a in amps.iter_mut() {
            *a += normal.sample(&mut rng);
        }
    }
    Ok((amps, branches))
}

/// Simulate a two-dimensional flux map. Defects outside the frequency grid
/// are still simulated but flagged in `warnings`.
pub fn simulate_fluxmap(config: &FluxMapConfig, defects: &[TlsDefect]) -> Result<FluxMap> {
    config.validate()?;
    for d in defects {
        d.validate()?;
    }
    let biases = config.bias_a.values();
    let freqs = config.freq_ghz.values();

    let mut warnings = Vec::new();
    for (k, d) in defects.iter().enumerate() {
        if d.freq_ghz < config.freq_ghz.min || d.freq_ghz > config.freq_ghz.max {
            let name = if d.label.is_empty() {
                format!("defect #{k}")
            } else {
                d.label.clone()
            };
            warnings.push(format!(
                "{name} at {} GHz lies outside the scanned band [{}, {}] GHz",
                d.freq_ghz, config.freq_ghz.min, config.freq_ghz.max
            ));
        }
    }

    let rows = parallel::map_indexed(biases.len(), |i| {
        simulate_row(config, defects, &biases, &freqs, i)
    });
    let mut amplitude = Vec::with_capacity(rows.len());
    let mut branches = Vec::with_capacity(rows.len());
    for row in rows {
        let (a, b) = row?;
        amplitude.push(a);
        branches.push(b);
    }
    Ok(FluxMap {
        bias_a: biases,
        freq_ghz: freqs,
        amplitude,
        branches,
        linewidth_ghz: Some(config.linewidth_ghz),
        noise_amplitude: Some(config.noise_amplitude),
        warnings,
    })
}

/// One detected avoided crossing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Crossing {
    pub bias_a: f64,
    pub center_ghz: f64,
    /// Hybridization gap (GHz); 2g at exact resonance.
    pub splitting_ghz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
    /// Scanned frequency bandwidth (GHz).
    pub bandwidth_ghz: f64,
    /// Splittings below this were suppressed (GHz).
    pub threshold_ghz: f64,
    pub total_area_um2: Option<f64>,
    /// count / (area · bandwidth), when the junction area is known.
    pub density_per_um2_ghz: Option<f64>,
}

/// Detector tuning; the defaults follow the map metadata when present.
#[derive(Debug, Clone, Default)]
pub struct DetectOptions {
    /// Minimum reported splitting (GHz); default 2 frequency-grid steps.
    pub threshold_ghz: Option<f64>,
    /// Peak amplitude floor; default 3× the map noise amplitude.
    pub noise_floor: Option<f64>,
    /// Total junction area (μm²) for the density estimate.
    pub total_area_um2: Option<f64>,
}

/// Topographic prominence of the local maximum at `j`: height above the
/// deeper of the two saddles toward higher ground (or toward the map edge).
fn prominence(amps: &[f64], j: usize) -> f64 {
    let mut base = f64::NEG_INFINITY;
    for dir in [-1isize, 1] {
        let mut lowest = amps[j];
        let mut i = j as isize + dir;
        while i >= 0 && (i as usize) < amps.len() {
            let a = amps[i as usize];
            if a > amps[j] {
                break;
            }
            lowest = lowest.min(a);
            i += dir;
        }
        base = base.max(lowest);
    }
    amps[j] - base
}

/// Local maxima of one amplitude row: above the floor, prominent enough to
/// stand clear of the noise, parabolic-refined in frequency, and merged
/// within `min_sep`.
fn row_peaks(freqs: &[f64], amps: &[f64], floor: f64, min_sep: f64, noise: f64) -> Vec<f64> {
    let m = freqs.len();
    let row_max = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = floor.max(0.2 * row_max);
    let min_prominence = (5.0 * noise).max(0.12 * row_max);
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for j in 1..m - 1 {
        if amps[j] >= amps[j - 1] && amps[j] > amps[j + 1] && amps[j] >= cut {
            if prominence(amps, j) < min_prominence {
                continue;
            }
            // Sub-grid refinement of the peak position.
            let denom = amps[j - 1] - 2.0 * amps[j] + amps[j + 1];
            let shift = if denom.abs() > 1e-300 {
                (0.5 * (amps[j - 1] - amps[j + 1]) / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            let df = freqs[j + 1] - freqs[j];
            candidates.push((freqs[j] + shift * df, amps[j]));
        }
    }
    // Greedy non-maximum suppression: strongest first, drop anything closer
    // than min_sep to an accepted peak.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut kept: Vec<f64> = Vec::new();
    for (f, _) in candidates {
        if kept.iter().all(|&k| (f - k).abs() >= min_sep) {
            kept.push(f);
        }
    }
    kept.sort_by(f64::total_cmp);
    kept
}

/// Gap rows → crossings: interior local minima of the interbranch gap with
/// a parabolic sub-grid refinement of the squared gap (exact for the
/// hyperbolic gap profile of an avoided crossing).
fn minima_to_crossings(
    biases: &[f64],
    gaps: &[Option<(f64, f64)>],
    threshold: f64,
) -> Vec<Crossing> {
    let n = biases.len();
    let mut raw: Vec<(usize, Crossing)> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let (Some((g_prev, _)), Some((g, center)), Some((g_next, _))) =
            (gaps[i - 1], gaps[i], gaps[i + 1])
        else {
            continue;
        };
        if g <= g_prev && g <= g_next {
            // Parabola through the squared gaps; vertex = (bias*, splitting²).
            let (x0, x1, x2) = (biases[i - 1], biases[i], biases[i + 1]);
            let (y0, y1, y2) = (g_prev * g_prev, g * g, g_next * g_next);
            let d01 = (y1 - y0) / (x1 - x0);
            let d12 = (y2 - y1) / (x2 - x1);
            let curvature = (d12 - d01) / (x2 - x0);
            let (bias, split2) = if curvature > 1e-300 {
                // Vertex of the interpolating parabola in Newton form.
                let b = 0.5 * ((x0 + x1) - d01 / curvature);
                let b = b.clamp(x0, x2);
                let yb = y0 + d01 * (b - x0) + curvature * (b - x0) * (b - x1);
                (b, yb.max(0.0))
            } else {
                (x1, y1)
            };
            raw.push((
                i,
                Crossing {
                    bias_a: bias,
                    center_ghz: center,
                    splitting_ghz: split2.sqrt(),
                },
            ));
        }
    }

    // Merge minima within three bias steps, keeping the smallest gap.
    let mut merged: Vec<(usize, Crossing)> = Vec::new();
    for (i, c) in raw {
        match merged.last_mut() {
            Some((last_i, last_c)) if i - *last_i <= 3 => {
                if c.splitting_ghz < last_c.splitting_ghz {
                    *last_i = i;
                    *last_c = c;
                }
            }
            _ => merged.push((i, c)),
        }
    }

    merged
        .into_iter()
        .map(|(_, c)| c)
        .filter(|c| c.splitting_ghz >= threshold)
        .collect()
}

fn assemble_report(
    crossings: Vec<Crossing>,
    bandwidth_ghz: f64,
    threshold_ghz: f64,
    total_area_um2: Option<f64>,
) -> Result<CrossingReport> {
    let density = match total_area_um2 {
        Some(area) => Some(tls_density(crossings.len(), area, bandwidth_ghz)?),
        None => None,
    };
    Ok(CrossingReport {
        crossings,
        bandwidth_ghz,
        threshold_ghz,
        total_area_um2,
        density_per_um2_ghz: density,
    })
}

/// Detect avoided crossings in a rendered amplitude map.
///
/// Works purely from (bias, frequency, amplitude): per-bias ridge peaks are
/// extracted, the minimum adjacent-ridge gap forms a gap-vs-bias series, and
/// its interior local minima (refined sub-grid) are the crossings. Minima
/// with splittings below the threshold are suppressed.
pub fn detect_crossings(map: &FluxMap, opts: &DetectOptions) -> Result<CrossingReport> {
    if map.bias_a.len() < 3 {
        return Err(Error::InvalidInput(
            "crossing detection needs at least 3 bias points".into(),
        ));
    }
    if map.freq_ghz.len() < 5 {
        return Err(Error::InvalidInput("frequency grid too coarse".into()));
    }
    let df = (map.freq_ghz[map.freq_ghz.len() - 1] - map.freq_ghz[0])
        / (map.freq_ghz.len() - 1) as f64;
    let threshold = opts.threshold_ghz.unwrap_or(2.0 * df);
    let floor = opts
        .noise_floor
        .unwrap_or_else(|| 3.0 * map.noise_amplitude.unwrap_or(0.0));
    let min_sep = (3.0 * df).max(map.linewidth_ghz.unwrap_or(0.0));

    let noise = map.noise_amplitude.unwrap_or(0.0).max(opts.noise_floor.unwrap_or(0.0) / 3.0);
    let gaps: Vec<Option<(f64, f64)>> = map
        .amplitude
        .iter()
        .map(|row| {
            let peaks = row_peaks(&map.freq_ghz, row, floor, min_sep, noise);
            min_adjacent_gap(&peaks)
        })
        .collect();

    let bandwidth = map.freq_ghz[map.freq_ghz.len() - 1] - map.freq_ghz[0];
    let crossings = minima_to_crossings(&map.bias_a, &gaps, threshold);
    assemble_report(crossings, bandwidth, threshold, opts.total_area_um2)
}

/// Detect avoided crossings directly on eigenbranch data. Only branch pairs
/// carrying qubit character count, so clusters of mutually detuned TLS don't
/// masquerade as crossings.
pub fn detect_crossings_in_branches(
    biases: &[f64],
    branches: &[Vec<Branch>],
    bandwidth_ghz: f64,
    threshold_ghz: f64,
    total_area_um2: Option<f64>,
) -> Result<CrossingReport> {
    if biases.len() < 3 || biases.len() != branches.len() {
        return Err(Error::InvalidInput(
            "branch detection needs matching bias/branch data with at least 3 points".into(),
        ));
    }
    let gaps: Vec<Option<(f64, f64)>> = branches
        .iter()
        .map(|row| {
            let mut best: Option<(f64, f64)> = None;
            for w in row.windows(2) {
                if w[0].qubit_weight + w[1].qubit_weight < 0.5 {
                    continue;
                }
                let gap = w[1].freq_ghz - w[0].freq_ghz;
                let center = 0.5 * (w[0].freq_ghz + w[1].freq_ghz);
                if best.map_or(true, |(g, _)| gap < g) {
                    best = Some((gap, center));
                }
            }
            best
        })
        .collect();
    let crossings = minima_to_crossings(biases, &gaps, threshold_ghz);
    assemble_report(crossings, bandwidth_ghz, threshold_ghz, total_area_um2)
}

fn min_adjacent_gap(peaks: &[f64]) -> Option<(f64, f64)> {
    if peaks.len() < 2 {
        return None;
    }
    let mut best: Option<(f64, f64)> = None;
    for w in peaks.windows(2) {
        let gap = w[1] - w[0];
        if best.map_or(true, |(g, _)| gap < g) {
            best = Some((gap, 0.5 * (w[0] + w[1])));
        }
    }
    best
}

/// TLS areal-spectral density: count / (area · bandwidth) (μm⁻² GHz⁻¹).
pub fn tls_density(count: usize, total_area_um2: f64, bandwidth_ghz: f64) -> Result<f64> {
    if !(total_area_um2 > 0.0) || !(bandwidth_ghz > 0.0) {
        return Err(Error::InvalidInput(
            "area and bandwidth must be positive".into(),
        ));
    }
    Ok(count as f64 / (total_area_um2 * bandwidth_ghz))
}

/// Map CSV header, fixed for interchange.
pub const FLUXMAP_CSV_HEADER: &str = "bias_A,freq_GHz,amplitude";

/// Serialize a map in long form: one `bias,freq,amplitude` row per pixel,
/// bias-major, shortest round-trip floats.
pub fn fluxmap_to_csv(map: &FluxMap) -> String {
    use std::fmt::Write as _;
    let mut out = String::with_capacity(map.bias_a.len() * map.freq_ghz.len() * 24);
    out.push_str(FLUXMAP_CSV_HEADER);
    out.push('\n');
    for (i, &bias) in map.bias_a.iter().enumerate() {
        for (j, &freq) in map.freq_ghz.iter().enumerate() {
            let _ = writeln!(out, "{bias},{freq},{}", map.amplitude[i][j]);
        }
    }
    out
}

/// Parse a long-form map CSV back into a rectangular map.
pub fn fluxmap_from_csv(text: &str, origin: &str) -> Result<FluxMap> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == FLUXMAP_CSV_HEADER => {}
        Some((no, h)) => {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: no + 1,
                message: format!("header '{}' does not match '{FLUXMAP_CSV_HEADER}'", h.trim()),
            })
        }
        None => {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: 1,
                message: "empty file".into(),
            })
        }
    }

    let mut bias_a: Vec<f64> = Vec::new();
    let mut freq_ghz: Vec<f64> = Vec::new();
    let mut amplitude: Vec<Vec<f64>> = Vec::new();
    let mut first_row_freqs: Vec<f64> = Vec::new();

    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            let raw = cols.next().ok_or_else(|| Error::Parse {
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
        let b = next("bias")?;
        let f = next("freq")?;
        let a = next("amplitude")?;

        if bias_a.last() != Some(&b) {
            bias_a.push(b);
            amplitude.push(Vec::new());
            if bias_a.len() == 2 {
                first_row_freqs = freq_ghz.clone();
            }
        }
        if bias_a.len() == 1 {
            freq_ghz.push(f);
        } else {
            let j = amplitude.last().unwrap().len();
            if j >= first_row_freqs.len() || first_row_freqs[j] != f {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: no + 1,
                    message: "ragged map: frequency grid differs between bias rows".into(),
                });
            }
        }
        amplitude.last_mut().unwrap().push(a);
    }

    if bias_a.len() < 2 || freq_ghz.len() < 2 {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            message: "map needs at least a 2x2 grid".into(),
        });
    }
    if amplitude.iter().any(|row| row.len() != freq_ghz.len()) {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            message: "ragged map: rows have unequal lengths".into(),
        });
    }

    let branches = vec![Vec::new(); bias_a.len()];
    Ok(FluxMap {
        bias_a,
        freq_ghz,
        amplitude,
        branches,
        linewidth_ghz: None,
        noise_amplitude: None,
        warnings: Vec::new(),
    })
}
