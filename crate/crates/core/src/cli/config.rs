//! Run configuration: one JSON document per invocation, holding a units
//! block, an output block and one parameter block per command.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::output::{read_pulse, Format};
use crate::analytic::bessel::J0_FIRST_ZERO;
use crate::dynamics::{OscillatingSweep, PulseWaveform, Unitary2, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::experiments::{AdiabaticScanConfig, QslConfig, DEFAULT_WINDOWED_SPAN};
use crate::optim::{GrapeConfig, OscillationParams, SimplexConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EnergyUnit {
    #[default]
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "GHz")]
    Ghz,
}

impl EnergyUnit {
    pub fn time_unit(self) -> &'static str {
        match self {
            EnergyUnit::Delta => "1/delta",
            EnergyUnit::Ghz => "ns",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default)]
    pub energy_unit: EnergyUnit,
    /// Derived from `energy_unit`; may be given only if it agrees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<String>,
}

impl Units {
    pub fn resolve(&mut self) -> Result<()> {
        let derived = self.energy_unit.time_unit();
        match &self.time_unit {
            Some(t) if t != derived => Err(Error::validation(
                "units.time_unit",
                format!("`{t}` is inconsistent with the energy unit; expected `{derived}`"),
            )),
            _ => {
                self.time_unit = Some(derived.into());
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("."),
            formats: vec![Format::Csv, Format::Svg],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize_nm: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grape: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_qsl: Option<Value>,
    /// Directory that relative file references are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::validation("config", e.to_string()))?;
        let mut cfg: RunConfig = typed("", value)?;
        cfg.units.resolve()?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    /// The block for `name` as written.
    pub fn raw_section(&self, name: &str) -> Option<&Value> {
        match name {
            "simulate" => self.simulate.as_ref(),
            "design" => self.design.as_ref(),
            "optimize_nm" => self.optimize_nm.as_ref(),
            "grape" => self.grape.as_ref(),
            "scan" => self.scan.as_ref(),
            "fit_qsl" => self.fit_qsl.as_ref(),
            _ => None,
        }
    }

    /// Parses the block for `name`, inlining pixelated pulses given by file.
    pub fn section<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let mut value = self
            .raw_section(name)
            .cloned()
            .ok_or_else(|| Error::validation(name, "missing parameter block for this command"))?;
        if let Some(pulse) = value.get_mut("pulse") {
            inline_pulse_file(pulse, &self.base_dir, &format!("{name}.pulse"))?;
        }
        typed(name, value)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Deserializes with the failing field's dotted path as the error field.
fn typed<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let mut field = if path == "." { String::new() } else { path };
        if let Some(rest) = message.strip_prefix("missing field `") {
            let missing = rest.split('`').next().unwrap_or_default();
            field = join(&field, missing);
        }
        Error::validation(join(prefix, &field).trim_matches('.'), message)
    })
}

fn join(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.into(),
        (_, true) => a.into(),
        _ => format!("{a}.{b}"),
    }
}

/// `{"kind": "pixelated", "file": "pulse.csv"}` becomes an inline pulse.
fn inline_pulse_file(pulse: &mut Value, base: &Path, field: &str) -> Result<()> {
    let Some(obj) = pulse.as_object() else {
        return Ok(());
    };
    if obj.is_empty() {
        return Err(Error::validation(field, "pulse block is empty"));
    }
    let Some(file) = obj.get("file") else {
        return Ok(());
    };
    let file = file
        .as_str()
        .ok_or_else(|| Error::validation(format!("{field}.file"), "must be a path string"))?;
    if obj.get("kind").and_then(Value::as_str) != Some("pixelated") {
        return Err(Error::validation(format!("{field}.file"), "only pixelated pulses load from a file"));
    }
    let path = if Path::new(file).is_absolute() {
        PathBuf::from(file)
    } else {
        base.join(file)
    };
    let px = read_pulse(&path)?;
    *pulse = serde_json::to_value(PulseWaveform::Pixelated(px)).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(())
}

fn one() -> f64 {
    1.0
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// Propagation interval: explicit ends, a symmetric `duration`, or the
/// pulse's own support.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Interval {
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub duration: Option<f64>,
}

impl Interval {
    pub fn resolve(&self, pulse: &PulseWaveform, section: &str) -> Result<(f64, f64)> {
        let (a, b) = match (self.t_start, self.t_end, self.duration) {
            (Some(a), Some(b), _) => (a, b),
            (None, None, Some(d)) => (-0.5 * d, 0.5 * d),
            (None, None, None) => match pulse {
                PulseWaveform::ErfTan(p) => (-0.5 * p.duration, 0.5 * p.duration),
                PulseWaveform::Pixelated(p) => (p.start, p.end()),
                PulseWaveform::LinearOscillating(p) if p.window.is_some() => {
                    (-0.5 * DEFAULT_WINDOWED_SPAN, 0.5 * DEFAULT_WINDOWED_SPAN)
                }
                PulseWaveform::LinearOscillating(_) => {
                    return Err(Error::validation(
                        format!("{section}.duration"),
                        "an unwindowed sweep needs `duration` or `t_start` and `t_end`",
                    ))
                }
            },
            _ => {
                return Err(Error::validation(
                    format!("{section}.t_start"),
                    "give both `t_start` and `t_end`, or `duration` alone",
                ))
            }
        };
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::validation(format!("{section}.t_end"), format!("interval [{a}, {b}] is empty")));
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Identity,
    SigmaX,
    SigmaY,
    SigmaZ,
    Hadamard,
}

impl Target {
    pub fn unitary(self) -> Unitary2 {
        match self {
            Target::Identity => Unitary2::identity(),
            Target::SigmaX => Unitary2::sigma_x(),
            Target::SigmaY => Unitary2::sigma_y(),
            Target::SigmaZ => Unitary2::sigma_z(),
            Target::Hadamard => Unitary2::hadamard(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "one")]
    pub delta: f64,
    pub pulse: PulseWaveform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Adds the gate fidelity against this target to the results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
}

impl SimulateConfig {
    pub fn interval(&self) -> Interval {
        Interval {
            t_start: self.t_start,
            t_end: self.t_end,
            duration: self.duration,
        }
    }
}

/// Uniform pixelation written as `pulse.csv` for analytic pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseExport {
    pub min_pixels: usize,
    pub max_pixels: usize,
    /// Doubling stops once the pixelated survival error is this close to
    /// the continuous one.
    pub tolerance: f64,
}

impl Default for PulseExport {
    fn default() -> Self {
        PulseExport {
            min_pixels: 4096,
            max_pixels: 1 << 20,
            tolerance: 1e-7,
        }
    }
}

fn windowed_span() -> f64 {
    DEFAULT_WINDOWED_SPAN
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "one")]
    pub delta: f64,
    pub v: f64,
    pub omega: f64,
    pub switching: f64,
    #[serde(default = "windowed_span")]
    pub span: f64,
    #[serde(default)]
    pub export: PulseExport,
}

fn search_phase() -> f64 {
    0.2
}

fn score_phase() -> f64 {
    crate::dynamics::DEFAULT_MAX_STEP_PHASE
}

/// The designed sweep at `v = 8`, `omega = 50` with `lambda` on the first
/// zero of `J0`, without its window.
pub fn default_nm_start() -> OscillationParams {
    OscillationParams {
        v: 8.0,
        lambda: J0_FIRST_ZERO * 50.0,
        omega: 50.0,
        phi: 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeNmConfig {
    #[serde(default = "one")]
    pub delta: f64,
    pub duration: f64,
    #[serde(default = "default_nm_start")]
    pub initial: OscillationParams,
    #[serde(default)]
    pub simplex: SimplexConfig,
    /// Step phase used inside the search.
    #[serde(default = "search_phase")]
    pub search_step_phase: f64,
    /// Step phase used to score the returned optimum.
    #[serde(default = "score_phase")]
    pub score_step_phase: f64,
    #[serde(default)]
    pub export: PulseExport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrapeCommandConfig {
    #[serde(default = "one")]
    pub delta: f64,
    /// Starting pulse; analytic pulses are pixelated onto the interval.
    pub pulse: PulseWaveform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub target: Target,
    #[serde(default)]
    pub config: GrapeConfig,
}

impl GrapeCommandConfig {
    pub fn interval(&self) -> Interval {
        Interval {
            t_start: self.t_start,
            t_end: self.t_end,
            duration: self.duration,
        }
    }
}

fn default_phase_points() -> usize {
    64
}

fn default_grid_points() -> usize {
    21
}

fn default_relative_span() -> f64 {
    0.05
}

fn default_scan_delta() -> f64 {
    0.04
}

fn default_scan_points() -> usize {
    20
}

/// Windowed sweep given directly or through the design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignParams {
    pub v: f64,
    pub omega: f64,
    pub switching: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanConfig {
    /// Survival error against drive phase.
    Phase {
        #[serde(default = "one")]
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sweep: Option<OscillatingSweep>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        design: Option<DesignParams>,
        #[serde(default = "default_phase_points")]
        points: usize,
        #[serde(default = "windowed_span")]
        span: f64,
    },
    /// `log10` survival error on a `(v, omega)` grid.
    Robustness {
        #[serde(default = "one")]
        delta: f64,
        optimum: OscillationParams,
        duration: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v_grid: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_grid: Option<Vec<f64>>,
        /// Default grids cover `(1 +/- relative_span)` times the optimum.
        #[serde(default = "default_relative_span")]
        relative_span: f64,
        #[serde(default = "default_grid_points")]
        points: usize,
    },
    /// Erf-tan seeds on an `(eps0, T)` grid, optionally after GRAPE.
    Adiabatic {
        #[serde(default = "default_scan_delta")]
        delta: f64,
        #[serde(default)]
        optimize: bool,
        #[serde(default = "default_scan_points")]
        points: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps0_grid: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_grid: Option<Vec<f64>>,
        #[serde(default)]
        config: AdiabaticScanConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QslEstimate {
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub config: QslConfig,
}

/// Exactly one data source: inline pairs, a CSV file, or an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitQslConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<(f64, f64)>>,
    /// Columns `delta` and `t_qsl`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<QslEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fix_t0: Option<f64>,
}
