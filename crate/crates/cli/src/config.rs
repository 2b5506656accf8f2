//! Scenario file schema (TOML) and validation.
//!
//! Lengths are either bare numbers in meters or strings with a unit suffix
//! (`m`, `cm`, `mm`, `um`, `nm`). Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use thiserror::Error;

#[derive(Error, Debug)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// A length in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Length(pub f64);

pub fn parse_length(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let split = t.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E').unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| format!("bad length {text:?}"))?;
    let scale = match unit.trim() {
        "" | "m" => 1.0,
        "cm" => 1e-2,
        "mm" => 1e-3,
        "um" | "µm" => 1e-6,
        "nm" => 1e-9,
        other => return Err(format!("unknown length unit {other:?} in {text:?}")),
    };
    Ok(value * scale)
}

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Length;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a length in meters or a string such as \"5 mm\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Length, E> {
                Ok(Length(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Length, E> {
                Ok(Length(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Length, E> {
                Ok(Length(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Length, E> {
                parse_length(v).map(Length).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub beam: BeamConfig,
    pub array: ArrayConfig,
    pub setup: Option<SetupConfig>,
    #[serde(default)]
    pub targets: Vec<TargetConfig>,
    pub receiver: Option<ReceiverConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    #[serde(default = "one")]
    pub amplitude: f64,
    pub waist: Length,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub center: Option<[Length; 2]>,
    #[serde(default)]
    pub direction: Option<[f64; 3]>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Ma,
    Opa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Illumination {
    #[default]
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub kind: ArrayKind,
    pub rows: usize,
    pub cols: usize,
    // MA
    pub side: Option<Length>,
    pub gap: Option<Length>,
    // OPA
    pub pitch: Option<Length>,
    pub active: Option<Length>,
    pub fill_factor: Option<f64>,
    #[serde(default)]
    pub gap_phase: f64,
    pub samples_per_pitch: Option<usize>,
    pub padding: Option<usize>,
    #[serde(default)]
    pub illumination: Illumination,
    /// Phase mask file (relative to the config file) used by OPA `powermap`
    /// and `pointing-sweep`; flat phase if absent.
    pub phase_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupConfig {
    pub wavelength: Length,
    pub focal_length: Length,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// `[x, y]` on the focal plane (OPA) or `[x, y, z]` (MA).
    pub center: Vec<Length>,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub radius: Option<Length>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    #[serde(default)]
    pub center: Option<[Length; 2]>,
    pub radius: Length,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: Option<Length>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    pub spot_side: Option<Length>,
}

fn default_resolution() -> usize {
    oirs_core::DEFAULT_MAP_RESOLUTION
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: None, resolution: default_resolution(), spot_side: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ZeroOrderMode {
    #[default]
    Ignore,
    Superimpose,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitialPhaseMode {
    #[default]
    Random,
    Flat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_ratio_tol")]
    pub ratio_tol: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_gs_iterations")]
    pub gs_iterations: usize,
    #[serde(default = "default_gs_tol")]
    pub gs_tol: f64,
    #[serde(default)]
    pub zero_order: ZeroOrderMode,
    pub block_radius: Option<Length>,
    #[serde(default)]
    pub initial_phase: InitialPhaseMode,
    pub quantization: Option<u32>,
    #[serde(default = "default_true")]
    pub region_feedback: bool,
    /// Target energy as a share of the deliverable budget.
    #[serde(default = "default_energy_fraction")]
    pub target_energy_fraction: f64,
    pub threads: Option<usize>,
}

fn default_ratio_tol() -> f64 {
    0.05
}
fn default_restarts() -> usize {
    32
}
fn default_gs_iterations() -> usize {
    200
}
fn default_gs_tol() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}
fn default_energy_fraction() -> f64 {
    0.8
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ratio_tol: default_ratio_tol(),
            restarts: default_restarts(),
            seed: 0,
            gs_iterations: default_gs_iterations(),
            gs_tol: default_gs_tol(),
            zero_order: ZeroOrderMode::Ignore,
            block_radius: None,
            initial_phase: InitialPhaseMode::Random,
            quantization: None,
            region_feedback: true,
            target_energy_fraction: default_energy_fraction(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Explicit offsets `[[dx, dy], ...]`.
    #[serde(default)]
    pub offsets: Vec<[Length; 2]>,
    /// Or a uniform sweep along x from `-max_offset` to `max_offset`.
    pub max_offset: Option<Length>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Jitter standard deviation per axis for fading samples.
    pub sigma: Option<Length>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_steps() -> usize {
    21
}
fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite (got {v})")))
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| invalid(e.message().replace('\n', " ")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| invalid("config is not UTF-8"))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Range checks; every field is checked before any computation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let b = &self.beam;
        positive("beam.amplitude", b.amplitude)?;
        positive("beam.waist", b.waist.0)?;
        positive("beam.kappa", b.kappa)?;
        if let Some(d) = b.direction {
            if d.iter().all(|v| *v == 0.0) || d.iter().any(|v| !v.is_finite()) {
                return Err(invalid("beam.direction must be a finite non-zero vector"));
            }
        }

        let a = &self.array;
        if a.rows == 0 || a.cols == 0 {
            return Err(invalid("array.rows and array.cols must be at least 1"));
        }
        match a.kind {
            ArrayKind::Ma => {
                positive("array.side", a.side.ok_or_else(|| invalid("array.side is required for kind = \"ma\""))?.0)?;
                let gap = a.gap.map_or(0.0, |g| g.0);
                if !(gap >= 0.0 && gap.is_finite()) {
                    return Err(invalid("array.gap must be non-negative"));
                }
                for (k, t) in self.targets.iter().enumerate() {
                    if t.center.len() != 3 {
                        return Err(invalid(format!("targets[{k}].center needs [x, y, z] for an MA array")));
                    }
                }
            }
            ArrayKind::Opa => {
                let pitch = a.pitch.ok_or_else(|| invalid("array.pitch is required for kind = \"opa\""))?.0;
                positive("array.pitch", pitch)?;
                match (a.active, a.fill_factor) {
                    (Some(_), Some(_)) => return Err(invalid("give array.active or array.fill_factor, not both")),
                    (Some(d), None) if !(d.0 > 0.0 && d.0 <= pitch) => {
                        return Err(invalid("array.active must lie in (0, pitch]"))
                    }
                    (None, Some(f)) if !(f > 0.0 && f <= 1.0) => {
                        return Err(invalid("array.fill_factor must lie in (0, 1]"))
                    }
                    _ => {}
                }
                if a.samples_per_pitch.is_some_and(|s| s < 4) {
                    return Err(invalid("array.samples_per_pitch must be at least 4"));
                }
                if a.padding == Some(0) {
                    return Err(invalid("array.padding must be at least 1"));
                }
                let setup = self.setup.as_ref().ok_or_else(|| invalid("[setup] is required for kind = \"opa\""))?;
                positive("setup.wavelength", setup.wavelength.0)?;
                positive("setup.focal_length", setup.focal_length.0)?;
                for (k, t) in self.targets.iter().enumerate() {
                    if t.center.len() != 2 {
                        return Err(invalid(format!("targets[{k}].center needs [x, y] for an OPA array")));
                    }
                }
            }
        }
        if !a.gap_phase.is_finite() {
            return Err(invalid("array.gap_phase must be finite"));
        }

        for (k, t) in self.targets.iter().enumerate() {
            positive(&format!("targets[{k}].weight"), t.weight)?;
            if t.center.iter().any(|c| !c.0.is_finite()) {
                return Err(invalid(format!("targets[{k}].center must be finite")));
            }
            if let Some(r) = t.radius {
                positive(&format!("targets[{k}].radius"), r.0)?;
            }
        }
        if let Some(r) = &self.receiver {
            positive("receiver.radius", r.radius.0)?;
        }
        if let Some(h) = self.grid.half_width {
            positive("grid.half_width", h.0)?;
        }
        if self.grid.resolution == 0 {
            return Err(invalid("grid.resolution must be at least 1"));
        }
        if let Some(s) = self.grid.spot_side {
            positive("grid.spot_side", s.0)?;
        }

        let s = &self.solver;
        if !(s.ratio_tol > 0.0 && s.ratio_tol < 0.5) {
            return Err(invalid("solver.ratio_tol must lie in (0, 0.5)"));
        }
        if s.restarts == 0 {
            return Err(invalid("solver.restarts must be at least 1"));
        }
        if s.gs_iterations == 0 {
            return Err(invalid("solver.gs_iterations must be at least 1"));
        }
        if !(s.gs_tol >= 0.0 && s.gs_tol.is_finite()) {
            return Err(invalid("solver.gs_tol must be non-negative"));
        }
        if s.zero_order == ZeroOrderMode::Block {
            positive("solver.block_radius", s.block_radius.ok_or_else(|| invalid("solver.block_radius is required for zero_order = \"block\""))?.0)?;
        }
        if s.quantization == Some(0) {
            return Err(invalid("solver.quantization must be at least 1"));
        }
        if !(s.target_energy_fraction > 0.0 && s.target_energy_fraction <= 1.0) {
            return Err(invalid("solver.target_energy_fraction must lie in (0, 1]"));
        }
        if s.threads == Some(0) {
            return Err(invalid("solver.threads must be at least 1"));
        }

        if let Some(sw) = &self.sweep {
            if let Some(m) = sw.max_offset {
                if !(m.0 >= 0.0 && m.0.is_finite()) {
                    return Err(invalid("sweep.max_offset must be non-negative"));
                }
                if sw.steps < 1 {
                    return Err(invalid("sweep.steps must be at least 1"));
                }
            }
            if let Some(sig) = sw.sigma {
                if !(sig.0 >= 0.0 && sig.0.is_finite()) {
                    return Err(invalid("sweep.sigma must be non-negative"));
                }
            }
            if sw.samples == 0 {
                return Err(invalid("sweep.samples must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_with_units() {
        assert_eq!(parse_length("5 mm").unwrap(), 5e-3);
        assert_eq!(parse_length("2cm").unwrap(), 2e-2);
        assert_eq!(parse_length("532nm").unwrap(), 532e-9);
        assert_eq!(parse_length("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_length("1.5e-2 m").unwrap(), 1.5e-2);
        assert!(parse_length("3 ft").is_err());
        assert!(parse_length("cm").is_err());
    }

    const MA: &str = r#"
[beam]
waist = "6 cm"
[array]
kind = "ma"
rows = 2
cols = 2
side = "4 cm"
gap = "2 mm"
[[targets]]
center = [0, 0, "25 cm"]
"#;

    #[test]
    fn parses_minimal_ma() {
        let s = Scenario::parse(MA).unwrap();
        assert_eq!(s.beam.waist.0, 0.06);
        assert_eq!(s.targets[0].center[2].0, 0.25);
        assert_eq!(s.solver.ratio_tol, 0.05);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(Scenario::parse(&MA.replace("waist", "wasit")).is_err());
        assert!(Scenario::parse(&format!("{MA}\n[solver]\nratio_tol = 0.7\n")).is_err());
        assert!(Scenario::parse(&MA.replace("\"4 cm\"", "-1")).is_err());
        assert!(Scenario::parse(&MA.replace("[0, 0, \"25 cm\"]", "[0, 0]")).is_err());
    }
}
