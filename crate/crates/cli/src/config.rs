//! Run configurations. Each command reads one JSON object; every field has a
//! default and unknown keys are rejected.

use std::path::Path;

use biphoton_povm::grid::{gaussian_mode, hermite_gauss, make_grid, FrequencyGrid, ModeFamily, SpectralAmplitude};
use biphoton_povm::jsa::{CouplingChi, PhaseMatchSpec};
use biphoton_povm::teleport::Bandwidth;
use biphoton_povm::{Checked, Warning};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub center_s: f64,
    pub center_i: f64,
    pub span: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { center_s: 0.0, center_i: 0.0, span: 16.0, points: 128 }
    }
}

impl GridConfig {
    pub fn grids(&self) -> Result<(FrequencyGrid, FrequencyGrid), CliError> {
        Ok((make_grid(self.center_s, self.span, self.points)?, make_grid(self.center_i, self.span, self.points)?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum PhaseMatchConfig {
    Sinc {
        #[serde(default = "default_angle")]
        angle_deg: f64,
        #[serde(default = "one")]
        bandwidth: f64,
    },
    Gaussian {
        #[serde(default = "default_angle")]
        angle_deg: f64,
        #[serde(default = "one")]
        bandwidth: f64,
    },
    /// Gaussian profile in the difference frequency only.
    NuPrimeOnly {
        #[serde(default = "one")]
        width: f64,
    },
}

fn default_angle() -> f64 {
    45.0
}

fn one() -> f64 {
    1.0
}

impl Default for PhaseMatchConfig {
    fn default() -> Self {
        PhaseMatchConfig::Sinc { angle_deg: default_angle(), bandwidth: 1.0 }
    }
}

impl PhaseMatchConfig {
    pub fn build(&self) -> Result<PhaseMatchSpec, CliError> {
        Ok(match *self {
            PhaseMatchConfig::Sinc { angle_deg, bandwidth } => PhaseMatchSpec::sinc(angle_deg.to_radians(), bandwidth)?,
            PhaseMatchConfig::Gaussian { angle_deg, bandwidth } => {
                PhaseMatchSpec::gaussian(angle_deg.to_radians(), bandwidth)?
            }
            PhaseMatchConfig::NuPrimeOnly { width } => {
                if !(width > 0.0) {
                    return Err(CliError::Config(format!("phasematching width must be positive, got {width}")));
                }
                // Sampled well past the decay so interpolation never sees the edge.
                let g = make_grid(0.0, 40.0 * width.max(1.0), 4001)?;
                PhaseMatchSpec::nu_prime_only(gaussian_mode(0.0, width, &g)?.value)?
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChiConfig {
    pub magnitude: f64,
    pub phase: f64,
}

impl Default for ChiConfig {
    fn default() -> Self {
        ChiConfig { magnitude: 0.1, phase: 0.0 }
    }
}

impl ChiConfig {
    pub fn build(&self, warnings: &mut Vec<Warning>) -> Result<CouplingChi, CliError> {
        let Checked { value, warnings: w } = CouplingChi::new(self.magnitude, self.phase)?;
        warnings.extend(w);
        Ok(value)
    }
}

/// A single Hermite-Gauss mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeConfig {
    pub order: usize,
    pub center: f64,
    pub width: f64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        ModeConfig { order: 0, center: 0.0, width: 1.0 }
    }
}

impl ModeConfig {
    pub fn build(&self, grid: &FrequencyGrid, warnings: &mut Vec<Warning>) -> Result<SpectralAmplitude, CliError> {
        let Checked { value, warnings: w } = hermite_gauss(self.order, self.center, self.width, grid)?;
        warnings.extend(w);
        Ok(value)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    HermiteGauss,
    Bins,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    pub center: f64,
    /// Hermite-Gauss width, or bin width.
    pub width: f64,
    pub modes: usize,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig { kind: FamilyKind::HermiteGauss, center: 0.0, width: 1.0, modes: 4 }
    }
}

impl FamilyConfig {
    pub fn build(&self) -> Result<ModeFamily, CliError> {
        if self.modes == 0 {
            return Err(CliError::Config("family.modes must be at least 1".into()));
        }
        if !(self.width > 0.0) {
            return Err(CliError::Config(format!("family.width must be positive, got {}", self.width)));
        }
        Ok(match self.kind {
            FamilyKind::HermiteGauss => ModeFamily::hermite_gauss(self.center, self.width, self.modes),
            FamilyKind::Bins => ModeFamily::bins(self.center, self.width, self.modes),
        })
    }
}

/// Two-photon state used by `jsa` and `sfg`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    /// PDC pumped in a Hermite-Gauss mode.
    Pdc {
        #[serde(default)]
        pump: ModeConfig,
        #[serde(default)]
        phasematching: PhaseMatchConfig,
        #[serde(default)]
        chi: ChiConfig,
    },
    /// Correlated Gaussian with bandwidth `gamma` and correlation `alpha`.
    Gaussian {
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default)]
        alpha: f64,
    },
    /// Maximally anticorrelated ridge with difference bandwidth `gamma`.
    CwRidge {
        #[serde(default = "one")]
        gamma: f64,
    },
    /// `pulse(ω_s + ω_i) Φ(ω_s, ω_i)` with the command's phasematching.
    Separable {
        #[serde(default)]
        pulse: ModeConfig,
    },
    /// Normalized measurement JSA of a detection mode.
    Measurement {
        #[serde(default)]
        mode: ModeConfig,
    },
    /// Seeded complex noise under a Gaussian envelope of width `envelope`.
    Random {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_envelope")]
        envelope: f64,
    },
}

fn default_envelope() -> f64 {
    2.0
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Gaussian { gamma: 1.0, alpha: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JsaConfig {
    pub grid: GridConfig,
    pub source: SourceConfig,
    pub schmidt_cutoff: f64,
    /// Number of Schmidt coefficients listed in the report.
    pub report_coefficients: usize,
}

impl Default for JsaConfig {
    fn default() -> Self {
        JsaConfig {
            grid: GridConfig::default(),
            source: SourceConfig::default(),
            schmidt_cutoff: 1e-10,
            report_coefficients: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PovmConfig {
    pub grid: GridConfig,
    pub phasematching: PhaseMatchConfig,
    pub chi: ChiConfig,
    pub family: FamilyConfig,
    /// Mixing weights applied to the first elements of the family.
    pub mixing: Option<Vec<f64>>,
    /// Truncations for the completeness sweep; defaults to the family size.
    pub completeness_sweep: Option<Vec<usize>>,
    /// Build the dense retrodicted state of the mixed element and report
    /// its purity and negativity (at most 64 points per axis).
    pub dense: bool,
}

impl Default for PovmConfig {
    fn default() -> Self {
        PovmConfig {
            grid: GridConfig::default(),
            phasematching: PhaseMatchConfig::default(),
            chi: ChiConfig::default(),
            family: FamilyConfig::default(),
            mixing: None,
            completeness_sweep: None,
            dense: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TeleportMode {
    ClosedForm,
    Check,
    Sweep,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Panel {
    /// Ideal measurement, sweeping the source correlation.
    A,
    /// Equal bandwidths at fixed measurement correlation, sweeping the source's.
    B,
    /// Equal bandwidths at fixed source correlation, sweeping the measurement's.
    C,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub panels: Vec<Panel>,
    pub correlation: (f64, f64),
    pub sigma: (f64, f64),
    pub resolution: (usize, usize),
    /// Value of the correlation held fixed in panels b and c.
    pub fixed: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            panels: vec![Panel::A, Panel::B, Panel::C],
            correlation: (0.0, 1.0),
            sigma: (0.1, 1.5),
            resolution: (101, 101),
            fixed: 1.0,
        }
    }
}

/// A bandwidth given as a positive number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthValue(pub Bandwidth);

impl Serialize for BandwidthValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Bandwidth::Finite(v) => s.serialize_f64(v),
            Bandwidth::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BandwidthValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(BandwidthValue(Bandwidth::Finite(v))),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinite" | "Infinity") => {
                Ok(BandwidthValue(Bandwidth::Infinite))
            }
            Raw::Text(t) => Err(de::Error::custom(format!("expected a bandwidth or \"inf\", got \"{t}\""))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeleportConfig {
    pub mode: TeleportMode,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_s: BandwidthValue,
    pub gamma_m: BandwidthValue,
    pub gamma_c: f64,
    /// Grid points for the numerical pipeline.
    pub points: usize,
    pub sweep: SweepConfig,
}

impl Default for TeleportConfig {
    fn default() -> Self {
        TeleportConfig {
            mode: TeleportMode::Check,
            alpha: 1.0,
            beta: 1.0,
            gamma_s: BandwidthValue(Bandwidth::Finite(1.0)),
            gamma_m: BandwidthValue(Bandwidth::Infinite),
            gamma_c: 1.0,
            points: 256,
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SfgConfig {
    pub grid: GridConfig,
    pub phasematching: PhaseMatchConfig,
    pub chi: ChiConfig,
    pub input: SourceConfig,
    pub family: FamilyConfig,
}

impl Default for SfgConfig {
    fn default() -> Self {
        SfgConfig {
            grid: GridConfig::default(),
            phasematching: PhaseMatchConfig::default(),
            chi: ChiConfig::default(),
            input: SourceConfig::default(),
            family: FamilyConfig::default(),
        }
    }
}

/// Reads the config file (or an empty object) and applies `key=value`
/// overrides. Dotted keys address nested objects; values are parsed as JSON
/// and fall back to plain strings.
pub fn load_raw(path: Option<&Path>, overrides: &[String]) -> Result<Value, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("config {} is not valid JSON: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !root.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{item}'")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_path(&mut root, key, value)?;
    }
    Ok(root)
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key '{key}'")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("'{key}' descends into a non-object value")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("'{key}' descends into a non-object value")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn parse<T: for<'de> Deserialize<'de>>(raw: Value) -> Result<T, CliError> {
    serde_json::from_value(raw).map_err(|e| CliError::Config(e.to_string()))
}
