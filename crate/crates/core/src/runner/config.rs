//! Scenario configuration.
//!
//! TOML is the primary encoding; a document whose first non-blank character is
//! `{` is read as JSON with the same structure. Unknown keys are rejected.
//!
//! ```toml
//! scenario = "spectrum"          # empty | spectrum | predict | tune | sweep_separation | selftest
//!
//! [cavity]
//! length_m = 1.0
//! finesse = 100.0                # or reflectivity = 0.969
//! lossless = true                # or transmissivity = 0.031
//! gain_coupling = "dispersion_only"   # or "full"
//!
//! [medium]
//! length_m = 0.1
//! lambda_nm = 780.0
//! separation_mhz = 8.0
//! width_fwhm_mhz = 2.0
//! # amplitude_rad_s = 1.57 or gain_db_at_line = 0.8; neither = solve from tune.target_ng
//! loss_per_cm = 0.0005
//!
//! [scan]
//! span_mhz = 40.0                # optional
//! points = 2001
//!
//! [tune]
//! target_ng = "auto"             # or a number; auto = 1 − L/ℓ
//! width_scaling = false
//!
//! [sweep]
//! separations_mhz = [6.0, 8.0, 10.0, 12.0, 14.0]
//! retune_each = true
//!
//! [output]
//! path = "out.csv"
//! format = "csv"                 # or "json"
//! ```
//!
//! Every frequency in the document is an ordinary frequency in MHz; it is
//! converted to rad/s here and nowhere else.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::cavity::GainCoupling;
use crate::linewidth::reflectivity_from_finesse;
use crate::units::{mhz_to_rad_s, omega_from_wavelength};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Empty,
    Spectrum,
    Predict,
    Tune,
    SweepSeparation,
    Selftest,
}

impl Scenario {
    pub fn needs_medium(self) -> bool {
        !matches!(self, Scenario::Empty | Scenario::Selftest)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Empty => "empty",
            Scenario::Spectrum => "spectrum",
            Scenario::Predict => "predict",
            Scenario::Tune => "tune",
            Scenario::SweepSeparation => "sweep_separation",
            Scenario::Selftest => "selftest",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

// ---- document layout -------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<Scenario>,
    #[serde(default)]
    cavity: RawCavity,
    medium: Option<RawMedium>,
    #[serde(default)]
    scan: RawScan,
    #[serde(default)]
    tune: RawTune,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    length_m: Option<f64>,
    reflectivity: Option<f64>,
    finesse: Option<f64>,
    transmissivity: Option<f64>,
    lossless: Option<bool>,
    gain_coupling: Option<GainCoupling>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMedium {
    length_m: Option<f64>,
    lambda_nm: Option<f64>,
    separation_mhz: Option<f64>,
    width_fwhm_mhz: Option<f64>,
    amplitude_rad_s: Option<f64>,
    gain_db_at_line: Option<f64>,
    loss_per_cm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    span_mhz: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawTarget {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTune {
    target_ng: Option<RawTarget>,
    width_scaling: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    separations_mhz: Option<Vec<f64>>,
    retune_each: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<Format>,
}

// ---- resolved configuration ------------------------------------------------

pub const DEFAULT_CAVITY_LENGTH_M: f64 = 1.0;
pub const DEFAULT_FINESSE: f64 = 100.0;
pub const DEFAULT_MEDIUM_LENGTH_M: f64 = 0.1;
pub const DEFAULT_LAMBDA_NM: f64 = 780.0;
pub const DEFAULT_SEPARATION_MHZ: f64 = 8.0;
pub const DEFAULT_WIDTH_FWHM_MHZ: f64 = 2.0;
pub const DEFAULT_LOSS_PER_CM: f64 = 0.0005;
pub const DEFAULT_POINTS: usize = 2001;
pub const DEFAULT_SEPARATIONS_MHZ: [f64; 5] = [6.0, 8.0, 10.0, 12.0, 14.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavitySettings {
    pub length_m: f64,
    pub reflectivity: f64,
    pub transmissivity: f64,
    pub gain_coupling: GainCoupling,
}

/// Where the doublet amplitude comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeSource {
    /// rad/s
    Given(f64),
    GainDbAtLine(f64),
    /// Solved from the tune target.
    FromTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MediumSettings {
    pub length_m: f64,
    pub lambda_nm: f64,
    /// rad/s
    pub omega0: f64,
    /// Γ, rad/s
    pub gamma_sep: f64,
    /// HWHM W, rad/s
    pub width: f64,
    pub amplitude: AmplitudeSource,
    /// Amplitude loss α, 1/m.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSettings {
    /// rad/s; `None` picks a span from the scenario.
    pub span: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneSettings {
    /// `None` = white-light target `1 − L/ℓ`.
    pub target_ng: Option<f64>,
    pub width_scaling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSettings {
    /// rad/s
    pub separations: Vec<f64>,
    pub retune_each: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSettings {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub cavity: CavitySettings,
    /// Present for every scenario that uses a medium; missing sections take
    /// the defaults.
    pub medium: Option<MediumSettings>,
    pub scan: ScanSettings,
    pub tune: TuneSettings,
    pub sweep: SweepSettings,
    pub output: OutputSettings,
}

impl ScenarioConfig {
    /// Target group index, resolving `auto` against the cavity and medium
    /// lengths.
    pub fn target_ng(&self) -> Option<f64> {
        match (self.tune.target_ng, &self.medium) {
            (Some(v), _) => Some(v),
            (None, Some(m)) => Some(1.0 - self.cavity.length_m / m.length_m),
            (None, None) => None,
        }
    }
}

/// Parse and validate a configuration document. The document must name its
/// scenario.
pub fn load_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    load_config_as(text, None)
}

/// As [`load_config`], with `scenario` (when given) taking precedence over
/// the document's own `scenario` key.
pub fn load_config_as(text: &str, scenario: Option<Scenario>) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
    };
    let scenario = scenario
        .or(raw.scenario)
        .ok_or_else(|| invalid("scenario", "missing"))?;
    resolve(raw, scenario)
}

pub fn load_config_file(path: &std::path::Path, scenario: Option<Scenario>) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    load_config_as(&text, scenario)
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be a non-negative number, got {v}")))
    }
}

fn resolve(raw: RawConfig, scenario: Scenario) -> Result<ScenarioConfig, ConfigError> {
    let cavity = resolve_cavity(&raw.cavity)?;

    let medium = match (scenario.needs_medium(), raw.medium) {
        (true, m) => Some(resolve_medium(&m.unwrap_or_default())?),
        (false, Some(m)) => Some(resolve_medium(&m)?),
        (false, None) => None,
    };
    if let Some(m) = &medium {
        if m.length_m > cavity.length_m {
            return Err(invalid(
                "medium.length_m",
                format!("{} m exceeds the cavity length {} m", m.length_m, cavity.length_m),
            ));
        }
    }

    let span = raw
        .scan
        .span_mhz
        .map(|s| positive("scan.span_mhz", s).map(mhz_to_rad_s))
        .transpose()?;
    let points = raw.scan.points.unwrap_or(DEFAULT_POINTS);
    if points < 3 {
        return Err(invalid("scan.points", format!("need at least 3, got {points}")));
    }

    let target_ng = match raw.tune.target_ng {
        None => None,
        Some(RawTarget::Keyword(k)) if k == "auto" => None,
        Some(RawTarget::Keyword(k)) => {
            return Err(invalid("tune.target_ng", format!("expected a number or \"auto\", got \"{k}\"")))
        }
        Some(RawTarget::Value(v)) if v.is_finite() => Some(v),
        Some(RawTarget::Value(v)) => return Err(invalid("tune.target_ng", format!("not finite: {v}"))),
    };
    let width_scaling = raw.tune.width_scaling.unwrap_or(false);
    if width_scaling && scenario == Scenario::Tune {
        if let Some(m) = &medium {
            if m.amplitude == AmplitudeSource::FromTarget {
                return Err(invalid(
                    "tune.width_scaling",
                    "needs a reference amplitude: set medium.amplitude_rad_s or medium.gain_db_at_line",
                ));
            }
        }
    }

    let separations_mhz = raw.sweep.separations_mhz.unwrap_or_else(|| DEFAULT_SEPARATIONS_MHZ.to_vec());
    if scenario == Scenario::SweepSeparation && separations_mhz.is_empty() {
        return Err(invalid("sweep.separations_mhz", "must not be empty"));
    }
    let separations = separations_mhz
        .iter()
        .map(|&s| positive("sweep.separations_mhz", s).map(mhz_to_rad_s))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ScenarioConfig {
        scenario,
        cavity,
        medium,
        scan: ScanSettings { span, points },
        tune: TuneSettings { target_ng, width_scaling },
        sweep: SweepSettings { separations, retune_each: raw.sweep.retune_each.unwrap_or(true) },
        output: OutputSettings { path: raw.output.path, format: raw.output.format.unwrap_or_default() },
    })
}

fn resolve_cavity(raw: &RawCavity) -> Result<CavitySettings, ConfigError> {
    let length_m = positive("cavity.length_m", raw.length_m.unwrap_or(DEFAULT_CAVITY_LENGTH_M))?;
    let reflectivity = match (raw.reflectivity, raw.finesse) {
        (Some(_), Some(_)) => {
            return Err(invalid("cavity.reflectivity", "give either reflectivity or finesse, not both"))
        }
        (Some(r), None) => r,
        (None, f) => {
            let f = positive("cavity.finesse", f.unwrap_or(DEFAULT_FINESSE))?;
            reflectivity_from_finesse(f)
        }
    };
    // The linewidth closed forms need (1 − R)/(2√R) < 1.
    let r_min = 3.0 - 2.0 * 2f64.sqrt();
    if !(reflectivity > r_min && reflectivity < 1.0) {
        return Err(invalid(
            "cavity.reflectivity",
            format!("must lie in ({r_min:.4}, 1), got {reflectivity}"),
        ));
    }
    let transmissivity = match (raw.transmissivity, raw.lossless) {
        (Some(_), Some(_)) => {
            return Err(invalid("cavity.transmissivity", "give either transmissivity or lossless, not both"))
        }
        (Some(t), None) => {
            if !(t > 0.0 && t <= 1.0 - reflectivity) {
                return Err(invalid(
                    "cavity.transmissivity",
                    format!("must lie in (0, 1 − R = {}], got {t}", 1.0 - reflectivity),
                ));
            }
            t
        }
        (None, Some(false)) => {
            return Err(invalid("cavity.lossless", "false needs an explicit transmissivity"))
        }
        (None, _) => 1.0 - reflectivity,
    };
    Ok(CavitySettings {
        length_m,
        reflectivity,
        transmissivity,
        gain_coupling: raw.gain_coupling.unwrap_or_default(),
    })
}

fn resolve_medium(raw: &RawMedium) -> Result<MediumSettings, ConfigError> {
    let length_m = positive("medium.length_m", raw.length_m.unwrap_or(DEFAULT_MEDIUM_LENGTH_M))?;
    let lambda_nm = positive("medium.lambda_nm", raw.lambda_nm.unwrap_or(DEFAULT_LAMBDA_NM))?;
    let sep = positive("medium.separation_mhz", raw.separation_mhz.unwrap_or(DEFAULT_SEPARATION_MHZ))?;
    let fwhm = positive("medium.width_fwhm_mhz", raw.width_fwhm_mhz.unwrap_or(DEFAULT_WIDTH_FWHM_MHZ))?;
    let loss = non_negative("medium.loss_per_cm", raw.loss_per_cm.unwrap_or(DEFAULT_LOSS_PER_CM))?;
    let amplitude = match (raw.amplitude_rad_s, raw.gain_db_at_line) {
        (Some(_), Some(_)) => {
            return Err(invalid("medium.amplitude_rad_s", "give either amplitude_rad_s or gain_db_at_line, not both"))
        }
        (Some(m), None) => AmplitudeSource::Given(non_negative("medium.amplitude_rad_s", m)?),
        (None, Some(db)) => AmplitudeSource::GainDbAtLine(non_negative("medium.gain_db_at_line", db)?),
        (None, None) => AmplitudeSource::FromTarget,
    };
    Ok(MediumSettings {
        length_m,
        lambda_nm,
        omega0: omega_from_wavelength(lambda_nm * 1e-9),
        gamma_sep: mhz_to_rad_s(sep),
        width: mhz_to_rad_s(0.5 * fwhm),
        amplitude,
        // per cm → per m
        alpha: loss * 100.0,
    })
}
