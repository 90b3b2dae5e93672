//! Versioned run configuration.

use std::path::{Path, PathBuf};

use biphoton::efficiency::LossBudget;
use biphoton::spectrometer::DcfSpec;
use biphoton::{CrystalSpec, DispersionRegistry, FilterSpec, FrequencyGrid, PumpSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// The shipped default profile.
pub const DEFAULT_PROFILE: &str = include_str!("../../../profiles/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Extra Sellmeier sets, added to the built-in registry. Relative paths
    /// resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion_file: Option<PathBuf>,
    pub crystal: CrystalSection,
    #[serde(default = "PumpSpec::default_ti_sapphire")]
    pub pump: PumpSpec,
    #[serde(default)]
    pub grid: FrequencyGrid,
    #[serde(default, skip_serializing_if = "FilterSection::is_empty")]
    pub filters: FilterSection,
    #[serde(default)]
    pub spectrometer: SpectrometerSection,
    #[serde(default)]
    pub hom: HomSection,
    #[serde(default)]
    pub tomography: TomographySection,
    #[serde(default)]
    pub efficiency: EfficiencySection,
    #[serde(default)]
    pub seeds: Seeds,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub length_mm: f64,
    pub poling_period_um: f64,
    #[serde(default = "room_temperature")]
    pub temperature_c: f64,
    #[serde(default = "ktp_y")]
    pub pump_axis: String,
    #[serde(default = "ktp_z")]
    pub signal_axis: String,
    #[serde(default = "ktp_y")]
    pub idler_axis: String,
}

fn room_temperature() -> f64 {
    20.0
}

fn ktp_y() -> String {
    biphoton::dispersion::KTP_Y.into()
}

fn ktp_z() -> String {
    biphoton::dispersion::KTP_Z.into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<FilterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idler: Option<FilterSpec>,
}

impl FilterSection {
    pub fn is_empty(&self) -> bool {
        self.signal.is_none() && self.idler.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrometerSection {
    pub signal_dcf: DcfSpec,
    pub idler_dcf: DcfSpec,
    pub bin_size_ns: f64,
    pub pairs: u64,
}

impl Default for SpectrometerSection {
    fn default() -> Self {
        SpectrometerSection {
            signal_dcf: DcfSpec::preset_signal(),
            idler_dcf: DcfSpec::preset_idler(),
            bin_size_ns: biphoton::spectrometer::DEFAULT_BIN_SIZE_NS,
            pairs: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomSection {
    pub delay_start_fs: f64,
    pub delay_stop_fs: f64,
    pub delay_step_fs: f64,
    /// Pair emission probability per pulse for the multi-pair bound.
    pub pair_probability: f64,
}

impl Default for HomSection {
    fn default() -> Self {
        HomSection {
            delay_start_fs: -3000.0,
            delay_stop_fs: 3000.0,
            delay_step_fs: 50.0,
            pair_probability: 0.0015,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub depolarization: f64,
    pub amplitude_imbalance: f64,
    pub phase_error: f64,
    pub mean_counts: u64,
}

impl Default for TomographySection {
    fn default() -> Self {
        TomographySection {
            depolarization: 0.028,
            amplitude_imbalance: 0.0,
            phase_error: 0.0,
            mean_counts: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EfficiencySection {
    pub pair_rate_hz: f64,
    pub integration_s: f64,
    pub budget: LossBudget,
}

impl Default for EfficiencySection {
    fn default() -> Self {
        EfficiencySection {
            pair_rate_hz: 1e5,
            integration_s: 10.0,
            budget: LossBudget::default(),
        }
    }
}

/// Every random stream is derived from `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub base: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { base: 20150301 }
    }
}

/// Randomized pipeline stages, each with its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Spectrometer,
    Tomography,
    Efficiency,
}

impl Seeds {
    pub fn for_stream(&self, stream: Stream) -> u64 {
        let offset = match stream {
            Stream::Spectrometer => 0,
            Stream::Tomography => 1,
            Stream::Efficiency => 2,
        };
        self.base.wrapping_add(offset)
    }
}

/// A validated configuration with its resolved dispersion registry.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub registry: DispersionRegistry,
    /// Hex SHA-256 of the canonical config text and the dispersion file
    /// bytes, if any.
    pub digest: String,
}

impl LoadedConfig {
    pub fn crystal(&self) -> Result<CrystalSpec, CliError> {
        let c = &self.config.crystal;
        let axes = self
            .registry
            .axes(&c.pump_axis, &c.signal_axis, &c.idler_axis)
            .map_err(|e| CliError::invalid("crystal", e.to_string()))?;
        CrystalSpec::new(c.length_mm, c.poling_period_um, c.temperature_c, axes)
            .map_err(|e| CliError::invalid("crystal", e.to_string()))
    }
}

fn parse(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        CliError::Parse {
            origin: origin.to_string(),
            line,
            message: e.message().to_string(),
        }
    })?;
    if cfg.version != CONFIG_VERSION {
        return Err(CliError::invalid(
            "version",
            format!("unsupported config version {} (expected {CONFIG_VERSION})", cfg.version),
        ));
    }
    Ok(cfg)
}

/// Reads and validates a config file. `dispersion_override` replaces the
/// file's `dispersion_file` entry.
pub fn load_config(path: &Path, dispersion_override: Option<&Path>) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut cfg = parse(&text, &path.display().to_string())?;
    if let Some(p) = dispersion_override {
        cfg.dispersion_file = Some(p.to_path_buf());
    } else if let Some(p) = &cfg.dispersion_file {
        if p.is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.dispersion_file = Some(base.join(p));
        }
    }
    finish(cfg)
}

/// The shipped default profile, optionally with extra dispersion sets.
pub fn default_config(dispersion_override: Option<&Path>) -> Result<LoadedConfig, CliError> {
    let mut cfg = parse(DEFAULT_PROFILE, "default profile")?;
    cfg.dispersion_file = dispersion_override.map(Path::to_path_buf);
    finish(cfg)
}

/// Validates an in-memory config and resolves its registry.
pub fn finish(config: RunConfig) -> Result<LoadedConfig, CliError> {
    let mut registry = DispersionRegistry::builtin();
    let mut extra = Vec::new();
    if let Some(p) = &config.dispersion_file {
        extra = std::fs::read(p).map_err(|e| CliError::Io {
            path: p.clone(),
            message: e.to_string(),
        })?;
        let text = String::from_utf8(extra.clone())
            .map_err(|_| CliError::invalid("dispersion_file", format!("{} is not UTF-8", p.display())))?;
        let file = DispersionRegistry::from_toml_str(&text)
            .map_err(|e| CliError::invalid("dispersion_file", format!("{}: {e}", p.display())))?;
        for name in file.names() {
            let set = file.get(name).expect("listed name").clone();
            registry
                .register(set)
                .map_err(|e| CliError::invalid("dispersion_file", e.to_string()))?;
        }
    }
    validate(&config)?;
    let mut hasher = Sha256::new();
    hasher.update(save_config_string(&config).as_bytes());
    hasher.update(&extra);
    let loaded = LoadedConfig {
        config,
        registry,
        digest: hex::encode(hasher.finalize()),
    };
    loaded.crystal()?;
    Ok(loaded)
}

fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let c = &cfg.crystal;
    if !(c.length_mm.is_finite() && c.length_mm > 0.0) {
        return Err(CliError::invalid("crystal.length_mm", format!("must be positive, got {}", c.length_mm)));
    }
    if !(c.poling_period_um > 0.0) {
        return Err(CliError::invalid(
            "crystal.poling_period_um",
            format!("must be positive, got {}", c.poling_period_um),
        ));
    }
    cfg.pump.validate().map_err(|e| CliError::invalid("pump", e.to_string()))?;
    cfg.grid.validate().map_err(|e| CliError::invalid("grid", e.to_string()))?;
    if let Some(f) = &cfg.filters.signal {
        f.validate().map_err(|e| CliError::invalid("filters.signal", e.to_string()))?;
    }
    if let Some(f) = &cfg.filters.idler {
        f.validate().map_err(|e| CliError::invalid("filters.idler", e.to_string()))?;
    }
    let s = &cfg.spectrometer;
    s.signal_dcf
        .validate()
        .map_err(|e| CliError::invalid("spectrometer.signal_dcf", e.to_string()))?;
    s.idler_dcf
        .validate()
        .map_err(|e| CliError::invalid("spectrometer.idler_dcf", e.to_string()))?;
    if !(s.bin_size_ns.is_finite() && s.bin_size_ns > 0.0) {
        return Err(CliError::invalid("spectrometer.bin_size_ns", format!("must be positive, got {}", s.bin_size_ns)));
    }
    if s.pairs == 0 {
        return Err(CliError::invalid("spectrometer.pairs", "must be at least 1"));
    }
    let h = &cfg.hom;
    delay_axis(h.delay_start_fs, h.delay_stop_fs, h.delay_step_fs).map_err(|m| CliError::invalid("hom", m))?;
    if !(0.0..0.25).contains(&h.pair_probability) {
        return Err(CliError::invalid("hom.pair_probability", format!("must lie in [0, 0.25), got {}", h.pair_probability)));
    }
    let t = &cfg.tomography;
    biphoton::polarization::model_state(t.depolarization, t.amplitude_imbalance, t.phase_error)
        .map_err(|e| CliError::invalid("tomography", e.to_string()))?;
    if t.mean_counts == 0 {
        return Err(CliError::invalid("tomography.mean_counts", "must be at least 1"));
    }
    let e = &cfg.efficiency;
    e.budget.validate().map_err(|err| CliError::invalid("efficiency.budget", err.to_string()))?;
    if !(e.pair_rate_hz.is_finite() && e.pair_rate_hz > 0.0) {
        return Err(CliError::invalid("efficiency.pair_rate_hz", format!("must be positive, got {}", e.pair_rate_hz)));
    }
    if !(e.integration_s.is_finite() && e.integration_s > 0.0) {
        return Err(CliError::invalid("efficiency.integration_s", format!("must be positive, got {}", e.integration_s)));
    }
    Ok(())
}

/// Delays `start, start + step, …` up to and including `stop`.
pub fn delay_axis(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err("delay range must be finite".into());
    }
    if !(step > 0.0) || stop < start {
        return Err(format!("delay range {start}:{stop}:{step} needs start <= stop and step > 0"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 100_000 {
        return Err(format!("delay range has {n} points; at most 100000 are allowed"));
    }
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

pub fn save_config_string(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, save_config_string(cfg)).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
