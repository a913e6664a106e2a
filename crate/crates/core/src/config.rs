//! TOML run configuration with strict validation and `key=value` overrides.
//!
//! Every physical parameter defaults to its measured value; unknown
//! keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{LossChannel, Photon};
use crate::error::{Error, Result};
use crate::experiment::RunConfig;
use crate::spectrum::ModeSpectrum;
use crate::states::{make_paper_state_in, BipartitePureState, PaperVariant, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_l_max")]
    pub l_max: u32,
    /// White-noise fraction used by the `scan` and `mode-matrix` commands.
    #[serde(default)]
    pub epsilon_noise: f64,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub signal_projector: SignalProjectorConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub targets: TargetConfig,
    #[serde(default)]
    pub plate: PlateConfig,
}

/// Input two-photon state. Without `anti_diagonal` the measured
/// before-plate state is used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    /// Real amplitudes on `|l, -l>`, in signal-mode order `-l_max ..= l_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anti_diagonal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Intensity transmissions in mode order; defaults to the measured plate values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
    #[serde(default)]
    pub acts_on: Photon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalProjectorConfig {
    pub fork: i32,
    /// Beam waists.
    pub displacement: f64,
}

impl Default for SignalProjectorConfig {
    fn default() -> Self {
        SignalProjectorConfig { fork: 1, displacement: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub d_min: f64,
    pub d_max: f64,
    pub n_points: usize,
    pub idler_fork: i32,
    pub fiber_waist_ratio: f64,
    /// Scan the transmitted state instead of the input state (`scan` command).
    #[serde(default)]
    pub after_channel: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { d_min: -3.0, d_max: 3.0, n_points: 201, idler_fork: -1, fiber_waist_ratio: 1.0, after_channel: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub pair_rate: f64,
    pub integration_time: f64,
    pub rng_seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        let r = RunConfig::default();
        RunSection { pair_rate: r.pair_rate, integration_time: r.integration_time, rng_seed: r.rng_seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub visibility_before: f64,
    pub visibility_after: f64,
    pub filter_cap: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig { visibility_before: 0.977, visibility_after: 0.976, filter_cap: 1.0 }
    }
}

/// Hole-array geometry for the classical transmission estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateConfig {
    pub hole_diameter_nm: f64,
    pub period_nm: f64,
    pub wavelength_nm: f64,
    /// Measured transmission of the plate at the working wavelength.
    pub observed_transmission: f64,
}

impl Default for PlateConfig {
    fn default() -> Self {
        PlateConfig { hole_diameter_nm: 200.0, period_nm: 600.0, wavelength_nm: 702.0, observed_transmission: 0.032 }
    }
}

fn default_l_max() -> u32 {
    1
}

impl Default for Config {
    fn default() -> Self {
        Config {
            l_max: 1,
            epsilon_noise: 0.0,
            state: StateConfig::default(),
            channel: ChannelConfig::default(),
            signal_projector: SignalProjectorConfig::default(),
            scan: ScanConfig::default(),
            run: RunSection::default(),
            targets: TargetConfig::default(),
            plate: PlateConfig::default(),
        }
    }
}

fn config_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

impl Config {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(config_err)?;
        Self::from_table(table)
    }

    /// Parses `text`, applies `key=value` overrides in order, then validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    /// Reads a config file; the error names the path on failure.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_with_overrides(&text, overrides)
            .map_err(|e| config_err(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config error: "))))
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Config = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn spectrum(&self) -> Result<ModeSpectrum> {
        ModeSpectrum::new(self.l_max).map_err(config_err)
    }

    pub fn input_state(&self) -> Result<BipartitePureState> {
        let spectrum = self.spectrum()?;
        match &self.state.anti_diagonal {
            None => Ok(make_paper_state_in(spectrum, PaperVariant::BeforePlate)),
            Some(c) => {
                let coeffs: Vec<C64> = c.iter().map(|&v| C64::new(v, 0.0)).collect();
                BipartitePureState::anti_diagonal(spectrum, &coeffs).map_err(config_err)
            }
        }
    }

    pub fn loss_channel(&self) -> Result<LossChannel> {
        let spectrum = self.spectrum()?;
        match &self.channel.eta {
            None => {
                let mut ch = LossChannel::paper(spectrum);
                if self.channel.acts_on != Photon::Idler {
                    ch = LossChannel::new(spectrum, ch.eta().to_vec(), self.channel.acts_on).map_err(config_err)?;
                }
                Ok(ch)
            }
            Some(eta) => LossChannel::new(spectrum, eta.clone(), self.channel.acts_on).map_err(config_err),
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            pair_rate: self.run.pair_rate,
            integration_time: self.run.integration_time,
            rng_seed: self.run.rng_seed,
            epsilon_noise: self.epsilon_noise,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spectrum()?;
        self.input_state()?;
        self.loss_channel()?;
        self.run_config().validate().map_err(config_err)?;
        if self.run.rng_seed > i64::MAX as u64 {
            return Err(config_err(format!(
                "run.rng_seed = {} does not fit a TOML integer (max {})",
                self.run.rng_seed,
                i64::MAX
            )));
        }
        let sp = &self.signal_projector;
        if sp.fork.abs() != 1 {
            return Err(config_err(format!("signal_projector.fork must be +-1, got {}", sp.fork)));
        }
        if !sp.displacement.is_finite() {
            return Err(config_err("signal_projector.displacement must be finite"));
        }
        let sc = &self.scan;
        if sc.n_points < 3 {
            return Err(config_err(format!("scan.n_points must be at least 3, got {}", sc.n_points)));
        }
        if sc.n_points > 1_000_000 {
            return Err(config_err(format!("scan.n_points = {} is too large", sc.n_points)));
        }
        if !(sc.d_max > sc.d_min) || !sc.d_min.is_finite() || !sc.d_max.is_finite() {
            return Err(config_err(format!("scan range [{}, {}] is empty or not finite", sc.d_min, sc.d_max)));
        }
        if sc.d_min.abs().max(sc.d_max.abs()) > 50.0 || sp.displacement.abs() > 50.0 {
            return Err(config_err("displacements beyond 50 beam waists are not supported"));
        }
        if sc.idler_fork.abs() != 1 {
            return Err(config_err(format!("scan.idler_fork must be +-1, got {}", sc.idler_fork)));
        }
        if !(sc.fiber_waist_ratio > 0.0) || !(sc.fiber_waist_ratio <= 100.0) {
            return Err(config_err(format!("scan.fiber_waist_ratio must be in (0, 100], got {}", sc.fiber_waist_ratio)));
        }
        let t = &self.targets;
        for (name, v) in [
            ("targets.visibility_before", t.visibility_before),
            ("targets.visibility_after", t.visibility_after),
            ("targets.filter_cap", t.filter_cap),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(config_err(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        let p = &self.plate;
        for (name, v) in [
            ("plate.hole_diameter_nm", p.hole_diameter_nm),
            ("plate.period_nm", p.period_nm),
            ("plate.wavelength_nm", p.wavelength_nm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(config_err(format!("{name} must be positive, got {v}")));
            }
        }
        if !(p.hole_diameter_nm < p.wavelength_nm) {
            return Err(config_err("plate.hole_diameter_nm must be below plate.wavelength_nm"));
        }
        if !(p.observed_transmission > 0.0 && p.observed_transmission <= 1.0) {
            return Err(config_err("plate.observed_transmission must be in (0, 1]"));
        }
        Ok(())
    }
}

/// Applies one `dotted.key=value` override to a parsed document. The value is
/// read as a TOML value, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("override '{spec}' is not of the form key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("override key '{key}' has an empty segment")));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override path '{key}': '{p}' is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = Config::from_toml_str("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.loss_channel().unwrap().eta(), &[0.0151, 0.0325, 0.0182]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(Config::from_toml_str("bogus = 1"), Err(Error::Config(_))));
        assert!(Config::from_toml_str("[scan]\nd_min = -1.0\nd_max = 1.0\nn_points = 3\nidler_fork = -1\nfiber_waist_ratio = 1.0\nextra = 2").is_err());
    }

    #[test]
    fn overrides_apply_in_order() {
        let cfg = Config::from_toml_with_overrides(
            "",
            &["epsilon_noise=0.5".into(), "scan.n_points=3".into(), "epsilon_noise = 0.25".into()],
        )
        .unwrap();
        assert_eq!(cfg.epsilon_noise, 0.25);
        assert_eq!(cfg.scan.n_points, 3);
        assert_eq!(cfg.scan.d_min, -3.0);
        let cfg = Config::from_toml_with_overrides("", &["epsilon_noise=1.0".into(), "run.rng_seed=9".into()]).unwrap();
        assert_eq!(cfg.epsilon_noise, 1.0);
        assert_eq!(cfg.run.rng_seed, 9);
        let cfg = Config::from_toml_with_overrides("", &["channel.eta=[1.0, 1.0, 1.0]".into()]).unwrap();
        assert_eq!(cfg.channel.eta, Some(vec![1.0; 3]));
        let cfg = Config::from_toml_with_overrides("", &["channel.acts_on=signal".into()]).unwrap();
        assert_eq!(cfg.channel.acts_on, Photon::Signal);
    }

    #[test]
    fn malformed_overrides() {
        let mut t = toml::Table::new();
        assert!(apply_override(&mut t, "novalue").is_err());
        assert!(apply_override(&mut t, "a..b=1").is_err());
        apply_override(&mut t, "l_max=1").unwrap();
        assert!(apply_override(&mut t, "l_max.x=1").is_err());
    }

    #[test]
    fn validation_catches_bad_physics() {
        for o in [
            "epsilon_noise=1.5",
            "channel.eta=[0.0, 0.5, 0.5]",
            "channel.eta=[0.5, 0.5]",
            "scan.n_points=2",
            "scan.d_min=4.0",
            "scan.idler_fork=2",
            "signal_projector.fork=0",
            "run.pair_rate=0.0",
            "targets.filter_cap=0.0",
            "l_max=0",
            "plate.hole_diameter_nm=800.0",
            "state.anti_diagonal=[0.0, 0.0, 0.0]",
        ] {
            assert!(Config::from_toml_with_overrides("", &[o.to_string()]).is_err(), "{o}");
        }
    }

    #[test]
    fn round_trip_and_hash() {
        let mut cfg = Config::default();
        cfg.state.anti_diagonal = Some(vec![1.0, 1.0, 1.0]);
        cfg.channel.eta = Some(vec![0.2, 0.3, 0.4]);
        let back = Config::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(Config::default().hash(), cfg.hash());
    }

    #[test]
    fn larger_cutoff_embeds_measured_state() {
        let cfg = Config::from_toml_with_overrides("", &["l_max=2".into()]).unwrap();
        let psi = cfg.input_state().unwrap();
        assert_eq!(psi.spectrum().dim(), 5);
        assert_eq!(cfg.loss_channel().unwrap().eta().len(), 5);
    }
}
