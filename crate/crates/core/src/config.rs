//! Simulation configuration, read from TOML.
//!
//! Every key is optional; missing keys take the defaults of the reference
//! setup (4/2/2 antennas, two streams of two antennas, 0.4/0.3/0.5 km,
//! `T = L = 96`, QPSK). Unknown keys are rejected.
//!
//! The SNR axis is the SD-link receive SNR at total power `P0`:
//! `snr_db = 10 log10(P0 · pl_SD / N0)`, so each sweep point fixes
//! `N0 = P0 · pl_SD / 10^{snr_db/10}`. Each phase transmits at its node's
//! full budget.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Antennas, Topology};
use crate::protocol::{Modulation, ProtocolKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), reason: reason.into() }
    }
}

/// How precoders are designed for a sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecoderMode {
    /// Equalizing precoders, optimised stream split and searched power split.
    Proposed,
    /// Equalizing precoders with even power and stream splits.
    Disjoint,
    /// Random unitary precoders with even power split.
    Nonadaptive,
    /// Equalizing precoders under fixed per-node budgets.
    PerNode,
}

impl PrecoderMode {
    pub const ALL: [PrecoderMode; 4] = [
        PrecoderMode::Proposed,
        PrecoderMode::Disjoint,
        PrecoderMode::Nonadaptive,
        PrecoderMode::PerNode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrecoderMode::Proposed => "proposed",
            PrecoderMode::Disjoint => "disjoint",
            PrecoderMode::Nonadaptive => "nonadaptive",
            PrecoderMode::PerNode => "per_node",
        }
    }
}

impl fmt::Display for PrecoderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrecoderMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        PrecoderMode::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| ConfigError::invalid("mode", format!("unknown precoder mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerSetting {
    FromSinr,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoModeSetting {
    Integrated,
    PerK,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    Normal,
    ClopperPearson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaConfig {
    pub n_s: usize,
    pub n_r: usize,
    pub n_d: usize,
    pub n1: usize,
    pub n2: usize,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self { n_s: 4, n_r: 2, n_d: 2, n1: 2, n2: 2 }
    }
}

impl AntennaConfig {
    pub fn antennas(&self) -> Antennas {
        Antennas { n_s: self.n_s, n_r: self.n_r, n_d: self.n_d }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Symbols per transmission phase.
    pub t_symbols: u32,
    /// Information bits per stream per TTI.
    pub l_bits: u32,
    pub modulation: Modulation,
    pub ser_mode: SerSetting,
    /// SER used when `ser_mode = "fixed"`.
    pub ser_fixed: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            t_symbols: 96,
            l_bits: 96,
            modulation: Modulation::Qpsk,
            ser_mode: SerSetting::FromSinr,
            ser_fixed: 0.01,
        }
    }
}

/// Exponential correlation coefficient of each link (both array sides).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationConfig {
    pub sd: f64,
    pub sr: f64,
    pub rd: f64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self { sd: 0.5, sr: 0.5, rd: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerNodeBudget {
    pub source: f64,
    pub relay: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerConfig {
    /// Total power of source and relay.
    pub p0: f64,
    /// Fixed budgets for the `per_node` precoder mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_node: Option<PerNodeBudget>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self { p0: 1.0, per_node: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrecoderConfig {
    pub rho_mode: RhoModeSetting,
    /// Evaluation point of `per_k`, in units of `N0`.
    pub rho_k: f64,
}

impl Default for PrecoderConfig {
    fn default() -> Self {
        Self { rho_mode: RhoModeSetting::Integrated, rho_k: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrRange {
    /// Points `start, start + step, ...` up to `stop` inclusive (with a small
    /// tolerance for accumulated rounding).
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + self.step * i as f64).collect()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(ConfigError::invalid("sweep.snr_db", "bounds and step must be finite"));
        }
        if self.step <= 0.0 {
            return Err(ConfigError::invalid("sweep.snr_db.step", "must be positive"));
        }
        if self.stop < self.start {
            return Err(ConfigError::invalid("sweep.snr_db.stop", "must not be below start"));
        }
        if (self.stop - self.start) / self.step > 1e5 {
            return Err(ConfigError::invalid("sweep.snr_db", "too many sweep points"));
        }
        Ok(())
    }
}

impl FromStr for SnrRange {
    type Err = ConfigError;

    /// Parses `A:B:STEP` (dB).
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || ConfigError::invalid("snr", format!("expected A:B:STEP, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let r = SnrRange { start: num(parts[0])?, stop: num(parts[1])?, step: num(parts[2])? };
        r.validate()?;
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub snr_db: SnrRange,
    pub trials: u64,
    pub seed: u64,
    pub protocols: Vec<ProtocolKind>,
    pub modes: Vec<PrecoderMode>,
    /// Outage level at which SNR gains are reported.
    pub target_outage: f64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub interval: IntervalMethod,
    pub confidence: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr_db: SnrRange { start: 0.0, stop: 30.0, step: 2.0 },
            trials: 100_000,
            seed: 1,
            protocols: vec![ProtocolKind::Pdf, ProtocolKind::Df, ProtocolKind::Af, ProtocolKind::NoRelay],
            modes: vec![PrecoderMode::Proposed],
            target_outage: 1e-2,
            workers: 0,
            interval: IntervalMethod::Normal,
            confidence: 0.95,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub antennas: AntennaConfig,
    pub topology: Topology,
    pub link: LinkConfig,
    pub correlation: CorrelationConfig,
    pub power: PowerConfig,
    pub precoder: PrecoderConfig,
    pub sweep: SweepConfig,
}

/// Parses and validates a TOML document.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a TOML file.
pub fn load_config(path: &std::path::Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

impl SimConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Decoding threshold `D = 2^{L/T} - 1`.
    pub fn d_thresh(&self) -> f64 {
        (f64::from(self.link.l_bits) / f64::from(self.link.t_symbols)).exp2() - 1.0
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.antennas;
        for (field, v) in [
            ("antennas.n_s", a.n_s),
            ("antennas.n_r", a.n_r),
            ("antennas.n_d", a.n_d),
            ("antennas.n1", a.n1),
            ("antennas.n2", a.n2),
        ] {
            if v == 0 {
                return Err(ConfigError::invalid(field, "must be at least 1"));
            }
            if v > 16 {
                return Err(ConfigError::invalid(field, "at most 16 antennas are supported"));
            }
        }
        if a.n1 + a.n2 != a.n_s {
            return Err(ConfigError::invalid("antennas.n1", format!("n1 + n2 must equal n_s = {}", a.n_s)));
        }

        let t = &self.topology;
        for (field, d) in [
            ("topology.d_sr_km", t.d_sr_km),
            ("topology.d_rd_km", t.d_rd_km),
            ("topology.d_sd_km", t.d_sd_km),
        ] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(ConfigError::invalid(field, "must be positive"));
            }
        }

        let l = &self.link;
        if l.t_symbols == 0 {
            return Err(ConfigError::invalid("link.t_symbols", "must be at least 1"));
        }
        if l.l_bits == 0 {
            return Err(ConfigError::invalid("link.l_bits", "must be at least 1"));
        }
        if !self.d_thresh().is_finite() {
            return Err(ConfigError::invalid("link.l_bits", "rate L/T too large"));
        }
        if !(l.ser_fixed > 0.0 && l.ser_fixed < 1.0) {
            return Err(ConfigError::invalid("link.ser_fixed", "must lie in (0, 1)"));
        }

        let c = &self.correlation;
        for (field, r) in [("correlation.sd", c.sd), ("correlation.sr", c.sr), ("correlation.rd", c.rd)] {
            if !(0.0..1.0).contains(&r) {
                return Err(ConfigError::invalid(field, "must lie in [0, 1)"));
            }
        }

        let p = &self.power;
        if !(p.p0 > 0.0 && p.p0.is_finite()) {
            return Err(ConfigError::invalid("power.p0", "must be positive"));
        }
        if let Some(b) = p.per_node {
            if !(b.source >= 0.0 && b.relay >= 0.0 && (b.source + b.relay).is_finite()) {
                return Err(ConfigError::invalid("power.per_node", "budgets must be nonnegative"));
            }
            if b.source + b.relay > p.p0 + 1e-9 {
                return Err(ConfigError::invalid("power.per_node", "budgets exceed p0"));
            }
        }

        if !(self.precoder.rho_k >= 0.0 && self.precoder.rho_k.is_finite()) {
            return Err(ConfigError::invalid("precoder.rho_k", "must be finite and nonnegative"));
        }

        let s = &self.sweep;
        s.snr_db.validate()?;
        if s.trials == 0 {
            return Err(ConfigError::invalid("trials", "must be at least 1"));
        }
        if s.protocols.is_empty() {
            return Err(ConfigError::invalid("sweep.protocols", "list is empty"));
        }
        if s.modes.is_empty() {
            return Err(ConfigError::invalid("sweep.modes", "list is empty"));
        }
        if s.modes.contains(&PrecoderMode::PerNode) && p.per_node.is_none() {
            return Err(ConfigError::invalid("power.per_node", "required by the per_node precoder mode"));
        }
        if !(s.target_outage > 0.0 && s.target_outage < 1.0) {
            return Err(ConfigError::invalid("sweep.target_outage", "must lie in (0, 1)"));
        }
        if !(s.confidence > 0.0 && s.confidence < 1.0) {
            return Err(ConfigError::invalid("sweep.confidence", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Noise power at SD-link receive SNR `snr_db`.
    pub fn noise_power(&self, snr_db: f64) -> Result<f64, crate::error::Error> {
        let pl_sd = crate::channel::db_to_linear(crate::channel::path_loss_db(
            self.topology.d_sd_km,
            crate::channel::Link::SourceDestination,
        )?);
        Ok(self.power.p0 * pl_sd / 10f64.powf(snr_db / 10.0))
    }
}
