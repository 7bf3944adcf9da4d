//! Simulation configuration.
//!
//! The on-disk format is a flat TOML table whose keys are exactly the field
//! names of [`SystemConfig`]. Any key may be omitted; missing keys take the
//! defaults below, which describe the reference uplink deployment
//! (K = 1 UE, N = 32 subcarriers with 20 data carriers, L = 8 taps, two OFDM
//! symbols per burst, 15 kHz spacing, 100 mW UEs and 500 mW AAUs).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Half-width of the per-device oscillator bias draw, in units of the subcarrier spacing.
pub const BIAS_HALF_RANGE: f64 = 0.25;

// Pairwise bias differences lie in (-2B, 2B), which must fit the (-0.5, 0.5) search span.
const _: () = assert!(2.0 * BIAS_HALF_RANGE <= 0.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    /// Distance-dependent path loss with log-normal shadowing.
    Pathloss,
    /// Unit total gain split evenly over all AAUs and taps, `E|h|^2 = 1/(M L)`.
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub n_subcarriers: usize,
    pub n_data: usize,
    pub cp_len: usize,
    pub n_symbols: usize,
    pub n_taps: usize,
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub carrier_freq_hz: f64,
    pub n_aaus: usize,
    pub n_ues: usize,
    pub cell_radius_m: f64,
    pub ue_power_w: f64,
    pub aau_power_w: f64,
    /// Receiver noise per complex sample. The default is thermal noise in one
    /// subcarrier spacing, kT * 15 kHz.
    pub noise_power_dbm: f64,
    pub pathloss_exponent: f64,
    pub ref_gain_db: f64,
    /// Variance (dB^2) of the log-normal shadowing term.
    pub shadow_var_db: f64,
    /// Apply shadowing to AAU-AAU links as well as UE-AAU links.
    pub shadow_aau_links: bool,
    pub channel_model: ChannelModel,
    pub ue_speed_mps: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub grid_points: usize,
    pub refine: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_subcarriers: 32,
            n_data: 20,
            cp_len: 8,
            n_symbols: 2,
            n_taps: 8,
            bandwidth_hz: 20e6,
            subcarrier_spacing_hz: 15e3,
            carrier_freq_hz: 2.0e9,
            n_aaus: 64,
            n_ues: 1,
            cell_radius_m: 1000.0,
            ue_power_w: 0.1,
            aau_power_w: 0.5,
            noise_power_dbm: -132.2,
            pathloss_exponent: 3.76,
            ref_gain_db: -148.1,
            shadow_var_db: 8.0,
            shadow_aau_links: true,
            channel_model: ChannelModel::Pathloss,
            ue_speed_mps: 0.0,
            trials: 50,
            master_seed: 20_221_001,
            grid_points: 140,
            refine: true,
        }
    }
}

impl SystemConfig {
    /// Number of null subcarriers `Q = N - P`.
    pub fn n_nulls(&self) -> usize {
        self.n_subcarriers.saturating_sub(self.n_data)
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_w(self.noise_power_dbm)
    }

    /// Peak normalized Doppler shift `f v / (c df)` for the configured UE speed.
    pub fn max_doppler(&self) -> f64 {
        doppler_scale(self.carrier_freq_hz, self.ue_speed_mps, self.subcarrier_spacing_hz)
    }

    pub fn validate(&self) -> Result<()> {
        positive_int("n_subcarriers", self.n_subcarriers)?;
        positive_int("n_data", self.n_data)?;
        positive_int("n_symbols", self.n_symbols)?;
        positive_int("n_taps", self.n_taps)?;
        positive_int("n_aaus", self.n_aaus)?;
        positive_int("n_ues", self.n_ues)?;
        positive_int("trials", self.trials)?;
        positive_int("grid_points", self.grid_points)?;
        if self.n_data >= self.n_subcarriers {
            return Err(Error::config(
                "n_data",
                format!(
                    "must be below n_subcarriers ({}) to leave at least one null subcarrier",
                    self.n_subcarriers
                ),
            ));
        }
        if self.cp_len + 1 < self.n_taps {
            return Err(Error::config(
                "cp_len",
                format!("must be at least n_taps - 1 = {}", self.n_taps - 1),
            ));
        }
        if self.cp_len > self.n_subcarriers {
            return Err(Error::config("cp_len", "must not exceed n_subcarriers"));
        }
        positive_real("bandwidth_hz", self.bandwidth_hz)?;
        positive_real("subcarrier_spacing_hz", self.subcarrier_spacing_hz)?;
        positive_real("carrier_freq_hz", self.carrier_freq_hz)?;
        positive_real("cell_radius_m", self.cell_radius_m)?;
        positive_real("ue_power_w", self.ue_power_w)?;
        positive_real("aau_power_w", self.aau_power_w)?;
        finite("noise_power_dbm", self.noise_power_dbm)?;
        finite("pathloss_exponent", self.pathloss_exponent)?;
        finite("ref_gain_db", self.ref_gain_db)?;
        nonnegative("shadow_var_db", self.shadow_var_db)?;
        nonnegative("ue_speed_mps", self.ue_speed_mps)?;
        // TOML integers are signed 64-bit; keep every config representable on disk.
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::config("master_seed", "must not exceed 2^63 - 1"));
        }
        Ok(())
    }

    /// Parse a flat TOML document. Unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from an optional file, then apply `key=value` overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::ConfigParse(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::ConfigParse(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for ov in overrides {
            let (key, value) = parse_override(ov)?;
            table.insert(key, value);
        }
        let cfg: SystemConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::ConfigParse(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    // Values parse as TOML literals; anything else is taken as a bare string.
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key, value))
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Normalized Doppler magnitude `f v / (c df)`.
pub fn doppler_scale(carrier_freq_hz: f64, speed_mps: f64, spacing_hz: f64) -> f64 {
    carrier_freq_hz * speed_mps / (SPEED_OF_LIGHT * spacing_hz)
}

fn positive_int(field: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::config(field, "must be a positive integer"));
    }
    Ok(())
}

fn positive_real(field: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::config(field, format!("must be a finite value > 0, got {v}")));
    }
    Ok(())
}

fn nonnegative(field: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::config(field, format!("must be a finite value >= 0, got {v}")));
    }
    Ok(())
}

fn finite(field: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::config(field, format!("must be finite, got {v}")));
    }
    Ok(())
}
