//! Declarative experiment description, loadable from TOML.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::crossbar::DeviceBounds;
use crate::energetics::{EfficiencyParams, EnergyModel};
use crate::error::{Error, Result};
use crate::frontend::{FrontendConfig, Medium};
use crate::ofdm::{OfdmParams, TxMapping};

/// Text transmitted by the single-link demo.
pub const DEMO_TEXT: &str = "Here is a demo of memristor-based communication system @ NJU";
pub const DEMO_BITS: usize = 480;
pub const MIMO_BITS: usize = 224;
pub const MIMO_STREAMS: usize = 2;
pub const MIMO_SUBCARRIERS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Demo480,
    Mimo224,
    BerSweep,
    EnergyReport,
    Constellation,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Demo480 => "demo480",
            Experiment::Mimo224 => "mimo224",
            Experiment::BerSweep => "ber_sweep",
            Experiment::EnergyReport => "energy_report",
            Experiment::Constellation => "constellation",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "demo480" => Ok(Experiment::Demo480),
            "mimo224" => Ok(Experiment::Mimo224),
            "ber_sweep" => Ok(Experiment::BerSweep),
            "energy" | "energy_report" => Ok(Experiment::EnergyReport),
            "constellation" => Ok(Experiment::Constellation),
            other => Err(Error::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub medium: Medium,
    /// Use the 118.3 MHz radio front end instead of the scaled-down preset.
    pub full_scale_lo: bool,
    pub ofdm: OfdmParams,
    pub bounds: DeviceBounds,
    pub mapping: TxMapping,
    /// Normalized programming error `2ΔG / (g_max − g_min)`.
    pub programming_error: f64,
    /// Apply the programming error to the transmit array as well.
    pub perturb_tx: bool,
    pub snr_db: Option<f64>,
    pub trials: usize,
    /// Encode the payload as 7-bit ASCII, zero padded.
    pub seven_bit: bool,
    /// Payload text; the demo sentence when unset.
    pub payload: Option<String>,
    /// Programming errors visited by the BER sweep.
    pub sweep_errors: Vec<f64>,
    /// Use `H(k) = I` in the MIMO demo.
    pub identity_channel: bool,
    /// Condition-number ceiling for drawn channels.
    pub channel_max_condition: f64,
    pub energy: EnergyModel,
    pub efficiency: EfficiencyParams,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Demo480,
            seed: 1,
            medium: Medium::Radio,
            full_scale_lo: false,
            ofdm: OfdmParams::default(),
            bounds: DeviceBounds::default(),
            mapping: TxMapping::default(),
            programming_error: 0.0,
            perturb_tx: true,
            snr_db: None,
            trials: 1,
            seven_bit: false,
            payload: None,
            sweep_errors: default_sweep_grid(),
            identity_channel: false,
            channel_max_condition: 100.0,
            energy: EnergyModel::default(),
            efficiency: EfficiencyParams::default(),
            out: None,
        }
    }
}

/// 0 % to 30 % in steps of 2.5 %.
pub fn default_sweep_grid() -> Vec<f64> {
    (0..=12).map(|i| f64::from(i) * 25.0 / 1000.0).collect()
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { experiment, ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn frontend(&self) -> FrontendConfig {
        let mut fe = if self.full_scale_lo && self.medium == Medium::Radio {
            FrontendConfig::radio_full_scale()
        } else {
            FrontendConfig::preset(self.medium)
        };
        fe.snr_db = self.snr_db;
        fe
    }

    pub fn mimo_params(&self) -> OfdmParams {
        OfdmParams { n_sub: MIMO_SUBCARRIERS, ..self.ofdm }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.programming_error) {
            return Err(Error::Config(format!(
                "programming error {} outside [0, 1]",
                self.programming_error
            )));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::Config("snr_db is NaN".into()));
            }
        }
        if self.full_scale_lo && self.medium != Medium::Radio {
            return Err(Error::Config("full_scale_lo only applies to the radio medium".into()));
        }
        self.bounds.validate()?;
        self.ofdm.validate()?;
        self.mapping.validate(&self.bounds).map_err(|e| Error::Config(e.to_string()))?;
        match self.experiment {
            Experiment::Demo480 | Experiment::Constellation | Experiment::BerSweep => {
                if DEMO_BITS % self.ofdm.bits_per_symbol() != 0 {
                    return Err(Error::Config(format!(
                        "{DEMO_BITS} bits do not fill whole symbols of {} subcarriers",
                        self.ofdm.n_sub
                    )));
                }
                self.frontend().validate(&self.ofdm)?;
            }
            Experiment::Mimo224 => {
                self.mimo_params().validate()?;
                if !(self.channel_max_condition > 1.0) {
                    return Err(Error::Config("channel_max_condition must exceed 1".into()));
                }
            }
            Experiment::EnergyReport => {
                self.energy.validate()?;
            }
        }
        if self.experiment == Experiment::BerSweep {
            if self.sweep_errors.is_empty() {
                return Err(Error::Config("sweep grid is empty".into()));
            }
            if let Some(e) = self.sweep_errors.iter().find(|e| !(0.0..=1.0).contains(*e)) {
                return Err(Error::Config(format!("sweep error {e} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Payload bits, MSB first per character.
pub fn text_bits(text: &str, seven_bit: bool) -> Result<Vec<bool>> {
    if !text.is_ascii() {
        return Err(Error::Config("payload must be ASCII".into()));
    }
    let width = if seven_bit { 7 } else { 8 };
    Ok(text.bytes().flat_map(|b| (0..width).rev().map(move |i| (b >> i) & 1 == 1)).collect())
}

/// Exactly `n` payload bits: truncated, or zero padded.
pub fn payload_bits(text: &str, seven_bit: bool, n: usize) -> Result<Vec<bool>> {
    let mut bits = text_bits(text, seven_bit)?;
    bits.resize(n, false);
    Ok(bits)
}

/// Inverse of [`text_bits`]; non-printable bytes become `.`.
pub fn bits_text(bits: &[bool], seven_bit: bool) -> String {
    let width = if seven_bit { 7 } else { 8 };
    bits.chunks_exact(width)
        .map(|c| {
            let b = c.iter().fold(0u8, |acc, &bit| (acc << 1) | bit as u8);
            if b.is_ascii_graphic() || b == b' ' {
                b as char
            } else {
                '.'
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_text_sizes() {
        assert_eq!(DEMO_TEXT.len(), 60);
        assert_eq!(text_bits(DEMO_TEXT, false).unwrap().len(), DEMO_BITS);
        let bits = payload_bits(DEMO_TEXT, false, DEMO_BITS).unwrap();
        assert_eq!(bits_text(&bits, false), DEMO_TEXT);
        let seven = payload_bits(DEMO_TEXT, true, DEMO_BITS).unwrap();
        assert_eq!(bits_text(&seven[..420], true), DEMO_TEXT);
        assert!(seven[420..].iter().all(|b| !b));
        assert_eq!(payload_bits("ab", false, 8).unwrap(), text_bits("a", false).unwrap());
    }

    #[test]
    fn ascii_msb_first() {
        assert_eq!(
            text_bits("A", false).unwrap(),
            vec![false, true, false, false, false, false, false, true]
        );
        assert!(text_bits("é", false).is_err());
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let cfg = ExperimentConfig { snr_db: Some(30.0), ..ExperimentConfig::new(Experiment::BerSweep) };
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        cfg.validate().unwrap();

        let partial = ExperimentConfig::from_toml("experiment = \"mimo224\"\nseed = 9\n").unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.trials, 1);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("medium = \"sonar\"").is_err());

        let bad = ExperimentConfig { trials: 0, ..ExperimentConfig::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { programming_error: 1.5, ..ExperimentConfig::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig {
            ofdm: OfdmParams { n_sub: 7, ..OfdmParams::default() },
            ..ExperimentConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn experiment_names() {
        assert_eq!("ber-sweep".parse::<Experiment>().unwrap(), Experiment::BerSweep);
        assert_eq!("energy".parse::<Experiment>().unwrap(), Experiment::EnergyReport);
        assert!("nope".parse::<Experiment>().is_err());
    }
}
