//! 4-QAM / OFDM modem built on crossbar arrays.
//!
//! The transmitter stores the QAM grid as conductances and produces the
//! baseband by driving the array with the carrier bank. The receiver stores
//! a DFT as conductances (offset scheme) and integrates the column currents
//! over one symbol period.

mod qam;
mod receive;
mod transmit;

pub use qam::{qam4_demap, qam4_map, Qam4, QamGrid};
pub use receive::{
    build_dft_matrix, demodulate_symbol, fold_equalizer, raw_unit_amplitude, FoldedDft,
    SymbolDecision,
};
pub use transmit::{carrier_bank, encode_tx_conductance, synthesize_baseband, synthesize_stream};

use serde::{Deserialize, Serialize};

use crate::crossbar::DeviceBounds;
use crate::error::{Error, Result};

/// Timing of the OFDM frame shared by both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfdmParams {
    pub n_sub: usize,
    /// Subcarrier spacing in Hz.
    pub f0: f64,
    /// Seconds.
    pub symbol_period: f64,
    /// Samples per symbol at the receiver (DFT length).
    pub l_dft: usize,
    /// Receiver sampling rate in Hz.
    pub f_sam: f64,
    /// Waveforms are synthesized at `sim_oversample · f_sam`.
    pub sim_oversample: usize,
    /// Peak voltage of each carrier in the bank (V).
    pub carrier_amplitude: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self {
            n_sub: 15,
            f0: 1_000.0,
            symbol_period: 1e-3,
            l_dft: 32,
            f_sam: 32_000.0,
            sim_oversample: 1,
            carrier_amplitude: 0.1,
        }
    }
}

impl OfdmParams {
    /// 7-subcarrier frame used by the MIMO demo.
    pub fn mimo_demo() -> Self {
        Self { n_sub: 7, ..Self::default() }
    }

    pub fn with_oversample(self, sim_oversample: usize) -> Self {
        Self { sim_oversample, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_sub == 0 || self.l_dft == 0 || self.sim_oversample == 0 {
            return bad("n_sub, l_dft and sim_oversample must be positive".into());
        }
        if !(self.symbol_period > 0.0 && self.f0 > 0.0 && self.f_sam > 0.0) {
            return bad("rates and periods must be positive".into());
        }
        if ((self.f_sam * self.symbol_period) - self.l_dft as f64).abs() > 1e-9 * self.l_dft as f64
        {
            return bad(format!(
                "f_sam·symbol_period = {} but l_dft = {}",
                self.f_sam * self.symbol_period,
                self.l_dft
            ));
        }
        if (self.f0 * self.symbol_period - 1.0).abs() > 1e-9 {
            return bad(format!("f0 = {} Hz is not 1/symbol_period", self.f0));
        }
        if 2 * (self.n_sub + 1) > self.l_dft {
            return bad(format!(
                "{} subcarriers exceed the Nyquist headroom of a {}-point DFT",
                self.n_sub, self.l_dft
            ));
        }
        if !(self.carrier_amplitude > 0.0) {
            return bad("carrier amplitude must be positive".into());
        }
        Ok(())
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.f_sam
    }

    pub fn sim_rate(&self) -> f64 {
        self.f_sam * self.sim_oversample as f64
    }

    pub fn sim_samples_per_symbol(&self) -> usize {
        self.l_dft * self.sim_oversample
    }

    /// Frequency of subcarrier `k` (1-based) in Hz.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        k as f64 * self.f0
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.n_sub
    }
}

/// How weights are turned into conductances at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TxMapping {
    /// Conductance of the active half of a signed ±1 weight (μS).
    pub g_high: f64,
    /// Conductance of the idle half (μS).
    pub g_low: f64,
    /// DFT amplitude A at the receiver (μS).
    pub a_scale: f64,
    /// Receiver offset conductance G_offset (μS).
    pub g_offset: f64,
    /// Transimpedance of the differential current-to-voltage stage (Ω).
    pub tia_gain_ohm: f64,
}

impl Default for TxMapping {
    fn default() -> Self {
        Self { g_high: 170.0, g_low: 20.0, a_scale: 80.0, g_offset: 95.0, tia_gain_ohm: 3_300.0 }
    }
}

impl TxMapping {
    pub fn validate(&self, bounds: &DeviceBounds) -> Result<()> {
        if !(self.g_low < self.g_high && self.g_high <= bounds.g_max && self.g_low >= bounds.g_min)
        {
            return Err(Error::Range(format!(
                "transmit levels {}/{} μS do not fit [{}, {}]",
                self.g_low, self.g_high, bounds.g_min, bounds.g_max
            )));
        }
        if !(self.a_scale > 0.0 && self.g_offset > 0.0) {
            return Err(Error::Range("a_scale and g_offset must be positive".into()));
        }
        if self.a_scale + self.g_offset > bounds.g_max || self.g_offset - self.a_scale < bounds.g_min
        {
            return Err(Error::Range(format!(
                "DFT range {} ± {} μS exceeds [{}, {}]",
                self.g_offset, self.a_scale, bounds.g_min, bounds.g_max
            )));
        }
        if !(self.tia_gain_ohm > 0.0) {
            return Err(Error::Range("tia gain must be positive".into()));
        }
        Ok(())
    }

    /// Differential conductance of a unit weight.
    pub fn weight_swing(&self) -> f64 {
        self.g_high - self.g_low
    }

    /// Baseband volts per unit (I or Q) weight per volt of carrier.
    pub fn volts_per_unit(&self, carrier_amplitude: f64) -> f64 {
        self.weight_swing() * carrier_amplitude * 1e-6 * self.tia_gain_ohm
    }
}
