//! Digitization energy and crossbar computing efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope of the ADC survey fit `log10(y) = slope · ENOB + intercept`.
pub const FIT_SLOPE: f64 = 0.2315;
pub const FIT_INTERCEPT: f64 = -0.7068;

/// Energy per sample per bit of an ADC with the given ENOB, in the survey's
/// (unstated) unit. Only ratios of this quantity are meaningful.
pub fn adc_energy_per_sample_bit(enob: f64) -> f64 {
    10f64.powf(FIT_SLOPE * enob + FIT_INTERCEPT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyModel {
    pub enob_adc: f64,
    pub enob_comparator: f64,
    /// Oversampling factor over the subcarrier bandwidth (≥ 2).
    pub nyquist_alpha: f64,
    pub n_sub: usize,
    /// Symbol rate in Hz.
    pub f_sym: f64,
    /// `(ADC count · f_sam) / (comparator count · f_sym)`. Its minimum is 1.
    pub sample_ratio: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            enob_adc: 6.7,
            enob_comparator: 1.0,
            nyquist_alpha: 2.0,
            n_sub: 15,
            f_sym: 1_000.0,
            sample_ratio: 1.0,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.enob_adc > 0.0 && self.enob_comparator > 0.0) {
            return Err(Error::Range("ENOB values must be positive".into()));
        }
        if !(self.nyquist_alpha >= 2.0) {
            return Err(Error::Range(format!("alpha must be >= 2, got {}", self.nyquist_alpha)));
        }
        if !(self.sample_ratio > 0.0 && self.f_sym > 0.0) {
            return Err(Error::Range("rates must be positive".into()));
        }
        Ok(())
    }

    /// Ratio of sample-rate × converter-count products computed from
    /// explicit converter counts. An ADC digitizing the raw signal runs at
    /// `f_sam = α · n_sub · f_sym`.
    pub fn ratio_from_counts(&self, adc_count: f64, comparator_count: f64) -> f64 {
        let f_sam = self.nyquist_alpha * self.n_sub as f64 * self.f_sym;
        adc_count * f_sam / (comparator_count * self.f_sym)
    }

    /// ADC versus comparator energy per sample per bit.
    pub fn energy_ratio(&self) -> f64 {
        adc_energy_per_sample_bit(self.enob_adc) / adc_energy_per_sample_bit(self.enob_comparator)
    }
}

/// Energy spent digitizing with ADCs relative to comparators.
pub fn digitization_reduction(model: &EnergyModel) -> Result<f64> {
    model.validate()?;
    Ok(model.enob_adc * model.sample_ratio * model.energy_ratio() / model.enob_comparator)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EfficiencyParams {
    /// Hz.
    pub sampling_rate: f64,
    /// Equivalent input voltage, V.
    pub voltage: f64,
    /// Average device conductance, μS.
    pub g_avg: f64,
    /// Offset resistor conductance, μS.
    pub g_offset: f64,
    pub duty: f64,
}

impl Default for EfficiencyParams {
    fn default() -> Self {
        Self { sampling_rate: 100e6, voltage: 0.1, g_avg: 90.0, g_offset: 90.0, duty: 0.5 }
    }
}

/// Operations per second per watt:
/// `sampling_rate · 2 / V² / (G_avg + G_offset) / duty`.
pub fn crossbar_efficiency(p: &EfficiencyParams) -> Result<f64> {
    if !(p.sampling_rate > 0.0 && p.voltage > 0.0 && p.g_avg > 0.0 && p.g_offset > 0.0) {
        return Err(Error::Range("efficiency parameters must be positive".into()));
    }
    if !(p.duty > 0.0 && p.duty <= 1.0) {
        return Err(Error::Range(format!("duty must lie in (0, 1], got {}", p.duty)));
    }
    let siemens = (p.g_avg + p.g_offset) * 1e-6;
    Ok(p.sampling_rate * 2.0 / (p.voltage * p.voltage) / siemens / p.duty)
}

pub fn to_tops_per_watt(ops_per_joule: f64) -> f64 {
    ops_per_joule / 1e12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_ratio() {
        let r = adc_energy_per_sample_bit(6.7) / adc_energy_per_sample_bit(1.0);
        assert!((r - 20.9).abs() < 0.05, "{r}");
        assert_eq!(adc_energy_per_sample_bit(0.0), 10f64.powf(-0.7068));
        let grid: Vec<f64> = (1..=16).map(|b| adc_energy_per_sample_bit(b as f64)).collect();
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn reduction_factor() {
        let f = digitization_reduction(&EnergyModel::default()).unwrap();
        assert!((f - 140.0).abs() < 1.0, "{f}");
        let none = EnergyModel { enob_adc: 1.0, ..EnergyModel::default() };
        assert!((digitization_reduction(&none).unwrap() - 1.0).abs() < 1e-12);
        let ten = EnergyModel { enob_adc: 10.0, ..EnergyModel::default() };
        let want = 10.0 * 10f64.powf(0.2315 * 9.0);
        assert!((digitization_reduction(&ten).unwrap() - want).abs() < 1e-9 * want);
        assert!((want - 1.2e3).abs() < 0.05e3);
    }

    #[test]
    fn reduction_invariant_to_count_scaling() {
        let m = EnergyModel::default();
        let a = m.ratio_from_counts(2.0, 30.0);
        let b = m.ratio_from_counts(20.0, 300.0);
        assert!((a - b).abs() < 1e-12);
        assert!((m.ratio_from_counts(1.0, 30.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency() {
        let e = to_tops_per_watt(crossbar_efficiency(&EfficiencyParams::default()).unwrap());
        assert!((e - 222.0).abs() < 1.0, "{e}");
        let base = crossbar_efficiency(&EfficiencyParams::default()).unwrap();
        let v2 = EfficiencyParams { voltage: 0.2, ..Default::default() };
        assert!((crossbar_efficiency(&v2).unwrap() - base / 4.0).abs() < 1e-6 * base);
        let d = EfficiencyParams { duty: 0.25, ..Default::default() };
        assert!((crossbar_efficiency(&d).unwrap() - base * 2.0).abs() < 1e-6 * base);
        let g = EfficiencyParams { g_avg: 180.0, g_offset: 180.0, ..Default::default() };
        assert!((crossbar_efficiency(&g).unwrap() - base / 2.0).abs() < 1e-6 * base);
        assert!(crossbar_efficiency(&EfficiencyParams { duty: 0.0, ..Default::default() }).is_err());
    }
}
