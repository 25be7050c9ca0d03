//! Discrete-time analog chain: mixers, low-pass filter, AGC, sample-and-hold
//! and additive noise.
//!
//! The low-pass filter is applied circularly: a waveform handed to
//! [`downconvert`] is treated as one period of a periodic signal. Every OFDM
//! symbol, and every preset carrier, completes an integer number of cycles
//! per symbol period, so filtering one symbol at a time is exact for
//! band-limited content and keeps symbol boundaries from smearing.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::OfdmParams;
use crate::rng::{self, Domain};
use crate::waveform::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Medium {
    Radio,
    Ultrasonic,
    Optical,
}

impl Medium {
    pub const ALL: [Medium; 3] = [Medium::Radio, Medium::Ultrasonic, Medium::Optical];
}

impl fmt::Display for Medium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Medium::Radio => "radio",
            Medium::Ultrasonic => "ultrasonic",
            Medium::Optical => "optical",
        })
    }
}

impl FromStr for Medium {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "radio" => Ok(Medium::Radio),
            "ultrasonic" => Ok(Medium::Ultrasonic),
            "optical" => Ok(Medium::Optical),
            other => Err(Error::Config(format!("unknown medium preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontendConfig {
    pub medium: Medium,
    /// Carrier / local-oscillator frequency (Hz).
    pub f_carrier: f64,
    pub lpf_cutoff: f64,
    /// Odd FIR length.
    pub lpf_taps: usize,
    pub vga_target_rms: f64,
    pub sim_rate: f64,
    pub snr_db: Option<f64>,
    /// Receiver LO phase relative to the transmitter's (rad).
    pub lo_phase: f64,
    /// Intensity bias of the optical emitter.
    pub optical_bias: f64,
    /// Modulation depth of the optical emitter.
    pub optical_depth: f64,
    /// Remove the mean after the low-pass filter.
    pub dc_block: bool,
}

impl FrontendConfig {
    pub fn preset(medium: Medium) -> Self {
        let radio = Self {
            medium,
            f_carrier: 256e3,
            lpf_cutoff: 128e3,
            lpf_taps: 127,
            vga_target_rms: 0.25,
            sim_rate: 4.096e6,
            snr_db: None,
            lo_phase: 0.0,
            optical_bias: 1.0,
            optical_depth: 0.5,
            dc_block: false,
        };
        match medium {
            Medium::Radio => radio,
            Medium::Ultrasonic => {
                Self { f_carrier: 40e3, lpf_cutoff: 40e3, sim_rate: 512e3, ..radio }
            }
            Medium::Optical => Self {
                f_carrier: 128e3,
                lpf_cutoff: 64e3,
                // the bias mixes to a strong tone at the LO, so a steeper filter
                lpf_taps: 255,
                sim_rate: 2.048e6,
                dc_block: true,
                ..radio
            },
        }
    }

    /// Radio preset at the hardware LO of 118.3 MHz. Meant for short
    /// waveforms: one symbol is 262,144 simulation samples.
    pub fn radio_full_scale() -> Self {
        Self {
            f_carrier: 118.3e6,
            lpf_cutoff: 10e6,
            sim_rate: 262.144e6,
            ..Self::preset(Medium::Radio)
        }
    }

    pub fn validate(&self, params: &OfdmParams) -> Result<()> {
        let top = params.subcarrier_freq(params.n_sub);
        let bad = |m: String| Err(Error::Config(m));
        if !(self.sim_rate > 2.0 * (self.f_carrier + top)) {
            return bad(format!(
                "sim rate {} Hz does not resolve carrier {} Hz plus baseband {} Hz",
                self.sim_rate, self.f_carrier, top
            ));
        }
        if !(self.lpf_cutoff > top && self.lpf_cutoff < 2.0 * self.f_carrier - top) {
            return bad(format!(
                "low-pass cutoff {} Hz must sit between {} Hz and the image at {} Hz",
                self.lpf_cutoff,
                top,
                2.0 * self.f_carrier - top
            ));
        }
        if self.lpf_taps % 2 == 0 {
            return bad("lpf_taps must be odd".into());
        }
        if !(self.vga_target_rms > 0.0) {
            return bad("vga target must be positive".into());
        }
        if self.medium == Medium::Optical && !(self.optical_bias >= 0.0 && self.optical_depth > 0.0)
        {
            return bad("optical bias must be >= 0 and depth > 0".into());
        }
        self.oversample(params)?;
        Ok(())
    }

    /// Ratio of the simulation rate to the receiver sampling rate.
    pub fn oversample(&self, params: &OfdmParams) -> Result<usize> {
        decimation(self.sim_rate, params.f_sam)
    }

    /// OFDM parameters re-targeted to this front end's simulation rate.
    pub fn ofdm_params(&self, params: &OfdmParams) -> Result<OfdmParams> {
        Ok(params.with_oversample(self.oversample(params)?))
    }
}

fn decimation(rate: f64, f_sam: f64) -> Result<usize> {
    let ratio = rate / f_sam;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!("{rate} Hz is not an integer multiple of {f_sam} Hz")));
    }
    Ok(n as usize)
}

fn check_rate(x: &Waveform, cfg: &FrontendConfig) -> Result<()> {
    if (x.rate - cfg.sim_rate).abs() > 1e-9 * cfg.sim_rate {
        return Err(Error::RateMismatch { expected: cfg.sim_rate, got: x.rate });
    }
    Ok(())
}

/// Mixes the baseband onto the carrier. The optical medium emits
/// `max(0, bias + depth · passband)`.
pub fn upconvert(bb: &Waveform, cfg: &FrontendConfig) -> Result<Waveform> {
    check_rate(bb, cfg)?;
    let samples = bb
        .samples
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let pb = x * (TAU * cfg.f_carrier * bb.time(n)).cos();
            match cfg.medium {
                Medium::Optical => (cfg.optical_bias + cfg.optical_depth * pb).max(0.0),
                _ => pb,
            }
        })
        .collect();
    Ok(bb.with_samples(samples))
}

/// `LPF(2 · pb · cos(2π f_c t + φ))`.
pub fn downconvert(pb: &Waveform, cfg: &FrontendConfig) -> Result<Waveform> {
    check_rate(pb, cfg)?;
    let mixed: Vec<f64> = pb
        .samples
        .iter()
        .enumerate()
        .map(|(n, x)| 2.0 * x * (TAU * cfg.f_carrier * pb.time(n) + cfg.lo_phase).cos())
        .collect();
    let taps = lowpass_taps(cfg.lpf_cutoff, cfg.sim_rate, cfg.lpf_taps);
    let mut out = filter_circular(&mixed, &taps);
    if cfg.dc_block && !out.is_empty() {
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        out.iter_mut().for_each(|x| *x -= mean);
    }
    Ok(pb.with_samples(out))
}

/// Blackman-windowed sinc, unit DC gain.
pub fn lowpass_taps(cutoff: f64, rate: f64, n: usize) -> Vec<f64> {
    let fc = cutoff / rate;
    let mid = (n - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 - mid;
            let sinc = if x == 0.0 { 2.0 * fc } else { (TAU * fc * x).sin() / (PI * x) };
            let r = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
            let w = 0.42 - 0.5 * (TAU * r).cos() + 0.08 * (2.0 * TAU * r).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Zero-phase circular convolution with a symmetric odd-length kernel.
fn filter_circular(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let len = x.len() as isize;
    if len == 0 {
        return Vec::new();
    }
    let mid = (taps.len() / 2) as isize;
    (0..len)
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(m, h)| h * x[(n + m as isize - mid).rem_euclid(len) as usize])
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgcOutput {
    pub waveform: Waveform,
    pub gain: f64,
    /// Set when the input was identically zero and unity gain was used.
    pub zero_input: bool,
}

/// Scales `x` to the configured RMS.
pub fn vga_agc(x: &Waveform, cfg: &FrontendConfig) -> AgcOutput {
    let rms = x.rms();
    if rms == 0.0 {
        return AgcOutput { waveform: x.clone(), gain: 1.0, zero_input: true };
    }
    let gain = cfg.vga_target_rms / rms;
    AgcOutput { waveform: x.scaled(gain), gain, zero_input: false }
}

/// Point-samples `x` at `f_sam`, starting with its first sample.
pub fn sample_hold(x: &Waveform, f_sam: f64) -> Result<Waveform> {
    let step = decimation(x.rate, f_sam)?;
    Waveform::new(x.samples.iter().step_by(step).copied().collect(), f_sam, x.t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseSpec {
    /// Relative to the measured mean-square of the signal.
    SnrDb(f64),
    /// Absolute per-sample variance.
    Variance(f64),
}

/// Adds white Gaussian noise drawn from noise sub-stream 0 of `rng_seed`.
/// An infinite SNR returns the input untouched.
pub fn add_awgn(x: &Waveform, noise: NoiseSpec, rng_seed: u64) -> Result<Waveform> {
    let variance = match noise {
        NoiseSpec::SnrDb(db) if db == f64::INFINITY => return Ok(x.clone()),
        NoiseSpec::SnrDb(db) if db.is_nan() => {
            return Err(Error::Range("SNR must not be NaN".into()));
        }
        NoiseSpec::SnrDb(db) => x.mean_square() / 10f64.powf(db / 10.0),
        NoiseSpec::Variance(v) if v >= 0.0 && v.is_finite() => v,
        NoiseSpec::Variance(v) => return Err(Error::Range(format!("bad noise variance {v}"))),
    };
    if variance == 0.0 {
        return Ok(x.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::Range(e.to_string()))?;
    let mut rng = rng::stream(rng_seed, Domain::Noise, 0);
    Ok(x.with_samples(x.samples.iter().map(|s| s + normal.sample(&mut rng)).collect()))
}

/// Downconvert, level and sample one received passband segment.
pub fn receive_chain(pb: &Waveform, cfg: &FrontendConfig, f_sam: f64) -> Result<Waveform> {
    let bb = downconvert(pb, cfg)?;
    sample_hold(&vga_agc(&bb, cfg).waveform, f_sam)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> OfdmParams {
        OfdmParams::default()
    }

    /// In-band multi-tone test signal over one symbol at the preset rate.
    fn test_baseband(cfg: &FrontendConfig, t0: f64) -> Waveform {
        let p = params();
        let n = (cfg.sim_rate * p.symbol_period).round() as usize;
        let samples = (0..n)
            .map(|i| {
                let t = t0 + i as f64 / cfg.sim_rate;
                (1..=15)
                    .map(|k| {
                        let ph = TAU * k as f64 * 1000.0 * t;
                        let s = if (k * 7) % 3 == 0 { 1.0 } else { -1.0 };
                        0.05 * (s * ph.cos() - ph.sin())
                    })
                    .sum()
            })
            .collect();
        Waveform::new(samples, cfg.sim_rate, t0).unwrap()
    }

    #[test]
    fn presets_validate() {
        for m in Medium::ALL {
            FrontendConfig::preset(m).validate(&params()).unwrap();
        }
        FrontendConfig::radio_full_scale().validate(&params()).unwrap();
        assert_eq!(FrontendConfig::preset(Medium::Radio).oversample(&params()).unwrap(), 128);
    }

    #[test]
    fn medium_parsing() {
        assert_eq!("Optical".parse::<Medium>().unwrap(), Medium::Optical);
        assert!("sonar".parse::<Medium>().is_err());
        assert_eq!(Medium::Ultrasonic.to_string(), "ultrasonic");
    }

    #[test]
    fn dc_baseband_becomes_carrier() {
        let cfg = FrontendConfig::preset(Medium::Radio);
        let bb = Waveform::new(vec![1.0; 64], cfg.sim_rate, 0.0).unwrap();
        let pb = upconvert(&bb, &cfg).unwrap();
        for (n, x) in pb.samples.iter().enumerate() {
            assert!((x - (TAU * cfg.f_carrier * n as f64 / cfg.sim_rate).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn silence_radio_vs_optical() {
        let cfg = FrontendConfig::preset(Medium::Radio);
        let bb = Waveform::new(vec![0.0; 64], cfg.sim_rate, 0.0).unwrap();
        assert!(upconvert(&bb, &cfg).unwrap().samples.iter().all(|&x| x == 0.0));
        let cfg = FrontendConfig::preset(Medium::Optical);
        let bb = Waveform::new(vec![0.0; 64], cfg.sim_rate, 0.0).unwrap();
        assert!(upconvert(&bb, &cfg).unwrap().samples.iter().all(|&x| x == cfg.optical_bias));
    }

    #[test]
    fn optical_never_negative() {
        let cfg = FrontendConfig::preset(Medium::Optical);
        let bb = test_baseband(&cfg, 0.0).scaled(40.0);
        let pb = upconvert(&bb, &cfg).unwrap();
        assert!(pb.samples.iter().all(|&x| x >= 0.0));
        assert!(pb.samples.iter().any(|&x| x == 0.0));
    }

    #[test]
    fn rate_mismatch_rejected() {
        let cfg = FrontendConfig::preset(Medium::Radio);
        let bb = Waveform::new(vec![0.0; 8], 1e6, 0.0).unwrap();
        assert!(matches!(upconvert(&bb, &cfg), Err(Error::RateMismatch { .. })));
        assert!(matches!(downconvert(&bb, &cfg), Err(Error::RateMismatch { .. })));
    }

    #[test]
    fn mixer_round_trip_all_media() {
        for m in Medium::ALL {
            let cfg = FrontendConfig::preset(m);
            let bb = test_baseband(&cfg, 2e-3);
            let mut back = downconvert(&upconvert(&bb, &cfg).unwrap(), &cfg).unwrap();
            if m == Medium::Optical {
                back = back.scaled(1.0 / cfg.optical_depth);
            }
            let peak = bb.peak();
            let err = bb.samples.iter().zip(&back.samples).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
            assert!(err <= 1e-3 * peak, "{m}: {err} vs {peak}");
        }
    }

    #[test]
    fn out_of_band_tone_is_rejected() {
        let cfg = FrontendConfig::preset(Medium::Radio);
        // a tone at f_c + 300 kHz mixes to 300 kHz and 812 kHz, both stop band
        let n = 4096;
        let f = cfg.f_carrier + 300e3;
        let pb = Waveform::new(
            (0..n).map(|i| (TAU * f * i as f64 / cfg.sim_rate).cos()).collect(),
            cfg.sim_rate,
            0.0,
        )
        .unwrap();
        assert!(downconvert(&pb, &cfg).unwrap().peak() < 1e-3);
    }

    #[test]
    fn lo_phase_scales_by_cosine() {
        let theta = 0.7;
        let mut cfg = FrontendConfig::preset(Medium::Radio);
        let bb = test_baseband(&cfg, 0.0);
        let pb = upconvert(&bb, &cfg).unwrap();
        cfg.lo_phase = theta;
        let back = downconvert(&pb, &cfg).unwrap();
        let peak = bb.peak();
        for (a, b) in bb.samples.iter().zip(&back.samples) {
            assert!((a * theta.cos() - b).abs() <= 1e-3 * peak);
        }
    }

    #[test]
    fn agc_behaviour() {
        let cfg = FrontendConfig::preset(Medium::Radio);
        let at_target = Waveform::new(vec![cfg.vga_target_rms, -cfg.vga_target_rms], 1.0, 0.0).unwrap();
        let out = vga_agc(&at_target, &cfg);
        assert!((out.gain - 1.0).abs() < 1e-15);
        let half = at_target.scaled(0.5);
        assert!((vga_agc(&half, &cfg).gain - 2.0).abs() < 1e-12);

        let x = test_baseband(&cfg, 0.0).scaled(3.7);
        let once = vga_agc(&x, &cfg);
        assert!((once.waveform.rms() - cfg.vga_target_rms).abs() < 1e-9);
        let twice = vga_agc(&once.waveform, &cfg);
        for (a, b) in once.waveform.samples.iter().zip(&twice.waveform.samples) {
            assert!((a - b).abs() < 1e-12);
        }

        let zero = Waveform::new(vec![0.0; 4], 1.0, 0.0).unwrap();
        let z = vga_agc(&zero, &cfg);
        assert!(z.zero_input);
        assert_eq!(z.gain, 1.0);
    }

    #[test]
    fn sampling() {
        let c = Waveform::new(vec![0.3; 128], 128_000.0, 0.0).unwrap();
        let s = sample_hold(&c, 32_000.0).unwrap();
        assert_eq!(s.samples, vec![0.3; 32]);
        let w = Waveform::new((0..32).map(|i| i as f64).collect(), 32_000.0, 0.0).unwrap();
        assert_eq!(sample_hold(&w, 32_000.0).unwrap().samples, w.samples);
        assert!(sample_hold(&w, 24_000.0).is_err());

        let rate = 32_000.0 * 8.0;
        let tone = Waveform::new(
            (0..256).map(|i| (TAU * 5000.0 * i as f64 / rate).cos()).collect(),
            rate,
            0.0,
        )
        .unwrap();
        let s = sample_hold(&tone, 32_000.0).unwrap();
        for (i, x) in s.samples.iter().enumerate() {
            assert!((x - (TAU * 5.0 * i as f64 / 32.0).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn awgn_levels() {
        let x = Waveform::new((0..1_000_000).map(|i| (i as f64 * 0.01).sin()).collect(), 1e6, 0.0)
            .unwrap();
        assert_eq!(add_awgn(&x, NoiseSpec::SnrDb(f64::INFINITY), 1).unwrap(), x);
        for snr in [0.0, 10.0, 30.0] {
            let y = add_awgn(&x, NoiseSpec::SnrDb(snr), 4).unwrap();
            let noise: f64 = y.samples.iter().zip(&x.samples).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                / x.len() as f64;
            let measured = 10.0 * (x.mean_square() / noise).log10();
            assert!((measured - snr).abs() < 0.2, "{snr} -> {measured}");
        }
        let zero = Waveform::new(vec![0.0; 100_000], 1e6, 0.0).unwrap();
        let n = add_awgn(&zero, NoiseSpec::Variance(0.04), 9).unwrap();
        assert!((n.mean_square() - 0.04).abs() < 0.04 * 0.02);
        assert_eq!(add_awgn(&x, NoiseSpec::SnrDb(10.0), 4).unwrap(), add_awgn(&x, NoiseSpec::SnrDb(10.0), 4).unwrap());
    }
}
