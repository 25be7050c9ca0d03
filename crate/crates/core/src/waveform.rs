//! Uniformly sampled real signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<f64>,
    /// Sample rate in Hz.
    pub rate: f64,
    /// Time of the first sample in seconds.
    pub t0: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, rate: f64, t0: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Range(format!("sample rate must be > 0, got {rate}")));
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::Range(format!("non-finite sample {x}")));
        }
        Ok(Self { samples, rate, t0 })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }

    pub fn mean_square(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.mean_square().sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self { samples: self.samples.iter().map(|x| x * gain).collect(), ..*self }
    }

    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self { samples, rate: self.rate, t0: self.t0 }
    }

    /// Appends `other`, which must share the rate.
    pub fn concat(mut self, other: &Waveform) -> Result<Self> {
        if self.rate != other.rate {
            return Err(Error::RateMismatch { expected: self.rate, got: other.rate });
        }
        self.samples.extend_from_slice(&other.samples);
        Ok(self)
    }

    /// Split into consecutive chunks of `len` samples.
    pub fn chunks(&self, len: usize) -> Result<Vec<Waveform>> {
        if len == 0 || self.samples.len() % len != 0 {
            return Err(Error::Dimension(format!(
                "{} samples do not split into chunks of {len}",
                self.samples.len()
            )));
        }
        Ok(self
            .samples
            .chunks(len)
            .enumerate()
            .map(|(c, s)| Waveform { samples: s.to_vec(), rate: self.rate, t0: self.time(c * len) })
            .collect())
    }

    /// `t,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (n, x) in self.samples.iter().enumerate() {
            out.push_str(&format!("{:?},{:?}\n", self.time(n), x));
        }
        out
    }

    /// Reads `t,value` rows; the rate is recovered from the time column.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record?;
            let field = |k: usize| -> Result<f64> {
                let s = record.get(k).ok_or_else(|| Error::Parse("missing column".into()))?;
                s.parse().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            };
            times.push(field(0)?);
            samples.push(field(1)?);
        }
        if times.len() < 2 {
            return Err(Error::Parse("need at least two samples to infer the rate".into()));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        Self::new(samples, 1.0 / dt, times[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rate_and_samples() {
        assert!(Waveform::new(vec![1.0], 0.0, 0.0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let w = Waveform::new((0..64).map(|n| (n as f64 * 0.3).sin()).collect(), 32_000.0, 1e-3)
            .unwrap();
        let back = Waveform::from_csv(&w.to_csv()).unwrap();
        assert_eq!(back.samples, w.samples);
        assert!((back.rate - w.rate).abs() < 1e-6);
        assert_eq!(back.t0, w.t0);
    }

    #[test]
    fn chunking() {
        let w = Waveform::new(vec![0.0; 96], 32_000.0, 0.0).unwrap();
        let c = w.chunks(32).unwrap();
        assert_eq!(c.len(), 3);
        assert!((c[2].t0 - 64.0 / 32_000.0).abs() < 1e-15);
        assert!(w.chunks(40).is_err());
    }
}
