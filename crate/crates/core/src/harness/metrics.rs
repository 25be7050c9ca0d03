//! Error counting, EVM and binomial confidence intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::Qam4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerCount {
    pub errors: usize,
    pub total: usize,
    pub ber: f64,
}

impl BerCount {
    pub fn new(errors: usize, total: usize) -> Self {
        let ber = if total == 0 { 0.0 } else { errors as f64 / total as f64 };
        Self { errors, total, ber }
    }

    pub fn merge(self, other: BerCount) -> Self {
        Self::new(self.errors + other.errors, self.total + other.total)
    }
}

pub fn compute_ber(sent: &[bool], received: &[bool]) -> Result<BerCount> {
    if sent.len() != received.len() {
        return Err(Error::Dimension(format!(
            "{} bits sent, {} received",
            sent.len(),
            received.len()
        )));
    }
    let errors = sent.iter().zip(received).filter(|(a, b)| a != b).count();
    Ok(BerCount::new(errors, sent.len()))
}

/// RMS error-vector magnitude relative to the RMS reference magnitude.
pub fn compute_evm(raw: &[(f64, f64)], reference: &[Qam4]) -> Result<f64> {
    if raw.len() != reference.len() || raw.is_empty() {
        return Err(Error::Dimension(format!(
            "{} points against {} references",
            raw.len(),
            reference.len()
        )));
    }
    let (mut err, mut refp) = (0.0, 0.0);
    for (&(i, q), p) in raw.iter().zip(reference) {
        let (ri, rq) = (p.i as f64, p.q as f64);
        err += (i - ri).powi(2) + (q - rq).powi(2);
        refp += ri * ri + rq * rq;
    }
    Ok((err / refp).sqrt())
}

/// Scales raw (I, Q) values so their mean absolute component is 1.
pub fn normalize_constellation(raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mean = raw.iter().map(|(i, q)| i.abs() + q.abs()).sum::<f64>() / (2 * raw.len()).max(1) as f64;
    if mean == 0.0 {
        return raw.to_vec();
    }
    raw.iter().map(|&(i, q)| (i / mean, q / mean)).collect()
}

/// Wilson score interval for `errors` out of `total` at `z` standard scores.
pub fn wilson_interval(errors: usize, total: usize, z: f64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if errors == total { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

pub const Z_95: f64 = 1.959_963_984_540_054;
