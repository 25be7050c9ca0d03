use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{OfdmParams, Qam4, TxMapping};
use crate::crossbar::{ConductanceMatrix, CrossbarArray, DeviceBounds};
use crate::error::{Error, Result};

/// Receive-side DFT conductances: `l_dft` rows × `2·n_sub` columns.
///
/// Column `2(k−1)` holds `A cos(2πk i/L) + G_offset` and column `2k − 1`
/// holds `A sin(−2πk i/L) + G_offset` for row `i` and subcarrier `k`.
pub fn build_dft_matrix(
    params: &OfdmParams,
    map: &TxMapping,
    bounds: &DeviceBounds,
) -> Result<ConductanceMatrix> {
    params.validate()?;
    map.validate(bounds)?;
    let l = params.l_dft as f64;
    Ok(ConductanceMatrix::from_fn(params.l_dft, 2 * params.n_sub, |i, j| {
        let k = (j / 2 + 1) as f64;
        let theta = TAU * k * i as f64 / l;
        let w = if j % 2 == 0 { theta.cos() } else { (-theta).sin() };
        map.a_scale * w + map.g_offset
    }))
}

/// Integrated column outputs of one symbol and the comparator decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDecision {
    /// Integrated (I, Q) charge per subcarrier, μA·s.
    pub raw: Vec<(f64, f64)>,
    pub points: Vec<Qam4>,
}

impl SymbolDecision {
    fn from_raw(raw: Vec<(f64, f64)>) -> Self {
        let points = raw.iter().map(|&(i, q)| Qam4::decide(i, q)).collect();
        Self { raw, points }
    }

    /// Bits in the order produced by `qam4_map`.
    pub fn bits(&self) -> Vec<bool> {
        self.points.iter().flat_map(|p| {
            let (i, q) = p.bits();
            [i, q]
        }).collect()
    }
}

/// Feeds `samples` row by row and integrates every column for one symbol.
///
/// Sequential feed with integration over the symbol is the crossbar MVM
/// scaled by the sample period.
pub fn demodulate_symbol(
    rx: &CrossbarArray,
    samples: &[f64],
    params: &OfdmParams,
    map: &TxMapping,
) -> Result<SymbolDecision> {
    if samples.len() != params.l_dft {
        return Err(Error::Dimension(format!(
            "{} samples for a {}-point DFT",
            samples.len(),
            params.l_dft
        )));
    }
    if rx.cols() != 2 * params.n_sub {
        return Err(Error::Dimension(format!(
            "receive array has {} columns for {} subcarriers",
            rx.cols(),
            params.n_sub
        )));
    }
    let dt = params.sample_period();
    let out = rx.offset_outputs(samples, map.g_offset)?;
    let raw = out.chunks_exact(2).map(|c| (c[0] * dt, c[1] * dt)).collect();
    Ok(SymbolDecision::from_raw(raw))
}

/// Integrated output for a unit-amplitude subcarrier of `amplitude` volts:
/// `(L/2)·A·amplitude·dt`.
pub fn raw_unit_amplitude(params: &OfdmParams, map: &TxMapping, amplitude: f64) -> f64 {
    params.l_dft as f64 / 2.0 * map.a_scale * amplitude * params.sample_period()
}

/// DFT conductances with a one-tap equalizer folded into every subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedDft {
    pub matrix: ConductanceMatrix,
    /// Common factor applied to every equalizer tap so the matrix fits the
    /// device window; the array realizes `scale · eq_k`.
    pub scale: f64,
}

/// Rotates and scales each subcarrier's (cos, −sin) column pair by `eq_k`.
///
/// The pair is read as the complex column `c + i·s`; after multiplying by
/// `eq_k` its real and imaginary parts replace the pair, so the integrated
/// outputs become `eq_k · Y_k`. If the largest weight then exceeds the
/// headroom around `g_offset`, every column is shrunk by the same factor.
pub fn fold_equalizer(
    dft: &ConductanceMatrix,
    eq: &[Complex64],
    map: &TxMapping,
    bounds: &DeviceBounds,
) -> Result<FoldedDft> {
    if dft.cols() != 2 * eq.len() {
        return Err(Error::Dimension(format!(
            "{} equalizer taps for {} DFT columns",
            eq.len(),
            dft.cols()
        )));
    }
    if let Some(k) = eq.iter().position(|e| !(e.re.is_finite() && e.im.is_finite())) {
        return Err(Error::Range(format!("non-finite equalizer tap at subcarrier {}", k + 1)));
    }
    if let Some(k) = eq.iter().position(|e| e.norm_sqr() == 0.0) {
        return Err(Error::SingularEqualizer(k + 1));
    }
    let mut weights = vec![0.0; dft.rows() * dft.cols()];
    for i in 0..dft.rows() {
        for (k, e) in eq.iter().enumerate() {
            let c = Complex64::new(dft.get(i, 2 * k) - map.g_offset, dft.get(i, 2 * k + 1) - map.g_offset);
            let z = c * e;
            weights[i * dft.cols() + 2 * k] = z.re;
            weights[i * dft.cols() + 2 * k + 1] = z.im;
        }
    }
    let headroom = (bounds.g_max - map.g_offset).min(map.g_offset - bounds.g_min);
    let peak = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let scale = if peak > headroom { headroom / peak } else { 1.0 };
    let data = weights.iter().map(|w| bounds.clamp(map.g_offset + scale * w)).collect();
    Ok(FoldedDft { matrix: ConductanceMatrix::from_vec(dft.rows(), dft.cols(), data)?, scale })
}
