use std::f64::consts::TAU;

use super::{OfdmParams, QamGrid, TxMapping};
use crate::crossbar::{ConductanceMatrix, CrossbarArray};
use crate::error::{Error, Result};
use crate::waveform::Waveform;

/// Transmit conductances: `2·n_sub` rows × `2·n_symbols` columns.
///
/// Row `2k` is driven by `cos` of subcarrier `k + 1` and row `2k + 1` by
/// `−sin`. Symbol `s` owns columns `2s` (negative) and `2s + 1` (positive); a
/// `+1` weight puts `g_high` on the positive column and `g_low` on the
/// negative one, a `−1` weight the reverse.
pub fn encode_tx_conductance(grid: &QamGrid, map: &TxMapping) -> ConductanceMatrix {
    let rows = 2 * grid.n_sub();
    let cols = 2 * grid.n_symbols();
    ConductanceMatrix::from_fn(rows, cols, |r, c| {
        let p = grid.get(c / 2, r / 2);
        let w = if r % 2 == 0 { p.i } else { p.q };
        let positive_col = c % 2 == 1;
        if (w > 0) == positive_col {
            map.g_high
        } else {
            map.g_low
        }
    })
}

/// Carrier voltages at time `t`:
/// `[V cos(ω₁t), −V sin(ω₁t), …, V cos(ω_N t), −V sin(ω_N t)]`.
pub fn carrier_bank(params: &OfdmParams, t: f64) -> Vec<f64> {
    let v = params.carrier_amplitude;
    let mut out = Vec::with_capacity(2 * params.n_sub);
    for k in 1..=params.n_sub {
        let (s, c) = (TAU * params.subcarrier_freq(k) * t).sin_cos();
        out.push(v * c);
        out.push(-v * s);
    }
    out
}

/// Baseband of one symbol: the symbol's column pair is switched on and the
/// differential current is converted to volts by the transimpedance stage.
/// Sampled at `params.sim_rate()` over one symbol period.
pub fn synthesize_baseband(
    tx: &CrossbarArray,
    params: &OfdmParams,
    map: &TxMapping,
    symbol: usize,
) -> Result<Waveform> {
    params.validate()?;
    if tx.rows() != 2 * params.n_sub {
        return Err(Error::Dimension(format!(
            "transmit array has {} rows, the carrier bank drives {}",
            tx.rows(),
            2 * params.n_sub
        )));
    }
    if 2 * symbol + 1 >= tx.cols() {
        return Err(Error::Index(format!("symbol {symbol} of {}", tx.cols() / 2)));
    }
    let mut view = tx.clone();
    view.enable_only(&[2 * symbol, 2 * symbol + 1])?;

    let rate = params.sim_rate();
    let t0 = symbol as f64 * params.symbol_period;
    let to_volts = 1e-6 * map.tia_gain_ohm;
    let samples = (0..params.sim_samples_per_symbol())
        .map(|n| {
            let t = t0 + n as f64 / rate;
            view.differential_output(&carrier_bank(params, t), symbol).map(|i| i * to_volts)
        })
        .collect::<Result<Vec<_>>>()?;
    Waveform::new(samples, rate, t0)
}

/// All symbols of the array back to back.
pub fn synthesize_stream(tx: &CrossbarArray, params: &OfdmParams, map: &TxMapping) -> Result<Waveform> {
    let n_symbols = tx.cols() / 2;
    let mut out = Waveform::new(Vec::new(), params.sim_rate(), 0.0)?;
    for s in 0..n_symbols {
        out = out.concat(&synthesize_baseband(tx, params, map, s)?)?;
    }
    Ok(out)
}
