//! MIMO channel model, zero-forcing detection and the fused DFT + decoupling
//! crossbar matrix.
//!
//! Antenna counts follow the channel model `Rx(k) = H(k)·Tx(k) + n(k)`:
//! `n_tx` transmit streams, `n_rx` receive antennas, `H(k)` is
//! `n_rx × n_tx` and the zero-forcing weights `W(k)` are `n_tx × n_rx`.
//!
//! Time-domain blocks are indexed `[antenna][symbol][sample]`. A real block
//! `x_ℓ` of length `L` and its spectrum over subcarriers `1..=n_sub` are
//! related by `x_ℓ = Σ_k Re{X(k)·e^{i2πkℓ/L}}`, so a 4-QAM point `(I, Q)`
//! corresponds to `X(k) = I + iQ` at unit carrier amplitude.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::crossbar::{ConductanceMatrix, CrossbarArray, DeviceBounds};
use crate::error::{Error, Result};
use crate::ofdm::{OfdmParams, Qam4, QamGrid, TxMapping};
use crate::rng::{self, Domain};

pub type CMatrix = DMatrix<Complex64>;

/// Sample blocks indexed `[antenna][symbol][sample]`.
pub type SampleBlocks = Vec<Vec<Vec<f64>>>;

/// Default condition-number ceiling for zero-forcing.
pub const MAX_CONDITION: f64 = 1e6;

/// Per-subcarrier channel matrices, `h[k − 1]` for subcarrier `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrixSet {
    n_rx: usize,
    n_tx: usize,
    h: Vec<CMatrix>,
    pub noise_snr_db: Option<f64>,
}

impl ChannelMatrixSet {
    pub fn new(h: Vec<CMatrix>, noise_snr_db: Option<f64>) -> Result<Self> {
        let first = h.first().ok_or_else(|| Error::Dimension("empty channel set".into()))?;
        let (n_rx, n_tx) = first.shape();
        for (k, hk) in h.iter().enumerate() {
            if hk.shape() != (n_rx, n_tx) {
                return Err(Error::Dimension(format!(
                    "subcarrier {} is {:?}, expected {:?}",
                    k + 1,
                    hk.shape(),
                    (n_rx, n_tx)
                )));
            }
            if hk.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Range(format!("non-finite entry at subcarrier {}", k + 1)));
            }
        }
        Ok(Self { n_rx, n_tx, h, noise_snr_db })
    }

    pub fn identity(n: usize, n_sub: usize) -> Self {
        Self::scaled_identity(n, n_sub, Complex64::new(1.0, 0.0))
    }

    pub fn scaled_identity(n: usize, n_sub: usize, c: Complex64) -> Self {
        let h = (0..n_sub).map(|_| CMatrix::identity(n, n) * c).collect();
        Self { n_rx: n, n_tx: n, h, noise_snr_db: None }
    }

    /// Circularly-symmetric complex Gaussian entries of unit variance; each
    /// subcarrier is redrawn until its condition number is below
    /// `max_condition`.
    pub fn random(n_rx: usize, n_tx: usize, n_sub: usize, max_condition: f64, seed: u64) -> Self {
        let h = (0..n_sub)
            .map(|k| {
                let mut rng = rng::stream(seed, Domain::Channel, k as u64);
                loop {
                    let hk = CMatrix::from_fn(n_rx, n_tx, |_, _| complex_gaussian(&mut rng, 0.5));
                    if condition_number(&hk) < max_condition {
                        break hk;
                    }
                }
            })
            .collect();
        Self { n_rx, n_tx, h, noise_snr_db: None }
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_sub(&self) -> usize {
        self.h.len()
    }

    /// Matrix of subcarrier `k` (1-based).
    pub fn at(&self, k: usize) -> &CMatrix {
        &self.h[k - 1]
    }

    /// `k,m,n,re,im` rows, all indices 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,m,n,re,im\n");
        for (k, hk) in self.h.iter().enumerate() {
            for m in 0..self.n_rx {
                for n in 0..self.n_tx {
                    let z = hk[(m, n)];
                    out.push_str(&format!("{},{},{},{:?},{:?}\n", k + 1, m + 1, n + 1, z.re, z.im));
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record?;
            let int = |i: usize| -> Result<usize> {
                let s = record.get(i).ok_or_else(|| Error::Parse("missing column".into()))?;
                s.parse().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            };
            let float = |i: usize| -> Result<f64> {
                let s = record.get(i).ok_or_else(|| Error::Parse("missing column".into()))?;
                s.parse().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            };
            entries.push((int(0)?, int(1)?, int(2)?, Complex64::new(float(3)?, float(4)?)));
        }
        let dim = |f: fn(&(usize, usize, usize, Complex64)) -> usize| {
            entries.iter().map(f).max().unwrap_or(0)
        };
        let (n_sub, n_rx, n_tx) = (dim(|e| e.0), dim(|e| e.1), dim(|e| e.2));
        if entries.iter().any(|e| e.0 == 0 || e.1 == 0 || e.2 == 0) {
            return Err(Error::Parse("indices are 1-based".into()));
        }
        if entries.len() != n_sub * n_rx * n_tx {
            return Err(Error::Parse(format!(
                "{} entries for {n_sub} subcarriers of {n_rx}x{n_tx}",
                entries.len()
            )));
        }
        let mut h = vec![CMatrix::zeros(n_rx, n_tx); n_sub];
        for (k, m, n, z) in entries {
            h[k - 1][(m - 1, n - 1)] = z;
        }
        Self::new(h, None)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance_per_axis: f64) -> Complex64 {
    let sd = variance_per_axis.sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Ratio of the extreme singular values; infinite when rank deficient.
pub fn condition_number(h: &CMatrix) -> f64 {
    let sv = h.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `H(k)⁻¹` when square, `(Hᴴ H)⁻¹ Hᴴ` when there are more receive
/// antennas than streams.
pub fn zero_forcing_weights(h: &ChannelMatrixSet, max_condition: f64) -> Result<Vec<CMatrix>> {
    if h.n_tx > h.n_rx {
        return Err(Error::Dimension(format!(
            "{} streams cannot be separated with {} antennas",
            h.n_tx, h.n_rx
        )));
    }
    h.h.iter()
        .enumerate()
        .map(|(k, hk)| {
            let cond = condition_number(hk);
            if !(cond <= max_condition) {
                return Err(Error::SingularChannel {
                    subcarrier: k + 1,
                    reason: format!("condition number {cond:.3e} exceeds {max_condition:.1e}"),
                });
            }
            let singular = || Error::SingularChannel {
                subcarrier: k + 1,
                reason: "matrix not invertible".into(),
            };
            if h.n_tx == h.n_rx {
                hk.clone().try_inverse().ok_or_else(singular)
            } else {
                let hh = hk.adjoint();
                Ok((&hh * hk).try_inverse().ok_or_else(singular)? * hh)
            }
        })
        .collect()
}

/// Real form of a complex matrix, `[[Re, −Im], [Im, Re]]`, acting on
/// vectors stacked as `[Re v; Im v]`.
pub fn complex_expand(a: &CMatrix) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `[Re v; Im v]`.
pub fn realize(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

/// DFT basis vector `T_f(k)`: entries `e^{−i2πkℓ/L}`, `ℓ = 0..L`.
pub fn dft_basis(k: usize, l: usize) -> Vec<Complex64> {
    (0..l).map(|i| Complex64::from_polar(1.0, -TAU * (k * i) as f64 / l as f64)).collect()
}

/// DFT and zero-forcing fused into a single weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedMatrix {
    pub n_rx: usize,
    pub n_tx: usize,
    pub n_sub: usize,
    pub l_dft: usize,
    /// `n_rx·L × n_tx·n_sub`; row `(m, ℓ)`, column `(n, k)` holds
    /// `T_f(k)_ℓ · W(k)[n, m]`.
    pub complex: CMatrix,
    /// `n_rx·L × 2·n_tx·n_sub`; column pair `(2c, 2c + 1)` gives the real
    /// and imaginary outputs of complex column `c` for real inputs.
    pub real: DMatrix<f64>,
}

impl FusedMatrix {
    /// Complex column index of stream `n`, subcarrier `k` (1-based `k`).
    pub fn column(&self, n: usize, k: usize) -> usize {
        n * self.n_sub + (k - 1)
    }

    /// Decoupled spectra for one stacked input vector, `[stream][k − 1]`.
    pub fn apply(&self, input: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        if input.len() != self.real.nrows() {
            return Err(Error::Dimension(format!(
                "{} inputs for {} rows",
                input.len(),
                self.real.nrows()
            )));
        }
        let v = DMatrix::from_column_slice(input.len(), 1, input);
        let y = self.real.tr_mul(&v);
        Ok(self.split(|c| Complex64::new(y[2 * c], y[2 * c + 1])))
    }

    fn split<T>(&self, f: impl Fn(usize) -> T) -> Vec<Vec<T>> {
        (0..self.n_tx)
            .map(|n| (1..=self.n_sub).map(|k| f(self.column(n, k))).collect())
            .collect()
    }

    /// Offset-scheme conductances: `g = G_offset + scale · w` with `scale`
    /// mapping the largest weight magnitude to `map.a_scale`.
    pub fn to_conductance(&self, map: &TxMapping, bounds: &DeviceBounds) -> Result<(ConductanceMatrix, f64)> {
        map.validate(bounds)?;
        let peak = self.real.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        if peak == 0.0 {
            return Err(Error::Range("fused matrix is all zero".into()));
        }
        let scale = map.a_scale / peak;
        let g = ConductanceMatrix::from_fn(self.real.nrows(), self.real.ncols(), |i, j| {
            bounds.clamp(map.g_offset + scale * self.real[(i, j)])
        });
        Ok((g, scale))
    }
}

/// Builds `G` with block `(m, n)` equal to
/// `[T_f(1)·W(1)[n, m] … T_f(n_sub)·W(n_sub)[n, m]]`.
pub fn fuse(params: &OfdmParams, w: &[CMatrix]) -> Result<FusedMatrix> {
    params.validate()?;
    if w.len() != params.n_sub {
        return Err(Error::Dimension(format!(
            "{} weight matrices for {} subcarriers",
            w.len(),
            params.n_sub
        )));
    }
    let (n_tx, n_rx) = w[0].shape();
    if w.iter().any(|wk| wk.shape() != (n_tx, n_rx)) {
        return Err(Error::Dimension("weight matrices differ in shape".into()));
    }
    let l = params.l_dft;
    let n_sub = params.n_sub;
    let bases: Vec<Vec<Complex64>> = (1..=n_sub).map(|k| dft_basis(k, l)).collect();
    let complex = CMatrix::from_fn(n_rx * l, n_tx * n_sub, |row, col| {
        let (m, ell) = (row / l, row % l);
        let (n, k0) = (col / n_sub, col % n_sub);
        bases[k0][ell] * w[k0][(n, m)]
    });

    // Real inputs only excite the left half of the expanded transpose.
    let expanded = complex_expand(&complex.transpose());
    let outputs = n_tx * n_sub;
    let real = DMatrix::from_fn(n_rx * l, 2 * outputs, |row, j| {
        let c = j / 2;
        if j % 2 == 0 {
            expanded[(c, row)]
        } else {
            expanded[(outputs + c, row)]
        }
    });
    Ok(FusedMatrix { n_rx, n_tx, n_sub, l_dft: l, complex, real })
}

/// Spectrum of a real block over subcarriers `1..=n_sub`.
pub fn block_spectrum(block: &[f64], n_sub: usize) -> Vec<Complex64> {
    let l = block.len();
    (1..=n_sub)
        .map(|k| {
            dft_basis(k, l).iter().zip(block).map(|(b, x)| b * x).sum::<Complex64>()
                * (2.0 / l as f64)
        })
        .collect()
}

/// Real block of length `l` synthesized from a spectrum over `1..=n_sub`.
pub fn block_from_spectrum(spectrum: &[Complex64], l: usize) -> Vec<f64> {
    (0..l)
        .map(|ell| {
            spectrum
                .iter()
                .enumerate()
                .map(|(k0, x)| {
                    (x * Complex64::from_polar(1.0, TAU * ((k0 + 1) * ell) as f64 / l as f64)).re
                })
                .sum()
        })
        .collect()
}

/// Unit-amplitude sample blocks of the given grids.
pub fn grid_blocks(grids: &[QamGrid], l: usize) -> SampleBlocks {
    grids
        .iter()
        .map(|g| {
            (0..g.n_symbols())
                .map(|s| {
                    let spec: Vec<Complex64> =
                        g.symbol(s).iter().map(|p| Complex64::new(p.i as f64, p.q as f64)).collect();
                    block_from_spectrum(&spec, l)
                })
                .collect()
        })
        .collect()
}

/// Mixes transmitted grids through `h` (unit carrier amplitude).
pub fn apply_channel(
    tx: &[QamGrid],
    h: &ChannelMatrixSet,
    params: &OfdmParams,
    rng_seed: u64,
) -> Result<SampleBlocks> {
    apply_channel_blocks(&grid_blocks(tx, params.l_dft), h, params, rng_seed)
}

/// Mixes transmitted sample blocks through `h`, one subcarrier at a time,
/// and rebuilds the received blocks. When `h.noise_snr_db` is set, complex
/// Gaussian noise is added per subcarrier at that SNR relative to the mean
/// received subcarrier power; the noise of receive antenna `m`, symbol `s`
/// comes from noise sub-stream `s·n_rx + m`.
pub fn apply_channel_blocks(
    tx: &[Vec<Vec<f64>>],
    h: &ChannelMatrixSet,
    params: &OfdmParams,
    rng_seed: u64,
) -> Result<SampleBlocks> {
    if tx.len() != h.n_tx {
        return Err(Error::Dimension(format!(
            "{} transmit streams for a channel with {} inputs",
            tx.len(),
            h.n_tx
        )));
    }
    if h.n_sub() != params.n_sub {
        return Err(Error::Dimension(format!(
            "channel covers {} subcarriers, frame has {}",
            h.n_sub(),
            params.n_sub
        )));
    }
    let n_symbols = tx[0].len();
    if tx.iter().any(|a| a.len() != n_symbols || a.iter().any(|b| b.len() != params.l_dft)) {
        return Err(Error::Dimension("transmit blocks differ in shape".into()));
    }
    // spectra[s][n][k]
    let spectra: Vec<Vec<Vec<Complex64>>> = (0..n_symbols)
        .map(|s| tx.iter().map(|a| block_spectrum(&a[s], params.n_sub)).collect())
        .collect();
    // received[s][m][k]
    let mut received: Vec<Vec<Vec<Complex64>>> = spectra
        .iter()
        .map(|x| {
            (0..h.n_rx)
                .map(|m| {
                    (1..=params.n_sub)
                        .map(|k| (0..h.n_tx).map(|n| h.at(k)[(m, n)] * x[n][k - 1]).sum())
                        .collect()
                })
                .collect()
        })
        .collect();

    if let Some(snr_db) = h.noise_snr_db.filter(|s| s.is_finite()) {
        let count = (n_symbols * h.n_rx * params.n_sub) as f64;
        let power: f64 =
            received.iter().flatten().flatten().map(|z| z.norm_sqr()).sum::<f64>() / count;
        let variance = power / 10f64.powf(snr_db / 10.0);
        for (s, per_symbol) in received.iter_mut().enumerate() {
            for (m, spec) in per_symbol.iter_mut().enumerate() {
                let mut rng = rng::stream(rng_seed, Domain::Noise, (s * h.n_rx + m) as u64);
                for z in spec.iter_mut() {
                    *z += complex_gaussian(&mut rng, variance / 2.0);
                }
            }
        }
    }

    Ok((0..h.n_rx)
        .map(|m| received.iter().map(|x| block_from_spectrum(&x[m], params.l_dft)).collect())
        .collect())
}

/// Decoded output of the fused receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoDecision {
    /// Integrated outputs `[stream][symbol][k − 1]` as (I, Q), μA·s.
    pub raw: Vec<Vec<Vec<(f64, f64)>>>,
    pub grids: Vec<QamGrid>,
}

impl MimoDecision {
    pub fn bits(&self) -> Vec<Vec<bool>> {
        self.grids.iter().map(crate::ofdm::qam4_demap).collect()
    }
}

/// Stacks one symbol of every receive antenna into the crossbar input.
pub fn stack_inputs(blocks: &[Vec<Vec<f64>>], symbol: usize) -> Vec<f64> {
    blocks.iter().flat_map(|a| a[symbol].iter().copied()).collect()
}

/// One crossbar pass per symbol through the fused conductances.
pub fn mimo_receive(
    blocks: &[Vec<Vec<f64>>],
    rx: &CrossbarArray,
    layout: &FusedMatrix,
    params: &OfdmParams,
    map: &TxMapping,
) -> Result<MimoDecision> {
    if blocks.len() != layout.n_rx {
        return Err(Error::Dimension(format!(
            "{} antennas for a receiver built for {}",
            blocks.len(),
            layout.n_rx
        )));
    }
    if rx.rows() != layout.real.nrows() || rx.cols() != layout.real.ncols() {
        return Err(Error::Dimension("crossbar does not match the fused layout".into()));
    }
    let n_symbols = blocks[0].len();
    if blocks.iter().any(|a| a.len() != n_symbols || a.iter().any(|b| b.len() != layout.l_dft)) {
        return Err(Error::Dimension("receive blocks differ in shape".into()));
    }
    let dt = params.sample_period();
    let mut raw = vec![Vec::with_capacity(n_symbols); layout.n_tx];
    for s in 0..n_symbols {
        let out = rx.offset_outputs(&stack_inputs(blocks, s), map.g_offset)?;
        for (n, per_stream) in raw.iter_mut().enumerate() {
            per_stream.push(
                (1..=layout.n_sub)
                    .map(|k| {
                        let c = layout.column(n, k);
                        (out[2 * c] * dt, out[2 * c + 1] * dt)
                    })
                    .collect::<Vec<_>>(),
            );
        }
    }
    let grids = raw
        .iter()
        .map(|per_stream| {
            let points = per_stream.iter().flatten().map(|&(i, q)| Qam4::decide(i, q)).collect();
            QamGrid::new(layout.n_sub, points)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MimoDecision { raw, grids })
}

/// Reference two-stage receiver: explicit DFT of every antenna, then
/// `W(k)` per subcarrier. Returns `[stream][k − 1]` for one stacked input.
pub fn sequential_detect(input: &[f64], w: &[CMatrix], l: usize) -> Vec<Vec<Complex64>> {
    let n_rx = input.len() / l;
    let n_tx = w[0].nrows();
    let y: Vec<Vec<Complex64>> = (0..n_rx)
        .map(|m| {
            let block = &input[m * l..(m + 1) * l];
            (1..=w.len())
                .map(|k| dft_basis(k, l).iter().zip(block).map(|(b, x)| b * x).sum())
                .collect()
        })
        .collect();
    (0..n_tx)
        .map(|n| {
            (0..w.len())
                .map(|k0| (0..n_rx).map(|m| w[k0][(n, m)] * y[m][k0]).sum())
                .collect()
        })
        .collect()
}
