//! End-to-end pipelines behind each experiment.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{
    bits_text, payload_bits, Experiment, ExperimentConfig, DEMO_BITS, DEMO_TEXT, MIMO_BITS,
    MIMO_STREAMS,
};
use super::metrics::{
    compute_ber, compute_evm, normalize_constellation, wilson_interval, BerCount, Z_95,
};
use crate::crossbar::{
    perturb_matrix, ConductanceMatrix, CrossbarArray, ProgrammingPolicy,
};
use crate::energetics::{
    adc_energy_per_sample_bit, crossbar_efficiency, digitization_reduction, to_tops_per_watt,
};
use crate::error::{Error, Result};
use crate::frontend::{add_awgn, receive_chain, sample_hold, upconvert, NoiseSpec};
use crate::mimo::{self, ChannelMatrixSet, SampleBlocks};
use crate::ofdm::{
    build_dft_matrix, demodulate_symbol, encode_tx_conductance, qam4_map, synthesize_baseband,
    OfdmParams, Qam4, QamGrid,
};
use crate::rng::{child_seed, Domain};
use crate::waveform::Waveform;

/// Report text plus every data file produced by a run, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: String,
    pub files: BTreeMap<String, String>,
}

impl RunOutput {
    fn new<T: Serialize>(report: &T, mut files: BTreeMap<String, String>) -> Result<Self> {
        let report = serde_json::to_string_pretty(report)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))?
            + "\n";
        files.insert("report.json".into(), report.clone());
        Ok(Self { report, files })
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Demo480 => run_demo480(cfg),
        Experiment::Mimo224 => run_mimo224(cfg),
        Experiment::BerSweep => run_ber_sweep(cfg),
        Experiment::EnergyReport => run_energy_report(cfg),
        Experiment::Constellation => run_constellation(cfg),
    }
}

fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    child_seed(cfg.seed, Domain::Trial, trial as u64)
}

/// Programmed copy of `targets`: exact when the error is zero, otherwise
/// uniformly perturbed or closed-loop written.
fn program(
    targets: &ConductanceMatrix,
    cfg: &ExperimentConfig,
    programming_error: f64,
    seed: u64,
) -> Result<CrossbarArray> {
    let g = if programming_error == 0.0 {
        targets.clone()
    } else {
        perturb_matrix(targets, programming_error, &cfg.bounds, seed)?
    };
    CrossbarArray::from_matrix(g, cfg.bounds)
}

/// Closed-loop programming of a fresh array (every cell starts at `g_min`).
pub fn program_closed_loop(
    targets: &ConductanceMatrix,
    cfg: &ExperimentConfig,
    programming_error: f64,
    seed: u64,
) -> Result<CrossbarArray> {
    let policy = ProgrammingPolicy::with_delta_g(cfg.bounds.delta_g_for_error(programming_error));
    let mut array = CrossbarArray::new(targets.rows(), targets.cols(), cfg.bounds);
    array.program_matrix(targets, &policy, seed)?;
    Ok(array)
}

fn payload(cfg: &ExperimentConfig, n: usize) -> Result<Vec<bool>> {
    payload_bits(cfg.payload.as_deref().unwrap_or(DEMO_TEXT), cfg.seven_bit, n)
}

fn grid_to_raw(grid: &QamGrid) -> Vec<(f64, f64)> {
    grid.points().iter().map(|p| (p.i as f64, p.q as f64)).collect()
}

fn constellation_csv(raw: &[(f64, f64)], reference: &QamGrid) -> String {
    let mut out = String::from("symbol,subcarrier,I,Q,ref_I,ref_Q\n");
    let n_sub = reference.n_sub();
    for (idx, ((i, q), p)) in raw.iter().zip(reference.points()).enumerate() {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{},{}\n",
            idx / n_sub,
            idx % n_sub + 1,
            i,
            q,
            p.i,
            p.q
        ));
    }
    out
}

/// One pass of the single-link pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoTrial {
    pub sent: Vec<bool>,
    pub received: Vec<bool>,
    pub grid: QamGrid,
    /// Integrated receiver outputs, symbol-major.
    pub raw: Vec<(f64, f64)>,
    /// Spectrum of the transmitted baseband at the subcarriers.
    pub tx_points: Vec<(f64, f64)>,
    pub agc_gains: Vec<f64>,
    pub tx: CrossbarArray,
    pub rx: CrossbarArray,
    pub first_baseband: Waveform,
}

impl DemoTrial {
    pub fn ber(&self) -> BerCount {
        compute_ber(&self.sent, &self.received).expect("equal lengths")
    }
}

/// Transmit array → carrier bank → front end → DFT array for every symbol.
pub fn demo_trial(cfg: &ExperimentConfig, programming_error: f64, trial: usize) -> Result<DemoTrial> {
    let seed = trial_seed(cfg, trial);
    let bits = payload(cfg, DEMO_BITS)?;
    let grid = qam4_map(&bits, cfg.ofdm.n_sub)?;
    run_link(cfg, &grid, programming_error, seed)
}

/// Runs an arbitrary grid through the single-link pipeline.
pub fn run_link(
    cfg: &ExperimentConfig,
    grid: &QamGrid,
    programming_error: f64,
    seed: u64,
) -> Result<DemoTrial> {
    let fe = cfg.frontend();
    let params = fe.ofdm_params(&cfg.ofdm)?;
    let map = &cfg.mapping;

    let tx_error = if cfg.perturb_tx { programming_error } else { 0.0 };
    let tx = program(
        &encode_tx_conductance(grid, map),
        cfg,
        tx_error,
        child_seed(seed, Domain::Perturbation, 0),
    )?;
    let rx = program(
        &build_dft_matrix(&params, map, &cfg.bounds)?,
        cfg,
        programming_error,
        child_seed(seed, Domain::Perturbation, 1),
    )?;

    let mut raw = Vec::with_capacity(grid.points().len());
    let mut points = Vec::with_capacity(grid.points().len());
    let mut tx_points = Vec::with_capacity(grid.points().len());
    let mut agc_gains = Vec::with_capacity(grid.n_symbols());
    let mut first_baseband = None;
    for s in 0..grid.n_symbols() {
        let bb = synthesize_baseband(&tx, &params, map, s)?;
        let tx_samples = sample_hold(&bb, params.f_sam)?;
        tx_points.extend(
            mimo::block_spectrum(&tx_samples.samples, params.n_sub).iter().map(|z| (z.re, z.im)),
        );

        let mut pb = upconvert(&bb, &fe)?;
        if let Some(snr) = cfg.snr_db {
            pb = add_awgn(&pb, NoiseSpec::SnrDb(snr), child_seed(seed, Domain::Noise, s as u64))?;
        }
        let bbr = crate::frontend::downconvert(&pb, &fe)?;
        let agc = crate::frontend::vga_agc(&bbr, &fe);
        agc_gains.push(agc.gain);
        let samples = sample_hold(&agc.waveform, params.f_sam)?;
        let d = demodulate_symbol(&rx, &samples.samples, &params, map)?;
        raw.extend(d.raw.iter().copied());
        points.extend(d.points.iter().copied());
        if s == 0 {
            first_baseband = Some(bb);
        }
    }
    let received_grid = QamGrid::new(grid.n_sub(), points)?;
    Ok(DemoTrial {
        sent: crate::ofdm::qam4_demap(grid),
        received: crate::ofdm::qam4_demap(&received_grid),
        grid: grid.clone(),
        raw,
        tx_points,
        agc_gains,
        tx,
        rx,
        first_baseband: first_baseband.unwrap_or(Waveform::new(Vec::new(), params.sim_rate(), 0.0)?),
    })
}

/// Ideal chain check used by tests: front end only, no crossbar.
pub fn frontend_samples(cfg: &ExperimentConfig, bb: &Waveform) -> Result<Waveform> {
    let fe = cfg.frontend();
    receive_chain(&upconvert(bb, &fe)?, &fe, cfg.ofdm.f_sam)
}

#[derive(Debug, Serialize)]
struct DemoReport<'a> {
    experiment: String,
    config: &'a ExperimentConfig,
    bits_per_trial: usize,
    trials: usize,
    bits_total: usize,
    bits_wrong: usize,
    ber: f64,
    ber_ci95: (f64, f64),
    error_free_trials: usize,
    per_trial_errors: Vec<usize>,
    sent_text: String,
    recovered_text: String,
    rx_evm: f64,
    tx_evm: f64,
}

fn run_trials(cfg: &ExperimentConfig, programming_error: f64) -> Result<Vec<DemoTrial>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| demo_trial(cfg, programming_error, t))
        .collect()
}

pub fn run_demo480(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let trials = run_trials(cfg, cfg.programming_error)?;
    let counts: Vec<BerCount> = trials.iter().map(DemoTrial::ber).collect();
    let total = counts.iter().fold(BerCount::new(0, 0), |a, &b| a.merge(b));
    let first = &trials[0];
    let rx_norm = normalize_constellation(&first.raw);
    let tx_norm = normalize_constellation(&first.tx_points);
    let report = DemoReport {
        experiment: cfg.experiment.to_string(),
        config: cfg,
        bits_per_trial: DEMO_BITS,
        trials: cfg.trials,
        bits_total: total.total,
        bits_wrong: total.errors,
        ber: total.ber,
        ber_ci95: wilson_interval(total.errors, total.total, Z_95),
        error_free_trials: counts.iter().filter(|c| c.errors == 0).count(),
        per_trial_errors: counts.iter().map(|c| c.errors).collect(),
        sent_text: bits_text(&first.sent, cfg.seven_bit),
        recovered_text: bits_text(&first.received, cfg.seven_bit),
        rx_evm: compute_evm(&rx_norm, first.grid.points())?,
        tx_evm: compute_evm(&tx_norm, first.grid.points())?,
    };
    let mut files = BTreeMap::new();
    files.insert("constellation_rx.csv".into(), constellation_csv(&rx_norm, &first.grid));
    files.insert("constellation_tx.csv".into(), constellation_csv(&tx_norm, &first.grid));
    files.insert("qam_grid.csv".into(), first.grid.to_csv());
    files.insert("tx_conductance.csv".into(), first.tx.conductances().to_csv());
    files.insert("rx_conductance.csv".into(), first.rx.conductances().to_csv());
    files.insert("baseband_symbol0.csv".into(), first.first_baseband.to_csv());
    RunOutput::new(&report, files)
}

#[derive(Debug, Serialize)]
struct ConstellationReport<'a> {
    experiment: String,
    config: &'a ExperimentConfig,
    medium: String,
    points: usize,
    tx_evm: f64,
    rx_evm: f64,
    bits_wrong: usize,
    agc_gains: Vec<f64>,
}

pub fn run_constellation(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let trial = demo_trial(cfg, cfg.programming_error, 0)?;
    let rx_norm = normalize_constellation(&trial.raw);
    let tx_norm = normalize_constellation(&trial.tx_points);
    let report = ConstellationReport {
        experiment: cfg.experiment.to_string(),
        config: cfg,
        medium: cfg.medium.to_string(),
        points: trial.grid.points().len(),
        tx_evm: compute_evm(&tx_norm, trial.grid.points())?,
        rx_evm: compute_evm(&rx_norm, trial.grid.points())?,
        bits_wrong: trial.ber().errors,
        agc_gains: trial.agc_gains.clone(),
    };
    let mut files = BTreeMap::new();
    files.insert("constellation_rx.csv".into(), constellation_csv(&rx_norm, &trial.grid));
    files.insert("constellation_tx.csv".into(), constellation_csv(&tx_norm, &trial.grid));
    files.insert("constellation_ideal.csv".into(), constellation_csv(&grid_to_raw(&trial.grid), &trial.grid));
    RunOutput::new(&report, files)
}

/// One pass of the 2×2 MIMO pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoTrial {
    pub sent: Vec<Vec<bool>>,
    pub received: Vec<Vec<bool>>,
    pub grids: Vec<QamGrid>,
    pub raw: Vec<Vec<(f64, f64)>>,
    pub fused_conductance: ConductanceMatrix,
}

impl MimoTrial {
    pub fn ber(&self) -> BerCount {
        self.sent
            .iter()
            .zip(&self.received)
            .map(|(a, b)| compute_ber(a, b).expect("equal lengths"))
            .fold(BerCount::new(0, 0), BerCount::merge)
    }
}

/// The channel used by the MIMO demo for this configuration.
pub fn mimo_channel(cfg: &ExperimentConfig) -> ChannelMatrixSet {
    let n_sub = cfg.mimo_params().n_sub;
    let mut h = if cfg.identity_channel {
        ChannelMatrixSet::identity(MIMO_STREAMS, n_sub)
    } else {
        ChannelMatrixSet::random(
            MIMO_STREAMS,
            MIMO_STREAMS,
            n_sub,
            cfg.channel_max_condition,
            child_seed(cfg.seed, Domain::Channel, 0),
        )
    };
    h.noise_snr_db = cfg.snr_db;
    h
}

pub fn mimo_trial(
    cfg: &ExperimentConfig,
    channel: &ChannelMatrixSet,
    programming_error: f64,
    trial: usize,
) -> Result<MimoTrial> {
    let seed = trial_seed(cfg, trial);
    let params = cfg.mimo_params();
    let map = &cfg.mapping;
    let bits = payload(cfg, MIMO_BITS)?;
    let per_stream = MIMO_BITS / MIMO_STREAMS;
    let grids = bits
        .chunks(per_stream)
        .map(|b| qam4_map(b, params.n_sub))
        .collect::<Result<Vec<_>>>()?;

    let tx_error = if cfg.perturb_tx { programming_error } else { 0.0 };
    let mut tx_blocks: SampleBlocks = Vec::with_capacity(MIMO_STREAMS);
    for (n, grid) in grids.iter().enumerate() {
        let tx = program(
            &encode_tx_conductance(grid, map),
            cfg,
            tx_error,
            child_seed(seed, Domain::Perturbation, n as u64),
        )?;
        tx_blocks.push(
            (0..grid.n_symbols())
                .map(|s| synthesize_baseband(&tx, &params, map, s).map(|w| w.samples))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let rx_blocks = mimo::apply_channel_blocks(&tx_blocks, channel, &params, seed)?;

    let weights = mimo::zero_forcing_weights(channel, mimo::MAX_CONDITION)?;
    let fused = mimo::fuse(&params, &weights)?;
    let (targets, _) = fused.to_conductance(map, &cfg.bounds)?;
    let rx = program(&targets, cfg, programming_error, child_seed(seed, Domain::Perturbation, 100))?;
    let decision = mimo::mimo_receive(&rx_blocks, &rx, &fused, &params, map)?;

    Ok(MimoTrial {
        sent: grids.iter().map(crate::ofdm::qam4_demap).collect(),
        received: decision.bits(),
        grids,
        raw: decision.raw.iter().map(|s| s.iter().flatten().copied().collect()).collect(),
        fused_conductance: rx.conductances().clone(),
    })
}

#[derive(Debug, Serialize)]
struct MimoReport<'a> {
    experiment: String,
    config: &'a ExperimentConfig,
    streams: usize,
    subcarriers: usize,
    symbols: usize,
    crossbar_rows: usize,
    crossbar_cols: usize,
    channel_condition_numbers: Vec<f64>,
    trials: usize,
    bits_total: usize,
    bits_wrong: usize,
    ber: f64,
    ber_ci95: (f64, f64),
    error_free_trials: usize,
    per_trial_errors: Vec<usize>,
    stream_evm: Vec<f64>,
}

pub fn run_mimo224(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let channel = mimo_channel(cfg);
    let trials: Vec<MimoTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| mimo_trial(cfg, &channel, cfg.programming_error, t))
        .collect::<Result<_>>()?;
    let counts: Vec<BerCount> = trials.iter().map(MimoTrial::ber).collect();
    let total = counts.iter().fold(BerCount::new(0, 0), |a, &b| a.merge(b));
    let first = &trials[0];
    let normalized: Vec<Vec<(f64, f64)>> =
        first.raw.iter().map(|r| normalize_constellation(r)).collect();
    let params = cfg.mimo_params();
    let report = MimoReport {
        experiment: cfg.experiment.to_string(),
        config: cfg,
        streams: MIMO_STREAMS,
        subcarriers: params.n_sub,
        symbols: first.grids[0].n_symbols(),
        crossbar_rows: first.fused_conductance.rows(),
        crossbar_cols: first.fused_conductance.cols(),
        channel_condition_numbers: (1..=params.n_sub)
            .map(|k| mimo::condition_number(channel.at(k)))
            .collect(),
        trials: cfg.trials,
        bits_total: total.total,
        bits_wrong: total.errors,
        ber: total.ber,
        ber_ci95: wilson_interval(total.errors, total.total, Z_95),
        error_free_trials: counts.iter().filter(|c| c.errors == 0).count(),
        per_trial_errors: counts.iter().map(|c| c.errors).collect(),
        stream_evm: normalized
            .iter()
            .zip(&first.grids)
            .map(|(r, g)| compute_evm(r, g.points()))
            .collect::<Result<_>>()?,
    };
    let mut files = BTreeMap::new();
    files.insert("channel.csv".into(), channel.to_csv());
    files.insert("fused_conductance.csv".into(), first.fused_conductance.to_csv());
    for (n, (r, g)) in normalized.iter().zip(&first.grids).enumerate() {
        files.insert(format!("constellation_stream{}.csv", n + 1), constellation_csv(r, g));
    }
    RunOutput::new(&report, files)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerPoint {
    pub programming_error: f64,
    pub snr_db: Option<f64>,
    pub bits_total: usize,
    pub bits_wrong: usize,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerReport {
    pub points: Vec<BerPoint>,
}

impl BerReport {
    /// True when every later point is at least as bad as every earlier one,
    /// or their 95 % intervals overlap.
    pub fn non_decreasing_within_ci(&self) -> bool {
        self.points.iter().enumerate().all(|(i, a)| {
            self.points[i + 1..].iter().all(|b| b.ber >= a.ber || b.ci_high >= a.ci_low)
        })
    }

    pub fn at(&self, programming_error: f64) -> Option<&BerPoint> {
        self.points.iter().find(|p| (p.programming_error - programming_error).abs() < 1e-12)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("programming_error,snr_db,bits_total,bits_wrong,ber,ci_low,ci_high\n");
        for p in &self.points {
            let snr = p.snr_db.map_or(String::from("inf"), |s| format!("{s}"));
            out.push_str(&format!(
                "{},{},{},{},{:e},{:e},{:e}\n",
                p.programming_error, snr, p.bits_total, p.bits_wrong, p.ber, p.ci_low, p.ci_high
            ));
        }
        out
    }
}

pub fn ber_sweep(cfg: &ExperimentConfig) -> Result<BerReport> {
    let jobs: Vec<(usize, usize)> = (0..cfg.sweep_errors.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let counts: Vec<BerCount> = jobs
        .par_iter()
        .map(|&(p, t)| {
            // every point sees the same trial seeds so curves are paired
            demo_trial(cfg, cfg.sweep_errors[p], t).map(|r| r.ber())
        })
        .collect::<Result<_>>()?;
    let points = cfg
        .sweep_errors
        .iter()
        .enumerate()
        .map(|(p, &e)| {
            let c = counts[p * cfg.trials..(p + 1) * cfg.trials]
                .iter()
                .fold(BerCount::new(0, 0), |a, &b| a.merge(b));
            let (ci_low, ci_high) = wilson_interval(c.errors, c.total, Z_95);
            BerPoint {
                programming_error: e,
                snr_db: cfg.snr_db,
                bits_total: c.total,
                bits_wrong: c.errors,
                ber: c.ber,
                ci_low,
                ci_high,
            }
        })
        .collect();
    Ok(BerReport { points })
}

#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    experiment: String,
    config: &'a ExperimentConfig,
    points: &'a [BerPoint],
    non_decreasing_within_ci: bool,
    ber_at_25_percent: Option<BerPoint>,
}

pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let sweep = ber_sweep(cfg)?;
    let report = SweepReport {
        experiment: cfg.experiment.to_string(),
        config: cfg,
        points: &sweep.points,
        non_decreasing_within_ci: sweep.non_decreasing_within_ci(),
        ber_at_25_percent: sweep.at(0.25).copied(),
    };
    let mut files = BTreeMap::new();
    files.insert("ber_sweep.csv".into(), sweep.to_csv());
    RunOutput::new(&report, files)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySummary {
    pub energy_ratio: f64,
    pub reduction_factor: f64,
    pub efficiency_ops_per_joule: f64,
    pub efficiency_tops_per_watt: f64,
}

pub fn energy_summary(cfg: &ExperimentConfig) -> Result<EnergySummary> {
    let eff = crossbar_efficiency(&cfg.efficiency)?;
    Ok(EnergySummary {
        energy_ratio: cfg.energy.energy_ratio(),
        reduction_factor: digitization_reduction(&cfg.energy)?,
        efficiency_ops_per_joule: eff,
        efficiency_tops_per_watt: to_tops_per_watt(eff),
    })
}

#[derive(Debug, Serialize)]
struct EnergyReport<'a> {
    experiment: String,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    summary: EnergySummary,
}

pub fn run_energy_report(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let report = EnergyReport {
        experiment: cfg.experiment.to_string(),
        config: cfg,
        summary: energy_summary(cfg)?,
    };
    let mut curve = String::from("enob,energy_per_sample_bit,relative_to_comparator\n");
    let base = adc_energy_per_sample_bit(cfg.energy.enob_comparator);
    for step in 2..=32 {
        let enob = step as f64 / 2.0;
        let e = adc_energy_per_sample_bit(enob);
        curve.push_str(&format!("{enob},{e:e},{:e}\n", e / base));
    }
    let mut files = BTreeMap::new();
    files.insert("adc_energy_curve.csv".into(), curve);
    RunOutput::new(&report, files)
}

/// Ideal unit-amplitude baseband for a grid, sampled at the receiver rate.
pub fn ideal_samples(grid: &QamGrid, params: &OfdmParams, symbol: usize) -> Vec<f64> {
    let spec: Vec<Complex64> = grid
        .symbol(symbol)
        .iter()
        .map(|p: &Qam4| Complex64::new(p.i as f64, p.q as f64))
        .collect();
    mimo::block_from_spectrum(&spec, params.l_dft)
}
