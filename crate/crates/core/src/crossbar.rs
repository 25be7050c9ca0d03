//! 1T1R memristive crossbar model.
//!
//! Conductances are in μS, voltages in V and currents in μA, so Ohm's law
//! needs no unit factors: `I[μA] = V[V] · G[μS]`.
//!
//! Column indices are 0-based throughout. A differential pair `p` spans
//! columns `2p` and `2p + 1`, which are the odd and even columns of the
//! 1-based hardware numbering. The even (1-based) column `2p + 1` carries the
//! positive part of a signed weight.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Conductance window and number of distinguishable levels of a device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceBounds {
    pub g_min: f64,
    pub g_max: f64,
    pub levels: usize,
}

impl Default for DeviceBounds {
    fn default() -> Self {
        Self { g_min: 10.0, g_max: 180.0, levels: 17 }
    }
}

impl DeviceBounds {
    pub fn new(g_min: f64, g_max: f64, levels: usize) -> Result<Self> {
        let b = Self { g_min, g_max, levels };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_min.is_finite() && self.g_max.is_finite() && self.g_min < self.g_max) {
            return Err(Error::Range(format!(
                "device bounds need g_min < g_max, got [{}, {}]",
                self.g_min, self.g_max
            )));
        }
        if self.levels < 2 {
            return Err(Error::Range(format!("need at least 2 levels, got {}", self.levels)));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.g_max - self.g_min
    }

    pub fn level_spacing(&self) -> f64 {
        self.span() / (self.levels - 1) as f64
    }

    /// Conductance of level `k` (0-based) on the full window.
    pub fn level(&self, k: usize) -> f64 {
        self.g_min + k as f64 * self.level_spacing()
    }

    pub fn clamp(&self, g: f64) -> f64 {
        g.clamp(self.g_min, self.g_max)
    }

    pub fn contains(&self, g: f64) -> bool {
        g >= self.g_min && g <= self.g_max
    }

    /// Half-width ΔG that corresponds to a normalized programming error.
    pub fn delta_g_for_error(&self, programming_error: f64) -> f64 {
        programming_error * self.span() / 2.0
    }
}

/// Closed-loop write parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgrammingPolicy {
    /// Acceptance half-width ΔG around the target (μS).
    pub delta_g: f64,
    pub pulse_step_mean: f64,
    pub pulse_step_sd: f64,
    pub max_pulses: usize,
    pub read_noise_sd: f64,
}

impl Default for ProgrammingPolicy {
    fn default() -> Self {
        Self {
            delta_g: 2.5,
            pulse_step_mean: 1.0,
            pulse_step_sd: 0.3,
            max_pulses: 1000,
            read_noise_sd: 0.0,
        }
    }
}

impl ProgrammingPolicy {
    pub fn with_delta_g(delta_g: f64) -> Self {
        Self { delta_g, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_g > 0.0) {
            return Err(Error::Range(format!("delta_g must be > 0, got {}", self.delta_g)));
        }
        if self.max_pulses < 1 {
            return Err(Error::Range("max_pulses must be >= 1".into()));
        }
        if !(self.pulse_step_sd >= 0.0) || !(self.read_noise_sd >= 0.0) {
            return Err(Error::Range("spreads must be non-negative".into()));
        }
        if !self.pulse_step_mean.is_finite() {
            return Err(Error::Range("pulse_step_mean must be finite".into()));
        }
        Ok(())
    }

    /// `2ΔG / (g_max − g_min)`.
    pub fn programming_error(&self, bounds: &DeviceBounds) -> f64 {
        2.0 * self.delta_g / bounds.span()
    }
}

/// Dense row-major matrix of conductances (μS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ConductanceMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, g: f64) {
        self.data[i * self.cols + j] = g;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&g| f(g)).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// One line per row, comma separated, full round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|g| format!("{g:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

/// Outcome of one closed-loop write.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgramReport {
    pub pulses_used: usize,
    pub final_g: f64,
    pub converged: bool,
}

/// A crossbar of 1T1R cells with per-column select transistors.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarArray {
    g: ConductanceMatrix,
    col_enable: Vec<bool>,
    bounds: DeviceBounds,
}

impl CrossbarArray {
    /// Array with every device at `g_min` and every column enabled.
    pub fn new(rows: usize, cols: usize, bounds: DeviceBounds) -> Self {
        Self {
            g: ConductanceMatrix::filled(rows, cols, bounds.g_min),
            col_enable: vec![true; cols],
            bounds,
        }
    }

    /// Array holding exactly `g`. Every value must lie inside `bounds`.
    pub fn from_matrix(g: ConductanceMatrix, bounds: DeviceBounds) -> Result<Self> {
        bounds.validate()?;
        if let Some(pos) = g.as_slice().iter().position(|&x| !bounds.contains(x)) {
            return Err(Error::Range(format!(
                "conductance {} at ({}, {}) outside [{}, {}]",
                g.as_slice()[pos],
                pos / g.cols(),
                pos % g.cols(),
                bounds.g_min,
                bounds.g_max
            )));
        }
        let cols = g.cols();
        Ok(Self { g, col_enable: vec![true; cols], bounds })
    }

    pub fn rows(&self) -> usize {
        self.g.rows()
    }

    pub fn cols(&self) -> usize {
        self.g.cols()
    }

    pub fn bounds(&self) -> &DeviceBounds {
        &self.bounds
    }

    pub fn conductances(&self) -> &ConductanceMatrix {
        &self.g
    }

    pub fn conductance(&self, i: usize, j: usize) -> f64 {
        self.g.get(i, j)
    }

    pub fn is_enabled(&self, j: usize) -> bool {
        self.col_enable[j]
    }

    pub fn set_column_enabled(&mut self, j: usize, on: bool) -> Result<()> {
        self.check_col(j)?;
        self.col_enable[j] = on;
        Ok(())
    }

    pub fn enable_all(&mut self) {
        self.col_enable.iter_mut().for_each(|e| *e = true);
    }

    /// Switch on only the listed columns.
    pub fn enable_only(&mut self, cols: &[usize]) -> Result<()> {
        for &j in cols {
            self.check_col(j)?;
        }
        self.col_enable.iter_mut().for_each(|e| *e = false);
        for &j in cols {
            self.col_enable[j] = true;
        }
        Ok(())
    }

    fn check_col(&self, j: usize) -> Result<()> {
        if j >= self.cols() {
            return Err(Error::Index(format!("column {j} of {}", self.cols())));
        }
        Ok(())
    }

    fn check_input(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.rows() {
            return Err(Error::Dimension(format!(
                "input of length {} for {} rows",
                v.len(),
                self.rows()
            )));
        }
        Ok(())
    }

    fn column_sum(&self, v: &[f64], j: usize) -> f64 {
        if !self.col_enable[j] {
            return 0.0;
        }
        v.iter().enumerate().map(|(i, &vi)| vi * self.g.get(i, j)).sum()
    }

    /// Column currents `I_j = Σ_i V_i G_ij`; disabled columns read zero.
    pub fn mvm(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_input(v)?;
        let mut out = vec![0.0; self.cols()];
        for (i, &vi) in v.iter().enumerate() {
            for (j, (o, &g)) in out.iter_mut().zip(self.g.row(i)).enumerate() {
                if self.col_enable[j] {
                    *o += vi * g;
                }
            }
        }
        Ok(out)
    }

    /// Current of a single column.
    pub fn column_current(&self, v: &[f64], j: usize) -> Result<f64> {
        self.check_input(v)?;
        self.check_col(j)?;
        Ok(self.column_sum(v, j))
    }

    /// `I(2p + 1) − I(2p)`: positive column minus negative column of pair `p`.
    pub fn differential_output(&self, v: &[f64], pair: usize) -> Result<f64> {
        self.check_input(v)?;
        if self.cols() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "differential readout needs an even column count, got {}",
                self.cols()
            )));
        }
        let (neg, pos) = (2 * pair, 2 * pair + 1);
        self.check_col(pos)?;
        for j in [neg, pos] {
            if !self.col_enable[j] {
                return Err(Error::ColumnDisabled(j));
            }
        }
        Ok(self.column_sum(v, pos) - self.column_sum(v, neg))
    }

    /// Column current minus the current of a replica column of `g_offset`
    /// resistors driven by the same inputs.
    pub fn offset_output(&self, v: &[f64], j: usize, g_offset: f64) -> Result<f64> {
        self.check_input(v)?;
        self.check_col(j)?;
        if !(g_offset > 0.0) {
            return Err(Error::Range(format!("g_offset must be > 0, got {g_offset}")));
        }
        if !self.col_enable[j] {
            return Err(Error::ColumnDisabled(j));
        }
        let v_sum: f64 = v.iter().sum();
        Ok(self.column_sum(v, j) - g_offset * v_sum)
    }

    /// [`offset_output`](Self::offset_output) for every column at once.
    pub fn offset_outputs(&self, v: &[f64], g_offset: f64) -> Result<Vec<f64>> {
        if !(g_offset > 0.0) {
            return Err(Error::Range(format!("g_offset must be > 0, got {g_offset}")));
        }
        let v_sum: f64 = v.iter().sum();
        Ok(self.mvm(v)?.into_iter().map(|i| i - g_offset * v_sum).collect())
    }

    /// Closed-loop write of cell `(i, j)` towards `target`.
    ///
    /// The noise stream is sub-stream `cell_index(i, j)` of the programming
    /// domain under `rng_seed`, so cells written with the same seed draw
    /// independent noise. Each iteration draws one read-noise sample and,
    /// when a pulse is needed, one step magnitude.
    pub fn program_cell(
        &mut self,
        i: usize,
        j: usize,
        target: f64,
        policy: &ProgrammingPolicy,
        rng_seed: u64,
    ) -> Result<ProgramReport> {
        let mut rng = rng::stream(rng_seed, Domain::Programming, rng::cell_index(i, j, self.cols()));
        self.program_cell_with(i, j, target, policy, &mut rng)
    }

    pub fn program_cell_with<R: Rng + ?Sized>(
        &mut self,
        i: usize,
        j: usize,
        target: f64,
        policy: &ProgrammingPolicy,
        rng: &mut R,
    ) -> Result<ProgramReport> {
        if i >= self.rows() || j >= self.cols() {
            return Err(Error::Index(format!(
                "cell ({i}, {j}) in a {}x{} array",
                self.rows(),
                self.cols()
            )));
        }
        policy.validate()?;
        let lo = target - policy.delta_g;
        let hi = target + policy.delta_g;
        if !(lo >= self.bounds.g_min && hi <= self.bounds.g_max) {
            return Err(Error::Range(format!(
                "target {target} μS with ΔG {} μS leaves [{}, {}]",
                policy.delta_g, self.bounds.g_min, self.bounds.g_max
            )));
        }
        let read_noise = Normal::new(0.0, policy.read_noise_sd)
            .map_err(|e| Error::Range(e.to_string()))?;
        let step = Normal::new(policy.pulse_step_mean, policy.pulse_step_sd)
            .map_err(|e| Error::Range(e.to_string()))?;

        let mut g = self.g.get(i, j);
        let mut pulses = 0;
        let converged = loop {
            let read = g + read_noise.sample(rng);
            if read >= lo && read <= hi {
                break true;
            }
            if pulses == policy.max_pulses {
                break false;
            }
            let dg = step.sample(rng).abs();
            g = if read < lo { g + dg } else { g - dg };
            g = self.bounds.clamp(g);
            pulses += 1;
        };
        self.g.set(i, j, g);
        Ok(ProgramReport { pulses_used: pulses, final_g: g, converged })
    }

    /// Elementwise [`program_cell`](Self::program_cell), row-major order.
    pub fn program_matrix(
        &mut self,
        targets: &ConductanceMatrix,
        policy: &ProgrammingPolicy,
        rng_seed: u64,
    ) -> Result<Vec<ProgramReport>> {
        if targets.rows() != self.rows() || targets.cols() != self.cols() {
            return Err(Error::Dimension(format!(
                "targets {}x{} for a {}x{} array",
                targets.rows(),
                targets.cols(),
                self.rows(),
                self.cols()
            )));
        }
        let mut reports = Vec::with_capacity(targets.rows() * targets.cols());
        let mut failures = Vec::new();
        for i in 0..targets.rows() {
            for j in 0..targets.cols() {
                match self.program_cell(i, j, targets.get(i, j), policy, rng_seed) {
                    Ok(r) => reports.push(r),
                    Err(e) => failures.push(format!("({i}, {j}): {e}")),
                }
            }
        }
        if !failures.is_empty() {
            return Err(Error::Range(format!(
                "{} cells rejected: {}",
                failures.len(),
                failures.join("; ")
            )));
        }
        Ok(reports)
    }
}

/// Programmed matrix with uniform deviations on `±ΔG`, clamped to bounds,
/// where `ΔG = programming_error · (g_max − g_min) / 2`.
pub fn perturb_matrix(
    targets: &ConductanceMatrix,
    programming_error: f64,
    bounds: &DeviceBounds,
    rng_seed: u64,
) -> Result<ConductanceMatrix> {
    if !(0.0..=1.0).contains(&programming_error) {
        return Err(Error::Range(format!(
            "programming error must lie in [0, 1], got {programming_error}"
        )));
    }
    bounds.validate()?;
    let delta = bounds.delta_g_for_error(programming_error);
    if delta == 0.0 {
        return Ok(targets.map(|g| bounds.clamp(g)));
    }
    let law = Uniform::new_inclusive(-delta, delta).map_err(|e| Error::Range(e.to_string()))?;
    Ok(ConductanceMatrix::from_fn(targets.rows(), targets.cols(), |i, j| {
        let mut rng =
            rng::stream(rng_seed, Domain::Perturbation, rng::cell_index(i, j, targets.cols()));
        bounds.clamp(targets.get(i, j) + law.sample(&mut rng))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn array(rows: usize, cols: usize, g: f64) -> CrossbarArray {
        CrossbarArray::from_matrix(ConductanceMatrix::filled(rows, cols, g), DeviceBounds::default())
            .unwrap()
    }

    #[test]
    fn defaults_reproduce_quoted_errors() {
        let b = DeviceBounds::default();
        assert!((ProgrammingPolicy::with_delta_g(2.5).programming_error(&b) - 0.0294).abs() < 5e-5);
        assert!((ProgrammingPolicy::with_delta_g(1.0).programming_error(&b) - 0.0118).abs() < 5e-5);
    }

    #[test]
    fn bounds_validation() {
        assert!(DeviceBounds::new(10.0, 10.0, 17).is_err());
        assert!(DeviceBounds::new(10.0, 180.0, 1).is_err());
        assert!(DeviceBounds::new(10.0, 180.0, 2).is_ok());
    }

    #[test]
    fn zero_input_zero_output() {
        let a = array(3, 4, 50.0);
        assert_eq!(a.mvm(&[0.0; 3]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn ohms_law_single_cell() {
        let a = array(1, 1, 100.0);
        assert!((a.mvm(&[0.1]).unwrap()[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn disabled_column_reads_zero() {
        let mut a = array(2, 3, 100.0);
        a.set_column_enabled(1, false).unwrap();
        let i = a.mvm(&[1.0, 1.0]).unwrap();
        assert_eq!(i[1], 0.0);
        assert!((i[0] - 200.0).abs() < 1e-12);
        assert!(matches!(a.offset_output(&[1.0, 1.0], 1, 90.0), Err(Error::ColumnDisabled(1))));
    }

    #[test]
    fn mvm_rejects_wrong_length() {
        let a = array(3, 2, 50.0);
        assert!(matches!(a.mvm(&[1.0; 2]), Err(Error::Dimension(_))));
    }

    #[test]
    fn differential_symmetry_and_extremes() {
        let a = array(4, 2, 77.0);
        assert_eq!(a.differential_output(&[0.3, -0.1, 0.2, 0.5], 0).unwrap(), 0.0);

        let b = DeviceBounds::default();
        let g = ConductanceMatrix::from_rows(&[vec![b.g_min, b.g_max]]).unwrap();
        let a = CrossbarArray::from_matrix(g, b).unwrap();
        let out = a.differential_output(&[0.1], 0).unwrap();
        assert!((out - 0.1 * (b.g_max - b.g_min)).abs() < 1e-12);
    }

    #[test]
    fn differential_needs_both_columns() {
        let mut a = array(2, 4, 50.0);
        a.enable_only(&[2]).unwrap();
        assert!(matches!(a.differential_output(&[1.0, 1.0], 1), Err(Error::ColumnDisabled(3))));
    }

    #[test]
    fn offset_cancels() {
        let a = array(5, 1, 95.0);
        let v = [0.3, -0.7, 0.11, 2.0, -1.5];
        assert!(a.offset_output(&v, 0, 95.0).unwrap().abs() < 1e-12);

        let mut g = ConductanceMatrix::filled(3, 1, 95.0);
        g.set(1, 0, 95.0 + 40.0);
        let a = CrossbarArray::from_matrix(g, DeviceBounds::default()).unwrap();
        let out = a.offset_output(&[0.0, 0.25, 0.0], 0, 95.0).unwrap();
        assert!((out - 10.0).abs() < 1e-12);
    }

    #[test]
    fn from_matrix_rejects_out_of_bounds() {
        let g = ConductanceMatrix::filled(2, 2, 200.0);
        assert!(CrossbarArray::from_matrix(g, DeviceBounds::default()).is_err());
    }

    #[test]
    fn program_cell_reaches_band() {
        let mut a = CrossbarArray::new(1, 1, DeviceBounds::default());
        let r = a.program_cell(0, 0, 90.0, &ProgrammingPolicy::default(), 11).unwrap();
        assert!(r.converged);
        assert!(r.final_g >= 87.5 && r.final_g <= 92.5, "{r:?}");
        assert_eq!(a.conductance(0, 0), r.final_g);
    }

    #[test]
    fn program_cell_inside_band_uses_no_pulses() {
        let mut a = array(1, 1, 91.0);
        let r = a.program_cell(0, 0, 90.0, &ProgrammingPolicy::default(), 3).unwrap();
        assert_eq!(r.pulses_used, 0);
        assert!(r.converged);
        assert_eq!(r.final_g, 91.0);
    }

    #[test]
    fn band_edge_counts_as_converged() {
        let mut a = array(1, 1, 92.5);
        let r = a.program_cell(0, 0, 90.0, &ProgrammingPolicy::default(), 3).unwrap();
        assert_eq!(r.pulses_used, 0);
        assert!(r.converged);
    }

    #[test]
    fn program_cell_rejects_bad_requests() {
        let mut a = CrossbarArray::new(2, 2, DeviceBounds::default());
        let p = ProgrammingPolicy::default();
        assert!(matches!(a.program_cell(0, 0, 11.0, &p, 0), Err(Error::Range(_))));
        assert!(matches!(a.program_cell(0, 0, 179.0, &p, 0), Err(Error::Range(_))));
        assert!(matches!(a.program_cell(2, 0, 90.0, &p, 0), Err(Error::Index(_))));
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut a = CrossbarArray::new(1, 1, DeviceBounds::default());
        let p = ProgrammingPolicy { max_pulses: 5, ..ProgrammingPolicy::default() };
        let r = a.program_cell(0, 0, 150.0, &p, 0).unwrap();
        assert!(!r.converged);
        assert_eq!(r.pulses_used, 5);
    }

    #[test]
    fn program_matrix_fixed_point() {
        let targets = ConductanceMatrix::from_fn(3, 3, |i, j| 40.0 + 10.0 * (i + j) as f64);
        let mut a = CrossbarArray::from_matrix(targets.clone(), DeviceBounds::default()).unwrap();
        let reports = a.program_matrix(&targets, &ProgrammingPolicy::default(), 9).unwrap();
        assert!(reports.iter().all(|r| r.pulses_used == 0 && r.converged));
        assert_eq!(a.conductances(), &targets);
    }

    #[test]
    fn program_matrix_aggregates_errors() {
        let mut targets = ConductanceMatrix::filled(2, 2, 90.0);
        targets.set(0, 1, 5.0);
        targets.set(1, 0, 500.0);
        let mut a = CrossbarArray::new(2, 2, DeviceBounds::default());
        let err = a.program_matrix(&targets, &ProgrammingPolicy::default(), 0).unwrap_err();
        assert!(err.to_string().contains("2 cells rejected"), "{err}");
    }

    #[test]
    fn perturb_zero_is_identity() {
        let t = ConductanceMatrix::from_fn(4, 5, |i, j| 20.0 + (i * 5 + j) as f64 * 3.0);
        assert_eq!(perturb_matrix(&t, 0.0, &DeviceBounds::default(), 1).unwrap(), t);
    }

    #[test]
    fn perturb_stays_within_half_width() {
        let b = DeviceBounds::default();
        let t = ConductanceMatrix::filled(50, 50, 90.0);
        let p = perturb_matrix(&t, 0.0294, &b, 5).unwrap();
        let dg = b.delta_g_for_error(0.0294);
        assert!((dg - 2.499).abs() < 1e-9);
        assert!(p.max_abs_diff(&t) <= dg);
        assert!(p.max_abs_diff(&t) > 0.9 * dg);
    }

    #[test]
    fn perturb_clamps_and_validates() {
        let b = DeviceBounds::default();
        let t = ConductanceMatrix::filled(10, 10, b.g_max);
        let p = perturb_matrix(&t, 0.5, &b, 2).unwrap();
        assert!(p.as_slice().iter().all(|&g| b.contains(g)));
        assert!(perturb_matrix(&t, 1.5, &b, 2).is_err());
        assert!(perturb_matrix(&t, -0.1, &b, 2).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = ConductanceMatrix::from_fn(3, 4, |i, j| 10.0 + 0.1 * (i * 7 + j) as f64 / 3.0);
        assert_eq!(ConductanceMatrix::from_csv(&m.to_csv()).unwrap(), m);
        assert!(ConductanceMatrix::from_csv("1,2\n3\n").is_err());
        assert!(ConductanceMatrix::from_csv("1,x\n").is_err());
    }
}
