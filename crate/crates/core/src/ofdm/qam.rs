use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One 4-QAM point; both components are exactly ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Qam4 {
    pub i: i8,
    pub q: i8,
}

impl Qam4 {
    pub fn from_bits(b_i: bool, b_q: bool) -> Self {
        Self { i: sign(b_i), q: sign(b_q) }
    }

    pub fn bits(self) -> (bool, bool) {
        (self.i > 0, self.q > 0)
    }

    /// Hard decision on a raw (I, Q) pair; exact zero decides negative.
    pub fn decide(i: f64, q: f64) -> Self {
        Self::from_bits(i > 0.0, q > 0.0)
    }
}

fn sign(b: bool) -> i8 {
    if b {
        1
    } else {
        -1
    }
}

/// QAM points for `n_symbols` OFDM symbols of `n_sub` subcarriers each,
/// subcarrier-major within a symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QamGrid {
    n_sub: usize,
    points: Vec<Qam4>,
}

impl QamGrid {
    pub fn new(n_sub: usize, points: Vec<Qam4>) -> Result<Self> {
        if n_sub == 0 || points.len() % n_sub != 0 {
            return Err(Error::Dimension(format!(
                "{} points do not fill whole symbols of {n_sub} subcarriers",
                points.len()
            )));
        }
        if points.iter().any(|p| p.i.abs() != 1 || p.q.abs() != 1) {
            return Err(Error::Range("4-QAM components must be ±1".into()));
        }
        Ok(Self { n_sub, points })
    }

    pub fn uniform(n_symbols: usize, n_sub: usize, point: Qam4) -> Self {
        Self { n_sub, points: vec![point; n_symbols * n_sub] }
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn n_symbols(&self) -> usize {
        self.points.len() / self.n_sub
    }

    /// Point of symbol `s`, subcarrier `k` (both 0-based).
    pub fn get(&self, s: usize, k: usize) -> Qam4 {
        self.points[s * self.n_sub + k]
    }

    pub fn symbol(&self, s: usize) -> &[Qam4] {
        &self.points[s * self.n_sub..(s + 1) * self.n_sub]
    }

    pub fn points(&self) -> &[Qam4] {
        &self.points
    }

    /// `symbol,subcarrier,I,Q` with 1-based subcarrier numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol,subcarrier,I,Q\n");
        for s in 0..self.n_symbols() {
            for k in 0..self.n_sub {
                let p = self.get(s, k);
                out.push_str(&format!("{s},{},{},{}\n", k + 1, p.i, p.q));
            }
        }
        out
    }
}

/// Consecutive bit pairs become (I, Q) with 0 ↦ −1 and 1 ↦ +1.
pub fn qam4_map(bits: &[bool], n_sub: usize) -> Result<QamGrid> {
    if n_sub == 0 || bits.len() % (2 * n_sub) != 0 {
        return Err(Error::Dimension(format!(
            "{} bits do not fill whole symbols of {n_sub} subcarriers",
            bits.len()
        )));
    }
    let points = bits.chunks_exact(2).map(|p| Qam4::from_bits(p[0], p[1])).collect();
    QamGrid::new(n_sub, points)
}

pub fn qam4_demap(grid: &QamGrid) -> Vec<bool> {
    grid.points.iter().flat_map(|p| {
        let (i, q) = p.bits();
        [i, q]
    }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_pair() {
        let g = qam4_map(&[true, true], 1).unwrap();
        assert_eq!(g.get(0, 0), Qam4 { i: 1, q: 1 });
        let g = QamGrid::new(1, vec![Qam4 { i: 1, q: -1 }]).unwrap();
        assert_eq!(qam4_demap(&g), vec![true, false]);
    }

    #[test]
    fn all_zero_block() {
        let g = qam4_map(&[false; 30], 15).unwrap();
        assert_eq!(g.n_symbols(), 1);
        assert!(g.points().iter().all(|p| *p == Qam4 { i: -1, q: -1 }));
    }

    #[test]
    fn ordering_is_subcarrier_major() {
        let mut bits = vec![false; 60];
        bits[2] = true; // symbol 0, subcarrier 1, I
        bits[31] = true; // symbol 1, subcarrier 0, Q
        let g = qam4_map(&bits, 15).unwrap();
        assert_eq!(g.get(0, 1), Qam4 { i: 1, q: -1 });
        assert_eq!(g.get(1, 0), Qam4 { i: -1, q: 1 });
    }

    #[test]
    fn length_mismatch() {
        assert!(qam4_map(&[true; 31], 15).is_err());
        assert!(QamGrid::new(2, vec![Qam4 { i: 1, q: 1 }]).is_err());
        assert!(QamGrid::new(1, vec![Qam4 { i: 0, q: 1 }]).is_err());
    }

    #[test]
    fn tie_decides_zero() {
        assert_eq!(Qam4::decide(0.0, 0.0), Qam4 { i: -1, q: -1 });
    }

    proptest! {
        #[test]
        fn demap_inverts_map(n in 1usize..12, seed in any::<u64>()) {
            let bits: Vec<bool> = (0..2 * n).map(|b| (seed >> (b % 64)) & 1 == 1).collect();
            let grid = qam4_map(&bits, n).unwrap();
            prop_assert_eq!(qam4_demap(&grid), bits);
        }
    }
}
