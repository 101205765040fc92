//! Primitive types shared by every stage of the simulator.

mod gray;
mod metric;
mod rng;
mod stats;

pub use gray::{gray_decode, gray_encode};
pub use metric::{hamming, levenshtein};
pub use rng::RandomSource;
pub use stats::{normal_quantile, qfunc};

use crate::error::{Error, Result};

/// Absolute per-row tolerance for a normalized probability table.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A block of symbols over the alphabet `0..q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolBlock {
    q: usize,
    data: Vec<usize>,
}

impl SymbolBlock {
    pub fn new(q: usize, data: Vec<usize>) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid(format!("alphabet size {q} is below 2")));
        }
        if let Some((i, &s)) = data.iter().enumerate().find(|(_, &s)| s >= q) {
            return Err(Error::invalid(format!(
                "symbol {s} at position {i} is outside alphabet of size {q}"
            )));
        }
        Ok(Self { q, data })
    }

    pub fn zeros(q: usize, len: usize) -> Result<Self> {
        Self::new(q, vec![0; len])
    }

    /// Callers guarantee every symbol is below `q`.
    pub(crate) fn from_trusted(q: usize, data: Vec<usize>) -> Self {
        debug_assert!(data.iter().all(|&s| s < q));
        Self { q, data }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.data
    }

    pub(crate) fn check_shape(&self, q: usize, len: usize) -> Result<()> {
        if self.q != q {
            return Err(Error::invalid(format!(
                "expected alphabet size {q}, got {}",
                self.q
            )));
        }
        if self.data.len() != len {
            return Err(Error::invalid(format!(
                "expected block length {len}, got {}",
                self.data.len()
            )));
        }
        Ok(())
    }
}

/// Per-position probability mass over a `q`-ary alphabet, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbTable {
    q: usize,
    data: Vec<f64>,
}

impl ProbTable {
    pub fn zeros(len: usize, q: usize) -> Self {
        Self {
            q,
            data: vec![0.0; len * q],
        }
    }

    pub fn uniform(len: usize, q: usize) -> Self {
        Self {
            q,
            data: vec![1.0 / q as f64; len * q],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(q: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * q);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != q {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {q}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} has invalid entry {v}")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { q, data })
    }

    /// Point-mass table for a known block.
    pub fn point_mass(block: &SymbolBlock) -> Self {
        let q = block.q();
        let mut table = Self::zeros(block.len(), q);
        for (i, &s) in block.as_slice().iter().enumerate() {
            table.data[i * q + s] = 1.0;
        }
        table
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        if self.q == 0 {
            0
        } else {
            self.data.len() / self.q
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.q..(i + 1) * self.q]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.q..(i + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.q)
    }

    pub fn rows_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.data.chunks_exact_mut(self.q)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn check_shape(&self, len: usize, q: usize) -> Result<()> {
        if self.q != q || self.len() != len {
            return Err(Error::invalid(format!(
                "expected probability table {len}x{q}, got {}x{}",
                self.len(),
                self.q
            )));
        }
        Ok(())
    }

    /// Element-wise product with a table of the same shape.
    pub fn mul_assign(&mut self, other: &ProbTable) -> Result<()> {
        other.check_shape(self.len(), self.q)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a *= b;
        }
        Ok(())
    }

    /// Scales each row to unit sum. Rows with no mass become uniform; their
    /// count is returned.
    pub fn normalize_rows(&mut self) -> usize {
        let q = self.q as f64;
        let mut degenerate = 0;
        for row in self.rows_mut() {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 && sum.is_finite() {
                row.iter_mut().for_each(|v| *v /= sum);
            } else {
                degenerate += 1;
                row.iter_mut().for_each(|v| *v = 1.0 / q);
            }
        }
        degenerate
    }

    pub fn is_normalized(&self) -> bool {
        self.rows().all(|row| {
            row.iter().all(|&v| v >= 0.0)
                && (row.iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOLERANCE
        })
    }

    /// Per-row argmax; ties go to the smaller symbol.
    pub fn hard_decision(&self) -> SymbolBlock {
        let data = self
            .rows()
            .map(|row| {
                let mut best = 0;
                for (s, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = s;
                    }
                }
                best
            })
            .collect();
        SymbolBlock::from_trusted(self.q, data)
    }
}

/// A point in the two-dimensional signal space.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SignalPoint {
    pub i: f64,
    pub q: f64,
}

impl SignalPoint {
    pub const fn new(i: f64, q: f64) -> Self {
        Self { i, q }
    }

    pub fn energy(self) -> f64 {
        self.i * self.i + self.q * self.q
    }

    pub fn distance_sq(self, other: SignalPoint) -> f64 {
        let di = self.i - other.i;
        let dq = self.q - other.q;
        di * di + dq * dq
    }
}
