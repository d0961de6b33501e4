use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar type of QUBO coefficients. `i64` keeps number-partitioning
/// problems exact; `f64` covers general and embedded models.
pub trait Weight:
    Copy
    + PartialOrd
    + Debug
    + Default
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    const ZERO: Self;
    const ONE: Self;

    fn to_f64(self) -> f64;

    fn abs(self) -> Self;
}

impl Weight for i64 {
    const ZERO: Self = 0;
    const ONE: Self = 1;

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn abs(self) -> Self {
        i64::abs(self)
    }
}

impl Weight for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn to_f64(self) -> f64 {
        self
    }

    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Upper-triangular QUBO matrix with an explicit constant offset.
///
/// Energy of a binary assignment `x` is `Σ_{i<=j} Q_ij x_i x_j + offset`.
/// Storage is dense row-major; entries below the diagonal are always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboMatrix<T = f64> {
    n: usize,
    data: Vec<T>,
    offset: T,
    energy_floor: Option<T>,
}

impl<T: Weight> QuboMatrix<T> {
    pub fn new(n: usize) -> Self {
        QuboMatrix {
            n,
            data: vec![T::ZERO; n * n],
            offset: T::ZERO,
            energy_floor: None,
        }
    }

    /// Build from `(i, j, value)` triples with `i <= j`. Repeated keys add.
    pub fn from_entries<I>(n: usize, entries: I, offset: T) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut q = QuboMatrix::new(n);
        q.offset = offset;
        for (i, j, v) in entries {
            if i > j {
                return Err(Error::invalid(format!(
                    "QUBO entry ({i}, {j}) lies below the diagonal"
                )));
            }
            if j >= n {
                return Err(Error::invalid(format!(
                    "QUBO entry ({i}, {j}) out of range for n = {n}"
                )));
            }
            q.data[i * n + j] += v;
        }
        Ok(q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn set_offset(&mut self, offset: T) {
        self.offset = offset;
    }

    /// Known lower bound on the energy, if any. Solvers stop once they reach it.
    pub fn energy_floor(&self) -> Option<T> {
        self.energy_floor
    }

    pub fn with_energy_floor(mut self, floor: Option<T>) -> Self {
        self.energy_floor = floor;
        self
    }

    /// Coefficient for the unordered pair `{i, j}`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.data[a * self.n + b]
    }

    /// Add `value` to the coefficient of the unordered pair `{i, j}`.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        assert!(
            b < self.n,
            "index ({i}, {j}) out of range for n = {}",
            self.n
        );
        self.data[a * self.n + b] += value;
    }

    /// Nonzero upper-triangular entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (i..n).filter_map(move |j| {
                let v = self.data[i * n + j];
                (v != T::ZERO).then_some((i, j, v))
            })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == T::ZERO)
    }

    /// Largest coefficient magnitude (0 for an all-zero matrix).
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|v| v.abs())
            .fold(T::ZERO, |m, v| if v > m { v } else { m })
    }

    /// Dense symmetric copy: `sym[i*n+j] = Q_{min(i,j), max(i,j)}`.
    pub(crate) fn symmetric(&self) -> Vec<T> {
        let n = self.n;
        let mut sym = vec![T::ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.data[i * n + j];
                sym[i * n + j] = v;
                sym[j * n + i] = v;
            }
        }
        sym
    }

    /// `Σ_{i<=j} Q_ij x_i x_j + offset`; `x` must have length `n`.
    pub fn energy(&self, x: &[u8]) -> Result<T> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "assignment has {} variables, QUBO has {}",
                x.len(),
                self.n
            )));
        }
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[u8]) -> T {
        let n = self.n;
        let mut e = self.offset;
        for i in (0..n).filter(|&i| x[i] == 1) {
            let row = &self.data[i * n..(i + 1) * n];
            for j in (i..n).filter(|&j| x[j] == 1) {
                e += row[j];
            }
        }
        e
    }

    pub fn to_file(&self) -> QuboFile<T> {
        QuboFile {
            n: self.n,
            entries: self.entries().collect(),
            offset: self.offset,
        }
    }
}

/// Energy of `x` under `q`, including the offset.
pub fn qubo_energy<T: Weight>(q: &QuboMatrix<T>, x: &[u8]) -> Result<T> {
    q.energy(x)
}

/// On-disk QUBO form: `{"n": .., "entries": [[i, j, v], ..], "offset": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Weight")]
pub struct QuboFile<T> {
    pub n: usize,
    pub entries: Vec<(usize, usize, T)>,
    pub offset: T,
}

impl<T: Weight> TryFrom<QuboFile<T>> for QuboMatrix<T> {
    type Error = Error;

    fn try_from(file: QuboFile<T>) -> Result<Self> {
        QuboMatrix::from_entries(file.n, file.entries, file.offset)
    }
}

impl<T: Weight> QuboMatrix<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<QuboFile<T>>(s)?.try_into()
    }
}
