use std::collections::BTreeMap;

use super::qubo::{QuboMatrix, Weight};
use crate::{Error, Result};

/// Ising model `Σ h_i S_i + Σ_{i<j} c_ij S_i S_j + offset` over a sparse
/// interaction graph.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    h: Vec<f64>,
    couplers: BTreeMap<(usize, usize), f64>,
    offset: f64,
    energy_floor: Option<f64>,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        IsingModel {
            h: vec![0.0; n],
            couplers: BTreeMap::new(),
            offset: 0.0,
            energy_floor: None,
        }
    }

    /// Couplers must satisfy `i < j < n`; repeated keys add.
    pub fn from_parts<I>(h: Vec<f64>, couplers: I, offset: f64) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let mut m = IsingModel {
            h,
            couplers: BTreeMap::new(),
            offset,
            energy_floor: None,
        };
        for ((i, j), c) in couplers {
            m.add_coupler(i, j, c)?;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn couplers(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.couplers
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn energy_floor(&self) -> Option<f64> {
        self.energy_floor
    }

    pub fn with_energy_floor(mut self, floor: Option<f64>) -> Self {
        self.energy_floor = floor;
        self
    }

    pub(crate) fn h_mut(&mut self) -> &mut [f64] {
        &mut self.h
    }

    pub(crate) fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn add_coupler(&mut self, i: usize, j: usize, c: f64) -> Result<()> {
        if i >= j {
            return Err(Error::invalid(format!(
                "coupler key ({i}, {j}) must satisfy i < j"
            )));
        }
        if j >= self.n() {
            return Err(Error::invalid(format!(
                "coupler ({i}, {j}) out of range for {} spins",
                self.n()
            )));
        }
        *self.couplers.entry((i, j)).or_insert(0.0) += c;
        Ok(())
    }

    /// Adjacency lists `(neighbour, c_ij)` for every spin.
    pub fn neighbours(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n()];
        for (&(i, j), &c) in &self.couplers {
            if c != 0.0 {
                adj[i].push((j, c));
                adj[j].push((i, c));
            }
        }
        adj
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.h
            .iter()
            .chain(self.couplers.values())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n() {
            return Err(Error::invalid(format!(
                "assignment has {} spins, model has {}",
                spins.len(),
                self.n()
            )));
        }
        Ok(self.energy_unchecked(spins))
    }

    pub(crate) fn energy_unchecked(&self, spins: &[i8]) -> f64 {
        let linear: f64 = self.h.iter().zip(spins).map(|(h, &s)| h * s as f64).sum();
        let quadratic: f64 = self
            .couplers
            .iter()
            .map(|(&(i, j), c)| c * (spins[i] * spins[j]) as f64)
            .sum();
        linear + quadratic + self.offset
    }
}

/// Ising model with the same energy as `q` under `x = (S + 1) / 2`.
pub fn ising_from_qubo<T: Weight>(q: &QuboMatrix<T>) -> IsingModel {
    let n = q.n();
    let mut h = vec![0.0; n];
    let mut couplers = BTreeMap::new();
    let mut offset = q.offset().to_f64();
    for (i, j, v) in q.entries() {
        let v = v.to_f64();
        if i == j {
            h[i] += v / 2.0;
            offset += v / 2.0;
        } else {
            couplers.insert((i, j), v / 4.0);
            h[i] += v / 4.0;
            h[j] += v / 4.0;
            offset += v / 4.0;
        }
    }
    IsingModel {
        h,
        couplers,
        offset,
        energy_floor: q.energy_floor().map(Weight::to_f64),
    }
}

/// QUBO with the same energy as `m` under `S = 2x - 1`.
pub fn qubo_from_ising(m: &IsingModel) -> QuboMatrix<f64> {
    let n = m.n();
    let mut q = QuboMatrix::new(n);
    let mut offset = m.offset();
    for (i, &h) in m.h().iter().enumerate() {
        if h != 0.0 {
            q.add(i, i, 2.0 * h);
            offset -= h;
        }
    }
    for (&(i, j), &c) in m.couplers() {
        q.add(i, j, 4.0 * c);
        q.add(i, i, -2.0 * c);
        q.add(j, j, -2.0 * c);
        offset += c;
    }
    q.set_offset(offset);
    q.with_energy_floor(m.energy_floor())
}
