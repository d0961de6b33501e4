//! Chimera topology, clique minor-embedding and chain decoding.
//!
//! Qubits are numbered `((row·m + col)·8 + side·4 + k)`: side 0 holds the
//! four vertical qubits of a unit cell, side 1 the four horizontal ones.
//! Inside a cell every vertical qubit couples to every horizontal one;
//! vertical qubits couple to the same `k` in the cell below and horizontal
//! qubits to the same `k` in the cell to the right.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{IsingModel, SpinAssignment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChimeraGraph {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl ChimeraGraph {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn node_count(&self) -> usize {
        8 * self.m * self.m
    }

    /// Edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbours(&self, q: usize) -> &[usize] {
        &self.adj[q]
    }

    pub fn qubit(&self, row: usize, col: usize, side: usize, k: usize) -> usize {
        debug_assert!(row < self.m && col < self.m && side < 2 && k < 4);
        (row * self.m + col) * 8 + side * 4 + k
    }

    /// Edge list as CSV with a `u,v` header.
    pub fn edge_csv(&self) -> String {
        let mut out = String::from("u,v\n");
        for (u, v) in &self.edges {
            out.push_str(&format!("{u},{v}\n"));
        }
        out
    }
}

/// The `m × m` Chimera graph of `K_{4,4}` cells.
pub fn chimera_graph(m: usize) -> Result<ChimeraGraph> {
    if m == 0 {
        return Err(Error::invalid("Chimera dimension must be at least 1"));
    }
    let id = |r: usize, c: usize, side: usize, k: usize| (r * m + c) * 8 + side * 4 + k;
    let mut edges = BTreeSet::new();
    for r in 0..m {
        for c in 0..m {
            for k in 0..4 {
                for k2 in 0..4 {
                    edges.insert((id(r, c, 0, k), id(r, c, 1, k2)));
                }
                if r + 1 < m {
                    edges.insert((id(r, c, 0, k), id(r + 1, c, 0, k)));
                }
                if c + 1 < m {
                    edges.insert((id(r, c, 1, k), id(r, c + 1, 1, k)));
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); 8 * m * m];
    for &(u, v) in &edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    Ok(ChimeraGraph { m, edges, adj })
}

/// Physical qubit chains, one per logical variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub chains: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn max_chain_len(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Edges of the complete graph `K_n`.
pub fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

/// Largest clique the triangle scheme places on `C_m`.
pub fn clique_capacity(m: usize) -> usize {
    4 * m
}

/// Triangle clique embedding of `K_n` into `target`.
///
/// Variable `v = 4b + k` owns horizontal qubit `k` of cells `(b, 0..=b)` and
/// vertical qubit `k` of cells `(b..B, b)` with `B = ⌈n/4⌉`, so every chain
/// is an L through the diagonal cell `(b, b)` of length at most `m + 1`.
/// Variables `v` and `w` (blocks `b <= b'`) meet in cell `(b', b)`.
pub fn clique_embedding(n_logical: usize, target: &ChimeraGraph) -> Result<Embedding> {
    if n_logical == 0 {
        return Err(Error::invalid("cannot embed an empty graph"));
    }
    let max = clique_capacity(target.m());
    if n_logical > max {
        return Err(Error::Capacity {
            requested: n_logical,
            max,
            m: target.m(),
        });
    }
    if n_logical == 1 {
        return Ok(Embedding {
            chains: vec![vec![0]],
        });
    }
    let blocks = n_logical.div_ceil(4);
    let chains = (0..n_logical)
        .map(|v| {
            let (b, k) = (v / 4, v % 4);
            let mut chain: Vec<usize> = (0..=b)
                .map(|col| target.qubit(b, col, 1, k))
                .chain((b..blocks).map(|row| target.qubit(row, b, 0, k)))
                .collect();
            chain.sort_unstable();
            chain
        })
        .collect();
    Ok(Embedding { chains })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyChain {
        chain: usize,
    },
    UnknownQubit {
        chain: usize,
        qubit: usize,
    },
    SharedQubit {
        qubit: usize,
        chains: (usize, usize),
    },
    DisconnectedChain {
        chain: usize,
    },
    MissingChain {
        variable: usize,
    },
    MissingCoupling {
        edge: (usize, usize),
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyChain { chain } => write!(f, "chain {chain} is empty"),
            Violation::UnknownQubit { chain, qubit } => {
                write!(
                    f,
                    "chain {chain} uses qubit {qubit} outside the target graph"
                )
            }
            Violation::SharedQubit { qubit, chains } => {
                write!(
                    f,
                    "qubit {qubit} is shared by chains {} and {}",
                    chains.0, chains.1
                )
            }
            Violation::DisconnectedChain { chain } => write!(f, "chain {chain} is not connected"),
            Violation::MissingChain { variable } => {
                write!(f, "logical variable {variable} has no chain")
            }
            Violation::MissingCoupling { edge } => {
                write!(f, "no physical edge joins chains {} and {}", edge.0, edge.1)
            }
        }
    }
}

/// Every violated embedding invariant, per category.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn disjoint(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SharedQubit { .. }))
    }

    pub fn connected(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DisconnectedChain { .. }))
    }

    pub fn covers_edges(&self) -> bool {
        !self.violations.iter().any(|v| {
            matches!(
                v,
                Violation::MissingCoupling { .. } | Violation::MissingChain { .. }
            )
        })
    }
}

/// Check disjointness, chain connectivity and coverage of `logical_edges`.
pub fn validate_embedding(
    e: &Embedding,
    logical_edges: &[(usize, usize)],
    target: &ChimeraGraph,
) -> ValidationReport {
    let mut violations = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; target.node_count()];

    for (c, chain) in e.chains.iter().enumerate() {
        if chain.is_empty() {
            violations.push(Violation::EmptyChain { chain: c });
            continue;
        }
        let mut inside = true;
        for &q in chain {
            if q >= target.node_count() {
                violations.push(Violation::UnknownQubit { chain: c, qubit: q });
                inside = false;
                continue;
            }
            match owner[q] {
                Some(other) if other != c => violations.push(Violation::SharedQubit {
                    qubit: q,
                    chains: (other, c),
                }),
                _ => owner[q] = Some(c),
            }
        }
        if inside && !chain_connected(chain, target) {
            violations.push(Violation::DisconnectedChain { chain: c });
        }
    }

    for &(i, j) in logical_edges {
        for v in [i, j] {
            if v >= e.chains.len() {
                violations.push(Violation::MissingChain { variable: v });
            }
        }
        if i >= e.chains.len() || j >= e.chains.len() {
            continue;
        }
        let joined = e.chains[i].iter().any(|&p| {
            e.chains[j].iter().any(|&q| {
                p < target.node_count() && q < target.node_count() && target.has_edge(p, q)
            })
        });
        if !joined {
            violations.push(Violation::MissingCoupling { edge: (i, j) });
        }
    }
    ValidationReport { violations }
}

fn chain_connected(chain: &[usize], target: &ChimeraGraph) -> bool {
    let members: BTreeSet<usize> = chain.iter().copied().collect();
    let mut seen = BTreeSet::from([chain[0]]);
    let mut queue = VecDeque::from([chain[0]]);
    while let Some(q) = queue.pop_front() {
        for &nb in target.neighbours(q) {
            if members.contains(&nb) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    seen.len() == members.len()
}

/// Physical model produced by [`embed_ising`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedModel {
    /// Model over all qubits of the target; unused qubits are free.
    pub physical: IsingModel,
    /// Intra-chain edges carrying the ferromagnetic chain coupling.
    pub chain_edges: Vec<(usize, usize)>,
    pub chain_strength: f64,
    pub warnings: Vec<String>,
}

impl EmbeddedModel {
    /// Energy difference between a chain-consistent physical state and the
    /// logical state it encodes.
    pub fn chain_energy(&self) -> f64 {
        -self.chain_strength * self.chain_edges.len() as f64
    }
}

/// `1.5 × max |coefficient|` of the logical model.
pub fn default_chain_strength(model: &IsingModel) -> f64 {
    1.5 * model.max_abs_coefficient()
}

/// Place `model` on `target` through embedding `e`.
///
/// Each `h_i` is split evenly over chain `i`; each coupler `c_ij` sits on the
/// lowest-numbered physical edge between the two chains; every intra-chain
/// edge gets `−chain_strength`. The offset is carried over unchanged, so a
/// chain-consistent state has energy `logical − chain_strength × |chain edges|`.
pub fn embed_ising(
    model: &IsingModel,
    e: &Embedding,
    chain_strength: f64,
    target: &ChimeraGraph,
) -> Result<EmbeddedModel> {
    if !(chain_strength >= 0.0 && chain_strength.is_finite()) {
        return Err(Error::invalid(format!(
            "chain strength {chain_strength} must be finite and nonnegative"
        )));
    }
    if e.len() != model.n() {
        return Err(Error::invalid(format!(
            "embedding has {} chains, model has {} variables",
            e.len(),
            model.n()
        )));
    }
    let logical_edges: Vec<(usize, usize)> = model
        .couplers()
        .iter()
        .filter(|(_, &c)| c != 0.0)
        .map(|(&k, _)| k)
        .collect();
    let report = validate_embedding(e, &logical_edges, target);
    if !report.passed() {
        let msgs: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(Error::invalid(format!(
            "invalid embedding: {}",
            msgs.join("; ")
        )));
    }

    let mut physical = IsingModel::new(target.node_count());
    for (i, chain) in e.chains.iter().enumerate() {
        let share = model.h()[i] / chain.len() as f64;
        for &q in chain {
            physical.h_mut()[q] += share;
        }
    }
    for &(i, j) in &logical_edges {
        let (u, v) = e.chains[i]
            .iter()
            .flat_map(|&p| e.chains[j].iter().map(move |&q| (p.min(q), p.max(q))))
            .filter(|&(u, v)| target.has_edge(u, v))
            .min()
            .expect("validated embedding joins every coupled pair");
        physical.add_coupler(u, v, model.couplers()[&(i, j)])?;
    }

    let mut chain_edges = Vec::new();
    for chain in &e.chains {
        for (a, &p) in chain.iter().enumerate() {
            for &q in &chain[a + 1..] {
                if target.has_edge(p, q) {
                    chain_edges.push((p.min(q), p.max(q)));
                }
            }
        }
    }
    chain_edges.sort_unstable();
    let mut warnings = Vec::new();
    if chain_strength == 0.0 {
        if !chain_edges.is_empty() {
            warnings.push("chain strength is zero; chains are not coupled".to_string());
        }
    } else {
        for &(u, v) in &chain_edges {
            physical.add_coupler(u, v, -chain_strength)?;
        }
    }
    physical.set_offset(model.offset());
    Ok(EmbeddedModel {
        physical,
        chain_edges,
        chain_strength,
        warnings,
    })
}

/// Majority vote per chain; exact ties take the spin of the lowest-numbered
/// qubit in the chain.
pub fn unembed(physical: &[i8], e: &Embedding) -> Result<SpinAssignment> {
    let mut logical = Vec::with_capacity(e.len());
    for (c, chain) in e.chains.iter().enumerate() {
        let mut sum = 0i64;
        for &q in chain {
            let s = *physical
                .get(q)
                .ok_or_else(|| Error::invalid(format!("no value for qubit {q} of chain {c}")))?;
            if s != 1 && s != -1 {
                return Err(Error::invalid(format!("qubit {q} has spin {s}")));
            }
            sum += s as i64;
        }
        let lowest = *chain
            .iter()
            .min()
            .ok_or_else(|| Error::invalid(format!("chain {c} is empty")))?;
        logical.push(match sum.signum() {
            1 => 1,
            -1 => -1,
            _ => physical[lowest],
        });
    }
    SpinAssignment::try_from(logical)
}

/// Replicate each logical spin over its chain; qubits outside all chains get +1.
pub fn embed_spins(logical: &[i8], e: &Embedding, n_physical: usize) -> Vec<i8> {
    let mut out = vec![1i8; n_physical];
    for (chain, &s) in e.chains.iter().zip(logical) {
        for &q in chain {
            out[q] = s;
        }
    }
    out
}

/// Fraction of chains whose qubits disagree.
pub fn chain_break_fraction(physical: &[i8], e: &Embedding) -> f64 {
    if e.is_empty() {
        return 0.0;
    }
    let broken = e
        .chains
        .iter()
        .filter(|chain| chain.windows(2).any(|w| physical[w[0]] != physical[w[1]]))
        .count();
    broken as f64 / e.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::NppInstance;
    use crate::model::{build_qubo, ising_from_qubo};

    #[test]
    fn graph_counts() {
        for m in [1usize, 2, 3, 4, 16] {
            let g = chimera_graph(m).unwrap();
            assert_eq!(g.node_count(), 8 * m * m);
            assert_eq!(g.edges().len(), 16 * m * m + 8 * m * (m - 1));
        }
        assert_eq!(chimera_graph(2).unwrap().edges().len(), 80);
        assert_eq!(chimera_graph(16).unwrap().node_count(), 2048);
        assert!(chimera_graph(0).is_err());
    }

    #[test]
    fn unit_cell_is_bipartite() {
        let g = chimera_graph(1).unwrap();
        assert!(g.has_edge(0, 7));
        assert!(!g.has_edge(0, 1));
        assert!(!g.has_edge(4, 5));
        assert!(g.edge_csv().starts_with("u,v\n0,4\n"));
    }

    #[test]
    fn k4_in_single_cell() {
        let g = chimera_graph(1).unwrap();
        let e = clique_embedding(4, &g).unwrap();
        assert_eq!(e.chains.len(), 4);
        for chain in &e.chains {
            assert_eq!(chain.len(), 2);
            assert!(chain[0] < 4 && chain[1] >= 4);
        }
        assert!(validate_embedding(&e, &complete_edges(4), &g).passed());
    }

    #[test]
    fn k1_is_a_single_qubit() {
        let g = chimera_graph(1).unwrap();
        assert_eq!(clique_embedding(1, &g).unwrap().chains, vec![vec![0]]);
    }

    #[test]
    fn k8_in_c2() {
        let g = chimera_graph(2).unwrap();
        let e = clique_embedding(8, &g).unwrap();
        assert!(e.max_chain_len() <= 3);
        assert!(validate_embedding(&e, &complete_edges(8), &g).passed());
    }

    #[test]
    fn capacity_error_names_limit() {
        let g = chimera_graph(2).unwrap();
        match clique_embedding(9, &g) {
            Err(Error::Capacity {
                requested: 9,
                max: 8,
                m: 2,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chain_lengths_bounded_for_all_sizes() {
        for m in 1..=6 {
            let g = chimera_graph(m).unwrap();
            for n in 1..=clique_capacity(m) {
                let e = clique_embedding(n, &g).unwrap();
                assert!(e.max_chain_len() <= m + 1);
                assert!(
                    validate_embedding(&e, &complete_edges(n), &g).passed(),
                    "m={m} n={n}"
                );
            }
        }
    }

    #[test]
    fn validator_reports_violations() {
        let g = chimera_graph(1).unwrap();
        let shared = Embedding {
            chains: vec![vec![0, 4], vec![4, 1]],
        };
        let r = validate_embedding(&shared, &[(0, 1)], &g);
        assert!(!r.disjoint());

        let ok = Embedding {
            chains: vec![vec![0, 7]],
        };
        assert!(validate_embedding(&ok, &[], &g).passed());
        let split = Embedding {
            chains: vec![vec![0, 1]],
        };
        let r = validate_embedding(&split, &[], &g);
        assert!(!r.connected());
        assert_eq!(
            r.violations,
            vec![Violation::DisconnectedChain { chain: 0 }]
        );

        let apart = Embedding {
            chains: vec![vec![0], vec![1]],
        };
        let r = validate_embedding(&apart, &[(0, 1), (0, 2)], &g);
        assert!(!r.covers_edges());
        assert_eq!(r.violations.len(), 2);

        let outside = Embedding {
            chains: vec![vec![99]],
        };
        assert!(!validate_embedding(&outside, &[], &g).passed());
    }

    #[test]
    fn identity_embedding_copies_model() {
        let g = chimera_graph(1).unwrap();
        let mut m = IsingModel::new(8);
        m.h_mut()[0] = 1.5;
        m.add_coupler(0, 4, -2.0).unwrap();
        m.add_coupler(1, 6, 0.5).unwrap();
        m.set_offset(3.0);
        let e = Embedding {
            chains: (0..8).map(|q| vec![q]).collect(),
        };
        let emb = embed_ising(&m, &e, 1.0, &g).unwrap();
        assert!(emb.chain_edges.is_empty());
        assert_eq!(emb.physical, m);
    }

    #[test]
    fn zero_chain_strength_warns() {
        let g = chimera_graph(1).unwrap();
        let m = IsingModel::from_parts(vec![0.0; 2], [((0, 1), 1.0)], 0.0).unwrap();
        let e = clique_embedding(2, &g).unwrap();
        let emb = embed_ising(&m, &e, 0.0, &g).unwrap();
        assert_eq!(emb.warnings.len(), 1);
        assert_eq!(emb.physical.couplers().len(), 1);
        assert!(embed_ising(&m, &e, -1.0, &g).is_err());
    }

    #[test]
    fn rejects_invalid_embedding() {
        let g = chimera_graph(1).unwrap();
        let m = IsingModel::from_parts(vec![0.0; 2], [((0, 1), 1.0)], 0.0).unwrap();
        let e = Embedding {
            chains: vec![vec![0], vec![1]],
        };
        assert!(matches!(
            embed_ising(&m, &e, 1.0, &g),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn k4_npp_ground_state_decodes_to_perfect_split() {
        let g = chimera_graph(1).unwrap();
        let inst = NppInstance::new(vec![1, 1, 1, 1], 0).unwrap();
        let m = ising_from_qubo(&build_qubo(&inst).unwrap());
        let e = clique_embedding(4, &g).unwrap();
        let emb = embed_ising(&m, &e, 20.0, &g).unwrap();
        let (spins, _) = (0u32..256)
            .map(|mask| {
                let s: Vec<i8> = (0..8)
                    .map(|q| if mask >> q & 1 == 1 { 1 } else { -1 })
                    .collect();
                let en = emb.physical.energy(&s).unwrap();
                (s, en)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(chain_break_fraction(&spins, &e), 0.0);
        let logical = unembed(&spins, &e).unwrap();
        assert_eq!(m.energy(logical.as_slice()).unwrap(), 0.0);
    }

    #[test]
    fn majority_vote_and_ties() {
        let e = Embedding {
            chains: vec![vec![0, 1, 2], vec![3, 5]],
        };
        let phys = [1, 1, -1, 1, 1, -1];
        assert_eq!(unembed(&phys, &e).unwrap().as_slice(), &[1, 1]);
        let flipped = [1, 1, -1, -1, 1, 1];
        assert_eq!(unembed(&flipped, &e).unwrap().as_slice(), &[1, -1]);
        assert!(unembed(&[1, 1], &e).is_err());
    }

    #[test]
    fn consistent_states_round_trip() {
        let g = chimera_graph(2).unwrap();
        let inst = NppInstance::new(vec![3, 1, 4, 1, 5, 9, 2], 0).unwrap();
        let m = ising_from_qubo(&build_qubo(&inst).unwrap());
        let e = clique_embedding(7, &g).unwrap();
        let emb = embed_ising(&m, &e, 2.0 * m.max_abs_coefficient(), &g).unwrap();
        for mask in 0u32..128 {
            let logical: Vec<i8> = (0..7)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect();
            let phys = embed_spins(&logical, &e, g.node_count());
            assert_eq!(unembed(&phys, &e).unwrap().as_slice(), &logical[..]);
            let pe = emb.physical.energy(&phys).unwrap();
            let le = m.energy(&logical).unwrap();
            assert!((pe - (le + emb.chain_energy())).abs() < 1e-6);
        }
    }

    #[test]
    fn embedding_json_format() {
        let e = Embedding {
            chains: vec![vec![0, 4], vec![1]],
        };
        assert_eq!(e.to_json().unwrap(), r#"{"chains":[[0,4],[1]]}"#);
        assert_eq!(Embedding::from_json(&e.to_json().unwrap()).unwrap(), e);
    }
}
