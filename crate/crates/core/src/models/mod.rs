//! Classical two-body spin Hamiltonians and closed-form model families.
//!
//! The generic form is `H = Σ h_i σ_i + Σ_{i<j} J_ij σ_i σ_j` with σ = ±1.

mod chain;
mod chimera;
mod file;
mod reference;
mod star;

pub use chain::*;
pub use chimera::*;
pub use file::*;
pub use reference::*;
pub use star::*;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest spin count representable by [`SpinHamiltonian`].
pub const MAX_SPINS: usize = 30;

/// Set of spin pairs allowed to carry a coupling.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TopologyDoc", into = "TopologyDoc")]
pub struct Topology {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    n_spins: usize,
    edges: Vec<(usize, usize)>,
}

impl From<Topology> for TopologyDoc {
    fn from(t: Topology) -> Self {
        TopologyDoc {
            n_spins: t.n,
            edges: t.edges.into_iter().collect(),
        }
    }
}

impl TryFrom<TopologyDoc> for Topology {
    type Error = Error;
    fn try_from(d: TopologyDoc) -> Result<Self> {
        Topology::from_edges(d.n_spins, d.edges)
    }
}

impl Topology {
    pub fn empty(n: usize) -> Self {
        Topology {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Topology { n, edges }
    }

    /// Nearest-neighbour chain; `periodic` adds the closing edge when `n ≥ 3`.
    pub fn chain(n: usize, periodic: bool) -> Self {
        let mut t = Topology::empty(n);
        for i in 0..n.saturating_sub(1) {
            t.edges.insert((i, i + 1));
        }
        if periodic && n >= 3 {
            t.edges.insert((0, n - 1));
        }
        t
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Result<Self> {
        let mut t = Topology::empty(n);
        for (i, j) in edges {
            t.insert(i, j)?;
        }
        Ok(t)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::InvalidModel(format!(
                "edge ({i}, {j}) invalid for {} spins",
                self.n
            )));
        }
        self.edges.insert(ordered(i, j));
        Ok(())
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&ordered(i, j))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_subset(&self, other: &Topology) -> bool {
        self.n <= other.n && self.edges.is_subset(&other.edges)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }
}

pub(crate) fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Fields, couplings and the topology they live on.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian<T> {
    fields: Vec<T>,
    couplings: BTreeMap<(usize, usize), T>,
    topology: Topology,
}

impl<T: Real> SpinHamiltonian<T> {
    /// All-zero Hamiltonian on a topology.
    pub fn new(topology: Topology) -> Result<Self> {
        let n = topology.n_spins();
        if n == 0 || n > MAX_SPINS {
            return Err(Error::Size(format!(
                "{n} spins outside 1..={MAX_SPINS}"
            )));
        }
        Ok(SpinHamiltonian {
            fields: vec![T::zero(); n],
            couplings: BTreeMap::new(),
            topology,
        })
    }

    pub fn from_parts<I>(topology: Topology, fields: Vec<T>, couplings: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), T)>,
    {
        let mut h = Self::new(topology)?;
        if fields.len() != h.n_spins() {
            return Err(Error::InvalidModel(format!(
                "{} fields for {} spins",
                fields.len(),
                h.n_spins()
            )));
        }
        for (i, f) in fields.into_iter().enumerate() {
            h.set_field(i, f)?;
        }
        for ((i, j), v) in couplings {
            h.set_coupling(i, j, v)?;
        }
        Ok(h)
    }

    /// Fields followed by one coupling per topology edge, in edge order.
    pub fn from_parameters(topology: Topology, theta: &[T]) -> Result<Self> {
        let n = topology.n_spins();
        if theta.len() != n + topology.n_edges() {
            return Err(Error::InvalidModel(format!(
                "parameter vector has length {}, expected {}",
                theta.len(),
                n + topology.n_edges()
            )));
        }
        let edges: Vec<_> = topology.edges().collect();
        let couplings: Vec<_> = edges.into_iter().zip(theta[n..].iter().copied()).collect();
        Self::from_parts(topology, theta[..n].to_vec(), couplings)
    }

    pub fn n_spins(&self) -> usize {
        self.fields.len()
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn fields(&self) -> &[T] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> T {
        self.fields[i]
    }

    /// Nonzero couplings keyed `(i, j)` with `i < j`.
    pub fn couplings(&self) -> &BTreeMap<(usize, usize), T> {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> T {
        self.couplings
            .get(&ordered(i, j))
            .copied()
            .unwrap_or_else(T::zero)
    }

    pub fn set_field(&mut self, i: usize, v: T) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::InvalidModel(format!("field {i} is not finite")));
        }
        let n = self.n_spins();
        *self
            .fields
            .get_mut(i)
            .ok_or_else(|| Error::InvalidModel(format!("spin {i} out of range for {n}")))? = v;
        Ok(())
    }

    pub fn set_coupling(&mut self, i: usize, j: usize, v: T) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::InvalidModel(format!("coupling ({i}, {j}) is not finite")));
        }
        if i == j {
            return Err(Error::InvalidModel(format!("self-coupling on spin {i}")));
        }
        let key = ordered(i, j);
        if v == T::zero() {
            self.couplings.remove(&key);
            return Ok(());
        }
        if !self.topology.contains(i, j) {
            return Err(Error::InvalidModel(format!(
                "coupling ({}, {}) is not a topology edge",
                key.0, key.1
            )));
        }
        self.couplings.insert(key, v);
        Ok(())
    }

    /// Fields followed by one coupling per topology edge.
    pub fn parameters(&self) -> Vec<T> {
        let mut v = self.fields.clone();
        v.extend(self.topology.edges().map(|(i, j)| self.coupling(i, j)));
        v
    }

    /// Energy of a configuration; bit `i` set means σ_i = +1.
    pub fn energy(&self, config: u64) -> T {
        let s = |i: usize| {
            if config >> i & 1 == 1 {
                T::one()
            } else {
                -T::one()
            }
        };
        let mut e = T::zero();
        for (i, &h) in self.fields.iter().enumerate() {
            e = e + h * s(i);
        }
        for (&(i, j), &v) in &self.couplings {
            e = e + v * s(i) * s(j);
        }
        e
    }

    /// Neighbour lists over nonzero couplings.
    pub fn adjacency(&self) -> Vec<Vec<(usize, T)>> {
        let mut adj = vec![Vec::new(); self.n_spins()];
        for (&(i, j), &v) in &self.couplings {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        adj
    }

    /// Negates spin `i`: its field and every incident coupling change sign.
    pub fn gauge_flip(&mut self, i: usize) {
        self.fields[i] = -self.fields[i];
        for (&(a, b), v) in self.couplings.iter_mut() {
            if a == i || b == i {
                *v = -*v;
            }
        }
    }

    /// Flips every spin whose field is negative.
    pub fn gauge_normalized(&self) -> Self {
        let mut h = self.clone();
        for i in 0..h.n_spins() {
            if h.fields[i] < T::zero() {
                h.gauge_flip(i);
            }
        }
        h
    }

    pub fn map<U: Real>(&self) -> SpinHamiltonian<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        SpinHamiltonian {
            fields: self.fields.iter().map(|&x| c(x)).collect(),
            couplings: self.couplings.iter().map(|(&k, &v)| (k, c(v))).collect(),
            topology: self.topology.clone(),
        }
    }
}

/// Row `n` of Pascal's triangle, exact for `n ≤ 127`.
pub(crate) fn binomial_row(n: usize) -> Result<Vec<u128>> {
    if n > 127 {
        return Err(Error::Size(format!("binomial row {n} overflows u128")));
    }
    let mut row = vec![1u128];
    for _ in 0..n {
        let mut next = vec![1u128; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    Ok(row)
}

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    v.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        v.push(acc);
    }
    v
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be positive, got {beta}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_counts() {
        assert_eq!(Topology::complete(5).n_edges(), 10);
        assert_eq!(Topology::chain(5, true).n_edges(), 5);
        assert_eq!(Topology::chain(5, false).n_edges(), 4);
        assert_eq!(Topology::chain(2, true).n_edges(), 1);
        assert!(Topology::from_edges(3, [(0, 0)]).is_err());
        assert!(Topology::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn couplings_must_lie_on_topology() {
        let mut h = SpinHamiltonian::<f64>::new(Topology::chain(4, false)).unwrap();
        assert!(h.set_coupling(0, 2, 1.0).is_err());
        assert!(h.set_coupling(1, 1, 1.0).is_err());
        h.set_coupling(2, 1, 0.5).unwrap();
        assert_eq!(h.couplings().keys().next(), Some(&(1, 2)));
        assert!(h.set_coupling(0, 2, 0.0).is_ok());
    }

    #[test]
    fn energy_and_gauge_flip() {
        let h = SpinHamiltonian::from_parts(
            Topology::complete(3),
            vec![0.5, -1.0, 2.0],
            [((0, 1), 0.3), ((1, 2), -0.7)],
        )
        .unwrap();
        // config 0b101: σ = (+1, -1, +1)
        let e: f64 = 0.5 + 1.0 + 2.0 - 0.3 + 0.7;
        assert!((h.energy(0b101) - e).abs() < 1e-15);
        let mut g = h.clone();
        g.gauge_flip(1);
        assert!((g.energy(0b111) - e).abs() < 1e-15);
        let n = h.gauge_normalized();
        assert!(n.fields().iter().all(|&f| f >= 0.0));
    }

    #[test]
    fn parameters_round_trip() {
        let t = Topology::complete(4);
        let theta: Vec<f64> = (0..10).map(|k| k as f64 * 0.1 - 0.3).collect();
        let h = SpinHamiltonian::from_parameters(t.clone(), &theta).unwrap();
        assert_eq!(h.parameters(), theta);
        assert!(SpinHamiltonian::<f64>::from_parameters(t, &theta[..9]).is_err());
    }

    #[test]
    fn spin_count_limits() {
        assert!(SpinHamiltonian::<f64>::new(Topology::empty(0)).is_err());
        assert!(SpinHamiltonian::<f64>::new(Topology::empty(31)).is_err());
        assert!(SpinHamiltonian::<f32>::new(Topology::empty(30)).is_ok());
    }

    #[test]
    fn pascal_rows() {
        assert_eq!(binomial_row(4).unwrap(), vec![1, 4, 6, 4, 1]);
        let r = binomial_row(127).unwrap();
        assert_eq!(r.iter().sum::<u128>(), 1u128 << 127);
        assert!(binomial_row(128).is_err());
    }
}
