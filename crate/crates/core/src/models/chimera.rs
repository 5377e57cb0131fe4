use super::{build_star_chain, ChainBoundary, SpinHamiltonian, StarChainParams, Topology};
use crate::error::{Error, Result};

/// Spins per Chimera unit cell: left half `0..4`, right half `4..8`.
pub const CHIMERA_UNIT: usize = 8;

/// Linear chain of K_{4,4} cells; right spin `4+k` of cell `u` couples to
/// left spin `k` of cell `u+1`.
pub fn chimera_topology(units: usize) -> Result<Topology> {
    if units == 0 {
        return Err(Error::Domain("chimera needs at least one unit".into()));
    }
    let mut t = Topology::empty(CHIMERA_UNIT * units);
    for u in 0..units {
        let base = CHIMERA_UNIT * u;
        for l in 0..4 {
            for r in 4..8 {
                t.insert(base + l, base + r)?;
            }
        }
        if u + 1 < units {
            for k in 0..4 {
                t.insert(base + 4 + k, base + CHIMERA_UNIT + k)?;
            }
        }
    }
    Ok(t)
}

/// Unit-local offsets of the (left, right) hubs of each cell.
fn hub_offsets(units: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(units);
    let mut left = 1;
    for u in 0..units {
        let right = if u == 0 { 5 } else { 6 };
        out.push((left, right));
        left = right - 4;
    }
    out
}

/// Chimera index of every Star-chain spin (`n = 2·units` hubs, `m = 3`).
///
/// Hub `2u` is a left spin of cell `u` and hub `2u+1` a right spin; each hub
/// takes as leaves the three opposite-half spins of its cell that are not the
/// partner hub.
pub fn star_chain_chimera_embedding(units: usize) -> Result<Vec<usize>> {
    if units == 0 {
        return Err(Error::Domain("chimera needs at least one unit".into()));
    }
    let n = 2 * units;
    let m = 3;
    let mut map = vec![usize::MAX; n * (m + 1)];
    for (u, (lh, rh)) in hub_offsets(units).into_iter().enumerate() {
        let base = CHIMERA_UNIT * u;
        map[2 * u] = base + lh;
        map[2 * u + 1] = base + rh;
        let right_leaves = (4..8).filter(|&r| r != rh);
        let left_leaves = (0..4).filter(|&l| l != lh);
        for (i, r) in right_leaves.enumerate() {
            map[n + (2 * u) * m + i] = base + r;
        }
        for (i, l) in left_leaves.enumerate() {
            map[n + (2 * u + 1) * m + i] = base + l;
        }
    }
    Ok(map)
}

/// Star-chain rendered on the Chimera lattice via [`star_chain_chimera_embedding`].
pub fn embed_star_chain_in_chimera(p: &StarChainParams) -> Result<SpinHamiltonian<f64>> {
    p.validate()?;
    if p.leaves_per_unit != 3 || p.n_units % 2 == 1 {
        return Err(Error::InvalidModel(
            "only m = 3 chains with an even hub count embed in chimera".into(),
        ));
    }
    if p.boundary == ChainBoundary::Periodic && p.n_units > 2 {
        return Err(Error::InvalidModel("a closed hub ring does not embed in a chimera chain".into()));
    }
    let units = p.n_units / 2;
    let map = star_chain_chimera_embedding(units)?;
    let chain = build_star_chain(p)?;
    let topo = chimera_topology(units)?;
    let mut fields = vec![0.0; topo.n_spins()];
    for (i, &f) in chain.fields().iter().enumerate() {
        fields[map[i]] = f;
    }
    let couplings: Vec<_> = chain
        .couplings()
        .iter()
        .map(|(&(i, j), &v)| ((map[i], map[j]), v))
        .collect();
    SpinHamiltonian::from_parts(topo, fields, couplings)
}
