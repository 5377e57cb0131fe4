use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{binomial_row, check_beta, SpinHamiltonian, Topology};
use crate::error::{Error, Result};
use crate::scalar::{log_z_moments, Jet, Scalar};
use crate::thermo::{Spectrum, ThermalStats};

/// How the hub chain of a Star-chain closes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainBoundary {
    /// Ring `α → α+1 mod n`. One hub has no ring term; two hubs share a
    /// single edge carrying `2J`.
    #[default]
    Periodic,
    /// Path of `n − 1` hub-hub edges.
    Open,
}

/// `H = a Σ σ_α + J Σ σ_α σ_{α+1} + b Σ_{α,i} (σ_α + 1) σ_{α,i}`.
///
/// Hubs are spins `0..n`; the leaves of hub α are `n + α·m .. n + (α+1)·m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarChainParams {
    pub n_units: usize,
    pub leaves_per_unit: usize,
    pub a: f64,
    pub b: f64,
    pub j: f64,
    #[serde(default)]
    pub boundary: ChainBoundary,
}

impl StarChainParams {
    pub fn new(n_units: usize, leaves_per_unit: usize, a: f64, b: f64, j: f64) -> Result<Self> {
        let p = StarChainParams {
            n_units,
            leaves_per_unit,
            a,
            b,
            j,
            boundary: ChainBoundary::Periodic,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_boundary(mut self, boundary: ChainBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn n_spins(&self) -> usize {
        self.n_units * (self.leaves_per_unit + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_units < 1 || self.leaves_per_unit < 1 {
            return Err(Error::Domain("star-chain needs n >= 1 and m >= 1".into()));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.j.is_finite()) {
            return Err(Error::Domain("star-chain parameters must be finite".into()));
        }
        Ok(())
    }

    /// Hub-hub edges with their coupling multiplicity.
    pub fn hub_edges(&self) -> Vec<((usize, usize), f64)> {
        let n = self.n_units;
        match (self.boundary, n) {
            (_, 1) => vec![],
            (ChainBoundary::Periodic, 2) => vec![((0, 1), 2.0)],
            (ChainBoundary::Periodic, _) => {
                let mut v: Vec<_> = (0..n - 1).map(|k| ((k, k + 1), 1.0)).collect();
                v.push(((0, n - 1), 1.0));
                v
            }
            (ChainBoundary::Open, _) => (0..n - 1).map(|k| ((k, k + 1), 1.0)).collect(),
        }
    }
}

pub fn build_star_chain(p: &StarChainParams) -> Result<SpinHamiltonian<f64>> {
    p.validate()?;
    let (n, m) = (p.n_units, p.leaves_per_unit);
    let mut couplings: Vec<((usize, usize), f64)> = p
        .hub_edges()
        .into_iter()
        .map(|(e, k)| (e, k * p.j))
        .collect();
    let mut fields = vec![p.a; n];
    for alpha in 0..n {
        for i in 0..m {
            let leaf = n + alpha * m + i;
            couplings.push(((alpha, leaf), p.b));
            fields.push(p.b);
        }
    }
    let topo = Topology::from_edges(p.n_spins(), couplings.iter().map(|c| c.0))?;
    SpinHamiltonian::from_parts(topo, fields, couplings)
}

/// Log-weights of a hub pointing up or down after summing out its leaves.
fn hub_weights<S: Scalar>(m: usize, a: S, b: S, beta: S) -> (S, S) {
    let ln2 = S::cst(std::f64::consts::LN_2);
    let up = -(beta * a) + ((beta * b).scale(2.0).ln_cosh() + ln2).scale(m as f64);
    let down = beta * a + ln2.scale(m as f64);
    (up, down)
}

/// Eigenvalues `(λ₊, λ₋)` of the symmetrized transfer matrix, each scaled by
/// `e^{−shift}`; returns `(shift, λ₊, λ₋)`.
fn transfer_eigen<S: Scalar>(m: usize, a: S, b: S, j: S, beta: S) -> (S, S, S) {
    let (wu, wd) = hub_weights(m, a, b, beta);
    let shift = if wu.re() >= wd.re() { wu } else { wd };
    let (u, d) = ((wu - shift).exp(), (wd - shift).exp());
    let emj = (-(beta * j)).exp();
    let epj = (beta * j).exp();
    let tr = emj * (u + d);
    let diff = u - d;
    let disc = emj * emj * diff * diff + (u * d * epj * epj).scale(4.0);
    let root = disc.sqrt();
    let plus = (tr + root).scale(0.5);
    let det = u * d * (emj * emj - epj * epj);
    (shift, plus, det / plus)
}

/// `ln Z` of the Star-chain for any boundary.
pub fn star_chain_log_z_generic<S: Scalar>(
    n: usize,
    m: usize,
    boundary: ChainBoundary,
    a: S,
    b: S,
    j: S,
    beta: S,
) -> S {
    if n == 1 {
        let (wu, wd) = hub_weights(m, a, b, beta);
        return wu.lse2(wd);
    }
    match boundary {
        ChainBoundary::Periodic => {
            let (shift, lp, lm) = transfer_eigen(m, a, b, j, beta);
            let r = (lm / lp).powi(n as u32);
            (shift + lp.ln()).scale(n as f64) + r.ln_1p()
        }
        ChainBoundary::Open => {
            let (wu, wd) = hub_weights(m, a, b, beta);
            let shift = if wu.re() >= wd.re() { wu } else { wd };
            let (u, d) = ((wu - shift).exp(), (wd - shift).exp());
            let emj = (-(beta * j)).exp();
            let epj = (beta * j).exp();
            let (mut vu, mut vd) = (u, d);
            let mut log_acc = S::cst(0.0);
            for _ in 1..n {
                let nu = u * (vu * emj + vd * epj);
                let nd = d * (vu * epj + vd * emj);
                let norm = if nu.re() >= nd.re() { nu } else { nd };
                vu = nu / norm;
                vd = nd / norm;
                log_acc = log_acc + norm.ln();
            }
            shift.scale(n as f64) + log_acc + (vu + vd).ln()
        }
    }
}

pub fn star_chain_log_z(p: &StarChainParams, beta: f64) -> Result<f64> {
    p.validate()?;
    check_beta(beta)?;
    Ok(star_chain_log_z_generic(
        p.n_units,
        p.leaves_per_unit,
        p.boundary,
        p.a,
        p.b,
        p.j,
        beta,
    ))
}

pub fn star_chain_stats(p: &StarChainParams, beta: f64) -> Result<ThermalStats<f64>> {
    p.validate()?;
    check_beta(beta)?;
    let (lz, mean, var) = log_z_moments(
        |bt: Jet<f64>| {
            star_chain_log_z_generic(
                p.n_units,
                p.leaves_per_unit,
                p.boundary,
                Jet::cst(p.a),
                Jet::cst(p.b),
                Jet::cst(p.j),
                bt,
            )
        },
        beta,
    );
    Ok(ThermalStats::from_moments(beta, lz, mean, var))
}

/// Unscaled transfer-matrix eigenvalues `(λ₊, λ₋)`.
pub fn star_chain_transfer_eigenvalues(p: &StarChainParams, beta: f64) -> Result<(f64, f64)> {
    p.validate()?;
    check_beta(beta)?;
    let (s, lp, lm) = transfer_eigen(p.leaves_per_unit, p.a, p.b, p.j, beta);
    Ok((lp * s.exp(), lm * s.exp()))
}

/// Largest hub count accepted by [`star_chain_spectrum`].
pub const MAX_SPECTRUM_HUBS: usize = 20;

/// Exact spectrum from hub configurations and binomial leaf levels.
pub fn star_chain_spectrum(p: &StarChainParams) -> Result<Spectrum<f64>> {
    p.validate()?;
    let (n, m) = (p.n_units, p.leaves_per_unit);
    if n > MAX_SPECTRUM_HUBS {
        return Err(Error::Size(format!(
            "{n} hubs exceeds the spectrum limit of {MAX_SPECTRUM_HUBS}"
        )));
    }
    if p.n_spins() > 127 {
        return Err(Error::Size(format!("{} spins overflows u128", p.n_spins())));
    }
    let edges = p.hub_edges();
    // (hubs up, hub interaction sum) -> number of hub configurations
    let mut groups: BTreeMap<(usize, i64), u128> = BTreeMap::new();
    for cfg in 0u64..1 << n {
        let s = |k: usize| if cfg >> k & 1 == 1 { 1i64 } else { -1 };
        let inter: i64 = edges
            .iter()
            .map(|&((x, y), k)| k as i64 * s(x) * s(y))
            .sum();
        *groups.entry((cfg.count_ones() as usize, inter)).or_default() += 1;
    }
    let rows: Vec<Vec<u128>> = (0..=n)
        .map(|u| binomial_row(m * u))
        .collect::<Result<_>>()?;
    let mut levels = Vec::new();
    for (&(up, inter), &count) in &groups {
        let free = 1u128 << ((n - up) * m);
        for (mu, &c) in rows[up].iter().enumerate() {
            let e = p.j * inter as f64
                + p.a * (2.0 * up as f64 - n as f64)
                + 2.0 * p.b * (2.0 * mu as f64 - (m * up) as f64);
            levels.push((e, count * free * c));
        }
    }
    Spectrum::from_weighted(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_star, star_spectrum, StarParams};
    use crate::thermo::thermal_stats;

    fn brute(h: &SpinHamiltonian<f64>) -> Spectrum<f64> {
        let n = h.n_spins();
        Spectrum::from_weighted((0..1u64 << n).map(|c| (h.energy(c), 1))).unwrap()
    }

    fn same(a: &Spectrum<f64>, b: &Spectrum<f64>) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.levels().iter().zip(b.levels()) {
            assert!((x.0 - y.0).abs() < 1e-10, "{x:?} {y:?}");
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn single_unit_is_a_star() {
        let p = StarChainParams::new(1, 4, 1.3, 0.7, -2.0).unwrap();
        let h = build_star_chain(&p).unwrap();
        let s = build_star(&StarParams::new(5, 1.3, 0.7).unwrap()).unwrap();
        assert_eq!(h, s);
    }

    #[test]
    fn two_units_share_one_doubled_edge() {
        let p = StarChainParams::new(2, 3, 1.0, 0.5, -0.8).unwrap();
        let h = build_star_chain(&p).unwrap();
        assert_eq!(h.n_spins(), 8);
        assert_eq!(h.coupling(0, 1), -1.6);
        assert_eq!(h.topology().n_edges(), 7);
        let o = build_star_chain(&p.with_boundary(ChainBoundary::Open)).unwrap();
        assert_eq!(o.coupling(0, 1), -0.8);
    }

    #[test]
    fn spectrum_matches_brute_force() {
        for b in [ChainBoundary::Periodic, ChainBoundary::Open] {
            for &(n, m) in &[(1, 3), (2, 2), (3, 2), (4, 1), (2, 3)] {
                let p = StarChainParams::new(n, m, 0.9, 0.45, -0.65)
                    .unwrap()
                    .with_boundary(b);
                let s = star_chain_spectrum(&p).unwrap();
                assert_eq!(s.total_dim(), 1u128 << p.n_spins());
                same(&s, &brute(&build_star_chain(&p).unwrap()));
            }
        }
    }

    #[test]
    fn all_hubs_down_level() {
        let p = StarChainParams::new(3, 3, 2.0, 0.8, 1.5).unwrap();
        let s = star_chain_spectrum(&p).unwrap();
        // all hubs down: every ring bond is satisfied parallel, E = 3J − 3a
        let e = 3.0 * 1.5 - 3.0 * 2.0;
        assert!(s
            .levels()
            .iter()
            .any(|&(x, g)| (x - e).abs() < 1e-12 && g == 1 << 9));
    }

    #[test]
    fn log_z_matches_spectrum() {
        for b in [ChainBoundary::Periodic, ChainBoundary::Open] {
            for &(n, m, a, bb, j) in &[
                (2, 3, 1.1, 0.6, -0.9),
                (3, 2, -0.4, 1.2, 0.7),
                (5, 3, 3.5, 1.55, -1.6),
                (1, 5, 0.3, 0.2, 4.0),
            ] {
                let p = StarChainParams::new(n, m, a, bb, j).unwrap().with_boundary(b);
                let t = thermal_stats(&star_chain_spectrum(&p).unwrap(), 1.3).unwrap();
                let z = star_chain_stats(&p, 1.3).unwrap();
                assert!((z.log_partition - t.log_partition).abs() < 1e-12 * t.log_partition.abs());
                assert!((z.heat_capacity - t.heat_capacity).abs() < 1e-10 * t.heat_capacity);
            }
        }
    }

    #[test]
    fn zero_chain_counts_states() {
        let p = StarChainParams::new(4, 3, 0.0, 0.0, 0.0).unwrap();
        let lz = star_chain_log_z(&p, 1.0).unwrap();
        assert!((lz - 16.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_match_displayed_closed_form() {
        // with a ferromagnetic-sign convention the display uses C = e^{-βJ}
        let (m, a, b, j, beta) = (3usize, 0.7, 0.4, -0.3, 1.2);
        let p = StarChainParams::new(3, m, a, b, j).unwrap();
        let (lp, lm) = star_chain_transfer_eigenvalues(&p, beta).unwrap();
        let big_a = (beta * a).exp();
        let big_b = (2.0 * beta * b).cosh();
        let big_c = (-beta * j).exp();
        let bm = big_b.powi(m as i32);
        let pre = 2f64.powi(m as i32 - 1) / (big_a * big_c);
        let root = (4.0 * big_a.powi(2) * bm + big_c.powi(4) * (big_a.powi(2) - bm).powi(2)).sqrt();
        let want_p = pre * (big_c.powi(2) * (big_a.powi(2) + bm) + root);
        let want_m = pre * (big_c.powi(2) * (big_a.powi(2) + bm) - root);
        assert!((lp - want_p).abs() < 1e-12 * want_p);
        assert!((lm - want_m).abs() < 1e-12 * want_p);
    }

    #[test]
    fn strong_ferro_chain_reduces_to_star() {
        // J → −∞ locks the hubs; low levels match a Star with n·m leaves
        let (n, m, a, b, j) = (3, 2, 0.8, 0.5, -25.0);
        let p = StarChainParams::new(n, m, a, b, j).unwrap();
        let s = star_chain_spectrum(&p).unwrap();
        let star = star_spectrum(&StarParams::new(n * m + 1, n as f64 * a, b).unwrap()).unwrap();
        let g0 = s.ground_energy();
        let low: Vec<_> = s
            .levels()
            .iter()
            .filter(|l| l.0 < g0 + 2.0 * j.abs())
            .map(|&(e, g)| (e - g0, g))
            .collect();
        let ref_levels: Vec<_> = star
            .shifted()
            .levels()
            .iter()
            .copied()
            .collect();
        assert_eq!(low.len(), ref_levels.len());
        for (x, y) in low.iter().zip(&ref_levels) {
            assert!((x.0 - y.0).abs() < 1e-9);
            assert_eq!(x.1, y.1);
        }
    }

    #[test]
    fn spectrum_size_cap() {
        let p = StarChainParams::new(21, 1, 0.1, 0.1, 0.1).unwrap();
        assert!(matches!(star_chain_spectrum(&p), Err(Error::Size(_))));
    }
}
