use serde::{Deserialize, Serialize};

use super::{binomial_row, check_beta, SpinHamiltonian, Topology};
use crate::error::{Error, Result};
use crate::scalar::{log_z_moments, Jet, Scalar};
use crate::thermo::{Spectrum, ThermalStats};

/// `H = a σ_1 + b Σ_{i≥2} σ_i (1 + σ_1)`; the hub is spin 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarParams {
    pub n_spins: usize,
    pub a: f64,
    pub b: f64,
}

impl StarParams {
    pub fn new(n_spins: usize, a: f64, b: f64) -> Result<Self> {
        let p = StarParams { n_spins, a, b };
        p.validate()?;
        Ok(p)
    }

    /// The degeneracy-maximizing tie `a = b(N − 3)`.
    pub fn tied(n_spins: usize, b: f64) -> Result<Self> {
        Self::new(n_spins, b * (n_spins as f64 - 3.0), b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins < 2 {
            return Err(Error::Domain(format!(
                "star needs at least 2 spins, got {}",
                self.n_spins
            )));
        }
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::Domain("star parameters must be finite".into()));
        }
        Ok(())
    }
}

pub fn build_star(p: &StarParams) -> Result<SpinHamiltonian<f64>> {
    p.validate()?;
    let n = p.n_spins;
    let topo = Topology::from_edges(n, (1..n).map(|i| (0, i)))?;
    let mut fields = vec![p.b; n];
    fields[0] = p.a;
    SpinHamiltonian::from_parts(topo, fields, (1..n).map(|i| ((0, i), p.b)))
}

/// Two privileged spins coupled by `a`, each coupled to the rest with `b`:
/// `H = a σ_1σ_2 + b Σ_{i=1,2} σ_i (1 + Σ_{j≥3} σ_j)`.
pub fn build_star_bar(n_spins: usize, a: f64, b: f64) -> Result<SpinHamiltonian<f64>> {
    if n_spins < 3 {
        return Err(Error::Domain("star-bar needs at least 3 spins".into()));
    }
    let n = n_spins;
    let mut edges = vec![((0, 1), a)];
    for j in 2..n {
        edges.push(((0, j), b));
        edges.push(((1, j), b));
    }
    let topo = Topology::from_edges(n, edges.iter().map(|e| e.0))?;
    let mut fields = vec![0.0; n];
    fields[0] = b;
    fields[1] = b;
    SpinHamiltonian::from_parts(topo, fields, edges)
}

/// Binomial branch `a + 2b(2k − (N−1))` and flat level `−a` of weight `2^{N−1}`.
pub fn star_spectrum(p: &StarParams) -> Result<Spectrum<f64>> {
    p.validate()?;
    let n = p.n_spins;
    if n > 127 {
        return Err(Error::Size(format!("star spectrum for {n} spins overflows u128")));
    }
    let row = binomial_row(n - 1)?;
    let mut levels: Vec<(f64, u128)> = row
        .iter()
        .enumerate()
        .map(|(k, &g)| (p.a + 2.0 * p.b * (2.0 * k as f64 - (n - 1) as f64), g))
        .collect();
    levels.push((-p.a, 1u128 << (n - 1)));
    Spectrum::from_weighted(levels)
}

/// `ln Z = ln(e^{−βa}(2 cosh 2βb)^{N−1} + 2^{N−1} e^{βa})`.
pub fn star_log_z_generic<S: Scalar>(n_spins: usize, a: S, b: S, beta: S) -> S {
    let m = (n_spins - 1) as f64;
    let ln2 = std::f64::consts::LN_2;
    let up = -(beta * a) + ((beta * b).scale(2.0).ln_cosh() + S::cst(ln2)).scale(m);
    let down = beta * a + S::cst(m * ln2);
    up.lse2(down)
}

pub fn star_log_z(p: &StarParams, beta: f64) -> Result<f64> {
    p.validate()?;
    check_beta(beta)?;
    Ok(star_log_z_generic(p.n_spins, p.a, p.b, beta))
}

/// Closed-form heat capacity: a mixture of the hub-up binomial component
/// and the flat hub-down level.
pub fn star_heat_capacity(p: &StarParams, beta: f64) -> Result<f64> {
    p.validate()?;
    check_beta(beta)?;
    let m = (p.n_spins - 1) as f64;
    let y = 2.0 * beta * p.b;
    let ln_up = -beta * p.a + m * (Scalar::ln_cosh(y) + std::f64::consts::LN_2);
    let ln_down = beta * p.a + m * std::f64::consts::LN_2;
    let p_up = 1.0 / (1.0 + (ln_down - ln_up).exp());
    let p_down = 1.0 / (1.0 + (ln_up - ln_down).exp());
    let t = y.tanh();
    let mean_up = p.a - 2.0 * p.b * m * t;
    let var_up = 4.0 * p.b * p.b * m * (1.0 - t * t);
    let gap = mean_up + p.a;
    let var = p_up * var_up + p_up * p_down * gap * gap;
    Ok(beta * beta * var)
}

/// `ln Z`, mean, variance and heat capacity from the analytic partition function.
pub fn star_stats(p: &StarParams, beta: f64) -> Result<ThermalStats<f64>> {
    p.validate()?;
    check_beta(beta)?;
    let (lz, mean, var) = log_z_moments(
        |bt: Jet<f64>| star_log_z_generic(p.n_spins, Jet::cst(p.a), Jet::cst(p.b), bt),
        beta,
    );
    Ok(ThermalStats::from_moments(beta, lz, mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{c_opt_pow2, thermal_stats};

    #[test]
    fn two_spin_expansion() {
        let h = build_star(&StarParams::new(2, 0.3, -0.8).unwrap()).unwrap();
        assert_eq!(h.fields(), &[0.3, -0.8]);
        assert_eq!(h.coupling(0, 1), -0.8);
        assert_eq!(h.couplings().len(), 1);
    }

    #[test]
    fn expansion_matches_definition() {
        let p = StarParams::new(6, 1.7, 0.45).unwrap();
        let h = build_star(&p).unwrap();
        for c in 0..64u64 {
            let s = |i: usize| if c >> i & 1 == 1 { 1.0 } else { -1.0 };
            let direct: f64 =
                p.a * s(0) + (1..6).map(|i| p.b * s(i) * (1.0 + s(0))).sum::<f64>();
            assert!((h.energy(c) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn too_small_star_is_rejected() {
        assert!(StarParams::new(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn flat_level_and_dimension() {
        let p = StarParams::new(9, 6.1, 1.4).unwrap();
        let s = star_spectrum(&p).unwrap();
        assert_eq!(s.total_dim(), 512);
        assert!(s.levels().iter().any(|&(e, g)| (e + 6.1).abs() < 1e-12 && g == 256));
    }

    #[test]
    fn tied_star_first_excited_degeneracy() {
        for n in 4..20 {
            let p = StarParams::tied(n, 1.3).unwrap();
            let s = star_spectrum(&p).unwrap();
            assert_eq!(s.levels()[0].1, 1);
            assert_eq!(s.levels()[1].1, (1u128 << (n - 1)) + (n as u128 - 1));
        }
    }

    #[test]
    fn zero_star() {
        let p = StarParams::new(5, 0.0, 0.0).unwrap();
        assert!((star_log_z(&p, 1.0).unwrap() - 5.0 * std::f64::consts::LN_2).abs() < 1e-14);
        assert_eq!(star_heat_capacity(&p, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn two_spin_partition_function() {
        let (a, b) = (0.4, -1.1);
        let p = StarParams::new(2, a, b).unwrap();
        let z = (-a as f64).exp() * ((2.0 * b as f64).exp() + (-2.0 * b as f64).exp())
            + 2.0 * (a as f64).exp();
        assert!((star_log_z(&p, 1.0).unwrap() - z.ln()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_spectrum() {
        for &(n, a, b, beta) in &[
            (3, 0.2, 0.7, 1.0),
            (7, 5.07, 1.267, 1.0),
            (12, 18.3, 2.03, 1.0),
            (16, -3.0, 0.4, 0.7),
            (10, 2.0, -1.5, 2.0),
        ] {
            let p = StarParams::new(n, a, b).unwrap();
            let t = thermal_stats(&star_spectrum(&p).unwrap(), beta).unwrap();
            let c = star_heat_capacity(&p, beta).unwrap();
            assert!((c - t.heat_capacity).abs() <= 1e-10 * t.heat_capacity, "{n} {a} {b}");
            let j = star_stats(&p, beta).unwrap();
            assert!((j.heat_capacity - c).abs() <= 1e-10 * c);
            assert!((j.log_partition - t.log_partition).abs() <= 1e-12 * t.log_partition.abs());
            assert!((j.mean_energy - t.mean_energy).abs() <= 1e-10 * t.mean_energy.abs().max(1.0));
        }
    }

    #[test]
    fn table_point_lies_in_sandwich() {
        let p = StarParams::new(7, 5.070, 1.267).unwrap();
        let c = star_heat_capacity(&p, 1.0).unwrap();
        assert!(c >= c_opt_pow2(6).unwrap() && c <= c_opt_pow2(7).unwrap());
    }

    #[test]
    fn log_z_handles_huge_n() {
        let p = StarParams::new(1_000_000, 1.0e5, 2.0).unwrap();
        assert!(star_log_z(&p, 1.0).unwrap().is_finite());
        assert!(star_heat_capacity(&p, 1.0).unwrap().is_finite());
    }

    #[test]
    fn star_bar_has_star_spectrum() {
        for &(n, a, b) in &[(5, 2.0, 0.6), (9, 8.96, -1.51)] {
            let h = build_star_bar(n, a, b).unwrap();
            let energies: Vec<f64> = (0..1u64 << n).map(|c| h.energy(c)).collect();
            let bar = Spectrum::from_weighted(energies.into_iter().map(|e| (e, 1))).unwrap();
            let star = star_spectrum(&StarParams::new(n, a, b).unwrap()).unwrap();
            assert_eq!(bar.len(), star.len());
            for (x, y) in bar.levels().iter().zip(star.levels()) {
                assert!((x.0 - y.0).abs() < 1e-12);
                assert_eq!(x.1, y.1);
            }
        }
    }
}
