use super::{binomial_row, check_beta, ln_factorials, SpinHamiltonian, Topology};
use crate::error::{Error, Result};
use crate::scalar::{lse, log_z_moments, Jet, Scalar};
use crate::thermo::{c_opt_pow2, Spectrum, ThermalStats};

/// Periodic chain `H = −h Σ σ_i − J Σ σ_i σ_{i+1}` as a generic Hamiltonian.
pub fn build_ising_1d(h: f64, j: f64, n_spins: usize) -> Result<SpinHamiltonian<f64>> {
    if n_spins < 3 {
        return Err(Error::Domain("periodic Ising chain needs at least 3 spins".into()));
    }
    let topo = Topology::chain(n_spins, true);
    let edges: Vec<_> = topo.edges().map(|e| (e, -j)).collect();
    SpinHamiltonian::from_parts(topo, vec![-h; n_spins], edges)
}

/// `ln(λ₊^N + λ₋^N)` for the periodic chain.
pub fn ising_1d_log_z_generic<S: Scalar>(h: S, j: S, n_spins: usize, beta: S) -> S {
    let bj = beta * j;
    let bh = beta * h;
    let a = bj.exp() * bh.cosh();
    let sh = bh.sinh();
    let b = ((bj.scale(2.0)).exp() * sh * sh + (-bj.scale(2.0)).exp()).sqrt();
    let plus = a + b;
    let minus = bj.scale(2.0).sinh().scale(2.0) / plus;
    let r = (minus / plus).powi(n_spins as u32);
    plus.ln().scale(n_spins as f64) + r.ln_1p()
}

pub fn ising_1d_stats(h: f64, j: f64, n_spins: usize, beta: f64) -> Result<ThermalStats<f64>> {
    if n_spins < 3 {
        return Err(Error::Domain("periodic Ising chain needs at least 3 spins".into()));
    }
    check_beta(beta)?;
    let (lz, mean, var) = log_z_moments(
        |bt: Jet<f64>| ising_1d_log_z_generic(Jet::cst(h), Jet::cst(j), n_spins, bt),
        beta,
    );
    Ok(ThermalStats::from_moments(beta, lz, mean, var))
}

/// `H = −h Σ σ_i − J Σ_{i<j} σ_i σ_j` as a generic Hamiltonian.
pub fn build_all_to_all(h: f64, j: f64, n_spins: usize) -> Result<SpinHamiltonian<f64>> {
    if n_spins < 2 {
        return Err(Error::Domain("all-to-all model needs at least 2 spins".into()));
    }
    let topo = Topology::complete(n_spins);
    let edges: Vec<_> = topo.edges().map(|e| (e, -j)).collect();
    SpinHamiltonian::from_parts(topo, vec![-h; n_spins], edges)
}

/// Energy with `k` spins up.
pub fn all_to_all_energy(h: f64, j: f64, n_spins: usize, k: usize) -> f64 {
    let (n, k) = (n_spins as f64, k as f64);
    h * (n - 2.0 * k) + 0.5 * j * (4.0 * k * (n - k) - n * (n - 1.0))
}

pub fn all_to_all_spectrum(h: f64, j: f64, n_spins: usize) -> Result<Spectrum<f64>> {
    if n_spins < 2 {
        return Err(Error::Domain("all-to-all model needs at least 2 spins".into()));
    }
    let row = binomial_row(n_spins)?;
    Spectrum::from_weighted(
        row.iter()
            .enumerate()
            .map(|(k, &g)| (all_to_all_energy(h, j, n_spins, k), g)),
    )
}

pub fn all_to_all_log_z_generic<S: Scalar>(h: S, j: S, n_spins: usize, beta: S) -> S {
    let lf = ln_factorials(n_spins);
    let n = n_spins as f64;
    let terms: Vec<S> = (0..=n_spins)
        .map(|k| {
            let kf = k as f64;
            let e = h.scale(n - 2.0 * kf) + j.scale(0.5 * (4.0 * kf * (n - kf) - n * (n - 1.0)));
            S::cst(lf[n_spins] - lf[k] - lf[n_spins - k]) - beta * e
        })
        .collect();
    lse(&terms)
}

pub fn all_to_all_stats(h: f64, j: f64, n_spins: usize, beta: f64) -> Result<ThermalStats<f64>> {
    if n_spins < 2 {
        return Err(Error::Domain("all-to-all model needs at least 2 spins".into()));
    }
    check_beta(beta)?;
    let (lz, mean, var) = log_z_moments(
        |bt: Jet<f64>| all_to_all_log_z_generic(Jet::cst(h), Jet::cst(j), n_spins, bt),
        beta,
    );
    Ok(ThermalStats::from_moments(beta, lz, mean, var))
}

/// Heat capacity of the k-SAT construction: `C_opt(2^{N/2})`.
pub fn ksat_reference_curve(n_spins: usize) -> Result<f64> {
    if n_spins % 2 == 1 || n_spins < 4 {
        return Err(Error::Domain(format!(
            "k-SAT reference needs even N >= 4, got {n_spins}"
        )));
    }
    c_opt_pow2((n_spins / 2) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::thermal_stats;

    fn brute(h: &SpinHamiltonian<f64>, beta: f64) -> ThermalStats<f64> {
        let e: Vec<f64> = (0..1u64 << h.n_spins()).map(|c| h.energy(c)).collect();
        let s = Spectrum::from_weighted(e.into_iter().map(|x| (x, 1))).unwrap();
        thermal_stats(&s, beta).unwrap()
    }

    #[test]
    fn free_spins() {
        for &h in &[0.3, 1.2, 2.5] {
            let t = ising_1d_stats(h, 0.0, 9, 1.0).unwrap();
            let want = 9.0 * h * h / h.cosh().powi(2);
            assert!((t.heat_capacity - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn ising_matches_brute_force() {
        for &(h, j, n) in &[(0.4, 0.9, 10), (-1.0, -0.6, 7), (0.0, 1.5, 4), (2.0, -2.0, 3)] {
            let t = ising_1d_stats(h, j, n, 1.0).unwrap();
            let b = brute(&build_ising_1d(h, j, n).unwrap(), 1.0);
            assert!((t.heat_capacity - b.heat_capacity).abs() < 1e-10 * b.heat_capacity);
            assert!((t.log_partition - b.log_partition).abs() < 1e-12 * b.log_partition.abs());
        }
    }

    #[test]
    fn ising_rejects_short_chain() {
        assert!(ising_1d_stats(1.0, 1.0, 2, 1.0).is_err());
    }

    #[test]
    fn ising_large_chain_is_finite() {
        let t = ising_1d_stats(0.5, 1.0, 400, 1.0).unwrap();
        assert!(t.heat_capacity.is_finite() && t.heat_capacity > 0.0);
    }

    #[test]
    fn all_to_all_parabolic_when_h_equals_j() {
        let n = 9;
        let s = all_to_all_spectrum(1.0, 1.0, n).unwrap();
        let e0 = s.ground_energy();
        for k in 0..=n {
            let e = all_to_all_energy(1.0, 1.0, n, k);
            let want = if k == n { 0.0 } else { 2.0 * (k as f64 + 1.0) * (n - k) as f64 };
            assert!((e - e0 - want).abs() < 1e-12);
        }
        assert_eq!(s.levels()[1].1, n as u128 + 1);
    }

    #[test]
    fn all_to_all_matches_brute_force() {
        for &(h, j) in &[(0.377, 0.377), (-0.8, 0.3), (1.4, -0.5)] {
            let s = all_to_all_spectrum(h, j, 8).unwrap();
            let b = build_all_to_all(h, j, 8).unwrap();
            let e: Vec<f64> = (0..256u64).map(|c| b.energy(c)).collect();
            let direct = Spectrum::from_weighted(e.into_iter().map(|x| (x, 1))).unwrap();
            assert_eq!(s.len(), direct.len());
            for (x, y) in s.levels().iter().zip(direct.levels()) {
                assert!((x.0 - y.0).abs() < 1e-12);
                assert_eq!(x.1, y.1);
            }
            let t = all_to_all_stats(h, j, 8, 1.0).unwrap();
            let d = thermal_stats(&s, 1.0).unwrap();
            assert!((t.heat_capacity - d.heat_capacity).abs() < 1e-10 * d.heat_capacity);
        }
    }

    #[test]
    fn ksat_reference() {
        assert_eq!(ksat_reference_curve(8).unwrap(), crate::thermo::c_opt(16).unwrap());
        assert!(ksat_reference_curve(7).is_err());
        assert!(ksat_reference_curve(2).is_err());
        let ln2 = std::f64::consts::LN_2;
        let n = 4000usize;
        let r = ksat_reference_curve(n).unwrap() / (ln2 * ln2 * (n * n) as f64 / 16.0);
        assert!((r - 1.0).abs() < 0.01);
    }
}
