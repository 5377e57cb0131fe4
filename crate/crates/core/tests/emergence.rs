use spinthermo_core::analysis::{all_to_all_optimum, star_optimum};
use spinthermo_core::models::Topology;
use spinthermo_core::optimize::{multi_restart, Init, OptimizerConfig, ParameterSpace};

fn direct_optimum(n: usize) -> (f64, Vec<f64>) {
    let mut cfg = OptimizerConfig::fixed(8000, 0.01, Init::Uniform { lo: -1.0, hi: 0.0 });
    cfg.restarts = 4;
    let m = multi_restart(&ParameterSpace::direct(Topology::complete(n), None), &cfg, 1.0).unwrap();
    (m.best.best_c, m.outcomes.iter().map(|o| o.best_c.unwrap()).collect())
}

#[test]
fn small_systems_reach_the_all_to_all_optimum() {
    for n in 2..=5 {
        let (c, _) = direct_optimum(n);
        let (_, _, a2a) = all_to_all_optimum(n).unwrap();
        assert!((c - a2a).abs() <= 0.005 * a2a, "N={n}: {c} vs {a2a}");
    }
}

#[test]
fn six_spins_sit_at_the_crossover() {
    // some restarts stop at the all-to-all point, the best one is Star-like
    let (c, per) = direct_optimum(6);
    let (_, _, a2a) = all_to_all_optimum(6).unwrap();
    let (_, _, star) = star_optimum(6).unwrap();
    assert!(per.iter().any(|x| (x - a2a).abs() <= 0.005 * a2a), "{per:?}");
    assert!(star > 1.02 * a2a);
    assert!(c >= star - 1e-9, "{c} vs {star}");
}

#[test]
fn larger_systems_reach_the_star_optimum() {
    for n in 7..=12 {
        let (c, _) = direct_optimum(n);
        let (_, _, star) = star_optimum(n).unwrap();
        assert!((c - star).abs() <= 0.005 * star, "N={n}: {c} vs {star}");
    }
}
