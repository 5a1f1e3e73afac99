use std::f64::consts::PI;

use band_core::solver::{self, InitMode, SolverConfig};

fn energy(init: InitMode, seed: u64) -> f64 {
    let mut config = SolverConfig::with_length(2.0 * PI);
    config.n_nodes = 64;
    config.init_mode = init;
    config.seed = seed;
    let sol = solver::solve(&config).unwrap();
    assert!(sol.report.converged, "{}", sol.report.message);
    sol.report.final_energy
}

#[test]
fn different_starts_reach_the_same_energy() {
    let a = energy(InitMode::PerturbedCircle, 1);
    let b = energy(InitMode::PerturbedCircle, 2);
    let c = energy(InitMode::AnalyticMoebius, 0);
    assert!((a - b).abs() <= 1e-4 * a, "{a} {b}");
    assert!((a - c).abs() <= 1e-4 * a, "{a} {c}");
}
