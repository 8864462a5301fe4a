mod oracles;

use storage_core::{run_filter, simulate_dgp, solve_price_function, FilterConfig, Params, Preset, ShockDistribution, SolverConfig};

#[test]
fn three_period_likelihood_matches_quadrature() {
    let params: Params = Preset::Monthly.params();
    let table = solve_price_function(&params, &SolverConfig::default()).unwrap();
    let sim = simulate_dgp(&params, &table, 3, 2024, ShockDistribution::Gaussian, 12).unwrap();
    let prices = [sim.series.values[0], sim.series.values[1], sim.series.values[2]];
    let exact = oracles::three_period_loglik(&table, prices, 2000);

    let cfg = FilterConfig { particles: 1 << 16, track_states: false, ..Default::default() };
    let runs: Vec<f64> = (0..8).map(|s| run_filter(&table, &sim.series, &cfg, s).unwrap().loglik).collect();
    let mean = runs.iter().sum::<f64>() / runs.len() as f64;
    let sd = (runs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64).sqrt();
    let se = sd / (runs.len() as f64).sqrt();
    println!("prices {prices:?} exact {exact} filter mean {mean} sd {sd}");
    assert!((mean - exact).abs() < 3.0 * se, "exact {exact} filter {mean} se {se}");
}

#[test]
fn monte_carlo_spread_of_loglik_at_monthly_truth() {
    let params: Params = Preset::Monthly.params();
    let table = solve_price_function(&params, &SolverConfig::default()).unwrap();
    let sim = simulate_dgp(&params, &table, 250, 77, ShockDistribution::Gaussian, 12).unwrap();
    let cfg = FilterConfig { track_states: false, ..Default::default() };
    let start = std::time::Instant::now();
    let runs: Vec<f64> = (0..10).map(|s| run_filter(&table, &sim.series, &cfg, 1000 + s).unwrap().loglik).collect();
    let mean = runs.iter().sum::<f64>() / 10.0;
    let sd = (runs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
    println!("loglik {mean} mc sd {sd} ({:?} per filter pass)", start.elapsed() / 10);
    assert!(sd < 0.04, "mc sd {sd}");
}

#[test]
fn loglik_is_continuous_in_parameters() {
    let params: Params = Preset::Monthly.params();
    let solver = SolverConfig::default();
    let table = solve_price_function(&params, &solver).unwrap();
    let sim = simulate_dgp(&params, &table, 120, 5, ShockDistribution::Gaussian, 12).unwrap();
    let cfg = FilterConfig { particles: 1024, track_states: false, ..Default::default() };
    let base = run_filter(&table, &sim.series, &cfg, 3).unwrap().loglik;
    for i in 0..4 {
        let mut theta = params.theta();
        theta[i] += 1e-4;
        let moved = storage_core::pf_loglik(&params.with_theta(theta), &sim.series, &cfg, &solver, 3).unwrap().loglik;
        println!("coordinate {i}: {base} -> {moved}");
        assert!((moved - base).abs() < 0.1, "coordinate {i} jumped by {}", moved - base);
    }
}
