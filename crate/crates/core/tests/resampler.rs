use rand::Rng;
use rand_distr::StandardNormal;
use storage_core::rng::seeded_rng;
use storage_core::{mixture_cdf, stratified_inverse_sample, MixtureResampler, MixtureSpec};

fn random_mixture(n: usize, seed: u64) -> MixtureSpec<f64> {
    let mut rng = seeded_rng(seed);
    let rho: f64 = rng.random_range(-0.95..0.95);
    let means: Vec<f64> = (0..n).map(|_| rho * 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3) + 1e-6).collect();
    let total: f64 = raw.iter().sum();
    MixtureSpec::new(means, raw.iter().map(|w| w / total).collect(), 1.0).unwrap()
}

fn ks_distance(spec: &MixtureSpec<f64>, draws: &[f64]) -> f64 {
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = spec.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn ks_battery_against_exact_mixture_cdf() {
    let mut resampler = MixtureResampler::new(1024).unwrap();
    let sizes = [1usize, 10, 4096];
    for case in 0..20u64 {
        let spec = random_mixture(sizes[case as usize % 3], 100 + case);
        let mut grid = resampler.mixture_pdf_fft(&spec).unwrap();
        mixture_cdf(&mut grid).unwrap();
        let draws = stratified_inverse_sample(&grid, 1 << 16, &mut seeded_rng(case));
        let d = ks_distance(&spec, &draws);
        assert!(d < 0.01, "case {case}: KS distance {d}");
    }
}

#[test]
fn draw_moments_match_mixture() {
    let spec = random_mixture(10, 7);
    let mut grid = MixtureResampler::new(1024).unwrap().mixture_pdf_fft(&spec).unwrap();
    mixture_cdf(&mut grid).unwrap();
    let n = 20_000;
    let draws = stratified_inverse_sample(&grid, n, &mut seeded_rng(9));
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let target_var = spec.total_variance();
    let se_mean = (target_var / n as f64).sqrt();
    assert!((mean - spec.mean()).abs() < 4.0 * se_mean, "mean {mean} vs {}", spec.mean());
    // conservative standard error for the variance (kurtosis <= 9 covers these mixtures)
    let se_var = target_var * (8.0 / n as f64).sqrt();
    assert!((var - target_var).abs() < 4.0 * se_var, "var {var} vs {target_var}");
}

#[test]
fn quantiles_move_continuously_with_means() {
    let base = random_mixture(4096, 3);
    let tilde: Vec<f64> = {
        let mut rng = seeded_rng(11);
        (0..4096).map(|_| rng.random()).collect()
    };
    let mut resampler = MixtureResampler::new(1024).unwrap();
    let (_, d0) = resampler.resample(&base, &tilde).unwrap();
    for h in [1e-3, 1e-5, 1e-7] {
        let shifted = MixtureSpec::new(base.means.iter().map(|m| m + h).collect(), base.weights.clone(), 1.0).unwrap();
        let (_, d1) = resampler.resample(&shifted, &tilde).unwrap();
        let worst = d0.iter().zip(&d1).map(|(a, b)| (b - a - h).abs()).fold(0.0, f64::max);
        assert!(worst < 10.0 * h, "h {h}: worst deviation {worst}");
    }
}
