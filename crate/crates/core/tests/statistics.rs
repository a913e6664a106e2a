//! Shot-noise sampling statistics and reproducibility.

use oam_plasmon::{sample_counts, RunConfig, ScanCurve};

#[test]
fn sample_mean_matches_poisson_mean() {
    // 10^4 independent draws at one point, each under its own seed
    let p = 0.137;
    let curve = ScanCurve::new(vec![0.0], vec![p], "").unwrap();
    let base = RunConfig { pair_rate: 2000.0, integration_time: 1.0, rng_seed: 0, epsilon_noise: 0.0 };
    let lambda = base.mean_counts(p);
    let reps = 10_000u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for seed in 0..reps {
        let c = sample_counts(&curve, &RunConfig { rng_seed: seed, ..base }).unwrap().sampled.unwrap()[0] as f64;
        sum += c;
        sum_sq += c * c;
    }
    let mean = sum / reps as f64;
    let var = sum_sq / reps as f64 - mean * mean;
    let sigma = lambda.sqrt() / (reps as f64).sqrt();
    assert!((mean - lambda).abs() < 3.0 * sigma, "mean {mean} vs {lambda}");
    assert!((var / lambda - 1.0).abs() < 0.1, "variance {var} vs {lambda}");
}

#[test]
fn points_are_independent_of_curve_length() {
    // point i always draws from stream i, whatever else is on the curve
    let cfg = RunConfig::default();
    let short = ScanCurve::new(vec![0.0, 1.0], vec![0.2, 0.3], "").unwrap();
    let long = ScanCurve::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.2, 0.3, 0.4, 0.5], "").unwrap();
    let a = sample_counts(&short, &cfg).unwrap().sampled.unwrap();
    let b = sample_counts(&long, &cfg).unwrap().sampled.unwrap();
    assert_eq!(a[..], b[..2]);
}

#[test]
fn neighbouring_streams_are_uncorrelated() {
    let n = 4000;
    let curve = ScanCurve::new((0..n).map(|i| i as f64).collect(), vec![0.05; n], "").unwrap();
    let counts = sample_counts(&curve, &RunConfig::default()).unwrap().sampled.unwrap();
    let x: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let cov = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1) as f64;
    assert!((cov / var).abs() < 0.06, "lag-1 correlation {}", cov / var);
}
