use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal};
use ssml_core::experiment::{fit_scaling, sse_log, DEFAULT_EPS_FLOOR};

fn log_spaced(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

fn model(c: f64, n0: f64, gamma: f64, n: f64) -> f64 {
    c * (n + n0).powf(-gamma)
}

#[test]
fn exact_synthetic_recovery() {
    let pts: Vec<(f64, f64)> = log_spaced(50, 10.0, 1e6)
        .into_iter()
        .map(|n| (n, model(2.0, 10.0, 1.0, n)))
        .collect();
    let fit = fit_scaling(&pts, DEFAULT_EPS_FLOOR).unwrap();
    for (got, want) in [(fit.c, 2.0), (fit.n0, 10.0), (fit.gamma, 1.0)] {
        assert!(((got - want) / want).abs() < 1e-6, "{fit:?}");
    }
}

#[test]
fn lognormal_noise_recovery_rate() {
    let noise = LogNormal::new(0.0, 0.05).unwrap();
    let ns = log_spaced(300, 10.0, 1e6);
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = StdRng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| (n, model(2.0, 10.0, 1.0, n) * noise.sample(&mut rng)))
            .collect();
        let fit = fit_scaling(&pts, DEFAULT_EPS_FLOOR).unwrap();
        assert!(fit.sse_log <= sse_log(&pts, 2.0, 10.0, 1.0) + 1e-9);
        if (fit.gamma - 1.0).abs() <= 0.05 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn rescaling_n_rescales_offset_only() {
    let mut rng = StdRng::seed_from_u64(9);
    let noise = LogNormal::new(0.0, 0.1).unwrap();
    let pts: Vec<(f64, f64)> = log_spaced(80, 5.0, 1e5)
        .into_iter()
        .map(|n| (n, model(1.5, 30.0, 0.9, n) * noise.sample(&mut rng)))
        .collect();
    let base = fit_scaling(&pts, 0.0).unwrap();
    for k in [0.01, 3.0, 1000.0] {
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, e)| (n * k, e)).collect();
        let fit = fit_scaling(&scaled, 0.0).unwrap();
        assert!(
            (fit.gamma - base.gamma).abs() < 1e-6,
            "k={k}: {} vs {}",
            fit.gamma,
            base.gamma
        );
        assert!(
            ((fit.n0 - k * base.n0) / (k * base.n0)).abs() < 1e-6,
            "k={k}"
        );
        assert!((fit.sse_log - base.sse_log).abs() < 1e-9);
    }
}

#[test]
fn fit_is_never_worse_than_generator() {
    for seed in 0..20 {
        let mut rng = StdRng::seed_from_u64(1000 + seed);
        let noise = LogNormal::new(0.0, 0.3).unwrap();
        let (c, n0, gamma) = (
            0.5 + seed as f64 * 0.1,
            seed as f64 * 7.0,
            0.6 + seed as f64 * 0.03,
        );
        let pts: Vec<(f64, f64)> = log_spaced(40, 1.0, 1e4)
            .into_iter()
            .map(|n| (n, model(c, n0, gamma, n) * noise.sample(&mut rng)))
            .collect();
        let fit = fit_scaling(&pts, 0.0).unwrap();
        assert!(
            fit.sse_log <= sse_log(&pts, c, n0, gamma) + 1e-9,
            "seed {seed}"
        );
        assert!(fit.c > 0.0 && fit.n0 >= 0.0 && fit.sse_log >= 0.0);
    }
}
