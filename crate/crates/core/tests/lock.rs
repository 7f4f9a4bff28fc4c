use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use swgate::lock::{compare_loops, histogram, ramsey_phase_estimate, rms, simulate_lock, sw_period_fraction, wavelength_fraction, LockConfig};

fn estimator_spread(phi: f64, m: u32, trials: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..trials).map(|_| ramsey_phase_estimate(phi, m, &mut rng).unwrap()).collect();
    let mean = v.iter().sum::<f64>() / trials as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / trials as f64).sqrt();
    (mean, sd)
}

#[test]
fn estimator_reaches_projection_limit() {
    // binomial σ_p = 1/(2√M), and dφ/dp = 2 at φ = 0
    let (mean, sd) = estimator_spread(0.0, 100, 20_000, 3);
    assert!(mean.abs() < 3e-3, "{mean}");
    assert!((sd - 0.10).abs() < 0.005, "{sd}");
    let (_, sd) = estimator_spread(0.0, 400, 20_000, 4);
    assert!((sd - 0.05).abs() < 0.0025, "{sd}");
    let (mean, sd) = estimator_spread(0.0, 1_000_000, 200, 5);
    assert!(mean.abs() < 1e-3 && sd < 2e-3);
}

#[test]
fn estimator_is_nearly_unbiased_for_small_phases() {
    for phi in [-0.2, 0.1, 0.3] {
        let (mean, _) = estimator_spread(phi, 100, 20_000, 9);
        assert!((mean - phi).abs() < 0.01, "{phi}: {mean}");
    }
    assert!(ramsey_phase_estimate(0.0, 0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
}

#[test]
fn noiseless_lock_is_exact() {
    let cfg = LockConfig {
        shot_noise: false,
        duration: 60.0,
        ..LockConfig::shot_noise_only()
    };
    assert_eq!(simulate_lock(&cfg).unwrap().rms, 0.0);
}

#[test]
fn shot_noise_floor() {
    let t = simulate_lock(&LockConfig::shot_noise_only()).unwrap();
    assert!((0.08..=0.12).contains(&t.rms), "{}", t.rms);
    assert!((t.rms - rms(&t.dphi)).abs() < 1e-15);
}

#[test]
fn both_loops_beat_pd_only_on_every_seed() {
    for seed in 0..10 {
        let cfg = LockConfig {
            rng_seed: seed,
            ..LockConfig::default()
        };
        let (both, pd) = compare_loops(&cfg).unwrap();
        assert!(both.rms <= pd.rms, "seed {seed}: {} > {}", both.rms, pd.rms);
        assert!((0.10..=0.15).contains(&both.rms), "seed {seed}: {}", both.rms);
    }
}

#[test]
fn fixed_seed_is_reproducible() {
    let cfg = LockConfig {
        duration: 120.0,
        ..LockConfig::default()
    };
    assert_eq!(simulate_lock(&cfg).unwrap().to_csv(), simulate_lock(&cfg).unwrap().to_csv());
    let other = LockConfig { rng_seed: 2, ..cfg.clone() };
    assert_ne!(simulate_lock(&cfg).unwrap().dphi, simulate_lock(&other).unwrap().dphi);
}

#[test]
fn histogram_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g: Vec<f64> = Normal::new(0.05, 0.12).unwrap().sample_iter(&mut rng).take(20_000).collect();
    let h = histogram(&g, 41).unwrap();
    assert!((h.fit_sigma - 0.12).abs() < 0.004, "{}", h.fit_sigma);
    assert!((h.fit_mean - 0.05).abs() < 0.004);
    assert!(h.is_gaussian());
    assert_eq!(h.counts.iter().sum::<u64>(), 20_000);
    // a flat distribution is not Gaussian
    let u: Vec<f64> = Uniform::new(-1.0, 1.0).unwrap().sample_iter(&mut rng).take(20_000).collect();
    assert!(!histogram(&u, 41).unwrap().is_gaussian());
    assert!(histogram(&g[..50], 10).is_err());
    assert!(histogram(&vec![0.3; 500], 10).is_err());
}

#[test]
fn length_conversions() {
    // the SW period is λ/2, so one radian is 1/(2π) of it and 1/(4π) of λ
    assert!((sw_period_fraction(0.12) - 0.12 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    assert!((wavelength_fraction(0.12) - 0.12 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
}

#[test]
fn invalid_configs() {
    for bad in [
        LockConfig { gain: 0.0, ..LockConfig::default() },
        LockConfig { m_feedback_shots: 0, ..LockConfig::default() },
        LockConfig { drift_rate: -1.0, ..LockConfig::default() },
        LockConfig { shot_period: 0.0, ..LockConfig::default() },
    ] {
        assert!(simulate_lock(&bad).is_err());
    }
}
