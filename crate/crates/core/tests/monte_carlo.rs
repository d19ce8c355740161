//! Statistical checks of the counting simulation against its analytic means.

use usd_core::experiment::heralding_weight;
use usd_core::sweep::construct;
use usd_core::*;

fn config(d: usize, theta: f64) -> ExperimentConfig {
    ExperimentConfig::new(d, theta)
}

#[test]
fn mean_counts_converge_to_noisy_probabilities() {
    let (d, theta) = (3, 30f64.to_radians());
    let (f, b) = construct(d, theta).unwrap();
    let mut cfg = config(d, f.theta);
    cfg.crosstalk_epsilon = 0.1;
    cfg.singles_rate_scale = 0.0; // no accidentals
    cfg.integration_time = 0.5;
    let noisy = apply_noise(&ideal_detection_matrix(&f, &b).unwrap(), cfg.crosstalk_epsilon);
    let rate = cfg.max_coincidence_rate * heralding_weight(&oam_map(d), cfg.spiral_bandwidth_sigma);
    let scale = rate * cfg.integration_time;

    let n = 10_000u64;
    let mut sums = vec![vec![0.0f64; d + 1]; d];
    for seed in 0..n {
        cfg.rng_seed = seed;
        let r = run_experiment(&f, &b, &cfg).unwrap();
        for i in 0..d {
            for j in 0..=d {
                sums[i][j] += r.coincidences[i][j] as f64 / scale;
            }
        }
    }
    for i in 0..d {
        for j in 0..=d {
            let mean = sums[i][j] / n as f64;
            let p = noisy[i][j];
            // Poisson: var(C / scale) = p / scale
            let se = (p / scale / n as f64).sqrt();
            assert!((mean - p).abs() < 4.0 * se, "({i},{j}): {mean} vs {p} (se {se})");
        }
    }
}

#[test]
fn diagonal_counts_match_analytic_mean_d6() {
    let (d, theta) = (6, 40f64.to_radians());
    let (f, b) = construct(d, theta).unwrap();
    let cfg0 = config(d, f.theta);
    let expected = expected_counts(&f, &b, &cfg0).unwrap();
    let w = heralding_weight(&oam_map(d), cfg0.spiral_bandwidth_sigma);
    let p_suc = usd_probabilities(d, f.theta).unwrap().p_suc;
    let signal = 350.0 * 30.0 * p_suc * w;
    let accidental = expected.coincidences[0][1];
    assert!((expected.coincidences[0][0] - (signal + accidental)).abs() < 1e-9);

    let runs = 100;
    let mut total = vec![0.0; d];
    for seed in 0..runs {
        let mut cfg = cfg0.clone();
        cfg.rng_seed = seed;
        let r = run_experiment(&f, &b, &cfg).unwrap();
        for i in 0..d {
            total[i] += r.coincidences[i][i] as f64;
        }
    }
    let lambda = signal + accidental;
    for (i, t) in total.iter().enumerate() {
        let mean = t / runs as f64;
        let sigma_mean = (lambda / runs as f64).sqrt();
        assert!((mean - lambda).abs() < 5.0 * sigma_mean, "state {i}: {mean} vs {lambda}");
    }
}

#[test]
fn contrast_separates_correlated_cells() {
    let (d, theta) = (3, 30f64.to_radians());
    let (f, b) = construct(d, theta).unwrap();
    let mut cfg = config(d, f.theta);
    cfg.rng_seed = 5;
    let q = quantum_contrast(&run_experiment(&f, &b, &cfg).unwrap()).unwrap();
    for i in 0..d {
        assert!(q[i][i] > 10.0, "Q_ii = {}", q[i][i]);
        assert!(q[i][d] > 10.0);
        for j in (0..d).filter(|&j| j != i) {
            // accidentals only: ~70 counts, so Q = 1 within a few 1/sqrt(70)
            assert!((q[i][j] - 1.0).abs() < 0.6, "Q_{i}{j} = {}", q[i][j]);
        }
    }
}

#[test]
fn calibrated_noise_gives_one_percent_per_cell() {
    let (d, theta) = (6, 40f64.to_radians());
    let (f, b) = construct(d, theta).unwrap();
    let mut errors = Vec::new();
    for seed in 0..20 {
        let mut cfg = config(d, f.theta);
        cfg.crosstalk_epsilon = 0.07;
        cfg.rng_seed = seed;
        let table = analyze(&run_experiment(&f, &b, &cfg).unwrap()).unwrap();
        for i in 0..d {
            for j in (0..d).filter(|&j| j != i) {
                errors.push(table.probabilities[i][j]);
            }
        }
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!((mean - 0.01).abs() < 0.001, "mean per-cell error {mean}");
}

#[test]
fn noiseless_pipeline_recovers_theory_d6() {
    let (d, theta) = (6, 40f64.to_radians());
    let (f, b) = construct(d, theta).unwrap();
    let mut cfg = config(d, f.theta);
    cfg.rng_seed = 1;
    let t = analyze(&run_experiment(&f, &b, &cfg).unwrap()).unwrap();
    let p = usd_probabilities(d, f.theta).unwrap();
    for i in 0..d {
        assert!((t.probabilities[i][i] - p.p_suc).abs() < 3.0 * t.sigmas[i][i]);
        assert!((t.probabilities[i][d] - p.p_inc).abs() < 3.0 * t.sigmas[i][d]);
        assert!((t.probabilities[i].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.sigmas[i].iter().all(|s| s.is_finite() && *s >= 0.0));
    }
}
