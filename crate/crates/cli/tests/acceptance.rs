//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed.

use std::process::{Command, ExitCode};
use std::time::Instant;

use usd_core::sweep::{run_sweep, EpsilonRule, SeedLabel, SweepMode, SweepSpec};
use usd_core::{
    analyze, build_complements, build_state_family, expected_counts, lift_to_basis, mesd_bound,
    run_experiment, theta_for_overlap, theta_max, DiscriminationBasis, ExperimentConfig,
    StateFamily, Verdict,
};

const DIMS: std::ops::RangeInclusive<usize> = 2..=14;
const GRID_POINTS: usize = 12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn build(d: usize, theta: f64) -> (StateFamily, DiscriminationBasis) {
    let family = build_state_family(d, theta).expect("family");
    let basis = lift_to_basis(&build_complements(&family).expect("complements")).expect("basis");
    (family, basis)
}

/// Input state `i` padded with a zero ancilla component.
fn padded(f: &StateFamily, i: usize) -> Vec<f64> {
    let mut v = f.vectors[i].clone();
    v.push(0.0);
    v
}

fn grid() -> Vec<(usize, f64)> {
    DIMS.flat_map(|d| {
        (1..=GRID_POINTS).map(move |k| (d, theta_max(d) * k as f64 / GRID_POINTS as f64))
    })
    .collect()
}

fn construction_oracle() -> Outcome {
    let start = Instant::now();
    let (mut completeness, mut zero_error) = (0.0f64, 0.0f64);
    for (d, theta) in grid() {
        let (f, b) = build(d, theta);
        let n = d + 1;
        for r in 0..n {
            for c in 0..n {
                let s: f64 = b.vectors.iter().map(|v| v[r] * v[c]).sum();
                let id = if r == c { 1.0 } else { 0.0 };
                completeness = completeness.max((s - id).abs());
            }
        }
        for i in 0..d {
            let psi = padded(&f, i);
            for j in (0..d).filter(|&j| j != i) {
                zero_error = zero_error.max(dot(&b.vectors[j], &psi).powi(2));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        completeness < 1e-10 && zero_error < 1e-20 && secs < 5.0,
        format!("completeness {completeness:.2e}, zero-error {zero_error:.2e}, {secs:.2} s"),
    )
}

fn closed_form_d3() -> Outcome {
    let mut worst = 0.0f64;
    for deg in [15.0f64, 33.0, 45.0] {
        let t = deg.to_radians();
        let (tan, sec, c2) = (t.tan(), 1.0 / t.cos(), t.cos().powi(2));
        let lift = ((3.0 * c2 - 1.0) / 6.0).sqrt() * sec;
        let r6 = 6f64.sqrt();
        let r2 = 2f64.sqrt();
        let expected = [
            // unit-norm first component is 2/sqrt(6)
            [2.0 / r6, 0.0, tan / r6, lift],
            [-1.0 / r6, 1.0 / r2, tan / r6, lift],
            [-1.0 / r6, -1.0 / r2, tan / r6, lift],
            [0.0, 0.0, -((3.0 * c2 - 1.0) / 2.0).sqrt() * sec, tan / r2],
        ];
        let (_, b) = build(3, t);
        for (got, want) in b.vectors.iter().zip(expected) {
            let sign = if dot(got, &want) < 0.0 { -1.0 } else { 1.0 };
            for (g, w) in got.iter().zip(want) {
                worst = worst.max((sign * g - w).abs());
            }
        }
    }
    outcome(worst < 1e-12, format!("max component deviation {worst:.2e}"))
}

fn probability_formulas() -> Outcome {
    let (mut suc, mut inc) = (0.0f64, 0.0f64);
    for (d, theta) in grid() {
        let (f, b) = build(d, theta);
        let df = d as f64;
        let p_suc = df * theta.sin().powi(2) / (df - 1.0);
        let p_inc = (df * theta.cos().powi(2) - 1.0) / (df - 1.0);
        for i in 0..d {
            let psi = padded(&f, i);
            suc = suc.max((dot(&b.vectors[i], &psi).powi(2) - p_suc).abs());
            inc = inc.max((dot(&b.vectors[d], &psi).powi(2) - p_inc).abs());
        }
    }
    outcome(
        suc < 1e-12 && inc < 1e-12,
        format!("success deviation {suc:.2e}, inconclusive deviation {inc:.2e}"),
    )
}

fn mesd_bound_value() -> Outcome {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let exact = 0.5 * (1.0 - 0.5f64.sqrt());
    let mut worst = 0.0f64;
    for d in DIMS {
        let b = mesd_bound(d, theta_for_overlap(d, s).unwrap()).unwrap();
        worst = worst.max((b - exact).abs());
    }
    let quoted = (exact - 0.1464466).abs();
    let deg2 = theta_for_overlap(2, s).unwrap().to_degrees();
    let angle = (deg2 - 22.5).abs();
    outcome(
        worst < 1e-12 && quoted < 5e-8 && angle < 1e-10,
        format!("bound deviation {worst:.2e}, d=2 angle {deg2} deg (deviation {angle:.2e})"),
    )
}

fn noiseless_pipeline() -> Outcome {
    let start = Instant::now();
    let (d, theta) = (6, 40f64.to_radians());
    let (f, b) = build(d, theta);
    let mut cfg = ExperimentConfig::new(d, theta);
    cfg.integration_time = 30.0;
    cfg.max_coincidence_rate = 350.0;
    cfg.crosstalk_epsilon = 0.0;
    let (p_suc, p_inc) = (0.49582, 0.50418);
    let df = d as f64;
    let exact_suc = df * theta.sin().powi(2) / (df - 1.0);
    let exact_inc = (df * theta.cos().powi(2) - 1.0) / (df - 1.0);
    let rounding_ok = (exact_suc - p_suc).abs() < 1e-5 && (exact_inc - p_inc).abs() < 1e-5;

    let mut good = 0;
    for seed in 0..100 {
        cfg.rng_seed = seed;
        let t = analyze(&run_experiment(&f, &b, &cfg).unwrap()).unwrap();
        let ok = (0..d).all(|i| {
            (t.probabilities[i][i] - exact_suc).abs() <= 3.0 * t.sigmas[i][i]
                && (t.probabilities[i][d] - exact_inc).abs() <= 3.0 * t.sigmas[i][d]
        });
        good += usize::from(ok);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rounding_ok && good >= 95 && secs < 60.0,
        format!("{good}/100 seeds within 3 sigma of ({exact_suc:.6}, {exact_inc:.6}), {secs:.2} s"),
    )
}

fn dimension_sweep() -> Outcome {
    let reps = 25;
    let spec = SweepSpec {
        mode: SweepMode::DimensionSweep,
        dims: DIMS.collect(),
        thetas: None,
        fixed_overlap: Some(std::f64::consts::FRAC_1_SQRT_2),
        repetitions: reps,
        epsilon: EpsilonRule::PerCell(0.01),
        config: ExperimentConfig::default(),
    };
    let rows = run_sweep(&spec).unwrap();
    let mut pass = true;
    let mut tally = Vec::new();
    for d in DIMS {
        let below = rows
            .iter()
            .filter(|r| r.dim == d && matches!(r.seed, SeedLabel::Seed(_)))
            .filter(|r| r.verdict == Some(Verdict::BelowByOneSigma))
            .count();
        let majority_below = 2 * below > reps;
        pass &= if d <= 12 { majority_below } else { !majority_below };
        tally.push(format!("{d}:{below}"));
    }
    outcome(pass, format!("runs below by one sigma per d (of {reps}): {}", tally.join(" ")))
}

/// Mean propagated sigma against the ensemble spread of each cell whose
/// expected count is at least 100.
fn propagation_at(d: usize, deg: f64, seeds: u64) -> (f64, usize) {
    let theta = deg.to_radians();
    let (f, b) = build(d, theta);
    let mut cfg = ExperimentConfig::new(d, theta);
    let lambda = expected_counts(&f, &b, &cfg).unwrap().coincidences;
    let n = d + 1;
    let mut sum = vec![vec![0.0; n]; d];
    let mut sum_sq = vec![vec![0.0; n]; d];
    let mut sigma = vec![vec![0.0; n]; d];
    for seed in 0..seeds {
        cfg.rng_seed = seed;
        let t = analyze(&run_experiment(&f, &b, &cfg).unwrap()).unwrap();
        for i in 0..d {
            for j in 0..n {
                let p = t.probabilities[i][j];
                sum[i][j] += p;
                sum_sq[i][j] += p * p;
                sigma[i][j] += t.sigmas[i][j];
            }
        }
    }
    let m = seeds as f64;
    let (mut worst, mut cells) = (0.0f64, 0);
    for i in 0..d {
        for j in 0..n {
            if lambda[i][j] < 100.0 {
                continue;
            }
            let mean = sum[i][j] / m;
            let ensemble = ((sum_sq[i][j] - m * mean * mean) / (m - 1.0)).sqrt();
            let propagated = sigma[i][j] / m;
            worst = worst.max((propagated / ensemble - 1.0).abs());
            cells += 1;
        }
    }
    (worst, cells)
}

fn error_propagation() -> Outcome {
    let (w3, c3) = propagation_at(3, 30.0, 1000);
    let (w6, c6) = propagation_at(6, 40.0, 1000);
    outcome(
        w3 < 0.2 && w6 < 0.2 && c3 > 0 && c6 > 0,
        format!("max relative deviation {w3:.3} over {c3} cells at (3, 30), {w6:.3} over {c6} cells at (6, 40)"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, format) in [(0, "csv"), (1, "csv"), (2, "json"), (3, "json")] {
        let path = dir.path().join(format!("run{k}.{format}"));
        let status = Command::new(env!("CARGO_BIN_EXE_usd"))
            .args(["run", "--dims", "2-8", "--overlap", "0.7071067811865476"])
            .args(["--error-per-cell", "0.01", "--reps", "3", "--seed", "42"])
            .args(["--format", format, "--out"])
            .arg(&path)
            .env_remove("USD_OUTPUT_DIR")
            .output()
            .unwrap()
            .status;
        if !status.success() {
            return outcome(false, format!("usd run exited with {status}"));
        }
        outputs.push(std::fs::read(&path).unwrap());
    }
    let same = outputs[0] == outputs[1] && outputs[2] == outputs[3];
    outcome(
        same && !outputs[0].is_empty(),
        format!("csv {} bytes, json {} bytes, identical: {same}", outputs[0].len(), outputs[2].len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("construction oracle", construction_oracle),
        ("closed-form d=3 basis", closed_form_d3),
        ("probability formulas", probability_formulas),
        ("minimum-error bound value", mesd_bound_value),
        ("noiseless pipeline fidelity", noiseless_pipeline),
        ("dimension sweep classification", dimension_sweep),
        ("error propagation validity", error_propagation),
        ("run determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {}: {} {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
