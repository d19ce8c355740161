//! Virtual heralded-photon experiment.
//!
//! Arm A heralds the preparation of `|Psi_i>`, arm B projects onto `|D_j>`.
//! For every setting `(i, j)` the simulation draws singles in both arms and a
//! coincidence count made of a correlated part, `R * P_noisy(i, j) * T`, and
//! an accidental part, `S_A * S_B * t / T`, where `t` is the coincidence
//! window and `T` the integration time.
//!
//! All random draws come from ChaCha8 streams keyed by `(seed, kind, i, j)`,
//! so a record depends only on its configuration, never on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, UsdError};
use crate::linalg::dot;
use crate::states::{oam_map, DiscriminationBasis, OamMap, StateFamily};
use crate::theory;

/// Largest expected count accepted; beyond 2^53 counts stop being exact in f64.
pub const MAX_EXPECTED_COUNT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dim: usize,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    /// Seconds per measurement setting.
    pub integration_time: f64,
    /// Seconds.
    pub coincidence_window: f64,
    /// Coincidence rate (Hz) of a perfectly correlated setting at unit spiral weight.
    pub max_coincidence_rate: f64,
    /// Width of the Gaussian `|c_l|^2` envelope, in units of `l`.
    pub spiral_bandwidth_sigma: f64,
    /// Weight of the uniform mixture added to every outcome distribution.
    pub crosstalk_epsilon: f64,
    /// Singles rate (Hz) in each arm at unit spiral weight; attenuated by the
    /// same concentration weight as the coincidences.
    pub singles_rate_scale: f64,
    pub rng_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dim: 3,
            theta: 30f64.to_radians(),
            integration_time: 30.0,
            coincidence_window: 25e-9,
            max_coincidence_rate: 350.0,
            spiral_bandwidth_sigma: 2.0,
            crosstalk_epsilon: 0.0,
            singles_rate_scale: 20_000.0,
            rng_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn new(dim: usize, theta: f64) -> Self {
        ExperimentConfig {
            dim,
            theta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(UsdError::InvalidDimension(self.dim));
        }
        theory::overlap(self.dim, self.theta)?;
        let positive = [
            ("integration_time", self.integration_time),
            ("coincidence_window", self.coincidence_window),
            ("spiral_bandwidth_sigma", self.spiral_bandwidth_sigma),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(UsdError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("max_coincidence_rate", self.max_coincidence_rate),
            ("singles_rate_scale", self.singles_rate_scale),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(UsdError::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..0.5).contains(&self.crosstalk_epsilon) {
            return Err(UsdError::Domain {
                what: "crosstalk_epsilon",
                value: self.crosstalk_epsilon,
                min: 0.0,
                max: 0.5,
            });
        }
        Ok(())
    }
}

/// Raw counts of one `(d, theta)` measurement campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub dim: usize,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    #[serde(rename = "integration_time_s")]
    pub integration_time: f64,
    /// `d x (d+1)`, row = prepared state, column = measurement outcome.
    pub coincidences: Vec<Vec<u64>>,
    pub singles_a: Vec<u64>,
    pub singles_b: Vec<u64>,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl CountsRecord {
    pub fn coincidence_window(&self) -> f64 {
        self.config.coincidence_window
    }

    /// Checks shapes and `C_ij <= min(S_Ai, S_Bj)`.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if self.coincidences.len() != d
            || self.coincidences.iter().any(|r| r.len() != d + 1)
            || self.singles_a.len() != d
            || self.singles_b.len() != d + 1
        {
            return Err(UsdError::Shape(format!(
                "counts record must be {d} x {} with matching singles",
                d + 1
            )));
        }
        for (i, row) in self.coincidences.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > self.singles_a[i].min(self.singles_b[j]) {
                    return Err(UsdError::Shape(format!(
                        "coincidences at ({i}, {j}) exceed singles"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Mean counts of the model, without sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    pub coincidences: Vec<Vec<f64>>,
    pub singles_a: Vec<f64>,
    pub singles_b: Vec<f64>,
    pub integration_time: f64,
    pub coincidence_window: f64,
}

/// `P(i, j) = |<D_j|Psi_i>|^2` with the input states embedded in `d+1` dimensions.
pub fn ideal_detection_matrix(
    family: &StateFamily,
    basis: &DiscriminationBasis,
) -> Result<Vec<Vec<f64>>> {
    let d = family.dim;
    if basis.dim != d
        || basis.vectors.len() != d + 1
        || family.vectors.len() != d
        || (family.theta - basis.theta).abs() > 1e-12
    {
        return Err(UsdError::Shape(format!(
            "family (d={}, theta={}) and basis (d={}, theta={}) do not match",
            family.dim, family.theta, basis.dim, basis.theta
        )));
    }
    Ok((0..d)
        .map(|i| {
            let psi = family.embedded(i);
            basis.vectors.iter().map(|dj| dot(dj, &psi).powi(2)).collect()
        })
        .collect())
}

/// Mixes each outcome distribution with the uniform one:
/// `row <- (1 - eps) row + eps / (d + 1)`.
pub fn apply_noise(ideal: &[Vec<f64>], epsilon: f64) -> Vec<Vec<f64>> {
    ideal
        .iter()
        .map(|row| {
            let u = epsilon / row.len() as f64;
            row.iter().map(|p| (1.0 - epsilon) * p + u).collect()
        })
        .collect()
}

/// Depolarization strength that puts `per_cell` probability on every wrong
/// outcome of a `d`-state discrimination.
pub fn epsilon_for_cell_error(d: usize, per_cell: f64) -> Result<f64> {
    let eps = per_cell * (d as f64 + 1.0);
    if !(0.0..0.5).contains(&eps) {
        return Err(UsdError::Domain {
            what: "crosstalk_epsilon",
            value: eps,
            min: 0.0,
            max: 0.5,
        });
    }
    Ok(eps)
}

fn envelope(ell: i32, sigma: f64) -> f64 {
    let l = ell as f64;
    (-l * l / (2.0 * sigma * sigma)).exp()
}

/// Relative production weight `exp(-l^2 / 2 sigma^2)` of each state label,
/// normalized to a maximum of 1.
pub fn spiral_weights(oam: &OamMap, sigma: f64) -> Vec<f64> {
    let raw: Vec<f64> = oam.state_ells.iter().map(|&l| envelope(l, sigma)).collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    raw.into_iter().map(|w| w / max).collect()
}

/// Weight left after equalizing every mode used in a `d`-dimensional
/// measurement (states and ancilla) down to the weakest one.
pub fn heralding_weight(oam: &OamMap, sigma: f64) -> f64 {
    let norm = oam
        .state_ells
        .iter()
        .map(|&l| envelope(l, sigma))
        .fold(0.0, f64::max);
    oam.all_ells()
        .map(|l| envelope(l, sigma))
        .fold(f64::INFINITY, f64::min)
        / norm
}

fn check_pair(family: &StateFamily, config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    if family.dim != config.dim || (family.theta - config.theta).abs() > 1e-12 {
        return Err(UsdError::Shape(format!(
            "configuration (d={}, theta={}) does not match the state family (d={}, theta={})",
            config.dim, config.theta, family.dim, family.theta
        )));
    }
    Ok(())
}

fn concentration_weight(config: &ExperimentConfig) -> f64 {
    heralding_weight(&oam_map(config.dim), config.spiral_bandwidth_sigma)
}

/// Correlated coincidence rate (Hz) per prepared state.
fn heralded_rate(config: &ExperimentConfig) -> f64 {
    config.max_coincidence_rate * concentration_weight(config)
}

/// Mean singles per arm and setting over one integration period.
fn singles_mean(config: &ExperimentConfig) -> f64 {
    config.singles_rate_scale * concentration_weight(config) * config.integration_time
}

fn noisy_matrix(
    family: &StateFamily,
    basis: &DiscriminationBasis,
    config: &ExperimentConfig,
) -> Result<Vec<Vec<f64>>> {
    check_pair(family, config)?;
    let ideal = ideal_detection_matrix(family, basis)?;
    Ok(apply_noise(&ideal, config.crosstalk_epsilon))
}

/// Mean singles and coincidences of the counting model.
pub fn expected_counts(
    family: &StateFamily,
    basis: &DiscriminationBasis,
    config: &ExperimentConfig,
) -> Result<ExpectedCounts> {
    let noisy = noisy_matrix(family, basis, config)?;
    let d = config.dim;
    let t_int = config.integration_time;
    let singles = singles_mean(config);
    let accidental = singles * singles * config.coincidence_window / t_int;
    let rate = heralded_rate(config);
    let coincidences = noisy
        .iter()
        .map(|row| row.iter().map(|p| rate * p * t_int + accidental).collect())
        .collect();
    Ok(ExpectedCounts {
        coincidences,
        singles_a: vec![singles; d],
        singles_b: vec![singles; d + 1],
        integration_time: t_int,
        coincidence_window: config.coincidence_window,
    })
}

#[derive(Clone, Copy)]
enum Stream {
    SinglesA(usize),
    SinglesB(usize),
    Coincidence(usize, usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::SinglesA(i) => (1 << 56) | i as u64,
            Stream::SinglesB(j) => (2 << 56) | j as u64,
            Stream::Coincidence(i, j) => (3 << 56) | ((i as u64) << 24) | j as u64,
        }
    }
}

fn poisson(seed: u64, stream: Stream, mean: f64) -> Result<u64> {
    if !(mean.is_finite() && mean <= MAX_EXPECTED_COUNT) {
        return Err(UsdError::Config(format!(
            "expected count {mean:e} exceeds the exact integer range"
        )));
    }
    if mean <= 0.0 {
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    let dist = Poisson::new(mean).map_err(|e| UsdError::Config(format!("poisson({mean}): {e}")))?;
    Ok(dist.sample(&mut rng) as u64)
}

/// Draws one counts record for the given state family and measurement basis.
pub fn run_experiment(
    family: &StateFamily,
    basis: &DiscriminationBasis,
    config: &ExperimentConfig,
) -> Result<CountsRecord> {
    let noisy = noisy_matrix(family, basis, config)?;
    let d = config.dim;
    let seed = config.rng_seed;
    let t_int = config.integration_time;
    let singles_mean = singles_mean(config);
    let rate = heralded_rate(config);

    let mut singles_a = (0..d)
        .map(|i| poisson(seed, Stream::SinglesA(i), singles_mean))
        .collect::<Result<Vec<_>>>()?;
    let mut singles_b = (0..=d)
        .map(|j| poisson(seed, Stream::SinglesB(j), singles_mean))
        .collect::<Result<Vec<_>>>()?;

    let mut coincidences = vec![vec![0u64; d + 1]; d];
    for (i, row) in noisy.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            let accidental =
                singles_a[i] as f64 * singles_b[j] as f64 * config.coincidence_window / t_int;
            let mean = rate * p * t_int + accidental;
            coincidences[i][j] = poisson(seed, Stream::Coincidence(i, j), mean)?;
        }
    }
    // Every coincidence is also a single in both arms.
    for i in 0..d {
        for j in 0..=d {
            let c = coincidences[i][j];
            singles_a[i] = singles_a[i].max(c);
            singles_b[j] = singles_b[j].max(c);
        }
    }

    Ok(CountsRecord {
        dim: d,
        theta: config.theta,
        integration_time: t_int,
        coincidences,
        singles_a,
        singles_b,
        seed,
        config: config.clone(),
    })
}
