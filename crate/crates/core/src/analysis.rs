//! From raw counts to probabilities, error rates and the minimum-error verdict.
//!
//! The quantum contrast of a setting is the coincidence rate divided by the
//! rate expected from uncorrelated singles,
//! `Q_ij = (C_ij / T) / ((S_Ai / T) (S_Bj / T) t)`, so uncorrelated settings
//! sit at `Q = 1`. Probabilities follow from `P_ij = (Q_ij - 1) / sum_j (Q_ij - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UsdError};
use crate::experiment::{CountsRecord, ExpectedCounts};
use crate::theory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    pub dim: usize,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    pub probabilities: Vec<Vec<f64>>,
    pub sigmas: Vec<Vec<f64>>,
    pub quantum_contrast: Vec<Vec<f64>>,
    /// Propagated uncertainty of each row's total error, including the
    /// correlations introduced by row normalization.
    pub per_state_error_sigma: Vec<f64>,
    /// Propagated uncertainty of the mean total error.
    pub mean_error_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BelowByOneSigma,
    Overlapping,
    Above,
}

impl Verdict {
    pub fn classify(mean: f64, sigma: f64, bound: f64) -> Verdict {
        if mean + sigma < bound {
            Verdict::BelowByOneSigma
        } else if mean > bound {
            Verdict::Above
        } else {
            Verdict::Overlapping
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::BelowByOneSigma => "below_by_one_sigma",
            Verdict::Overlapping => "overlapping",
            Verdict::Above => "above",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub dim: usize,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    pub per_state_error: Vec<f64>,
    pub mean_total_error: f64,
    pub mean_error_sigma: f64,
    pub mesd_bound: f64,
    pub verdict: Verdict,
}

/// Uncertainties obtained by first-order propagation of `sqrt(N)` count noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub cell_sigmas: Vec<Vec<f64>>,
    pub per_state_error_sigma: Vec<f64>,
    pub mean_error_sigma: f64,
}

/// Count matrices in floating point, shared by sampled and expected counts.
struct Counts<'a> {
    coincidences: Vec<Vec<f64>>,
    singles_a: &'a [f64],
    singles_b: &'a [f64],
    integration_time: f64,
    window: f64,
}

impl Counts<'_> {
    fn dim(&self) -> usize {
        self.singles_a.len()
    }

    /// `T / (S_A S_B t)`, the contrast per coincidence count.
    fn contrast_factor(&self, i: usize, j: usize) -> Result<f64> {
        let (sa, sb) = (self.singles_a[i], self.singles_b[j]);
        if sa <= 0.0 || sb <= 0.0 {
            return Err(UsdError::InsufficientData { row: i, col: j });
        }
        Ok(self.integration_time / (sa * sb * self.window))
    }

    fn contrast(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        if self.coincidences.len() != d
            || self.coincidences.iter().any(|r| r.len() != d + 1)
            || self.singles_b.len() != d + 1
        {
            return Err(UsdError::Shape(format!(
                "expected {d} x {} coincidences with matching singles",
                d + 1
            )));
        }
        (0..d)
            .map(|i| {
                (0..=d)
                    .map(|j| Ok(self.coincidences[i][j] * self.contrast_factor(i, j)?))
                    .collect()
            })
            .collect()
    }
}

fn to_f64(v: &[u64]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn record_check(record: &CountsRecord) -> Result<()> {
    let d = record.dim;
    if record.coincidences.len() != d
        || record.coincidences.iter().any(|r| r.len() != d + 1)
        || record.singles_a.len() != d
        || record.singles_b.len() != d + 1
    {
        return Err(UsdError::Shape(format!(
            "counts record must be {d} x {} with matching singles",
            d + 1
        )));
    }
    Ok(())
}

/// `Q_ij` of a counts record. The coincidence window comes from the record's
/// configuration.
pub fn quantum_contrast(record: &CountsRecord) -> Result<Vec<Vec<f64>>> {
    record_check(record)?;
    let sa = to_f64(&record.singles_a);
    let sb = to_f64(&record.singles_b);
    Counts {
        coincidences: record.coincidences.iter().map(|r| to_f64(r)).collect(),
        singles_a: &sa,
        singles_b: &sb,
        integration_time: record.integration_time,
        window: record.coincidence_window(),
    }
    .contrast()
}

/// `Q_ij` of mean counts; used to check the pipeline without sampling noise.
pub fn expected_contrast(expected: &ExpectedCounts) -> Result<Vec<Vec<f64>>> {
    Counts {
        coincidences: expected.coincidences.clone(),
        singles_a: &expected.singles_a,
        singles_b: &expected.singles_b,
        integration_time: expected.integration_time,
        window: expected.coincidence_window,
    }
    .contrast()
}

/// `P_ij = (Q_ij - 1) / sum_j (Q_ij - 1)`. Negative cells are kept as they are.
pub fn normalize_probabilities(q: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    q.iter()
        .enumerate()
        .map(|(i, row)| {
            let denominator: f64 = row.iter().map(|x| x - 1.0).sum();
            if !(denominator > 0.0) {
                return Err(UsdError::DegenerateRow { row: i, denominator });
            }
            Ok(row.iter().map(|x| (x - 1.0) / denominator).collect())
        })
        .collect()
}

/// Gradient of a linear combination of one row's probabilities with respect
/// to that row's coincidences, its arm-A singles and all arm-B singles.
struct RowGradient {
    coincidences: Vec<f64>,
    singles_a: f64,
    singles_b: Vec<f64>,
}

/// `weights[j]` selects which `P_ij` enter the combination.
fn row_gradient(counts: &Counts, q_row: &[f64], i: usize, weights: &[f64]) -> Result<RowGradient> {
    let denominator: f64 = q_row.iter().map(|x| x - 1.0).sum();
    if !(denominator > 0.0) {
        return Err(UsdError::DegenerateRow { row: i, denominator });
    }
    let combo: f64 = q_row
        .iter()
        .zip(weights)
        .map(|(x, w)| w * (x - 1.0) / denominator)
        .sum();
    // d/dx_k of sum_j w_j x_j / sum_m x_m, with x = Q - 1.
    let du: Vec<f64> = weights.iter().map(|w| (w - combo) / denominator).collect();

    let mut g = RowGradient {
        coincidences: vec![0.0; q_row.len()],
        singles_a: 0.0,
        singles_b: vec![0.0; q_row.len()],
    };
    for (k, (&u, &q)) in du.iter().zip(q_row).enumerate() {
        g.coincidences[k] = u * counts.contrast_factor(i, k)?;
        g.singles_b[k] = -u * q / counts.singles_b[k];
        g.singles_a -= u * q / counts.singles_a[i];
    }
    Ok(g)
}

fn count_variance(n: f64) -> f64 {
    // Poisson zeros still carry one count of uncertainty.
    if n > 0.0 {
        n
    } else {
        1.0
    }
}

/// Variance of a quantity whose gradient with respect to all counts is given
/// row by row. Arm-B singles are shared between rows and accumulate.
fn variance(counts: &Counts, grads: &[(usize, RowGradient)]) -> f64 {
    let mut var = 0.0;
    let mut gb = vec![0.0; counts.singles_b.len()];
    let mut ga = vec![0.0; counts.singles_a.len()];
    for (i, g) in grads {
        for (k, gc) in g.coincidences.iter().enumerate() {
            var += gc * gc * count_variance(counts.coincidences[*i][k]);
        }
        ga[*i] += g.singles_a;
        for (acc, x) in gb.iter_mut().zip(&g.singles_b) {
            *acc += x;
        }
    }
    var += ga
        .iter()
        .zip(counts.singles_a)
        .map(|(g, s)| g * g * count_variance(*s))
        .sum::<f64>();
    var += gb
        .iter()
        .zip(counts.singles_b)
        .map(|(g, s)| g * g * count_variance(*s))
        .sum::<f64>();
    var
}

fn error_weights(d: usize, i: usize) -> Vec<f64> {
    (0..=d)
        .map(|j| if j < d && j != i { 1.0 } else { 0.0 })
        .collect()
}

fn propagate(counts: &Counts) -> Result<Propagation> {
    let q = counts.contrast()?;
    let d = counts.dim();

    let mut cell_sigmas = vec![vec![0.0; d + 1]; d];
    for i in 0..d {
        for j in 0..=d {
            let mut w = vec![0.0; d + 1];
            w[j] = 1.0;
            let g = row_gradient(counts, &q[i], i, &w)?;
            cell_sigmas[i][j] = variance(counts, &[(i, g)]).sqrt();
        }
    }

    let mut per_state_error_sigma = Vec::with_capacity(d);
    let mut mean_grads = Vec::with_capacity(d);
    for i in 0..d {
        let w = error_weights(d, i);
        let g = row_gradient(counts, &q[i], i, &w)?;
        per_state_error_sigma.push(variance(counts, &[(i, g)]).sqrt());
        let w_mean: Vec<f64> = w.iter().map(|x| x / d as f64).collect();
        mean_grads.push((i, row_gradient(counts, &q[i], i, &w_mean)?));
    }
    let mean_error_sigma = variance(counts, &mean_grads).sqrt();

    Ok(Propagation {
        cell_sigmas,
        per_state_error_sigma,
        mean_error_sigma,
    })
}

/// First-order propagation of `sigma_N = sqrt(N)` (1 for `N = 0`) through the
/// contrast and normalization formulas, evaluated at the measured counts.
pub fn gaussian_propagation(record: &CountsRecord) -> Result<Propagation> {
    record_check(record)?;
    let sa = to_f64(&record.singles_a);
    let sb = to_f64(&record.singles_b);
    propagate(&Counts {
        coincidences: record.coincidences.iter().map(|r| to_f64(r)).collect(),
        singles_a: &sa,
        singles_b: &sb,
        integration_time: record.integration_time,
        window: record.coincidence_window(),
    })
}

/// Contrast, probabilities and propagated uncertainties of one record.
pub fn analyze(record: &CountsRecord) -> Result<OutcomeTable> {
    let q = quantum_contrast(record)?;
    let probabilities = normalize_probabilities(&q)?;
    let prop = gaussian_propagation(record)?;
    Ok(OutcomeTable {
        dim: record.dim,
        theta: record.theta,
        probabilities,
        sigmas: prop.cell_sigmas,
        quantum_contrast: q,
        per_state_error_sigma: prop.per_state_error_sigma,
        mean_error_sigma: prop.mean_error_sigma,
    })
}

/// Total misidentification probability per input state, its mean, and the
/// comparison against the minimum-error bound.
pub fn error_summary(table: &OutcomeTable) -> Result<ErrorSummary> {
    let d = table.dim;
    let per_state_error: Vec<f64> = table
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .take(d)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p)
                .sum()
        })
        .collect();
    let mean_total_error = per_state_error.iter().sum::<f64>() / d as f64;
    let mesd_bound = theory::mesd_bound(d, table.theta)?;
    Ok(ErrorSummary {
        dim: d,
        theta: table.theta,
        per_state_error,
        mean_total_error,
        mean_error_sigma: table.mean_error_sigma,
        mesd_bound,
        verdict: Verdict::classify(mean_total_error, table.mean_error_sigma, mesd_bound),
    })
}
