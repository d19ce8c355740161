//! Closed-form quantities for `d` symmetric states parameterized by `theta`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UsdError};

const THETA_SLACK: f64 = 1e-12;

/// Largest angle with non-negative overlap, `acos(sqrt(1/d))`.
pub fn theta_max(d: usize) -> f64 {
    (1.0 / d as f64).sqrt().acos()
}

fn check(d: usize, theta: f64) -> Result<f64> {
    if d < 2 {
        return Err(UsdError::InvalidDimension(d));
    }
    let max = theta_max(d);
    if !(0.0..=max + THETA_SLACK).contains(&theta) {
        return Err(UsdError::Domain {
            what: "theta (rad)",
            value: theta,
            min: 0.0,
            max,
        });
    }
    Ok(theta.min(max))
}

/// Pairwise overlap `(d cos^2(theta) - 1) / (d - 1)`.
pub fn overlap(d: usize, theta: f64) -> Result<f64> {
    let theta = check(d, theta)?;
    let c2 = theta.cos().powi(2);
    Ok(((d as f64 * c2 - 1.0) / (d as f64 - 1.0)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsdProbabilities {
    pub p_suc: f64,
    pub p_err: f64,
    pub p_inc: f64,
}

/// Ideal unambiguous-discrimination outcome probabilities for any input state.
pub fn usd_probabilities(d: usize, theta: f64) -> Result<UsdProbabilities> {
    let theta = check(d, theta)?;
    let df = d as f64;
    Ok(UsdProbabilities {
        p_suc: (df / (df - 1.0) * theta.sin().powi(2)).min(1.0),
        p_err: 0.0,
        p_inc: overlap(d, theta)?,
    })
}

/// Inverse of [`overlap`]: the angle giving the requested overlap in `d`
/// dimensions.
pub fn theta_for_overlap(d: usize, overlap: f64) -> Result<f64> {
    if d < 2 {
        return Err(UsdError::InvalidDimension(d));
    }
    if !(0.0..=1.0).contains(&overlap) {
        return Err(UsdError::Domain {
            what: "overlap",
            value: overlap,
            min: 0.0,
            max: 1.0,
        });
    }
    let df = d as f64;
    Ok(((1.0 + (df - 1.0) * overlap) / df).sqrt().min(1.0).acos())
}

fn bound_from_overlap(overlap: f64) -> f64 {
    0.5 * (1.0 - (1.0 - overlap * overlap).sqrt())
}

/// Lower bound on the average error of minimum-error discrimination,
/// `(1 - sqrt(1 - |<Psi_i|Psi_j>|^2)) / 2`.
pub fn mesd_bound(d: usize, theta: f64) -> Result<f64> {
    Ok(bound_from_overlap(overlap(d, theta)?))
}

/// The minimum-error bound evaluated from the pairwise trace-distance sum
/// rather than the simplified closed form.
///
/// Only the symmetric case is supported: `priors` must be uniform and every
/// pair of (pure) states must share the overlap `gram_offdiag`.
pub fn mesd_bound_general(priors: &[f64], gram_offdiag: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(UsdError::InvalidDimension(d));
    }
    if priors.len() != d {
        return Err(UsdError::Shape(format!(
            "{} priors given for {d} states",
            priors.len()
        )));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-12 || priors.iter().any(|p| *p < 0.0) {
        return Err(UsdError::Config(format!("priors sum to {total}, expected 1")));
    }
    let uniform = 1.0 / d as f64;
    if priors.iter().any(|p| (p - uniform).abs() > 1e-12) {
        return Err(UsdError::Unsupported(
            "non-uniform priors; only the equiprobable symmetric case is implemented".into(),
        ));
    }
    if !(-1.0..=1.0).contains(&gram_offdiag) {
        return Err(UsdError::Domain {
            what: "overlap",
            value: gram_offdiag,
            min: -1.0,
            max: 1.0,
        });
    }
    // With equal priors eta, Tr|eta rho_i - eta rho_j| = eta * 2 sqrt(1 - |<i|j>|^2)
    // for pure states.
    let trace_distance = 2.0 * (1.0 - gram_offdiag * gram_offdiag).sqrt();
    let mut sum = 0.0;
    for i in 0..d {
        for _ in 0..i {
            sum += priors[i] * trace_distance;
        }
    }
    Ok(0.5 * (1.0 - sum / (d as f64 - 1.0)))
}

/// All closed-form quantities at one `(d, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub dim: usize,
    pub theta: f64,
    pub overlap: f64,
    pub p_suc: f64,
    pub p_err: f64,
    pub p_inc: f64,
    pub mesd_bound: f64,
}

pub fn theory_point(d: usize, theta: f64) -> Result<TheoryPoint> {
    let p = usd_probabilities(d, theta)?;
    Ok(TheoryPoint {
        dim: d,
        theta: theta.min(theta_max(d)),
        overlap: p.p_inc,
        p_suc: p.p_suc,
        p_err: p.p_err,
        p_inc: p.p_inc,
        mesd_bound: bound_from_overlap(p.p_inc),
    })
}
