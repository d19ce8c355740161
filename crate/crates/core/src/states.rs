//! Symmetric input states, their orthogonal complements and the lifted
//! `(d+1)`-outcome discrimination basis.
//!
//! Vectors are stored row-wise as real amplitudes in the OAM basis chosen by
//! [`oam_map`]; the ancillary dimension of a [`DiscriminationBasis`] is the
//! last component.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UsdError};
use crate::linalg::{self, dot, norm};
use crate::serde_f64;
use crate::theory;

/// Tolerance on orthogonality and completeness of constructed bases.
pub const ORTHO_TOL: f64 = 1e-10;
/// Angles closer than this to zero describe a single repeated state.
pub const DEGENERATE_THETA: f64 = 1e-9;
/// Slack allowed above `theta_max` before rejecting an angle as out of range.
const THETA_SLACK: f64 = 1e-12;

/// `d` real unit vectors in `d` dimensions with a common pairwise overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFamily {
    pub dim: usize,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    #[serde(serialize_with = "serde_f64::matrix")]
    pub vectors: Vec<Vec<f64>>,
}

/// Unnormalized vectors, row `i` orthogonal to every input state but the `i`-th.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementSet {
    pub dim: usize,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    #[serde(serialize_with = "serde_f64::matrix")]
    pub vectors: Vec<Vec<f64>>,
}

/// Orthonormal basis of the `(d+1)`-dimensional space. Rows `0..d` identify
/// the corresponding input state, row `d` is the inconclusive outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationBasis {
    pub dim: usize,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    #[serde(serialize_with = "serde_f64::matrix")]
    pub vectors: Vec<Vec<f64>>,
}

/// OAM labels backing the `d` state dimensions and the ancilla.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OamMap {
    pub dim: usize,
    pub state_ells: Vec<i32>,
    pub ancilla_ell: i32,
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(UsdError::InvalidDimension(d))
    } else {
        Ok(())
    }
}

/// `d` unit vectors in `d-1` dimensions with pairwise overlap `-1/(d-1)`
/// (the vertices of a regular simplex).
///
/// The first vector is the first axis. Each later vector `k` gets its
/// components `m < k` from the overlap with vector `m`, component `k` from
/// normalization, and zeros after that.
pub fn build_projected_vectors(d: usize) -> Result<Vec<Vec<f64>>> {
    check_dim(d)?;
    let n = d - 1;
    let target = -1.0 / n as f64;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(d);
    for k in 0..d {
        let mut v = vec![0.0; n];
        for m in 0..k.min(n) {
            let prev = &out[m];
            let partial: f64 = (0..m).map(|c| v[c] * prev[c]).sum();
            v[m] = (target - partial) / prev[m];
        }
        if k < n {
            let used: f64 = v[..k].iter().map(|x| x * x).sum();
            v[k] = (1.0 - used).max(0.0).sqrt();
        }
        out.push(v);
    }
    Ok(out)
}

/// Lifts the simplex vectors into `d` dimensions:
/// `|Psi_i> = sin(theta) |Psi'_i> + cos(theta) |d>`.
pub fn build_state_family(d: usize, theta: f64) -> Result<StateFamily> {
    check_dim(d)?;
    let theta = clamp_theta(d, theta)?;
    let (s, c) = theta.sin_cos();
    let vectors = build_projected_vectors(d)?
        .into_iter()
        .map(|p| {
            let mut v: Vec<f64> = p.into_iter().map(|x| s * x).collect();
            v.push(c);
            v
        })
        .collect();
    Ok(StateFamily {
        dim: d,
        theta,
        vectors,
    })
}

fn clamp_theta(d: usize, theta: f64) -> Result<f64> {
    let max = theory::theta_max(d);
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

/// For each state, the residual of `|Psi_i>` after projecting out the span of
/// all other states.
///
/// The residual has positive overlap with its own state by construction.
pub fn build_complements(family: &StateFamily) -> Result<ComplementSet> {
    let d = family.dim;
    check_dim(d)?;
    if family.vectors.len() != d || family.vectors.iter().any(|v| v.len() != d) {
        return Err(UsdError::Shape(format!(
            "state family must hold {d} vectors of length {d}"
        )));
    }
    if family.theta < DEGENERATE_THETA {
        return Err(UsdError::DegenerateFamily(format!(
            "theta = {:e} rad: all states coincide",
            family.theta
        )));
    }
    let mut vectors = Vec::with_capacity(d);
    for i in 0..d {
        let others: Vec<Vec<f64>> = family
            .vectors
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.clone())
            .collect();
        let span = linalg::orthonormalize(&others, ORTHO_TOL).ok_or_else(|| {
            UsdError::DegenerateFamily(format!("states other than #{i} are rank deficient"))
        })?;
        let mut w = family.vectors[i].clone();
        linalg::project_out(&mut w, &span);
        if norm(&w) <= ORTHO_TOL {
            return Err(UsdError::DegenerateFamily(format!(
                "state #{i} lies in the span of the others"
            )));
        }
        vectors.push(w);
    }
    Ok(ComplementSet {
        dim: d,
        theta: family.theta,
        vectors,
    })
}

/// Adds the ancillary component `sqrt(-<Psi_perp_1|Psi_perp_2>)` to every
/// complement, normalizes, and completes the basis with the inconclusive
/// outcome.
pub fn lift_to_basis(complements: &ComplementSet) -> Result<DiscriminationBasis> {
    let d = complements.dim;
    check_dim(d)?;
    if complements.vectors.len() != d || complements.vectors.iter().any(|v| v.len() != d) {
        return Err(UsdError::Shape(format!(
            "complement set must hold {d} vectors of length {d}"
        )));
    }
    let v = &complements.vectors;
    let cross = dot(&v[0], &v[1]);
    let scale = dot(&v[0], &v[0]);
    if cross > ORTHO_TOL * scale {
        return Err(UsdError::NotLiftable { overlap: cross });
    }
    let lift = (-cross).max(0.0).sqrt();

    let mut rows: Vec<Vec<f64>> = v
        .iter()
        .map(|p| {
            let mut row = p.clone();
            row.push(lift);
            let n = norm(&row);
            linalg::scale(&mut row, 1.0 / n);
            row
        })
        .collect();

    // The inconclusive state: the coordinate axis with the largest residual
    // against the conclusive outcomes, orthogonalized and normalized.
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for k in 0..=d {
        let mut e = vec![0.0; d + 1];
        e[k] = 1.0;
        linalg::project_out(&mut e, &rows);
        let n = norm(&e);
        if n > best_norm {
            best_norm = n;
            best = Some(e);
        }
    }
    let mut last = best.ok_or_else(|| UsdError::DegenerateFamily("empty basis".into()))?;
    linalg::scale(&mut last, 1.0 / best_norm);
    if last[d] < 0.0 {
        linalg::scale(&mut last, -1.0);
    }
    rows.push(last);

    Ok(DiscriminationBasis {
        dim: d,
        theta: complements.theta,
        vectors: rows,
    })
}

/// OAM labels closest to zero: the states use the first `d` labels of
/// `0, 1, -1, 2, -2, ...`, the ancilla takes the smallest unused `|l|`,
/// preferring the negative sign.
pub fn oam_map(d: usize) -> OamMap {
    let ladder = |k: usize| -> i32 {
        let m = k.div_ceil(2) as i32;
        if k % 2 == 1 {
            m
        } else {
            -m
        }
    };
    let mut state_ells: Vec<i32> = (0..d).map(ladder).collect();
    state_ells.sort_unstable();
    let ancilla_ell = (1..)
        .flat_map(|m: i32| [-m, m])
        .find(|l| !state_ells.contains(l))
        .expect("unbounded candidate list");
    OamMap {
        dim: d,
        state_ells,
        ancilla_ell,
    }
}

impl OamMap {
    /// All `d+1` labels, ancilla last.
    pub fn all_ells(&self) -> impl Iterator<Item = i32> + '_ {
        self.state_ells
            .iter()
            .copied()
            .chain(std::iter::once(self.ancilla_ell))
    }
}

impl StateFamily {
    /// Overlap shared by every pair of distinct states.
    pub fn pairwise_overlap(&self) -> f64 {
        dot(&self.vectors[0], &self.vectors[1])
    }

    /// State `i` embedded in the `(d+1)`-dimensional measurement space.
    pub fn embedded(&self, i: usize) -> Vec<f64> {
        let mut v = self.vectors[i].clone();
        v.push(0.0);
        v
    }

    /// Checks the unit-norm, equal-overlap and last-component invariants.
    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        let d = self.dim;
        if self.vectors.len() != d || self.vectors.iter().any(|v| v.len() != d) {
            return Err(UsdError::Shape(format!("expected {d} vectors of length {d}")));
        }
        let expected = theory::overlap(d, self.theta)?;
        let c = self.theta.cos();
        for (i, v) in self.vectors.iter().enumerate() {
            if (norm(v) - 1.0).abs() > 1e-12 || (v[d - 1] - c).abs() > 1e-12 {
                return Err(UsdError::Shape(format!("state #{i} violates normalization")));
            }
            for w in &self.vectors[i + 1..] {
                if (dot(v, w) - expected).abs() > 1e-12 {
                    return Err(UsdError::Shape("overlaps are not uniform".into()));
                }
            }
        }
        Ok(())
    }
}

impl DiscriminationBasis {
    pub fn inconclusive(&self) -> &[f64] {
        &self.vectors[self.dim]
    }

    /// `max |<D_i|D_j> - delta_ij|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = linalg::gram(&self.vectors);
        let mut worst: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - t).abs());
            }
        }
        worst
    }

    /// `max |sum_j |D_j><D_j| - I|` elementwise.
    pub fn completeness_residual(&self) -> f64 {
        linalg::completeness_residual(&self.vectors)
    }

    /// `max_{i != j, j < d} |<D_j|Psi_i>|^2`.
    pub fn zero_error_residual(&self, family: &StateFamily) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..family.dim {
            let psi = family.embedded(i);
            for j in (0..self.dim).filter(|&j| j != i) {
                worst = worst.max(dot(&self.vectors[j], &psi).powi(2));
            }
        }
        worst
    }
}
