//! Parameter sweeps over `(d, theta)` and their CSV/JSON rendering.

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::analysis::{analyze, error_summary, ErrorSummary, OutcomeTable, Verdict};
use crate::error::{Result, UsdError};
use crate::experiment::{epsilon_for_cell_error, ideal_detection_matrix, run_experiment, ExperimentConfig};
use crate::linalg::dot;
use crate::states::{build_complements, build_state_family, lift_to_basis, DiscriminationBasis, StateFamily};
use crate::theory::{self, theory_point, theta_for_overlap, theta_max};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "dim,theta_deg,overlap,p_suc_theory,p_inc_theory,mesd_bound,mean_total_error,mean_error_sigma,verdict,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    ThetaSweep,
    DimensionSweep,
    SinglePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Angles in radians, either listed or as an evenly spaced grid whose end
/// defaults to `theta_max(d)` of each dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thetas {
    List(Vec<f64>),
    Grid {
        start: f64,
        stop: Option<f64>,
        points: usize,
    },
}

impl Thetas {
    pub fn resolve(&self, d: usize) -> Vec<f64> {
        match self {
            Thetas::List(v) => v.clone(),
            Thetas::Grid { start, stop, points } => {
                let stop = stop.unwrap_or_else(|| theta_max(d));
                match points {
                    0 => vec![],
                    1 => vec![*start],
                    n => (0..*n)
                        .map(|k| start + (stop - start) * k as f64 / (*n - 1) as f64)
                        .collect(),
                }
            }
        }
    }
}

/// How the depolarization strength is chosen for each dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    Fixed(f64),
    /// Error probability per wrong conclusive outcome; `eps = e (d + 1)`.
    PerCell(f64),
}

impl EpsilonRule {
    pub fn epsilon(self, d: usize) -> Result<f64> {
        match self {
            EpsilonRule::Fixed(e) => Ok(e),
            EpsilonRule::PerCell(e) => epsilon_for_cell_error(d, e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub dims: Vec<usize>,
    pub thetas: Option<Thetas>,
    pub fixed_overlap: Option<f64>,
    pub repetitions: usize,
    pub epsilon: EpsilonRule,
    /// Base configuration; `dim`, `theta`, `crosstalk_epsilon` and `rng_seed`
    /// are overridden per job.
    pub config: ExperimentConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(UsdError::Config("no dimensions requested".into()));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < 2) {
            return Err(UsdError::InvalidDimension(d));
        }
        if self.thetas.is_some() == self.fixed_overlap.is_some() {
            return Err(UsdError::Config(
                "exactly one of an angle list and a fixed overlap is required".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(UsdError::Config("repetitions must be at least 1".into()));
        }
        if self.mode == SweepMode::SinglePoint {
            let n = self.points()?.len();
            if n != 1 {
                return Err(UsdError::Config(format!(
                    "single_point mode resolved to {n} points"
                )));
            }
        }
        Ok(())
    }

    /// `(d, theta)` points in output order.
    pub fn points(&self) -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for &d in &self.dims {
            match (&self.thetas, self.fixed_overlap) {
                (Some(t), None) => out.extend(t.resolve(d).into_iter().map(|th| (d, th))),
                (None, Some(s)) => out.push((d, theta_for_overlap(d, s)?)),
                _ => {
                    return Err(UsdError::Config(
                        "exactly one of an angle list and a fixed overlap is required".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

/// Identifies the seed a row was computed with, or marks an aggregate row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedLabel {
    None,
    Seed(u64),
    Aggregate,
}

impl std::fmt::Display for SeedLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SeedLabel::None => Ok(()),
            SeedLabel::Seed(s) => write!(f, "{s}"),
            SeedLabel::Aggregate => f.write_str("aggregate"),
        }
    }
}

impl Serialize for SeedLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SeedLabel::None => s.serialize_none(),
            SeedLabel::Seed(x) => s.serialize_u64(*x),
            SeedLabel::Aggregate => s.serialize_str("aggregate"),
        }
    }
}

/// One output row. Measurement columns are empty for theory-only rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dim: usize,
    pub theta_deg: f64,
    pub overlap: f64,
    pub p_suc_theory: f64,
    pub p_inc_theory: f64,
    pub mesd_bound: f64,
    pub mean_total_error: Option<f64>,
    pub mean_error_sigma: Option<f64>,
    pub verdict: Option<Verdict>,
    pub seed: SeedLabel,
    pub outcome: Option<Box<(OutcomeTable, ErrorSummary)>>,
}

impl Serialize for SweepRow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("dim", &self.dim)?;
        m.serialize_entry("theta_deg", &self.theta_deg)?;
        m.serialize_entry("overlap", &self.overlap)?;
        m.serialize_entry("p_suc_theory", &self.p_suc_theory)?;
        m.serialize_entry("p_inc_theory", &self.p_inc_theory)?;
        m.serialize_entry("mesd_bound", &self.mesd_bound)?;
        m.serialize_entry("mean_total_error", &self.mean_total_error)?;
        m.serialize_entry("mean_error_sigma", &self.mean_error_sigma)?;
        m.serialize_entry("verdict", &self.verdict)?;
        m.serialize_entry("seed", &self.seed)?;
        if let Some(o) = &self.outcome {
            m.serialize_entry("outcome_table", &o.0)?;
            m.serialize_entry("error_summary", &o.1)?;
        }
        m.end()
    }
}

fn theory_row(d: usize, theta: f64) -> Result<SweepRow> {
    let t = theory_point(d, theta)?;
    Ok(SweepRow {
        dim: d,
        theta_deg: t.theta.to_degrees(),
        overlap: t.overlap,
        p_suc_theory: t.p_suc,
        p_inc_theory: t.p_inc,
        mesd_bound: t.mesd_bound,
        mean_total_error: None,
        mean_error_sigma: None,
        verdict: None,
        seed: SeedLabel::None,
        outcome: None,
    })
}

/// Closed-form rows for every requested point.
pub fn theory_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.points()?
        .into_iter()
        .map(|(d, th)| theory_row(d, th))
        .collect()
}

/// Builds the family and basis for one point.
pub fn construct(d: usize, theta: f64) -> Result<(StateFamily, DiscriminationBasis)> {
    let family = build_state_family(d, theta)?;
    let basis = lift_to_basis(&build_complements(&family)?)?;
    Ok((family, basis))
}

fn run_job(
    spec: &SweepSpec,
    point: &(usize, f64, StateFamily, DiscriminationBasis),
    rep: usize,
) -> Result<(OutcomeTable, ErrorSummary, u64)> {
    let (d, theta, family, basis) = point;
    let seed = spec.config.rng_seed.wrapping_add(rep as u64);
    let config = ExperimentConfig {
        dim: *d,
        theta: family.theta,
        crosstalk_epsilon: spec.epsilon.epsilon(*d)?,
        rng_seed: seed,
        ..spec.config.clone()
    };
    let _ = theta;
    let record = run_experiment(family, basis, &config)?;
    let table = analyze(&record)?;
    let summary = error_summary(&table)?;
    Ok((table, summary, seed))
}

/// Simulates and analyzes every point `repetitions` times with seeds
/// `seed, seed + 1, ...`. Each point yields one row per repetition, followed
/// by an aggregate row when `repetitions > 1`.
///
/// Jobs run in parallel; row order depends only on the spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points = spec
        .points()?
        .into_iter()
        .map(|(d, th)| construct(d, th).map(|(f, b)| (d, th, f, b)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.repetitions).map(move |r| (p, r)))
        .collect();
    let results: Vec<Result<(OutcomeTable, ErrorSummary, u64)>> = jobs
        .par_iter()
        .map(|&(p, r)| run_job(spec, &points[p], r))
        .collect();

    let mut rows = Vec::with_capacity(jobs.len() + points.len());
    let mut it = results.into_iter();
    for (d, theta, family, _) in &points {
        let base = theory_row(*d, family.theta.min(*theta))?;
        let mut means = Vec::with_capacity(spec.repetitions);
        let mut sigmas = Vec::with_capacity(spec.repetitions);
        for _ in 0..spec.repetitions {
            let (table, summary, seed) = it.next().expect("one result per job")?;
            means.push(summary.mean_total_error);
            sigmas.push(summary.mean_error_sigma);
            rows.push(SweepRow {
                mean_total_error: Some(summary.mean_total_error),
                mean_error_sigma: Some(summary.mean_error_sigma),
                verdict: Some(summary.verdict),
                seed: SeedLabel::Seed(seed),
                outcome: Some(Box::new((table, summary))),
                ..base.clone()
            });
        }
        if spec.repetitions > 1 {
            let n = means.len() as f64;
            let mean = means.iter().sum::<f64>() / n;
            let sigma = sigmas.iter().map(|s| s * s).sum::<f64>().sqrt() / n;
            rows.push(SweepRow {
                mean_total_error: Some(mean),
                mean_error_sigma: Some(sigma),
                verdict: Some(Verdict::classify(mean, sigma, base.mesd_bound)),
                seed: SeedLabel::Aggregate,
                ..base
            });
        }
    }
    Ok(rows)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.dim,
            r.theta_deg,
            r.overlap,
            r.p_suc_theory,
            r.p_inc_theory,
            r.mesd_bound,
            opt(r.mean_total_error),
            opt(r.mean_error_sigma),
            r.verdict.map(Verdict::as_str).unwrap_or_default(),
            r.seed,
        ));
    }
    out
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    schema_version: u32,
    columns: Vec<&'static str>,
    rows: &'a [SweepRow],
}

pub fn render_json(rows: &[SweepRow]) -> String {
    let doc = JsonDocument {
        schema_version: CSV_SCHEMA_VERSION,
        columns: CSV_HEADER.split(',').collect(),
        rows,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("rows serialize");
    s.push('\n');
    s
}

pub fn render(rows: &[SweepRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Json => render_json(rows),
    }
}

/// Residuals of the basis invariants at one `(d, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub dim: usize,
    pub theta_deg: f64,
    pub orthonormality: f64,
    pub completeness: f64,
    pub zero_error: f64,
    /// `max_i |P_ii + P_i,inc - 1|`
    pub closure: f64,
    /// `max_i |P_ii - p_suc|`
    pub success_deviation: f64,
    /// `max_i |P_i,inc - p_inc|`
    pub inconclusive_deviation: f64,
}

pub fn invariant_report(d: usize, theta: f64) -> Result<InvariantReport> {
    let (family, basis) = construct(d, theta)?;
    let p = theory::usd_probabilities(d, theta)?;
    let m = ideal_detection_matrix(&family, &basis)?;
    let mut closure: f64 = 0.0;
    let mut suc: f64 = 0.0;
    let mut inc: f64 = 0.0;
    for (i, row) in m.iter().enumerate() {
        closure = closure.max((row[i] + row[d] - 1.0).abs());
        suc = suc.max((row[i] - p.p_suc).abs());
        inc = inc.max((row[d] - p.p_inc).abs());
    }
    // zero-error residual straight from the vectors, independent of `m`
    let zero_error = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| dot(&basis.vectors[j], &family.embedded(i)).powi(2))
        .fold(0.0, f64::max);
    Ok(InvariantReport {
        dim: d,
        theta_deg: family.theta.to_degrees(),
        orthonormality: basis.orthonormality_residual(),
        completeness: basis.completeness_residual(),
        zero_error,
        closure,
        success_deviation: suc,
        inconclusive_deviation: inc,
    })
}

/// `points` angles evenly spaced in `(0, theta_max]` for each dimension.
pub fn invariant_grid(dims: &[usize], points: usize) -> Result<Vec<InvariantReport>> {
    let jobs: Vec<(usize, f64)> = dims
        .iter()
        .flat_map(|&d| {
            let max = theta_max(d);
            (1..=points).map(move |k| (d, max * k as f64 / points as f64))
        })
        .collect();
    jobs.par_iter().map(|&(d, t)| invariant_report(d, t)).collect()
}
