mod config;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use usd_core::sweep::{
    self, invariant_grid, run_sweep, theory_sweep, EpsilonRule, OutputFormat, SeedLabel,
    SweepMode, SweepRow, SweepSpec, Thetas,
};
use usd_core::{build_complements, build_state_family, lift_to_basis, oam_map, UsdError, Verdict};

use config::FileConfig;

const OUTPUT_DIR_ENV: &str = "USD_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "usd", version, about = "Unambiguous discrimination of symmetric qudit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the states and measurement basis for one point and write them as JSON.
    Build(SpecArgs),
    /// Closed-form probabilities and bound over a sweep.
    Theory(SpecArgs),
    /// Simulate, analyze and classify every point of a sweep.
    Run(SpecArgs),
    /// Check the basis invariants on a grid of dimensions and angles.
    Check(CheckArgs),
}

#[derive(Args, Debug, Default)]
struct SpecArgs {
    /// Single dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Dimensions, e.g. `2-14` or `3,6,9`.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<Dims>,
    /// Angles in degrees, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta_deg: Option<Vec<f64>>,
    /// Evenly spaced angles `start:stop:n` in degrees; `stop` may be `max`.
    #[arg(long)]
    theta_grid: Option<String>,
    /// Fixed pairwise overlap; the angle is solved per dimension.
    #[arg(long)]
    overlap: Option<f64>,
    /// Depolarization weight applied to every outcome distribution.
    #[arg(long, conflicts_with = "error_per_cell")]
    epsilon: Option<f64>,
    /// Error probability per wrong conclusive outcome, calibrated per dimension.
    #[arg(long)]
    error_per_cell: Option<f64>,
    /// Width of the spiral bandwidth envelope.
    #[arg(long)]
    sigma_spiral: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Repetitions per point, with seeds `seed, seed + 1, ...`.
    #[arg(long)]
    reps: Option<usize>,
    /// Output file (directory for `build`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON or TOML file with defaults for any of the above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_parser = parse_dims, default_value = "2-14")]
    dims: Dims,
    /// Angles per dimension, evenly spaced in (0, theta_max].
    #[arg(long, default_value_t = 12)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn core(self) -> OutputFormat {
        match self {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug)]
struct Dims(Vec<usize>);

fn parse_dims(s: &str) -> Result<Dims, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("no dimensions given".into());
    }
    Ok(Dims(out))
}

fn parse_grid(s: &str) -> anyhow::Result<Thetas> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [start, stop, n] = parts[..] else {
        bail!(UsdError::Config(format!("theta grid {s:?} is not start:stop:n")));
    };
    let deg = |t: &str| -> anyhow::Result<f64> {
        t.parse::<f64>()
            .map_err(|e| UsdError::Config(format!("theta grid value {t:?}: {e}")).into())
    };
    let stop = match stop {
        "max" => None,
        v => Some(deg(v)?.to_radians()),
    };
    let points = n
        .parse::<usize>()
        .map_err(|e| UsdError::Config(format!("theta grid count {n:?}: {e}")))?;
    Ok(Thetas::Grid {
        start: deg(start)?.to_radians(),
        stop,
        points,
    })
}

/// Flags merged over the config file.
struct Resolved {
    spec: SweepSpec,
    out: Option<PathBuf>,
    format: Format,
}

fn resolve(args: SpecArgs) -> anyhow::Result<Resolved> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };

    let dims = match (args.dims, args.dim) {
        (Some(d), _) => d.0,
        (None, Some(d)) => vec![d],
        (None, None) => match (file.dims, file.dim) {
            (Some(d), _) => d,
            (None, Some(d)) => vec![d],
            (None, None) => bail!(UsdError::Config("no dimension given; use --dim or --dims".into())),
        },
    };

    // angle flags replace the file's angle choice as a whole
    let from_flags = args.theta_deg.is_some() || args.theta_grid.is_some() || args.overlap.is_some();
    let (theta_deg, theta_grid, overlap) = if from_flags {
        (args.theta_deg, args.theta_grid, args.overlap)
    } else {
        (file.theta_deg, file.theta_grid, file.overlap)
    };
    let (thetas, fixed_overlap) = match (theta_deg, theta_grid, overlap) {
        (Some(t), None, None) => (
            Some(Thetas::List(t.into_iter().map(f64::to_radians).collect())),
            None,
        ),
        (None, Some(g), None) => (Some(parse_grid(&g)?), None),
        (None, None, Some(s)) => (None, Some(s)),
        (None, None, None) => bail!(UsdError::Config(
            "no angle given; use --theta-deg, --theta-grid or --overlap".into()
        )),
        _ => bail!(UsdError::Config(
            "--theta-deg, --theta-grid and --overlap are mutually exclusive".into()
        )),
    };

    let epsilon = match (args.epsilon, args.error_per_cell) {
        (Some(e), _) => EpsilonRule::Fixed(e),
        (None, Some(p)) => EpsilonRule::PerCell(p),
        (None, None) => match (file.epsilon, file.error_per_cell) {
            (Some(_), Some(_)) => bail!(UsdError::Config(
                "epsilon and error_per_cell are mutually exclusive".into()
            )),
            (Some(e), None) => EpsilonRule::Fixed(e),
            (None, Some(p)) => EpsilonRule::PerCell(p),
            (None, None) => EpsilonRule::Fixed(0.0),
        },
    };

    let mut config = file.experiment.unwrap_or_default();
    if let Some(s) = args.sigma_spiral.or(file.sigma_spiral) {
        config.spiral_bandwidth_sigma = s;
    }
    config.rng_seed = args.seed.or(file.seed).unwrap_or(config.rng_seed);

    let mut spec = SweepSpec {
        mode: SweepMode::ThetaSweep,
        dims,
        thetas,
        fixed_overlap,
        repetitions: args.reps.or(file.reps).unwrap_or(1),
        epsilon,
        config,
    };
    spec.mode = if spec.points()?.len() == 1 {
        SweepMode::SinglePoint
    } else if spec.fixed_overlap.is_some() {
        SweepMode::DimensionSweep
    } else {
        SweepMode::ThetaSweep
    };
    spec.validate()?;
    Ok(Resolved {
        spec,
        out: args.out.or(file.out),
        format: args.format.or(file.format).unwrap_or(Format::Csv),
    })
}

fn output_dir() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `--out`, else to `$USD_OUTPUT_DIR/<name>.<ext>`, else stdout.
/// Returns the path written, if any.
fn emit(name: &str, r: &Resolved, contents: &str) -> anyhow::Result<Option<PathBuf>> {
    let path = match (&r.out, output_dir()) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(format!("{name}.{}", r.format.extension()))),
        (None, None) => None,
    };
    match &path {
        Some(p) => write_file(p, contents)?,
        None => std::io::stdout().write_all(contents.as_bytes())?,
    }
    Ok(path)
}

fn cmd_build(args: SpecArgs) -> anyhow::Result<()> {
    let out = args.out.clone();
    let r = resolve(args)?;
    let points = r.spec.points()?;
    let [(d, theta)] = points[..] else {
        bail!(UsdError::Config(format!(
            "build takes a single point, got {}",
            points.len()
        )));
    };
    let family = build_state_family(d, theta)?;
    let basis = lift_to_basis(&build_complements(&family)?)?;
    let oam = oam_map(d);

    let dir = out.or_else(output_dir).unwrap_or_else(|| PathBuf::from("."));
    let files = [
        ("state_family.json", serde_json::to_string_pretty(&family)?),
        ("discrimination_basis.json", serde_json::to_string_pretty(&basis)?),
        ("oam_map.json", serde_json::to_string_pretty(&oam)?),
    ];
    for (name, json) in files {
        write_file(&dir.join(name), &(json + "\n"))?;
    }
    println!("dim                    {d}");
    println!("theta_deg              {}", family.theta.to_degrees());
    println!("orthonormality         {:e}", basis.orthonormality_residual());
    println!("completeness           {:e}", basis.completeness_residual());
    println!("zero_error             {:e}", basis.zero_error_residual(&family));
    println!("written to             {}", dir.display());
    Ok(())
}

fn cmd_theory(args: SpecArgs) -> anyhow::Result<()> {
    let r = resolve(args)?;
    let rows = theory_sweep(&r.spec)?;
    if let Some(p) = emit("theory", &r, &sweep::render(&rows, r.format.core()))? {
        println!("{} rows written to {}", rows.len(), p.display());
    }
    Ok(())
}

/// One line per point; with repetitions, the aggregate row plus how many
/// single runs fell below the bound by one sigma.
fn print_verdicts(rows: &[SweepRow], reps: usize) {
    println!(
        "{:>4} {:>10} {:>12} {:>12} {:>10}  {:<20} runs_below",
        "d", "theta_deg", "mean_error", "sigma", "bound", "verdict"
    );
    let mut below = 0;
    for row in rows {
        if reps > 1 && row.seed != SeedLabel::Aggregate {
            below += usize::from(row.verdict == Some(Verdict::BelowByOneSigma));
            continue;
        }
        let tally = if reps > 1 {
            format!("{below}/{reps}")
        } else {
            String::from("-")
        };
        below = 0;
        println!(
            "{:>4} {:>10.4} {:>12.6} {:>12.6} {:>10.6}  {:<20} {tally}",
            row.dim,
            row.theta_deg,
            row.mean_total_error.unwrap_or(f64::NAN),
            row.mean_error_sigma.unwrap_or(f64::NAN),
            row.mesd_bound,
            row.verdict.map(|v| v.as_str()).unwrap_or(""),
        );
    }
}

fn cmd_run(args: SpecArgs) -> anyhow::Result<()> {
    let r = resolve(args)?;
    let rows = run_sweep(&r.spec)?;
    if let Some(p) = emit("run", &r, &sweep::render(&rows, r.format.core()))? {
        print_verdicts(&rows, r.spec.repetitions);
        println!("{} rows written to {}", rows.len(), p.display());
    }
    Ok(())
}

const COMPLETENESS_TOL: f64 = 1e-10;
const ORTHONORMALITY_TOL: f64 = 1e-10;
const ZERO_ERROR_TOL: f64 = 1e-20;
const PROBABILITY_TOL: f64 = 1e-12;

fn cmd_check(args: CheckArgs) -> anyhow::Result<()> {
    if let Some(&d) = args.dims.0.iter().find(|&&d| d < 2) {
        bail!(UsdError::InvalidDimension(d));
    }
    if args.points == 0 {
        bail!(UsdError::Config("points must be at least 1".into()));
    }
    let reports = invariant_grid(&args.dims.0, args.points)?;
    let failed: Vec<_> = reports
        .iter()
        .filter(|r| {
            !(r.completeness < COMPLETENESS_TOL
                && r.orthonormality < ORTHONORMALITY_TOL
                && r.zero_error < ZERO_ERROR_TOL
                && r.closure < PROBABILITY_TOL
                && r.success_deviation < PROBABILITY_TOL
                && r.inconclusive_deviation < PROBABILITY_TOL)
        })
        .collect();
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&reports)?),
        Format::Csv => {
            println!("dim,theta_deg,orthonormality,completeness,zero_error,closure,success_deviation,inconclusive_deviation");
            for r in &reports {
                println!(
                    "{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                    r.dim,
                    r.theta_deg,
                    r.orthonormality,
                    r.completeness,
                    r.zero_error,
                    r.closure,
                    r.success_deviation,
                    r.inconclusive_deviation
                );
            }
        }
    }
    if !failed.is_empty() {
        return Err(Failure {
            kind: "invariant_violation",
            message: format!("{} of {} points exceed tolerance", failed.len(), reports.len()),
        }
        .into());
    }
    Ok(())
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<UsdError>() {
            return e.kind();
        }
        if let Some(e) = cause.downcast_ref::<Failure>() {
            return e.kind;
        }
        if cause.is::<serde_json::Error>() || cause.is::<toml::de::Error>() {
            return "config";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "internal"
}

fn report(kind: &str, message: &str) {
    let body = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", e.to_string().trim_end());
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Run(a) => cmd_run(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
