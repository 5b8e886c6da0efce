//! Argument definitions and subcommand drivers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lpembed_core::{
    d_for_eps, measure_distortion, predicted_n, reduce_lp_timed, verify_sandwich, LpPointSet,
    Normalization, RangePolicy, ReducedPointSet, ReductionConfig, SnowflakeMap, Sparsifier,
    VectorFamily,
};

use crate::error::{CliError, CliResult};
use crate::gen::{generate, GenKind};
use crate::io::{read_points, with_output, write_json, write_points};
use crate::report::{
    AuditReport, BenchRow, ConfigEcho, RunReport, SparsifyReport, SupportEntry, Timings,
    Verification, Versioned, SCHEMA_VERSION,
};

/// Containment slack for `sparsify --verify`.
pub const VERIFY_SLACK: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "lpembed",
    version,
    about = "Coordinate-subset dimension reduction in l_p, 0 < p < 2"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a CSV point set and audit every pairwise distance.
    Reduce(ReduceArgs),
    /// Spectrally sparsify the rows of a CSV matrix.
    Sparsify(SparsifyArgs),
    /// Build a helix map and audit it on a log-spaced grid.
    SnowflakeAudit(AuditArgs),
    /// Sweep k on generated data and emit a CSV table.
    Bench(BenchArgs),
    /// Write a seeded synthetic point set as CSV.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Balanced,
    Certified,
}

impl From<NormalizationArg> for Normalization {
    fn from(arg: NormalizationArg) -> Self {
        match arg {
            NormalizationArg::Balanced => Normalization::Balanced,
            NormalizationArg::Certified => Normalization::Certified,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub p: f64,
    /// Total distortion target; split between helix and sparsifier.
    #[arg(long, conflicts_with_all = ["eps_snow", "d_bss"])]
    pub eps: Option<f64>,
    /// Helix accuracy (default 0.1 unless --eps is given).
    #[arg(long)]
    pub eps_snow: Option<f64>,
    /// Sparsifier oversampling `d > 1` (default 9 unless --eps is given).
    #[arg(long)]
    pub d_bss: Option<f64>,
    #[arg(long, value_enum, default_value = "balanced")]
    pub normalization: NormalizationArg,
    /// Lower end of an explicit coordinate-difference range.
    #[arg(long, requires = "umax")]
    pub umin: Option<f64>,
    #[arg(long, requires = "umin")]
    pub umax: Option<f64>,
    /// Reduced point set as JSON; stdout if omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Run report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl ReduceArgs {
    pub fn config(&self) -> CliResult<ReductionConfig> {
        let config = match self.eps {
            Some(eps) => ReductionConfig::total(eps),
            None => ReductionConfig::split(self.eps_snow.unwrap_or(0.1), self.d_bss.unwrap_or(9.0)),
        }
        .map_err(|e| CliError::from_core("config", e))?
        .with_normalization(self.normalization.into());
        let config = match (self.umin, self.umax) {
            (Some(u_min), Some(u_max)) => config.with_range(RangePolicy::Explicit { u_min, u_max }),
            _ => config,
        };
        config
            .validate()
            .map_err(|e| CliError::from_core("config", e))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SparsifyArgs {
    /// CSV with one vector per row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, conflicts_with = "eps", required_unless_present = "eps")]
    pub d: Option<f64>,
    /// Target `eps`; uses `d = ((1 + eps)^(1/2) + 1)^2 / ((1 + eps)^(1/2) - 1)^2`.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub rank_tol: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Recompute the sandwich eigenvalues and fail unless they are contained.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    /// Exponent `rho` in `|u|^rho`, in (0, 1).
    #[arg(long)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long)]
    pub umin: f64,
    #[arg(long)]
    pub umax: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated point counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps_snow: f64,
    #[arg(long, default_value_t = 9.0)]
    pub d_bss: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kind: GenKind,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Reduce(args) => cmd_reduce(&args).map(|_| ()),
        Command::Sparsify(args) => cmd_sparsify(&args).map(|_| ()),
        Command::SnowflakeAudit(args) => cmd_snowflake_audit(&args).map(|_| ()),
        Command::Bench(args) => cmd_bench(&args).map(|_| ()),
        Command::Gen(args) => cmd_gen(&args),
    }
}

/// Reduces `points` and audits the result.
pub fn reduce_and_report(
    points: &LpPointSet,
    config: &ReductionConfig,
    input: Option<&Path>,
) -> CliResult<(ReducedPointSet, RunReport)> {
    let start = Instant::now();
    let (reduced, stages) =
        reduce_lp_timed(points, config).map_err(|e| CliError::from_core("reduce", e))?;
    let audit_start = Instant::now();
    let distortion =
        measure_distortion(points, &reduced).map_err(|e| CliError::from_core("audit", e))?;
    let audit_ms = audit_start.elapsed().as_secs_f64() * 1e3;
    let timings = Timings::from_stages(stages, audit_ms, start.elapsed().as_secs_f64() * 1e3);
    let echo = ConfigEcho::new(input, points.p(), config, reduced.eps_snow, reduced.d_bss);
    let report = RunReport::new(echo, points.dim(), &reduced, distortion, timings);
    Ok((reduced, report))
}

pub fn cmd_reduce(args: &ReduceArgs) -> CliResult<RunReport> {
    let config = args.config()?;
    let rows = read_points(&args.input)?;
    let points = LpPointSet::new(args.p, rows).map_err(|e| CliError::from_core("input", e))?;
    let (reduced, report) = reduce_and_report(&points, &config, Some(&args.input))?;
    write_json(args.output.as_deref(), &Versioned::new(&reduced))?;
    match &args.report {
        Some(path) => write_json(Some(path), &report)?,
        None => eprintln!(
            "k = {}, n = {}, spread = {:.6}, certified spread = {:.6}",
            report.k,
            report.n,
            report.distortion.spread(),
            report.certified_distance_factor.powi(2)
        ),
    }
    Ok(report)
}

pub fn cmd_sparsify(args: &SparsifyArgs) -> CliResult<SparsifyReport> {
    let d = match (args.d, args.eps) {
        (Some(d), _) => d,
        (None, Some(eps)) => d_for_eps(eps).map_err(|e| CliError::from_core("config", e))?,
        (None, None) => {
            return Err(CliError::Validation(
                "one of --d or --eps is required".into(),
            ))
        }
    };
    let sparsifier = Sparsifier::new(d)
        .and_then(|s| s.with_rank_tol(args.rank_tol))
        .map_err(|e| CliError::from_core("config", e))?;
    let rows = read_points(&args.input)?;
    let family = VectorFamily::new(&rows).map_err(|e| CliError::from_core("input", e))?;
    let weights = sparsifier
        .sparsify(&family)
        .map_err(|e| CliError::from_core("sparsify", e))?;
    let verification = if args.verify {
        let bounds =
            verify_sandwich(&family, &weights).map_err(|e| CliError::from_core("verify", e))?;
        let (lower, upper) = weights.sandwich();
        Some(Verification {
            lambda_min: bounds.lambda_min,
            lambda_max: bounds.lambda_max,
            lower,
            upper,
            slack: VERIFY_SLACK,
            contained: bounds.within(lower, upper, VERIFY_SLACK),
        })
    } else {
        None
    };
    let report = SparsifyReport {
        schema_version: SCHEMA_VERSION,
        d: weights.d,
        rank: weights.rank,
        support: weights
            .support
            .iter()
            .map(|&index| SupportEntry {
                index,
                weight: weights.weights[index],
            })
            .collect(),
        kappa: weights.kappa,
        scale: weights.scale,
        verification,
    };
    write_json(args.output.as_deref(), &report)?;
    if let Some(v) = verification {
        if !v.contained {
            return Err(CliError::Check(format!(
                "eigenvalues [{}, {}] not within [{}, {}]",
                v.lambda_min, v.lambda_max, v.lower, v.upper
            )));
        }
    }
    Ok(report)
}

pub fn cmd_snowflake_audit(args: &AuditArgs) -> CliResult<AuditReport> {
    if args.samples < 2 {
        return Err(CliError::Validation(format!(
            "--samples must be at least 2, got {}",
            args.samples
        )));
    }
    let map = SnowflakeMap::build(args.rho, args.eps, args.umin, args.umax)
        .map_err(|e| CliError::from_core("snowflake", e))?;
    let audit = map.audit(args.samples);
    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        summary: map.summary(),
        within_target: audit.within(args.eps),
        audit,
    };
    write_json(args.output.as_deref(), &report)?;
    Ok(report)
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<Vec<BenchRow>> {
    let k_max = match args.k.iter().max() {
        Some(&k) if args.k.iter().all(|&k| k >= 2) => k,
        Some(_) => {
            return Err(CliError::Validation(
                "every --k entry must be at least 2".into(),
            ))
        }
        None => return Err(CliError::Validation("--k needs at least one value".into())),
    };
    let all = generate(args.kind, k_max, args.m, args.scale, args.seed)?;
    let full = LpPointSet::new(args.p, all).map_err(|e| CliError::from_core("input", e))?;
    // Prefixes share the full set's range, so every row uses the same helix.
    let (u_min, u_max) = full
        .difference_range()
        .ok_or_else(|| CliError::Validation("generated points all coincide".into()))?;
    let base = ReductionConfig::split(args.eps_snow, args.d_bss)
        .map_err(|e| CliError::from_core("config", e))?;
    let config = base.with_range(RangePolicy::Explicit { u_min, u_max });
    let ratio = if u_max > u_min { u_max / u_min } else { 2.0 };

    let mut rows = Vec::with_capacity(args.k.len());
    for &k in &args.k {
        let points = LpPointSet::new(args.p, full.points()[..k].to_vec())
            .map_err(|e| CliError::from_core("input", e))?;
        let bound =
            predicted_n(k, args.p, &config, ratio).map_err(|e| CliError::from_core("bound", e))?;
        let start = Instant::now();
        let (reduced, _) =
            reduce_lp_timed(&points, &config).map_err(|e| CliError::from_core("reduce", e))?;
        let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        let distortion =
            measure_distortion(&points, &reduced).map_err(|e| CliError::from_core("audit", e))?;
        rows.push(BenchRow {
            k,
            s: bound.snowflake_dim,
            n_bound: bound.construction_bound,
            n_actual: reduced.n,
            measured_distortion: distortion.spread(),
            certified_distortion: distortion.certified_distance_factor.powi(2),
            runtime_ms,
        });
    }
    with_output(args.output.as_deref(), |w| {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &rows {
            wtr.serialize(row)?;
        }
        wtr.flush()
    })?;
    Ok(rows)
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let points = generate(args.kind, args.k, args.m, args.scale, args.seed)?;
    with_output(args.output.as_deref(), |w| write_points(w, &points))
}
