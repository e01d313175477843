//! Subcommands. Each builds its output document from library calls only, so
//! printed values are exactly what the library returns.

use dbacf::estimators::{acf_from_estimate, dbacf, estimate, gamma0_hat, gammah_hat, AcvfEstimate, WeightRule};
use dbacf::jusd::{segment_series, PipelineOptions, PipelineResult};
use dbacf::mafit::ma_from_acvf;
use dbacf::projection::project_acvf;
use dbacf::sim::{gen_ma, gen_ma1, run_benchmark, BenchRow, BenchmarkConfig, ErrorSpec, EstimatorCode, DEFAULT_SEED};
use dbacf::{Acvf, Series};
use serde::Serialize;

use crate::args::{BenchArgs, Command, EstimateArgs, Format, MafitArgs, ProjectArgs, SegmentArgs, SimulateArgs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Code};
use crate::io;

pub fn run(cmd: Command) -> CliResult<()> {
    let (out, bytes) = match cmd {
        Command::Estimate(a) => (a.io.output.clone(), cmd_estimate(&a)?),
        Command::Project(a) => (a.io.output.clone(), cmd_project(&a)?),
        Command::Mafit(a) => (a.io.output.clone(), cmd_mafit(&a)?),
        Command::Segment(a) => (a.io.output.clone(), cmd_segment(&a)?),
        Command::Bench(a) => (a.io.output.clone(), cmd_bench(&a)?),
        Command::Simulate(a) => (a.io.output.clone(), cmd_simulate(&a)?),
    };
    io::emit(out.as_deref(), &bytes)
}

/// Estimate under the requested weights: optimal by default, `--d` for
/// every lag, or `--d` for lag `--h` only with optimal weights elsewhere.
pub fn estimate_series(y: &Series, m: usize, d: Option<f64>, h: Option<usize>) -> CliResult<AcvfEstimate> {
    Ok(match (d, h) {
        (None, _) => dbacf(y, m)?,
        (Some(d), None) => estimate(y, m, WeightRule::Fixed(d))?,
        (Some(d), Some(h)) => {
            let mut e = dbacf(y, m)?;
            if h > m {
                return Err(CliError::new(Code::Domain, format!("--h {h} exceeds --m {m}")));
            }
            let mut g = e.acvf.gamma().to_vec();
            g[h] = if h == 0 { gamma0_hat(y, m, d)? } else { gammah_hat(y, m, h, d)? };
            e.acvf = Acvf::unchecked(g)?;
            e.weights_used[h] = d;
            e
        }
    })
}

#[derive(Serialize)]
struct EstimateDoc<'a> {
    #[serde(flatten)]
    estimate: &'a AcvfEstimate,
    /// `None` when the variance estimate is not positive.
    acf: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct EstimateRow {
    lag: usize,
    gamma: f64,
    weight: f64,
    acf: Option<f64>,
}

fn cmd_estimate(a: &EstimateArgs) -> CliResult<Vec<u8>> {
    let y = io::read_series(&a.io.input)?;
    let est = estimate_series(&y, a.m, a.d, a.h)?;
    let acf = acf_from_estimate(&est).ok();
    match a.format {
        Format::Json => io::json_document(&EstimateDoc { estimate: &est, acf }),
        Format::Csv => {
            let rows: Vec<EstimateRow> = (0..=a.m)
                .map(|h| EstimateRow {
                    lag: h,
                    gamma: est.acvf.gamma()[h],
                    weight: est.weights_used[h],
                    acf: acf.as_ref().map(|r| r[h]),
                })
                .collect();
            io::csv_document(&rows)
        }
    }
}

fn cmd_project(a: &ProjectArgs) -> CliResult<Vec<u8>> {
    let acvf = io::read_acvf(&a.io.input)?;
    let dim = a.project_dim.max(acvf.m() + 1);
    let (matrix, report) = project_acvf(&acvf, dim, a.tol, a.max_iter)?;
    #[derive(Serialize)]
    struct Doc {
        matrix: dbacf::projection::BandedToeplitz,
        report: dbacf::projection::ProjectionReport,
    }
    io::json_document(&Doc { matrix, report })
}

fn cmd_mafit(a: &MafitArgs) -> CliResult<Vec<u8>> {
    let acvf = io::read_acvf(&a.io.input)?;
    io::json_document(&ma_from_acvf(&acvf, a.max_iter, a.tol)?)
}

pub fn segment_options(a: &SegmentArgs) -> PipelineOptions {
    PipelineOptions {
        m: a.m,
        alpha: a.alpha,
        reps: a.reps,
        seed: a.seed,
        mode: a.intervals.into(),
        project_dim: a.project_dim,
        tol: a.tol,
        max_iter: a.max_iter,
        ..PipelineOptions::default()
    }
}

fn cmd_segment(a: &SegmentArgs) -> CliResult<Vec<u8>> {
    // cheap argument checks before any estimation
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::args(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if a.reps < 100 {
        return Err(CliError::args(format!("--reps must be at least 100, got {}", a.reps)));
    }
    let y = io::read_series(&a.io.input)?;
    let PipelineResult { fit, acvf, model } = segment_series(&y, &segment_options(a))?;
    #[derive(Serialize)]
    struct Doc {
        #[serde(flatten)]
        fit: dbacf::jusd::StepFit,
        noise: Noise,
    }
    #[derive(Serialize)]
    struct Noise {
        #[serde(flatten)]
        acvf: dbacf::jusd::PreparedAcvf,
        model: dbacf::mafit::MaModel,
    }
    io::json_document(&Doc { fit, noise: Noise { acvf, model } })
}

/// Benchmark configs of a run config, one per error process.
pub fn bench_configs(cfg: &RunConfig, a: &BenchArgs) -> CliResult<Vec<BenchmarkConfig>> {
    let signal = cfg.signal_spec()?;
    let reps = a.reps.or(cfg.reps).ok_or_else(|| CliError::args("reps missing (config or --reps)"))?;
    let m = a.m.or(cfg.m).ok_or_else(|| CliError::args("m missing (config or --m)"))?;
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let estimators = cfg.estimators.clone().unwrap_or_else(|| vec![EstimatorCode::O, EstimatorCode::H, EstimatorCode::R]);
    Ok(cfg
        .error_specs()?
        .into_iter()
        .map(|error| BenchmarkConfig { n: cfg.n, reps, m, seed, signal: signal.clone(), error, estimators: estimators.clone() })
        .collect())
}

#[derive(Serialize)]
struct BenchCsvRow {
    gamma1: Option<f64>,
    estimator: &'static str,
    lag: usize,
    mse: f64,
    se: f64,
    reps: usize,
    n: usize,
    seed: u64,
    failures: usize,
}

fn cmd_bench(a: &BenchArgs) -> CliResult<Vec<u8>> {
    let cfg = RunConfig::parse(&io::read_text(&a.io.input)?)?;
    let mut rows: Vec<BenchRow> = Vec::new();
    for c in bench_configs(&cfg, a)? {
        rows.extend(run_benchmark(&c)?);
    }
    match a.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                rows: Vec<BenchRow>,
            }
            io::json_document(&Doc { rows })
        }
        Format::Csv => io::csv_document(
            &rows
                .iter()
                .map(|r| BenchCsvRow {
                    gamma1: r.gamma1,
                    estimator: r.estimator.as_str(),
                    lag: r.lag,
                    mse: r.mse,
                    se: r.se,
                    reps: r.reps,
                    n: r.n,
                    seed: r.seed,
                    failures: r.failures,
                })
                .collect::<Vec<_>>(),
        ),
    }
}

/// Signal plus one draw of the configured noise. MA(1) noise with several
/// `gamma1` values is rejected since only one series is produced.
pub fn simulate(cfg: &RunConfig, seed: u64) -> CliResult<Series> {
    let f = cfg.signal_spec()?.sample(cfg.n)?;
    let mut errors = cfg.error_specs()?;
    if errors.len() != 1 {
        return Err(CliError::args("simulate needs a single gamma1 value"));
    }
    let e = match errors.remove(0) {
        ErrorSpec::Ma1(spec) => gen_ma1(&spec, cfg.n, seed)?,
        ErrorSpec::Ma { model, dist } => gen_ma(&model, cfg.n, seed, dist)?,
    };
    Ok(f.add(&e)?)
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<Vec<u8>> {
    let cfg = RunConfig::parse(&io::read_text(&a.io.input)?)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let y = simulate(&cfg, seed)?;
    match a.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                n: usize,
                seed: u64,
                y: &'a Series,
            }
            io::json_document(&Doc { n: y.len(), seed, y: &y })
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                y: f64,
            }
            io::csv_document(&y.values().iter().map(|&v| Row { y: v }).collect::<Vec<_>>())
        }
    }
}
