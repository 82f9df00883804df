//! Command-line front end: transfer evaluations, DE runs, thresholds,
//! sweeps, potential curves and table reproductions.
//!
//! Exit codes: 0 on success, 1 on configuration/validation errors, 2 when a
//! computation fails (including any failed row of a sweep or reproduction).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::de_engine::{
    run_de, threshold_sweep, RunParams, SweepOutcome, SweepTask, ThresholdKind,
};
use crate::ensembles::{EnsembleDe, EnsembleSpec};
use crate::metric_chain::TransferEvaluator;
use crate::potential::{
    bp_threshold_scalar, potential_curve, potential_threshold, scalar_system,
};
use crate::presets::{named_preset, table, PaperTable, DEFAULT_CHAIN_LENGTH, PRESET_NAMES};
use crate::report;
use crate::trellis::{build_trellis, parse_generator, Notation};
use crate::{Error, Result};

/// Environment variable supplying the default worker count.
pub const WORKERS_ENV: &str = "SCTC_WORKERS";

#[derive(Parser)]
#[command(
    name = "sctc",
    version,
    about = "Exact density evolution and thresholds for turbo-like code ensembles on the BEC"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel sweeps (default: SCTC_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the result to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    /// BP threshold by bisection (reported as SC for coupled ensembles).
    Bp,
    /// MAP threshold via the area theorem (uncoupled ensembles).
    Map,
}

/// Ensemble selection shared by the analysis commands. Flags win over
/// config-file values.
#[derive(Args)]
struct EnsembleOpts {
    /// JSON ensemble config (fields: family, upper, lower, outer, inner, m,
    /// L, rho0, rho1, rho2, timeVarying).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset: pcc4, pcc8, scc4, scc8, bcc1, bcc2.
    #[arg(long)]
    preset: Option<String>,
    /// Coupling memory override.
    #[arg(long)]
    m: Option<usize>,
    /// Chain length override.
    #[arg(long = "L")]
    chain_length: Option<usize>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    /// Model BCC components as time-varying trellises (averaged transfer).
    #[arg(long)]
    time_varying: bool,
}

impl EnsembleOpts {
    fn resolve(&self) -> Result<EnsembleSpec> {
        let mut spec = match (&self.config, &self.preset) {
            (Some(path), _) => EnsembleSpec::from_json(&std::fs::read_to_string(path)?)?,
            (None, Some(name)) => named_preset(name).ok_or_else(|| {
                Error::Validation(format!(
                    "unknown preset {name:?}; available: {}",
                    PRESET_NAMES.join(", ")
                ))
            })?,
            (None, None) => {
                return Err(Error::Validation(
                    "select an ensemble with --config or --preset".into(),
                ))
            }
        };
        if let Some(m) = self.m {
            spec.m = m;
        }
        if let Some(l) = self.chain_length {
            spec.chain_length = l;
        }
        if let Some(r) = self.rho0 {
            spec.rho0 = r;
        }
        if let Some(r) = self.rho1 {
            spec.rho1 = r;
        }
        if let Some(r) = self.rho2 {
            spec.rho2 = r;
        }
        if self.time_varying {
            spec.time_varying = true;
        }
        EnsembleDe::new(&spec)?; // validate eagerly for a clean exit code
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the exact BCJR erasure transfer functions of one encoder.
    Transfer {
        /// Generator matrix, octal by default ("1,5/7"; rows split by ';').
        #[arg(long)]
        gen: String,
        /// Treat the generator string as binary coefficients, lowest degree first.
        #[arg(long)]
        binary: bool,
        /// Explicit erasure vector(s), e.g. --p 0.5,0.5 (repeatable).
        #[arg(long)]
        p: Vec<String>,
        /// Uniform grid: evaluate at N equispaced symmetric points p = i/(N-1).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run density evolution at one channel erasure probability.
    DeRun {
        #[command(flatten)]
        ensemble: EnsembleOpts,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
    },
    /// Compute a BP/SC or MAP threshold.
    Threshold {
        #[command(flatten)]
        ensemble: EnsembleOpts,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
    },
    /// Sweep coupled thresholds over a list of coupling memories.
    Sweep {
        #[command(flatten)]
        ensemble: EnsembleOpts,
        /// Comma-separated coupling memories, e.g. 1,3,5 (0 = uncoupled BP).
        #[arg(long, default_value = "1,3,5")]
        m_list: String,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
    },
    /// Evaluate the scalar-system potential function and its thresholds.
    Potential {
        #[command(flatten)]
        ensemble: EnsembleOpts,
        /// Sample U(x; eps) on a uniform x grid at this eps.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Also compute the BP and potential thresholds of the system.
        #[arg(long)]
        thresholds: bool,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Recompute a published threshold table and report deviations.
    Reproduce {
        /// table1, table2 or table3.
        #[arg(long)]
        table: String,
        /// Substring filter on rows, e.g. "PCC 4" or "1/2".
        #[arg(long)]
        rows: Option<String>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Chain length for coupled thresholds.
        #[arg(long = "L", default_value_t = DEFAULT_CHAIN_LENGTH)]
        chain_length: usize,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
    },
}

/// Parses arguments from the process environment and runs; returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    init_workers(cli.workers);
    match dispatch(&cli) {
        Ok(rows_failed) => {
            if rows_failed {
                2
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::Validation(_) => 1,
                _ => 2,
            }
        }
    }
}

fn init_workers(cli_workers: Option<usize>) {
    let workers = cli_workers.or_else(|| {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
    });
    if let Some(n) = workers.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Returns whether any per-row computation failed (exit code 2).
fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Transfer {
            gen,
            binary,
            p,
            grid,
        } => {
            let notation = if *binary {
                Notation::Binary
            } else {
                Notation::Octal
            };
            let g = parse_generator(gen, notation)?;
            let trellis = build_trellis(&g)?;
            let mut eval = TransferEvaluator::for_trellis(&trellis)?;
            let n = g.output_count();
            let mut points: Vec<Vec<f64>> = Vec::new();
            for s in p {
                let vec: Vec<f64> = s
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad erasure value {t:?}")))
                    })
                    .collect::<Result<_>>()?;
                if vec.len() != n {
                    return Err(Error::Validation(format!(
                        "--p needs {n} entries for this encoder, got {}",
                        vec.len()
                    )));
                }
                points.push(vec);
            }
            if let Some(steps) = grid {
                if *steps < 2 {
                    return Err(Error::Validation("--grid needs at least 2 points".into()));
                }
                for i in 0..*steps {
                    let v = i as f64 / (*steps - 1) as f64;
                    points.push(vec![v; n]);
                }
            }
            if points.is_empty() {
                return Err(Error::Validation(
                    "give at least one --p vector or --grid".into(),
                ));
            }
            let mut rows = Vec::with_capacity(points.len());
            for pv in points {
                let f = eval.transfer(&pv)?;
                rows.push((pv, f));
            }
            let text = match cli.format {
                OutFormat::Csv => report::transfer_csv(n, &rows),
                OutFormat::Json => {
                    let records: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|(p, f)| serde_json::json!({ "p": p, "f": f }))
                        .collect();
                    serde_json::to_string_pretty(&records)?
                }
            };
            emit(cli.out.as_deref(), &text)?;
            Ok(false)
        }
        Command::DeRun {
            ensemble,
            epsilon,
            max_iter,
        } => {
            let spec = ensemble.resolve()?;
            let mut de = EnsembleDe::new(&spec)?;
            let params = RunParams::default().with_max_iter(*max_iter);
            let r = run_de(&mut de, *epsilon, &params)?;
            let status = if r.converged {
                "converged"
            } else if r.stalled {
                "stalled"
            } else {
                "iteration-capped"
            };
            let text = match cli.format {
                OutFormat::Json => serde_json::to_string_pretty(&serde_json::json!({
                    "epsilon": epsilon,
                    "status": status,
                    "iterations": r.iterations,
                    "max_aposteriori": r.max_aposteriori,
                }))?,
                OutFormat::Csv => format!(
                    "epsilon,status,iterations,max_aposteriori\n{},{},{},{}\n",
                    report::fmt_f64(*epsilon),
                    status,
                    r.iterations,
                    report::fmt_f64(r.max_aposteriori)
                ),
            };
            emit(cli.out.as_deref(), &text)?;
            Ok(false)
        }
        Command::Threshold {
            ensemble,
            kind,
            tol,
            max_iter,
        } => {
            let spec = ensemble.resolve()?;
            let params = RunParams::default().with_max_iter(*max_iter);
            let tasks = vec![SweepTask {
                label: spec.family.as_str().to_string(),
                spec,
                kind: match kind {
                    KindArg::Bp => ThresholdKind::Bp,
                    KindArg::Map => ThresholdKind::Map,
                },
                tol: *tol,
                params,
            }];
            let outcomes = threshold_sweep(&tasks);
            let failed = emit_sweep(cli, &outcomes)?;
            Ok(failed)
        }
        Command::Sweep {
            ensemble,
            m_list,
            tol,
            max_iter,
        } => {
            let base = ensemble.resolve()?;
            let params = RunParams::default().with_max_iter(*max_iter);
            let mut tasks = Vec::new();
            for tok in m_list.split(',') {
                let m: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coupling memory {tok:?}")))?;
                let mut spec = base.clone();
                if m == 0 {
                    spec.m = 0;
                    spec.chain_length = 1;
                } else {
                    spec.m = m;
                    if spec.chain_length == 1 {
                        spec.chain_length = DEFAULT_CHAIN_LENGTH;
                    }
                }
                tasks.push(SweepTask {
                    label: format!("{} m={}", spec.family.as_str(), m),
                    spec,
                    kind: if m == 0 {
                        ThresholdKind::Bp
                    } else {
                        ThresholdKind::Sc
                    },
                    tol: *tol,
                    params,
                });
            }
            let outcomes = threshold_sweep(&tasks);
            let failed = emit_sweep(cli, &outcomes)?;
            Ok(failed)
        }
        Command::Potential {
            ensemble,
            epsilon,
            points,
            thresholds,
            tol,
        } => {
            let spec = ensemble.resolve()?;
            let mut sys = scalar_system(&spec)?;
            let mut failed = false;
            if *thresholds {
                let bp = bp_threshold_scalar(&mut sys, *tol)?;
                let star = potential_threshold(&mut sys, *tol)?;
                println!(
                    "system: {}\nbp_threshold: {}\npotential_threshold: {}",
                    sys.label(),
                    report::fmt_f64(bp),
                    report::fmt_f64(star)
                );
            }
            if let Some(eps) = epsilon {
                let curve = potential_curve(&mut sys, *eps, *points)?;
                let text = match cli.format {
                    OutFormat::Csv => report::potential_csv(&curve),
                    OutFormat::Json => serde_json::to_string_pretty(&serde_json::json!({
                        "eps": curve.eps,
                        "quad_tol": curve.quad_tol,
                        "samples": curve.samples,
                    }))?,
                };
                emit(cli.out.as_deref(), &text)?;
            } else if !*thresholds {
                failed = true;
                eprintln!("nothing to do: give --epsilon for a curve and/or --thresholds");
            }
            Ok(failed)
        }
        Command::Reproduce {
            table: table_name,
            rows,
            tol,
            chain_length,
            max_iter,
        } => {
            let which = PaperTable::parse(table_name).ok_or_else(|| {
                Error::Validation(format!(
                    "unknown table {table_name:?}; expected table1, table2 or table3"
                ))
            })?;
            let filter = rows.as_deref().unwrap_or("").to_ascii_lowercase();
            let rows: Vec<_> = table(which)
                .into_iter()
                .filter(|r| filter.is_empty() || r.key().to_ascii_lowercase().contains(&filter))
                .collect();
            if rows.is_empty() {
                return Err(Error::Validation(format!(
                    "row filter {filter:?} matches nothing"
                )));
            }
            let reproduced = reproduce_rows(&rows, *tol, *chain_length, *max_iter);
            let failed = reproduced.iter().any(|r| !r.errors.is_empty());
            let text = match cli.format {
                OutFormat::Csv => report::reproduce_csv(&reproduced),
                OutFormat::Json => report::reproduce_json(&reproduced)?,
            };
            emit(cli.out.as_deref(), &text)?;
            Ok(failed)
        }
    }
}

/// Recomputes BP, MAP and the listed coupled thresholds for each table row.
pub fn reproduce_rows(
    rows: &[crate::presets::TableRow],
    tol: f64,
    chain_length: usize,
    max_iter: usize,
) -> Vec<report::ReproducedRow> {
    let params = RunParams::default().with_max_iter(max_iter);
    let mut tasks: Vec<(usize, Option<usize>, SweepTask)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        tasks.push((
            i,
            None,
            SweepTask {
                label: format!("{} BP", row.key()),
                spec: row.base.clone(),
                kind: ThresholdKind::Bp,
                tol,
                params,
            },
        ));
        tasks.push((
            i,
            None,
            SweepTask {
                label: format!("{} MAP", row.key()),
                spec: row.base.clone(),
                kind: ThresholdKind::Map,
                tol,
                params,
            },
        ));
        for (j, &(m, _)) in row.paper_sc.iter().enumerate() {
            tasks.push((
                i,
                Some(j),
                SweepTask {
                    label: format!("{} SC m={m}", row.key()),
                    spec: row.coupled(m, chain_length),
                    kind: ThresholdKind::Sc,
                    tol,
                    params,
                },
            ));
        }
    }
    let sweep_tasks: Vec<SweepTask> = tasks.iter().map(|(_, _, t)| t.clone()).collect();
    let outcomes = threshold_sweep(&sweep_tasks);

    let mut reproduced: Vec<report::ReproducedRow> =
        rows.iter().map(report::ReproducedRow::new).collect();
    for ((row_idx, sc_idx, task), outcome) in tasks.iter().zip(outcomes) {
        let row = &mut reproduced[*row_idx];
        match outcome.outcome {
            Ok(res) => match (task.kind, sc_idx) {
                (ThresholdKind::Map, _) => row.map = Some(res.value),
                (_, None) => row.bp = Some(res.value),
                (_, Some(j)) => row.sc[*j].1 = Some(res.value),
            },
            Err(e) => row.errors.push(format!("{}: {e}", task.label)),
        }
    }
    reproduced
}

fn emit_sweep(cli: &Cli, outcomes: &[SweepOutcome]) -> Result<bool> {
    let text = match cli.format {
        OutFormat::Csv => report::threshold_csv(outcomes),
        OutFormat::Json => report::threshold_json(outcomes)?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(outcomes.iter().any(|o| o.outcome.is_err()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
