//! Command-line front end.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cost::{arkane_cycles, asymptotic_speedup, tabulation_cycles, tabulation_speedup, units_at_parity, PowerAreaTable};
use crate::error::{Error, Result};
use crate::report::{auto_mode, matched_pe, run_rows, sweep, VectorChoice};
use crate::sim::{ArrayConfig, SimMode};
use crate::verify::{run_checks, LutFault};
use crate::workloads::{builtin_workloads, resolve, Workload};

/// Functional runs above this many MACs fall back to timing mode.
const FUNCTIONAL_MAC_LIMIT: u64 = 50_000_000;

#[derive(Debug, Parser)]
#[command(name = "kansa", version, about = "KAN inference on weight-stationary systolic arrays")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the oracle, partition-of-unity, symmetry and simulator checks.
    Verify(VerifyArgs),
    /// Simulate one workload on one array.
    Run(RunArgs),
    /// Scalar vs KAN-SA averages over a range of array sizes.
    Sweep(SweepArgs),
    /// Recursive evaluator vs tabulated B-spline units at equal area.
    #[command(alias = "compare")]
    Arkane(ArkaneArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Functional,
    Timing,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    output: Output,
    /// Corrupt one cubic LUT byte before checking.
    #[arg(long, hide = true)]
    inject_lut_fault: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Built-in workload name or workload file.
    #[arg(long)]
    workload: String,
    #[arg(long, default_value_t = 16)]
    rows: usize,
    #[arg(long, default_value_t = 16)]
    cols: usize,
    /// `scalar`, `nm:N:M`, or `auto` for N:M matched to the workload grid.
    #[arg(long, default_value = "scalar")]
    pe: String,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    constants: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Workloads to include; defaults to the built-in suite.
    #[arg(long, value_delimiter = ',')]
    workload: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    sizes: Vec<usize>,
    /// Vector PE: `auto` (matched per workload) or `nm:N:M`.
    #[arg(long, default_value = "auto")]
    pe: String,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    constants: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ArkaneArgs {
    #[arg(short = 'P', long = "degree", default_value_t = 3)]
    p: u64,
    #[arg(short = 'G', long = "grid", default_value_t = 5)]
    g: u64,
    /// Number of inputs to evaluate.
    #[arg(short = 'M', long = "inputs", default_value_t = 1_000_000)]
    m: u64,
    /// Evaluator PE latency; defaults to the FMA latency constant.
    #[arg(long)]
    latency: Option<u64>,
    #[arg(long)]
    constants: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArkaneReport {
    pub p: u64,
    pub g: u64,
    pub m: u64,
    pub pe_latency: u64,
    pub arkane_cycles: u64,
    pub tabulation_cycles: u64,
    pub units_at_parity: u64,
    pub speedup: f64,
    pub asymptotic_speedup: f64,
}

pub fn arkane_report(p: u64, g: u64, m: u64, latency: Option<u64>, table: &PowerAreaTable) -> ArkaneReport {
    let pe_latency = latency.unwrap_or(table.fma_latency_cycles);
    let t = PowerAreaTable { fma_latency_cycles: pe_latency, ..table.clone() };
    let units = units_at_parity(p, &t);
    ArkaneReport {
        p,
        g,
        m,
        pe_latency,
        arkane_cycles: arkane_cycles(p, g, m, pe_latency),
        tabulation_cycles: tabulation_cycles(m, units),
        units_at_parity: units,
        speedup: tabulation_speedup(p, g, m, &t),
        asymptotic_speedup: asymptotic_speedup(p, &t),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepRow {
    side: String,
    rows: usize,
    cols: usize,
    area_mm2: f64,
    application: String,
    utilization: f64,
    mean_cycles: f64,
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize>(rows: &[T], format: Format, out: &Option<PathBuf>) -> Result<()> {
    let mut w = sink(out)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows).map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for r in rows {
                csv.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
            }
            csv.flush()?;
        }
    }
    Ok(())
}

fn constants(path: &Option<PathBuf>) -> Result<PowerAreaTable> {
    path.as_deref().map_or_else(|| Ok(PowerAreaTable::default()), PowerAreaTable::load)
}

fn with_overrides(mut w: Workload, batch: Option<usize>, seed: Option<u64>) -> Result<Workload> {
    if let Some(b) = batch {
        w = w.with_batch(b);
    }
    if let Some(s) = seed {
        w = w.with_seed(s);
    }
    w.validate()?;
    Ok(w)
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let fault = args.inject_lut_fault.then_some(LutFault { degree: 3, bank: 0, addr: 200, value: 0 });
    let checks = run_checks(fault);
    let passed = checks.iter().all(|c| c.passed);
    match args.output.format {
        Some(f) => emit(&checks, f, &args.output.out)?,
        None => {
            let mut w = sink(&args.output.out)?;
            for c in &checks {
                writeln!(w, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            if passed {
                writeln!(w, "all checks passed")?;
            } else {
                let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
                writeln!(w, "failed checks: {}", failed.join(", "))?;
            }
        }
    }
    Ok(passed)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let table = constants(&args.constants)?;
    let w = with_overrides(resolve(&args.workload)?, args.batch, args.seed)?;
    let pe = if args.pe.eq_ignore_ascii_case("auto") { matched_pe(&w)? } else { args.pe.parse()? };
    let cfg = ArrayConfig::new(args.rows, args.cols, pe)?;
    let mode = match args.mode {
        ModeArg::Auto => auto_mode(&w, FUNCTIONAL_MAC_LIMIT)?,
        ModeArg::Functional => SimMode::Functional,
        ModeArg::Timing => SimMode::Timing,
    };
    let (rows, _) = run_rows(&w, &cfg, mode, &table)?;
    emit(&rows, args.output.format.unwrap_or(Format::Csv), &args.output.out)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let table = constants(&args.constants)?;
    let suite = if args.workload.is_empty() {
        builtin_workloads()
    } else {
        args.workload.iter().map(|n| resolve(n)).collect::<Result<Vec<_>>>()?
    };
    let suite = suite
        .into_iter()
        .map(|w| with_overrides(w, args.batch, args.seed))
        .collect::<Result<Vec<_>>>()?;
    let choice = if args.pe.eq_ignore_ascii_case("auto") {
        VectorChoice::Matched
    } else {
        VectorChoice::Fixed(args.pe.parse()?)
    };
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(Error::Config("sizes must be positive".into()));
    }
    let mut rows = Vec::new();
    for pt in sweep(&suite, choice, &args.sizes, &table)? {
        let row = |application: String, utilization, mean_cycles| SweepRow {
            side: pt.side.clone(),
            rows: pt.rows,
            cols: pt.cols,
            area_mm2: pt.area_mm2,
            application,
            utilization,
            mean_cycles,
        };
        for a in &pt.per_app {
            rows.push(row(a.application.clone(), a.utilization, a.mean_cycles));
        }
        rows.push(row("average".into(), pt.avg_utilization, pt.avg_cycles));
    }
    emit(&rows, args.output.format.unwrap_or(Format::Csv), &args.output.out)
}

fn cmd_arkane(args: &ArkaneArgs) -> Result<()> {
    if args.p == 0 || args.g == 0 || args.m == 0 {
        return Err(Error::Config("P, G and M must be positive".into()));
    }
    let table = constants(&args.constants)?;
    let report = arkane_report(args.p, args.g, args.m, args.latency, &table);
    match args.output.format {
        Some(f) => emit(std::slice::from_ref(&report), f, &args.output.out),
        None => {
            let mut w = sink(&args.output.out)?;
            writeln!(w, "arkane_cycles {}", report.arkane_cycles)?;
            writeln!(w, "tabulation_cycles {}", report.tabulation_cycles)?;
            writeln!(w, "units_at_parity {}", report.units_at_parity)?;
            writeln!(w, "speedup {:.3}", report.speedup)?;
            writeln!(w, "asymptotic_speedup {:.3}", report.asymptotic_speedup)?;
            Ok(())
        }
    }
}

/// Parse arguments and run; exit 0 on success, 1 on failed verification,
/// 2 on configuration or input errors.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => cmd_verify(a).map(|ok| if ok { 0 } else { 1 }),
        Command::Run(a) => cmd_run(a).map(|_| 0),
        Command::Sweep(a) => cmd_sweep(a).map(|_| 0),
        Command::Arkane(a) => cmd_arkane(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
