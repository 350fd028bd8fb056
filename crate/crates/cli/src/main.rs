//! Command-line front end for the preprocessor model.
//!
//! Exit codes: `0` — the requested work completed (and any quality gate
//! passed); `1` — the work completed but a quality gate failed (a design
//! check reported FAIL, or `--strict` found a budget violation); `2` — the
//! request itself was unusable (bad flags, unknown registry names,
//! malformed files, out-of-range configuration).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use icaprep::checks;
use icaprep::io;
use icaprep::matrix::CMat;
use icaprep::ordering::sequence_strategies;
use icaprep::pipeline::{self, AccuracyFigures, RunConfig};
use icaprep::report::RunReport;
use icaprep::scenario::{lookup_scenario, scenario_kinds};

/// Writes one line to stdout, ending the process quietly if the reader has
/// gone away — `icaprep run | head -1` must not panic on the broken pipe.
fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out
        .write_fmt(args)
        .and_then(|()| out.write_all(b"\n"))
        .is_err()
    {
        std::process::exit(0);
    }
}

macro_rules! say {
    ($($arg:tt)*) => { emit(std::format_args!($($arg)*)) };
}

#[derive(Parser)]
#[command(
    name = "icaprep",
    version,
    about = "Bit- and cycle-accurate model of a fixed-point whitening front end",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full chain once and print the summary.
    Run(RunArgs),
    /// Run the chain over consecutive seeds and report worst-case accuracy.
    Sweep(SweepArgs),
    /// Generate a quantized scenario block and write it to a file.
    Gen(GenArgs),
    /// Run the design checks (all, or the named subset).
    Check(CheckArgs),
    /// List the registered scenario kinds and issue sequences.
    List,
}

/// Options shared by every invocation that executes the chain.
#[derive(Args)]
struct ConfigArgs {
    /// Antenna channels per block.
    #[arg(short = 'n', long, default_value_t = 8)]
    channels: usize,
    /// Samples per block.
    #[arg(short = 'm', long, default_value_t = 512)]
    samples: usize,
    /// Storage word length, bits.
    #[arg(long, default_value_t = 10)]
    word_length: u32,
    /// Fractional bits of the storage format.
    #[arg(long, default_value_t = 8)]
    frac_bits: u32,
    /// Micro-rotations per CORDIC operation.
    #[arg(long, default_value_t = 10)]
    cordic_iterations: u32,
    /// Diagonalization sweeps.
    #[arg(long, default_value_t = 20)]
    evd_sweeps: usize,
    /// Input scenario kind (see `icaprep list`).
    #[arg(long, default_value = "qpsk_sources")]
    scenario: String,
    /// Rotation issue sequence (see `icaprep list`).
    #[arg(long = "evd-sequence", default_value = "hazard-free")]
    evd_sequence: String,
    /// Scenario generator seed.
    #[arg(long, env = "ICAPREP_SEED", default_value_t = 1)]
    seed: u64,
    /// Core clock frequency, MHz.
    #[arg(long, default_value_t = 250.0)]
    clock_mhz: f64,
}

impl ConfigArgs {
    fn to_config(&self) -> RunConfig {
        RunConfig {
            channels: self.channels,
            samples: self.samples,
            word_length: self.word_length,
            frac_bits: self.frac_bits,
            cordic_iterations: self.cordic_iterations,
            evd_sweeps: self.evd_sweeps,
            scenario: self.scenario.clone(),
            sequence: self.evd_sequence.clone(),
            seed: self.seed,
            clock_hz: self.clock_mhz * 1e6,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Run on a block from this file instead of generating one
    /// (`.csv` or the raw binary layout; shape overrides -n/-m).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Exit 1 unless every accuracy figure is within the design budgets
    /// and no saturation was flagged.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Number of consecutive seeds to run, starting at --seed.
    #[arg(long, default_value_t = 25)]
    seeds: u64,
    /// Write a JSON document with per-seed and worst-case figures here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Exit 1 unless the worst case over all seeds is within the budgets.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Antenna channels per block.
    #[arg(short = 'n', long, default_value_t = 8)]
    channels: usize,
    /// Samples per block.
    #[arg(short = 'm', long, default_value_t = 512)]
    samples: usize,
    /// Scenario kind (see `icaprep list`).
    #[arg(long, default_value = "qpsk_sources")]
    scenario: String,
    /// Generator seed.
    #[arg(long, env = "ICAPREP_SEED", default_value_t = 1)]
    seed: u64,
    /// Storage word length, bits.
    #[arg(long, default_value_t = 10)]
    word_length: u32,
    /// Fractional bits of the storage format.
    #[arg(long, default_value_t = 8)]
    frac_bits: u32,
    /// Output file; `.csv` writes the text layout, anything else the raw
    /// binary layout.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Check names to run (default: every check, in order).
    names: Vec<String>,
    /// Print the available check names and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> icaprep::Result<ExitCode> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Check(args) => cmd_check(args),
        Command::List => cmd_list(),
    }
}

/// Compares one run's accuracy against the pinned design budgets, returning
/// one human-readable line per violation.
fn budget_violations(a: &AccuracyFigures) -> Vec<String> {
    let gates = [
        (
            "covariance",
            a.covariance_max_err_lsb,
            checks::COVARIANCE_BUDGET_LSB,
        ),
        (
            "eigenvalues",
            a.eigenvalue_max_err_lsb,
            checks::EIGENVALUE_BUDGET_LSB,
        ),
        (
            "unitarity",
            a.unitarity_err_lsb,
            checks::UNITARITY_BUDGET_LSB,
        ),
        (
            "reconstruction",
            a.reconstruction_err_lsb,
            checks::RECONSTRUCTION_BUDGET_LSB,
        ),
        (
            "whiteness",
            a.whiteness_err_lsb,
            checks::WHITENESS_BUDGET_LSB,
        ),
    ];
    let mut violations: Vec<String> = gates
        .iter()
        .filter(|(_, got, budget)| got > budget)
        .map(|(name, got, budget)| format!("{name} {got:.2} LSB exceeds budget {budget}"))
        .collect();
    if a.saturation_count > 0 {
        violations.push(format!(
            "{} saturation flags (budget 0)",
            a.saturation_count
        ));
    }
    violations
}

fn cmd_run(args: RunArgs) -> icaprep::Result<ExitCode> {
    let cfg = args.cfg.to_config();
    let run = match &args.input {
        Some(path) => pipeline::execute_on(&cfg, io::read_block(path)?)?,
        None => pipeline::execute(&cfg)?,
    };
    let report = RunReport::from_run(&run);
    for line in report.summary_lines() {
        say!("{line}");
    }
    if let Some(path) = &args.report {
        io::save_report(path, &report)?;
        say!("report written to {}", path.display());
    }
    if args.strict {
        let violations = budget_violations(&run.accuracy);
        if violations.is_empty() {
            say!("strict: all accuracy figures within budget, no saturation");
        } else {
            for v in &violations {
                say!("strict: {v}");
            }
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Field-wise worst case of two accuracy records.
fn fold_worst(acc: &mut AccuracyFigures, next: &AccuracyFigures) {
    acc.covariance_max_err_lsb = acc.covariance_max_err_lsb.max(next.covariance_max_err_lsb);
    acc.eigenvalue_max_err_lsb = acc.eigenvalue_max_err_lsb.max(next.eigenvalue_max_err_lsb);
    acc.unitarity_err_lsb = acc.unitarity_err_lsb.max(next.unitarity_err_lsb);
    acc.reconstruction_err_lsb = acc.reconstruction_err_lsb.max(next.reconstruction_err_lsb);
    acc.whiteness_err_lsb = acc.whiteness_err_lsb.max(next.whiteness_err_lsb);
    acc.oracle_whiteness_distance = acc
        .oracle_whiteness_distance
        .max(next.oracle_whiteness_distance);
    acc.max_offdiag_residual_raw = acc
        .max_offdiag_residual_raw
        .max(next.max_offdiag_residual_raw);
    acc.saturation_count = acc.saturation_count.max(next.saturation_count);
}

fn accuracy_line(a: &AccuracyFigures) -> String {
    format!(
        "covariance {:.2}, eigenvalues {:.2}, unitarity {:.2}, reconstruction {:.2}, whiteness {:.2}, saturations {}",
        a.covariance_max_err_lsb,
        a.eigenvalue_max_err_lsb,
        a.unitarity_err_lsb,
        a.reconstruction_err_lsb,
        a.whiteness_err_lsb,
        a.saturation_count
    )
}

fn cmd_sweep(args: SweepArgs) -> icaprep::Result<ExitCode> {
    if args.seeds == 0 {
        return Err(icaprep::Error::Config(
            "sweep needs at least one seed".to_string(),
        ));
    }
    let base = args.cfg.to_config();
    let mut worst: Option<AccuracyFigures> = None;
    let mut per_seed = Vec::new();
    let last = args.seeds - 1;
    for offset in 0..args.seeds {
        let mut cfg = base.clone();
        cfg.seed = base.seed.wrapping_add(offset);
        let run = pipeline::execute(&cfg)?;
        say!("seed {}: {}", cfg.seed, accuracy_line(&run.accuracy));
        per_seed.push(serde_json::json!({
            "seed": cfg.seed,
            "accuracy": &run.accuracy,
        }));
        match worst.as_mut() {
            Some(w) => fold_worst(w, &run.accuracy),
            None => worst = Some(run.accuracy.clone()),
        }
    }
    let worst = worst.expect("at least one seed was run");
    say!(
        "worst over seeds {}..={}: {}",
        base.seed,
        base.seed.wrapping_add(last),
        accuracy_line(&worst)
    );
    if let Some(path) = &args.report {
        let doc = serde_json::json!({
            "schema": 1,
            "config": &base,
            "seeds": args.seeds,
            "per_seed": per_seed,
            "worst": &worst,
        });
        std::fs::write(
            path,
            serde_json::to_string_pretty(&doc).expect("report serializes"),
        )?;
        say!("report written to {}", path.display());
    }
    if args.strict {
        let violations = budget_violations(&worst);
        if !violations.is_empty() {
            for v in &violations {
                say!("strict: worst case: {v}");
            }
            return Ok(ExitCode::from(1));
        }
        say!("strict: worst case within budget across all seeds");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(args: GenArgs) -> icaprep::Result<ExitCode> {
    let fmt = icaprep::FixFormat::new(args.word_length, args.frac_bits)?;
    let kind = lookup_scenario(&args.scenario)?;
    let block = kind.generate(args.channels, args.samples, args.seed)?;
    let quantized = CMat::quantize(&block.observations, fmt);
    io::write_block(&args.out, &quantized)?;
    let peak_raw = (0..quantized.rows())
        .flat_map(|i| (0..quantized.cols()).map(move |j| (i, j)))
        .map(|(i, j)| {
            let z = quantized.get(i, j);
            z.re.raw().abs().max(z.im.raw().abs())
        })
        .max()
        .unwrap_or(0);
    say!(
        "wrote {}x{} block ({} seed {}) to {}",
        quantized.rows(),
        quantized.cols(),
        block.kind,
        block.seed,
        args.out.display()
    );
    say!(
        "scale {:.6}, peak component {} raw ({:.4} of full scale)",
        block.scale,
        peak_raw,
        peak_raw as f64 / fmt.max_raw() as f64
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: CheckArgs) -> icaprep::Result<ExitCode> {
    if args.list {
        for (name, _) in checks::check_table() {
            say!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let results = if args.names.is_empty() {
        checks::run_all_checks()
    } else {
        args.names
            .iter()
            .map(|name| checks::run_check(name))
            .collect::<icaprep::Result<Vec<_>>>()?
    };
    let mut failed = 0usize;
    for result in &results {
        say!("{}", result.line());
        if !result.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        say!("{failed} of {} checks FAILED", results.len());
        Ok(ExitCode::from(1))
    } else {
        say!("all {} checks passed", results.len());
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_list() -> icaprep::Result<ExitCode> {
    say!("scenario kinds (--scenario):");
    for kind in scenario_kinds() {
        say!("  {:<20} {}", kind.name(), kind.description());
    }
    say!("issue sequences (--evd-sequence):");
    for strategy in sequence_strategies() {
        say!("  {:<20} {}", strategy.name(), strategy.description());
    }
    Ok(ExitCode::SUCCESS)
}
