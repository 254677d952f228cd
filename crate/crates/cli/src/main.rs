use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use macdmt_cli::verify::{check_names, checks, run_verify};
use macdmt_cli::*;
use macdmt_core::Rational;
use macdmt_montecarlo::Mode;
use macdmt_optimizer::OptOptions;
use macdmt_scheme::Numbering;

/// Diversity–multiplexing tradeoff toolkit for lattice (infinite-constellation)
/// MIMO multiple-access channels.
#[derive(Parser)]
#[command(name = "macdmt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a DMT curve: exact breakpoints and sampled (r, d) rows.
    Curve(CurveArgs),
    /// Max-min dimension allocation for a rate tuple.
    Optimize(OptimizeArgs),
    /// Rate tuple where the IC upper bound falls below the FC optimum.
    Witness(WitnessArgs),
    /// Print a transmission pattern and its effective-channel blocks.
    Scheme(SchemeArgs),
    /// Monte Carlo diversity estimate from a JSON config.
    Simulate(SimulateArgs),
    /// Run the invariant suites and print one line per check.
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Copy)]
struct Shape {
    /// Number of users.
    #[arg(short = 'K', long = "users", default_value_t = 1)]
    k: usize,
    /// Transmit antennas per user.
    #[arg(short = 'M', long = "tx")]
    m: usize,
    /// Receive antennas.
    #[arg(short = 'N', long = "rx")]
    n: usize,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s)
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum KindArg {
    FcP2p,
    FcMac,
    IcMac,
    IcLine,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    shape: Shape,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Average dimensions per channel use (ic_line only).
    #[arg(long = "dim", value_parser = rational_arg)]
    dim: Option<Rational>,
    /// Sampling step for the rows.
    #[arg(long, value_parser = rational_arg, default_value = "1/24")]
    step: Rational,
    /// Print CSV instead of JSON on stdout.
    #[arg(long)]
    csv: bool,
    /// Also write the CSV rows to this file.
    #[arg(long = "csv-out")]
    csv_out: Option<PathBuf>,
    /// Also write the JSON document to this file.
    #[arg(long = "json-out")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Coarse grid step of the dimension search.
    #[arg(long = "grid-step", value_parser = rational_arg, default_value = "1/24")]
    grid_step: Rational,
    /// Local refinement rounds (each divides the step by 4).
    #[arg(long, default_value_t = 3)]
    refinements: u32,
    /// Largest number of users accepted by the subset enumeration.
    #[arg(long = "k-cap", default_value_t = 12)]
    k_cap: usize,
}

impl SearchArgs {
    fn options(&self) -> OptOptions {
        OptOptions {
            step: self.grid_step,
            refinements: self.refinements,
            k_cap: self.k_cap,
            ..OptOptions::default()
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    /// JSON input `{"K":..,"M":..,"N":..,"rates":[[num,den],..]}`.
    #[arg(long, conflicts_with_all = ["k", "m", "n", "rates"])]
    input: Option<PathBuf>,
    #[arg(short = 'K', long = "users")]
    k: Option<usize>,
    #[arg(short = 'M', long = "tx")]
    m: Option<usize>,
    #[arg(short = 'N', long = "rx")]
    n: Option<usize>,
    /// Comma-separated multiplexing gains, e.g. `1/2,1/3`.
    #[arg(long, value_delimiter = ',', value_parser = rational_arg)]
    rates: Vec<Rational>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    shape: Shape,
    /// Centre rate of the asymmetric family (K=2, M=s+1, N=3s).
    #[arg(long, value_parser = rational_arg)]
    r0: Option<Rational>,
    /// Rate offset of the asymmetric family.
    #[arg(long, value_parser = rational_arg)]
    eps: Option<Rational>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum NumberingArg {
    PerUser,
    Level,
}

#[derive(Args)]
struct SchemeArgs {
    #[command(flatten)]
    shape: Shape,
    /// Level l (0 ≤ l < M).
    #[arg(short = 'l', long, default_value_t = 0)]
    level: usize,
    #[arg(long, value_enum, default_value = "per_user")]
    numbering: NumberingArg,
    /// Print JSON (`M, N, l, T, cells, effective_channel`) instead of the grid.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ModeArg {
    UnionBound,
    LatticeDecode,
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Write per-SNR rows as CSV to this file (stdout otherwise gets only the summary).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the summary JSON to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Checks to run (all when omitted).
    checks: Vec<String>,
    /// Inject a fault into the named check (repeatable; for testing the harness).
    #[arg(long)]
    perturb: Vec<String>,
    /// List the available checks and exit.
    #[arg(long)]
    list: bool,
    /// Also write the report as JSON to this file.
    #[arg(long = "json-out")]
    json_out: Option<PathBuf>,
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(|e| CliError::Failure(format!("{e:#}")))
}

fn read_file(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| CliError::Usage(format!("{e:#}")))
}

fn curve(a: CurveArgs) -> CliResult<()> {
    let kind = match a.kind {
        KindArg::FcP2p => CurveKind::FcP2p,
        KindArg::FcMac => CurveKind::FcMac,
        KindArg::IcMac => CurveKind::IcMac,
        KindArg::IcLine => CurveKind::IcLine,
    };
    let out = run_curve(&CurveRequest { kind, k: a.shape.k, m: a.shape.m, n: a.shape.n, dim: a.dim, step: a.step })?;
    if let Some(p) = &a.csv_out {
        write_file(p, &out.csv)?;
    }
    if let Some(p) = &a.json_out {
        write_file(p, &out.json)?;
    }
    print!("{}", if a.csv { &out.csv } else { &out.json });
    Ok(())
}

fn optimize(a: OptimizeArgs) -> CliResult<()> {
    let input = match &a.input {
        Some(p) => parse_optimize_input(&read_file(p)?)?,
        None => {
            let (Some(k), Some(m), Some(n)) = (a.k, a.m, a.n) else {
                return Err(CliError::Usage("give --input FILE or all of -K, -M, -N and --rates".into()));
            };
            OptimizeInput { k, m, n, rates: a.rates.clone() }
        }
    };
    print!("{}", run_optimize(&input, &a.search.options())?);
    Ok(())
}

fn witness(a: WitnessArgs) -> CliResult<()> {
    print!("{}", run_witness(a.shape.k, a.shape.m, a.shape.n, a.r0, a.eps, &a.search.options())?);
    Ok(())
}

fn scheme(a: SchemeArgs) -> CliResult<()> {
    let numbering = match a.numbering {
        NumberingArg::PerUser => Numbering::PerUser,
        NumberingArg::Level => Numbering::ByLevel,
    };
    let format = if a.json { SchemeFormat::Json } else { SchemeFormat::Text };
    print!("{}", run_scheme(a.shape.m, a.shape.n, a.level, a.shape.k, numbering, format)?);
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let text = read_file(&a.config)?;
    let mode = a.mode.map(|m| match m {
        ModeArg::UnionBound => Mode::UnionBound,
        ModeArg::LatticeDecode => Mode::LatticeDecode,
    });
    let seed = std::env::var("MACDMT_SEED").ok();
    let sim = load_sim_config(&text, mode, seed.as_deref())?;
    let out = run_simulate(&sim)?;
    if let Some(p) = &a.out {
        write_file(p, &out.csv)?;
    }
    if let Some(p) = &a.summary {
        write_file(p, &out.summary)?;
    }
    print!("{}", out.summary);
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult<()> {
    if a.list {
        for c in checks() {
            println!("{:<24} {}", c.name, c.description);
        }
        return Ok(());
    }
    let report = run_verify(&a.checks, &a.perturb)
        .map_err(|e| CliError::Usage(format!("{e}; available: {}", check_names().join(", "))))?;
    print!("{}", report.render());
    if let Some(p) = &a.json_out {
        let json = serde_json::to_string_pretty(&report).expect("serializable report");
        write_file(p, &(json + "\n"))?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| c.status == verify::Status::Fail).map(|c| c.name).collect();
        Err(CliError::Failure(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(a) => curve(a),
        Command::Optimize(a) => optimize(a),
        Command::Witness(a) => witness(a),
        Command::Scheme(a) => scheme(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("macdmt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
