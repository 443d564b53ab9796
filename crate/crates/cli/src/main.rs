use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use brstlab_core::report::{emit, run_pipeline, Format, Stage, SystemSpec};
use clap::{Parser, Subcommand, ValueEnum};

/// Finite-dimensional BRST quantization: charges, physical spaces and
/// physical algebras for matrix constraint systems.
#[derive(Parser)]
#[command(name = "brstlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the charge and verify nilpotency, symmetry and grading.
    Check(Args),
    /// Also split the state space into H_d, H_s and H_p.
    Dsp(Args),
    /// Also compute the operator cohomology and the BRST physical algebra.
    Physical(Args),
    /// Also compare with the physical algebra from constraining first.
    Compare(Args),
}

#[derive(clap::Args)]
struct Args {
    /// System description (JSON); reads stdin when absent or `-`.
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
    /// Absolute tolerance; overrides the description and BRSTLAB_TOL.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

const INPUT_ERROR: u8 = 2;
const CHECK_FAILURE: u8 = 1;

fn read_spec(path: Option<&PathBuf>) -> Result<String, String> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display())),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
            Ok(s)
        }
    }
}

fn env_tol() -> Result<Option<f64>, String> {
    match std::env::var("BRSTLAB_TOL") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("BRSTLAB_TOL={v:?} is not a number")),
        Err(_) => Ok(None),
    }
}

fn run(stage: Stage, args: &Args) -> Result<u8, (u8, String)> {
    let input = |e: String| (INPUT_ERROR, e);
    let text = read_spec(args.spec.as_ref()).map_err(input)?;
    let spec = SystemSpec::from_json(&text).map_err(|e| input(e.to_string()))?;
    let tol = spec.tolerance(args.tol, env_tol().map_err(input)?).map_err(|e| input(e.to_string()))?;
    let report = run_pipeline(&spec, stage, &tol).map_err(|e| (e.exit_code() as u8, e.to_string()))?;

    let format = match args.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Text => Format::Text,
    };
    let body = emit(&report, format);
    match &args.out {
        Some(p) => std::fs::write(p, body).map_err(|e| input(format!("{}: {e}", p.display())))?,
        None => print!("{body}"),
    }

    let failed: Vec<_> = report.failed_checks().collect();
    for c in &failed {
        eprintln!("check failed: {} (residual {:e})", c.name, c.residual);
    }
    Ok(if failed.is_empty() { 0 } else { CHECK_FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = match &cli.command {
        Command::Check(a) => (Stage::Check, a),
        Command::Dsp(a) => (Stage::Dsp, a),
        Command::Physical(a) => (Stage::Physical, a),
        Command::Compare(a) => (Stage::Compare, a),
    };
    match run(stage, args) {
        Ok(code) => ExitCode::from(code),
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
