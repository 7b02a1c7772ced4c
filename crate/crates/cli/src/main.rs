use std::path::PathBuf;
use std::process::ExitCode;

use chaintrial_cli::config::{schema, RunConfig, ScenarioKind};
use chaintrial_cli::error::{CliError, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
use chaintrial_cli::run::run;
use chaintrial_cli::verify::{verify, Suite, VerifyOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chaintrial", version, about = "Run trial-sampling scenarios and the acceptance suite")]
struct Cli {
    /// Worker threads; defaults to the logical core count.
    #[arg(long, global = true, env = "CHAINTRIAL_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario configuration.
    Run(RunArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
    /// Print the JSON schema of a scenario configuration.
    Schema {
        #[arg(value_enum)]
        scenario: ScenarioKind,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (also accepted positionally).
    #[arg(long = "config", value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    positional: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum, default_value = "fast")]
    suite: Suite,
    /// Only these criteria (repeatable).
    #[arg(long = "only", value_name = "N")]
    only: Vec<u32>,
    /// Write the machine-readable report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    #[arg(long)]
    tol_algebra: Option<f64>,
    #[arg(long)]
    tol_prob: Option<f64>,
    #[arg(long)]
    tol_compat: Option<f64>,
    #[arg(long)]
    tol_det: Option<f64>,
}

fn run_command(a: RunArgs) -> Result<(), CliError> {
    let path = a
        .config
        .or(a.positional)
        .ok_or_else(|| CliError::Invalid("no configuration given".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    let out = cfg.output_dir.clone();
    let report = run(&cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&report.summary["results"])?);
    eprintln!("wrote {}", out.join("summary.json").display());
    Ok(())
}

fn verify_command(a: VerifyArgs) -> Result<(), CliError> {
    let mut opts = VerifyOptions::new(a.suite);
    for (slot, v) in [
        (&mut opts.tol.algebra, a.tol_algebra),
        (&mut opts.tol.prob, a.tol_prob),
        (&mut opts.tol.compat, a.tol_compat),
        (&mut opts.tol.det, a.tol_det),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(bad) = a.only.iter().find(|&&n| !(1..=12).contains(&n)) {
        return Err(CliError::Invalid(format!("no criterion {bad}")));
    }
    opts.only = a.only;
    let results = verify(&opts);
    for r in &results {
        eprintln!("{}", r.line());
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| format!("{} ({})", r.id, r.name)).collect();
    let report = serde_json::json!({
        "suite": a.suite,
        "tolerances": opts.tol,
        "passed": failed.is_empty(),
        "failed": failed,
        "criteria": results,
    });
    let text = serde_json::to_string_pretty(&report)?;
    match a.json {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CriteriaFailed(failed))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    }
    let result = match cli.command {
        Command::Run(a) => run_command(a),
        Command::Verify(a) => verify_command(a),
        Command::Schema { scenario } => {
            println!("{}", serde_json::to_string_pretty(&schema(scenario)).expect("schema serializes"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_VALIDATION || code == EXIT_NUMERICAL);
            ExitCode::from(code as u8)
        }
    }
}
