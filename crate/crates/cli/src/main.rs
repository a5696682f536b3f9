use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nlslab::{load_config, run_experiment, Mode};

/// Run an NLS experiment described by a TOML configuration.
#[derive(Debug, Parser)]
#[command(name = "nlslab", version)]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    /// Output root; overrides NLSLAB_OUT and the config's output.directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for random initial data.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Box<dyn std::error::Error>> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    let mut cfg = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let root = cli
        .out
        .or_else(|| std::env::var_os("NLSLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.directory.clone());

    let report = run_experiment(&cfg, cli.mode, &root)?;
    // a closed stdout must not turn a finished run into a failure
    let mut out = std::io::stdout().lock();
    for c in &report.checks {
        let verdict = if c.pass { "pass" } else { "FAIL" };
        let _ = writeln!(out, "{verdict}  {} = {:e} (threshold {:e})", c.name, c.value, c.threshold);
    }
    if let Some(t) = report.summary.get("truncation").filter(|t| !t.is_null()) {
        eprintln!("run aborted: {t}");
    }
    let _ = writeln!(out, "artifacts in {}", report.dir.display());
    Ok(report.exit_code() as u8)
}
