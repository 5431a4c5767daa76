use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use wavint::cli::{self, OracleKind};

/// Wavenumber-integration sound propagation in horizontally stratified
/// fluid waveguides.
#[derive(Parser, Debug)]
#[command(name = "wavint", version, about)]
struct Args {
    /// Run configuration file (key/value text; see README for the grammar).
    #[arg(long)]
    config: PathBuf,

    /// Worker threads for the wavenumber sweep (default: hardware parallelism).
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory for result files.
    #[arg(long, default_value = "./out")]
    out: PathBuf,

    /// Also emit the analytic ideal-waveguide TL grid and its mean error.
    #[arg(long, value_parser = parse_oracle)]
    oracle: Option<OracleKind>,

    /// Suppress the stdout report.
    #[arg(long)]
    quiet: bool,
}

fn parse_oracle(s: &str) -> Result<OracleKind, String> {
    match s {
        "ideal-free" => Ok(OracleKind::IdealFree),
        "ideal-rigid" => Ok(OracleKind::IdealRigid),
        other => Err(format!(
            "unknown oracle `{other}` (ideal-free | ideal-rigid)"
        )),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();

    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot size thread pool: {e}");
            return ExitCode::from(3);
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match cli::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };

    match cli::run(&cfg, &args.out, args.oracle) {
        Ok(summary) => {
            if !args.quiet {
                print!("{}", cli::print_summary(&summary));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
