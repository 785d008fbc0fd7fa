use std::path::PathBuf;
use std::process::ExitCode;

use chirpdnp_cli::{check, execute, ExperimentKind, Invocation, Overrides, RunStatus};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chirpdnp", version, about = "Chirped-pulse DNP simulations for an electron-nucleus pair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-electron chirp inversion, averaged over packets.
    Chirp(RunArgs),
    /// One sweep through both SE conditions of a pair (ISE or DSE).
    Ise(RunArgs),
    /// Weighted sum of pair sweeps over an EPR line.
    EprLine(RunArgs),
    /// Repeated sweeps through the DQ condition only.
    Ase(RunArgs),
    /// ISE classification over a parameter grid.
    Scan(RunArgs),
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Integration step in µs.
    #[arg(long)]
    dt: Option<f64>,
    /// Transverse relaxation time in µs.
    #[arg(long)]
    t2: Option<f64>,
    /// Seed for sampled EPR lines.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep every n-th step in trajectory outputs.
    #[arg(long)]
    stride: Option<usize>,
}

fn run(kind: ExperimentKind, a: RunArgs) -> ExitCode {
    let inv = Invocation {
        kind,
        config: a.config,
        out_dir: a.out,
        overrides: Overrides {
            dt: a.dt,
            t2: a.t2,
            seed: a.seed,
            stride: a.stride,
        },
    };
    let m = execute(&inv);
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    match (&m.status, &m.error) {
        (RunStatus::Ok, _) => {
            println!("{}: done in {:.2} s, dt {} µs", kind.name(), m.wall_time_s, m.dt_used.unwrap_or(f64::NAN));
            for o in &m.outputs {
                println!("  {o}");
            }
        }
        (_, e) => eprintln!("error: {}", e.as_deref().unwrap_or("unknown failure")),
    }
    ExitCode::from(m.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Chirp(a) => run(ExperimentKind::Chirp, a),
        Command::Ise(a) => run(ExperimentKind::Ise, a),
        Command::EprLine(a) => run(ExperimentKind::EprLine, a),
        Command::Ase(a) => run(ExperimentKind::Ase, a),
        Command::Scan(a) => run(ExperimentKind::Scan, a),
        Command::Validate { config } => match check(None, &config) {
            Ok(v) => {
                println!("{}: ok ({} run, prefix {})", config.display(), v.kind.name(), v.prefix);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
