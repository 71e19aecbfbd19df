use std::path::PathBuf;
use std::process::ExitCode;

use akflow::config::{self, Mode, RunConfig};
use akflow::driver::{self, EXIT_CONFIG, EXIT_OK};
use akflow::Error;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

/// Symplectic curvature flow and almost-Hermitian curvature flows on flat
/// tori and nilpotent Lie groups.
#[derive(Parser, Debug)]
#[command(name = "akflow", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Integrate a flow and write monitors, identity checks and snapshots.
    Run(RunArgs),
    /// Identity table on the presets and a grid refinement pair.
    Verify(RunArgs),
    /// Summarize a run directory.
    Report {
        dir: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// TOML config file; every key is optional.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set m=24 --set init=kahler`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (same as `--set output=DIR`).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn resolve(args: &RunArgs, verify: bool) -> akflow::Result<RunConfig> {
    let mut overrides = args.overrides.clone();
    if let Some(o) = &args.output {
        overrides.push(format!("output = {:?}", o.display().to_string()));
    }
    if verify {
        overrides.push("mode = \"verify\"".into());
    }
    let cfg = match &args.config {
        Some(p) => config::load_config(p, &overrides)?,
        None => config::parse_config("", &overrides)?,
    };
    if !verify && cfg.mode == Mode::Verify {
        return Err(Error::Config("use the verify subcommand for mode = \"verify\"".into()));
    }
    Ok(cfg)
}

fn configure_threads() -> akflow::Result<()> {
    let Ok(v) = std::env::var("AKFLOW_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("AKFLOW_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let defaults = RunConfig::default().echo();
    let help = format!(
        "Config defaults (TOML):\n\n{defaults}\nExit codes: 0 success, 1 configuration error, 2 runtime error or failed check, 3 blow-up detected.\nAKFLOW_THREADS caps the number of worker threads."
    );
    let cmd = Cli::command()
        .after_long_help(help.clone())
        .mut_subcommand("run", |c| c.after_long_help(help.clone()))
        .mut_subcommand("verify", |c| c.after_long_help(help.clone()));
    let cli = match cmd.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let code = match cli.cmd {
        Cmd::Run(a) => execute(resolve(&a, false)),
        Cmd::Verify(a) => execute(resolve(&a, true)),
        Cmd::Report { dir } => match driver::report(&dir) {
            Ok(r) => {
                print!("{r}");
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                driver::exit_code(&Err(e))
            }
        },
    };
    ExitCode::from(code as u8)
}

fn execute(cfg: akflow::Result<RunConfig>) -> i32 {
    let r = cfg.and_then(|c| driver::execute(&c).inspect(|_| println!("output: {}", c.output.display())));
    match &r {
        Ok(o) => {
            println!("steps: {}  t: {:.6}  checks: {} ({} failed)", o.steps, o.t, o.checks, o.failed_checks);
            if let Some(b) = &o.blow_up {
                println!("blow-up: {b}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    driver::exit_code(&r)
}
