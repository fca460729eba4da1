use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dualadapt::harness::{self, Config, EXIT_OK, EXIT_RUNTIME, EXIT_VIOLATION};
use dualadapt::selftest;

/// Universal adaptive-regret learners (UMA, PAE) on synthetic loss sequences.
#[derive(Parser)]
#[command(name = "dualadapt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured learner on one scenario and write trajectories, regret tables and a summary.
    Run(Common),
    /// Run the grid in the config's [sweep] table and write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Cells evaluated in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-check interval bounds on trajectories stored by a previous `run`.
    Verify(Common),
    /// Fast internal consistency checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `scenario.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 1 when any interval bound is violated.
    #[arg(long)]
    strict: bool,
}

impl Common {
    fn load(&self) -> dualadapt::Result<Config> {
        let mut config = harness::load_config(&self.config)?;
        if let Some(seed) = self.seed {
            config = config.with_seed(seed);
        }
        if let Some(dir) = &self.out {
            config = config.with_output_dir(dir);
        }
        config.validate()?;
        Ok(config)
    }

    fn finish(&self, violations: usize) -> i32 {
        if violations > 0 {
            eprintln!("{violations} bound violation(s)");
            if self.strict {
                return EXIT_VIOLATION;
            }
        }
        EXIT_OK
    }
}

fn execute(command: Command) -> dualadapt::Result<i32> {
    match command {
        Command::Run(common) => {
            let config = common.load()?;
            let out = harness::run_experiment(&config)?;
            print!("{}", out.cell.summary_text());
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            Ok(common.finish(out.cell.violations()))
        }
        Command::Sweep { common, jobs } => {
            let config = common.load()?;
            let out = harness::sweep(&config, jobs)?;
            println!("{} rows, {} bound violation(s)", out.rows.len(), out.violations);
            println!("wrote {}", out.file.display());
            Ok(common.finish(out.violations))
        }
        Command::Verify(common) => {
            let config = common.load()?;
            let out = harness::verify(&config)?;
            print!("{}", out.summary_text());
            Ok(common.finish(out.violations()))
        }
        Command::Selftest => {
            let results = selftest::run_all();
            for r in &results {
                println!("{}  {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            Ok(if results.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_RUNTIME })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            harness::exit_code(&err)
        }
    };
    ExitCode::from(code as u8)
}
