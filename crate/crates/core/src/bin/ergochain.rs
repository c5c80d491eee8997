use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ergochain::counterexample::Mode;
use ergochain::runner::{render_builtins, run, Overrides, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "ergochain",
    version,
    about = "Monte Carlo ergodicity diagnostics for Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Worker threads (0 = all cores); never changes the output.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Counterexample mode override.
        #[arg(long, value_parser = ["patched", "literal"])]
        mode: Option<String>,
        #[arg(long)]
        p2_offset: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in kernels and diagnostics.
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match cli.command {
        Command::List => {
            print!("{}", render_builtins());
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            threads,
            output,
            mode,
            p2_offset,
            seed,
        } => {
            let overrides = Overrides {
                threads,
                output,
                mode: mode.map(|m| m.parse::<Mode>().expect("validated by clap")),
                p2_offset,
                seed,
            };
            match run(&config, &overrides) {
                Ok(outcome) => {
                    let r = &outcome.report;
                    let stat = r.statistic.map(|s| {
                        format!(" statistic={} [{}, {}]", s.estimate, s.ci_low, s.ci_high)
                    });
                    println!(
                        "{} {}{}",
                        r.condition_name,
                        r.verdict,
                        stat.unwrap_or_default()
                    );
                    println!("artifacts: {}", outcome.output_dir.display());
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("ergochain: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
