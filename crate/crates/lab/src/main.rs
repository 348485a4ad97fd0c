use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oscsq::{run, RunConfig, Study};

#[derive(Parser)]
#[command(name = "oscsq", version, about = "Convergence studies for reaction-diffusion on oscillating domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study; exits 0 iff every verdict passes.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the study named in the config.
        #[arg(long, value_enum)]
        study: Option<Study>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write the assembled matrices at one epsilon in coordinate format.
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, study, out, seed, threads } => RunConfig::load(&config).and_then(|mut cfg| {
            cfg.study = study.unwrap_or(cfg.study);
            cfg.output_dir = out.unwrap_or(cfg.output_dir);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.threads = threads.or(cfg.threads);
            run(&cfg).map(|s| {
                for r in &s.reports {
                    println!("{}", r.line());
                }
                s.passed
            })
        }),
        Command::Export { config, epsilon, out } => RunConfig::load(&config)
            .and_then(|cfg| oscsq::run::export_matrices(&cfg, epsilon, &out))
            .map(|paths| {
                for p in paths {
                    println!("{}", p.display());
                }
                true
            }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
