use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use predmatch::cli::{self, OutputFormat, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "predmatch",
    version,
    about = "Predictive probability matching priors: residuals, matching-prior construction, and Monte Carlo coverage checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Random seed for stochastic tasks.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to machine parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory for report files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Report format: csv, json, or both.
    #[arg(long, global = true, default_value = "both")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config (TOML).
    Run { config: PathBuf },
    /// Run the full verification suite and write the manifest.
    Verify {
        /// Scale factor on Monte Carlo replicate counts.
        #[arg(long, default_value_t = 1.0)]
        mc_scale: f64,
        /// Scale factor on every tolerance (negative-control hook).
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// List the built-in families.
    ListFamilies,
    /// Show one family in detail.
    Describe { family: String },
}

fn main() -> ExitCode {
    let args = Cli::parse();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        pool = pool.num_threads(w);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("failed to build worker pool: {e}");
            return ExitCode::FAILURE;
        }
    };

    let format = match OutputFormat::parse(&args.format) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };

    pool.install(|| match args.command {
        Command::Run { config } => match cli::run(&config, &args.out_dir, format, args.seed) {
            Ok(out) => {
                print!("{}", out.summary);
                for f in &out.files {
                    println!("wrote {}", f.display());
                }
                if out.ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::FAILURE
            }
        },
        Command::Verify {
            mc_scale,
            tolerance_scale,
        } => {
            let opts = VerifyOptions {
                seed: args.seed.unwrap_or_else(|| VerifyOptions::default().seed),
                mc_scale,
                tolerance_scale,
            };
            match cli::verify_to_dir(&opts, &args.out_dir) {
                Ok((manifest, path)) => {
                    print!("{}", cli::render_manifest(&manifest));
                    println!("wrote {}", path.display());
                    if manifest.all_pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::ListFamilies => {
            print!("{}", cli::list_families());
            ExitCode::SUCCESS
        }
        Command::Describe { family } => match cli::describe(&family) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::FAILURE
            }
        },
    })
}
