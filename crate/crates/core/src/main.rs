use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mpdg::config::{CaseConfig, CASE_IDS};
use mpdg::harness::{output_dir, run_case, study_case, sweep_case};
use mpdg::verify::{run_plan, Plan};
use mpdg::Error;

#[derive(Parser)]
#[command(name = "mpdg", version, about = "Modified Patankar DG solver for reactive flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CaseArgs {
    /// One of: ode-linear, ode-nonlinear, euler1d-3species, euler2d-convergence, euler2d-diffraction.
    case: String,
    /// JSON parameter file; keys left out keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key.path=value`, applied after the config file and `--full-scale`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Finest mesh and longest final time for the flow cases.
    #[arg(long)]
    full_scale: bool,
    /// Root of the output tree.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// March one case and write snapshots, log and checkpoint.
    Run(CaseArgs),
    /// Convergence table of an ODE case.
    Study {
        #[command(flatten)]
        case: CaseArgs,
        /// Step sizes, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        ladder: Option<Vec<f64>>,
    },
    /// Fixed-step errors over the σ exponent `s`.
    SweepSigma {
        #[command(flatten)]
        case: CaseArgs,
        /// Exponents, comma separated.
        #[arg(long = "s", value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
    },
    /// Run the invariant suite.
    Verify {
        /// Also run the convergence tables and the flow cases.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = Plan::default().seed)]
        seed: u64,
        /// Random systems in the positivity and conservation suites.
        #[arg(long, default_value_t = Plan::default().instances)]
        instances: usize,
        /// Trials in the stage-solve and limiter suites.
        #[arg(long, default_value_t = Plan::default().trials)]
        trials: usize,
    },
    /// List the case ids.
    Cases,
}

fn load(args: &CaseArgs) -> mpdg::Result<CaseConfig> {
    let mut base = match &args.config {
        Some(path) => CaseConfig::load(path, Some(&args.case))?,
        None => CaseConfig::defaults(&args.case)?,
    };
    if base.id() != args.case {
        return Err(Error::Config(format!("{} describes `{}`, not `{}`", args.config.as_ref().unwrap().display(), base.id(), args.case)));
    }
    if args.full_scale {
        base.full_scale();
    }
    base.with_overrides(&args.overrides)
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) => ExitCode::from(2),
        _ => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Cases => {
            for id in CASE_IDS {
                println!("{id}");
            }
            Ok(())
        }
        Command::Run(args) => load(&args).and_then(|cfg| {
            let dir = output_dir(&args.out, cfg.id())?;
            println!("writing {}", dir.display());
            let summary = run_case(&cfg, &dir)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }),
        Command::Study { case, ladder } => load(&case).and_then(|cfg| {
            let dir = output_dir(&case.out, cfg.id())?;
            for t in study_case(&cfg, ladder, &dir)? {
                println!("{}{}", t.label, if t.is_monotone() { "" } else { "  (errors not monotone)" });
                for r in &t.rows {
                    println!("  {:<12.6e} {:<12.4e} {}", r.step, r.error, r.order.map(|p| format!("{p:.3}")).unwrap_or_default());
                }
            }
            println!("table written to {}", dir.join("table.csv").display());
            Ok(())
        }),
        Command::SweepSigma { case, values } => load(&case).and_then(|cfg| {
            let dir = output_dir(&case.out, cfg.id())?;
            for r in sweep_case(&cfg, values, &dir)? {
                println!("{:<6} s={:<5} error={:.4e} min={:.4e}", r.scheme, r.s, r.error, r.min_component);
            }
            println!("table written to {}", dir.join("table.csv").display());
            Ok(())
        }),
        Command::Verify { full, seed, instances, trials } => {
            let plan = Plan { full, seed, instances, trials, ..Plan::default() };
            let checks = run_plan(&plan, |c| println!("{c}"));
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} of {} criteria passed", checks.len() - failed, checks.len());
            if failed > 0 {
                return ExitCode::FAILURE;
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
