//! Batch CLI: validate a scenario, solve it into CSV fronts, or emit
//! plot-ready staircase data from an existing result set.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mobility_codesign::scenario::{run_plotdata, run_solve, run_validate, RunOptions};

#[derive(Parser)]
#[command(name = "mobility-codesign", version, about = "Pareto co-design of intermodal mobility systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for design-point evaluation (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Dump each design point's LP in text interchange format.
    #[arg(long, global = true)]
    dump_lp: bool,

    /// CO2 price for the monetized 2D front, $/kg (default 40).
    #[arg(long, global = true)]
    emission_price: Option<f64>,

    /// Operating hours per month for cost/emission scaling (default 730).
    #[arg(long, global = true)]
    hours_per_month: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario config, its files, and its grids without solving.
    Validate { config: PathBuf },
    /// Evaluate the full design grid and write fronts, logs, and a manifest.
    Solve { config: PathBuf },
    /// Emit step-plot coordinates for a solved scenario's 2D front.
    PlotData { results_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        jobs: cli.jobs,
        dump_lp: cli.dump_lp,
        emission_price_usd_per_kg: cli.emission_price,
        hours_per_month: cli.hours_per_month,
    };
    let result = match &cli.command {
        Command::Validate { config } => run_validate(config, &opts).map(|report| {
            println!("{report}");
        }),
        Command::Solve { config } => run_solve(config, &opts).map(|summary| {
            println!(
                "solved {}/{} design points; front3d {} rows, front2d {} rows",
                summary.points_solved,
                summary.points_total,
                summary.front3d_len,
                summary.front2d_len,
            );
            println!("results in {}", summary.output_dir.display());
            println!("input hash {}", summary.hash);
        }),
        Command::PlotData { results_dir } => run_plotdata(results_dir).map(|data| {
            print!("{data}");
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
