use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod compare;
mod config;
mod presets;
mod run;
mod sweep;

use config::{Overrides, ScenarioConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input files; exit status 2.
    Config(String),
    /// A trajectory overflowed; exit status 3.
    NonFinite(String),
    Other(anyhow::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::NonFinite(m) => write!(f, "integration diverged: {m}"),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonFinite(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "tricorr", version, about = "Third-order quadrature moments of the parametric oscillator: positive-P vs SED")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Number of stochastic paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integration step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Number of batches for the standard errors.
    #[arg(long, global = true)]
    batches: Option<usize>,
    /// Use the full-scale path counts of the scenario.
    #[arg(long, global = true)]
    full: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { config: PathBuf },
    /// Run a scenario once per value of one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: sweep::Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        /// Evaluate the analytic predictions only.
        #[arg(long)]
        analytic_only: bool,
    },
    /// Compare two moment CSVs on the same time grid.
    Compare { a: PathBuf, b: PathBuf },
    /// Reproduce a named figure or table.
    Preset {
        #[arg(value_enum)]
        name: presets::PresetName,
    },
    /// Print the couplings of the bundled crystals.
    Crystals,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            paths: self.paths,
            seed: self.seed,
            dt: self.dt,
            batches: self.batches,
            full: self.full,
        }
    }

    fn out_dir(&self, cfg: Option<&ScenarioConfig>, fallback: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| Path::new("out").join(fallback))
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { config } => {
            let mut cfg = ScenarioConfig::load(config)?;
            cfg.apply(&cli.overrides());
            let resolved = cfg.resolve()?;
            let dir = cli.out_dir(Some(&cfg), &cfg.name);
            let outcome = run::run_scenario(&resolved, &dir)?;
            for r in &outcome.runs {
                for p in r.intracavity.last().into_iter().chain(&r.external) {
                    println!(
                        "{} tau={}: {:.4e} +/- {:.1e}{}",
                        r.theory,
                        p.tau,
                        p.estimate.mean.re,
                        p.estimate.std_error,
                        p.analytic.map(|a| format!(" (analytic {a:.4e})")).unwrap_or_default()
                    );
                }
            }
            println!("results in {}", outcome.dir.display());
        }
        Command::Sweep {
            config,
            axis,
            values,
            analytic_only,
        } => {
            let cfg = ScenarioConfig::load(config)?;
            let dir = cli.out_dir(Some(&cfg), &format!("{}_sweep_{}", cfg.name, axis.name()));
            let rows = sweep::sweep(&cfg, *axis, values, &cli.overrides(), &dir, *analytic_only)?;
            println!("{} rows in {}", rows.len(), dir.join(format!("sweep_{}.csv", axis.name())).display());
        }
        Command::Compare { a, b } => {
            let report = compare::compare(&compare::Series::read_csv(a)?, &compare::Series::read_csv(b)?)?;
            let dir = cli.out_dir(None, "compare");
            run::create_dir(&dir)?;
            report.write(&dir)?;
            for line in report.summary() {
                println!("{line}");
            }
        }
        Command::Preset { name } => {
            let label = format!("{name:?}").to_lowercase();
            let dir = cli.out_dir(None, &label);
            for line in presets::run_preset(*name, &cli.overrides(), &dir)? {
                println!("{line}");
            }
            println!("results in {}", dir.display());
        }
        Command::Crystals => {
            println!("{:<10} {:>12} {:>12} {:>12}", "crystal", "G [1/s]", "Gamma [1/s]", "g");
            for p in tricorr_core::analytic::crystal_presets() {
                let c = tricorr_core::analytic::crystal_to_coupling(&p.spec()).map_err(|e| CliError::Other(e.into()))?;
                println!("{:<10} {:>12.4e} {:>12.4e} {:>12.4e}", p.name, c.big_g, c.big_gamma, c.g);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
