//! Command-line experiment runner for the `arcfem` solver.

pub mod config;
pub mod experiment;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, FieldConfig, MethodChoice};
use crate::experiment::{problem, run_experiment, write_field, Outputs};

/// Default level for `field` when no `--N` is given.
const FIELD_LEVEL: usize = 256;

#[derive(Debug, Parser)]
#[command(
    name = "arcfem",
    version,
    about = "Coupled surface/single-layer solver on an open arc"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergence sweep with tables, sampled solutions and diagnostics.
    Run(ExperimentArgs),
    /// Convergence tables only.
    Sweep(ExperimentArgs),
    /// Exterior potential on a grid for one level.
    Field(FieldArgs),
    /// Quadrature and assembly self-checks.
    Validate,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// ex1 (segment) or ex2 (semicircle).
    #[arg(value_name = "EXAMPLE")]
    pub positional_example: Option<String>,
    #[arg(long)]
    pub example: Option<String>,
    /// standard, enriched or both.
    #[arg(long)]
    pub method: Option<MethodChoice>,
    /// Comma-separated element counts, each double the previous.
    #[arg(long = "N", value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gauss points per piece and direction.
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Points of the log-weight rule.
    #[arg(long)]
    pub log_order: Option<usize>,
    /// Reserved.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write every assembled block as `i j value` triplets.
    #[arg(long)]
    pub dump_matrices: bool,
    /// Keep the end-node hat functions in the density space.
    #[arg(long)]
    pub psi_endpoint_hats: bool,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Half width of the square grid centred at the origin.
    #[arg(long, default_value_t = 2.0)]
    pub half_width: f64,
    /// Grid points per direction.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        match (&self.positional_example, &self.example) {
            (Some(a), Some(b)) if a != b => bail!("conflicting examples `{a}` and `{b}`"),
            (Some(e), _) | (None, Some(e)) => c.example = e.clone(),
            (None, None) => {}
        }
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(levels) = &self.levels {
            c.levels = levels.clone();
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if let Some(n) = self.quad_order {
            c.quadrature.gauss = Some(n);
        }
        if let Some(n) = self.log_order {
            c.quadrature.log = Some(n);
        }
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        c.dump_matrices |= self.dump_matrices;
        c.psi_endpoint_hats |= self.psi_endpoint_hats;
        c.validate()?;
        Ok(c)
    }
}

fn field(args: &FieldArgs, log: &mut dyn Write) -> Result<()> {
    let mut config = args.experiment.resolve()?;
    if args.experiment.levels.is_none() && args.experiment.config.is_none() {
        config.levels = vec![FIELD_LEVEL];
    }
    let method = *config.method.methods().last().expect("nonempty");
    let n = *config.levels.last().expect("validated");
    let grid = config
        .field
        .unwrap_or_else(|| FieldConfig::square(args.half_width, args.points));
    let sol = arcfem::solve(&arcfem::assemble_system(&problem(&config, method, n)?)?)?;
    std::fs::create_dir_all(&config.out)?;
    let count = write_field(&sol, &grid, &config.out.join("field.csv"))?;
    writeln!(
        log,
        "{} N={n}: {count} of {} points evaluated",
        method.as_str(),
        grid.nx * grid.ny
    )?;
    Ok(())
}

fn validate(log: &mut dyn Write) -> Result<bool> {
    let checks = arcfem::validation::oracle_suite()?;
    let mut ok = true;
    for c in &checks {
        ok &= c.passed();
        writeln!(
            log,
            "{} {}: deviation {:.3e}, tolerance {:.0e}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        )?;
    }
    Ok(ok)
}

pub fn execute(cli: &Cli, log: &mut dyn Write) -> Result<ExitCode> {
    match &cli.command {
        Command::Run(args) => {
            run_experiment(&args.resolve()?, Outputs::Full, log)?;
        }
        Command::Sweep(args) => {
            run_experiment(&args.resolve()?, Outputs::Tables, log)?;
        }
        Command::Field(args) => field(args, log)?,
        Command::Validate => {
            if !validate(log)? {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
