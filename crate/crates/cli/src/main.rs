//! Command-line front end: build bases, evaluate kernels and run the
//! verification suite.
//!
//! Exit codes: 0 on success, 1 when a selected check fails, 2 on
//! configuration, input or I/O errors.

mod cache;
mod config;
mod eval;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use dunkl_hermite::hermite::HermiteBasis;
use dunkl_hermite::kernels::Kernels;
use dunkl_hermite::reflection::RootSystem;
use dunkl_hermite::verify::{CheckName, VerificationReport};

use config::{Overrides, RunConfig};
use eval::Quantity;

#[derive(Debug, Parser)]
#[command(name = "dunkl-hermite", version, about = "Dunkl-Hermite bases, kernels and estimate checks")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Catalogue group: z2, z2^d, a2, b2 or i2(m).
    #[arg(long, global = true)]
    group: Option<String>,
    /// Multiplicities, one value for all orbits or one per orbit.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    kappa: Option<Vec<f64>>,
    /// Truncation degree of the basis.
    #[arg(long, global = true)]
    degree: Option<u32>,
    /// Comma-separated check names, `all`, or an empty string for none.
    #[arg(long, global = true)]
    checks: Option<String>,
    /// Seed of the random samples drawn by the checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use this basis file instead of building one.
    #[arg(long, global = true)]
    basis: Option<PathBuf>,
    /// Directory of cached bases.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the basis, write `basis.json` and print its constants.
    Basis,
    /// Evaluate a kernel at the points of a CSV file.
    Eval {
        #[arg(value_enum)]
        what: Quantity,
        /// CSV with columns `x1..xd,y1..yd`, plus `t` for the heat kernel
        /// and optionally `j` for the Riesz kernel.
        #[arg(long)]
        points: PathBuf,
    },
    /// Run the selected checks and write `report.json` and `report.csv`.
    Verify,
    /// Print the default configuration as JSON.
    DefaultConfig,
}

fn parse_checks(s: &str) -> Result<Vec<CheckName>> {
    match s.trim() {
        "" | "none" => Ok(Vec::new()),
        "all" => Ok(CheckName::ALL.to_vec()),
        list => list.split(',').map(|c| c.parse::<CheckName>().map_err(anyhow::Error::msg)).collect(),
    }
}

fn resolve(cli: &Cli) -> Result<(RunConfig, RootSystem)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(Overrides {
        group: cli.group.clone(),
        kappa: cli.kappa.clone(),
        degree: cli.degree,
        checks: cli.checks.as_deref().map(parse_checks).transpose()?,
        seed: cli.seed,
        out: cli.out.clone(),
    });
    if let Some(b) = &cli.basis {
        cfg.output.basis_file = Some(b.clone());
    }
    if let Some(c) = &cli.cache_dir {
        cfg.output.cache_dir = Some(c.clone());
    }
    let rs = cfg.validate()?;
    Ok((cfg, rs))
}

fn obtain_basis(cfg: &RunConfig, rs: &RootSystem) -> Result<HermiteBasis> {
    if let Some(path) = &cfg.output.basis_file {
        return cache::read_basis(path);
    }
    let dir = cfg.output.cache_dir.clone().unwrap_or_else(|| cfg.output.dir.join("cache"));
    let (basis, path, hit) = cache::load_or_build(rs, cfg.degree, cfg.arithmetic_for(rs), &dir)?;
    eprintln!("{} basis {}", if hit { "cached" } else { "built" }, path.display());
    Ok(basis)
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg.output.dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn cmd_basis(cfg: &RunConfig, rs: &RootSystem) -> Result<ExitCode> {
    let basis = obtain_basis(cfg, rs)?;
    let path = output_dir(cfg)?.join("basis.json");
    cache::write_basis(&basis, &path)?;
    let rs = basis.root_system();
    println!("group           {}", rs.label());
    println!("multiplicities  {:?}", rs.multiplicities());
    println!("dimension       {}", rs.dim());
    println!("degree          {}", basis.degree());
    println!("arithmetic      {:?}", basis.arithmetic());
    println!("basis size      {}", basis.len());
    println!("gamma           {}", basis.gamma());
    println!("c_kappa         {:.17e}", basis.c_kappa());
    println!("m_kappa         {:.17e}", basis.m_kappa());
    println!("basis file      {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(cfg: &RunConfig, rs: &RootSystem, what: Quantity, points: &Path) -> Result<ExitCode> {
    let rows = eval::read_points(points, rs.dim(), what)?;
    let basis = obtain_basis(cfg, rs)?;
    let kernels = Kernels::new(&basis, cfg.kernel.clone())?;
    let path = output_dir(cfg)?.join(format!("{}.csv", what.file_stem()));
    let flagged = eval::write_csv(&kernels, what, &rows, &path)?;
    println!("{} rows written to {} ({flagged} flagged)", rows.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(cfg: &RunConfig, rs: &RootSystem) -> Result<ExitCode> {
    let dir = output_dir(cfg)?;
    let report = if cfg.checks.is_empty() {
        VerificationReport { seed: cfg.seed, results: Vec::new() }
    } else {
        let basis = obtain_basis(cfg, rs)?;
        VerificationReport::run(&basis, &cfg.checks, &cfg.verify_config())
    };
    fs::write(dir.join("report.json"), report.to_json()?)?;
    fs::write(dir.join("report.csv"), report.to_csv()?)?;
    for r in &report.results {
        let status = serde_json::to_value(r.status)?;
        println!("{:<24} {}", r.check.as_str(), status.as_str().unwrap_or_default());
    }
    println!("report written to {}", dir.join("report.json").display());
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::DefaultConfig => {
            println!("{}", serde_json::to_string_pretty(&RunConfig::default())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Basis => {
            let (cfg, rs) = resolve(&cli)?;
            cmd_basis(&cfg, &rs)
        }
        Command::Eval { what, points } => {
            let (cfg, rs) = resolve(&cli)?;
            cmd_eval(&cfg, &rs, *what, points)
        }
        Command::Verify => {
            let (cfg, rs) = resolve(&cli)?;
            cmd_verify(&cfg, &rs)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
