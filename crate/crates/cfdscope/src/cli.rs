//! Command-line interface.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use cfdscope_core::{PreconditionerKind, SimConfig, Variant};

use crate::bench::{self, Report};
use crate::run::{run, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PreconditionerArg {
    Dic,
    Jacobi,
}

impl From<PreconditionerArg> for PreconditionerKind {
    fn from(p: PreconditionerArg) -> Self {
        match p {
            PreconditionerArg::Dic => PreconditionerKind::Dic,
            PreconditionerArg::Jacobi => PreconditionerKind::Jacobi,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Baseline,
    Optimized,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Baseline => Variant::Baseline,
            VariantArg::Optimized => Variant::Optimized,
        }
    }
}

/// Lid-driven cavity mini-app.
#[derive(Clone, Debug, Parser)]
#[command(name = "cfdscope", version, about)]
pub struct Cli {
    /// Cells per side of the cubic cavity.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    pub size: u64,

    /// Time step in seconds.
    #[arg(long, default_value_t = 0.4, value_parser = positive)]
    pub dt: f64,

    /// Simulated time in seconds.
    #[arg(long, default_value_t = 6.0, value_parser = non_negative)]
    pub end_time: f64,

    /// Lid acceleration.
    #[arg(long, default_value_t = 1.0, value_parser = finite, allow_hyphen_values = true)]
    pub lid_accel: f64,

    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub density: f64,

    /// Relative residual tolerance of the pressure solve.
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub tol: f64,

    /// Iteration cap of the pressure solve.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,

    /// Defaults to dic for the baseline and jacobi for the optimized variant.
    #[arg(long, value_enum)]
    pub preconditioner: Option<PreconditionerArg>,

    #[arg(long, value_enum, default_value_t = VariantArg::Baseline)]
    pub variant: VariantArg,

    /// Worker threads; defaults to one per core.
    #[arg(long, env = "CFDSCOPE_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    #[arg(long, default_value = "output")]
    pub output_dir: PathBuf,

    /// Do not write snapshots.
    #[arg(long)]
    pub no_output: bool,

    /// Print the hotspot report after the run.
    #[arg(long)]
    pub profile: bool,

    /// Save the hotspot report as CSV.
    #[arg(long)]
    pub report_file: Option<PathBuf>,

    /// Compare this run's hotspot report against a saved one.
    #[arg(long)]
    pub compare_report: Option<PathBuf>,

    /// Run once per thread count (comma separated) and emit `threads,region,seconds`.
    #[arg(long, value_delimiter = ',', num_args = 1.., value_parser = clap::value_parser!(u64).range(1..))]
    pub scaling_sweep: Option<Vec<u64>>,

    /// Where to write the sweep CSV; stdout if omitted.
    #[arg(long)]
    pub scaling_out: Option<PathBuf>,

    /// Advection tile edge (optimized variant).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub tile_size: u64,

    /// Start each pressure solve from the previous pressure (optimized variant).
    #[arg(long)]
    pub warm_start: bool,

    #[arg(long, default_value = "info")]
    pub log_level: log::LevelFilter,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))
}

fn finite(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must be positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` must not be negative"))
    }
}

impl Cli {
    pub fn sim_config(&self) -> SimConfig {
        let variant = Variant::from(self.variant);
        SimConfig {
            n: self.size as usize,
            dt: self.dt,
            t_end: self.end_time,
            lid_accel: self.lid_accel,
            density: self.density,
            tol: self.tol,
            max_iter: self.max_iters as usize,
            preconditioner: self.preconditioner.map_or(variant.default_preconditioner(), Into::into),
            variant,
            tile: self.tile_size as usize,
            warm_start: self.warm_start,
            ..SimConfig::default()
        }
    }

    pub fn run_config(&self) -> RunConfig {
        let cfg = RunConfig::new(self.sim_config());
        if self.no_output {
            cfg
        } else {
            cfg.with_output(&self.output_dir)
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
            .map(|t| t as usize)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// Runs whatever the arguments ask for, printing to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = cli.run_config();
    cfg.sim.validate()?;

    if let Some(counts) = &cli.scaling_sweep {
        let counts: Vec<usize> = counts.iter().map(|&c| c as usize).collect();
        let rows = bench::scaling_sweep(&cfg, &counts)?;
        match &cli.scaling_out {
            Some(path) => {
                let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                bench::write_scaling_csv(&rows, file).with_context(|| format!("writing {}", path.display()))?;
            }
            None => bench::write_scaling_csv(&rows, &mut *out)?,
        }
        return Ok(());
    }

    let threads = cli.threads();
    log::info!(
        "n={} dt={} t_end={} variant={} preconditioner={} threads={}",
        cfg.sim.n,
        cfg.sim.dt,
        cfg.sim.t_end,
        cfg.sim.variant.as_str(),
        cfg.sim.preconditioner.as_str(),
        threads
    );
    let outcome = bench::with_threads(threads, || run(&cfg))?;

    let iterations: usize = outcome.steps.iter().map(|s| s.solve.iterations).sum();
    writeln!(
        out,
        "{} steps to t = {} s, {} pressure iterations, max |v| = {:.6}",
        outcome.state.step,
        outcome.state.t,
        iterations,
        outcome.state.vel.max_abs()
    )?;
    if let Some(dir) = &cfg.output_dir {
        writeln!(out, "snapshots in {}", dir.display())?;
    }
    if cli.profile {
        write!(out, "\n{}", outcome.report.to_table())?;
    }
    if let Some(path) = &cli.report_file {
        outcome.report.save(path)?;
    }
    if let Some(path) = &cli.compare_report {
        let previous = Report::load(path)?;
        write!(out, "\n{}", bench::comparison_table(&bench::compare(&previous, &outcome.report)))?;
    }
    Ok(())
}
