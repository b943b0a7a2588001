//! Time loop with snapshot output and profiling.

use std::path::PathBuf;

use cfdscope_core::{profile, Regions, SimConfig, SimState, Simulation, StepReport, Variant};

use crate::bench::{Profiler, Report, ROOT};
use crate::error::{io_err, Result};
use crate::io::{snapshot_path, write_snapshot, WriteMode};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub sim: SimConfig,
    /// Directory for `snapshot_<step>.csv` files; `None` disables output.
    pub output_dir: Option<PathBuf>,
    pub write_mode: WriteMode,
    /// Also measure the post-projection divergence every step.
    pub track_divergence: bool,
}

impl RunConfig {
    /// No output, writer chosen by variant.
    pub fn new(sim: SimConfig) -> Self {
        let write_mode = match sim.variant {
            Variant::Baseline => WriteMode::Serial,
            Variant::Optimized => WriteMode::BufferedParallel,
        };
        Self {
            sim,
            output_dir: None,
            write_mode,
            track_divergence: false,
        }
    }

    pub fn with_output(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = Some(dir.into());
        self
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: SimState,
    pub steps: Vec<StepReport>,
    pub report: Report,
}

/// Runs `round(t_end / dt)` steps on the current rayon pool.
///
/// With output enabled, snapshot 0 holds the initial state and snapshot
/// `s` the state after step `s`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let mut sim = Simulation::new(cfg.sim.clone())?.track_divergence(cfg.track_divergence);
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut profiler = Profiler::new();
    let step_count = cfg.sim.step_count();
    let mut steps = Vec::with_capacity(step_count);

    profiler.enter(ROOT);
    let body = (|| -> Result<()> {
        output(cfg, sim.state(), &mut profiler)?;
        for _ in 0..step_count {
            let report = sim.step(&mut profiler)?;
            log::debug!(
                "step {}: {} iterations, residual {:.2e}, max |div| {:.3e}",
                sim.state().step,
                report.solve.iterations,
                report.solve.final_residual_rel,
                report.divergence_before
            );
            steps.push(report);
            output(cfg, sim.state(), &mut profiler)?;
        }
        Ok(())
    })();
    profiler.exit(ROOT);
    body?;

    Ok(RunOutcome {
        state: sim.into_state(),
        steps,
        report: profiler.finish(),
    })
}

fn output(cfg: &RunConfig, state: &SimState, regions: &mut dyn Regions) -> Result<()> {
    let Some(dir) = &cfg.output_dir else {
        return Ok(());
    };
    regions.enter(profile::WRITE_TO_FILE);
    let written = write_snapshot(state, &snapshot_path(dir, state.step), cfg.write_mode);
    regions.exit(profile::WRITE_TO_FILE);
    written
}
