//! Fractional-step time loop for the lid-driven cavity.
//!
//! One step runs, in order: lid forcing, boundary enforcement,
//! semi-Lagrangian advection, boundary enforcement, pressure projection
//! (assemble, solve, correct) and a final boundary enforcement.

mod advection;
mod forces;
mod pressure;

pub use advection::{advect_face, solve_advection};
pub use forces::{apply_forces, enforce_boundaries};
pub use pressure::{
    apply_pressure_correction, assemble_pressure_system, solve_pressure_correction, PressureCache,
    PressureSystem, REFERENCE_CELL,
};

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, ScalarField, VelocityField};
use crate::precond::PreconditionerKind;
use crate::profile::{self, Regions};
use crate::solver::{PcgSettings, SolveStats};
use crate::Variant;

/// Every knob of a run that the numerical core needs.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Cells per side.
    pub n: usize,
    /// Cell edge length.
    pub h: f64,
    /// Time step (s).
    pub dt: f64,
    /// Simulated time (s).
    pub t_end: f64,
    /// Lid acceleration `g`, added as `g * dt` to the top-layer u faces each step.
    pub lid_accel: f64,
    /// Density `rho`.
    pub density: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: PreconditionerKind,
    pub variant: Variant,
    /// Edge length, in faces, of the advection tiles (optimized variant).
    pub tile: usize,
    /// Start each pressure solve from the previous pressure (optimized variant).
    pub warm_start: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 100,
            h: 1.0,
            dt: 0.4,
            t_end: 6.0,
            lid_accel: 1.0,
            density: 1.0,
            tol: 1e-6,
            max_iter: 1000,
            preconditioner: PreconditionerKind::Dic,
            variant: Variant::Baseline,
            tile: 8,
            warm_start: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("grid size must be at least 2"));
        }
        GridSpec::new(self.n, self.h)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig("time step must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig("end time must be non-negative"));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::InvalidConfig("density must be positive"));
        }
        if !self.lid_accel.is_finite() {
            return Err(Error::InvalidConfig("lid acceleration must be finite"));
        }
        if self.tile == 0 {
            return Err(Error::InvalidConfig("advection tile size must be positive"));
        }
        self.solver_settings().validate()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.h)
    }

    /// `round(t_end / dt)`.
    pub fn step_count(&self) -> usize {
        libm::round(self.t_end / self.dt) as usize
    }

    pub fn solver_settings(&self) -> PcgSettings {
        PcgSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            variant: self.variant,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub vel: VelocityField,
    pub p: ScalarField,
    /// Simulated time (s).
    pub t: f64,
    pub step: usize,
}

impl SimState {
    /// Fluid at rest under uniform unit pressure.
    pub fn initial(spec: GridSpec) -> Self {
        Self {
            vel: VelocityField::zeros(spec),
            p: ScalarField::filled(spec, 1.0),
            t: 0.0,
            step: 0,
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.vel.spec
    }
}

/// What one step did to the pressure system.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub solve: SolveStats,
    /// max |div v| right before the projection.
    pub divergence_before: f64,
    /// max |div v| after the projection, when divergence tracking is on.
    pub divergence_after: Option<f64>,
}

/// A configured run: state plus the caches that survive across steps.
#[derive(Clone, Debug)]
pub struct Simulation {
    cfg: SimConfig,
    state: SimState,
    cache: PressureCache,
    track_divergence: bool,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.grid()?;
        Ok(Self {
            state: SimState::initial(spec),
            cache: PressureCache::default(),
            cfg,
            track_divergence: false,
        })
    }

    /// Starts from an arbitrary state instead of the rest state.
    pub fn with_state(cfg: SimConfig, state: SimState) -> Result<Self> {
        cfg.validate()?;
        if state.spec() != cfg.grid()? || state.p.spec != state.spec() {
            return Err(Error::InvalidConfig("state grid does not match the configuration"));
        }
        Ok(Self {
            cfg,
            state,
            cache: PressureCache::default(),
            track_divergence: false,
        })
    }

    /// Also measure the post-projection divergence on every step.
    pub fn track_divergence(mut self, on: bool) -> Self {
        self.track_divergence = on;
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    pub fn step(&mut self, regions: &mut dyn Regions) -> Result<StepReport> {
        step(&mut self.state, &self.cfg, &mut self.cache, self.track_divergence, regions)
    }
}

/// Advances `state` by one time step.
pub fn step(
    state: &mut SimState,
    cfg: &SimConfig,
    cache: &mut PressureCache,
    track_divergence: bool,
    regions: &mut dyn Regions,
) -> Result<StepReport> {
    regions.enter(profile::APPLY_FORCES);
    apply_forces(state, cfg);
    enforce_boundaries(state);
    regions.exit(profile::APPLY_FORCES);

    regions.enter(profile::SOLVE_ADVECTION);
    state.vel = solve_advection(state, cfg);
    enforce_boundaries(state);
    regions.exit(profile::SOLVE_ADVECTION);

    regions.enter(profile::SOLVE_PRESSURE_CORRECTION);
    let solved = solve_pressure_correction(state, cfg, cache, regions);
    regions.exit(profile::SOLVE_PRESSURE_CORRECTION);
    let solve = solved?;
    if !solve.converged {
        log::warn!(
            "pressure solve did not converge at step {}: residual {:.3e} after {} iterations",
            state.step + 1,
            solve.final_residual_rel,
            solve.iterations
        );
    }
    let divergence_before = cache.divergence_max_abs();

    regions.enter(profile::APPLY_PRESSURE_CORRECTION);
    apply_pressure_correction(&mut state.vel, &state.p, cfg);
    regions.exit(profile::APPLY_PRESSURE_CORRECTION);

    let divergence_after = track_divergence.then(|| grid::divergence(&state.vel).max_abs());

    state.t += cfg.dt;
    state.step += 1;
    Ok(StepReport {
        solve,
        divergence_before,
        divergence_after,
    })
}
