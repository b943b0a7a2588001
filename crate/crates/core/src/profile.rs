//! Hooks for region timing.
//!
//! The core cannot read a clock, so it only announces region boundaries. A
//! profiler living on the std side implements [`Regions`] and does the
//! timing. Region names match the hotspot report labels.

pub const APPLY_FORCES: &str = "applyForces";
pub const SOLVE_ADVECTION: &str = "solveAdvection";
pub const SOLVE_PRESSURE_CORRECTION: &str = "solvePressureCorrection";
pub const PCG: &str = "pcg";
pub const PRECONDITION: &str = "precondition";
pub const SPMV: &str = "spmv";
pub const DOT: &str = "dot";
pub const OPERATOR_ADD: &str = "operator+";
pub const OPERATOR_MUL: &str = "operator*";
pub const MULTIPLY_ADD_INPLACE: &str = "multiply_add_inplace";
pub const APPLY_PRESSURE_CORRECTION: &str = "applyPressureCorrection";
pub const WRITE_TO_FILE: &str = "write_to_file";

/// Receiver of scoped region events. Calls must nest.
pub trait Regions {
    fn enter(&mut self, name: &'static str);
    fn exit(&mut self, name: &'static str);
}

/// Discards every event.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoRegions;

impl Regions for NoRegions {
    #[inline]
    fn enter(&mut self, _name: &'static str) {}
    #[inline]
    fn exit(&mut self, _name: &'static str) {}
}

impl<R: Regions + ?Sized> Regions for &mut R {
    #[inline]
    fn enter(&mut self, name: &'static str) {
        (**self).enter(name)
    }
    #[inline]
    fn exit(&mut self, name: &'static str) {
        (**self).exit(name)
    }
}

/// Runs `f` bracketed by `enter`/`exit` on a trait object.
#[inline]
pub(crate) fn timed<T>(regions: &mut dyn Regions, name: &'static str, f: impl FnOnce() -> T) -> T {
    regions.enter(name);
    let out = f();
    regions.exit(name);
    out
}
