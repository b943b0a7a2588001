//! Numerical core of the cfdscope lid-driven cavity mini-app.
//!
//! The crate is `no_std` + `alloc`. Enabling the `parallel` feature (on by
//! default) pulls in `std` and rayon and turns the data-parallel kernels into
//! worksharing loops that run on whatever rayon pool is current.
//!
//! Two code paths coexist on purpose. [`Variant::Baseline`] keeps the
//! allocating vector operators, full CSR storage, a rebuild-every-step
//! pressure assembly and a serial dot product. [`Variant::Optimized`] swaps in
//! symmetric storage with a cached pattern, fused in-place updates, a
//! parallel reduction and cache-blocked advection.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
mod par;

pub mod grid;
pub mod precond;
pub mod profile;
pub mod sim;
pub mod solver;
pub mod sparse;

pub use crate::error::{Error, Result};
pub use crate::grid::{GridSpec, ScalarField, VelocityField};
pub use crate::precond::{Preconditioner, PreconditionerKind};
pub use crate::profile::{NoRegions, Regions};
pub use crate::sim::{SimConfig, SimState, Simulation, StepReport};
pub use crate::solver::{PcgSettings, SolveStats};
pub use crate::sparse::{CsrMatrix, LinearOperator, SymCsrMatrix};

/// Which family of kernels a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    /// Allocating operators, full CSR, serial DIC.
    #[default]
    Baseline,
    /// In-place fused operators, symmetric CSR, parallel Jacobi.
    Optimized,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Optimized => "optimized",
        }
    }

    /// Preconditioner the variant uses when none is requested explicitly.
    pub fn default_preconditioner(self) -> PreconditionerKind {
        match self {
            Variant::Baseline => PreconditionerKind::Dic,
            Variant::Optimized => PreconditionerKind::Jacobi,
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "optimized" => Ok(Variant::Optimized),
            _ => Err(Error::InvalidConfig("variant must be `baseline` or `optimized`")),
        }
    }
}
