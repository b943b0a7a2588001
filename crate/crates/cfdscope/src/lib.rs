//! Snapshot I/O, region profiling, scaling sweeps and the command-line
//! driver around [`cfdscope_core`].

pub mod bench;
pub mod cli;
mod error;
pub mod io;
pub mod run;

pub use crate::error::{Error, Result};
pub use cfdscope_core as core;
