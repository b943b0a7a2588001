//! Pressure projection.
//!
//! The Poisson operator is the 7-point negative Laplacian with homogeneous
//! Neumann walls, which is what the zero wall-normal face velocities imply:
//! a cell with `m` neighbors gets `m / h^2` on the diagonal and `-1 / h^2`
//! per neighbor. That operator has the constants in its null space, so the
//! reference cell additionally carries a Dirichlet tie (`+1 / h^2` on its
//! diagonal). Because the right-hand side sums to zero, the tie pins the
//! reference pressure to zero and leaves the projected field unchanged,
//! while the matrix becomes symmetric positive definite.

use alloc::vec::Vec;

use crate::error::Result;
use crate::grid::{self, GridSpec, VelocityField};
use crate::par;
use crate::precond::{MatrixRef, Preconditioner};
use crate::profile::Regions;
use crate::sim::{SimConfig, SimState};
use crate::solver::{pcg, SolveStats};
use crate::sparse::{CsrMatrix, LinearOperator, SymCsrMatrix};
use crate::Variant;

/// Cell whose pressure is tied to zero.
pub const REFERENCE_CELL: usize = 0;

/// Storage reused across time steps.
#[derive(Clone, Debug, Default)]
pub struct PressureCache {
    full: Option<CsrMatrix>,
    sym: Option<SymCsrMatrix>,
    rhs: Vec<f64>,
    div: Vec<f64>,
    assemblies: usize,
    pattern_builds: usize,
}

impl PressureCache {
    /// max |div v| of the field the last system was assembled from.
    pub fn divergence_max_abs(&self) -> f64 {
        self.div.iter().fold(0.0_f64, |m, d| m.max(d.abs()))
    }

    /// Times a system was assembled.
    pub fn assemblies(&self) -> usize {
        self.assemblies
    }

    /// Times the sparsity pattern was built from scratch.
    pub fn pattern_builds(&self) -> usize {
        self.pattern_builds
    }
}

/// Assembled `A p = b` borrowed from the cache.
#[derive(Clone, Copy, Debug)]
pub struct PressureSystem<'a> {
    pub matrix: MatrixRef<'a>,
    pub rhs: &'a [f64],
}

impl<'a> PressureSystem<'a> {
    pub fn operator(&self) -> &'a dyn LinearOperator {
        match self.matrix {
            MatrixRef::Full(m) => m,
            MatrixRef::Sym(s) => s,
        }
    }
}

#[inline]
fn diagonal_value(spec: &GridSpec, r: usize) -> f64 {
    let n = spec.n();
    let (i, j, k) = spec.cell_coords(r);
    let interior = |c: usize| (c > 0) as usize + (c + 1 < n) as usize;
    let neighbors = interior(i) + interior(j) + interior(k);
    let tie = (r == REFERENCE_CELL) as usize;
    (neighbors + tie) as f64 / (spec.h() * spec.h())
}

/// Full CSR form of the pressure operator, built row by row.
pub fn poisson_matrix(spec: &GridSpec) -> CsrMatrix {
    let n = spec.n();
    let cells = spec.cell_count();
    let off = -1.0 / (spec.h() * spec.h());
    let mut row_ptr = Vec::with_capacity(cells + 1);
    let mut col_idx = Vec::with_capacity(7 * cells);
    let mut values = Vec::with_capacity(7 * cells);
    row_ptr.push(0);
    for r in 0..cells {
        let (i, j, k) = spec.cell_coords(r);
        let mut push = |c: usize, v: f64| {
            col_idx.push(c);
            values.push(v);
        };
        if k > 0 {
            push(r - n * n, off);
        }
        if j > 0 {
            push(r - n, off);
        }
        if i > 0 {
            push(r - 1, off);
        }
        push(r, diagonal_value(spec, r));
        if i + 1 < n {
            push(r + 1, off);
        }
        if j + 1 < n {
            push(r + n, off);
        }
        if k + 1 < n {
            push(r + n * n, off);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::new(cells, cells, row_ptr, col_idx, values).expect("stencil assembly yields valid CSR")
}

/// Diagonal + upper-triangle form of the pressure operator.
pub fn poisson_matrix_sym(spec: &GridSpec) -> SymCsrMatrix {
    let n = spec.n();
    let cells = spec.cell_count();
    let mut row_ptr = Vec::with_capacity(cells + 1);
    let mut col_idx = Vec::with_capacity(3 * cells);
    row_ptr.push(0);
    for r in 0..cells {
        let (i, j, k) = spec.cell_coords(r);
        if i + 1 < n {
            col_idx.push(r + 1);
        }
        if j + 1 < n {
            col_idx.push(r + n);
        }
        if k + 1 < n {
            col_idx.push(r + n * n);
        }
        row_ptr.push(col_idx.len());
    }
    let values = alloc::vec![0.0; col_idx.len()];
    let upper = CsrMatrix::new(cells, cells, row_ptr, col_idx, values).expect("stencil pattern yields valid CSR");
    let mut sym = SymCsrMatrix::new(alloc::vec![0.0; cells], upper).expect("pattern is strictly upper");
    refresh_values(&mut sym, spec);
    sym
}

/// Rewrites the values of a cached symmetric pattern in parallel.
fn refresh_values(sym: &mut SymCsrMatrix, spec: &GridSpec) {
    let off = -1.0 / (spec.h() * spec.h());
    par::fill_indexed(sym.diag_mut(), |r| diagonal_value(spec, r));
    par::fill_indexed(sym.upper_values_mut(), |_| off);
}

/// Builds `A` and `b = -(rho / dt) div v` for the current velocity.
///
/// The baseline variant rebuilds a full CSR matrix every call. The optimized
/// variant builds the symmetric pattern once and afterwards only refreshes
/// its values.
pub fn assemble_pressure_system<'c>(
    state: &SimState,
    cfg: &SimConfig,
    cache: &'c mut PressureCache,
) -> PressureSystem<'c> {
    let spec = state.spec();
    let cells = spec.cell_count();
    cache.div.resize(cells, 0.0);
    cache.rhs.resize(cells, 0.0);
    grid::divergence_into(&state.vel, &mut cache.div);
    let scale = -cfg.density / cfg.dt;
    cache.assemblies += 1;

    match cfg.variant {
        Variant::Baseline => {
            for (b, d) in cache.rhs.iter_mut().zip(&cache.div) {
                *b = scale * d;
            }
            cache.full = Some(poisson_matrix(&spec));
            cache.pattern_builds += 1;
            PressureSystem {
                matrix: MatrixRef::Full(cache.full.as_ref().expect("just assembled")),
                rhs: &cache.rhs,
            }
        }
        Variant::Optimized => {
            let div = &cache.div;
            par::fill_indexed(&mut cache.rhs, |r| scale * div[r]);
            match cache.sym.as_mut() {
                Some(sym) if sym.dim() == cells => refresh_values(sym, &spec),
                _ => {
                    cache.sym = Some(poisson_matrix_sym(&spec));
                    cache.pattern_builds += 1;
                }
            }
            PressureSystem {
                matrix: MatrixRef::Sym(cache.sym.as_ref().expect("pattern cached")),
                rhs: &cache.rhs,
            }
        }
    }
}

/// Assembles and solves the pressure system, storing the result in `state.p`.
pub fn solve_pressure_correction(
    state: &mut SimState,
    cfg: &SimConfig,
    cache: &mut PressureCache,
    regions: &mut dyn Regions,
) -> Result<SolveStats> {
    let system = assemble_pressure_system(state, cfg, cache);
    let precond = Preconditioner::build(cfg.preconditioner, system.matrix)?;
    let x0 = if cfg.warm_start && cfg.variant == Variant::Optimized {
        state.p.data.clone()
    } else {
        alloc::vec![0.0; system.rhs.len()]
    };
    let (p, stats) = pcg(
        system.operator(),
        system.rhs,
        &x0,
        &precond,
        &cfg.solver_settings(),
        regions,
    )?;
    state.p.data = p;
    Ok(stats)
}

/// Subtracts `(dt / rho) grad p` on interior faces, then re-zeroes the walls.
pub fn apply_pressure_correction(vel: &mut VelocityField, p: &grid::ScalarField, cfg: &SimConfig) {
    let spec = vel.spec;
    let n = spec.n();
    let scale = cfg.dt / (cfg.density * spec.h());
    let p = &p.data;

    par::for_each_chunk(&mut vel.u, (n + 1) * n, |k, plane| {
        for j in 0..n {
            let row = n * (j + n * k);
            for i in 1..n {
                plane[i + (n + 1) * j] -= scale * (p[row + i] - p[row + i - 1]);
            }
        }
    });
    par::for_each_chunk(&mut vel.v, n * (n + 1), |k, plane| {
        for j in 1..n {
            for i in 0..n {
                let c = i + n * (j + n * k);
                plane[i + n * j] -= scale * (p[c] - p[c - n]);
            }
        }
    });
    par::for_each_chunk(&mut vel.w, n * n, |k, plane| {
        if k == 0 || k == n {
            return;
        }
        for (idx, w) in plane.iter_mut().enumerate() {
            let c = idx + n * n * k;
            *w -= scale * (p[c] - p[c - n * n]);
        }
    });
    vel.enforce_no_penetration();
}
