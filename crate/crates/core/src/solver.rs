//! Preconditioned conjugate gradient.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::precond::Preconditioner;
use crate::profile::{self, timed, Regions};
use crate::sparse::{self, LinearOperator};
use crate::Variant;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcgSettings {
    /// Stop once `||r||_2 <= tol * ||b||_2`.
    pub tol: f64,
    pub max_iter: usize,
    /// Baseline allocates a fresh vector per operator; optimized works in place.
    pub variant: Variant,
}

impl Default for PcgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
            variant: Variant::Baseline,
        }
    }
}

impl PcgSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidConfig("solver tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("solver needs at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||r||_2 / ||b||_2` of the recurrence residual at exit.
    pub final_residual_rel: f64,
    pub converged: bool,
}

/// Solves `A x = b` for SPD `A`, starting from `x0`.
///
/// Hitting `max_iter` is not an error: the best iterate comes back with
/// `converged == false`. A non-positive curvature `p^T A p` is.
pub fn pcg(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    precond: &Preconditioner,
    settings: &PcgSettings,
    regions: &mut dyn Regions,
) -> Result<(Vec<f64>, SolveStats)> {
    settings.validate()?;
    let n = a.dim();
    for len in [b.len(), x0.len(), precond.dim()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    regions.enter(profile::PCG);
    let out = match settings.variant {
        Variant::Baseline => pcg_allocating(a, b, x0, precond, settings, regions),
        Variant::Optimized => pcg_inplace(a, b, x0, precond, settings, regions),
    };
    regions.exit(profile::PCG);
    out
}

fn apply_alloc(a: &dyn LinearOperator, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.dim()];
    a.apply_into(x, &mut y);
    y
}

fn pcg_allocating(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    precond: &Preconditioner,
    settings: &PcgSettings,
    regions: &mut dyn Regions,
) -> Result<(Vec<f64>, SolveStats)> {
    use profile::{DOT, OPERATOR_ADD, OPERATOR_MUL, PRECONDITION, SPMV};

    let b_norm = libm::sqrt(timed(regions, DOT, || sparse::dot(b, b))?);
    if b_norm == 0.0 {
        return Ok((vec![0.0; b.len()], converged_at(0, 0.0)));
    }
    let threshold = settings.tol * b_norm;

    let mut x = x0.to_vec();
    let ax = timed(regions, SPMV, || apply_alloc(a, &x));
    let neg_ax = timed(regions, OPERATOR_MUL, || sparse::scale(-1.0, &ax));
    let mut r = timed(regions, OPERATOR_ADD, || sparse::add(b, &neg_ax))?;
    let mut r_norm = libm::sqrt(timed(regions, DOT, || sparse::dot(&r, &r))?);
    if r_norm <= threshold {
        return Ok((x, converged_at(0, r_norm / b_norm)));
    }

    let z = timed(regions, PRECONDITION, || precond.apply_alloc(&r))?;
    let mut rz = timed(regions, DOT, || sparse::dot(&r, &z))?;
    let mut p = z;

    for iteration in 1..=settings.max_iter {
        let ap = timed(regions, SPMV, || apply_alloc(a, &p));
        let curvature = timed(regions, DOT, || sparse::dot(&p, &ap))?;
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::Breakdown { iteration, curvature });
        }
        let alpha = rz / curvature;

        let step = timed(regions, OPERATOR_MUL, || sparse::scale(alpha, &p));
        x = timed(regions, OPERATOR_ADD, || sparse::add(&x, &step))?;
        let step = timed(regions, OPERATOR_MUL, || sparse::scale(-alpha, &ap));
        r = timed(regions, OPERATOR_ADD, || sparse::add(&r, &step))?;

        r_norm = libm::sqrt(timed(regions, DOT, || sparse::dot(&r, &r))?);
        if r_norm <= threshold {
            return Ok((x, converged_at(iteration, r_norm / b_norm)));
        }

        let z = timed(regions, PRECONDITION, || precond.apply_alloc(&r))?;
        let rz_next = timed(regions, DOT, || sparse::dot(&r, &z))?;
        let beta = rz_next / rz;
        rz = rz_next;
        let step = timed(regions, OPERATOR_MUL, || sparse::scale(beta, &p));
        p = timed(regions, OPERATOR_ADD, || sparse::add(&z, &step))?;
    }
    Ok((x, not_converged(settings.max_iter, r_norm / b_norm)))
}

fn pcg_inplace(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    precond: &Preconditioner,
    settings: &PcgSettings,
    regions: &mut dyn Regions,
) -> Result<(Vec<f64>, SolveStats)> {
    use profile::{DOT, MULTIPLY_ADD_INPLACE, PRECONDITION, SPMV};

    let n = b.len();
    let b_norm = libm::sqrt(timed(regions, DOT, || sparse::dot_parallel(b, b))?);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], converged_at(0, 0.0)));
    }
    let threshold = settings.tol * b_norm;

    let mut x = x0.to_vec();
    let mut r = b.to_vec();
    let mut ap = vec![0.0; n];
    timed(regions, SPMV, || a.apply_into(&x, &mut ap));
    timed(regions, MULTIPLY_ADD_INPLACE, || sparse::multiply_add_inplace(&mut r, -1.0, &ap))?;
    let mut r_norm = libm::sqrt(timed(regions, DOT, || sparse::dot_parallel(&r, &r))?);
    if r_norm <= threshold {
        return Ok((x, converged_at(0, r_norm / b_norm)));
    }

    let mut z = vec![0.0; n];
    timed(regions, PRECONDITION, || precond.apply(&r, &mut z))?;
    let mut rz = timed(regions, DOT, || sparse::dot_parallel(&r, &z))?;
    let mut p = z.clone();

    for iteration in 1..=settings.max_iter {
        timed(regions, SPMV, || a.apply_into(&p, &mut ap));
        let curvature = timed(regions, DOT, || sparse::dot_parallel(&p, &ap))?;
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::Breakdown { iteration, curvature });
        }
        let alpha = rz / curvature;

        timed(regions, MULTIPLY_ADD_INPLACE, || sparse::multiply_add_inplace(&mut x, alpha, &p))?;
        timed(regions, MULTIPLY_ADD_INPLACE, || sparse::multiply_add_inplace(&mut r, -alpha, &ap))?;

        r_norm = libm::sqrt(timed(regions, DOT, || sparse::dot_parallel(&r, &r))?);
        if r_norm <= threshold {
            return Ok((x, converged_at(iteration, r_norm / b_norm)));
        }

        timed(regions, PRECONDITION, || precond.apply(&r, &mut z))?;
        let rz_next = timed(regions, DOT, || sparse::dot_parallel(&r, &z))?;
        let beta = rz_next / rz;
        rz = rz_next;
        timed(regions, MULTIPLY_ADD_INPLACE, || sparse::scale_add_inplace(&mut p, beta, &z))?;
    }
    Ok((x, not_converged(settings.max_iter, r_norm / b_norm)))
}

fn converged_at(iterations: usize, final_residual_rel: f64) -> SolveStats {
    SolveStats {
        iterations,
        final_residual_rel,
        converged: true,
    }
}

fn not_converged(iterations: usize, final_residual_rel: f64) -> SolveStats {
    SolveStats {
        iterations,
        final_residual_rel,
        converged: false,
    }
}
