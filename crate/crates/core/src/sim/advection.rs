//! Semi-Lagrangian self-advection of the face velocities.
//!
//! Every face traces its position one explicit Euler step back through the
//! current field, clamps the foot point to the cavity and takes its own
//! component from there. The optimized variant visits faces in cubic tiles;
//! the per-face arithmetic is shared so both orders give identical bits.

use crate::grid::{Axis, VelocityField};
use crate::par;
use crate::sim::{SimConfig, SimState};
use crate::Variant;

/// New value of face `(i, j, k)` of component `axis` after one advection step.
#[inline]
pub fn advect_face(vel: &VelocityField, axis: Axis, i: usize, j: usize, k: usize, dt: f64) -> f64 {
    let spec = &vel.spec;
    if spec.is_wall_face(axis, i, j, k) {
        return 0.0;
    }
    let here = spec.face_position(axis, i, j, k);
    let side = spec.side_length();
    let mut foot = [0.0; 3];
    for a in Axis::ALL {
        let c = a as usize;
        foot[c] = (here[c] - dt * vel.sample_component(a, here)).clamp(0.0, side);
    }
    vel.sample_component(axis, foot)
}

/// Advects `state.vel` through itself over `cfg.dt`.
pub fn solve_advection(state: &SimState, cfg: &SimConfig) -> VelocityField {
    let vel = &state.vel;
    let mut out = VelocityField::zeros(vel.spec);
    for axis in Axis::ALL {
        let dst = out.component_mut(axis);
        match cfg.variant {
            Variant::Baseline => advect_planes(vel, axis, cfg.dt, dst),
            Variant::Optimized => advect_tiled(vel, axis, cfg.dt, cfg.tile, dst),
        }
    }
    out
}

/// One k-plane per work item, i fastest.
fn advect_planes(vel: &VelocityField, axis: Axis, dt: f64, dst: &mut [f64]) {
    let [ni, nj, _] = vel.spec.face_dims(axis);
    par::for_each_chunk(dst, ni * nj, |k, plane| {
        for j in 0..nj {
            for i in 0..ni {
                plane[i + ni * j] = advect_face(vel, axis, i, j, k, dt);
            }
        }
    });
}

/// Slabs of `tile` k-planes per work item, swept in `tile`^3 blocks.
fn advect_tiled(vel: &VelocityField, axis: Axis, dt: f64, tile: usize, dst: &mut [f64]) {
    let [ni, nj, _] = vel.spec.face_dims(axis);
    let plane = ni * nj;
    par::for_each_chunk(dst, plane * tile, |slab, data| {
        let k0 = slab * tile;
        let depth = data.len() / plane;
        for j0 in (0..nj).step_by(tile) {
            for i0 in (0..ni).step_by(tile) {
                for dk in 0..depth {
                    for j in j0..(j0 + tile).min(nj) {
                        for i in i0..(i0 + tile).min(ni) {
                            data[i + ni * (j + nj * dk)] = advect_face(vel, axis, i, j, k0 + dk, dt);
                        }
                    }
                }
            }
        }
    });
}
