use crate::grid::Axis;
use crate::sim::{SimConfig, SimState};

/// Moving lid: adds `g * dt` to the u faces inside the top cell layer.
///
/// Only tangential faces are touched; the two u faces on the x walls of each
/// top-layer row stay as they are.
pub fn apply_forces(state: &mut SimState, cfg: &SimConfig) {
    let offset = cfg.lid_accel * cfg.dt;
    if offset == 0.0 {
        return;
    }
    let spec = state.spec();
    let n = spec.n();
    let j = n - 1;
    for k in 0..n {
        for i in 1..n {
            state.vel.u[spec.face_index(Axis::X, i, j, k)] += offset;
        }
    }
}

/// No-penetration walls: zero every wall-normal face velocity.
pub fn enforce_boundaries(state: &mut SimState) {
    state.vel.enforce_no_penetration();
}
