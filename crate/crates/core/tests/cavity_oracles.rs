mod common;

use cfdscope_core::grid::{self, Axis, Vec3};
use cfdscope_core::sim::{self, apply_pressure_correction, solve_advection, PressureCache};
use cfdscope_core::{
    GridSpec, NoRegions, PreconditionerKind, Regions, ScalarField, SimConfig, SimState, Simulation,
    Variant, VelocityField,
};
use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn random_field(spec: GridSpec, seed: u64) -> VelocityField {
    let mut rng = StdRng::seed_from_u64(seed);
    let [u, v, w] = Axis::ALL.map(|a| random_vec(&mut rng, spec.face_count(a)));
    let mut f = VelocityField::from_components(spec, u, v, w).unwrap();
    f.enforce_no_penetration();
    f
}

/// Face value as a function of integer face coordinates.
fn face(f: &VelocityField, axis: Axis, i: usize, j: usize, k: usize) -> f64 {
    let [ni, nj, _] = f.spec.face_dims(axis);
    f.component(axis)[i + ni * (j + nj * k)]
}

/// Trilinear sample written as an explicit eight-corner weighted sum.
fn oracle_sample(f: &VelocityField, axis: Axis, p: Vec3) -> f64 {
    let dims = f.spec.face_dims(axis);
    let h = f.spec.h();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let shift = if a == axis as usize { 0.0 } else { 0.5 };
        let g = (p[a] / h - shift).max(0.0).min((dims[a] - 1) as f64);
        base[a] = (g.floor() as usize).min(dims[a].saturating_sub(2));
        frac[a] = g - base[a] as f64;
    }
    let mut acc = 0.0;
    for corner in 0..8 {
        let off = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
        let mut weight = 1.0;
        let mut idx = [0; 3];
        for a in 0..3 {
            idx[a] = (base[a] + off[a]).min(dims[a] - 1);
            weight *= if off[a] == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if weight != 0.0 {
            acc += weight * face(f, axis, idx[0], idx[1], idx[2]);
        }
    }
    acc
}

fn oracle_advect(f: &VelocityField, dt: f64) -> VelocityField {
    let spec = f.spec;
    let n = spec.n();
    let h = spec.h();
    let len = n as f64 * h;
    VelocityField::from_fn(spec, |axis, pos| {
        let (i, j, k) = (
            (pos[0] / h).round() as usize,
            (pos[1] / h).round() as usize,
            (pos[2] / h).round() as usize,
        );
        let normal = [i, j, k][axis as usize];
        if normal == 0 || normal == n {
            return 0.0;
        }
        let vel = [Axis::X, Axis::Y, Axis::Z].map(|a| oracle_sample(f, a, pos));
        let foot = [0, 1, 2].map(|a| (pos[a] - dt * vel[a]).max(0.0).min(len));
        oracle_sample(f, axis, foot)
    })
}

fn naive_divergence(f: &VelocityField) -> Vec<f64> {
    let n = f.spec.n();
    let h = f.spec.h();
    let mut out = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let du = face(f, Axis::X, i + 1, j, k) - face(f, Axis::X, i, j, k);
                let dv = face(f, Axis::Y, i, j + 1, k) - face(f, Axis::Y, i, j, k);
                let dw = face(f, Axis::Z, i, j, k + 1) - face(f, Axis::Z, i, j, k);
                out.push((du + dv + dw) / h);
            }
        }
    }
    out
}

#[test]
fn divergence_matches_naive_loop() {
    for (n, h) in [(2, 1.0), (5, 0.5), (9, 2.0)] {
        let spec = GridSpec::new(n, h).unwrap();
        let f = random_field(spec, n as u64);
        let got = grid::divergence(&f);
        assert!(max_abs_diff(&got.data, &naive_divergence(&f)) <= 1e-14);
        // Closed box: the divergence integrates to the zero wall flux.
        let total: f64 = got.data.iter().sum::<f64>() * h * h * h;
        assert!(total.abs() <= 1e-12, "n = {n}: {total}");
    }
}

proptest! {
    #[test]
    fn trilinear_sampling_is_exact_for_affine_fields(
        coeffs in proptest::array::uniform4(-2.0..2.0f64),
        p in proptest::array::uniform3(0.0..1.0f64),
        n in 2usize..7,
        h in 0.25..2.0f64,
    ) {
        let spec = GridSpec::new(n, h).unwrap();
        let affine = |q: Vec3| coeffs[0] + coeffs[1] * q[0] + coeffs[2] * q[1] + coeffs[3] * q[2];
        let f = VelocityField::from_fn(spec, |_, q| affine(q));
        // Stay inside the hull of every lattice so no clamping kicks in.
        let lo = 0.5 * h;
        let hi = (n as f64 - 0.5) * h;
        let q = p.map(|c| lo + c * (hi - lo));
        let got = f.sample_velocity(q).unwrap();
        for a in 0..3 {
            prop_assert!((got[a] - affine(q)).abs() <= 1e-12 * (1.0 + affine(q).abs()));
        }
    }

    #[test]
    fn sampling_matches_corner_sum(
        seed in any::<u64>(),
        p in proptest::array::uniform3(-1.0..9.0f64),
    ) {
        let spec = GridSpec::new(4, 2.0).unwrap();
        let f = random_field(spec, seed);
        for axis in Axis::ALL {
            let a = f.sample_component(axis, p);
            let b = oracle_sample(&f, axis, p);
            prop_assert!((a - b).abs() <= 1e-14);
        }
    }
}

#[test]
fn advection_matches_independent_implementation() {
    for (n, h, dt) in [(4, 1.0, 0.4), (7, 0.5, 0.3), (10, 1.0, 2.5)] {
        let spec = GridSpec::new(n, h).unwrap();
        let mut state = SimState::initial(spec);
        state.vel = random_field(spec, 40 + n as u64);
        let expect = oracle_advect(&state.vel, dt);
        for variant in [Variant::Baseline, Variant::Optimized] {
            let cfg = SimConfig { n, h, dt, variant, tile: 3, ..SimConfig::default() };
            let got = solve_advection(&state, &cfg);
            for axis in Axis::ALL {
                let d = max_abs_diff(got.component(axis), expect.component(axis));
                assert!(d <= 1e-13, "n = {n} {variant:?} {axis:?}: {d}");
            }
        }
    }
}

#[test]
fn projection_reduces_divergence_by_three_orders() {
    for n in [8, 16, 24] {
        for variant in [Variant::Baseline, Variant::Optimized] {
            let cfg = SimConfig {
                n,
                variant,
                preconditioner: variant.default_preconditioner(),
                t_end: 2.0,
                ..SimConfig::default()
            };
            let mut sim = Simulation::new(cfg).unwrap().track_divergence(true);
            for _ in 0..5 {
                let report = sim.step(&mut NoRegions).unwrap();
                assert!(report.solve.converged);
                let after = report.divergence_after.unwrap();
                assert!(
                    after * 1e3 <= report.divergence_before,
                    "n = {n} {variant:?}: {:e} -> {after:e}",
                    report.divergence_before
                );
            }
        }
    }
}

#[test]
fn projection_of_random_field_matches_dense_solve() {
    let n = 6;
    let spec = GridSpec::new(n, 1.0).unwrap();
    let cfg = SimConfig { n, tol: 1e-12, ..SimConfig::default() };
    let mut state = SimState::initial(spec);
    state.vel = random_field(spec, 77);
    let before = state.vel.clone();

    let mut cache = PressureCache::default();
    sim::solve_pressure_correction(&mut state, &cfg, &mut cache, &mut NoRegions).unwrap();

    // Dense Neumann Laplacian with the reference-cell tie, built cell by cell.
    let m = n * n * n;
    let mut a = vec![0.0; m * m];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let r = spec.cell_index(i, j, k);
                let mut nb = Vec::new();
                if i > 0 { nb.push(spec.cell_index(i - 1, j, k)); }
                if i + 1 < n { nb.push(spec.cell_index(i + 1, j, k)); }
                if j > 0 { nb.push(spec.cell_index(i, j - 1, k)); }
                if j + 1 < n { nb.push(spec.cell_index(i, j + 1, k)); }
                if k > 0 { nb.push(spec.cell_index(i, j, k - 1)); }
                if k + 1 < n { nb.push(spec.cell_index(i, j, k + 1)); }
                a[r * m + r] = nb.len() as f64 + if r == 0 { 1.0 } else { 0.0 };
                for c in nb {
                    a[r * m + c] = -1.0;
                }
            }
        }
    }
    let b: Vec<f64> = naive_divergence(&before).iter().map(|d| -d / cfg.dt).collect();
    let p = dense_solve(&a, m, &b);
    assert!(max_abs_diff(&state.p.data, &p) <= 1e-8 * max_abs(&p));

    let mut vel = before;
    apply_pressure_correction(&mut vel, &state.p, &cfg);
    assert!(max_abs(&naive_divergence(&vel)) <= 1e-9);
}

#[test]
fn uniform_pressure_leaves_velocity_unchanged() {
    let spec = GridSpec::new(5, 1.0).unwrap();
    let cfg = SimConfig { n: 5, ..SimConfig::default() };
    let f = random_field(spec, 3);
    let mut g = f.clone();
    apply_pressure_correction(&mut g, &ScalarField::filled(spec, 2.5), &cfg);
    assert_eq!(f, g);
}

#[derive(Default)]
struct Recorder {
    events: Vec<(bool, &'static str)>,
    depth: usize,
}

impl Regions for Recorder {
    fn enter(&mut self, name: &'static str) {
        self.events.push((true, name));
        self.depth += 1;
    }

    fn exit(&mut self, name: &'static str) {
        self.events.push((false, name));
        self.depth -= 1;
    }
}

impl Recorder {
    fn count(&self, name: &str) -> usize {
        self.events.iter().filter(|&&(e, n)| e && n == name).count()
    }

    fn top_level(&self) -> Vec<&'static str> {
        let mut depth = 0;
        let mut out = Vec::new();
        for &(enter, name) in &self.events {
            if enter {
                if depth == 0 {
                    out.push(name);
                }
                depth += 1;
            } else {
                depth -= 1;
            }
        }
        out
    }
}

#[test]
fn regions_nest_and_follow_step_order() {
    for variant in [Variant::Baseline, Variant::Optimized] {
        let cfg = SimConfig {
            n: 6,
            variant,
            preconditioner: PreconditionerKind::Jacobi,
            ..SimConfig::default()
        };
        let steps = cfg.step_count();
        let mut sim = Simulation::new(cfg).unwrap();
        let mut rec = Recorder::default();
        for _ in 0..steps {
            sim.step(&mut rec).unwrap();
        }
        assert_eq!(rec.depth, 0);

        // Every exit closes the innermost open region.
        let mut stack = Vec::new();
        for &(enter, name) in &rec.events {
            if enter {
                stack.push(name);
            } else {
                assert_eq!(stack.pop(), Some(name));
            }
        }

        let order = ["applyForces", "solveAdvection", "solvePressureCorrection", "applyPressureCorrection"];
        let top = rec.top_level();
        assert_eq!(top.len(), 4 * steps);
        for chunk in top.chunks(4) {
            assert_eq!(chunk, order);
        }
        assert_eq!(steps, 15);
        assert_eq!(rec.count("applyForces"), 15);
        assert_eq!(rec.count("pcg"), 15);
        // One extra product per solve for the initial residual.
        assert_eq!(rec.count("spmv"), rec.count("precondition") + steps);
        match variant {
            Variant::Baseline => {
                assert!(rec.count("operator+") > 0 && rec.count("operator*") > 0);
                assert_eq!(rec.count("multiply_add_inplace"), 0);
            }
            Variant::Optimized => {
                assert!(rec.count("multiply_add_inplace") > 0);
                assert_eq!(rec.count("operator+") + rec.count("operator*"), 0);
            }
        }
    }
}

#[test]
fn variants_agree_on_short_run() {
    let run = |variant| {
        let cfg = SimConfig {
            n: 10,
            t_end: 2.0,
            variant,
            tile: 4,
            preconditioner: PreconditionerKind::Jacobi,
            ..SimConfig::default()
        };
        let mut sim = Simulation::new(cfg).unwrap();
        for _ in 0..5 {
            sim.step(&mut NoRegions).unwrap();
        }
        sim.into_state()
    };
    let a = run(Variant::Baseline);
    let b = run(Variant::Optimized);
    for axis in Axis::ALL {
        assert!(max_abs_diff(a.vel.component(axis), b.vel.component(axis)) <= 1e-6);
    }
    assert!(max_abs_diff(&a.p.data, &b.p.data) <= 1e-6);
}

#[test]
fn lid_drives_the_top_layer_only_at_first() {
    let cfg = SimConfig { n: 6, ..SimConfig::default() };
    let mut state = SimState::initial(cfg.grid().unwrap());
    sim::apply_forces(&mut state, &cfg);
    let spec = state.spec();
    for k in 0..6 {
        for j in 0..6 {
            for i in 0..=6 {
                let expect = if j == 5 && (1..6).contains(&i) { 0.4 } else { 0.0 };
                assert_eq!(face(&state.vel, Axis::X, i, j, k), expect);
            }
        }
    }
    assert_eq!(spec.face_count(Axis::X), 7 * 36);
}
