//! Dense reference routines and random inputs shared by the integration tests.
#![allow(dead_code)]

use cfdscope_core::grid::Axis;
use cfdscope_core::{GridSpec, ScalarField, SimState, VelocityField};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Gaussian elimination with partial pivoting on a row-major matrix.
pub fn dense_solve(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if pivot != col {
            for c in 0..n {
                m.swap(col * n + c, pivot * n + c);
            }
            x.swap(col, pivot);
        }
        let d = m[col * n + col];
        assert!(d != 0.0, "singular matrix");
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f != 0.0 {
                for c in col..n {
                    m[r * n + c] -= f * m[col * n + c];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r * n + c] * x[c]).sum();
        x[r] = (x[r] - s) / m[r * n + r];
    }
    x
}

/// `B^T B + n I` for a random `B`.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum();
        }
        a[i * n + i] += n as f64;
    }
    a
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize, fill: f64) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        a[i * n + i] = rng.gen_range(0.5..4.0);
        for j in i + 1..n {
            if rng.gen_bool(fill) {
                let v = rng.gen_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
    }
    a
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// State with a mix of zeros, signed zeros, tiny, huge and ordinary values.
pub fn random_state(n: usize, seed: u64) -> SimState {
    let spec = GridSpec::new(n, 1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let value = |rng: &mut StdRng| match rng.gen_range(0..10) {
        0 => 0.0,
        1 => -0.0,
        2 => rng.gen_range(-1e-12..1e-12),
        3 => rng.gen_range(-1e12..1e12),
        _ => rng.gen_range(-2.0..2.0),
    };
    let [u, v, w] = Axis::ALL.map(|a| (0..spec.face_count(a)).map(|_| value(&mut rng)).collect());
    let mut state = SimState::initial(spec);
    state.vel = VelocityField::from_components(spec, u, v, w).unwrap();
    state.p = ScalarField::from_vec(spec, (0..spec.cell_count()).map(|_| value(&mut rng)).collect()).unwrap();
    state.step = rng.gen_range(0..100);
    state
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
