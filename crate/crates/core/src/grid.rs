//! Staggered (MAC) grid containers.
//!
//! Pressure and other scalars live at cell centers. Each velocity component
//! lives on the faces whose normal points along that component:
//!
//! ```text
//! u: (n+1) x n x n   at (i h,       (j+1/2) h, (k+1/2) h)
//! v: n x (n+1) x n   at ((i+1/2) h, j h,       (k+1/2) h)
//! w: n x n x (n+1)   at ((i+1/2) h, (j+1/2) h, k h)
//! ```
//!
//! Every array is flattened i-fastest, then j, then k.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::par;

/// A point or vector in the cavity, `[x, y, z]`.
pub type Vec3 = [f64; 3];

/// Cube of `n`^3 cells of edge `h`, anchored at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("grid needs at least one cell per side"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidConfig("cell size must be positive and finite"));
        }
        Ok(Self { n, h })
    }

    /// Cells per side.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell edge length.
    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Domain side length.
    #[inline]
    pub fn side_length(&self) -> f64 {
        self.n as f64 * self.h
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Flat index of cell `(i, j, k)`, i fastest.
    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.n;
        debug_assert!(i < n && j < n && k < n, "cell ({i},{j},{k}) outside n={n}");
        i + n * (j + n * k)
    }

    /// Inverse of [`cell_index`](Self::cell_index).
    #[inline]
    pub fn cell_coords(&self, index: usize) -> (usize, usize, usize) {
        let n = self.n;
        debug_assert!(index < self.cell_count());
        (index % n, (index / n) % n, index / (n * n))
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.h;
        [
            (i as f64 + 0.5) * h,
            (j as f64 + 0.5) * h,
            (k as f64 + 0.5) * h,
        ]
    }

    /// Lattice extent of the faces carrying component `axis`.
    #[inline]
    pub fn face_dims(&self, axis: Axis) -> [usize; 3] {
        let n = self.n;
        let mut dims = [n; 3];
        dims[axis as usize] = n + 1;
        dims
    }

    #[inline]
    pub fn face_count(&self, axis: Axis) -> usize {
        let [a, b, c] = self.face_dims(axis);
        a * b * c
    }

    /// Flat index into the component array for `axis`.
    #[inline]
    pub fn face_index(&self, axis: Axis, i: usize, j: usize, k: usize) -> usize {
        let dims = self.face_dims(axis);
        debug_assert!(i < dims[0] && j < dims[1] && k < dims[2]);
        i + dims[0] * (j + dims[1] * k)
    }

    #[inline]
    pub fn face_position(&self, axis: Axis, i: usize, j: usize, k: usize) -> Vec3 {
        let mut p = [i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5];
        p[axis as usize] -= 0.5;
        p.map(|c| c * self.h)
    }

    /// Whether face `(i, j, k)` of component `axis` lies on a wall it is normal to.
    #[inline]
    pub fn is_wall_face(&self, axis: Axis, i: usize, j: usize, k: usize) -> bool {
        let c = [i, j, k][axis as usize];
        c == 0 || c == self.n
    }
}

/// Velocity component / coordinate direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X = 0,
    Y = 1,
    Z = 2,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Cell-centered scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn filled(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            data: vec![value; spec.cell_count()],
        }
    }

    pub fn from_vec(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.cell_count() {
            return Err(Error::DimensionMismatch {
                expected: spec.cell_count(),
                found: data.len(),
            });
        }
        Ok(Self { spec, data })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.spec.cell_index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Face-centered velocity on the staggered grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub spec: GridSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl VelocityField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            u: vec![0.0; spec.face_count(Axis::X)],
            v: vec![0.0; spec.face_count(Axis::Y)],
            w: vec![0.0; spec.face_count(Axis::Z)],
        }
    }

    pub fn from_components(spec: GridSpec, u: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        for (axis, len) in [(Axis::X, u.len()), (Axis::Y, v.len()), (Axis::Z, w.len())] {
            let expected = spec.face_count(axis);
            if len != expected {
                return Err(Error::DimensionMismatch { expected, found: len });
            }
        }
        Ok(Self { spec, u, v, w })
    }

    /// Fills every face of every component with `f(axis, position)`.
    pub fn from_fn(spec: GridSpec, f: impl Fn(Axis, Vec3) -> f64) -> Self {
        let mut field = Self::zeros(spec);
        for axis in Axis::ALL {
            let [ni, nj, nk] = spec.face_dims(axis);
            let data = field.component_mut(axis);
            for k in 0..nk {
                for j in 0..nj {
                    for i in 0..ni {
                        data[i + ni * (j + nj * k)] = f(axis, spec.face_position(axis, i, j, k));
                    }
                }
            }
        }
        field
    }

    #[inline]
    pub fn component(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.u,
            Axis::Y => &self.v,
            Axis::Z => &self.w,
        }
    }

    #[inline]
    pub fn component_mut(&mut self, axis: Axis) -> &mut [f64] {
        match axis {
            Axis::X => &mut self.u,
            Axis::Y => &mut self.v,
            Axis::Z => &mut self.w,
        }
    }

    /// Trilinear interpolation of all three components at `point`.
    ///
    /// Each component is interpolated on its own face lattice; coordinates
    /// outside that lattice are clamped to its hull.
    pub fn sample_velocity(&self, point: Vec3) -> Result<Vec3> {
        if !point.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinitePoint {
                x: point[0],
                y: point[1],
                z: point[2],
            });
        }
        Ok(Axis::ALL.map(|axis| self.sample_component(axis, point)))
    }

    /// Trilinear interpolation of one component. `point` must be finite.
    #[inline]
    pub fn sample_component(&self, axis: Axis, point: Vec3) -> f64 {
        let spec = &self.spec;
        let dims = spec.face_dims(axis);
        let inv_h = 1.0 / spec.h;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut t = [0.0f64; 3];
        for a in 0..3 {
            let offset = if a == axis as usize { 0.0 } else { 0.5 };
            let top = (dims[a] - 1) as f64;
            let f = (point[a] * inv_h - offset).clamp(0.0, top);
            let i0 = libm::floor(f) as usize;
            lo[a] = i0;
            hi[a] = (i0 + 1).min(dims[a] - 1);
            t[a] = f - i0 as f64;
        }
        let data = self.component(axis);
        let at = |i: usize, j: usize, k: usize| data[i + dims[0] * (j + dims[1] * k)];

        let c00 = lerp(at(lo[0], lo[1], lo[2]), at(hi[0], lo[1], lo[2]), t[0]);
        let c10 = lerp(at(lo[0], hi[1], lo[2]), at(hi[0], hi[1], lo[2]), t[0]);
        let c01 = lerp(at(lo[0], lo[1], hi[2]), at(hi[0], lo[1], hi[2]), t[0]);
        let c11 = lerp(at(lo[0], hi[1], hi[2]), at(hi[0], hi[1], hi[2]), t[0]);
        let c0 = lerp(c00, c10, t[1]);
        let c1 = lerp(c01, c11, t[1]);
        lerp(c0, c1, t[2])
    }

    /// Velocity averaged to cell `(i, j, k)` from its two bounding faces per axis.
    #[inline]
    pub fn cell_centered(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let s = &self.spec;
        [
            0.5 * (self.u[s.face_index(Axis::X, i, j, k)] + self.u[s.face_index(Axis::X, i + 1, j, k)]),
            0.5 * (self.v[s.face_index(Axis::Y, i, j, k)] + self.v[s.face_index(Axis::Y, i, j + 1, k)]),
            0.5 * (self.w[s.face_index(Axis::Z, i, j, k)] + self.w[s.face_index(Axis::Z, i, j, k + 1)]),
        ]
    }

    /// Sets every wall-normal face on all six walls to zero.
    pub fn enforce_no_penetration(&mut self) {
        let n = self.spec.n;
        for axis in Axis::ALL {
            let [ni, nj, nk] = self.spec.face_dims(axis);
            let data = self.component_mut(axis);
            match axis {
                Axis::X => {
                    for k in 0..nk {
                        for j in 0..nj {
                            data[ni * (j + nj * k)] = 0.0;
                            data[n + ni * (j + nj * k)] = 0.0;
                        }
                    }
                }
                Axis::Y => {
                    for k in 0..nk {
                        for i in 0..ni {
                            data[i + ni * nj * k] = 0.0;
                            data[i + ni * (n + nj * k)] = 0.0;
                        }
                    }
                }
                Axis::Z => {
                    let plane = ni * nj;
                    data[..plane].fill(0.0);
                    data[n * plane..].fill(0.0);
                }
            }
        }
    }

    /// Largest absolute value over all components.
    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .chain(&self.w)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[inline(always)]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}

/// Discrete divergence per cell from its six bounding faces.
pub fn divergence(field: &VelocityField) -> ScalarField {
    let spec = field.spec;
    let mut out = ScalarField::filled(spec, 0.0);
    divergence_into(field, &mut out.data);
    out
}

/// [`divergence`] into a caller-provided buffer of length n^3.
pub fn divergence_into(field: &VelocityField, out: &mut [f64]) {
    let spec = field.spec;
    assert_eq!(out.len(), spec.cell_count(), "divergence buffer length");
    let n = spec.n;
    let inv_h = 1.0 / spec.h;
    let (u, v, w) = (&field.u, &field.v, &field.w);
    par::for_each_chunk(out, n * n, |k, plane| {
        for j in 0..n {
            for i in 0..n {
                let ui = i + (n + 1) * (j + n * k);
                let vi = i + n * (j + (n + 1) * k);
                let wi = i + n * (j + n * k);
                let d = (u[ui + 1] - u[ui]) + (v[vi + n] - v[vi]) + (w[wi + n * n] - w[wi]);
                plane[i + n * j] = d * inv_h;
            }
        }
    });
}
