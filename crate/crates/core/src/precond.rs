//! Jacobi and simplified diagonal-based incomplete Cholesky (DIC)
//! preconditioners.
//!
//! DIC keeps the sparsity pattern of `A` (no fill-in) and only modifies the
//! diagonal:
//!
//! ```text
//! d[i] = A[i,i] - sum_{j < i, A[i,j] != 0} A[i,j]^2 / d[j]
//! M    = (L + D) D^-1 (D + L^T)        L = strict lower triangle of A
//! ```
//!
//! Applying `M^-1` is a forward sweep followed by a backward sweep. Both are
//! carried by loop dependencies and therefore run on one thread no matter
//! how large the pool is.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::par;
use crate::sparse::{CsrMatrix, SymCsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PreconditionerKind {
    Dic,
    Jacobi,
}

impl PreconditionerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PreconditionerKind::Dic => "dic",
            PreconditionerKind::Jacobi => "jacobi",
        }
    }
}

impl core::str::FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dic" => Ok(PreconditionerKind::Dic),
            "jacobi" => Ok(PreconditionerKind::Jacobi),
            _ => Err(Error::InvalidConfig("preconditioner must be `dic` or `jacobi`")),
        }
    }
}

/// Borrowed square sparse matrix in either storage form.
#[derive(Clone, Copy, Debug)]
pub enum MatrixRef<'a> {
    Full(&'a CsrMatrix),
    Sym(&'a SymCsrMatrix),
}

impl<'a> From<&'a CsrMatrix> for MatrixRef<'a> {
    fn from(m: &'a CsrMatrix) -> Self {
        MatrixRef::Full(m)
    }
}

impl<'a> From<&'a SymCsrMatrix> for MatrixRef<'a> {
    fn from(m: &'a SymCsrMatrix) -> Self {
        MatrixRef::Sym(m)
    }
}

impl MatrixRef<'_> {
    fn square_dim(&self) -> Result<usize> {
        match self {
            MatrixRef::Full(m) if m.n_rows() != m.n_cols() => Err(Error::NotSquare {
                rows: m.n_rows(),
                cols: m.n_cols(),
            }),
            MatrixRef::Full(m) => Ok(m.n_rows()),
            MatrixRef::Sym(s) => Ok(s.dim()),
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        match self {
            MatrixRef::Full(m) => m.diagonal(),
            MatrixRef::Sym(s) => s.diag().to_vec(),
        }
    }

    /// Strict lower triangle as CSR.
    fn strict_lower(&self) -> CsrMatrix {
        match self {
            MatrixRef::Sym(s) => s.upper().transpose(),
            MatrixRef::Full(m) => {
                let n = m.n_rows();
                let mut row_ptr = Vec::with_capacity(n + 1);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                row_ptr.push(0);
                for r in 0..n {
                    let (c, v) = m.row(r);
                    for (&c, &v) in c.iter().zip(v) {
                        if c < r {
                            cols.push(c);
                            vals.push(v);
                        }
                    }
                    row_ptr.push(cols.len());
                }
                CsrMatrix::new(n, n, row_ptr, cols, vals).expect("sub-pattern of a valid CSR matrix")
            }
        }
    }
}

/// Reciprocal-diagonal scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn inv_diag(&self) -> &[f64] {
        &self.inv_diag
    }
}

/// Simplified diagonal-based incomplete Cholesky.
#[derive(Clone, Debug, PartialEq)]
pub struct Dic {
    lower: CsrMatrix,
    upper: CsrMatrix,
    diag: Vec<f64>,
    inv_diag: Vec<f64>,
}

impl Dic {
    /// The modified diagonal `d`.
    pub fn modified_diagonal(&self) -> &[f64] {
        &self.diag
    }

    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        // (L + D) w = r
        for i in 0..n {
            let (cols, vals) = self.lower.row(i);
            let mut acc = r[i];
            for (&c, &v) in cols.iter().zip(vals) {
                acc -= v * z[c];
            }
            z[i] = acc * self.inv_diag[i];
        }
        // (D + L^T) z = D w
        for i in (0..n).rev() {
            let (cols, vals) = self.upper.row(i);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * z[c];
            }
            z[i] -= acc * self.inv_diag[i];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Preconditioner {
    Jacobi(Jacobi),
    Dic(Dic),
}

impl Preconditioner {
    pub fn build<'a>(kind: PreconditionerKind, a: impl Into<MatrixRef<'a>>) -> Result<Self> {
        match kind {
            PreconditionerKind::Jacobi => Self::jacobi_from(a),
            PreconditionerKind::Dic => Self::dic_from(a),
        }
    }

    pub fn jacobi_from<'a>(a: impl Into<MatrixRef<'a>>) -> Result<Self> {
        let a = a.into();
        a.square_dim()?;
        let diag = a.diagonal();
        if let Some(row) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::ZeroDiagonal { row });
        }
        Ok(Preconditioner::Jacobi(Jacobi {
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
        }))
    }

    pub fn dic_from<'a>(a: impl Into<MatrixRef<'a>>) -> Result<Self> {
        let a = a.into();
        let n = a.square_dim()?;
        let lower = a.strict_lower();
        let upper = lower.transpose();
        let mut diag = a.diagonal();
        for i in 0..n {
            let (cols, vals) = lower.row(i);
            let mut d = diag[i];
            for (&c, &v) in cols.iter().zip(vals) {
                d -= v * v / diag[c];
            }
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::NotPositiveDefinite { row: i, value: d });
            }
            diag[i] = d;
        }
        let inv_diag = diag.iter().map(|d| 1.0 / d).collect();
        Ok(Preconditioner::Dic(Dic {
            lower,
            upper,
            diag,
            inv_diag,
        }))
    }

    pub fn kind(&self) -> PreconditionerKind {
        match self {
            Preconditioner::Jacobi(_) => PreconditionerKind::Jacobi,
            Preconditioner::Dic(_) => PreconditionerKind::Dic,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Preconditioner::Jacobi(j) => j.inv_diag.len(),
            Preconditioner::Dic(d) => d.diag.len(),
        }
    }

    /// `z = M^-1 r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let n = self.dim();
        for len in [r.len(), z.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        match self {
            Preconditioner::Jacobi(j) => {
                z.copy_from_slice(r);
                par::fill_zip(z, &j.inv_diag, |ri, di| ri * di);
            }
            Preconditioner::Dic(d) => d.solve(r, z),
        }
        Ok(())
    }

    /// `M^-1 r` into a fresh vector.
    pub fn apply_alloc(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut z = vec![0.0; self.dim()];
        self.apply(r, &mut z)?;
        Ok(z)
    }
}
