//! Compressed sparse row storage and the dense-vector kernels the solver uses.
//!
//! The allocating [`add`] / [`scale`] pair is the baseline path; the fused
//! [`multiply_add_inplace`] / [`scale_add_inplace`] pair is the optimized one.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::par;

/// General CSR matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking every structural invariant.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed; explicit
    /// zeros are kept.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        if sorted.iter().any(|&(r, c, _)| r >= n_rows || c >= n_cols) {
            return Err(Error::MalformedMatrix("triplet index out of range"));
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self::new(n_rows, n_cols, row_ptr, col_idx, values)
    }

    /// Builds from a row-major dense array, keeping only nonzero entries.
    pub fn from_dense(n_rows: usize, n_cols: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                found: dense.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in dense.chunks(n_cols.max(1)).take(n_rows) {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        // n_cols == 0 yields no chunks
        row_ptr.resize(n_rows + 1, col_idx.len());
        Self::new(n_rows, n_cols, row_ptr, col_idx, values)
    }

    /// Checks the CSR invariants.
    pub fn validate(&self) -> Result<()> {
        if self.row_ptr.len() != self.n_rows + 1 {
            return Err(Error::MalformedMatrix("row_ptr length must be n_rows + 1"));
        }
        if self.row_ptr[0] != 0 {
            return Err(Error::MalformedMatrix("row_ptr[0] must be 0"));
        }
        if self.col_idx.len() != self.values.len() {
            return Err(Error::MalformedMatrix("col_idx and values differ in length"));
        }
        if self.row_ptr[self.n_rows] != self.col_idx.len() {
            return Err(Error::MalformedMatrix("row_ptr[n_rows] must equal nnz"));
        }
        for r in 0..self.n_rows {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            if a > b {
                return Err(Error::MalformedMatrix("row_ptr must be non-decreasing"));
            }
            let cols = &self.col_idx[a..b];
            if cols.iter().any(|&c| c >= self.n_cols) {
                return Err(Error::MalformedMatrix("column index out of range"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::MalformedMatrix("column indices must strictly increase within a row"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    #[inline]
    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access to the stored values; the pattern stays fixed.
    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    /// Stored value at `(r, c)`, if the pattern contains it.
    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).ok().map(|p| vals[p])
    }

    /// Main diagonal; absent entries read as zero.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|r| self.get(r, r).unwrap_or(0.0))
            .collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n_rows * self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                dense[r * self.n_cols + c] = v;
            }
        }
        dense
    }
}

/// Symmetric matrix stored as `A = D + U + U^T`: the main diagonal plus the
/// strict upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymCsrMatrix {
    diag: Vec<f64>,
    upper: CsrMatrix,
}

impl SymCsrMatrix {
    pub fn new(diag: Vec<f64>, upper: CsrMatrix) -> Result<Self> {
        let n = diag.len();
        if upper.n_rows() != n || upper.n_cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: upper.n_rows().max(upper.n_cols()),
            });
        }
        for r in 0..n {
            if upper.row(r).0.iter().any(|&c| c <= r) {
                return Err(Error::MalformedMatrix("upper part holds an entry on or below the diagonal"));
            }
        }
        Ok(Self { diag, upper })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    #[inline]
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    #[inline]
    pub fn diag_mut(&mut self) -> &mut [f64] {
        &mut self.diag
    }

    #[inline]
    pub fn upper(&self) -> &CsrMatrix {
        &self.upper
    }

    #[inline]
    pub fn upper_values_mut(&mut self) -> &mut [f64] {
        self.upper.values_mut()
    }

    /// Number of stored scalars (diagonal plus upper entries).
    pub fn stored_len(&self) -> usize {
        self.diag.len() + self.upper.nnz()
    }

    /// Reconstructs the full matrix.
    pub fn to_full(&self) -> CsrMatrix {
        let n = self.dim();
        let lower = self.upper.transpose();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(2 * self.upper.nnz() + n);
        let mut values = Vec::with_capacity(col_idx.capacity());
        row_ptr.push(0);
        for r in 0..n {
            let (lc, lv) = lower.row(r);
            col_idx.extend_from_slice(lc);
            values.extend_from_slice(lv);
            col_idx.push(r);
            values.push(self.diag[r]);
            let (uc, uv) = self.upper.row(r);
            col_idx.extend_from_slice(uc);
            values.extend_from_slice(uv);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Splits a symmetric CSR matrix into diagonal + strict upper triangle.
///
/// Off-diagonal pairs must be bitwise equal; the first mismatch (or a
/// one-sided entry) is reported.
pub fn to_symmetric(a: &CsrMatrix) -> Result<SymCsrMatrix> {
    if a.n_rows != a.n_cols {
        return Err(Error::NotSquare {
            rows: a.n_rows,
            cols: a.n_cols,
        });
    }
    let n = a.n_rows;
    let mut diag = vec![0.0; n];
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if c == r {
                diag[r] = v;
                continue;
            }
            if a.get(c, r) != Some(v) {
                return Err(Error::Asymmetric { row: r, col: c });
            }
            if c > r {
                col_idx.push(c);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    let upper = CsrMatrix {
        n_rows: n,
        n_cols: n,
        row_ptr,
        col_idx,
        values,
    };
    Ok(SymCsrMatrix { diag, upper })
}

/// Square operator usable by the conjugate gradient driver.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. Lengths are checked by the caller.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        csr_kernel(self, x, y)
    }
}

impl LinearOperator for SymCsrMatrix {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        sym_kernel(self, x, y)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn csr_kernel(a: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    par::fill_indexed(y, |r| {
        let (cols, vals) = a.row(r);
        cols.iter().zip(vals).fold(0.0, |acc, (&c, &v)| acc + v * x[c])
    });
}

/// Rows are split into one contiguous block per worker. Each block gathers
/// its own rows and scatters the transposed contributions; targets beyond the
/// block go to a block-local spill buffer that is merged afterwards in block
/// order.
fn sym_kernel(s: &SymCsrMatrix, x: &[f64], y: &mut [f64]) {
    let n = s.dim();
    if n == 0 {
        return;
    }
    let block = n.div_ceil(par::threads());
    let spills = par::map_chunks(y, block, |b, ys| {
        let start = b * block;
        let end = start + ys.len();
        ys.fill(0.0);
        let mut spill: Vec<f64> = Vec::new();
        for r in start..end {
            let xr = x[r];
            let mut acc = ys[r - start] + s.diag[r] * xr;
            let (cols, vals) = s.upper.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
                if c < end {
                    ys[c - start] += v * xr;
                } else {
                    let slot = c - end;
                    if slot >= spill.len() {
                        spill.resize(slot + 1, 0.0);
                    }
                    spill[slot] += v * xr;
                }
            }
            ys[r - start] = acc;
        }
        (end, spill)
    });
    for (end, spill) in spills {
        for (yi, s) in y[end..].iter_mut().zip(&spill) {
            *yi += s;
        }
    }
}

/// `A x` into a fresh vector.
pub fn spmv(a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.n_rows];
    spmv_into(a, x, &mut y)?;
    Ok(y)
}

/// `y = A x` into a preallocated vector.
pub fn spmv_into(a: &CsrMatrix, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_len(a.n_cols, x.len())?;
    check_len(a.n_rows, y.len())?;
    csr_kernel(a, x, y);
    Ok(())
}

/// Symmetric product `(D + U + U^T) x` into a fresh vector.
pub fn spmv_sym(s: &SymCsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; s.dim()];
    spmv_sym_into(s, x, &mut y)?;
    Ok(y)
}

pub fn spmv_sym_into(s: &SymCsrMatrix, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_len(s.dim(), x.len())?;
    check_len(s.dim(), y.len())?;
    sym_kernel(s, x, y);
    Ok(())
}

/// Serial left-to-right dot product.
pub fn dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    Ok(x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + a * b))
}

/// Dot product reduced over one contiguous block per worker, partial sums
/// combined in block order. Deterministic for a fixed worker count.
pub fn dot_parallel(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    let partials = par::map_ranges(x.len(), par::threads(), |r| {
        x[r.clone()]
            .iter()
            .zip(&y[r])
            .fold(0.0, |acc, (a, b)| acc + a * b)
    });
    Ok(partials.into_iter().fold(0.0, |acc, p| acc + p))
}

/// `y <- y + alpha * x` in place.
pub fn multiply_add_inplace(y: &mut [f64], alpha: f64, x: &[f64]) -> Result<()> {
    check_len(y.len(), x.len())?;
    par::fill_zip(y, x, |yi, xi| yi + alpha * xi);
    Ok(())
}

/// `y <- x + beta * y` in place (search-direction update).
pub fn scale_add_inplace(y: &mut [f64], beta: f64, x: &[f64]) -> Result<()> {
    check_len(y.len(), x.len())?;
    par::fill_zip(y, x, |yi, xi| xi + beta * yi);
    Ok(())
}

/// `x + y` into a fresh vector.
pub fn add(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len(x.len(), y.len())?;
    Ok(par::collect_indexed(x.len(), |i| x[i] + y[i]))
}

/// `alpha * x` into a fresh vector.
pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    par::collect_indexed(x.len(), |i| alpha * x[i])
}
