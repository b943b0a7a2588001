//! CSV snapshots of the flow state.
//!
//! One header line `x,y,z,u,v,w,p`, then one line per cell in flat-index
//! order (i fastest). Positions are cell centres, velocities are averaged
//! from the two bounding faces per axis, and every number is written with
//! Rust's shortest round-trip formatting.

use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cfdscope_core::{GridSpec, SimState};
use rayon::prelude::*;

use crate::error::{io_err, Error, Result};

pub const HEADER: &str = "x,y,z,u,v,w,p";
pub const COLUMNS: [&str; 7] = ["x", "y", "z", "u", "v", "w", "p"];

/// Rows per formatting task in [`WriteMode::BufferedParallel`].
const CHUNK_ROWS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WriteMode {
    /// Format and write row by row through a buffered writer.
    #[default]
    Serial,
    /// Format contiguous row chunks in parallel, then write once.
    BufferedParallel,
}

/// `snapshot_0007.csv` for step 7.
pub fn snapshot_filename(step: usize) -> String {
    format!("snapshot_{step:04}.csv")
}

pub type Row = [f64; 7];

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub spec: GridSpec,
    pub rows: Vec<Row>,
}

impl Snapshot {
    pub fn from_state(state: &SimState) -> Self {
        let spec = state.spec();
        let rows = (0..spec.cell_count()).map(|c| state_row(state, c)).collect();
        Self { spec, rows }
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[col])
    }

    pub fn row_at(&self, i: usize, j: usize, k: usize) -> &Row {
        &self.rows[self.spec.cell_index(i, j, k)]
    }

    /// Circulation in the mid-z plane around the square through the centres
    /// of the outermost cells, traversed in the sense the lid moves: +x
    /// along the top edge, clockwise when seen from +z with y up.
    ///
    /// Edges are integrated with the trapezoid rule over cell-centred
    /// velocities.
    pub fn lid_circulation(&self) -> f64 {
        self.lid_circulation_inset(0)
    }

    /// As [`Snapshot::lid_circulation`], with the square moved `inset`
    /// cells in from every wall.
    pub fn lid_circulation_inset(&self, inset: usize) -> f64 {
        let n = self.n();
        let h = self.spec.h();
        let k = n / 2;
        if 2 * inset + 1 >= n {
            return 0.0;
        }
        let (a, b) = (inset, n - 1 - inset);
        let u = |i, j| self.row_at(i, j, k)[3];
        let v = |i, j| self.row_at(i, j, k)[4];
        let mut sum = 0.0;
        for s in a..b {
            sum += 0.5 * (u(s, b) + u(s + 1, b));
            sum -= 0.5 * (v(b, s) + v(b, s + 1));
            sum -= 0.5 * (u(s, a) + u(s + 1, a));
            sum += 0.5 * (v(a, s) + v(a, s + 1));
        }
        sum * h
    }
}

fn state_row(state: &SimState, cell: usize) -> Row {
    let spec = state.spec();
    let (i, j, k) = spec.cell_coords(cell);
    let [x, y, z] = spec.cell_center(i, j, k);
    let [u, v, w] = state.vel.cell_centered(i, j, k);
    [x, y, z, u, v, w, state.p.data[cell]]
}

fn format_row(out: &mut String, row: &Row) {
    for (c, value) in row.iter().enumerate() {
        if c > 0 {
            out.push(',');
        }
        write!(out, "{value}").expect("writing to a String");
    }
    out.push('\n');
}

/// Whole file contents as a string, formatted on the calling thread.
pub fn format_snapshot(state: &SimState) -> String {
    let mut out = String::with_capacity(64 * state.spec().cell_count());
    out.push_str(HEADER);
    out.push('\n');
    for cell in 0..state.spec().cell_count() {
        format_row(&mut out, &state_row(state, cell));
    }
    out
}

/// Writes `state` to `path`. Both modes produce the same bytes.
pub fn write_snapshot(state: &SimState, path: &Path, mode: WriteMode) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    match mode {
        WriteMode::Serial => {
            let mut out = BufWriter::new(file);
            let mut line = String::with_capacity(128);
            writeln!(out, "{HEADER}").map_err(io_err(path))?;
            for cell in 0..state.spec().cell_count() {
                line.clear();
                format_row(&mut line, &state_row(state, cell));
                out.write_all(line.as_bytes()).map_err(io_err(path))?;
            }
            out.flush().map_err(io_err(path))
        }
        WriteMode::BufferedParallel => {
            let cells = state.spec().cell_count();
            let chunks: Vec<String> = (0..cells.div_ceil(CHUNK_ROWS))
                .into_par_iter()
                .map(|chunk| {
                    let start = chunk * CHUNK_ROWS;
                    let end = (start + CHUNK_ROWS).min(cells);
                    let mut buf = String::with_capacity(64 * (end - start));
                    for cell in start..end {
                        format_row(&mut buf, &state_row(state, cell));
                    }
                    buf
                })
                .collect();
            let mut block = String::with_capacity(HEADER.len() + 1 + chunks.iter().map(String::len).sum::<usize>());
            block.push_str(HEADER);
            block.push('\n');
            for chunk in &chunks {
                block.push_str(chunk);
            }
            let mut file = file;
            file.write_all(block.as_bytes()).map_err(io_err(path))
        }
    }
}

/// Parses a snapshot file, inferring `n` from the row count.
///
/// Cell positions are read but not checked; the grid spacing is taken from
/// the x coordinate of the first row.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let format = |line: u64, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(COLUMNS) {
        let found = header.iter().collect::<Vec<_>>().join(",");
        return Err(format(1, format!("expected header `{HEADER}`, found `{found}`")));
    }

    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(|e| csv_error(path, e))? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != COLUMNS.len() {
            return Err(format(line, format!("expected 7 fields, found {}", record.len())));
        }
        let mut row = [0.0; 7];
        for (c, field) in record.iter().enumerate() {
            row[c] = field
                .trim()
                .parse()
                .map_err(|_| format(line, format!("column {}: `{field}` is not a number", COLUMNS[c])))?;
        }
        rows.push(row);
    }

    let n = cube_root(rows.len()).ok_or(Error::NonCubic {
        path: path.to_path_buf(),
        rows: rows.len(),
    })?;
    let h = 2.0 * rows[0][0];
    let spec = GridSpec::new(n, h).map_err(|_| format(2, format!("bad cell position {}", rows[0][0])))?;
    Ok(Snapshot { spec, rows })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => Error::Format {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

fn cube_root(count: usize) -> Option<usize> {
    if count == 0 {
        return None;
    }
    let guess = (count as f64).cbrt().round() as usize;
    (guess.saturating_sub(1)..=guess + 1).find(|n| n * n * n == count)
}

/// Column-wise maximum absolute differences between two snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub max_abs_diff: [f64; 7],
    pub abs_tol: f64,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.max_abs_diff.iter().all(|&d| d <= self.abs_tol)
    }

    pub fn failing_columns(&self) -> Vec<&'static str> {
        COLUMNS
            .iter()
            .zip(&self.max_abs_diff)
            .filter(|(_, &d)| !(d <= self.abs_tol))
            .map(|(&c, _)| c)
            .collect()
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "{verdict} (tol {:e}):", self.abs_tol)?;
        for (c, d) in COLUMNS.iter().zip(&self.max_abs_diff) {
            write!(f, " {c}={d:.3e}")?;
        }
        Ok(())
    }
}

pub fn compare_snapshots(a: &Snapshot, b: &Snapshot, abs_tol: f64) -> Result<Comparison> {
    if a.n() != b.n() || a.rows.len() != b.rows.len() {
        return Err(Error::GridMismatch { a: a.n(), b: b.n() });
    }
    let mut max_abs_diff = [0.0_f64; 7];
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for c in 0..7 {
            let d = (ra[c] - rb[c]).abs();
            // NaN never compares below the tolerance.
            if d.is_nan() || d > max_abs_diff[c] {
                max_abs_diff[c] = if d.is_nan() { f64::INFINITY } else { d };
            }
        }
    }
    Ok(Comparison { max_abs_diff, abs_tol })
}

/// `dir/snapshot_<step>.csv`.
pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(snapshot_filename(step))
}
