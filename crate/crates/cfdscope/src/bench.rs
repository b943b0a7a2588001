//! Region timers, hotspot reports and the strong-scaling sweep.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use cfdscope_core::Regions;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::run::{run, RunConfig};

/// Name of the region wrapping a whole run.
pub const ROOT: &str = "cfdSCOPE";

#[derive(Clone, Debug)]
struct Node {
    name: &'static str,
    parent: Option<usize>,
    children: Vec<usize>,
    calls: u64,
    inclusive: Duration,
}

/// Wall-clock region profiler. Regions are keyed by `(parent, name)`.
///
/// Only the driver thread may enter and exit regions; parallel work inside
/// a region is charged to it as wall time.
#[derive(Clone, Debug, Default)]
pub struct Profiler {
    nodes: Vec<Node>,
    roots: Vec<usize>,
    index: HashMap<(Option<usize>, &'static str), usize>,
    stack: Vec<(usize, Instant)>,
    unbalanced: Vec<String>,
}

impl Profiler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Exits that did not match the innermost open region.
    pub fn diagnostics(&self) -> &[String] {
        &self.unbalanced
    }

    pub fn is_balanced(&self) -> bool {
        self.stack.is_empty() && self.unbalanced.is_empty()
    }

    /// Closes anything still open and returns the report.
    pub fn finish(mut self) -> Report {
        while let Some(&(node, _)) = self.stack.last() {
            let name = self.nodes[node].name;
            self.unbalanced.push(format!("region `{name}` was never exited"));
            log::warn!("region `{name}` was never exited");
            self.exit(name);
        }
        self.report()
    }

    /// Report of all closed regions so far.
    pub fn report(&self) -> Report {
        let total: f64 = self.roots.iter().map(|&r| self.nodes[r].inclusive.as_secs_f64()).sum();
        let mut rows = Vec::with_capacity(self.nodes.len());
        let mut todo: Vec<(usize, usize)> = self.roots.iter().rev().map(|&r| (r, 0)).collect();
        while let Some((id, depth)) = todo.pop() {
            let node = &self.nodes[id];
            let seconds = node.inclusive.as_secs_f64();
            rows.push(RegionStats {
                name: node.name.to_string(),
                parent: node.parent.map(|p| self.nodes[p].name.to_string()),
                calls: node.calls,
                inclusive_seconds: seconds,
                fraction: if total > 0.0 { seconds / total } else { 0.0 },
                depth,
            });
            todo.extend(node.children.iter().rev().map(|&c| (c, depth + 1)));
        }
        Report { rows }
    }
}

impl Regions for Profiler {
    fn enter(&mut self, name: &'static str) {
        let parent = self.stack.last().map(|&(id, _)| id);
        let id = *self.index.entry((parent, name)).or_insert_with(|| {
            self.nodes.push(Node {
                name,
                parent,
                children: Vec::new(),
                calls: 0,
                inclusive: Duration::ZERO,
            });
            let id = self.nodes.len() - 1;
            match parent {
                Some(p) => self.nodes[p].children.push(id),
                None => self.roots.push(id),
            }
            id
        });
        self.stack.push((id, Instant::now()));
    }

    fn exit(&mut self, name: &'static str) {
        let now = Instant::now();
        match self.stack.last() {
            Some(&(id, start)) if self.nodes[id].name == name => {
                self.stack.pop();
                let node = &mut self.nodes[id];
                node.calls += 1;
                node.inclusive += now - start;
            }
            top => {
                let open = top.map_or("nothing", |&(id, _)| self.nodes[id].name);
                let msg = format!("exit from `{name}` while `{open}` is open; ignored");
                log::warn!("{msg}");
                self.unbalanced.push(msg);
            }
        }
    }
}

/// One row of a hotspot report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub name: String,
    pub parent: Option<String>,
    pub calls: u64,
    pub inclusive_seconds: f64,
    /// Share of the summed top-level time.
    pub fraction: f64,
    #[serde(skip)]
    pub depth: usize,
}

/// Regions in tree order, children after their parent in first-entered order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<RegionStats>,
}

impl Report {
    /// First row with this name, at any depth.
    pub fn get(&self, name: &str) -> Option<&RegionStats> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn calls(&self, name: &str) -> u64 {
        self.rows.iter().filter(|r| r.name == name).map(|r| r.calls).sum()
    }

    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| 2 * r.depth + r.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = format!("{:<width$}  {:>10}  {:>16}  {:>9}\n", "Name", "Calls", "InclusiveSeconds", "Fraction");
        for r in &self.rows {
            let label = format!("{}{}", "  ".repeat(r.depth), r.name);
            let _ = writeln!(
                out,
                "{label:<width$}  {:>10}  {:>16.6}  {:>8.2}%",
                r.calls,
                r.inclusive_seconds,
                100.0 * r.fraction
            );
        }
        out
    }

    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(io_err(path))?;
        self.write_csv(file).map_err(|e| csv_to_error(path, e))
    }

    /// Reads a file written by [`Report::save`]. Depths are rebuilt from
    /// the parent names.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(io_err(path))?;
        let mut rows = Vec::new();
        let mut depth_of: HashMap<String, usize> = HashMap::new();
        for rec in csv::Reader::from_reader(file).deserialize() {
            let mut row: RegionStats = rec.map_err(|e| csv_to_error(path, e))?;
            row.depth = row.parent.as_ref().and_then(|p| depth_of.get(p)).map_or(0, |d| d + 1);
            depth_of.entry(row.name.clone()).or_insert(row.depth);
            rows.push(row);
        }
        Ok(Self { rows })
    }
}

fn csv_to_error(path: &Path, e: csv::Error) -> Error {
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

/// Relative change from `a` to `b` in percent; `None` when `a` is zero and `b` is not.
fn change_pct(a: f64, b: f64) -> Option<f64> {
    if a == b {
        Some(0.0)
    } else if a == 0.0 {
        None
    } else {
        Some(100.0 * (b - a) / a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionChange {
    pub name: String,
    pub parent: Option<String>,
    pub depth: usize,
    pub calls: (u64, u64),
    pub seconds: (f64, f64),
    pub total_change_pct: Option<f64>,
    pub per_call_change_pct: Option<f64>,
}

/// Matches regions of two reports by `(parent, name)`. Regions only
/// present in `b` are appended after the rows of `a`.
pub fn compare(a: &Report, b: &Report) -> Vec<RegionChange> {
    let key = |r: &RegionStats| (r.parent.clone(), r.name.clone());
    let lookup: HashMap<_, _> = b.rows.iter().map(|r| (key(r), r)).collect();
    let mut out = Vec::new();
    for ra in &a.rows {
        let (calls_b, secs_b) = lookup.get(&key(ra)).map_or((0, 0.0), |rb| (rb.calls, rb.inclusive_seconds));
        out.push(change_row(ra, (ra.calls, calls_b), (ra.inclusive_seconds, secs_b)));
    }
    let seen: std::collections::HashSet<_> = a.rows.iter().map(key).collect();
    for rb in b.rows.iter().filter(|r| !seen.contains(&key(r))) {
        out.push(change_row(rb, (0, rb.calls), (0.0, rb.inclusive_seconds)));
    }
    out
}

fn change_row(r: &RegionStats, calls: (u64, u64), seconds: (f64, f64)) -> RegionChange {
    let per_call = |s: f64, c: u64| if c == 0 { 0.0 } else { s / c as f64 };
    RegionChange {
        name: r.name.clone(),
        parent: r.parent.clone(),
        depth: r.depth,
        calls,
        seconds,
        total_change_pct: change_pct(seconds.0, seconds.1),
        per_call_change_pct: change_pct(per_call(seconds.0, calls.0), per_call(seconds.1, calls.1)),
    }
}

pub fn comparison_table(rows: &[RegionChange]) -> String {
    let width = rows.iter().map(|r| 2 * r.depth + r.name.len()).max().unwrap_or(4).max(4);
    let pct = |p: Option<f64>| p.map_or_else(|| "n/a".to_string(), |p| format!("{p:+.1}%"));
    let mut out = format!(
        "{:<width$}  {:>9}  {:>9}  {:>12}  {:>12}  {:>9}  {:>9}\n",
        "Name", "Calls A", "Calls B", "Seconds A", "Seconds B", "Total", "Per call"
    );
    for r in rows {
        let label = format!("{}{}", "  ".repeat(r.depth), r.name);
        let _ = writeln!(
            out,
            "{label:<width$}  {:>9}  {:>9}  {:>12.6}  {:>12.6}  {:>9}  {:>9}",
            r.calls.0,
            r.calls.1,
            r.seconds.0,
            r.seconds.1,
            pct(r.total_change_pct),
            pct(r.per_call_change_pct)
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub threads: usize,
    pub region: String,
    pub seconds: f64,
}

/// Runs `cfg` once per thread count, each inside its own pool, and
/// collects every region's inclusive time.
pub fn scaling_sweep(cfg: &RunConfig, thread_counts: &[usize]) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for &threads in thread_counts {
        if threads == 0 {
            return Err(Error::Invalid("thread counts must be at least 1".into()));
        }
        let outcome = with_threads(threads, || run(cfg))?;
        log::info!("sweep: {threads} threads took {:.3} s", outcome.report.get(ROOT).map_or(0.0, |r| r.inclusive_seconds));
        rows.extend(outcome.report.rows.into_iter().map(|r| ScalingRow {
            threads,
            region: r.name,
            seconds: r.inclusive_seconds,
        }));
    }
    Ok(rows)
}

pub fn write_scaling_csv(rows: &[ScalingRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `f` inside a fresh rayon pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|source| Error::ThreadPool { threads, source })?;
    pool.install(f)
}
