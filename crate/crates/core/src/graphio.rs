//! Graph documents and run reports.
//!
//! The structured-text document is line oriented, canonical and versioned:
//!
//! ```text
//! EXGRAPH 1
//! tool exgraph 0.1.0
//! kind max
//! dims 3 64 64 64
//! dtype f64
//! range -837.9657 837.9657
//! geometry on
//! trail 1
//! step bundle
//! nodes 2
//! 17 S 10.5
//! 4242 M 99.25
//! arcs 1
//! 17 4242 18 3 17 18 4242
//! end
//! ```
//!
//! Node lines are `vertex kind value` sorted by vertex; arc lines are
//! `saddle maximum first npoints vertices...` sorted by `(saddle, maximum,
//! first)`, with `npoints = 0` when geometry is off.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Dtype, Scalar};
use crate::graph::{ArcKey, ExtremumGraph, GraphHeader, GraphKind};
use crate::grid::{VertexId, MAX_DIM};

pub const FORMAT_MAGIC: &str = "EXGRAPH";
pub const FORMAT_VERSION: u32 = 1;
pub const TOOL: &str = concat!("exgraph ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    /// Two CSV files next to the given path: `*.nodes.csv` and `*.arcs.csv`.
    Tabular,
}

/// Node and arc table paths used by [`Format::Tabular`].
pub fn tabular_paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("nodes.csv"), path.with_extension("arcs.csv"))
}

/// Writes to a temporary file in the target directory, then renames it into
/// place so a failed write leaves nothing behind.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Renders the structured-text document.
pub fn graph_to_string(g: &ExtremumGraph) -> String {
    let mut out = Vec::new();
    render_text(g, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("document is ASCII")
}

fn render_text(g: &ExtremumGraph, w: &mut dyn Write) -> std::io::Result<()> {
    let h = g.header();
    writeln!(w, "{FORMAT_MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "tool {TOOL}")?;
    writeln!(w, "kind {}", h.kind)?;
    write!(w, "dims {}", h.dims.len())?;
    for d in &h.dims {
        write!(w, " {d}")?;
    }
    writeln!(w)?;
    writeln!(w, "dtype {}", h.dtype)?;
    writeln!(w, "range {} {}", h.value_range.0, h.value_range.1)?;
    writeln!(w, "geometry {}", if h.geometry { "on" } else { "off" })?;
    writeln!(w, "trail {}", h.trail.len())?;
    for step in &h.trail {
        writeln!(w, "step {step}")?;
    }

    let mut nodes: Vec<(VertexId, char, Scalar)> = g
        .maxima()
        .iter()
        .map(|(&v, &x)| (v, 'M', x))
        .chain(g.saddles().iter().map(|(&v, &x)| (v, 'S', x)))
        .collect();
    nodes.sort_unstable_by_key(|n| n.0);
    writeln!(w, "nodes {}", nodes.len())?;
    for (v, k, x) in nodes {
        writeln!(w, "{v} {k} {x}")?;
    }

    writeln!(w, "arcs {}", g.arc_count())?;
    for (k, geom) in g.arcs() {
        let pts = geom.as_deref().unwrap_or(&[]);
        write!(w, "{} {} {} {}", k.saddle, k.maximum, k.first, pts.len())?;
        for p in pts {
            write!(w, " {p}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "end")
}

fn render_nodes(g: &ExtremumGraph, w: &mut dyn Write) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["vertex", "kind", "value"])?;
    let mut nodes: Vec<(VertexId, &str, Scalar)> = g
        .maxima()
        .iter()
        .map(|(&v, &x)| (v, "maximum", x))
        .chain(g.saddles().iter().map(|(&v, &x)| (v, "saddle", x)))
        .collect();
    nodes.sort_unstable_by_key(|n| n.0);
    for (v, k, x) in nodes {
        csv.write_record([v.to_string(), k.to_string(), x.to_string()])?;
    }
    csv.flush()
}

fn render_arcs(g: &ExtremumGraph, w: &mut dyn Write) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["saddle", "maximum", "first", "npoints", "vertices"])?;
    for (k, geom) in g.arcs() {
        let pts = geom.as_deref().unwrap_or(&[]);
        let list = pts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        csv.write_record([
            k.saddle.to_string(),
            k.maximum.to_string(),
            k.first.to_string(),
            pts.len().to_string(),
            list,
        ])?;
    }
    csv.flush()
}

pub fn write_graph(g: &ExtremumGraph, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    match format {
        Format::Text => write_atomic(path, |w| render_text(g, w)),
        Format::Tabular => {
            let (nodes, arcs) = tabular_paths(path);
            write_atomic(&nodes, |w| render_nodes(g, w))?;
            write_atomic(&arcs, |w| render_arcs(g, w)).inspect_err(|_| {
                let _ = std::fs::remove_file(&nodes);
            })
        }
    }
}

/// Reads a structured-text document. The header kind is kept as written.
pub fn read_graph(path: impl AsRef<Path>) -> Result<ExtremumGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_graph(BufReader::new(file), path)
}

/// Parses a structured-text document; `origin` labels errors.
pub fn parse_graph(reader: impl BufRead, origin: &Path) -> Result<ExtremumGraph> {
    Parser {
        lines: reader.lines(),
        origin,
        line: 0,
    }
    .document()
}

struct Parser<'p, L> {
    lines: L,
    origin: &'p Path,
    line: usize,
}

impl<L: Iterator<Item = std::io::Result<String>>> Parser<'_, L> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_path_buf(),
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io(self.origin, e)),
            None => Err(self.err("unexpected end of file")),
        }
    }

    /// Next line, which must start with `key`; returns the remaining fields.
    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.next_line()?;
        let mut it = l.split_ascii_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(format!("expected '{key}'")));
        }
        Ok(it.map(str::to_owned).collect())
    }

    fn single(&mut self, key: &str) -> Result<String> {
        let mut f = self.keyed(key)?;
        if f.len() != 1 {
            return Err(self.err(format!("'{key}' takes one field")));
        }
        Ok(f.pop().expect("one field"))
    }

    fn number<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad {what} '{s}'")))
    }

    fn vertex(&self, s: &str) -> Result<VertexId> {
        self.number::<u64>(s, "vertex").map(VertexId)
    }

    fn scalar(&self, s: &str, dtype: Dtype) -> Result<Scalar> {
        Scalar::parse(s, dtype).ok_or_else(|| self.err(format!("bad {dtype} value '{s}'")))
    }

    fn document(mut self) -> Result<ExtremumGraph> {
        let magic = self.next_line()?;
        match magic.split_once(' ') {
            Some((FORMAT_MAGIC, v)) if v == FORMAT_VERSION.to_string() => {}
            Some((FORMAT_MAGIC, v)) => {
                return Err(Error::Version {
                    path: self.origin.to_path_buf(),
                    found: v.to_owned(),
                    expected: FORMAT_VERSION,
                })
            }
            _ => return Err(self.err("not an extremum graph document")),
        }
        self.keyed("tool")?;
        let kind: GraphKind = {
            let k = self.single("kind")?;
            k.parse().map_err(|_| self.err(format!("bad kind '{k}'")))?
        };
        let dims = {
            let f = self.keyed("dims")?;
            let n: usize = self.number(f.first().map_or("", String::as_str), "dimension")?;
            if n == 0 || n > MAX_DIM || f.len() != n + 1 {
                return Err(self.err("dims line does not match its dimension"));
            }
            f[1..]
                .iter()
                .map(|d| self.number::<usize>(d, "extent"))
                .collect::<Result<Vec<_>>>()?
        };
        let dtype: Dtype = {
            let d = self.single("dtype")?;
            d.parse().map_err(|_| self.err(format!("bad dtype '{d}'")))?
        };
        let range = {
            let f = self.keyed("range")?;
            if f.len() != 2 {
                return Err(self.err("'range' takes two fields"));
            }
            (self.scalar(&f[0], dtype)?, self.scalar(&f[1], dtype)?)
        };
        let geometry = match self.single("geometry")?.as_str() {
            "on" => true,
            "off" => false,
            other => return Err(self.err(format!("bad geometry flag '{other}'"))),
        };
        let steps: usize = {
            let n = self.single("trail")?;
            self.number(&n, "trail length")?
        };
        let mut trail = Vec::with_capacity(steps.min(1024));
        for _ in 0..steps {
            trail.push(self.single("step")?);
        }
        let mut g = ExtremumGraph::new(GraphHeader {
            dims,
            dtype,
            kind,
            value_range: range,
            geometry,
            trail,
        });

        let count: usize = {
            let n = self.single("nodes")?;
            self.number(&n, "node count")?
        };
        let mut last: Option<VertexId> = None;
        for _ in 0..count {
            let l = self.next_line()?;
            let f: Vec<&str> = l.split_ascii_whitespace().collect();
            if f.len() != 3 {
                return Err(self.err("node line needs vertex, kind and value"));
            }
            let v = self.vertex(f[0])?;
            if last.is_some_and(|p| p >= v) {
                return Err(self.err("nodes are not in increasing vertex order"));
            }
            last = Some(v);
            let x = self.scalar(f[2], dtype)?;
            match f[1] {
                "M" => g.add_maximum(v, x),
                "S" => g.add_saddle(v, x),
                other => return Err(self.err(format!("bad node kind '{other}'"))),
            }
        }

        let count: usize = {
            let n = self.single("arcs")?;
            self.number(&n, "arc count")?
        };
        let mut last: Option<ArcKey> = None;
        for _ in 0..count {
            let l = self.next_line()?;
            let f: Vec<&str> = l.split_ascii_whitespace().collect();
            if f.len() < 4 {
                return Err(self.err("arc line needs saddle, maximum, first and npoints"));
            }
            let key = ArcKey {
                saddle: self.vertex(f[0])?,
                maximum: self.vertex(f[1])?,
                first: self.vertex(f[2])?,
            };
            if last.is_some_and(|p| p >= key) {
                return Err(self.err("arcs are not in canonical order"));
            }
            last = Some(key);
            let npts: usize = self.number(f[3], "point count")?;
            if f.len() != 4 + npts {
                return Err(self.err(format!("arc declares {npts} points but has {}", f.len() - 4)));
            }
            if geometry != (npts > 0) {
                return Err(self.err("arc geometry disagrees with the header"));
            }
            let geom = if geometry {
                Some(f[4..].iter().map(|s| self.vertex(s)).collect::<Result<Vec<_>>>()?)
            } else {
                None
            };
            g.insert_arc(key, geom).map_err(|e| self.err(e.to_string()))?;
        }
        if self.next_line()?.trim() != "end" {
            return Err(self.err("expected 'end'"));
        }
        g.validate().map_err(|e| self.err(e.to_string()))?;
        Ok(g)
    }
}

/// Wall time of each top-level stage, in seconds. Stages run one after
/// another, so they sum to at most `total`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StageTimes {
    pub load: f64,
    pub extract: f64,
    pub simplify: f64,
    pub write: f64,
    pub total: f64,
}

/// Busy time inside the extraction stage. Classification and tracing
/// overlap, so these may sum to more than the extraction wall time.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ExtractTimes {
    pub classify_busy: f64,
    pub trace_busy: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub dims: Vec<usize>,
    pub dtype: String,
    pub kind: String,
    pub workers: usize,
    pub block_count: usize,
    pub parked_peak: usize,
    pub parks: usize,
    pub critical_points: u64,
    pub maxima: u64,
    pub minima: u64,
    pub saddles: u64,
    pub saddles1: u64,
    pub multi_saddles: u64,
    pub raw_nodes: usize,
    pub raw_arcs: usize,
    pub nodes: usize,
    pub arcs: usize,
    pub simplification: Vec<String>,
    pub stages: StageTimes,
    pub extract: ExtractTimes,
}

pub fn report_to_string(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report is serializable")
}

pub fn write_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, report)?;
        writeln!(w)
    })
}
