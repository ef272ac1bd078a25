use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::Instant;

use exgraph::graphio::{graph_to_string, write_atomic, TOOL};
use exgraph::{run_pipeline, split_into, ScalarField};
use serde::Serialize;

use crate::config::{RunConfig, Source, Sweep};
use crate::error::{CliError, CliResult};
use crate::run::{generate, load, pipeline_options, progress};

#[derive(Debug, Serialize)]
pub struct BenchPoint {
    /// The swept quantity: workers, blocks or samples per axis.
    pub value: usize,
    pub dims: Vec<usize>,
    pub vertices: usize,
    pub workers: usize,
    pub blocks: usize,
    pub wall_secs: f64,
    pub classify_secs: f64,
    pub trace_secs: f64,
    pub parked_peak: usize,
    pub critical_points: u64,
    pub graph_hash: String,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub tool: String,
    pub sweep: String,
    pub kind: String,
    pub geometry: bool,
    pub points: Vec<BenchPoint>,
    /// Wall time of the first point over each point's.
    pub speedup: Vec<f64>,
    pub identical_graphs: bool,
    /// Classification time against vertex count (resolution sweeps).
    pub classify_fit: Option<LinearFit>,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

fn hash_text(s: &str) -> String {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    format!("{:016x}", h.finish())
}

fn measure(cfg: &RunConfig, field: &ScalarField, value: usize, workers: usize, blocks: usize) -> CliResult<BenchPoint> {
    let field = match cfg.kind {
        exgraph::GraphKind::Max => std::borrow::Cow::Borrowed(field),
        exgraph::GraphKind::Min => std::borrow::Cow::Owned(field.negate()),
    };
    let parts = split_into(field.domain(), blocks)?;
    let t = Instant::now();
    let out = run_pipeline(&field, &parts, &pipeline_options(cfg, workers))?;
    let wall = t.elapsed().as_secs_f64();
    Ok(BenchPoint {
        value,
        dims: field.domain().dims().to_vec(),
        vertices: field.domain().len(),
        workers,
        blocks,
        wall_secs: wall,
        classify_secs: out.stats.classify_secs,
        trace_secs: out.stats.trace_secs,
        parked_peak: out.stats.parked_peak,
        critical_points: out.stats.critical.total(),
        graph_hash: hash_text(&graph_to_string(&out.graph)),
    })
}

/// Blocks the configured budget yields for `field`.
fn budget_blocks(cfg: &RunConfig, field: &ScalarField) -> CliResult<usize> {
    Ok(exgraph::partition(field.domain(), cfg.budget)?.len())
}

pub fn bench(cfg: &RunConfig, sweep: &Sweep) -> CliResult<BenchReport> {
    let mut points = Vec::new();
    match sweep {
        Sweep::Threads(list) => {
            let field = load(cfg)?;
            let blocks = budget_blocks(cfg, &field)?;
            for &w in list {
                points.push(measure(cfg, &field, w, w, blocks)?);
                progress(cfg, format!("threads {w}: {:.3}s", points.last().map_or(0.0, |p| p.wall_secs)));
            }
        }
        Sweep::Blocks(list) => {
            let field = load(cfg)?;
            for &b in list {
                points.push(measure(cfg, &field, b, cfg.workers, b)?);
                progress(cfg, format!("blocks {b}: {:.3}s", points.last().map_or(0.0, |p| p.wall_secs)));
            }
        }
        Sweep::Resolution(list) => {
            let Source::Schwefel { lo, hi, dtype } = cfg.source else {
                return Err(CliError::usage("a resolution sweep needs the generator"));
            };
            let ndim = if cfg.dims.is_empty() { 3 } else { cfg.dims.len() };
            for &n in list {
                let field = generate(&vec![n; ndim], lo, hi, dtype)?;
                let blocks = budget_blocks(cfg, &field)?;
                points.push(measure(cfg, &field, n, cfg.workers, blocks)?);
                progress(cfg, format!("resolution {n}: {:.3}s", points.last().map_or(0.0, |p| p.wall_secs)));
            }
        }
    }

    let base = points.first().map_or(0.0, |p| p.wall_secs);
    let speedup = points
        .iter()
        .map(|p| if p.wall_secs > 0.0 { base / p.wall_secs } else { 0.0 })
        .collect();
    let identical_graphs = points.windows(2).all(|w| w[0].graph_hash == w[1].graph_hash);
    let classify_fit = match sweep {
        Sweep::Resolution(_) => {
            let x: Vec<f64> = points.iter().map(|p| p.vertices as f64).collect();
            let y: Vec<f64> = points.iter().map(|p| p.classify_secs).collect();
            linear_fit(&x, &y)
        }
        _ => None,
    };
    Ok(BenchReport {
        tool: TOOL.to_string(),
        sweep: sweep.name().to_string(),
        kind: cfg.kind.to_string(),
        geometry: cfg.geometry,
        points,
        speedup,
        identical_graphs,
        classify_fit,
    })
}

pub fn run_bench(cfg: &RunConfig, sweep: &Sweep) -> CliResult<()> {
    let report = bench(cfg, sweep)?;
    for (p, s) in report.points.iter().zip(&report.speedup) {
        eprintln!(
            "{} {:>6}: wall {:>9.4}s  classify {:>9.4}s  trace {:>9.4}s  speedup {s:>5.2}  hash {}",
            report.sweep, p.value, p.wall_secs, p.classify_secs, p.trace_secs, p.graph_hash
        );
    }
    if let Some(fit) = &report.classify_fit {
        eprintln!("classification time vs vertices: R^2 {:.4}", fit.r2);
    }
    if let Some(path) = &cfg.report {
        write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)
        })?;
    }
    Ok(())
}
