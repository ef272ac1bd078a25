use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use exgraph::graphio::{tabular_paths, ExtractTimes, StageTimes};
use exgraph::pipeline::PipelineOutput;
use exgraph::simplify::graph_stats;
use exgraph::{
    extract, sample_schwefel, simplify, write_graph, write_report, Dtype, ExtremumGraph, Format, PipelineOptions,
    RunReport, ScalarField, VertexId,
};

use crate::config::{RunConfig, Source};
use crate::error::CliResult;

pub fn progress(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.progress {
        println!("{}", msg.as_ref());
    }
}

/// Schwefel samples over `[lo, hi]^n`, stored as `dtype`.
pub fn generate(dims: &[usize], lo: f64, hi: f64, dtype: Dtype) -> CliResult<ScalarField> {
    let n = dims.len();
    let f = sample_schwefel(dims, &vec![lo; n], &vec![hi; n])?;
    if dtype == Dtype::F32 {
        let narrow: Vec<f32> = (0..f.domain().len() as u64)
            .map(|v| f.value(VertexId(v)).as_f64() as f32)
            .collect();
        return Ok(ScalarField::from_vec(dims, narrow)?);
    }
    Ok(f)
}

pub fn load(cfg: &RunConfig) -> CliResult<ScalarField> {
    match &cfg.source {
        Source::Raw { path, dtype, endian } => Ok(ScalarField::load_raw(path, &cfg.dims, *dtype, *endian)?),
        Source::Schwefel { lo, hi, dtype } => generate(&cfg.dims, *lo, *hi, *dtype),
    }
}

pub fn pipeline_options(cfg: &RunConfig, workers: usize) -> PipelineOptions {
    PipelineOptions {
        kind: cfg.kind,
        workers,
        geometry: cfg.geometry,
        ..PipelineOptions::default()
    }
}

fn output_files(cfg: &RunConfig) -> Vec<PathBuf> {
    let mut files = Vec::new();
    if let Some(out) = &cfg.out {
        match cfg.format {
            Format::Text => files.push(out.clone()),
            Format::Tabular => {
                let (n, a) = tabular_paths(out);
                files.extend([n, a]);
            }
        }
    }
    files
}

fn build_report(cfg: &RunConfig, field: &ScalarField, out: &PipelineOutput, graph: &ExtremumGraph) -> RunReport {
    let s = &out.stats;
    let c = &s.critical;
    RunReport {
        tool: exgraph::graphio::TOOL.to_string(),
        dims: field.domain().dims().to_vec(),
        dtype: field.dtype().to_string(),
        kind: cfg.kind.to_string(),
        workers: s.workers,
        block_count: s.block_count,
        parked_peak: s.parked_peak,
        parks: s.parks,
        critical_points: c.total(),
        maxima: c.maxima,
        minima: c.minima,
        saddles: c.saddles,
        saddles1: c.saddles1,
        multi_saddles: c.multi_saddles,
        raw_nodes: out.graph.node_count(),
        raw_arcs: out.graph.arc_count(),
        nodes: graph.node_count(),
        arcs: graph.arc_count(),
        simplification: cfg.steps.iter().map(|s| s.to_string()).collect(),
        stages: StageTimes::default(),
        extract: ExtractTimes {
            classify_busy: s.classify_secs,
            trace_busy: s.trace_secs,
        },
    }
}

/// Load, extract, simplify, then write the graph and report.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let start = Instant::now();
    let field = load(cfg)?;
    let t_load = start.elapsed().as_secs_f64();
    progress(cfg, format!("loaded {:?} {} grid in {t_load:.3}s", cfg.dims, field.dtype()));

    let t = Instant::now();
    let out = extract(&field, cfg.budget, &pipeline_options(cfg, cfg.workers))?;
    let t_extract = t.elapsed().as_secs_f64();
    progress(
        cfg,
        format!(
            "extracted {} maxima, {} saddles, {} arcs over {} blocks in {t_extract:.3}s",
            out.graph.maxima().len(),
            out.graph.saddles().len(),
            out.graph.arc_count(),
            out.stats.block_count
        ),
    );

    let t = Instant::now();
    let graph = simplify(&out.graph, &cfg.steps)?;
    let t_simplify = t.elapsed().as_secs_f64();
    if !cfg.steps.is_empty() {
        let st = graph_stats(&graph);
        progress(
            cfg,
            format!("simplified to {} maxima, {} saddles in {t_simplify:.3}s", st.maxima, st.saddles),
        );
    }

    let t = Instant::now();
    let mut report = build_report(cfg, &field, &out, &graph);
    let mut written = Vec::new();
    let result = (|| -> CliResult<()> {
        if let Some(path) = &cfg.out {
            write_graph(&graph, path, cfg.format)?;
            written = output_files(cfg);
        }
        report.stages = StageTimes {
            load: t_load,
            extract: t_extract,
            simplify: t_simplify,
            write: t.elapsed().as_secs_f64(),
            total: start.elapsed().as_secs_f64(),
        };
        if let Some(path) = &cfg.report {
            write_report(&report, path)?;
        }
        Ok(())
    })();
    if result.is_err() {
        // Only files this run created; a failed write leaves no file behind.
        for f in &written {
            let _ = fs::remove_file(f);
        }
    }
    result?;

    eprintln!(
        "exgraph: {} critical points; graph has {} nodes and {} arcs",
        report.critical_points, report.nodes, report.arcs
    );
    Ok(())
}
