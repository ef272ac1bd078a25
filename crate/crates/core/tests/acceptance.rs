//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p exgraph --test acceptance`. Hard failures make the
//! process exit non-zero. The scaling check only reports, and the dataset
//! check is skipped unless the volume is present (see `NUCLEON_ENV`).

mod common;

use std::path::PathBuf;
use std::time::Instant;

use common::*;
use exgraph::graphio::graph_to_string;
use exgraph::simplify::saddle_cost;
use exgraph::{
    bundle_arcs, cancel_persistence, classify_all, extract, run_pipeline, schwefel_field, split_into, trace_all, Dtype, Endian,
    ExtremumGraph, PipelineOptions, ScalarField, VertexId,
};

// Criterion 1/2 corpus sizes.
const CUBE_FIELDS: usize = 100;
const TESSERACT_FIELDS: usize = 20;
const ORACLE_BUDGET_SECS: f64 = 60.0;
// Criterion 3.
const BLOCK_COUNTS: [usize; 4] = [1, 2, 4, 7];
const WORKER_COUNTS: [usize; 2] = [1, 8];
// Criterion 4.
const NUCLEON_ENV: &str = "EXGRAPH_NUCLEON";
const NUCLEON_DIMS: [usize; 3] = [41, 41, 41];
const NUCLEON_CRITICAL: f64 = 421.0;
const NUCLEON_TOLERANCE: f64 = 0.02;
// Criterion 6.
const PERSISTENCE_T: f64 = 0.05;
const BUNDLE_FIELDS: usize = 100;
// Criterion 8.
const SPEEDUP_WORKERS: usize = 8;
const SPEEDUP_RATIO: f64 = 0.5;
const SCALING_SIZES: [usize; 3] = [64, 128, 256];
const LINEAR_R2: f64 = 0.95;
// Criterion 9.
const REPEATS: usize = 5;

#[derive(PartialEq)]
enum Status {
    Pass,
    Fail,
    Skip,
    /// Failed a criterion that only reports.
    Soft,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    let status = if ok { Status::Pass } else { Status::Fail };
    Outcome { status, detail }
}

fn options(workers: usize) -> PipelineOptions {
    PipelineOptions {
        workers,
        ..PipelineOptions::default()
    }
}

fn graph(f: &ScalarField, budget: usize, workers: usize) -> ExtremumGraph {
    extract(f, budget, &options(workers)).expect("extraction").graph
}

/// Number of vertices whose classification differs from the oracle.
fn classification_mismatches(f: &ScalarField) -> usize {
    let cls = classify_all(f);
    let oracle = oracle_classify(f);
    oracle
        .iter()
        .enumerate()
        .filter(|(v, o)| {
            let got = cls.get(VertexId(*v as u64));
            (got.beta_plus, got.beta_minus, got.criticality) != (o.beta_plus, o.beta_minus, o.criticality)
        })
        .count()
}

fn tracing_matches(f: &ScalarField) -> bool {
    let cls = classify_all(f);
    let mut got: Vec<ArcTuple> = trace_all(&cls, true)
        .expect("tracing")
        .into_iter()
        .map(|p| {
            let pts = p.vertices.expect("geometry").iter().map(|v| v.0).collect();
            (p.saddle.0, p.maximum.0, p.first.0, pts)
        })
        .collect();
    got.sort();
    got == oracle_arcs(&oracle_classify(f))
}

/// Serialized graph is identical for every block count and worker count.
fn block_invariant(f: &ScalarField) -> (bool, usize) {
    let mut docs = Vec::new();
    for &count in &BLOCK_COUNTS {
        let blocks = split_into(f.domain(), count).expect("blocks");
        for &w in &WORKER_COUNTS {
            let out = run_pipeline(f, &blocks, &options(w)).expect("extraction");
            docs.push(graph_to_string(&out.graph));
        }
    }
    (docs.windows(2).all(|w| w[0] == w[1]), docs.len())
}

fn corpus() -> Vec<ScalarField> {
    let mut fields = Vec::new();
    for i in 0..CUBE_FIELDS as u64 {
        fields.push(if i % 2 == 0 {
            random_field(&[8, 8, 8], i)
        } else {
            random_tied_field(&[8, 8, 8], 6, i)
        });
    }
    for i in 0..TESSERACT_FIELDS as u64 {
        fields.push(random_field(&[6, 6, 6, 6], 1000 + i));
    }
    fields
}

fn criterion_1(fields: &[ScalarField]) -> Outcome {
    let t = Instant::now();
    let bad = fields.iter().filter(|f| classification_mismatches(f) > 0).count();
    let secs = t.elapsed().as_secs_f64();
    judge(
        bad == 0 && secs < ORACLE_BUDGET_SECS,
        format!("{} fields, {bad} with mismatches, {secs:.1}s (limit {ORACLE_BUDGET_SECS}s)", fields.len()),
    )
}

fn criterion_2(fields: &[ScalarField]) -> Outcome {
    let bad = fields.iter().filter(|f| !tracing_matches(f)).count();
    judge(bad == 0, format!("{} fields, {bad} arc multisets differ", fields.len()))
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, f) in [
        ("schwefel 128^3", schwefel_field(&[128, 128, 128]).expect("schwefel")),
        ("random 64^3", random_field(&[64, 64, 64], 64)),
    ] {
        let (same, runs) = block_invariant(&f);
        ok &= same;
        notes.push(format!("{name}: {runs} runs {}", if same { "identical" } else { "DIFFER" }));
    }
    judge(ok, notes.join("; "))
}

fn nucleon_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var(NUCLEON_ENV) {
        return Some(PathBuf::from(p));
    }
    let local = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/nucleon.raw");
    local.exists().then_some(local)
}

fn criterion_4() -> Outcome {
    let Some(path) = nucleon_path() else {
        return Outcome {
            status: Status::Skip,
            detail: format!("volume not found; set {NUCLEON_ENV} or run scripts/fetch_data.sh"),
        };
    };
    let f = match ScalarField::load_raw(&path, &NUCLEON_DIMS, Dtype::U8, Endian::Little) {
        Ok(f) => f,
        Err(e) => return judge(false, format!("{}: {e}", path.display())),
    };
    let out = extract(&f, usize::MAX, &options(1)).expect("extraction");
    let total = out.stats.critical.total() as f64;
    let rel = (total - NUCLEON_CRITICAL).abs() / NUCLEON_CRITICAL;
    judge(
        rel <= NUCLEON_TOLERANCE,
        format!(
            "{total} critical points vs {NUCLEON_CRITICAL} (rel. error {:.2}%, limit {}%){}",
            rel * 100.0,
            NUCLEON_TOLERANCE * 100.0,
            if rel == 0.0 { ", exact" } else { "" }
        ),
    )
}

/// Path checks plus the arc count identity; returns a failure note.
fn path_contract(f: &ScalarField) -> Option<String> {
    let g = graph(f, usize::MAX, 1);
    let cls = classify_all(f);
    let bad = path_violations(f, &g);
    let beta: usize = cls.index().saddles.iter().map(|s| cls.get(s.vertex).beta_plus as usize).sum();
    if bad > 0 || g.arc_count() != beta || g.arc_count() < 2 * g.saddles().len() {
        return Some(format!(
            "{bad} bad arcs, {} arcs vs sum of upper components {beta}, {} saddles",
            g.arc_count(),
            g.saddles().len()
        ));
    }
    None
}

fn criterion_5(fields: &[ScalarField]) -> Outcome {
    let mut all: Vec<&ScalarField> = fields.iter().collect();
    let schwefel = schwefel_field(&[48, 48, 48]).expect("schwefel");
    let bumps = bumpy_field(&[24, 24, 24], 12, 7);
    all.push(&schwefel);
    all.push(&bumps);
    let failures: Vec<String> = all.iter().filter_map(|f| path_contract(f)).collect();
    judge(
        failures.is_empty(),
        format!("{} fields, {} violating{}", all.len(), failures.len(), failures.first().map_or(String::new(), |s| format!(" (first: {s})"))),
    )
}

fn criterion_6() -> Outcome {
    let mut problems = Vec::new();

    let mut checked = 0;
    for seed in 0..50 {
        let g = graph(&random_field(&[8, 8, 8], 500 + seed), usize::MAX, 1);
        let c = cancel_persistence(&g, PERSISTENCE_T).expect("persistence");
        let limit = PERSISTENCE_T * g.header().span();
        let cheap = c
            .saddles()
            .keys()
            .filter(|&&s| c.maxima_of(s).len() == 2 && saddle_cost(&c, s).expect("cost") <= limit)
            .count();
        if cheap > 0 {
            problems.push(format!("seed {seed}: {cheap} simple saddles at or below threshold"));
        }
        checked += 1;
    }

    let mut connected = 0;
    for seed in 0..50 {
        let g = graph(&random_field(&[8, 8, 8], 700 + seed), usize::MAX, 1);
        if maxima_components(&g).len() != 1 {
            continue;
        }
        connected += 1;
        let c = cancel_persistence(&g, 1.0).expect("persistence");
        if c.maxima().len() != 1 || !c.saddles().is_empty() {
            problems.push(format!("seed {seed}: t=1 left {} maxima, {} saddles", c.maxima().len(), c.saddles().len()));
        }
    }

    for seed in 0..BUNDLE_FIELDS as u64 {
        let g = graph(&random_tied_field(&[8, 8, 8], 5, 900 + seed), usize::MAX, 1);
        if maxima_components(&bundle_arcs(&g)) != maxima_components(&g) {
            problems.push(format!("seed {seed}: bundling changed connectivity"));
        }
    }
    if connected == 0 {
        problems.push("no connected field to test t=1".into());
    }
    judge(
        problems.is_empty(),
        format!(
            "persistence on {checked} fields, t=1 on {connected} connected fields, bundling on {BUNDLE_FIELDS} fields{}",
            problems.first().map_or(String::new(), |p| format!("; {p}"))
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for dims in [vec![16usize; 4], vec![8usize; 5]] {
        let f = schwefel_field(&dims).expect("schwefel");
        let g = graph(&f, usize::MAX, 1);
        let nonempty = g.saddles().len() > 0 && g.arc_count() > 0;
        let classified = classification_mismatches(&f) == 0;
        let traced = tracing_matches(&f);
        let (invariant, _) = block_invariant(&f);
        let paths = path_contract(&f).is_none();
        let good = nonempty && classified && traced && invariant && paths;
        ok &= good;
        notes.push(format!(
            "{}^{}: {} maxima, {} saddles, oracle {}, trace {}, blocks {}, paths {}",
            dims[0],
            dims.len(),
            g.maxima().len(),
            g.saddles().len(),
            classified,
            traced,
            invariant,
            paths
        ));
    }
    judge(ok, notes.join("; "))
}

fn criterion_8() -> Outcome {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let f = schwefel_field(&[256, 256, 256]).expect("schwefel");
    let wall = |w: usize| {
        let t = Instant::now();
        let out = extract(&f, usize::MAX, &options(w)).expect("extraction");
        (t.elapsed().as_secs_f64(), out)
    };
    let (t1, one) = wall(1);
    let (t8, _) = wall(SPEEDUP_WORKERS);
    let ratio = t8 / t1;

    let mut sizes = Vec::new();
    let mut times = Vec::new();
    for &n in &SCALING_SIZES {
        let secs = if n == 256 {
            one.stats.classify_secs
        } else {
            let g = schwefel_field(&[n, n, n]).expect("schwefel");
            extract(&g, usize::MAX, &options(1)).expect("extraction").stats.classify_secs
        };
        sizes.push((n * n * n) as f64);
        times.push(secs);
    }
    let r2 = r_squared(&sizes, &times);
    let ok = ratio <= SPEEDUP_RATIO && r2 >= LINEAR_R2;
    Outcome {
        status: if ok { Status::Pass } else { Status::Soft },
        detail: format!(
            "{cpus} cpus; 256^3 wall {t1:.2}s (1 worker) vs {t8:.2}s ({SPEEDUP_WORKERS} workers), ratio {ratio:.2} (limit {SPEEDUP_RATIO}); \
             classification {} s over {SCALING_SIZES:?}^3, R^2 {r2:.4} (limit {LINEAR_R2})",
            times.iter().map(|t| format!("{t:.3}")).collect::<Vec<_>>().join("/")
        ),
    }
}

fn criterion_9() -> Outcome {
    let f = schwefel_field(&[64, 64, 64]).expect("schwefel");
    let blocks = split_into(f.domain(), 4).expect("blocks");
    let docs: Vec<String> = (0..REPEATS)
        .map(|_| {
            let g = run_pipeline(&f, &blocks, &options(4)).expect("extraction").graph;
            graph_to_string(&cancel_persistence(&bundle_arcs(&g), PERSISTENCE_T).expect("persistence"))
        })
        .collect();
    let same = docs.windows(2).all(|w| w[0] == w[1]);
    judge(same, format!("{REPEATS} runs, {} bytes each", docs[0].len()))
}

fn main() {
    let fields = corpus();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("classification matches oracle", Box::new(|| criterion_1(&fields))),
        ("tracing matches oracle", Box::new(|| criterion_2(&fields))),
        ("block and worker invariance", Box::new(criterion_3)),
        ("nucleon critical points", Box::new(criterion_4)),
        ("path invariants", Box::new(|| criterion_5(&fields))),
        ("simplification contracts", Box::new(criterion_6)),
        ("dimension generality", Box::new(criterion_7)),
        ("scaling (report only)", Box::new(criterion_8)),
        ("determinism", Box::new(criterion_9)),
    ];
    let mut hard_failures = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => {
                hard_failures += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
            Status::Soft => "SOFT-FAIL",
        };
        println!("criterion {} {tag}: {name}: {} [{:.1}s]", i + 1, o.detail, t.elapsed().as_secs_f64());
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
