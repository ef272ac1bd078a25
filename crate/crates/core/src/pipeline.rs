//! Block-streamed extraction.
//!
//! The vertex array is cut into slabs along the last axis and grouped into
//! blocks. A classification stage processes blocks strictly in order, each
//! from a window holding its core plus one ghost slab per side, and publishes
//! a watermark after every block: all vertices below it are classified.
//! Concurrently, a tracing stage admits the saddles of each finished block and
//! advances their paths until they reach a maximum or step onto a vertex at or
//! beyond the watermark. Paused paths are parked under the block that will
//! classify their last vertex and resumed when that block completes.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, OnceLock};
use std::thread;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{ClassCell, Classifier, CriticalCounts, CriticalIndex};
use crate::error::{Error, Result};
use crate::field::{with_samples, ScalarField};
use crate::graph::{ExtremumGraph, GraphKind};
use crate::grid::GridDomain;
use crate::trace::{Advance, CellLookup, GradientPath, Tracer};

pub use crate::trace::PartialPath;

/// Default vertex budget per block (core plus ghosts).
pub const DEFAULT_BLOCK_BUDGET: usize = 1 << 24;

/// A run of whole slabs owned by one classification step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: usize,
    /// Owned vertices.
    pub core: Range<usize>,
    /// Slab below the core, owned by the previous block.
    pub ghost_lo: Option<Range<usize>>,
    /// Slab above the core, owned by the next block.
    pub ghost_hi: Option<Range<usize>>,
}

impl Block {
    /// Core plus ghosts: every sample the block's classification reads.
    pub fn window(&self) -> Range<usize> {
        let start = self.ghost_lo.as_ref().map_or(self.core.start, |g| g.start);
        let end = self.ghost_hi.as_ref().map_or(self.core.end, |g| g.end);
        start..end
    }
}

/// Splits `domain` into slab-aligned blocks of at most `budget` vertices
/// including ghosts. Core sizes differ by at most one slab.
pub fn partition(domain: &GridDomain, budget: usize) -> Result<Vec<Block>> {
    let total = domain.len();
    if budget >= total {
        return Ok(vec![Block {
            id: 0,
            core: 0..total,
            ghost_lo: None,
            ghost_hi: None,
        }]);
    }
    let slab = domain.slab_len();
    let slabs = domain.slab_count();
    let max_slabs = budget / slab;
    if max_slabs < 3 {
        return Err(Error::invalid(format!(
            "block budget {budget} is below three slabs; the minimum feasible budget is {}",
            3 * slab
        )));
    }
    split_into(domain, slabs.div_ceil(max_slabs - 2))
}

/// Splits `domain` into exactly `count` slab-aligned blocks whose core sizes
/// differ by at most one slab.
pub fn split_into(domain: &GridDomain, count: usize) -> Result<Vec<Block>> {
    let slab = domain.slab_len();
    let slabs = domain.slab_count();
    if count == 0 || count > slabs {
        return Err(Error::invalid(format!(
            "cannot split {slabs} slabs into {count} blocks"
        )));
    }
    let (base, extra) = (slabs / count, slabs % count);
    let mut blocks = Vec::with_capacity(count);
    let mut lo = 0;
    for id in 0..count {
        let hi = lo + base + usize::from(id < extra);
        blocks.push(Block {
            id,
            core: lo * slab..hi * slab,
            ghost_lo: (lo > 0).then(|| (lo - 1) * slab..lo * slab),
            ghost_hi: (hi < slabs).then(|| hi * slab..(hi + 1) * slab),
        });
        lo = hi;
    }
    Ok(blocks)
}

/// A budget for which [`partition`] yields exactly `count` blocks.
pub fn budget_for_blocks(domain: &GridDomain, count: usize) -> Result<usize> {
    let slabs = domain.slab_count();
    if count == 0 || count > slabs {
        return Err(Error::invalid(format!(
            "cannot split {slabs} slabs into {count} blocks"
        )));
    }
    if count == 1 {
        return Ok(domain.len());
    }
    let core = slabs.div_ceil(count);
    let budget = (core + 2) * domain.slab_len();
    let got = partition(domain, budget)?.len();
    if got != count {
        return Err(Error::invalid(format!(
            "{slabs} slabs cannot be split into exactly {count} even blocks (nearest is {got})"
        )));
    }
    Ok(budget)
}

/// Classification frontier: every vertex below it is classified.
#[derive(Debug, Default)]
pub struct Watermark(AtomicUsize);

impl Watermark {
    #[inline]
    pub fn get(&self) -> usize {
        self.0.load(Ordering::Acquire)
    }

    fn advance(&self, to: usize) {
        let prev = self.0.swap(to, Ordering::AcqRel);
        debug_assert!(prev < to, "watermark must increase");
    }
}

/// How the two stages are interleaved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// Classification runs ahead while tracing proceeds.
    #[default]
    Concurrent,
    /// Block `b + 1` is classified only after tracing has gone as far as it
    /// can on blocks `0..=b`. Maximizes parking; used to exercise resumption.
    Lockstep,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub kind: GraphKind,
    pub workers: usize,
    pub geometry: bool,
    pub schedule: Schedule,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            kind: GraphKind::Max,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
            geometry: true,
            schedule: Schedule::Concurrent,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PipelineStats {
    pub block_count: usize,
    pub workers: usize,
    /// Largest number of simultaneously parked paths.
    pub parked_peak: usize,
    pub parks: usize,
    pub resumes: usize,
    /// Vertices appended by the tracer over all paths.
    pub visits: u64,
    pub paths: usize,
    pub critical: CriticalCounts,
    /// Watermark after each block.
    pub watermarks: Vec<usize>,
    pub classify_secs: f64,
    pub trace_secs: f64,
    pub total_secs: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub graph: ExtremumGraph,
    pub index: CriticalIndex,
    pub stats: PipelineStats,
}

/// Per-block classification results, readable while later blocks are written.
struct BlockCells {
    slab_len: usize,
    slab_block: Vec<u32>,
    starts: Vec<usize>,
    cells: Vec<OnceLock<Vec<ClassCell>>>,
}

impl BlockCells {
    fn new(domain: &GridDomain, blocks: &[Block]) -> Self {
        let slab_len = domain.slab_len();
        let mut slab_block = vec![0u32; domain.slab_count()];
        for b in blocks {
            for s in b.core.start / slab_len..b.core.end / slab_len {
                slab_block[s] = b.id as u32;
            }
        }
        BlockCells {
            slab_len,
            slab_block,
            starts: blocks.iter().map(|b| b.core.start).collect(),
            cells: blocks.iter().map(|_| OnceLock::new()).collect(),
        }
    }

    #[inline]
    fn block_of(&self, v: usize) -> usize {
        self.slab_block[v / self.slab_len] as usize
    }
}

impl CellLookup for BlockCells {
    #[inline]
    fn cell(&self, v: usize) -> Option<ClassCell> {
        let b = self.block_of(v);
        self.cells[b].get().map(|c| c[v - self.starts[b]])
    }
}

struct BlockDone {
    id: usize,
    index: CriticalIndex,
    secs: f64,
}

fn check_blocks(domain: &GridDomain, blocks: &[Block]) -> Result<()> {
    let slab = domain.slab_len();
    let mut next = 0;
    for (i, b) in blocks.iter().enumerate() {
        let aligned = b.core.start % slab == 0 && b.core.end % slab == 0;
        if b.id != i || b.core.start != next || b.core.end <= b.core.start || !aligned {
            return Err(Error::invalid(format!("block {i} does not continue a slab partition")));
        }
        let lo_ok = match &b.ghost_lo {
            None => b.core.start == 0,
            Some(g) => g.end == b.core.start && g.len() == slab,
        };
        let hi_ok = match &b.ghost_hi {
            None => b.core.end == domain.len(),
            Some(g) => g.start == b.core.end && g.len() == slab,
        };
        if !(lo_ok && hi_ok) {
            return Err(Error::invalid(format!("block {i} has inconsistent ghost slabs")));
        }
        next = b.core.end;
    }
    if next != domain.len() {
        return Err(Error::invalid("blocks do not cover the grid"));
    }
    Ok(())
}

/// Extracts the extremum graph of `field` (whose maximum graph is wanted)
/// block by block. The result does not depend on the blocks or worker count.
pub fn run_pipeline(field: &ScalarField, blocks: &[Block], options: &PipelineOptions) -> Result<PipelineOutput> {
    let started = Instant::now();
    let domain = field.domain();
    check_blocks(domain, blocks)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| Error::internal(format!("worker pool: {e}")))?;
    let classifier = Classifier::new(domain);
    let store = BlockCells::new(domain, blocks);
    let watermark = Watermark::default();
    let lockstep = options.schedule == Schedule::Lockstep;

    let mut stats = PipelineStats {
        block_count: blocks.len(),
        workers: options.workers.max(1),
        ..PipelineStats::default()
    };
    let mut index = CriticalIndex::default();
    let mut finished: Vec<GradientPath> = Vec::new();

    thread::scope(|scope| -> Result<()> {
        let (done_tx, done_rx) = mpsc::channel::<BlockDone>();
        let (ack_tx, ack_rx) = mpsc::channel::<()>();

        let (classifier, store, watermark, pool) = (&classifier, &store, &watermark, &pool);
        scope.spawn(move || {
            for block in blocks {
                if lockstep && block.id > 0 && ack_rx.recv().is_err() {
                    return;
                }
                let t = Instant::now();
                let window = block.window();
                let mut cells = vec![ClassCell::default(); block.core.len()];
                let block_index = pool.install(|| {
                    with_samples!(field.data(), |s| classifier.classify_block(
                        &s[window.clone()],
                        window.start,
                        block.core.clone(),
                        &mut cells
                    ))
                });
                store.cells[block.id]
                    .set(cells)
                    .expect("each block is classified once");
                watermark.advance(block.core.end);
                let msg = BlockDone {
                    id: block.id,
                    index: block_index,
                    secs: t.elapsed().as_secs_f64(),
                };
                if done_tx.send(msg).is_err() {
                    return;
                }
            }
        });

        let tracer = Tracer::new(classifier, store);
        let mut parked: BTreeMap<usize, Vec<PartialPath>> = BTreeMap::new();
        let mut parked_now = 0usize;
        let result = (|| -> Result<()> {
            for done in done_rx.iter() {
                stats.classify_secs += done.secs;
                stats.watermarks.push(watermark.get().min(blocks[done.id].core.end));
                let t = Instant::now();

                let mut batch: Vec<PartialPath> = done
                    .index
                    .saddles
                    .iter()
                    .flat_map(|s| PartialPath::for_saddle(s, options.geometry))
                    .collect();
                let later = parked.split_off(&(done.id + 1));
                for (_, paths) in std::mem::replace(&mut parked, later) {
                    parked_now -= paths.len();
                    stats.resumes += paths.len();
                    batch.extend(paths);
                }
                index.append(done.index);

                let advanced: Vec<Advance> = pool.install(|| {
                    batch
                        .into_par_iter()
                        .map(|p| tracer.advance(p, || watermark.get()))
                        .collect::<Result<_>>()
                })?;
                for a in advanced {
                    match a {
                        Advance::Finished(p) => finished.push(p),
                        Advance::Parked(p) => {
                            let b = store.block_of(p.last.index());
                            if b <= done.id {
                                return Err(Error::internal(format!(
                                    "path parked on block {b} which is already classified"
                                )));
                            }
                            parked.entry(b).or_default().push(p);
                            parked_now += 1;
                            stats.parks += 1;
                        }
                    }
                }
                stats.parked_peak = stats.parked_peak.max(parked_now);
                stats.trace_secs += t.elapsed().as_secs_f64();
                if lockstep {
                    // The classifier may already be gone after the last block.
                    let _ = ack_tx.send(());
                }
            }
            if parked_now > 0 {
                return Err(Error::internal(format!(
                    "{parked_now} parked paths wait on blocks that never completed"
                )));
            }
            Ok(())
        })();
        drop(ack_tx);
        drop(done_rx);
        result
    })?;

    if stats.watermarks.last().copied().unwrap_or(0) != domain.len() {
        return Err(Error::internal("classification stopped before the last block"));
    }
    finished.sort_unstable_by_key(|p| (p.saddle, p.ordinal));
    stats.visits = finished.iter().map(|p| p.visited).sum();
    stats.paths = finished.len();
    stats.critical = index.counts;
    let graph = ExtremumGraph::from_paths(field, options.kind, &index, finished, options.geometry)?;
    stats.total_secs = started.elapsed().as_secs_f64();
    Ok(PipelineOutput { graph, index, stats })
}

/// Partitions, negates for minimum graphs, and runs the pipeline.
pub fn extract(field: &ScalarField, budget: usize, options: &PipelineOptions) -> Result<PipelineOutput> {
    let blocks = partition(field.domain(), budget)?;
    match options.kind {
        GraphKind::Max => run_pipeline(field, &blocks, options),
        GraphKind::Min => run_pipeline(&field.negate(), &blocks, options),
    }
}
