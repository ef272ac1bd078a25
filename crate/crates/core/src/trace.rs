//! Gradient path tracing from (n-1)-saddles to maxima.
//!
//! From every upper-link representative of a saddle the tracer follows the
//! stored steepest-ascent neighbor until it reaches a maximum. Paths pass
//! through other critical vertices using their ascent neighbor as well.

use rayon::prelude::*;

use crate::classify::{ClassCell, Classification, Classifier, Criticality, Saddle};
use crate::error::{Error, Result};
use crate::grid::VertexId;

/// One saddle-to-maximum path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradientPath {
    pub saddle: VertexId,
    /// Upper-link representative the path leaves the saddle through.
    pub first: VertexId,
    pub maximum: VertexId,
    /// Position of `first` in the saddle's representative list.
    pub ordinal: u32,
    /// Full vertex list from saddle to maximum, when geometry is kept.
    pub vertices: Option<Vec<VertexId>>,
    /// Vertices appended by the tracer (every vertex but the saddle).
    pub visited: u64,
}

/// A path that may be paused at the classification frontier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialPath {
    pub saddle: VertexId,
    pub first: VertexId,
    /// Last vertex appended to the path.
    pub last: VertexId,
    pub ordinal: u32,
    pub prefix: Option<Vec<VertexId>>,
    pub visited: u64,
}

impl PartialPath {
    pub fn start(saddle: VertexId, first: VertexId, ordinal: u32, geometry: bool) -> Self {
        PartialPath {
            saddle,
            first,
            last: first,
            ordinal,
            prefix: geometry.then(|| vec![saddle, first]),
            visited: 1,
        }
    }

    /// All paths of a saddle, in representative order.
    pub fn for_saddle(saddle: &Saddle, geometry: bool) -> impl Iterator<Item = PartialPath> + '_ {
        saddle
            .reps
            .iter()
            .enumerate()
            .map(move |(i, &r)| PartialPath::start(saddle.vertex, r, i as u32, geometry))
    }

    fn finish(self) -> GradientPath {
        GradientPath {
            saddle: self.saddle,
            first: self.first,
            maximum: self.last,
            ordinal: self.ordinal,
            vertices: self.prefix,
            visited: self.visited,
        }
    }
}

/// Outcome of advancing a partial path.
#[derive(Debug)]
pub enum Advance {
    Finished(GradientPath),
    /// The last vertex is not classified yet.
    Parked(PartialPath),
}

/// Read access to classification cells.
pub trait CellLookup: Sync {
    /// Cell of vertex `v`, or `None` when it has not been classified.
    fn cell(&self, v: usize) -> Option<ClassCell>;
}

impl CellLookup for [ClassCell] {
    #[inline]
    fn cell(&self, v: usize) -> Option<ClassCell> {
        self.get(v).copied()
    }
}

/// Follows ascent neighbors over a set of classification cells.
pub struct Tracer<'a, L: CellLookup + ?Sized> {
    classifier: &'a Classifier,
    cells: &'a L,
}

impl<'a, L: CellLookup + ?Sized> Tracer<'a, L> {
    pub fn new(classifier: &'a Classifier, cells: &'a L) -> Self {
        Tracer { classifier, cells }
    }

    /// Extends `path` until it reaches a maximum or its last vertex lies at or
    /// beyond `frontier()`.
    pub fn advance(&self, mut path: PartialPath, frontier: impl Fn() -> usize) -> Result<Advance> {
        let limit = self.classifier.domain().len() as u64;
        loop {
            let u = path.last.index();
            if u >= frontier() {
                return Ok(Advance::Parked(path));
            }
            let cell = self.cells.cell(u).ok_or_else(|| {
                Error::internal(format!("vertex {u} below the frontier has no classification"))
            })?;
            if cell.criticality == Criticality::Maximum {
                return Ok(Advance::Finished(path.finish()));
            }
            let next = self.classifier.ascent(u, cell).ok_or_else(|| {
                Error::internal(format!("non-maximum vertex {u} has no ascent neighbor"))
            })?;
            path.visited += 1;
            if path.visited > limit {
                return Err(Error::internal(format!(
                    "path from saddle {} through {} revisits a vertex",
                    path.saddle, path.first
                )));
            }
            let next = VertexId::from(next);
            if let Some(p) = path.prefix.as_mut() {
                p.push(next);
            }
            path.last = next;
        }
    }

    fn complete(&self, path: PartialPath) -> Result<GradientPath> {
        match self.advance(path, || usize::MAX)? {
            Advance::Finished(p) => Ok(p),
            Advance::Parked(p) => Err(Error::internal(format!(
                "path from saddle {} parked without a frontier",
                p.saddle
            ))),
        }
    }
}

/// Traces one path per upper-link representative of `saddle`.
pub fn trace_gradient_paths(
    saddle: &Saddle,
    classification: &Classification,
    geometry: bool,
) -> Result<Vec<GradientPath>> {
    let tracer = Tracer::new(classification.classifier(), classification.cells());
    PartialPath::for_saddle(saddle, geometry)
        .map(|p| tracer.complete(p))
        .collect()
}

/// Traces the paths of all saddles in parallel (one task per saddle) on the
/// current rayon pool. Output is ordered by saddle, then representative.
pub fn trace_all(classification: &Classification, geometry: bool) -> Result<Vec<GradientPath>> {
    let per_saddle: Vec<Vec<GradientPath>> = classification
        .index()
        .saddles
        .par_iter()
        .map(|s| trace_gradient_paths(s, classification, geometry))
        .collect::<Result<_>>()?;
    Ok(per_saddle.into_iter().flatten().collect())
}
