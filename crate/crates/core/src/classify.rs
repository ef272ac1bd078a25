//! Critical point classification from link connectivity.
//!
//! Every vertex is classified independently: the link vertices are split into
//! an upper and a lower part by the perturbed order, a small union-find joins
//! the endpoints of induced link edges that lie on the same side, and the
//! number of upper and lower components decides the criticality. The same
//! pass records the steepest-ascent neighbor (the greatest upper-link vertex)
//! and, for saddles, the greatest vertex of every upper-link component.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{above, with_samples, Sample, ScalarField};
use crate::grid::{GridDomain, NeighborOffsets, VertexId, MAX_LINK};

/// Vertices per data-parallel work item.
const CHUNK: usize = 4096;

const NO_ASCENT: u16 = u16::MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[repr(u8)]
pub enum Criticality {
    #[default]
    Regular,
    Maximum,
    Minimum,
    Saddle1,
    /// Saddle with at least two upper-link components; the node type of the
    /// maximum graph.
    SaddleNminus1,
}

impl Criticality {
    pub fn is_critical(self) -> bool {
        self != Criticality::Regular
    }

    fn from_betti(beta_plus: u16, beta_minus: u16) -> Self {
        if beta_plus == 0 {
            Criticality::Maximum
        } else if beta_minus == 0 {
            Criticality::Minimum
        } else if beta_plus >= 2 {
            Criticality::SaddleNminus1
        } else if beta_minus >= 2 {
            Criticality::Saddle1
        } else {
            Criticality::Regular
        }
    }
}

/// Compact per-vertex classification record (8 bytes).
///
/// The ascent neighbor is stored as a position in the dimension's
/// [`NeighborOffsets`] table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ClassCell {
    pub beta_plus: u16,
    pub beta_minus: u16,
    ascent: u16,
    pub criticality: Criticality,
    /// Both saddle rows apply (`beta_plus >= 2` and `beta_minus >= 2`).
    pub multi_class: bool,
}

impl ClassCell {
    #[inline]
    pub fn ascent_offset(self) -> Option<usize> {
        (self.ascent != NO_ASCENT).then_some(self.ascent as usize)
    }
}

/// Decoded classification of one vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VertexClassification {
    pub criticality: Criticality,
    pub beta_plus: u32,
    pub beta_minus: u32,
    pub ascent: Option<VertexId>,
    pub multi_class: bool,
}

/// An (n-1)-saddle with the greatest vertex of each upper-link component,
/// sorted from the greatest down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Saddle {
    pub vertex: VertexId,
    pub reps: Vec<VertexId>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CriticalCounts {
    pub maxima: u64,
    pub minima: u64,
    pub saddles: u64,
    pub saddles1: u64,
    /// (n-1)-saddles with more than two upper-link components.
    pub multi_saddles: u64,
    pub multi_class: u64,
}

impl CriticalCounts {
    /// All non-regular vertices.
    pub fn total(&self) -> u64 {
        self.maxima + self.minima + self.saddles + self.saddles1
    }

    fn add(&mut self, o: &CriticalCounts) {
        self.maxima += o.maxima;
        self.minima += o.minima;
        self.saddles += o.saddles;
        self.saddles1 += o.saddles1;
        self.multi_saddles += o.multi_saddles;
        self.multi_class += o.multi_class;
    }
}

/// Maxima and (n-1)-saddles of a classified region, in vertex order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CriticalIndex {
    pub maxima: Vec<VertexId>,
    pub saddles: Vec<Saddle>,
    pub counts: CriticalCounts,
}

impl CriticalIndex {
    /// Appends the index of a region that follows this one.
    pub fn append(&mut self, mut other: CriticalIndex) {
        self.maxima.append(&mut other.maxima);
        self.saddles.append(&mut other.saddles);
        self.counts.add(&other.counts);
    }

    /// Sum of upper-link component counts over all saddles.
    pub fn arc_count(&self) -> usize {
        self.saddles.iter().map(|s| s.reps.len()).sum()
    }
}

/// Per-work-item scratch; only the first `link_len` entries are used.
struct Scratch {
    parent: [u16; MAX_LINK],
    size: [u16; MAX_LINK],
    upper: [bool; MAX_LINK],
    valid: [bool; MAX_LINK],
    best: [u16; MAX_LINK],
}

impl Scratch {
    fn new() -> Box<Self> {
        Box::new(Scratch {
            parent: [0; MAX_LINK],
            size: [0; MAX_LINK],
            upper: [false; MAX_LINK],
            valid: [false; MAX_LINK],
            best: [0; MAX_LINK],
        })
    }

    #[inline]
    fn find(&mut self, mut x: u16) -> u16 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    #[inline]
    fn union(&mut self, a: u16, b: u16) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Classifies vertices of one grid.
#[derive(Clone, Debug)]
pub struct Classifier {
    domain: GridDomain,
    table: NeighborOffsets,
}

impl Classifier {
    pub fn new(domain: &GridDomain) -> Self {
        Classifier {
            domain: domain.clone(),
            table: NeighborOffsets::new(domain),
        }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn table(&self) -> &NeighborOffsets {
        &self.table
    }

    /// Steepest-ascent neighbor of `v` recorded in `cell`.
    #[inline]
    pub fn ascent(&self, v: usize, cell: ClassCell) -> Option<usize> {
        cell.ascent_offset()
            .map(|k| (v as isize + self.table.offsets()[k].linear) as usize)
    }

    pub fn decode(&self, v: VertexId, cell: ClassCell) -> VertexClassification {
        VertexClassification {
            criticality: cell.criticality,
            beta_plus: cell.beta_plus as u32,
            beta_minus: cell.beta_minus as u32,
            ascent: self.ascent(v.index(), cell).map(VertexId::from),
            multi_class: cell.multi_class,
        }
    }

    /// Classifies a single vertex.
    pub fn classify_vertex(&self, field: &ScalarField, v: VertexId) -> Result<VertexClassification> {
        self.check_field(field)?;
        self.domain.check(v)?;
        let (cell, _) = self.classify_with_stats(field, v);
        Ok(self.decode(v, cell))
    }

    /// Classification of `v` plus the number of link-edge tests performed.
    pub fn classify_with_stats(&self, field: &ScalarField, v: VertexId) -> (ClassCell, usize) {
        let mut scratch = Scratch::new();
        let mut reps = Vec::new();
        with_samples!(field.data(), |s| self.classify_one(s, 0, v.index(), &mut scratch, &mut reps))
    }

    /// Classifies every vertex in `region` of a field that holds all samples.
    pub fn classify_range(&self, field: &ScalarField, region: Range<usize>) -> Result<(Vec<ClassCell>, CriticalIndex)> {
        self.check_field(field)?;
        if region.start > region.end || region.end > self.domain.len() {
            return Err(Error::invalid(format!(
                "region {region:?} outside grid of {} vertices",
                self.domain.len()
            )));
        }
        let mut cells = vec![ClassCell::default(); region.len()];
        let index = with_samples!(field.data(), |s| self.classify_block(s, 0, region.clone(), &mut cells));
        Ok((cells, index))
    }

    /// Classifies the vertices in `core` given a window of samples starting at
    /// vertex `base`. The window must cover the link of every core vertex.
    pub(crate) fn classify_block<T: Sample>(
        &self,
        samples: &[T],
        base: usize,
        core: Range<usize>,
        out: &mut [ClassCell],
    ) -> CriticalIndex {
        debug_assert_eq!(out.len(), core.len());
        let parts: Vec<CriticalIndex> = out
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(c, cells)| {
                let start = core.start + c * CHUNK;
                let mut scratch = Scratch::new();
                let mut reps = Vec::new();
                let mut index = CriticalIndex::default();
                for (k, cell) in cells.iter_mut().enumerate() {
                    let v = start + k;
                    let (cls, _) = self.classify_one(samples, base, v, &mut scratch, &mut reps);
                    *cell = cls;
                    let counts = &mut index.counts;
                    counts.multi_class += cls.multi_class as u64;
                    match cls.criticality {
                        Criticality::Regular => {}
                        Criticality::Maximum => {
                            counts.maxima += 1;
                            index.maxima.push(VertexId::from(v));
                        }
                        Criticality::Minimum => counts.minima += 1,
                        Criticality::Saddle1 => counts.saddles1 += 1,
                        Criticality::SaddleNminus1 => {
                            counts.saddles += 1;
                            counts.multi_saddles += (cls.beta_plus > 2) as u64;
                            index.saddles.push(Saddle {
                                vertex: VertexId::from(v),
                                reps: reps.iter().map(|&r| VertexId::from(r)).collect(),
                            });
                        }
                    }
                }
                index
            })
            .collect();
        let mut index = CriticalIndex::default();
        for p in parts {
            index.append(p);
        }
        index
    }

    /// Core classification of vertex `v`; `samples[i - base]` is vertex `i`.
    /// Fills `reps` with upper-link representatives when `v` is a saddle.
    #[inline]
    fn classify_one<T: Sample>(
        &self,
        samples: &[T],
        base: usize,
        v: usize,
        s: &mut Scratch,
        reps: &mut Vec<usize>,
    ) -> (ClassCell, usize) {
        let offsets = self.table.offsets();
        let n_links = offsets.len();
        let (lo, hi) = self.domain.boundary_masks(v);
        let interior = lo | hi == 0;
        let fv = samples[v - base];

        let mut ascent = NO_ASCENT;
        let mut ascent_vertex = 0usize;
        for (k, off) in offsets.iter().enumerate() {
            let valid = interior || off.fits(lo, hi);
            s.valid[k] = valid;
            s.parent[k] = k as u16;
            s.size[k] = 1;
            if valid {
                let u = (v as isize + off.linear) as usize;
                let fu = samples[u - base];
                let up = above(fu, u, fv, v);
                s.upper[k] = up;
                if up
                    && (ascent == NO_ASCENT || above(fu, u, samples[ascent_vertex - base], ascent_vertex))
                {
                    ascent = k as u16;
                    ascent_vertex = u;
                }
            }
        }

        let mut tests = 0;
        for &(a, b) in self.table.edges() {
            let (ai, bi) = (a as usize, b as usize);
            if !interior && !(s.valid[ai] && s.valid[bi]) {
                continue;
            }
            tests += 1;
            if s.upper[ai] == s.upper[bi] {
                s.union(a, b);
            }
        }

        let mut beta_plus = 0u16;
        let mut beta_minus = 0u16;
        for k in 0..n_links {
            if s.valid[k] && s.parent[k] == k as u16 {
                if s.upper[k] {
                    beta_plus += 1;
                } else {
                    beta_minus += 1;
                }
            }
        }

        let criticality = Criticality::from_betti(beta_plus, beta_minus);
        reps.clear();
        if criticality == Criticality::SaddleNminus1 {
            // Greatest vertex per upper component, keyed by component root.
            const UNSET: u16 = u16::MAX;
            for k in 0..n_links {
                s.best[k] = UNSET;
            }
            for k in 0..n_links {
                if !(s.valid[k] && s.upper[k]) {
                    continue;
                }
                let root = s.find(k as u16) as usize;
                let cur = s.best[root];
                let u = (v as isize + offsets[k].linear) as usize;
                if cur == UNSET || {
                    let w = (v as isize + offsets[cur as usize].linear) as usize;
                    above(samples[u - base], u, samples[w - base], w)
                } {
                    s.best[root] = k as u16;
                }
            }
            for k in 0..n_links {
                if s.best[k] != UNSET {
                    reps.push((v as isize + offsets[s.best[k] as usize].linear) as usize);
                }
            }
            reps.sort_unstable_by(|&a, &b| {
                samples[b - base]
                    .cmp_sample(&samples[a - base])
                    .then(b.cmp(&a))
            });
        }

        let cell = ClassCell {
            beta_plus,
            beta_minus,
            ascent,
            criticality,
            multi_class: beta_plus >= 2 && beta_minus >= 2,
        };
        (cell, tests)
    }

    fn check_field(&self, field: &ScalarField) -> Result<()> {
        if field.domain() != &self.domain {
            return Err(Error::invalid(format!(
                "field grid {:?} differs from classifier grid {:?}",
                field.domain().dims(),
                self.domain.dims()
            )));
        }
        Ok(())
    }
}

/// Classification of a whole field.
#[derive(Clone, Debug)]
pub struct Classification {
    classifier: Classifier,
    cells: Vec<ClassCell>,
    index: CriticalIndex,
}

impl Classification {
    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn cells(&self) -> &[ClassCell] {
        &self.cells
    }

    pub fn index(&self) -> &CriticalIndex {
        &self.index
    }

    pub fn get(&self, v: VertexId) -> VertexClassification {
        self.classifier.decode(v, self.cells[v.index()])
    }
}

/// Classifies every vertex of `field` on the current rayon pool.
pub fn classify_all(field: &ScalarField) -> Classification {
    let classifier = Classifier::new(field.domain());
    let (cells, index) = classifier
        .classify_range(field, 0..field.domain().len())
        .expect("classifier built from the field's own grid");
    Classification {
        classifier,
        cells,
        index,
    }
}

/// Classifies a single vertex.
pub fn classify_vertex(field: &ScalarField, v: VertexId) -> Result<VertexClassification> {
    Classifier::new(field.domain()).classify_vertex(field, v)
}
