//! Implicit Freudenthal tessellation of a uniform n-dimensional grid.
//!
//! Two vertices are joined by an edge when their coordinate difference is a
//! non-zero vector whose entries are all in `{0, 1}` or all in `{0, -1}`. No
//! edge set is stored: the link of a vertex is recovered from a per-dimension
//! table of `2 * (2^n - 1)` neighbor offsets together with the induced edges
//! between those offsets.
//!
//! Axis 0 is the fastest varying axis of the linear vertex index.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported dimension. The link of a vertex has `2 * (2^n - 1)`
/// vertices, so the per-vertex scratch grows exponentially with `n`.
pub const MAX_DIM: usize = 8;

/// Link size of an interior vertex at [`MAX_DIM`].
pub const MAX_LINK: usize = 2 * ((1 << MAX_DIM) - 1);

/// Linear index of a grid vertex.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u64);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    #[inline]
    fn from(i: usize) -> Self {
        VertexId(i as u64)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Extents of a uniform grid and the row-major (axis 0 fastest) indexing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridDomain {
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl GridDomain {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("grid needs at least one axis"));
        }
        if dims.len() > MAX_DIM {
            return Err(Error::invalid(format!(
                "grid dimension {} exceeds the supported maximum of {MAX_DIM}",
                dims.len()
            )));
        }
        if let Some(axis) = dims.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("axis {axis} has zero extent")));
        }
        let mut strides = Vec::with_capacity(dims.len());
        let mut len: usize = 1;
        for &d in dims {
            strides.push(len);
            len = len
                .checked_mul(d)
                .ok_or_else(|| Error::invalid(format!("grid {dims:?} overflows the index range")))?;
        }
        Ok(GridDomain {
            dims: dims.to_vec(),
            strides,
            len,
        })
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Dimension `n`.
    #[inline]
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of vertices.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Vertices in one slab, i.e. one layer along the last (slowest) axis.
    #[inline]
    pub fn slab_len(&self) -> usize {
        self.strides[self.ndim() - 1]
    }

    /// Number of slabs along the last axis.
    #[inline]
    pub fn slab_count(&self) -> usize {
        self.dims[self.ndim() - 1]
    }

    pub fn contains(&self, coords: &[usize]) -> bool {
        coords.len() == self.ndim() && coords.iter().zip(&self.dims).all(|(&c, &d)| c < d)
    }

    pub fn linearize(&self, coords: &[usize]) -> Result<VertexId> {
        if !self.contains(coords) {
            return Err(Error::invalid(format!(
                "coordinates {coords:?} lie outside grid {:?}",
                self.dims
            )));
        }
        Ok(VertexId(
            coords.iter().zip(&self.strides).map(|(&c, &s)| (c * s) as u64).sum(),
        ))
    }

    pub fn delinearize(&self, v: VertexId) -> Result<Vec<usize>> {
        self.check(v)?;
        let mut out = vec![0; self.ndim()];
        self.coords_into(v.index(), &mut out);
        Ok(out)
    }

    /// Writes the coordinates of linear index `i` into `out` (no bounds check).
    #[inline]
    pub fn coords_into(&self, mut i: usize, out: &mut [usize]) {
        for (o, &d) in out.iter_mut().zip(&self.dims) {
            *o = i % d;
            i /= d;
        }
    }

    pub fn check(&self, v: VertexId) -> Result<()> {
        if v.index() < self.len {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "vertex {v} outside grid of {} vertices",
                self.len
            )))
        }
    }

    /// Bit masks of the axes on which linear index `i` sits on the low and
    /// high boundary. Bit `k` refers to axis `k`.
    #[inline]
    pub fn boundary_masks(&self, mut i: usize) -> (u8, u8) {
        let mut lo = 0u8;
        let mut hi = 0u8;
        for (k, &d) in self.dims.iter().enumerate() {
            let c = i % d;
            i /= d;
            if c == 0 {
                lo |= 1 << k;
            }
            if c + 1 == d {
                hi |= 1 << k;
            }
        }
        (lo, hi)
    }
}

/// Adjacency test of the tessellated grid on signed coordinates.
///
/// Fails when the two coordinate vectors have different lengths.
pub fn grid_adjacency(p: &[i64], q: &[i64]) -> Result<bool> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {} coordinates",
            p.len(),
            q.len()
        )));
    }
    Ok(adjacent_unchecked(p.iter().zip(q).map(|(a, b)| a - b)))
}

#[inline]
fn adjacent_unchecked(diff: impl Iterator<Item = i64>) -> bool {
    let mut pos = false;
    let mut neg = false;
    for d in diff {
        match d {
            0 => {}
            1 => pos = true,
            -1 => neg = true,
            _ => return false,
        }
    }
    pos != neg
}

/// One neighbor offset of the interior link.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Offset {
    /// Per-axis difference, entries in `{-1, 0, 1}` of one sign.
    pub delta: Vec<i8>,
    /// Change of the linear index.
    pub linear: isize,
    /// Axes with a `-1` entry.
    pub neg_mask: u8,
    /// Axes with a `+1` entry.
    pub pos_mask: u8,
}

impl Offset {
    /// Whether the neighbor exists for a vertex with the given boundary masks.
    #[inline]
    pub fn fits(&self, lo_mask: u8, hi_mask: u8) -> bool {
        self.neg_mask & lo_mask == 0 && self.pos_mask & hi_mask == 0
    }
}

/// Precomputed link of an interior vertex: neighbor offsets and the edges they
/// induce among themselves. Boundary links filter the same table.
#[derive(Clone, Debug)]
pub struct NeighborOffsets {
    offsets: Vec<Offset>,
    edges: Vec<(u16, u16)>,
}

impl NeighborOffsets {
    pub fn new(domain: &GridDomain) -> Self {
        let n = domain.ndim();
        let mut offsets = Vec::with_capacity(2 * ((1 << n) - 1));
        // Non-empty axis subsets, positive then negative.
        for sign in [1i8, -1] {
            for subset in 1u32..(1 << n) {
                let delta: Vec<i8> = (0..n)
                    .map(|k| if subset & (1 << k) != 0 { sign } else { 0 })
                    .collect();
                let linear = delta
                    .iter()
                    .zip(domain.strides())
                    .map(|(&d, &s)| d as isize * s as isize)
                    .sum();
                let mask = subset as u8;
                let (neg_mask, pos_mask) = if sign > 0 { (0, mask) } else { (mask, 0) };
                offsets.push(Offset {
                    delta,
                    linear,
                    neg_mask,
                    pos_mask,
                });
            }
        }
        let mut edges = Vec::new();
        for a in 0..offsets.len() {
            for b in a + 1..offsets.len() {
                let diff = offsets[a]
                    .delta
                    .iter()
                    .zip(&offsets[b].delta)
                    .map(|(&x, &y)| (x - y) as i64);
                if adjacent_unchecked(diff) {
                    edges.push((a as u16, b as u16));
                }
            }
        }
        NeighborOffsets { offsets, edges }
    }

    #[inline]
    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    /// Induced link edges of an interior vertex as pairs of offset positions.
    #[inline]
    pub fn edges(&self) -> &[(u16, u16)] {
        &self.edges
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Position of the offset with the given per-axis difference.
    pub fn position(&self, delta: &[i8]) -> Option<usize> {
        self.offsets.iter().position(|o| o.delta == delta)
    }
}

/// All vertices of the (possibly truncated) link of `v`, in offset-table order.
pub fn link_vertices(v: VertexId, domain: &GridDomain) -> Result<Vec<VertexId>> {
    domain.check(v)?;
    let table = NeighborOffsets::new(domain);
    Ok(link_with(v, domain, &table))
}

pub(crate) fn link_with(v: VertexId, domain: &GridDomain, table: &NeighborOffsets) -> Vec<VertexId> {
    let (lo, hi) = domain.boundary_masks(v.index());
    table
        .offsets()
        .iter()
        .filter(|o| o.fits(lo, hi))
        .map(|o| VertexId((v.index() as isize + o.linear) as u64))
        .collect()
}

/// Induced edges among the vertices of a link.
pub fn link_edges(link: &[VertexId], domain: &GridDomain) -> Result<Vec<(VertexId, VertexId)>> {
    let coords = link
        .iter()
        .map(|&u| {
            domain
                .delinearize(u)
                .map(|c| c.into_iter().map(|x| x as i64).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for a in 0..link.len() {
        for b in a + 1..link.len() {
            if grid_adjacency(&coords[a], &coords[b])? {
                out.push((link[a], link[b]));
            }
        }
    }
    Ok(out)
}
