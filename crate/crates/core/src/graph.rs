//! The extremum graph: maxima, (n-1)-saddles and the arcs between them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::classify::CriticalIndex;
use crate::error::{Error, Result};
use crate::field::{Dtype, Scalar, ScalarField};
use crate::grid::VertexId;
use crate::trace::GradientPath;

/// Maximum graph, or minimum graph computed as the maximum graph of the
/// negated field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    #[default]
    Max,
    Min,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Max => "max",
            GraphKind::Min => "min",
        })
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(GraphKind::Max),
            "min" => Ok(GraphKind::Min),
            other => Err(Error::invalid(format!("unknown graph kind '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Maximum,
    Saddle,
}

/// Identity of an arc. A saddle's arcs have pairwise distinct `first` vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcKey {
    pub saddle: VertexId,
    pub maximum: VertexId,
    pub first: VertexId,
}

/// Description of the field a graph was extracted from, and how it was
/// simplified since.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphHeader {
    pub dims: Vec<usize>,
    pub dtype: Dtype,
    pub kind: GraphKind,
    /// Global minimum and maximum of the field (negated for minimum graphs).
    pub value_range: (Scalar, Scalar),
    pub geometry: bool,
    /// Simplification steps applied, in order.
    pub trail: Vec<String>,
}

impl GraphHeader {
    pub fn for_field(field: &ScalarField, kind: GraphKind, geometry: bool) -> Self {
        GraphHeader {
            dims: field.domain().dims().to_vec(),
            dtype: field.dtype(),
            kind,
            value_range: field.range(),
            geometry,
            trail: Vec::new(),
        }
    }

    /// `max - min` of the field.
    pub fn span(&self) -> f64 {
        self.value_range.1.diff(self.value_range.0)
    }
}

/// Bipartite graph between maxima and (n-1)-saddles with optional arc
/// geometry. Nodes and arcs are kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtremumGraph {
    header: GraphHeader,
    maxima: BTreeMap<VertexId, Scalar>,
    saddles: BTreeMap<VertexId, Scalar>,
    arcs: BTreeMap<ArcKey, Option<Vec<VertexId>>>,
    into_max: BTreeMap<VertexId, BTreeSet<ArcKey>>,
}

impl ExtremumGraph {
    pub fn new(header: GraphHeader) -> Self {
        ExtremumGraph {
            header,
            maxima: BTreeMap::new(),
            saddles: BTreeMap::new(),
            arcs: BTreeMap::new(),
            into_max: BTreeMap::new(),
        }
    }

    /// Assembles the graph of `field` from its critical index and traced paths.
    pub fn from_paths(
        field: &ScalarField,
        kind: GraphKind,
        index: &CriticalIndex,
        paths: impl IntoIterator<Item = GradientPath>,
        geometry: bool,
    ) -> Result<Self> {
        let mut g = ExtremumGraph::new(GraphHeader::for_field(field, kind, geometry));
        for &m in &index.maxima {
            g.add_maximum(m, field.value(m));
        }
        for s in &index.saddles {
            g.add_saddle(s.vertex, field.value(s.vertex));
        }
        for p in paths {
            let key = ArcKey {
                saddle: p.saddle,
                maximum: p.maximum,
                first: p.first,
            };
            g.insert_arc(key, if geometry { p.vertices } else { None })?;
        }
        Ok(g)
    }

    pub fn header(&self) -> &GraphHeader {
        &self.header
    }

    pub fn header_mut(&mut self) -> &mut GraphHeader {
        &mut self.header
    }

    pub fn maxima(&self) -> &BTreeMap<VertexId, Scalar> {
        &self.maxima
    }

    pub fn saddles(&self) -> &BTreeMap<VertexId, Scalar> {
        &self.saddles
    }

    pub fn arcs(&self) -> &BTreeMap<ArcKey, Option<Vec<VertexId>>> {
        &self.arcs
    }

    pub fn node_count(&self) -> usize {
        self.maxima.len() + self.saddles.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn add_maximum(&mut self, v: VertexId, value: Scalar) {
        self.maxima.insert(v, value);
    }

    pub fn add_saddle(&mut self, v: VertexId, value: Scalar) {
        self.saddles.insert(v, value);
    }

    pub fn insert_arc(&mut self, key: ArcKey, geometry: Option<Vec<VertexId>>) -> Result<()> {
        if !self.saddles.contains_key(&key.saddle) {
            return Err(Error::invalid(format!("arc from unknown saddle {}", key.saddle)));
        }
        if !self.maxima.contains_key(&key.maximum) {
            return Err(Error::invalid(format!("arc to unknown maximum {}", key.maximum)));
        }
        if self.arcs.insert(key, geometry).is_some() {
            return Err(Error::invalid(format!(
                "duplicate arc {} -> {} via {}",
                key.saddle, key.maximum, key.first
            )));
        }
        self.into_max.entry(key.maximum).or_default().insert(key);
        Ok(())
    }

    pub fn remove_arc(&mut self, key: &ArcKey) -> Option<Option<Vec<VertexId>>> {
        let geom = self.arcs.remove(key)?;
        if let Some(set) = self.into_max.get_mut(&key.maximum) {
            set.remove(key);
            if set.is_empty() {
                self.into_max.remove(&key.maximum);
            }
        }
        Some(geom)
    }

    /// Arcs leaving saddle `s`, ordered by maximum then first vertex.
    pub fn arcs_from(&self, s: VertexId) -> impl Iterator<Item = ArcKey> + '_ {
        let lo = ArcKey {
            saddle: s,
            maximum: VertexId(0),
            first: VertexId(0),
        };
        let hi = ArcKey {
            saddle: s,
            maximum: VertexId(u64::MAX),
            first: VertexId(u64::MAX),
        };
        self.arcs.range(lo..=hi).map(|(k, _)| *k)
    }

    /// Arcs ending at maximum `m`.
    pub fn arcs_into(&self, m: VertexId) -> impl Iterator<Item = ArcKey> + '_ {
        self.into_max.get(&m).into_iter().flatten().copied()
    }

    /// Distinct maxima adjacent to saddle `s`.
    pub fn maxima_of(&self, s: VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self.arcs_from(s).map(|k| k.maximum).collect();
        out.dedup();
        out
    }

    /// Removes a saddle together with its arcs.
    pub fn remove_saddle(&mut self, s: VertexId) {
        let keys: Vec<ArcKey> = self.arcs_from(s).collect();
        for k in keys {
            self.remove_arc(&k);
        }
        self.saddles.remove(&s);
    }

    /// Removes a maximum that has no arcs left.
    pub fn remove_maximum(&mut self, m: VertexId) -> Result<()> {
        if self.into_max.contains_key(&m) {
            return Err(Error::internal(format!("maximum {m} still has arcs")));
        }
        self.maxima.remove(&m);
        Ok(())
    }

    pub fn geometry(&self, key: &ArcKey) -> Option<&[VertexId]> {
        self.arcs.get(key).and_then(|g| g.as_deref())
    }

    /// Checks the structural invariants: arcs join existing saddles to
    /// existing maxima, every saddle keeps an arc, and geometry (when present)
    /// runs from the saddle to the maximum.
    pub fn validate(&self) -> Result<()> {
        for (k, geom) in &self.arcs {
            if !self.saddles.contains_key(&k.saddle) || !self.maxima.contains_key(&k.maximum) {
                return Err(Error::internal(format!("dangling arc {k:?}")));
            }
            if let Some(g) = geom {
                if g.first() != Some(&k.saddle) || g.last() != Some(&k.maximum) {
                    return Err(Error::internal(format!("arc {k:?} geometry has wrong endpoints")));
                }
            }
        }
        for &s in self.saddles.keys() {
            if self.arcs_from(s).next().is_none() {
                return Err(Error::internal(format!("saddle {s} has no arcs")));
            }
        }
        Ok(())
    }

    /// Value of a node, if present.
    pub fn value(&self, v: VertexId) -> Option<Scalar> {
        self.maxima.get(&v).or_else(|| self.saddles.get(&v)).copied()
    }
}
