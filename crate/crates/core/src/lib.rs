//! Extremum graphs of scalar fields on regular grids of any dimension.
//!
//! A field is sampled on an n-dimensional grid triangulated by the
//! Freudenthal subdivision. Every vertex is classified from the connected
//! components of its lower and upper link; gradient paths are traced from each
//! (n-1)-saddle to the maxima it separates, giving a bipartite graph that can
//! then be simplified. Extraction streams the grid block by block so
//! classification and tracing overlap.

pub mod classify;
pub mod error;
pub mod field;
pub mod graph;
pub mod graphio;
pub mod grid;
pub mod pipeline;
pub mod simplify;
pub mod trace;

pub use classify::{
    classify_all, classify_vertex, ClassCell, Classification, Classifier, CriticalCounts, CriticalIndex, Criticality,
    Saddle, VertexClassification,
};
pub use error::{Error, Result};
pub use field::{sample_schwefel, schwefel, schwefel_field, Dtype, Endian, Scalar, ScalarField, SCHWEFEL_BOUNDS};
pub use graph::{ArcKey, ExtremumGraph, GraphHeader, GraphKind, NodeKind};
pub use graphio::{read_graph, write_graph, write_report, Format, RunReport};
pub use grid::{grid_adjacency, link_edges, link_vertices, GridDomain, VertexId, MAX_DIM};
pub use pipeline::{extract, partition, run_pipeline, split_into, Block, PipelineOptions, PipelineOutput, Schedule};
pub use simplify::{bundle_arcs, cancel_persistence, saturated_persistence, saturated_simplify, simplify, SimplifyStep};
pub use trace::{trace_all, trace_gradient_paths, GradientPath, PartialPath};
