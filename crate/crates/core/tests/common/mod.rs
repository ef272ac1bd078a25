//! Brute-force reference implementations shared by the integration tests.
//!
//! Nothing here uses the library's neighbor tables, union-find or tracer:
//! neighbors are found by scanning all 3^n offsets, link components by BFS
//! over an explicit adjacency matrix, and paths by a serial walk.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use exgraph::{Criticality, ExtremumGraph, ScalarField, VertexId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random doubles.
pub fn random_field(dims: &[usize], seed: u64) -> ScalarField {
    let mut r = rng(seed);
    let n: usize = dims.iter().product();
    ScalarField::from_vec(dims, (0..n).map(|_| r.gen::<f64>()).collect::<Vec<_>>()).unwrap()
}

/// Small integers, so ties are frequent and the index tie-break matters.
pub fn random_tied_field(dims: &[usize], levels: u8, seed: u64) -> ScalarField {
    let mut r = rng(seed);
    let n: usize = dims.iter().product();
    ScalarField::from_vec(dims, (0..n).map(|_| r.gen_range(0..levels)).collect::<Vec<u8>>()).unwrap()
}

/// Smooth random field: a sum of a few Gaussian bumps plus weak noise.
pub fn bumpy_field(dims: &[usize], bumps: usize, seed: u64) -> ScalarField {
    let mut r = rng(seed);
    let centers: Vec<(Vec<f64>, f64, f64)> = (0..bumps)
        .map(|_| {
            let c = dims.iter().map(|&d| r.gen::<f64>() * (d - 1) as f64).collect();
            (c, r.gen_range(0.2..1.0), r.gen_range(1.0..3.0))
        })
        .collect();
    let noise_seed = r.gen::<u64>();
    let mut noise = rng(noise_seed);
    ScalarField::from_fn(dims, |c| {
        let mut v = 0.0;
        for (ctr, h, w) in &centers {
            let d2: f64 = c.iter().zip(ctr).map(|(&x, &m)| (x as f64 - m).powi(2)).sum();
            v += h * (-d2 / (2.0 * w * w)).exp();
        }
        v + 1e-3 * noise.gen::<f64>()
    })
    .unwrap()
}

pub struct Grid {
    pub dims: Vec<usize>,
}

impl Grid {
    pub fn of(field: &ScalarField) -> Self {
        Grid {
            dims: field.domain().dims().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Coordinates with axis 0 varying fastest.
    pub fn coords(&self, mut i: usize) -> Vec<i64> {
        self.dims
            .iter()
            .map(|&d| {
                let c = i % d;
                i /= d;
                c as i64
            })
            .collect()
    }

    pub fn index(&self, c: &[i64]) -> Option<usize> {
        let mut i = 0usize;
        let mut stride = 1usize;
        for (&x, &d) in c.iter().zip(&self.dims) {
            if x < 0 || x >= d as i64 {
                return None;
            }
            i += x as usize * stride;
            stride *= d;
        }
        Some(i)
    }

    /// Adjacent in the Freudenthal triangulation.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let (p, q) = (self.coords(a), self.coords(b));
        let d: Vec<i64> = p.iter().zip(&q).map(|(x, y)| x - y).collect();
        d.iter().any(|&x| x != 0) && (d.iter().all(|&x| x == 0 || x == 1) || d.iter().all(|&x| x == 0 || x == -1))
    }

    /// Neighbors by scanning every offset in {-1, 0, 1}^n.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let n = self.dims.len();
        let base = self.coords(v);
        let mut out = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let q: Vec<i64> = base
                .iter()
                .map(|&x| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    x + o
                })
                .collect();
            if let Some(u) = self.index(&q) {
                if u != v && self.adjacent(u, v) {
                    out.push(u);
                }
            }
        }
        out
    }
}

/// `a` above `b` in the perturbed order.
pub fn above(f: &ScalarField, a: usize, b: usize) -> bool {
    match f.value(VertexId(a as u64)).cmp(&f.value(VertexId(b as u64))) {
        Ordering::Equal => a > b,
        o => o == Ordering::Greater,
    }
}

/// Connected components of `set` under grid adjacency, by BFS.
pub fn components(grid: &Grid, set: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; set.len()];
    let mut out = Vec::new();
    for start in 0..set.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![set[start]];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..set.len() {
                if !seen[j] && grid.adjacent(set[i], set[j]) {
                    seen[j] = true;
                    comp.push(set[j]);
                    queue.push_back(j);
                }
            }
        }
        out.push(comp);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleVertex {
    pub beta_plus: u32,
    pub beta_minus: u32,
    pub criticality: Criticality,
    pub ascent: Option<usize>,
    /// Greatest vertex of each upper-link component, greatest first.
    pub reps: Vec<usize>,
}

pub fn oracle_vertex(f: &ScalarField, grid: &Grid, v: usize) -> OracleVertex {
    oracle_vertex_by(grid, v, &|a, b| above(f, a, b))
}

/// Classification under an arbitrary strict total order `above`.
pub fn oracle_vertex_by(grid: &Grid, v: usize, above: &dyn Fn(usize, usize) -> bool) -> OracleVertex {
    let link = grid.neighbors(v);
    let upper: Vec<usize> = link.iter().copied().filter(|&u| above(u, v)).collect();
    let lower: Vec<usize> = link.iter().copied().filter(|&u| !above(u, v)).collect();
    let up = components(grid, &upper);
    let down = components(grid, &lower);
    let (bp, bm) = (up.len() as u32, down.len() as u32);
    let criticality = if bp == 0 {
        Criticality::Maximum
    } else if bm == 0 {
        Criticality::Minimum
    } else if bp >= 2 {
        Criticality::SaddleNminus1
    } else if bm >= 2 {
        Criticality::Saddle1
    } else {
        Criticality::Regular
    };
    let greatest = |set: &[usize]| set.iter().copied().reduce(|a, b| if above(a, b) { a } else { b });
    let mut reps: Vec<usize> = up.iter().map(|c| greatest(c).unwrap()).collect();
    reps.sort_by(|&a, &b| if above(a, b) { Ordering::Less } else { Ordering::Greater });
    OracleVertex {
        beta_plus: bp,
        beta_minus: bm,
        criticality,
        ascent: greatest(&upper),
        reps,
    }
}

pub fn oracle_classify(f: &ScalarField) -> Vec<OracleVertex> {
    let grid = Grid::of(f);
    (0..grid.len()).map(|v| oracle_vertex(f, &grid, v)).collect()
}

/// Minimum-graph classification of `f` itself: "above" means lower in `f`,
/// with the higher index lower on ties. Maxima here are the minima of `f`,
/// (n-1)-saddles its 1-saddles, and ascent is steepest descent.
pub fn oracle_classify_min(f: &ScalarField) -> Vec<OracleVertex> {
    let grid = Grid::of(f);
    let lower = |a: usize, b: usize| match f.value(VertexId(a as u64)).cmp(&f.value(VertexId(b as u64))) {
        Ordering::Equal => a > b,
        o => o == Ordering::Less,
    };
    (0..grid.len()).map(|v| oracle_vertex_by(&grid, v, &lower)).collect()
}

/// (saddle, maximum, first, vertices) for every path, sorted.
pub type ArcTuple = (u64, u64, u64, Vec<u64>);

/// Serial per-saddle trace over oracle classifications.
pub fn oracle_arcs(cls: &[OracleVertex]) -> Vec<ArcTuple> {
    let mut out = Vec::new();
    for (s, c) in cls.iter().enumerate() {
        if c.criticality != Criticality::SaddleNminus1 {
            continue;
        }
        for &r in &c.reps {
            let mut path = vec![s as u64, r as u64];
            let mut u = r;
            while cls[u].criticality != Criticality::Maximum {
                u = cls[u].ascent.expect("non-maximum has an upper neighbor");
                path.push(u as u64);
                assert!(path.len() <= cls.len() + 1, "oracle path cycles");
            }
            out.push((s as u64, u as u64, r as u64, path));
        }
    }
    out.sort();
    out
}

/// Arc tuples of a graph extracted with geometry.
pub fn graph_arcs(g: &ExtremumGraph) -> Vec<ArcTuple> {
    let mut out: Vec<ArcTuple> = g
        .arcs()
        .iter()
        .map(|(k, geom)| {
            let pts = geom.as_ref().map(|p| p.iter().map(|v| v.0).collect()).unwrap_or_default();
            (k.saddle.0, k.maximum.0, k.first.0, pts)
        })
        .collect();
    out.sort();
    out
}

/// Connected components of maxima, joined through saddles (union-find).
pub fn maxima_components(g: &ExtremumGraph) -> BTreeSet<BTreeSet<u64>> {
    let mut parent: BTreeMap<u64, u64> = g.maxima().keys().map(|m| (m.0, m.0)).collect();
    fn find(p: &mut BTreeMap<u64, u64>, x: u64) -> u64 {
        let mut r = x;
        while p[&r] != r {
            r = p[&r];
        }
        let mut y = x;
        while p[&y] != r {
            let next = p[&y];
            p.insert(y, r);
            y = next;
        }
        r
    }
    for &s in g.saddles().keys() {
        let ms = g.maxima_of(s);
        for w in ms.windows(2) {
            let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
            if a != b {
                parent.insert(a.max(b), a.min(b));
            }
        }
    }
    let mut groups: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    for m in g.maxima().keys().map(|m| m.0).collect::<Vec<_>>() {
        let r = find(&mut parent, m);
        groups.entry(r).or_default().insert(m);
    }
    groups.into_values().collect()
}

/// Checks every arc: starts at its saddle, ends at its maximum, steps between
/// adjacent vertices and strictly ascends. Returns the number of violations.
pub fn path_violations(f: &ScalarField, g: &ExtremumGraph) -> usize {
    let grid = Grid::of(f);
    let mut bad = 0;
    for (k, geom) in g.arcs() {
        let Some(p) = geom else {
            bad += 1;
            continue;
        };
        let ok_ends = p.first() == Some(&k.saddle) && p.last() == Some(&k.maximum) && p.get(1) == Some(&k.first);
        let ok_steps = p.windows(2).all(|w| {
            let (a, b) = (w[0].index(), w[1].index());
            grid.adjacent(a, b) && above(f, b, a)
        });
        if !(ok_ends && ok_steps) {
            bad += 1;
        }
    }
    bad
}

/// Simple linear regression; returns R².
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}
