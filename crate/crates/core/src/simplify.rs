//! Extremum graph simplification: arc bundling, persistence directed
//! cancellation and saturated persistence directed pruning.
//!
//! All three operations are serial and deterministic. Node order is the
//! perturbed order `(value, vertex)`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Scalar;
use crate::graph::{ArcKey, ExtremumGraph};
use crate::grid::VertexId;

/// One simplification operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimplifyStep {
    Bundle,
    /// Persistence threshold as a fraction of the field range.
    Persist(f64),
    /// Saturation band `(p_lo, p_hi)` as fractions of the field range.
    Saturate(f64, f64),
}

impl SimplifyStep {
    pub fn apply(&self, g: &ExtremumGraph) -> Result<ExtremumGraph> {
        match *self {
            SimplifyStep::Bundle => Ok(bundle_arcs(g)),
            SimplifyStep::Persist(t) => cancel_persistence(g, t),
            SimplifyStep::Saturate(lo, hi) => saturated_simplify(g, lo, hi),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SimplifyStep::Bundle => Ok(()),
            SimplifyStep::Persist(t) => {
                if (0.0..=1.0).contains(&t) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("persistence threshold {t} outside [0, 1]")))
                }
            }
            SimplifyStep::Saturate(lo, hi) => {
                if 0.0 <= lo && lo < hi && hi <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "saturation band ({lo}, {hi}) needs 0 <= p_lo < p_hi <= 1"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for SimplifyStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplifyStep::Bundle => f.write_str("bundle"),
            SimplifyStep::Persist(t) => write!(f, "persist:{t}"),
            SimplifyStep::Saturate(lo, hi) => write!(f, "saturate:{lo},{hi}"),
        }
    }
}

impl FromStr for SimplifyStep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad simplification step '{s}'"));
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let step = match s.split_once(':') {
            None if s == "bundle" => SimplifyStep::Bundle,
            Some(("persist", t)) => SimplifyStep::Persist(num(t)?),
            Some(("saturate", band)) => {
                let (lo, hi) = band.split_once(',').ok_or_else(bad)?;
                SimplifyStep::Saturate(num(lo)?, num(hi)?)
            }
            _ => return Err(bad()),
        };
        step.validate()?;
        Ok(step)
    }
}

/// Applies `steps` in order.
pub fn simplify(g: &ExtremumGraph, steps: &[SimplifyStep]) -> Result<ExtremumGraph> {
    let mut out = g.clone();
    for step in steps {
        out = step.apply(&out)?;
    }
    Ok(out)
}

fn rank(g: &ExtremumGraph, v: VertexId) -> (Scalar, VertexId) {
    (g.value(v).expect("node present"), v)
}

/// Adjacent maxima of `s`, greatest first.
fn maxima_desc(g: &ExtremumGraph, s: VertexId) -> Vec<VertexId> {
    let mut ms = g.maxima_of(s);
    ms.sort_by(|&a, &b| rank(g, b).cmp(&rank(g, a)));
    ms
}

/// Keeps, for every pair of maxima joined through several saddles, only the
/// greatest saddle's arcs to that pair.
///
/// A saddle loses its arcs to a maximum `m` when every pair `{m, x}` it joins
/// is also joined by a greater saddle; for a saddle with two maxima this
/// removes the saddle. Connectivity between maxima is unchanged.
pub fn bundle_arcs(g: &ExtremumGraph) -> ExtremumGraph {
    let mut best: BTreeMap<(VertexId, VertexId), (Scalar, VertexId)> = BTreeMap::new();
    let adjacency: Vec<(VertexId, Vec<VertexId>)> =
        g.saddles().keys().map(|&s| (s, g.maxima_of(s))).collect();
    for (s, ms) in &adjacency {
        let r = rank(g, *s);
        for (i, &a) in ms.iter().enumerate() {
            for &b in &ms[i + 1..] {
                best.entry((a, b))
                    .and_modify(|cur| {
                        if r > *cur {
                            *cur = r;
                        }
                    })
                    .or_insert(r);
            }
        }
    }

    let mut out = g.clone();
    for (s, ms) in &adjacency {
        if ms.len() < 2 {
            continue;
        }
        let covered = |a: VertexId, b: VertexId| {
            let key = if a < b { (a, b) } else { (b, a) };
            best[&key].1 != *s
        };
        let drop: BTreeSet<VertexId> = ms
            .iter()
            .copied()
            .filter(|&m| ms.iter().all(|&x| x == m || covered(m, x)))
            .collect();
        if drop.is_empty() {
            continue;
        }
        let keys: Vec<ArcKey> = out.arcs_from(*s).filter(|k| drop.contains(&k.maximum)).collect();
        for k in keys {
            out.remove_arc(&k);
        }
        if out.arcs_from(*s).next().is_none() {
            out.remove_saddle(*s);
        }
    }
    out.header_mut().trail.push(SimplifyStep::Bundle.to_string());
    out
}

/// Queue entry ordered by cost, then saddle vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    cost: f64,
    saddle: VertexId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.saddle.cmp(&other.saddle))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cancellation cost of a saddle: the value gap to its second highest
/// adjacent maximum, or to its only maximum when all arcs end there.
pub fn saddle_cost(g: &ExtremumGraph, s: VertexId) -> Option<f64> {
    let fs = g.saddles().get(&s)?;
    let ms = maxima_desc(g, s);
    let m = match ms.len() {
        0 => return None,
        1 => ms[0],
        _ => ms[1],
    };
    Some(g.maxima()[&m].diff(*fs))
}

/// Cancels saddle-maximum pairs in order of increasing persistence until
/// every remaining saddle costs more than `t` times the field range.
pub fn cancel_persistence(g: &ExtremumGraph, t: f64) -> Result<ExtremumGraph> {
    SimplifyStep::Persist(t).validate()?;
    let threshold = t * g.header().span();
    let mut out = g.clone();
    let mut queue: BinaryHeap<Reverse<Entry>> = out
        .saddles()
        .keys()
        .filter_map(|&s| saddle_cost(&out, s).map(|cost| Reverse(Entry { cost, saddle: s })))
        .collect();

    while let Some(Reverse(Entry { saddle: s, .. })) = queue.pop() {
        let Some(cost) = saddle_cost(&out, s) else {
            continue;
        };
        if cost > threshold {
            continue;
        }
        if let Some(Reverse(top)) = queue.peek() {
            if cost > top.cost {
                queue.push(Reverse(Entry { cost, saddle: s }));
                continue;
            }
        }
        for touched in cancel(&mut out, s)? {
            if let Some(cost) = saddle_cost(&out, touched) {
                queue.push(Reverse(Entry { cost, saddle: touched }));
            }
        }
    }
    out.header_mut().trail.push(SimplifyStep::Persist(t).to_string());
    Ok(out)
}

/// Cancels saddle `s` against every adjacent maximum but the greatest, which
/// survives and inherits their other arcs. Returns the rewired saddles that
/// are still in the graph.
fn cancel(g: &mut ExtremumGraph, s: VertexId) -> Result<Vec<VertexId>> {
    let ms = maxima_desc(g, s);
    if ms.len() < 2 {
        // All arcs end at one maximum; nothing to pair.
        g.remove_saddle(s);
        return Ok(Vec::new());
    }
    let survivor = ms[0];
    let first_arc = |g: &ExtremumGraph, m: VertexId| {
        g.arcs_from(s)
            .find(|k| k.maximum == m)
            .map(|k| g.geometry(&k).map(<[VertexId]>::to_vec))
            .expect("adjacent maximum has an arc")
    };
    let to_survivor = first_arc(g, survivor);
    let doomed: Vec<(VertexId, Option<Vec<VertexId>>)> =
        ms[1..].iter().map(|&m| (m, first_arc(g, m))).collect();
    g.remove_saddle(s);

    let mut touched = BTreeSet::new();
    for (m, to_m) in doomed {
        let keys: Vec<ArcKey> = g.arcs_into(m).collect();
        for key in keys {
            let geom = g.remove_arc(&key).flatten();
            let joined = match (geom, &to_m, &to_survivor) {
                (Some(a), Some(b), Some(c)) => {
                    let mut p = a;
                    p.extend(b.iter().rev());
                    p.extend(c.iter());
                    p.dedup();
                    Some(p)
                }
                _ => None,
            };
            let rewired = ArcKey {
                maximum: survivor,
                ..key
            };
            g.insert_arc(rewired, joined)?;
            touched.insert(key.saddle);
        }
        g.remove_maximum(m)?;
    }

    let mut alive = Vec::with_capacity(touched.len());
    for t in touched {
        if g.maxima_of(t).len() < 2 {
            g.remove_saddle(t);
        } else {
            alive.push(t);
        }
    }
    Ok(alive)
}

/// Saturated persistence of an arc: the gap between the maximum and the
/// saddle after clamping both into the band `[F_lo, F_hi]`.
pub fn saturated_persistence(f_saddle: f64, f_max: f64, f_lo: f64, f_hi: f64) -> f64 {
    (f_max.min(f_hi) - f_saddle.max(f_lo)).max(0.0)
}

/// Prunes arcs whose saturated persistence is at most `p_lo` of the range,
/// then removes saddles left with fewer than two arcs. Maxima are kept.
pub fn saturated_simplify(g: &ExtremumGraph, p_lo: f64, p_hi: f64) -> Result<ExtremumGraph> {
    SimplifyStep::Saturate(p_lo, p_hi).validate()?;
    let span = g.header().span();
    let min = g.header().value_range.0.as_f64();
    let (f_lo, f_hi) = (min + p_lo * span, min + p_hi * span);
    let cutoff = p_lo * span;

    let mut out = g.clone();
    let doomed: Vec<ArcKey> = g
        .arcs()
        .keys()
        .filter(|k| {
            let fs = g.saddles()[&k.saddle].as_f64();
            let fm = g.maxima()[&k.maximum].as_f64();
            saturated_persistence(fs, fm, f_lo, f_hi) <= cutoff
        })
        .copied()
        .collect();
    for k in &doomed {
        out.remove_arc(k);
    }
    let sparse: Vec<VertexId> = out
        .saddles()
        .keys()
        .copied()
        .filter(|&s| out.arcs_from(s).nth(1).is_none())
        .collect();
    for s in sparse {
        out.remove_saddle(s);
    }
    out.header_mut()
        .trail
        .push(SimplifyStep::Saturate(p_lo, p_hi).to_string());
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub maxima: usize,
    pub saddles: usize,
    pub arcs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Survival {
    pub maxima: f64,
    pub saddles: f64,
    pub arcs: f64,
}

impl GraphStats {
    /// Fractions of `baseline` that survive in `self`; 1 where the baseline is empty.
    pub fn survival(&self, baseline: &GraphStats) -> Survival {
        let frac = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
        Survival {
            maxima: frac(self.maxima, baseline.maxima),
            saddles: frac(self.saddles, baseline.saddles),
            arcs: frac(self.arcs, baseline.arcs),
        }
    }
}

pub fn graph_stats(g: &ExtremumGraph) -> GraphStats {
    GraphStats {
        maxima: g.maxima().len(),
        saddles: g.saddles().len(),
        arcs: g.arc_count(),
    }
}
