//! The partial order induced by time-paths, and lattice operations.

use serde::Serialize;

use crate::error::Result;
use crate::graph::{GraphPoint, Loc, TimeLikeGraph, VertexId};

/// Reflexive-transitive reachability between vertices, stored as bitsets.
#[derive(Debug, Clone)]
pub struct Reach {
    words: usize,
    bits: Vec<u64>,
}

impl Reach {
    pub fn new(graph: &TimeLikeGraph) -> Self {
        let n = graph.num_vertices();
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        // Vertices are time-sorted, so descending index order visits heads first.
        for vi in (0..n).rev() {
            bits[vi * words + vi / 64] |= 1 << (vi % 64);
            for &ei in graph.out_edges(vi) {
                let hi = graph.head_index(ei);
                if hi == vi {
                    continue;
                }
                for w in 0..words {
                    let x = bits[hi * words + w];
                    bits[vi * words + w] |= x;
                }
            }
        }
        Reach { words, bits }
    }

    /// True when a time-path (possibly empty) leads from vertex index `a` to `b`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }
}

/// Order test for points, given precomputed reachability.
pub fn loc_leq(graph: &TimeLikeGraph, reach: &Reach, p: Loc, q: Loc) -> bool {
    match (p, q) {
        (Loc::Vertex(a), Loc::Vertex(b)) => reach.leq(a, b),
        (Loc::Interior { edge, .. }, Loc::Vertex(b)) => reach.leq(graph.head_index(edge), b),
        (Loc::Vertex(a), Loc::Interior { edge, .. }) => reach.leq(a, graph.tail_index(edge)),
        (Loc::Interior { edge: e, time: s }, Loc::Interior { edge: f, time: t }) => {
            if e == f {
                s <= t
            } else {
                reach.leq(graph.head_index(e), graph.tail_index(f))
            }
        }
    }
}

/// `p ⪯ q`: some time-path passes through `p` and then `q`.
pub fn order_leq(graph: &TimeLikeGraph, p: GraphPoint, q: GraphPoint) -> Result<bool> {
    let reach = Reach::new(graph);
    Ok(loc_leq(graph, &reach, graph.resolve(p)?, graph.resolve(q)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Bound {
    Point(GraphPoint),
    Bottom,
    Top,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeetJoin {
    pub meet: Bound,
    pub join: Bound,
    /// Maximal elements of the common past (vertices), when `p` and `q` are incomparable.
    pub meet_candidates: Vec<VertexId>,
    /// Minimal elements of the common future.
    pub join_candidates: Vec<VertexId>,
    pub unique: bool,
}

/// Meet and join of two points, reporting non-uniqueness instead of failing.
pub fn meet_join(graph: &TimeLikeGraph, p: GraphPoint, q: GraphPoint) -> Result<MeetJoin> {
    let reach = Reach::new(graph);
    meet_join_with(graph, &reach, p, q)
}

pub fn meet_join_with(graph: &TimeLikeGraph, reach: &Reach, p: GraphPoint, q: GraphPoint) -> Result<MeetJoin> {
    let (lp, lq) = (graph.resolve(p)?, graph.resolve(q)?);
    if loc_leq(graph, reach, lp, lq) {
        return Ok(MeetJoin {
            meet: Bound::Point(p),
            join: Bound::Point(q),
            meet_candidates: vec![],
            join_candidates: vec![],
            unique: true,
        });
    }
    if loc_leq(graph, reach, lq, lp) {
        return Ok(MeetJoin {
            meet: Bound::Point(q),
            join: Bound::Point(p),
            meet_candidates: vec![],
            join_candidates: vec![],
            unique: true,
        });
    }
    let n = graph.num_vertices();
    let past: Vec<usize> = (0..n)
        .filter(|&v| loc_leq(graph, reach, Loc::Vertex(v), lp) && loc_leq(graph, reach, Loc::Vertex(v), lq))
        .collect();
    let future: Vec<usize> = (0..n)
        .filter(|&v| loc_leq(graph, reach, lp, Loc::Vertex(v)) && loc_leq(graph, reach, lq, Loc::Vertex(v)))
        .collect();
    let maximal: Vec<usize> =
        past.iter().copied().filter(|&v| !past.iter().any(|&w| w != v && reach.leq(v, w))).collect();
    let minimal: Vec<usize> =
        future.iter().copied().filter(|&v| !future.iter().any(|&w| w != v && reach.leq(w, v))).collect();
    let ids = |v: &[usize]| -> Vec<VertexId> {
        let mut out: Vec<VertexId> = v.iter().map(|&i| graph.vertices()[i].id).collect();
        out.sort_unstable();
        out
    };
    let meet_candidates = ids(&maximal);
    let join_candidates = ids(&minimal);
    let meet = match meet_candidates.first() {
        None => Bound::Bottom,
        Some(&v) => Bound::Point(GraphPoint::at_vertex(graph, v)?),
    };
    let join = match join_candidates.first() {
        None => Bound::Top,
        Some(&v) => Bound::Point(GraphPoint::at_vertex(graph, v)?),
    };
    let unique = meet_candidates.len() <= 1 && join_candidates.len() <= 1;
    Ok(MeetJoin { meet, join, meet_candidates, join_candidates, unique })
}

impl Bound {
    /// The vertex this bound sits on, if any.
    pub fn vertex(&self, graph: &TimeLikeGraph) -> Option<VertexId> {
        match self {
            Bound::Point(p) => match graph.resolve(*p).ok()? {
                Loc::Vertex(i) => Some(graph.vertices()[i].id),
                Loc::Interior { .. } => None,
            },
            _ => None,
        }
    }
}
