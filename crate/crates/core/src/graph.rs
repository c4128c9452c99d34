//! Time-like graphs: vertices with time stamps and edges pointing forward in time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = i64;
pub type EdgeId = i64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: VertexId,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
    /// Optional vertical coordinate used by the planar construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

impl Edge {
    pub fn new(id: EdgeId, tail: VertexId, head: VertexId) -> Self {
        Edge { id, tail, head, y: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Simple,
    General,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Simple => f.write_str("simple"),
            GraphKind::General => f.write_str("general"),
        }
    }
}

/// A finite time-like graph.
///
/// Vertices are stored sorted by `(time, id)`, which is a topological order
/// whenever every edge increases time. Edges are stored sorted by id.
#[derive(Debug, Clone)]
pub struct TimeLikeGraph {
    kind: GraphKind,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vindex: BTreeMap<VertexId, usize>,
    eindex: BTreeMap<EdgeId, usize>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl PartialEq for TimeLikeGraph {
    fn eq(&self, other: &Self) -> bool {
        let inc = |g: &TimeLikeGraph| g.edges.iter().map(|e| (e.id, e.tail, e.head)).collect::<Vec<_>>();
        self.kind == other.kind && self.vertices == other.vertices && inc(self) == inc(other)
    }
}

impl TimeLikeGraph {
    /// Builds a graph after structural checks (finite times, unique ids, no dangling
    /// endpoints). Time ordering and degree clauses are left to [`validate_tlg`].
    pub fn new(kind: GraphKind, mut vertices: Vec<Vertex>, mut edges: Vec<Edge>) -> Result<Self> {
        for v in &vertices {
            if !v.time.is_finite() {
                return Err(Error::Malformed(format!("vertex {} has non-finite time", v.id)));
            }
        }
        vertices.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.id.cmp(&b.id)));
        edges.sort_by_key(|e| e.id);
        let mut vindex = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vindex.insert(v.id, i).is_some() {
                return Err(Error::Malformed(format!("duplicate vertex id {}", v.id)));
            }
        }
        let mut eindex = BTreeMap::new();
        let mut out_adj = vec![Vec::new(); vertices.len()];
        let mut in_adj = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            if eindex.insert(e.id, i).is_some() {
                return Err(Error::Malformed(format!("duplicate edge id {}", e.id)));
            }
            let t = *vindex
                .get(&e.tail)
                .ok_or_else(|| Error::Malformed(format!("edge {} has dangling tail {}", e.id, e.tail)))?;
            let h = *vindex
                .get(&e.head)
                .ok_or_else(|| Error::Malformed(format!("edge {} has dangling head {}", e.id, e.head)))?;
            out_adj[t].push(i);
            in_adj[h].push(i);
        }
        Ok(TimeLikeGraph { kind, vertices, edges, vindex, eindex, out_adj, in_adj })
    }

    /// Convenience constructor from `(id, time)` and `(id, tail, head)` tuples.
    pub fn from_parts(kind: GraphKind, vs: &[(VertexId, f64)], es: &[(EdgeId, VertexId, VertexId)]) -> Result<Self> {
        Self::new(
            kind,
            vs.iter().map(|&(id, time)| Vertex { id, time }).collect(),
            es.iter().map(|&(id, t, h)| Edge::new(id, t, h)).collect(),
        )
    }

    pub fn empty(kind: GraphKind) -> Self {
        Self::new(kind, Vec::new(), Vec::new()).expect("empty graph is well formed")
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn with_kind(&self, kind: GraphKind) -> Self {
        let mut g = self.clone();
        g.kind = kind;
        g
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_index(&self, id: VertexId) -> Option<usize> {
        self.vindex.get(&id).copied()
    }

    pub fn edge_index(&self, id: EdgeId) -> Option<usize> {
        self.eindex.get(&id).copied()
    }

    pub fn vidx(&self, id: VertexId) -> Result<usize> {
        self.vertex_index(id).ok_or(Error::UnknownVertex(id))
    }

    pub fn eidx(&self, id: EdgeId) -> Result<usize> {
        self.edge_index(id).ok_or(Error::UnknownEdge(id))
    }

    pub fn vertex(&self, id: VertexId) -> Result<&Vertex> {
        Ok(&self.vertices[self.vidx(id)?])
    }

    pub fn edge(&self, id: EdgeId) -> Result<&Edge> {
        Ok(&self.edges[self.eidx(id)?])
    }

    pub fn time(&self, id: VertexId) -> Result<f64> {
        Ok(self.vertex(id)?.time)
    }

    /// Outgoing edge indices of the vertex at index `vi`, ordered by edge id.
    pub fn out_edges(&self, vi: usize) -> &[usize] {
        &self.out_adj[vi]
    }

    pub fn in_edges(&self, vi: usize) -> &[usize] {
        &self.in_adj[vi]
    }

    pub fn tail_index(&self, ei: usize) -> usize {
        self.vindex[&self.edges[ei].tail]
    }

    pub fn head_index(&self, ei: usize) -> usize {
        self.vindex[&self.edges[ei].head]
    }

    pub fn degree(&self, vi: usize) -> usize {
        self.out_adj[vi].len() + self.in_adj[vi].len()
    }

    /// Vertices without incoming edges, in `(time, id)` order.
    pub fn entrances(&self) -> Vec<VertexId> {
        (0..self.vertices.len()).filter(|&i| self.in_adj[i].is_empty()).map(|i| self.vertices[i].id).collect()
    }

    /// Vertices without outgoing edges, in `(time, id)` order.
    pub fn exits(&self) -> Vec<VertexId> {
        (0..self.vertices.len()).filter(|&i| self.out_adj[i].is_empty()).map(|i| self.vertices[i].id).collect()
    }

    pub fn max_vertex_id(&self) -> Option<VertexId> {
        self.vindex.keys().next_back().copied()
    }

    pub fn max_edge_id(&self) -> Option<EdgeId> {
        self.eindex.keys().next_back().copied()
    }

    pub fn time_range(&self) -> Option<(f64, f64)> {
        Some((self.vertices.first()?.time, self.vertices.last()?.time))
    }

    /// Subgraph on a vertex subset keeping edges with both ends inside.
    pub fn induced(&self, keep: &BTreeSet<VertexId>) -> TimeLikeGraph {
        let vs = self.vertices.iter().filter(|v| keep.contains(&v.id)).copied().collect();
        let es = self.edges.iter().filter(|e| keep.contains(&e.tail) && keep.contains(&e.head)).copied().collect();
        TimeLikeGraph::new(self.kind, vs, es).expect("induced subgraph is well formed")
    }

    /// Graph with extra edges appended.
    pub fn with_edges(&self, extra: &[Edge]) -> Result<TimeLikeGraph> {
        let mut es = self.edges.clone();
        es.extend_from_slice(extra);
        TimeLikeGraph::new(self.kind, self.vertices.clone(), es)
    }

    /// Fails unless every clause of the definition holds for the graph's kind.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_tlg(self);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(report.failures().join("; ")))
        }
    }

    pub fn ensure_simple(&self) -> Result<()> {
        let report = validate_tlg(&self.with_kind(GraphKind::Simple));
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(report.failures().join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseResult {
    pub clause: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: GraphKind,
    pub clauses: Vec<ClauseResult>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.clauses.iter().filter(|c| !c.pass).map(|c| format!("{}: {}", c.clause, c.detail)).collect()
    }
}

/// Checks the clauses of the time-like graph definition for the graph's declared kind.
pub fn validate_tlg(graph: &TimeLikeGraph) -> ValidationReport {
    let mut clauses = Vec::new();

    clauses.push(ClauseResult {
        clause: "nonempty",
        pass: graph.num_vertices() >= 2 && graph.num_edges() >= 1,
        detail: format!("{} vertices, {} edges", graph.num_vertices(), graph.num_edges()),
    });

    let bad_time: Vec<EdgeId> = graph
        .edges()
        .iter()
        .filter(|e| {
            let (a, b) = (graph.time(e.tail).unwrap(), graph.time(e.head).unwrap());
            a >= b
        })
        .map(|e| e.id)
        .collect();
    clauses.push(ClauseResult {
        clause: "time-order",
        pass: bad_time.is_empty(),
        detail: if bad_time.is_empty() {
            "every edge increases time".into()
        } else {
            format!("edges not increasing in time: {bad_time:?}")
        },
    });

    let isolated: Vec<VertexId> =
        (0..graph.num_vertices()).filter(|&i| graph.degree(i) == 0).map(|i| graph.vertices()[i].id).collect();
    clauses.push(ClauseResult {
        clause: "nonzero-degree",
        pass: isolated.is_empty(),
        detail: if isolated.is_empty() { "no isolated vertex".into() } else { format!("isolated vertices: {isolated:?}") },
    });

    if graph.kind() == GraphKind::Simple && graph.num_vertices() > 0 {
        let (tmin, tmax) = graph.time_range().unwrap();
        let entrances = graph.entrances();
        let exits = graph.exits();
        let at_min = graph.vertices().iter().filter(|v| v.time == tmin).count();
        let at_max = graph.vertices().iter().filter(|v| v.time == tmax).count();
        let ok_ent = entrances.len() == 1 && at_min == 1 && graph.time(entrances[0]).unwrap() == tmin;
        let ok_exit = exits.len() == 1 && at_max == 1 && graph.time(exits[0]).unwrap() == tmax;
        clauses.push(ClauseResult {
            clause: "unique-entrance",
            pass: ok_ent,
            detail: format!("vertices without in-edges: {entrances:?}"),
        });
        clauses.push(ClauseResult {
            clause: "unique-exit",
            pass: ok_exit,
            detail: format!("vertices without out-edges: {exits:?}"),
        });
    }

    ValidationReport { kind: graph.kind(), clauses }
}

/// A location on an edge at a given time. Points at a shared vertex are equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphPoint {
    pub edge: EdgeId,
    pub time: f64,
}

impl GraphPoint {
    pub fn new(edge: EdgeId, time: f64) -> Self {
        GraphPoint { edge, time }
    }

    /// The point sitting at vertex `v`, expressed on its lowest-id incident edge.
    pub fn at_vertex(graph: &TimeLikeGraph, v: VertexId) -> Result<Self> {
        let vi = graph.vidx(v)?;
        let e = graph
            .in_edges(vi)
            .iter()
            .chain(graph.out_edges(vi))
            .map(|&ei| graph.edges()[ei].id)
            .min()
            .ok_or_else(|| Error::Malformed(format!("vertex {v} has no incident edge")))?;
        Ok(GraphPoint { edge: e, time: graph.vertices()[vi].time })
    }
}

/// A point resolved against the graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loc {
    Vertex(usize),
    Interior { edge: usize, time: f64 },
}

impl TimeLikeGraph {
    pub fn resolve(&self, p: GraphPoint) -> Result<Loc> {
        let ei = self.eidx(p.edge)?;
        let (ti, hi) = (self.tail_index(ei), self.head_index(ei));
        let (a, b) = (self.vertices[ti].time, self.vertices[hi].time);
        if !(p.time >= a && p.time <= b) {
            return Err(Error::OffGraph(format!("time {} outside edge {} span [{a}, {b}]", p.time, p.edge)));
        }
        Ok(if p.time == a {
            Loc::Vertex(ti)
        } else if p.time == b {
            Loc::Vertex(hi)
        } else {
            Loc::Interior { edge: ei, time: p.time }
        })
    }

    pub fn same_point(&self, p: GraphPoint, q: GraphPoint) -> Result<bool> {
        Ok(self.resolve(p)? == self.resolve(q)?)
    }
}

/// A time-increasing sequence of edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimePath {
    pub edges: Vec<EdgeId>,
}

impl TimePath {
    pub fn new(edges: Vec<EdgeId>) -> Self {
        TimePath { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Vertex sequence of the path; fails when consecutive edges do not chain.
    pub fn vertices(&self, graph: &TimeLikeGraph) -> Result<Vec<VertexId>> {
        let mut out = Vec::with_capacity(self.edges.len() + 1);
        for (i, &eid) in self.edges.iter().enumerate() {
            let e = graph.edge(eid)?;
            if i == 0 {
                out.push(e.tail);
            } else if *out.last().unwrap() != e.tail {
                return Err(Error::Malformed(format!("path breaks before edge {eid}")));
            }
            out.push(e.head);
        }
        Ok(out)
    }

    pub fn start(&self, graph: &TimeLikeGraph) -> Result<VertexId> {
        Ok(graph.edge(*self.edges.first().ok_or_else(|| Error::Malformed("empty path".into()))?)?.tail)
    }

    pub fn end(&self, graph: &TimeLikeGraph) -> Result<VertexId> {
        Ok(graph.edge(*self.edges.last().ok_or_else(|| Error::Malformed("empty path".into()))?)?.head)
    }

    pub fn is_full(&self, graph: &TimeLikeGraph) -> bool {
        match (self.vertices(graph), graph.num_vertices()) {
            (Ok(vs), _) if !vs.is_empty() => {
                let s = graph.vidx(vs[0]).unwrap();
                let e = graph.vidx(*vs.last().unwrap()).unwrap();
                graph.in_edges(s).is_empty() && graph.out_edges(e).is_empty()
            }
            _ => false,
        }
    }
}
