//! Embeddings of general TLGs into simple ones, and the TLG** verifier.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, GraphKind, TimeLikeGraph, TimePath, Vertex, VertexId};
use crate::paths::first_full_path;
use crate::star::is_tlg_star;
use crate::tower::{Direction, Move, Seed, Tower};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMode {
    Minimal,
    Maximal,
}

/// An edge joining an original vertex to a synthetic endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ramp {
    pub anchor: VertexId,
    pub synthetic: VertexId,
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub graph: TimeLikeGraph,
    pub mode: EmbedMode,
    pub bottom: VertexId,
    pub top: VertexId,
    pub bottom_time: f64,
    pub top_time: f64,
    pub ramps: BTreeMap<EdgeId, Ramp>,
}

impl Embedding {
    pub fn is_synthetic_vertex(&self, v: VertexId) -> bool {
        v == self.bottom || v == self.top
    }
}

/// Adds a synthetic entrance before and a synthetic exit after the graph.
///
/// The synthetic times sit one time-span below the minimum and above the maximum,
/// which gives −1 and 2 for graphs living on [0, 1].
pub fn embed(graph: &TimeLikeGraph, mode: EmbedMode) -> Result<Embedding> {
    let (tmin, tmax) = graph.time_range().ok_or_else(|| Error::InvalidGraph("empty graph".into()))?;
    let span = if tmax > tmin { tmax - tmin } else { 1.0 };
    let (bottom_time, top_time) = (tmin - span, tmax + span);
    let bottom = graph.max_vertex_id().unwrap() + 1;
    let top = bottom + 1;
    let mut next = graph.max_edge_id().map_or(0, |m| m + 1);
    let (lower, upper): (Vec<VertexId>, Vec<VertexId>) = match mode {
        EmbedMode::Minimal => (graph.entrances(), graph.exits()),
        EmbedMode::Maximal => {
            let all: Vec<VertexId> = graph.vertices().iter().map(|v| v.id).collect();
            (all.clone(), all)
        }
    };
    let mut vertices = graph.vertices().to_vec();
    vertices.push(Vertex { id: bottom, time: bottom_time });
    vertices.push(Vertex { id: top, time: top_time });
    let mut edges = graph.edges().to_vec();
    let mut ramps = BTreeMap::new();
    for v in lower {
        edges.push(Edge::new(next, bottom, v));
        ramps.insert(next, Ramp { anchor: v, synthetic: bottom });
        next += 1;
    }
    for v in upper {
        edges.push(Edge::new(next, v, top));
        ramps.insert(next, Ramp { anchor: v, synthetic: top });
        next += 1;
    }
    Ok(Embedding {
        graph: TimeLikeGraph::new(GraphKind::Simple, vertices, edges)?,
        mode,
        bottom,
        top,
        bottom_time,
        top_time,
        ramps,
    })
}

#[derive(Debug, Clone)]
pub struct StarStarVerdict {
    pub verdict: bool,
    /// Tower of moves on the original graph, including leaf and component additions.
    pub tower: Option<Tower>,
    /// TLG* tower of the maximal embedding.
    pub embedded_tower: Option<Tower>,
    pub embedding: Embedding,
    pub witness: Option<TimePath>,
}

/// The full path of the maximal embedding that runs through the first full path of the graph.
pub fn embedded_start(graph: &TimeLikeGraph, emb: &Embedding) -> Result<TimePath> {
    let inner = first_full_path(graph)?;
    let vs = inner.vertices(graph)?;
    let (first, last) = (vs[0], *vs.last().unwrap());
    let find = |anchor: VertexId, synthetic: VertexId| -> EdgeId {
        *emb.ramps.iter().find(|(_, r)| r.anchor == anchor && r.synthetic == synthetic).unwrap().0
    };
    let mut edges = vec![find(first, emb.bottom)];
    edges.extend(&inner.edges);
    edges.push(find(last, emb.top));
    Ok(TimePath::new(edges))
}

/// Decides TLG** membership through the maximal embedding and translates the tower back.
pub fn is_tlg_star_star(graph: &TimeLikeGraph) -> Result<StarStarVerdict> {
    let graph = graph.with_kind(GraphKind::General);
    graph.ensure_valid()?;
    let emb = embed(&graph, EmbedMode::Maximal)?;
    let start = embedded_start(&graph, &emb)?;
    let v = is_tlg_star(&emb.graph, Some(&start))?;
    if !v.verdict {
        return Ok(StarStarVerdict {
            verdict: false,
            tower: None,
            embedded_tower: None,
            embedding: emb,
            witness: v.witness,
        });
    }
    let et = v.tower.unwrap();
    let tower = project_tower(&graph, &emb, &et)?;
    if !tower.reproduces(&graph) {
        return Err(Error::Replay("projected tower does not rebuild the graph".into()));
    }
    Ok(StarStarVerdict { verdict: true, tower: Some(tower), embedded_tower: Some(et), embedding: emb, witness: None })
}

/// Projects a tower of the maximal embedding onto the original graph.
///
/// Each edge of an intermediate embedded graph covers a contiguous run of original
/// edges; that run is represented by a single edge carrying the id of its last
/// original edge.
pub fn project_tower(graph: &TimeLikeGraph, emb: &Embedding, tower: &Tower) -> Result<Tower> {
    let (segs, _) = tower.segments()?;
    let h = &emb.graph;
    let t = |v: VertexId| h.time(v).unwrap();
    let gpart = |s: usize, a: VertexId, b: VertexId| -> Option<(VertexId, VertexId, EdgeId)> {
        let (ta, tb) = (t(a), t(b));
        let run: Vec<&Edge> = segs[s]
            .edges
            .iter()
            .map(|&e| h.edge(e).unwrap())
            .filter(|e| graph.edge_index(e.id).is_some() && t(e.tail) >= ta && t(e.head) <= tb)
            .collect();
        Some((run.first()?.tail, run.last()?.head, run.last()?.id))
    };

    let mut cur: BTreeMap<EdgeId, (usize, VertexId, VertexId)> = BTreeMap::new();
    cur.insert(tower.seed.edge, (0, tower.seed.tail, tower.seed.head));
    let (ga, gb, pe) = gpart(0, tower.seed.tail, tower.seed.head)
        .ok_or_else(|| Error::Replay("embedded start path carries no original edge".into()))?;
    let seed = Seed { tail: ga, head: gb, edge: pe, tail_time: t(ga), head_time: t(gb) };
    let mut present: BTreeSet<VertexId> = BTreeSet::from([ga, gb]);
    let mut moves = Vec::new();
    let mut seg_counter = 0;
    for mv in &tower.moves {
        match *mv {
            Move::AddVertex { edge, vertex, time, lower_edge, upper_edge } => {
                let (s, a, b) = cur.remove(&edge).ok_or(Error::UnknownEdge(edge))?;
                cur.insert(lower_edge, (s, a, vertex));
                cur.insert(upper_edge, (s, vertex, b));
                if let Some((ga, gb, pe)) = gpart(s, a, b) {
                    if t(ga) < time && time < t(gb) {
                        let (_, _, lower) = gpart(s, a, vertex).expect("lower part is nonempty");
                        moves.push(Move::AddVertex { edge: pe, vertex, time, lower_edge: lower, upper_edge: pe });
                        present.insert(vertex);
                    }
                }
            }
            Move::AddEdge { tail, head, edge } => {
                seg_counter += 1;
                cur.insert(edge, (seg_counter, tail, head));
                if let Some((ga, gb, pe)) = gpart(seg_counter, tail, head) {
                    let m = match (present.contains(&ga), present.contains(&gb)) {
                        (true, true) => Move::AddEdge { tail: ga, head: gb, edge: pe },
                        (true, false) => {
                            Move::AddLeaf { anchor: ga, vertex: gb, time: t(gb), edge: pe, direction: Direction::Forward }
                        }
                        (false, true) => {
                            Move::AddLeaf { anchor: gb, vertex: ga, time: t(ga), edge: pe, direction: Direction::Backward }
                        }
                        (false, false) => {
                            Move::AddComponent { tail: ga, head: gb, tail_time: t(ga), head_time: t(gb), edge: pe }
                        }
                    };
                    moves.push(m);
                    present.insert(ga);
                    present.insert(gb);
                }
            }
            _ => return Err(Error::Replay("embedded tower must use vertex and edge additions only".into())),
        }
    }
    Ok(Tower { seed, moves })
}
