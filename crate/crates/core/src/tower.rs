//! Construction towers: sequences of moves that build a graph from a single edge.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, GraphKind, TimeLikeGraph, Vertex, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub tail: VertexId,
    pub head: VertexId,
    pub edge: EdgeId,
    pub tail_time: f64,
    pub head_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The new vertex lies after the anchor.
    Forward,
    /// The new vertex lies before the anchor.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Move {
    /// Split `edge` at a new vertex; the halves get ids `lower_edge` and `upper_edge`.
    AddVertex { edge: EdgeId, vertex: VertexId, time: f64, lower_edge: EdgeId, upper_edge: EdgeId },
    /// New edge between two vertices already joined by a time-path.
    AddEdge { tail: VertexId, head: VertexId, edge: EdgeId },
    /// New vertex joined to an existing one by a single edge.
    AddLeaf { anchor: VertexId, vertex: VertexId, time: f64, edge: EdgeId, direction: Direction },
    /// Disjoint new edge with two new endpoints.
    AddComponent { tail: VertexId, head: VertexId, tail_time: f64, head_time: f64, edge: EdgeId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub seed: Seed,
    pub moves: Vec<Move>,
}

/// Mutable graph state used while replaying a tower.
#[derive(Debug, Clone, Default)]
pub struct ReplayState {
    pub times: BTreeMap<VertexId, f64>,
    pub edges: BTreeMap<EdgeId, (VertexId, VertexId)>,
}

impl ReplayState {
    fn from_seed(seed: &Seed) -> Result<Self> {
        if seed.tail_time >= seed.head_time || seed.tail == seed.head {
            return Err(Error::Replay("seed edge does not increase time".into()));
        }
        let mut s = ReplayState::default();
        s.times.insert(seed.tail, seed.tail_time);
        s.times.insert(seed.head, seed.head_time);
        s.edges.insert(seed.edge, (seed.tail, seed.head));
        Ok(s)
    }

    /// Forward reachability along current edges.
    pub fn connected(&self, from: VertexId, to: VertexId) -> bool {
        if from == to {
            return true;
        }
        let mut adj: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for &(t, h) in self.edges.values() {
            adj.entry(t).or_default().push(h);
        }
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &h in adj.get(&v).map(|x| x.as_slice()).unwrap_or(&[]) {
                if h == to {
                    return true;
                }
                if seen.insert(h) {
                    queue.push_back(h);
                }
            }
        }
        false
    }

    fn fresh_edge(&self, e: EdgeId) -> Result<()> {
        if self.edges.contains_key(&e) {
            Err(Error::Replay(format!("edge id {e} already used")))
        } else {
            Ok(())
        }
    }

    fn fresh_vertex(&self, v: VertexId) -> Result<()> {
        if self.times.contains_key(&v) {
            Err(Error::Replay(format!("vertex id {v} already used")))
        } else {
            Ok(())
        }
    }

    fn time(&self, v: VertexId) -> Result<f64> {
        self.times.get(&v).copied().ok_or_else(|| Error::Replay(format!("vertex {v} not yet present")))
    }

    /// Applies one move, checking its precondition.
    pub fn apply(&mut self, mv: &Move) -> Result<()> {
        match *mv {
            Move::AddVertex { edge, vertex, time, lower_edge, upper_edge } => {
                let (t, h) = self.edges.remove(&edge).ok_or_else(|| Error::Replay(format!("edge {edge} not present")))?;
                self.fresh_vertex(vertex)?;
                if lower_edge == upper_edge {
                    return Err(Error::Replay(format!("split of edge {edge} reuses one id twice")));
                }
                self.fresh_edge(lower_edge)?;
                self.fresh_edge(upper_edge)?;
                let (a, b) = (self.time(t)?, self.time(h)?);
                if !(a < time && time < b) {
                    return Err(Error::Replay(format!("vertex {vertex} time {time} not inside edge {edge}")));
                }
                self.times.insert(vertex, time);
                self.edges.insert(lower_edge, (t, vertex));
                self.edges.insert(upper_edge, (vertex, h));
            }
            Move::AddEdge { tail, head, edge } => {
                self.fresh_edge(edge)?;
                let (a, b) = (self.time(tail)?, self.time(head)?);
                if a >= b {
                    return Err(Error::Replay(format!("edge {edge} does not increase time")));
                }
                if !self.connected(tail, head) {
                    return Err(Error::Replay(format!(
                        "edge {edge} joins {tail} and {head} which are not time-path connected"
                    )));
                }
                self.edges.insert(edge, (tail, head));
            }
            Move::AddLeaf { anchor, vertex, time, edge, direction } => {
                self.fresh_edge(edge)?;
                self.fresh_vertex(vertex)?;
                let ta = self.time(anchor)?;
                let pair = match direction {
                    Direction::Forward if time > ta => (anchor, vertex),
                    Direction::Backward if time < ta => (vertex, anchor),
                    _ => return Err(Error::Replay(format!("leaf {vertex} on wrong side of anchor {anchor}"))),
                };
                self.times.insert(vertex, time);
                self.edges.insert(edge, pair);
            }
            Move::AddComponent { tail, head, tail_time, head_time, edge } => {
                self.fresh_edge(edge)?;
                self.fresh_vertex(tail)?;
                self.fresh_vertex(head)?;
                if tail == head || tail_time >= head_time {
                    return Err(Error::Replay(format!("component edge {edge} does not increase time")));
                }
                self.times.insert(tail, tail_time);
                self.times.insert(head, head_time);
                self.edges.insert(edge, (tail, head));
            }
        }
        Ok(())
    }

    pub fn to_graph(&self, kind: GraphKind) -> Result<TimeLikeGraph> {
        TimeLikeGraph::new(
            kind,
            self.times.iter().map(|(&id, &time)| Vertex { id, time }).collect(),
            self.edges.iter().map(|(&id, &(t, h))| Edge::new(id, t, h)).collect(),
        )
    }
}

/// A maximal path created by one step of a tower: the seed or one added edge,
/// together with all vertices later inserted into it.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub tail: VertexId,
    pub head: VertexId,
    /// Final edge ids in time order.
    pub edges: Vec<EdgeId>,
    /// Vertices inserted into this segment, in time order.
    pub interior: Vec<VertexId>,
}

impl Tower {
    pub fn replay_state(&self) -> Result<ReplayState> {
        let mut s = ReplayState::from_seed(&self.seed)?;
        for (i, mv) in self.moves.iter().enumerate() {
            s.apply(mv).map_err(|e| Error::Replay(format!("move {i}: {e}")))?;
        }
        Ok(s)
    }

    pub fn replay(&self, kind: GraphKind) -> Result<TimeLikeGraph> {
        self.replay_state()?.to_graph(kind)
    }

    /// True when replay reproduces `graph` (same ids, times and incidences).
    pub fn reproduces(&self, graph: &TimeLikeGraph) -> bool {
        match self.replay(graph.kind()) {
            Ok(g) => g == *graph,
            Err(_) => false,
        }
    }

    /// Splits the final graph into the segments created by the seed and each added edge.
    /// Only towers made of vertex and edge additions are supported.
    pub fn segments(&self) -> Result<(Vec<Segment>, BTreeMap<EdgeId, usize>)> {
        let mut s = ReplayState::from_seed(&self.seed)?;
        let mut seg_of: BTreeMap<EdgeId, usize> = BTreeMap::from([(self.seed.edge, 0)]);
        let mut ends = vec![(self.seed.tail, self.seed.head)];
        let mut born: Vec<Vec<VertexId>> = vec![vec![]];
        for mv in &self.moves {
            s.apply(mv)?;
            match *mv {
                Move::AddVertex { edge, vertex, lower_edge, upper_edge, .. } => {
                    let k = seg_of.remove(&edge).expect("edge present after apply");
                    seg_of.insert(lower_edge, k);
                    seg_of.insert(upper_edge, k);
                    born[k].push(vertex);
                }
                Move::AddEdge { tail, head, edge } => {
                    seg_of.insert(edge, ends.len());
                    ends.push((tail, head));
                    born.push(vec![]);
                }
                _ => return Err(Error::Replay("segments are defined only for vertex and edge additions".into())),
            }
        }
        let mut segs: Vec<Segment> = ends
            .iter()
            .zip(born)
            .map(|(&(tail, head), mut interior)| {
                interior.sort_by(|a, b| s.times[a].total_cmp(&s.times[b]));
                Segment { tail, head, edges: vec![], interior }
            })
            .collect();
        for (&e, &k) in &seg_of {
            segs[k].edges.push(e);
        }
        for seg in &mut segs {
            seg.edges.sort_by(|a, b| s.times[&s.edges[a].0].total_cmp(&s.times[&s.edges[b].0]));
        }
        Ok((segs, seg_of))
    }
}
