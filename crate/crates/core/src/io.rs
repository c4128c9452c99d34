//! JSON formats for graphs and towers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, GraphKind, TimeLikeGraph, Vertex, VertexId};
use crate::tower::{Move, Seed, Tower};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    kind: GraphKind,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

/// Canonical JSON text of a graph: vertices by time then id, edges by id.
pub fn graph_to_json(graph: &TimeLikeGraph) -> String {
    let f = GraphFile { kind: graph.kind(), vertices: graph.vertices().to_vec(), edges: graph.edges().to_vec() };
    let mut s = serde_json::to_string_pretty(&f).expect("graph serializes");
    s.push('\n');
    s
}

pub fn graph_from_json(text: &str) -> Result<TimeLikeGraph> {
    let f: GraphFile = serde_json::from_str(text)?;
    TimeLikeGraph::new(f.kind, f.vertices, f.edges)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TowerFile {
    seed: (VertexId, VertexId, EdgeId),
    seed_times: (f64, f64),
    moves: Vec<Move>,
}

pub fn tower_to_json(tower: &Tower) -> String {
    let s = &tower.seed;
    let f = TowerFile {
        seed: (s.tail, s.head, s.edge),
        seed_times: (s.tail_time, s.head_time),
        moves: tower.moves.clone(),
    };
    let mut out = serde_json::to_string_pretty(&f).expect("tower serializes");
    out.push('\n');
    out
}

pub fn tower_from_json(text: &str) -> Result<Tower> {
    let f: TowerFile = serde_json::from_str(text)?;
    if f.seed.0 == f.seed.1 {
        return Err(Error::Malformed("seed edge is a loop".into()));
    }
    Ok(Tower {
        seed: Seed {
            tail: f.seed.0,
            head: f.seed.1,
            edge: f.seed.2,
            tail_time: f.seed_times.0,
            head_time: f.seed_times.1,
        },
        moves: f.moves,
    })
}
