//! The stingy verifier: grows a graph from a spine by minimal-span ears.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, TimeLikeGraph, TimePath};
use crate::paths::first_full_path;
use crate::tower::{Move, ReplayState, Seed, Tower};

const SPAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarVerdict {
    pub verdict: bool,
    pub tower: Option<Tower>,
    /// The ear whose endpoints were not yet connected when it was chosen.
    pub witness: Option<TimePath>,
}

/// Appends the moves that insert the path `edges` (already chained) as one edge
/// followed by vertex splits. The inserted edge carries the path's last edge id.
fn ear_moves(graph: &TimeLikeGraph, edges: &[EdgeId], moves: &mut Vec<Move>) {
    let last = *edges.last().unwrap();
    for &eid in &edges[..edges.len() - 1] {
        let e = graph.edge(eid).unwrap();
        moves.push(Move::AddVertex {
            edge: last,
            vertex: e.head,
            time: graph.time(e.head).unwrap(),
            lower_edge: eid,
            upper_edge: last,
        });
    }
}

/// Decides whether a simple TLG is a TLG*, starting from `start` or from the first
/// full path in edge-id order.
pub fn is_tlg_star(graph: &TimeLikeGraph, start: Option<&TimePath>) -> Result<StarVerdict> {
    graph.ensure_simple()?;
    let start = match start {
        Some(p) => p.clone(),
        None => first_full_path(graph)?,
    };
    let spine = start.vertices(graph)?;
    if !start.is_full(graph) {
        return Err(Error::Argument("start path is not a full time-path".into()));
    }

    let n = graph.num_vertices();
    let m = graph.num_edges();
    let times: Vec<f64> = graph.vertices().iter().map(|v| v.time).collect();
    let mut in_v = vec![false; n];
    let mut in_e = vec![false; m];
    for &v in &spine {
        in_v[graph.vidx(v)?] = true;
    }
    for &e in &start.edges {
        in_e[graph.eidx(e)?] = true;
    }
    let mut used = start.len();

    let seed = Seed {
        tail: spine[0],
        head: *spine.last().unwrap(),
        edge: *start.edges.last().unwrap(),
        tail_time: times[graph.vidx(spine[0])?],
        head_time: times[graph.vidx(*spine.last().unwrap())?],
    };
    let mut moves = Vec::new();
    ear_moves(graph, &start.edges, &mut moves);
    let mut state = ReplayState::default();
    state.times.insert(seed.tail, seed.tail_time);
    state.times.insert(seed.head, seed.head_time);
    state.edges.insert(seed.edge, (seed.tail, seed.head));
    for mv in &moves {
        state.apply(mv)?;
    }

    let mut best = vec![f64::INFINITY; n];
    while used < m {
        // best[v] for v outside the current graph: earliest current vertex reachable
        // through vertices that are all outside.
        let target = |h: usize, best: &[f64]| if in_v[h] { times[h] } else { best[h] };
        for vi in (0..n).rev() {
            best[vi] = f64::INFINITY;
            if in_v[vi] {
                continue;
            }
            for &ei in graph.out_edges(vi) {
                let t = target(graph.head_index(ei), &best);
                if t < best[vi] {
                    best[vi] = t;
                }
            }
        }
        let mut span = f64::INFINITY;
        let mut reach_of = vec![f64::INFINITY; n];
        for k in 0..n {
            if !in_v[k] {
                continue;
            }
            for &ei in graph.out_edges(k) {
                if in_e[ei] {
                    continue;
                }
                let t = target(graph.head_index(ei), &best);
                reach_of[k] = reach_of[k].min(t);
            }
            span = span.min(reach_of[k] - times[k]);
        }
        if !span.is_finite() {
            return Err(Error::InvalidGraph("unused edges are not reachable from the current graph".into()));
        }

        let mut chosen: Option<(usize, Vec<usize>)> = None;
        for k in 0..n {
            if !in_v[k] || (reach_of[k] - times[k] - span).abs() > SPAN_TOL {
                continue;
            }
            let goal = reach_of[k];
            let mut path = Vec::new();
            let mut v = k;
            loop {
                let step = graph.out_edges(v).iter().copied().find(|&ei| {
                    if in_e[ei] {
                        return false;
                    }
                    let h = graph.head_index(ei);
                    (target(h, &best) - goal).abs() <= SPAN_TOL
                });
                let ei = step.expect("a minimal ear continues");
                path.push(ei);
                v = graph.head_index(ei);
                if in_v[v] {
                    break;
                }
            }
            let ids: Vec<EdgeId> = path.iter().map(|&i| graph.edges()[i].id).collect();
            let better = match &chosen {
                None => true,
                Some((_, p)) => {
                    let pids: Vec<EdgeId> = p.iter().map(|&i| graph.edges()[i].id).collect();
                    ids < pids
                }
            };
            if better {
                chosen = Some((k, path));
            }
        }
        let (k, path) = chosen.expect("some start attains the minimal span");
        let l = graph.head_index(*path.last().unwrap());
        let ids: Vec<EdgeId> = path.iter().map(|&i| graph.edges()[i].id).collect();
        let (kid, lid) = (graph.vertices()[k].id, graph.vertices()[l].id);
        if !state.connected(kid, lid) {
            return Ok(StarVerdict { verdict: false, tower: None, witness: Some(TimePath::new(ids)) });
        }
        let first = moves.len();
        moves.push(Move::AddEdge { tail: kid, head: lid, edge: *ids.last().unwrap() });
        ear_moves(graph, &ids, &mut moves);
        for mv in &moves[first..] {
            state.apply(mv)?;
        }
        for &ei in &path {
            in_e[ei] = true;
            in_v[graph.head_index(ei)] = true;
        }
        used += path.len();
    }
    Ok(StarVerdict { verdict: true, tower: Some(Tower { seed, moves }), witness: None })
}
