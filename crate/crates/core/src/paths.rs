//! Time-path enumeration and interval subgraphs.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{TimeLikeGraph, TimePath, VertexId};
use crate::order::Reach;

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// All time-paths from vertex index `from` to vertex index `to`, edges chosen in id order.
pub fn paths_between_idx(graph: &TimeLikeGraph, from: usize, to: usize, cap: usize) -> Result<Vec<TimePath>> {
    let reach = Reach::new(graph);
    paths_between_with(graph, &reach, from, to, cap)
}

pub fn paths_between_with(
    graph: &TimeLikeGraph,
    reach: &Reach,
    from: usize,
    to: usize,
    cap: usize,
) -> Result<Vec<TimePath>> {
    let mut out = Vec::new();
    if from == to || !reach.leq(from, to) {
        return Ok(out);
    }
    let mut stack: Vec<(usize, usize)> = vec![(from, 0)];
    let mut edges: Vec<usize> = Vec::new();
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        let outs = graph.out_edges(v);
        if *next >= outs.len() {
            stack.pop();
            edges.pop();
            continue;
        }
        let ei = outs[*next];
        *next += 1;
        let h = graph.head_index(ei);
        if h == to {
            if out.len() >= cap {
                return Err(Error::CapExceeded(cap));
            }
            let mut p: Vec<_> = edges.iter().map(|&i| graph.edges()[i].id).collect();
            p.push(graph.edges()[ei].id);
            out.push(TimePath::new(p));
        } else if reach.leq(h, to) {
            edges.push(ei);
            stack.push((h, 0));
        }
    }
    Ok(out)
}

/// Every time-path from an entrance to an exit.
pub fn full_time_paths(graph: &TimeLikeGraph, cap: usize) -> Result<Vec<TimePath>> {
    let reach = Reach::new(graph);
    let mut out = Vec::new();
    let exits: Vec<usize> = graph.exits().iter().map(|&v| graph.vidx(v).unwrap()).collect();
    for ent in graph.entrances() {
        let s = graph.vidx(ent)?;
        for &x in &exits {
            let rest = cap.saturating_sub(out.len());
            let ps = paths_between_with(graph, &reach, s, x, rest).map_err(|_| Error::CapExceeded(cap))?;
            out.extend(ps);
        }
    }
    Ok(out)
}

/// The first full time-path in lexicographic edge-id order from the earliest entrance.
pub fn first_full_path(graph: &TimeLikeGraph) -> Result<TimePath> {
    let ent = *graph.entrances().first().ok_or_else(|| Error::InvalidGraph("no entrance".into()))?;
    let mut v = graph.vidx(ent)?;
    let mut edges = Vec::new();
    while let Some(&ei) = graph.out_edges(v).first() {
        edges.push(graph.edges()[ei].id);
        v = graph.head_index(ei);
    }
    if edges.is_empty() {
        return Err(Error::InvalidGraph(format!("entrance {ent} has no outgoing edge")));
    }
    Ok(TimePath::new(edges))
}

/// The subgraph of all vertices lying on time-paths from `v1` to `v2`.
pub fn interval(graph: &TimeLikeGraph, v1: VertexId, v2: VertexId) -> Result<TimeLikeGraph> {
    let (a, b) = (graph.vidx(v1)?, graph.vidx(v2)?);
    let reach = Reach::new(graph);
    let keep: BTreeSet<VertexId> = if reach.leq(a, b) {
        (0..graph.num_vertices())
            .filter(|&w| reach.leq(a, w) && reach.leq(w, b))
            .map(|w| graph.vertices()[w].id)
            .collect()
    } else {
        BTreeSet::new()
    };
    Ok(graph.induced(&keep).with_kind(crate::graph::GraphKind::Simple))
}
