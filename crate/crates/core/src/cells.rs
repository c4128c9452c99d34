//! Cells, half-cells, cell collapse and moralization.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, GraphKind, TimeLikeGraph, TimePath, Vertex, VertexId};
use crate::order::Reach;
use crate::paths::paths_between_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    Full,
    RightHalf,
    LeftHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Cell,
    Simple,
    TrulySimple,
    RightHalf,
    LeftHalf,
}

/// Two time-paths sharing their endpoints (or, for half-cells, one endpoint).
///
/// For a right half-cell `start` is the first vertex of `side_a`; for a left
/// half-cell `end` is the last vertex of `side_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub side_a: TimePath,
    pub side_b: TimePath,
    pub start: VertexId,
    pub end: VertexId,
    pub kind: CellKind,
    pub simple: bool,
    pub truly_simple: bool,
}

impl Cell {
    pub fn classification(&self) -> Classification {
        match self.kind {
            CellKind::RightHalf => Classification::RightHalf,
            CellKind::LeftHalf => Classification::LeftHalf,
            CellKind::Full if self.truly_simple => Classification::TrulySimple,
            CellKind::Full if self.simple => Classification::Simple,
            CellKind::Full => Classification::Cell,
        }
    }

    /// Vertices strictly inside side a and side b.
    pub fn interiors(&self, graph: &TimeLikeGraph) -> Result<(Vec<VertexId>, Vec<VertexId>)> {
        let a = self.side_a.vertices(graph)?;
        let b = self.side_b.vertices(graph)?;
        let strip = |v: Vec<VertexId>, kind: CellKind| -> Vec<VertexId> {
            match kind {
                CellKind::Full => v[1..v.len() - 1].to_vec(),
                CellKind::RightHalf => v[..v.len() - 1].to_vec(),
                CellKind::LeftHalf => v[1..].to_vec(),
            }
        };
        Ok((strip(a, self.kind), strip(b, self.kind)))
    }
}

/// Undirected connectivity between two vertex sets inside an allowed vertex set.
fn joined(graph: &TimeLikeGraph, allowed: &[bool], from: &[usize], to: &[usize]) -> bool {
    if from.is_empty() || to.is_empty() {
        return false;
    }
    let target: BTreeSet<usize> = to.iter().copied().collect();
    let mut seen = vec![false; graph.num_vertices()];
    let mut queue: VecDeque<usize> = from.iter().copied().collect();
    for &v in from {
        seen[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        if target.contains(&v) {
            return true;
        }
        let nbrs = graph
            .out_edges(v)
            .iter()
            .map(|&e| graph.head_index(e))
            .chain(graph.in_edges(v).iter().map(|&e| graph.tail_index(e)));
        for w in nbrs.collect::<Vec<_>>() {
            if allowed[w] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

fn comparable_across(reach: &Reach, a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|&x| b.iter().any(|&y| reach.leq(x, y) || reach.leq(y, x)))
}

fn idx_of(graph: &TimeLikeGraph, p: &TimePath) -> Vec<usize> {
    p.vertices(graph).unwrap().iter().map(|&v| graph.vidx(v).unwrap()).collect()
}

/// Enumerates all cells, and for general graphs all half-cells, with their classification.
pub fn find_cells(graph: &TimeLikeGraph, cap: usize) -> Result<Vec<Cell>> {
    let reach = Reach::new(graph);
    let n = graph.num_vertices();
    let mut budget = cap;
    let mut take = |ps: Vec<TimePath>| -> Result<Vec<TimePath>> {
        if ps.len() > budget {
            return Err(Error::CapExceeded(cap));
        }
        budget -= ps.len();
        Ok(ps)
    };
    let mut cells = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || !reach.leq(u, v) {
                continue;
            }
            let ps = take(paths_between_with(graph, &reach, u, v, cap)?)?;
            if ps.len() < 2 {
                continue;
            }
            let vs: Vec<Vec<usize>> = ps.iter().map(|p| idx_of(graph, p)).collect();
            let allowed: Vec<bool> = (0..n).map(|w| w != u && w != v && reach.leq(u, w) && reach.leq(w, v)).collect();
            for i in 0..ps.len() {
                for j in i + 1..ps.len() {
                    let ia = &vs[i][1..vs[i].len() - 1];
                    let ib = &vs[j][1..vs[j].len() - 1];
                    if ia.iter().any(|x| ib.contains(x)) {
                        continue;
                    }
                    let simple = !comparable_across(&reach, ia, ib);
                    let truly_simple = simple && !joined(graph, &allowed, ia, ib);
                    cells.push(Cell {
                        side_a: ps[i].clone(),
                        side_b: ps[j].clone(),
                        start: graph.vertices()[u].id,
                        end: graph.vertices()[v].id,
                        kind: CellKind::Full,
                        simple,
                        truly_simple,
                    });
                }
            }
        }
    }
    if graph.kind() == GraphKind::General {
        let ents: Vec<usize> = graph.entrances().iter().map(|&v| graph.vidx(v).unwrap()).collect();
        let exits: Vec<usize> = graph.exits().iter().map(|&v| graph.vidx(v).unwrap()).collect();
        for m in 0..n {
            // Right half-cells end at m and start at distinct entrances.
            let mut incoming = Vec::new();
            for &k in &ents {
                if k != m && reach.leq(k, m) {
                    incoming.extend(take(paths_between_with(graph, &reach, k, m, cap)?)?);
                }
            }
            let allowed: Vec<bool> = (0..n).map(|w| w != m && reach.leq(w, m)).collect();
            half_pairs(graph, &reach, &incoming, &allowed, CellKind::RightHalf, &mut cells);
            let mut outgoing = Vec::new();
            for &x in &exits {
                if x != m && reach.leq(m, x) {
                    outgoing.extend(take(paths_between_with(graph, &reach, m, x, cap)?)?);
                }
            }
            let allowed: Vec<bool> = (0..n).map(|w| w != m && reach.leq(m, w)).collect();
            half_pairs(graph, &reach, &outgoing, &allowed, CellKind::LeftHalf, &mut cells);
        }
    }
    Ok(cells)
}

fn half_pairs(
    graph: &TimeLikeGraph,
    reach: &Reach,
    paths: &[TimePath],
    allowed: &[bool],
    kind: CellKind,
    cells: &mut Vec<Cell>,
) {
    let vs: Vec<Vec<usize>> = paths.iter().map(|p| idx_of(graph, p)).collect();
    let strip = |v: &Vec<usize>| -> Vec<usize> {
        match kind {
            CellKind::RightHalf => v[..v.len() - 1].to_vec(),
            _ => v[1..].to_vec(),
        }
    };
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            let (a, b) = (strip(&vs[i]), strip(&vs[j]));
            let distinct_ends = match kind {
                CellKind::RightHalf => a[0] != b[0],
                _ => a.last() != b.last(),
            };
            if !distinct_ends || a.iter().any(|x| b.contains(x)) {
                continue;
            }
            let simple = !comparable_across(reach, &a, &b);
            let truly_simple = simple && !joined(graph, allowed, &a, &b);
            let id = |i: usize| graph.vertices()[i].id;
            cells.push(Cell {
                side_a: paths[i].clone(),
                side_b: paths[j].clone(),
                start: id(vs[i][0]),
                end: id(*vs[i].last().unwrap()),
                kind,
                simple,
                truly_simple,
            });
        }
    }
}

/// Glues the two sides of a full cell into a single time-path.
///
/// Side vertices are merged by time (equal times become one vertex carrying the
/// smallest id); the fused chain reuses the smallest side edge ids in time order.
pub fn cell_collapse(graph: &TimeLikeGraph, cell: &Cell) -> Result<TimeLikeGraph> {
    if cell.kind != CellKind::Full {
        return Err(Error::Argument("only full cells can be collapsed".into()));
    }
    let va = cell.side_a.vertices(graph).map_err(|_| Error::Argument("cell not found in graph".into()))?;
    let vb = cell.side_b.vertices(graph).map_err(|_| Error::Argument("cell not found in graph".into()))?;
    let coterminal = va[0] == vb[0] && va.last() == vb.last() && va[0] == cell.start && *va.last().unwrap() == cell.end;
    let disjoint = va[1..va.len() - 1].iter().all(|x| !vb[1..vb.len() - 1].contains(x));
    if !coterminal || !disjoint || cell.side_a == cell.side_b {
        return Err(Error::Argument("cell not found in graph".into()));
    }

    let mut side_vs: Vec<VertexId> = va.iter().chain(&vb).copied().collect::<BTreeSet<_>>().into_iter().collect();
    side_vs.sort_by(|a, b| graph.time(*a).unwrap().total_cmp(&graph.time(*b).unwrap()).then(a.cmp(b)));
    let mut groups: Vec<Vec<VertexId>> = Vec::new();
    for v in side_vs {
        let t = graph.time(v)?;
        match groups.last_mut() {
            Some(g) if graph.time(g[0])? == t => g.push(v),
            _ => groups.push(vec![v]),
        }
    }
    let mut rep: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for g in &groups {
        let r = *g.iter().min().unwrap();
        for &v in g {
            rep.insert(v, r);
        }
    }
    let side_edges: BTreeSet<EdgeId> = cell.side_a.edges.iter().chain(&cell.side_b.edges).copied().collect();
    let ids: Vec<EdgeId> = side_edges.iter().copied().collect();

    let vertices: Vec<Vertex> = graph
        .vertices()
        .iter()
        .filter(|v| rep.get(&v.id).is_none_or(|&r| r == v.id))
        .copied()
        .collect();
    let mut edges: Vec<Edge> = graph
        .edges()
        .iter()
        .filter(|e| !side_edges.contains(&e.id))
        .map(|e| {
            let m = |v: VertexId| *rep.get(&v).unwrap_or(&v);
            Edge { id: e.id, tail: m(e.tail), head: m(e.head), y: e.y }
        })
        .collect();
    for (i, w) in groups.windows(2).enumerate() {
        edges.push(Edge::new(ids[i], rep[&w[0][0]], rep[&w[1][0]]));
    }
    TimeLikeGraph::new(graph.kind(), vertices, edges)
}

/// Adds one edge from start to end for each distinct endpoint pair of a truly simple
/// full cell. New edge ids continue after the largest existing id.
pub fn moralize(graph: &TimeLikeGraph, cap: usize) -> Result<TimeLikeGraph> {
    let pairs: BTreeSet<(usize, usize)> = find_cells(graph, cap)?
        .iter()
        .filter(|c| c.kind == CellKind::Full && c.truly_simple)
        .map(|c| (graph.vidx(c.start).unwrap(), graph.vidx(c.end).unwrap()))
        .collect();
    let mut next = graph.max_edge_id().map_or(0, |m| m + 1);
    let extra: Vec<Edge> = pairs
        .into_iter()
        .map(|(u, v)| {
            let e = Edge::new(next, graph.vertices()[u].id, graph.vertices()[v].id);
            next += 1;
            e
        })
        .collect();
    graph.with_edges(&extra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::paths::DEFAULT_PATH_CAP;

    #[test]
    fn one_cell_graph_has_one_truly_simple_cell() {
        let cells = find_cells(&fixtures::one_cell(), DEFAULT_PATH_CAP).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].classification(), Classification::TrulySimple);
        assert_eq!((cells[0].start, cells[0].end), (0, 1));
    }

    #[test]
    fn tree_has_no_full_cells() {
        let cells = find_cells(&fixtures::binary_split(), DEFAULT_PATH_CAP).unwrap();
        assert!(cells.iter().all(|c| c.kind != CellKind::Full));
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].classification(), Classification::LeftHalf);
    }

    #[test]
    fn collapsing_one_cell_gives_single_edge() {
        let g = fixtures::one_cell();
        let c = &find_cells(&g, DEFAULT_PATH_CAP).unwrap()[0];
        let h = cell_collapse(&g, c).unwrap();
        assert_eq!(h.num_vertices(), 2);
        assert_eq!(h.num_edges(), 1);
    }

    #[test]
    fn moralizing_one_cell_adds_one_edge() {
        let g = fixtures::one_cell();
        let h = moralize(&g, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(h.num_edges(), 3);
        let e = h.edge(2).unwrap();
        assert_eq!((e.tail, e.head), (0, 1));
    }

    #[test]
    fn moralizing_tree_is_identity() {
        let g = fixtures::binary_split();
        assert_eq!(moralize(&g, DEFAULT_PATH_CAP).unwrap(), g);
    }

    #[test]
    fn unknown_cell_rejected() {
        let g = fixtures::one_cell();
        let c = Cell {
            side_a: TimePath::new(vec![0]),
            side_b: TimePath::new(vec![0]),
            start: 0,
            end: 1,
            kind: CellKind::Full,
            simple: true,
            truly_simple: true,
        };
        assert!(cell_collapse(&g, &c).is_err());
    }
}
