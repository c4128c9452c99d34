//! Gaussian processes on time-like graphs built edge by edge along a tower.
//!
//! The first segment of the tower carries the path law of the family; every later
//! segment is drawn from the family's conditional law given values already built.
//! For Markov families the conditioning is on the two endpoints. Otherwise it is on
//! every built node of one full path through the segment, and interior nodes are
//! restricted to a fixed grid on each edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{find_cells, moralize, Cell, CellKind};
use crate::embed::{is_tlg_star_star, Embedding};
use crate::error::{Error, Result};
use crate::gauss::{conditional_cov, pinv_sym, psd_factor, Clock, GaussianVector, MeanEstimate};
use crate::graph::{EdgeId, GraphKind, GraphPoint, Loc, TimeLikeGraph, VertexId};
use crate::order::{loc_leq, Reach};
use crate::paths::DEFAULT_PATH_CAP;
use crate::rng;
use crate::star::is_tlg_star;
use crate::tower::{Segment, Tower};

/// Tolerance for zero partial covariances and martingale identities.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for zero precision entries.
pub const PRECISION_TOL: f64 = 1e-8;

/// A family of mean-zero Gaussian path laws, one per full time-path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    /// `σ² (min(s, t) − origin)`.
    HomogeneousBrownian {
        #[serde(default = "one")]
        sigma2: f64,
        #[serde(default)]
        origin: f64,
    },
    /// Brownian motion pinned to 0 at `center`, independent on either side.
    TwoSidedBrownian {
        #[serde(default = "one")]
        sigma2: f64,
        #[serde(default)]
        center: f64,
    },
    /// Brownian bridge from `start` to `end`.
    BrownianBridge {
        #[serde(default = "one")]
        sigma2: f64,
        #[serde(default)]
        start: f64,
        #[serde(default = "one")]
        end: f64,
    },
    /// Martingale with variance function `V` given per edge; `V` must be nondecreasing.
    GluedDiffusion {
        #[serde(default = "one")]
        sigma2: f64,
        #[serde(default)]
        clocks: BTreeMap<EdgeId, Clock>,
        #[serde(default = "identity")]
        default: Clock,
    },
    /// `B(f(t))` with `f` given per edge; Markov only when every `f` is monotone.
    TimeChanged {
        #[serde(default = "one")]
        sigma2: f64,
        #[serde(default)]
        clocks: BTreeMap<EdgeId, Clock>,
        #[serde(default = "identity")]
        default: Clock,
    },
}

fn one() -> f64 {
    1.0
}

fn identity() -> Clock {
    Clock::Identity
}

/// A position on a specific edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pos {
    pub edge: EdgeId,
    pub time: f64,
}

impl Family {
    pub fn brownian() -> Self {
        Family::HomogeneousBrownian { sigma2: 1.0, origin: 0.0 }
    }

    pub fn sigma2(&self) -> f64 {
        match *self {
            Family::HomogeneousBrownian { sigma2, .. }
            | Family::TwoSidedBrownian { sigma2, .. }
            | Family::BrownianBridge { sigma2, .. }
            | Family::GluedDiffusion { sigma2, .. }
            | Family::TimeChanged { sigma2, .. } => sigma2,
        }
    }

    fn clock_at(&self, edge: EdgeId, t: f64) -> Option<f64> {
        match self {
            Family::GluedDiffusion { clocks, default, .. } | Family::TimeChanged { clocks, default, .. } => {
                Some(clocks.get(&edge).unwrap_or(default).eval(t))
            }
            _ => None,
        }
    }

    pub fn is_markov(&self) -> bool {
        match self {
            Family::TimeChanged { clocks, default, .. } => {
                default.is_nondecreasing() && clocks.values().all(Clock::is_nondecreasing)
            }
            _ => true,
        }
    }

    pub fn is_martingale(&self) -> bool {
        matches!(self, Family::HomogeneousBrownian { .. } | Family::GluedDiffusion { .. })
    }

    /// Path covariance between two positions on a common full path.
    pub fn cov(&self, p: Pos, q: Pos) -> f64 {
        let (s, t) = (p.time, q.time);
        match *self {
            Family::HomogeneousBrownian { sigma2, origin } => sigma2 * (s.min(t) - origin),
            Family::TwoSidedBrownian { sigma2, center } => {
                let (a, b) = (s - center, t - center);
                if a * b > 0.0 {
                    sigma2 * a.abs().min(b.abs())
                } else {
                    0.0
                }
            }
            Family::BrownianBridge { sigma2, start, end } => sigma2 * (s.min(t) - start) * (end - s.max(t)) / (end - start),
            Family::GluedDiffusion { sigma2, .. } | Family::TimeChanged { sigma2, .. } => {
                let (fp, fq) = (self.clock_at(p.edge, s).unwrap(), self.clock_at(q.edge, t).unwrap());
                sigma2 * fp.min(fq)
            }
        }
    }

    /// Rejects families that are not defined on the graph or disagree at a vertex.
    pub fn check(&self, graph: &TimeLikeGraph) -> Result<()> {
        let (tmin, tmax) = graph.time_range().ok_or_else(|| Error::InvalidGraph("empty graph".into()))?;
        if !(self.sigma2() >= 0.0 && self.sigma2().is_finite()) {
            return Err(Error::Argument("sigma2 must be finite and nonnegative".into()));
        }
        match self {
            Family::HomogeneousBrownian { origin, .. } if *origin > tmin + 1e-12 => {
                Err(Error::Argument(format!("origin {origin} after earliest time {tmin}")))
            }
            Family::BrownianBridge { start, end, .. } if !(start < end && *start <= tmin && *end >= tmax) => {
                Err(Error::Argument(format!("bridge interval [{start}, {end}] does not cover [{tmin}, {tmax}]")))
            }
            Family::GluedDiffusion { clocks, default, .. } | Family::TimeChanged { clocks, default, .. } => {
                default.validate()?;
                for (&e, c) in clocks {
                    graph.edge(e)?;
                    c.validate()?;
                }
                if matches!(self, Family::GluedDiffusion { .. }) && !self_is_monotone(clocks, default) {
                    return Err(Error::Inconsistent("glued diffusion needs nondecreasing clocks".into()));
                }
                for (vi, v) in graph.vertices().iter().enumerate() {
                    let vals: Vec<(EdgeId, f64)> = graph
                        .in_edges(vi)
                        .iter()
                        .chain(graph.out_edges(vi))
                        .map(|&ei| {
                            let id = graph.edges()[ei].id;
                            (id, self.clock_at(id, v.time).unwrap())
                        })
                        .collect();
                    if let Some(&(e0, x0)) = vals.first() {
                        for &(e, x) in &vals[1..] {
                            if (x - x0).abs() > EXACT_TOL * (1.0 + x0.abs()) {
                                return Err(Error::Inconsistent(format!(
                                    "edges {e0} and {e} disagree at vertex {}: {x0} vs {x}",
                                    v.id
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn self_is_monotone(clocks: &BTreeMap<EdgeId, Clock>, default: &Clock) -> bool {
    default.is_nondecreasing() && clocks.values().all(Clock::is_nondecreasing)
}

/// Path law used by the engine: the family itself, or its linear-ramp extension
/// onto a maximal embedding with zero values at the synthetic endpoints.
#[derive(Clone, Copy)]
enum Law<'a> {
    Plain(&'a Family),
    Ramped { family: &'a Family, emb: &'a Embedding, graph: &'a TimeLikeGraph },
}

impl Law<'_> {
    fn cov(&self, path: &[EdgeId], p: Pos, q: Pos) -> f64 {
        match *self {
            Law::Plain(f) => f.cov(p, q),
            Law::Ramped { family, emb, graph } => {
                let (Some((a, pi)), Some((b, qi))) = (ramp_map(emb, graph, path, p), ramp_map(emb, graph, path, q))
                else {
                    return 0.0;
                };
                if a == 0.0 || b == 0.0 {
                    0.0
                } else {
                    a * b * family.cov(pi, qi)
                }
            }
        }
    }
}

/// Scale factor and original position for a position of the embedded graph.
fn ramp_map(emb: &Embedding, graph: &TimeLikeGraph, path: &[EdgeId], p: Pos) -> Option<(f64, Pos)> {
    let Some(r) = emb.ramps.get(&p.edge) else {
        return Some((1.0, p));
    };
    let ta = graph.time(r.anchor).ok()?;
    let factor = if r.synthetic == emb.bottom {
        (p.time - emb.bottom_time) / (ta - emb.bottom_time)
    } else {
        (emb.top_time - p.time) / (emb.top_time - ta)
    };
    let on_path = path.iter().copied().find(|&e| {
        !emb.ramps.contains_key(&e) && graph.edge(e).map(|x| x.tail == r.anchor || x.head == r.anchor).unwrap_or(false)
    });
    let edge = match on_path {
        Some(e) => e,
        None => GraphPoint::at_vertex(graph, r.anchor).ok()?.edge,
    };
    Some((factor, Pos { edge, time: ta }))
}

/// Identifies a node of the engine: a vertex or an interior point of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Vertex(VertexId),
    Point(EdgeId, u64),
}

impl NodeKey {
    pub fn point(edge: EdgeId, time: f64) -> Self {
        NodeKey::Point(edge, time.to_bits())
    }

    pub fn label(&self) -> String {
        match *self {
            NodeKey::Vertex(v) => format!("v{v}"),
            NodeKey::Point(e, bits) => format!("e{e}@{}", f64::from_bits(bits)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Cells per edge of the evaluation grid used for non-Markov families.
    pub grid: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { grid: 8 }
    }
}

/// One creation step of the tower and the endpoints its law is anchored to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorRecord {
    pub step: usize,
    pub tail: VertexId,
    pub head: VertexId,
    pub edges: Vec<EdgeId>,
}

#[derive(Debug, Clone)]
pub struct ProcessModel {
    /// The graph the process lives on.
    pub graph: TimeLikeGraph,
    pub family: Family,
    /// Maximal embedding used for general graphs.
    pub embedding: Option<Embedding>,
    /// Tower of the graph the engine runs on (the embedding for general graphs).
    pub tower: Tower,
    pub options: ModelOptions,
    segments: Vec<Segment>,
    seg_of: BTreeMap<EdgeId, usize>,
    markov: bool,
}

/// Builds the natural process of `family` on a TLG* (or, for general graphs, a TLG**).
///
/// For general graphs a supplied tower must rebuild the maximal embedding.
pub fn build_model(graph: &TimeLikeGraph, family: Family, tower: Option<&Tower>) -> Result<ProcessModel> {
    build_model_with(graph, family, tower, ModelOptions::default())
}

pub fn build_model_with(
    graph: &TimeLikeGraph,
    family: Family,
    tower: Option<&Tower>,
    options: ModelOptions,
) -> Result<ProcessModel> {
    graph.ensure_valid()?;
    family.check(graph)?;
    if options.grid == 0 {
        return Err(Error::Argument("grid must have at least one cell".into()));
    }
    let (embedding, work_tower) = match graph.kind() {
        GraphKind::Simple => {
            let t = match tower {
                Some(t) => {
                    if !t.reproduces(graph) {
                        return Err(Error::Replay("tower does not rebuild the graph".into()));
                    }
                    t.clone()
                }
                None => {
                    let v = is_tlg_star(graph, None)?;
                    if !v.verdict {
                        return Err(Error::NotStar(format!("stuck on path {:?}", v.witness.map(|w| w.edges))));
                    }
                    v.tower.unwrap()
                }
            };
            (None, t)
        }
        GraphKind::General => {
            let v = is_tlg_star_star(graph)?;
            if !v.verdict {
                return Err(Error::NotStar(format!(
                    "maximal embedding stuck on path {:?}",
                    v.witness.map(|w| w.edges)
                )));
            }
            let t = match tower {
                Some(t) => {
                    if !t.reproduces(&v.embedding.graph) {
                        return Err(Error::Replay("tower does not rebuild the maximal embedding".into()));
                    }
                    t.clone()
                }
                None => v.embedded_tower.unwrap(),
            };
            (Some(v.embedding), t)
        }
    };
    let (segments, seg_of) = work_tower.segments()?;
    Ok(ProcessModel {
        graph: graph.clone(),
        markov: family.is_markov(),
        family,
        embedding,
        tower: work_tower,
        options,
        segments,
        seg_of,
    })
}

impl ProcessModel {
    pub fn is_markov(&self) -> bool {
        self.markov
    }

    pub fn work_graph(&self) -> &TimeLikeGraph {
        self.embedding.as_ref().map_or(&self.graph, |e| &e.graph)
    }

    fn law(&self) -> Law<'_> {
        match &self.embedding {
            None => Law::Plain(&self.family),
            Some(emb) => Law::Ramped { family: &self.family, emb, graph: &self.graph },
        }
    }

    pub fn anchors(&self) -> Vec<AnchorRecord> {
        self.segments
            .iter()
            .enumerate()
            .map(|(step, s)| AnchorRecord { step, tail: s.tail, head: s.head, edges: s.edges.clone() })
            .collect()
    }

    /// Interior grid times of an edge used by non-Markov families.
    pub fn grid_times(&self, edge: EdgeId) -> Result<Vec<f64>> {
        let g = self.work_graph();
        let e = g.edge(edge)?;
        let (a, b) = (g.time(e.tail)?, g.time(e.head)?);
        let m = self.options.grid;
        Ok((1..m).map(|k| a + (b - a) * k as f64 / m as f64).collect())
    }

    /// Resolves a point of the graph to an engine node, snapping to the grid when needed.
    fn node_of(&self, p: GraphPoint) -> Result<NodeKey> {
        let g = self.work_graph();
        if self.graph.edge_index(p.edge).is_none() {
            return Err(Error::UnknownEdge(p.edge));
        }
        Ok(match g.resolve(p)? {
            Loc::Vertex(vi) => NodeKey::Vertex(g.vertices()[vi].id),
            Loc::Interior { .. } if self.markov => NodeKey::point(p.edge, p.time),
            Loc::Interior { .. } => {
                let grid = self.grid_times(p.edge)?;
                let t = grid
                    .iter()
                    .copied()
                    .find(|&x| (x - p.time).abs() <= 1e-12)
                    .ok_or_else(|| Error::Argument(format!("time {} is not on the grid of edge {}", p.time, p.edge)))?;
                NodeKey::point(p.edge, t)
            }
        })
    }

    fn layout(&self, points: &BTreeMap<EdgeId, Vec<f64>>) -> Result<Layout> {
        let mut points = points.clone();
        if !self.markov {
            for e in self.work_graph().edges() {
                points.entry(e.id).or_default().extend(self.grid_times(e.id)?);
            }
        }
        Layout::new(self.work_graph(), self.law(), &self.segments, &self.seg_of, &points, self.markov)
    }
}

/// Node layout of the engine: nodes in creation order, grouped by tower segment.
struct Layout {
    keys: Vec<NodeKey>,
    index: HashMap<NodeKey, usize>,
    /// Per segment: nodes created, the conditioning nodes and the joint covariance
    /// of `[cond, new]` under the chosen path law.
    steps: Vec<LayoutStep>,
    /// Per segment: the node sequence from tail to head.
    chains: Vec<Vec<usize>>,
}

struct LayoutStep {
    new: Vec<usize>,
    cond: Vec<usize>,
    /// Covariance of `cond ++ new`.
    cov: DMatrix<f64>,
    /// Covariance over the segment chain, in chain order.
    chain_cov: DMatrix<f64>,
}

fn chain_nodes(
    work: &TimeLikeGraph,
    edges: &[EdgeId],
    points: &BTreeMap<EdgeId, Vec<f64>>,
) -> Result<Vec<(NodeKey, usize, Pos)>> {
    // Returns (key, edge index in `edges`, position) along the path.
    let mut out = Vec::new();
    for (i, &e) in edges.iter().enumerate() {
        let edge = work.edge(e)?;
        let (ta, tb) = (work.time(edge.tail)?, work.time(edge.head)?);
        if i == 0 {
            out.push((NodeKey::Vertex(edge.tail), i, Pos { edge: e, time: ta }));
        }
        let mut ts: Vec<f64> = points.get(&e).cloned().unwrap_or_default();
        ts.retain(|&t| t > ta && t < tb);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        for t in ts {
            out.push((NodeKey::point(e, t), i, Pos { edge: e, time: t }));
        }
        out.push((NodeKey::Vertex(edge.head), i, Pos { edge: e, time: tb }));
    }
    Ok(out)
}

impl Layout {
    fn new(
        work: &TimeLikeGraph,
        law: Law<'_>,
        segments: &[Segment],
        seg_of: &BTreeMap<EdgeId, usize>,
        points: &BTreeMap<EdgeId, Vec<f64>>,
        markov: bool,
    ) -> Result<Layout> {
        let mut keys = Vec::new();
        let mut index: HashMap<NodeKey, usize> = HashMap::new();
        let mut steps = Vec::new();
        let mut chains = Vec::new();
        for (k, seg) in segments.iter().enumerate() {
            let prefix = walk(work, seg_of, k, seg.tail, false)?;
            let suffix = walk(work, seg_of, k, seg.head, true)?;
            let mut sigma: Vec<EdgeId> = prefix;
            sigma.extend(&seg.edges);
            sigma.extend(suffix);
            let along = chain_nodes(work, &sigma, points)?;
            let seg_range = {
                let lo = along.iter().position(|x| x.0 == NodeKey::Vertex(seg.tail)).unwrap();
                let hi = along.iter().rposition(|x| x.0 == NodeKey::Vertex(seg.head)).unwrap();
                (lo, hi)
            };
            let mut new_local = Vec::new();
            for (li, (key, _, _)) in along.iter().enumerate() {
                let inside = li >= seg_range.0 && li <= seg_range.1;
                let endpoint = li == seg_range.0 || li == seg_range.1;
                if inside && (k == 0 || !endpoint) {
                    if index.contains_key(key) {
                        return Err(Error::Replay(format!("node {} created twice", key.label())));
                    }
                    index.insert(*key, keys.len());
                    keys.push(*key);
                    new_local.push(li);
                }
            }
            let cond_local: Vec<usize> = if k == 0 {
                vec![]
            } else if markov {
                vec![seg_range.0, seg_range.1]
            } else {
                (0..along.len()).filter(|li| !new_local.contains(li)).collect()
            };
            let order: Vec<usize> = cond_local.iter().chain(&new_local).copied().collect();
            let cov = DMatrix::from_fn(order.len(), order.len(), |i, j| {
                law.cov(&sigma, along[order[i]].2, along[order[j]].2)
            });
            let chain_local: Vec<usize> = (seg_range.0..=seg_range.1).collect();
            let chain_cov = DMatrix::from_fn(chain_local.len(), chain_local.len(), |i, j| {
                law.cov(&sigma, along[chain_local[i]].2, along[chain_local[j]].2)
            });
            let lookup = |li: usize| -> Result<usize> {
                index
                    .get(&along[li].0)
                    .copied()
                    .ok_or_else(|| Error::Replay(format!("node {} used before creation", along[li].0.label())))
            };
            steps.push(LayoutStep {
                new: new_local.iter().map(|&li| lookup(li)).collect::<Result<_>>()?,
                cond: cond_local.iter().map(|&li| lookup(li)).collect::<Result<_>>()?,
                cov,
                chain_cov,
            });
            chains.push(chain_local.iter().map(|&li| lookup(li)).collect::<Result<_>>()?);
        }
        Ok(Layout { keys, index, steps, chains })
    }

    /// Coefficients of every node on independent standard normals.
    fn coefficients(&self) -> Result<Vec<Vec<f64>>> {
        let mut coef: Vec<Vec<f64>> = vec![Vec::new(); self.keys.len()];
        let mut noises = 0usize;
        for st in &self.steps {
            let c = st.cond.len();
            let n = st.new.len();
            let cond: Vec<usize> = (0..c).collect();
            let new: Vec<usize> = (c..c + n).collect();
            let (w, r) = regress(&st.cov, &cond, &new);
            let l = psd_factor(&r)?;
            for i in 0..n {
                let mut row = vec![0.0; noises + n];
                for (j, &cn) in st.cond.iter().enumerate() {
                    let wij = w[(i, j)];
                    if wij != 0.0 {
                        for (x, y) in row.iter_mut().zip(&coef[cn]) {
                            *x += wij * y;
                        }
                    }
                }
                for j in 0..n {
                    row[noises + j] = l[(i, j)];
                }
                coef[st.new[i]] = row;
            }
            noises += n;
        }
        Ok(coef)
    }
}

/// Regression of `target` on `cond` inside a joint covariance: weights and residual covariance.
fn regress(cov: &DMatrix<f64>, cond: &[usize], target: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
    let ctt = DMatrix::from_fn(target.len(), cond.len(), |i, j| cov[(target[i], cond[j])]);
    let ccc = DMatrix::from_fn(cond.len(), cond.len(), |i, j| cov[(cond[i], cond[j])]);
    let w = if cond.is_empty() { DMatrix::zeros(target.len(), 0) } else { &ctt * pinv_sym(&ccc) };
    (w, conditional_cov(cov, target, cond))
}

/// Walks from `v` to the entrance (or exit when `forward`) using edges of earlier segments.
fn walk(work: &TimeLikeGraph, seg_of: &BTreeMap<EdgeId, usize>, k: usize, v: VertexId, forward: bool) -> Result<Vec<EdgeId>> {
    let mut out = Vec::new();
    if k == 0 {
        return Ok(out);
    }
    let mut vi = work.vidx(v)?;
    loop {
        let cand = if forward { work.out_edges(vi) } else { work.in_edges(vi) };
        let next = cand.iter().map(|&ei| &work.edges()[ei]).filter(|e| seg_of.get(&e.id).is_some_and(|&s| s < k)).min_by_key(|e| e.id);
        match next {
            None => break,
            Some(e) => {
                out.push(e.id);
                vi = work.vidx(if forward { e.head } else { e.tail })?;
            }
        }
    }
    if !forward {
        out.reverse();
    }
    Ok(out)
}

fn points_by_edge(keys: &[NodeKey]) -> BTreeMap<EdgeId, Vec<f64>> {
    let mut m: BTreeMap<EdgeId, Vec<f64>> = BTreeMap::new();
    for k in keys {
        if let NodeKey::Point(e, bits) = *k {
            m.entry(e).or_default().push(f64::from_bits(bits));
        }
    }
    m
}

/// Exact joint law of the process at the given points.
pub fn exact_joint(model: &ProcessModel, points: &[GraphPoint]) -> Result<GaussianVector> {
    let keys: Vec<NodeKey> = points.iter().map(|&p| model.node_of(p)).collect::<Result<_>>()?;
    exact_joint_keys(model, &keys)
}

/// Exact joint law at engine nodes.
pub fn exact_joint_keys(model: &ProcessModel, keys: &[NodeKey]) -> Result<GaussianVector> {
    let layout = model.layout(&points_by_edge(keys))?;
    let coef = layout.coefficients()?;
    let idx: Vec<usize> = keys
        .iter()
        .map(|k| layout.index.get(k).copied().ok_or_else(|| Error::OffGraph(k.label())))
        .collect::<Result<_>>()?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let n = idx.len();
    let cov = DMatrix::from_fn(n, n, |i, j| dot(&coef[idx[i]], &coef[idx[j]]));
    GaussianVector::zero_mean(keys.iter().map(NodeKey::label).collect(), cov)
}

/// Exact joint law at every vertex of the graph (original vertices only).
pub fn vertex_joint(model: &ProcessModel) -> Result<GaussianVector> {
    let keys: Vec<NodeKey> = model.graph.vertices().iter().map(|v| NodeKey::Vertex(v.id)).collect();
    exact_joint_keys(model, &keys)
}

/// One sampling instruction: a node drawn as a linear combination of earlier nodes plus noise.
#[derive(Debug, Clone)]
enum Draw {
    Single { node: usize, deps: Vec<(usize, f64)>, sd: f64 },
    Block { nodes: Vec<usize>, deps: Vec<usize>, w: DMatrix<f64>, l: DMatrix<f64> },
}

/// A compiled sampler over a fixed node set.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub keys: Vec<NodeKey>,
    draws: Vec<Draw>,
}

fn sd_of(v: f64, scale: f64) -> Result<f64> {
    if v < -1e-9 * scale.max(1e-300) {
        return Err(Error::Singular(format!("negative conditional variance {v:e}")));
    }
    Ok(v.max(0.0).sqrt())
}

impl Sampler {
    /// Markov families are sampled point by point: the seed path forward in time and each
    /// later segment as a sequence of three-point bridge steps. Other families are sampled
    /// segment-wise from the joint conditional law.
    fn compile(model: &ProcessModel, points: &BTreeMap<EdgeId, Vec<f64>>) -> Result<Sampler> {
        let layout = model.layout(points)?;
        let mut draws = Vec::new();
        for (k, st) in layout.steps.iter().enumerate() {
            if model.markov {
                let chain = &layout.chains[k];
                let kc = &st.chain_cov;
                let scale = kc.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
                let last = chain.len() - 1;
                if k == 0 {
                    for i in 0..chain.len() {
                        let (deps, var) = if i == 0 {
                            (vec![], kc[(0, 0)])
                        } else {
                            let (w, r) = regress(kc, &[i - 1], &[i]);
                            (vec![(chain[i - 1], w[(0, 0)])], r[(0, 0)])
                        };
                        draws.push(Draw::Single { node: chain[i], deps, sd: sd_of(var, scale)? });
                    }
                } else {
                    for i in 1..last {
                        let (w, r) = regress(kc, &[i - 1, last], &[i]);
                        draws.push(Draw::Single {
                            node: chain[i],
                            deps: vec![(chain[i - 1], w[(0, 0)]), (chain[last], w[(0, 1)])],
                            sd: sd_of(r[(0, 0)], scale)?,
                        });
                    }
                }
            } else {
                let c = st.cond.len();
                let n = st.new.len();
                let (w, r) = regress(&st.cov, &(0..c).collect::<Vec<_>>(), &(c..c + n).collect::<Vec<_>>());
                draws.push(Draw::Block { nodes: st.new.clone(), deps: st.cond.clone(), w, l: psd_factor(&r)? });
            }
        }
        Ok(Sampler { keys: layout.keys, draws })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.keys.len()];
        for d in &self.draws {
            match d {
                Draw::Single { node, deps, sd } => {
                    let z: f64 = rng.sample(StandardNormal);
                    x[*node] = deps.iter().map(|&(j, w)| w * x[j]).sum::<f64>() + sd * z;
                }
                Draw::Block { nodes, deps, w, l } => {
                    let z: Vec<f64> = (0..nodes.len()).map(|_| rng.sample(StandardNormal)).collect();
                    for (i, &node) in nodes.iter().enumerate() {
                        let mut v = 0.0;
                        for (j, &dep) in deps.iter().enumerate() {
                            v += w[(i, j)] * x[dep];
                        }
                        for (j, zj) in z.iter().enumerate() {
                            v += l[(i, j)] * zj;
                        }
                        x[node] = v;
                    }
                }
            }
        }
        x
    }
}

/// Monte Carlo realizations on a set of nodes; `values[r][i]` belongs to `keys[i]`.
#[derive(Debug, Clone)]
pub struct Realizations {
    pub keys: Vec<NodeKey>,
    /// Edge and time of each column, for CSV output.
    pub coords: Vec<(EdgeId, f64)>,
    pub values: Vec<Vec<f64>>,
}

impl Realizations {
    pub fn column(&self, key: NodeKey) -> Option<usize> {
        self.keys.iter().position(|k| *k == key)
    }

    /// Empirical covariance of two columns (mean known to be 0 is not assumed).
    pub fn cov_estimate(&self, a: usize, b: usize) -> MeanEstimate {
        let n = self.values.len() as f64;
        let (ma, mb) = (
            self.values.iter().map(|v| v[a]).sum::<f64>() / n,
            self.values.iter().map(|v| v[b]).sum::<f64>() / n,
        );
        crate::gauss::mean_estimate(self.values.iter().map(|v| (v[a] - ma) * (v[b] - mb)))
    }
}

fn run_sampler(model: &ProcessModel, sampler: &Sampler, reps: usize, seed: u64, keep: &[usize]) -> Vec<Vec<f64>> {
    let _ = model;
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(seed, "process", r as u64);
            let x = sampler.draw(&mut g);
            keep.iter().map(|&i| x[i]).collect()
        })
        .collect()
}

/// Samples the process on every edge at `resolution` cells per edge (Markov families), or
/// on the model grid (other families).
pub fn sample_paths(model: &ProcessModel, resolution: usize, reps: usize, seed: u64) -> Result<Realizations> {
    if resolution == 0 {
        return Err(Error::Argument("resolution must be positive".into()));
    }
    let res = if model.markov { resolution } else { model.options.grid };
    let mut points: BTreeMap<EdgeId, Vec<f64>> = BTreeMap::new();
    let mut wanted: Vec<(NodeKey, EdgeId, f64)> = Vec::new();
    for e in model.graph.edges() {
        let (a, b) = (model.graph.time(e.tail)?, model.graph.time(e.head)?);
        let ts: Vec<f64> = (1..res).map(|k| a + (b - a) * k as f64 / res as f64).collect();
        wanted.push((NodeKey::Vertex(e.tail), e.id, a));
        for &t in &ts {
            wanted.push((NodeKey::point(e.id, t), e.id, t));
        }
        wanted.push((NodeKey::Vertex(e.head), e.id, b));
        points.insert(e.id, ts);
    }
    let sampler = Sampler::compile(model, &points)?;
    let pos: HashMap<NodeKey, usize> = sampler.keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let keep: Vec<usize> = wanted.iter().map(|w| pos[&w.0]).collect();
    Ok(Realizations {
        keys: wanted.iter().map(|w| w.0).collect(),
        coords: wanted.iter().map(|w| (w.1, w.2)).collect(),
        values: run_sampler(model, &sampler, reps, seed, &keep),
    })
}

/// Samples the process at the given points.
pub fn sample_points(model: &ProcessModel, points: &[GraphPoint], reps: usize, seed: u64) -> Result<Realizations> {
    let keys: Vec<NodeKey> = points.iter().map(|&p| model.node_of(p)).collect::<Result<_>>()?;
    let sampler = Sampler::compile(model, &points_by_edge(&keys))?;
    let pos: HashMap<NodeKey, usize> = sampler.keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let keep: Vec<usize> = keys.iter().map(|k| pos[k]).collect();
    Ok(Realizations {
        keys: keys.clone(),
        coords: points.iter().map(|p| (p.edge, p.time)).collect(),
        values: run_sampler(model, &sampler, reps, seed, &keep),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMarkovReport {
    pub start: VertexId,
    pub end: VertexId,
    /// Largest absolute conditional cross-side covariance over the probe pairs.
    pub max_abs: f64,
    pub pairs: usize,
    pub pass: bool,
}

/// Interior probe points of a time-path: edge midpoints and interior vertices.
fn side_probes(graph: &TimeLikeGraph, side: &crate::graph::TimePath) -> Result<Vec<GraphPoint>> {
    let vs = side.vertices(graph)?;
    let mut out = Vec::new();
    for (i, &e) in side.edges.iter().enumerate() {
        let (a, b) = (graph.time(vs[i])?, graph.time(vs[i + 1])?);
        out.push(GraphPoint::new(e, 0.5 * (a + b)));
        if i + 1 < side.edges.len() {
            out.push(GraphPoint::new(e, b));
        }
    }
    Ok(out)
}

/// Conditional covariance `Cov(X(p), X(q) | X(start), X(end))`.
pub fn cell_partial_cov(model: &ProcessModel, cell: &Cell, p: GraphPoint, q: GraphPoint) -> Result<f64> {
    let g = &model.graph;
    let pts = [GraphPoint::at_vertex(g, cell.start)?, GraphPoint::at_vertex(g, cell.end)?, p, q];
    let joint = exact_joint(model, &pts)?;
    Ok(conditional_cov(&joint.cov, &[2, 3], &[0, 1])[(0, 1)])
}

/// Checks conditional independence of the two sides of a truly simple cell given its ends.
pub fn check_cell_markov(model: &ProcessModel, cell: &Cell) -> Result<CellMarkovReport> {
    if cell.kind != CellKind::Full || !cell.truly_simple {
        return Err(Error::Argument(format!("cell {}→{} is not truly simple", cell.start, cell.end)));
    }
    let g = &model.graph;
    let pa = side_probes(g, &cell.side_a)?;
    let pb = side_probes(g, &cell.side_b)?;
    let mut pts = vec![GraphPoint::at_vertex(g, cell.start)?, GraphPoint::at_vertex(g, cell.end)?];
    pts.extend(&pa);
    pts.extend(&pb);
    let joint = exact_joint(model, &pts)?;
    let a: Vec<usize> = (2..2 + pa.len()).collect();
    let b: Vec<usize> = (2 + pa.len()..pts.len()).collect();
    let keep: Vec<usize> = a.iter().chain(&b).copied().collect();
    let c = conditional_cov(&joint.cov, &keep, &[0, 1]);
    let mut max_abs = 0.0f64;
    for i in 0..a.len() {
        for j in 0..b.len() {
            max_abs = max_abs.max(c[(i, a.len() + j)].abs());
        }
    }
    Ok(CellMarkovReport {
        start: cell.start,
        end: cell.end,
        max_abs,
        pairs: a.len() * b.len(),
        pass: max_abs <= EXACT_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoralReport {
    /// Labels of the points kept in the precision matrix.
    pub labels: Vec<String>,
    /// Points with zero variance, removed before inversion.
    pub pinned: Vec<String>,
    pub adjacency: Vec<Vec<bool>>,
    pub precision: Vec<Vec<f64>>,
    /// Largest absolute precision entry over non-adjacent pairs.
    pub max_nonadjacent: f64,
    pub nonadjacent_pairs: usize,
    pub pass: bool,
}

/// Zero pattern of the precision matrix on `W` = vertices of degree ≥ 3, the entrance,
/// the exit and `extra` points, against the Markov-field graph of the moralized skeleton.
pub fn check_moral_graph_markov(model: &ProcessModel, extra: &[GraphPoint]) -> Result<MoralReport> {
    let g = &model.graph;
    if g.kind() != GraphKind::Simple {
        return Err(Error::Argument("moral graph check needs a simple graph".into()));
    }
    if !model.markov {
        return Err(Error::Argument("moral graph check needs a Markov family".into()));
    }
    let mut wkeys: BTreeSet<NodeKey> = BTreeSet::new();
    for (vi, v) in g.vertices().iter().enumerate() {
        if g.degree(vi) >= 3 || g.in_edges(vi).is_empty() || g.out_edges(vi).is_empty() {
            wkeys.insert(NodeKey::Vertex(v.id));
        }
    }
    for &p in extra {
        wkeys.insert(model.node_of(p)?);
    }
    let wkeys: Vec<NodeKey> = wkeys.into_iter().collect();
    let joint = exact_joint_keys(model, &wkeys)?;
    let scale = joint.cov.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    let (keep, pinned): (Vec<usize>, Vec<usize>) =
        (0..wkeys.len()).partition(|&i| joint.cov[(i, i)] > 1e-12 * scale.max(1e-300));
    let sub = joint.select(&keep);
    let eig = nalgebra::SymmetricEigen::new(sub.cov.clone());
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !keep.is_empty() && lmin <= 1e-12 * scale {
        return Err(Error::Singular(format!("covariance on {:?} is singular (duplicate points?)", sub.labels)));
    }
    let prec = sub.cov.clone().try_inverse().ok_or_else(|| Error::Singular("inversion failed".into()))?;
    let adj_full = mrf_adjacency(model, &wkeys)?;
    let n = keep.len();
    let adjacency: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| adj_full[keep[i]][keep[j]]).collect()).collect();
    let mut max_nonadjacent = 0.0f64;
    let mut nonadjacent_pairs = 0;
    for i in 0..n {
        for j in 0..i {
            if !adjacency[i][j] {
                nonadjacent_pairs += 1;
                max_nonadjacent = max_nonadjacent.max(prec[(i, j)].abs());
            }
        }
    }
    Ok(MoralReport {
        labels: sub.labels.clone(),
        pinned: pinned.iter().map(|&i| wkeys[i].label()).collect(),
        adjacency,
        precision: (0..n).map(|i| (0..n).map(|j| prec[(i, j)]).collect()).collect(),
        max_nonadjacent,
        nonadjacent_pairs,
        pass: max_nonadjacent <= PRECISION_TOL,
    })
}

/// `w1 ~ w2` when a time-path of the moralized graph joins them without meeting `W` in between.
fn mrf_adjacency(model: &ProcessModel, w: &[NodeKey]) -> Result<Vec<Vec<bool>>> {
    let g = &model.graph;
    let moral = moralize(g, DEFAULT_PATH_CAP)?;
    // Nodes: vertices, then W points on edges; edges split at W points.
    let mut ids: HashMap<NodeKey, usize> = HashMap::new();
    let mut keys: Vec<NodeKey> = Vec::new();
    let mut node = |k: NodeKey, keys: &mut Vec<NodeKey>| -> usize {
        *ids.entry(k).or_insert_with(|| {
            keys.push(k);
            keys.len() - 1
        })
    };
    let mut succ: Vec<(usize, usize)> = Vec::new();
    let by_edge = points_by_edge(w);
    for e in moral.edges() {
        let mut chain = vec![node(NodeKey::Vertex(e.tail), &mut keys)];
        let mut ts = by_edge.get(&e.id).cloned().unwrap_or_default();
        if g.edge_index(e.id).is_none() {
            ts.clear();
        }
        ts.sort_by(f64::total_cmp);
        for t in ts {
            chain.push(node(NodeKey::point(e.id, t), &mut keys));
        }
        chain.push(node(NodeKey::Vertex(e.head), &mut keys));
        for pair in chain.windows(2) {
            succ.push((pair[0], pair[1]));
        }
    }
    let n = keys.len();
    let mut out_adj = vec![Vec::new(); n];
    for (a, b) in succ {
        out_adj[a].push(b);
    }
    let in_w: Vec<bool> = keys.iter().map(|k| w.contains(k)).collect();
    let widx: HashMap<NodeKey, usize> = w.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut adj = vec![vec![false; w.len()]; w.len()];
    for (i, k) in w.iter().enumerate() {
        adj[i][i] = true;
        let start = ids[k];
        let mut stack = vec![start];
        let mut seen = vec![false; n];
        seen[start] = true;
        while let Some(x) = stack.pop() {
            for &y in &out_adj[x] {
                if seen[y] {
                    continue;
                }
                seen[y] = true;
                if in_w[y] {
                    let j = widx[&keys[y]];
                    adj[i][j] = true;
                    adj[j][i] = true;
                } else {
                    stack.push(y);
                }
            }
        }
    }
    Ok(adj)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    /// Largest deviation of `Cov(X(t), X(u)) − Cov(X(s), X(u))` over the probes `u ⪯ s`.
    pub max_dev: f64,
    pub probes: usize,
    pub pass: bool,
}

/// Checks `E[X(t) | X(u), u ⪯ s] = X(s)` through covariances at every vertex `u ⪯ s` and at `s`.
pub fn check_martingale(model: &ProcessModel, s: GraphPoint, t: GraphPoint) -> Result<MartingaleReport> {
    if !model.family.is_martingale() {
        return Err(Error::Argument("family is not a martingale family".into()));
    }
    let g = &model.graph;
    let reach = Reach::new(g);
    let (ls, lt) = (g.resolve(s)?, g.resolve(t)?);
    if !loc_leq(g, &reach, ls, lt) {
        return Err(Error::Argument("s does not precede t".into()));
    }
    let mut pts = vec![s, t];
    for (vi, v) in g.vertices().iter().enumerate() {
        if loc_leq(g, &reach, Loc::Vertex(vi), ls) {
            pts.push(GraphPoint::at_vertex(g, v.id)?);
        }
    }
    let joint = exact_joint(model, &pts)?;
    let mut max_dev = 0.0f64;
    for u in 0..pts.len() {
        if u == 1 {
            continue;
        }
        max_dev = max_dev.max((joint.cov[(1, u)] - joint.cov[(0, u)]).abs());
    }
    Ok(MartingaleReport { max_dev, probes: pts.len() - 1, pass: max_dev <= EXACT_TOL })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaiveReport {
    /// Exact `E[X(t₁) X(t₃)]` of the naive sequential-bridge build.
    pub naive: f64,
    /// Value claimed for the naive build in the literature.
    pub claimed: f64,
    /// Brownian requirement `t₁`.
    pub brownian: f64,
}

/// The naive build on the [`crate::fixtures::pic1`] graph: Brownian motion along
/// 0→2→4→5, then bridges 2→3→5, 0→1→4 and 1→3, each given only its endpoints.
pub fn naive_model() -> Result<ProcessModel> {
    let g = crate::fixtures::pic1();
    let segments = vec![
        Segment { tail: 0, head: 5, edges: vec![1, 5, 6], interior: vec![2, 4] },
        Segment { tail: 2, head: 5, edges: vec![4, 7], interior: vec![3] },
        Segment { tail: 0, head: 4, edges: vec![0, 2], interior: vec![1] },
        Segment { tail: 1, head: 3, edges: vec![3], interior: vec![] },
    ];
    let seg_of = segments.iter().enumerate().flat_map(|(k, s)| s.edges.iter().map(move |&e| (e, k))).collect();
    let tower = Tower {
        seed: crate::tower::Seed { tail: 0, head: 5, edge: 6, tail_time: 0.0, head_time: 1.0 },
        moves: vec![],
    };
    Ok(ProcessModel {
        graph: g,
        family: Family::brownian(),
        embedding: None,
        tower,
        options: ModelOptions::default(),
        segments,
        seg_of,
        markov: true,
    })
}

pub fn naive_counterexample() -> Result<NaiveReport> {
    let m = naive_model()?;
    let j = exact_joint_keys(&m, &[NodeKey::Vertex(1), NodeKey::Vertex(3)])?;
    Ok(NaiveReport { naive: j.cov[(0, 1)], claimed: 1.0 / 3.0, brownian: 0.2 })
}

/// Monte Carlo estimate of `E[X(t₁) X(t₃)]` under the naive build.
pub fn naive_counterexample_mc(reps: usize, seed: u64) -> Result<MeanEstimate> {
    let m = naive_model()?;
    let r = sample_points(&m, &[GraphPoint::new(0, 0.2), GraphPoint::new(3, 0.6)], reps, seed)?;
    Ok(crate::gauss::mean_estimate(r.values.iter().map(|v| v[0] * v[1])))
}

/// Truly simple full cells of the model's graph.
pub fn truly_simple_cells(model: &ProcessModel) -> Result<Vec<Cell>> {
    Ok(find_cells(&model.graph, DEFAULT_PATH_CAP)?
        .into_iter()
        .filter(|c| c.kind == CellKind::Full && c.truly_simple)
        .collect())
}
