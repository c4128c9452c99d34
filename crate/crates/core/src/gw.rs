//! Galton–Watson time-like trees with exponential lifetimes and reproduction at death,
//! and branching Brownian motion along them.

use std::collections::VecDeque;

use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphKind, TimeLikeGraph, Vertex};
use crate::rng;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// Offspring law as a finite table `p_0, …, p_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offspring {
    pub probs: Vec<f64>,
}

impl Offspring {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Argument("offspring table needs finite non-negative entries".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("offspring probabilities sum to {total}")));
        }
        Ok(Offspring { probs })
    }

    /// Deterministic law with `k` children.
    pub fn constant(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Offspring { probs }
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Generating function `Φ(s) = Σ p_k s^k`.
    pub fn pgf(&self, s: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| acc * s + p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwNode {
    /// Ulam–Harris label; the root is empty.
    pub label: Vec<u32>,
    pub parent: Option<usize>,
    pub birth: f64,
    pub lifetime: f64,
    /// Number of children, drawn only for deaths before the horizon.
    pub offspring: Option<u32>,
    pub children: Vec<usize>,
}

impl GwNode {
    pub fn death(&self) -> f64 {
        self.birth + self.lifetime
    }

    pub fn label_string(&self) -> String {
        if self.label.is_empty() {
            "root".into()
        } else {
            self.label.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
        }
    }
}

/// A tree truncated at `horizon`; nodes are in breadth-first order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwTree {
    pub rate: f64,
    pub horizon: f64,
    pub nodes: Vec<GwNode>,
}

impl GwTree {
    /// End of the retained part of node `i`'s lifetime.
    pub fn end(&self, i: usize) -> f64 {
        self.nodes[i].death().min(self.horizon)
    }

    pub fn alive_at(&self, t: f64) -> usize {
        self.nodes.iter().filter(|n| n.birth <= t && t < n.death()).count()
    }

    pub fn born_by(&self, t: f64) -> usize {
        self.nodes.iter().filter(|n| n.birth <= t).count()
    }

    /// Node alive at `t` reached from the root by always following the first child.
    pub fn first_lineage_at(&self, t: f64) -> Option<usize> {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.birth <= t && t < n.death() {
                return Some(i);
            }
            i = *n.children.first()?;
        }
    }
}

/// Breadth-first generation of the tree up to `horizon`.
pub fn sample_gw_tlt<R: Rng + ?Sized>(rate: f64, offspring: &Offspring, horizon: f64, cap: usize, rng: &mut R) -> Result<GwTree> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Argument(format!("rate must be positive, got {rate}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Argument(format!("horizon must be positive, got {horizon}")));
    }
    let life = Exp::new(rate).map_err(|e| Error::Argument(e.to_string()))?;
    let pick = WeightedIndex::new(&offspring.probs).map_err(|e| Error::Argument(e.to_string()))?;
    let mut nodes = vec![GwNode { label: vec![], parent: None, birth: 0.0, lifetime: 0.0, offspring: None, children: vec![] }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let lifetime = life.sample(rng);
        nodes[i].lifetime = lifetime;
        let death = nodes[i].birth + lifetime;
        if death >= horizon {
            continue;
        }
        let r = pick.sample(rng) as u32;
        nodes[i].offspring = Some(r);
        for c in 0..r {
            if nodes.len() >= cap {
                return Err(Error::CapExceeded(cap));
            }
            let mut label = nodes[i].label.clone();
            label.push(c + 1);
            let id = nodes.len();
            nodes.push(GwNode { label, parent: Some(i), birth: death, lifetime: 0.0, offspring: None, children: vec![] });
            nodes[i].children.push(id);
            queue.push_back(id);
        }
    }
    Ok(GwTree { rate, horizon, nodes })
}

/// Tree `rep` of a seeded family of replicates.
pub fn sample_gw_rep(rate: f64, offspring: &Offspring, horizon: f64, cap: usize, seed: u64, rep: u64) -> Result<GwTree> {
    sample_gw_tlt(rate, offspring, horizon, cap, &mut rng::stream(seed, "gw-tree", rep))
}

/// Vertex 0 is the root's birth; vertex `i + 1` ends node `i` (its death, or the horizon);
/// edge `i` is node `i`'s lifetime.
pub fn tlt_to_tlg(tree: &GwTree) -> Result<TimeLikeGraph> {
    let mut vertices = vec![Vertex { id: 0, time: 0.0 }];
    let mut edges = Vec::with_capacity(tree.nodes.len());
    for (i, n) in tree.nodes.iter().enumerate() {
        vertices.push(Vertex { id: i as i64 + 1, time: tree.end(i) });
        let tail = n.parent.map_or(0, |p| p as i64 + 1);
        edges.push(Edge::new(i as i64, tail, i as i64 + 1));
    }
    TimeLikeGraph::new(GraphKind::General, vertices, edges)
}

/// Alive and born-by counts on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationCurve {
    pub times: Vec<f64>,
    pub alive: Vec<usize>,
    pub born: Vec<usize>,
}

pub fn population_curve(tree: &GwTree, times: &[f64]) -> PopulationCurve {
    PopulationCurve {
        times: times.to_vec(),
        alive: times.iter().map(|&t| tree.alive_at(t)).collect(),
        born: times.iter().map(|&t| tree.born_by(t)).collect(),
    }
}

/// Spatial path of each node on its retained lifetime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchingField {
    /// `paths[i]` holds `(time, value)` pairs from birth to end of node `i`.
    pub paths: Vec<Vec<(f64, f64)>>,
}

impl BranchingField {
    /// Value of node `i` at `t`; exact on the path grid, linear in between.
    pub fn value_at(&self, i: usize, t: f64) -> Result<f64> {
        let p = &self.paths[i];
        let (first, last) = (p[0].0, p[p.len() - 1].0);
        if t < first - 1e-12 || t > last + 1e-12 {
            return Err(Error::OffGraph(format!("time {t} outside node {i}'s life [{first}, {last}]")));
        }
        let k = p.partition_point(|q| q.0 < t - 1e-12);
        if k < p.len() && (p[k].0 - t).abs() <= 1e-12 {
            return Ok(p[k].1);
        }
        let (a, b) = (p[k - 1], p[k]);
        Ok(a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0))
    }
}

/// Brownian motion along every lifetime, started at `start` for the root and at the
/// parent's last value for every child. Path grids are the multiples of `dt` plus the
/// birth and end times; node `i` draws from its own keyed stream.
pub fn sample_branching_markov(tree: &GwTree, dt: f64, start: f64, seed: u64) -> Result<BranchingField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Argument(format!("grid step must be positive, got {dt}")));
    }
    let mut paths: Vec<Vec<(f64, f64)>> = vec![Vec::new(); tree.nodes.len()];
    for (i, n) in tree.nodes.iter().enumerate() {
        let x0 = match n.parent {
            None => start,
            Some(p) => paths[p].last().expect("parents come first").1,
        };
        let (b, e) = (n.birth, tree.end(i));
        let mut g = rng::keyed_stream(seed, "bbm", &[i as i64]);
        let mut path = vec![(b, x0)];
        let mut k = (b / dt).floor() as i64 + 1;
        let (mut t, mut x) = (b, x0);
        loop {
            let next = (k as f64 * dt).min(e);
            if next - t > 1e-12 {
                x += (next - t).sqrt() * g.sample::<f64, _>(StandardNormal);
                t = next;
                path.push((t, x));
            }
            if next >= e {
                break;
            }
            k += 1;
        }
        paths[i] = path;
    }
    Ok(BranchingField { paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::is_tlg_star_star;

    #[test]
    fn single_lineage() {
        let t = sample_gw_rep(1.0, &Offspring::constant(1), 3.0, DEFAULT_NODE_CAP, 4, 0).unwrap();
        for s in [0.0, 0.5, 1.7, 2.99] {
            assert_eq!(t.alive_at(s), 1);
        }
        let g = tlt_to_tlg(&t).unwrap();
        assert_eq!(g.num_edges(), t.nodes.len());
        assert!(g.vertices().iter().all(|v| g.degree(g.vidx(v.id).unwrap()) <= 2));
    }

    #[test]
    fn childless_root() {
        let t = sample_gw_rep(1.0, &Offspring::constant(0), 100.0, DEFAULT_NODE_CAP, 1, 0).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.alive_at(0.0), 1);
        assert_eq!(t.alive_at(t.nodes[0].lifetime + 1e-9), 0);
    }

    #[test]
    fn birth_times_follow_parent_deaths() {
        let t = sample_gw_rep(1.0, &Offspring::constant(2), 2.0, DEFAULT_NODE_CAP, 9, 3).unwrap();
        for n in &t.nodes {
            if let Some(p) = n.parent {
                assert_eq!(n.birth, t.nodes[p].death());
                assert!(n.birth < t.horizon);
            }
        }
        assert!(is_tlg_star_star(&tlt_to_tlg(&t).unwrap()).unwrap().verdict);
    }

    #[test]
    fn node_cap_is_enforced() {
        let err = sample_gw_rep(1.0, &Offspring::constant(3), 20.0, 100, 0, 0).unwrap_err();
        assert!(matches!(err, Error::CapExceeded(100)));
    }

    #[test]
    fn offspring_table_checks() {
        assert!(Offspring::new(vec![0.5, 0.4]).is_err());
        assert!(Offspring::new(vec![-0.1, 1.1]).is_err());
        let o = Offspring::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!((o.mean() - 1.0).abs() < 1e-15);
        assert!((o.pgf(0.5) - (0.25 + 0.25 + 0.0625)).abs() < 1e-15);
    }

    #[test]
    fn field_is_continuous_at_births() {
        let t = sample_gw_rep(1.0, &Offspring::constant(2), 2.0, DEFAULT_NODE_CAP, 5, 1).unwrap();
        let f = sample_branching_markov(&t, 0.1, 0.0, 3).unwrap();
        assert_eq!(f.paths[0][0], (0.0, 0.0));
        for (i, n) in t.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                assert_eq!(f.paths[i][0], *f.paths[p].last().unwrap());
            }
            assert!((f.paths[i].last().unwrap().0 - t.end(i)).abs() < 1e-12);
        }
    }
}
