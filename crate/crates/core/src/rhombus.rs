//! Natural two-sided Brownian motion on the `(α, n)`-rhombus grid.
//!
//! Lattice points are `(t_j, x_k) = (j·n^{−1/2−α}, k/n)` with `j ≡ k (mod 2)`; every edge
//! joins `(t_j, x_k)` to `(t_{j+1}, x_{k±1})`. Columns 0 and 1 carry the spine, the row
//! `t = 0` is identically zero, and each further column is filled from its neighbour
//! towards the spine by midpoint bridge steps. Given the lattice values every edge carries
//! an independent zero-endpoint bridge, regenerated on demand from a stream keyed by the edge.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::{mean_estimate, path_extremes, standard_bridge_path, MaxMethod, MeanEstimate};
use crate::rng;
use crate::she::{interpolate_lattice_with_edges, NoiseVariance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhombusGrid {
    pub n: u64,
    pub alpha: f64,
    /// Window `[−T, T] × [−X, X]`.
    pub time_extent: f64,
    pub space_extent: f64,
}

impl RhombusGrid {
    pub fn new(n: u64, alpha: f64, time_extent: f64, space_extent: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("n must be positive".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Argument(format!("alpha must be finite and ≥ 0, got {alpha}")));
        }
        if !(time_extent > 0.0 && time_extent.is_finite() && space_extent > 0.0 && space_extent.is_finite()) {
            return Err(Error::Argument("window extents must be positive and finite".into()));
        }
        let g = RhombusGrid { n, alpha, time_extent, space_extent };
        if g.rows() == 0 || g.cols() == 0 {
            return Err(Error::Argument("window smaller than one lattice step".into()));
        }
        Ok(g)
    }

    /// Time half-diagonal `n^{−1/2−α}`.
    pub fn dt(&self) -> f64 {
        (self.n as f64).powf(-0.5 - self.alpha)
    }

    /// Space half-diagonal `1/n`.
    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Largest `j` with `t_j ≤ T`.
    pub fn rows(&self) -> i64 {
        (self.time_extent / self.dt() + 1e-9).floor() as i64
    }

    /// Largest `k` with `x_k ≤ X`.
    pub fn cols(&self) -> i64 {
        (self.space_extent / self.dx() + 1e-9).floor() as i64
    }

    pub fn is_lattice(&self, j: i64, k: i64) -> bool {
        (j + k).rem_euclid(2) == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhombusOptions {
    pub variance: NoiseVariance,
    /// Dyadic refinement of every in-edge bridge.
    pub refine_log2: u32,
}

impl Default for RhombusOptions {
    fn default() -> Self {
        RhombusOptions { variance: NoiseVariance::Derived, refine_log2: 4 }
    }
}

/// Sampled lattice values on `|j| ≤ J+1`, `|k| ≤ K+1`; off-parity entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: RhombusGrid,
    pub options: RhombusOptions,
    pub seed: u64,
    /// Variance of each midpoint bridge value.
    pub step_variance: f64,
    jm: i64,
    km: i64,
    values: Vec<f64>,
}

/// One time-half: rows `0..=jm`, columns `−km..=km`, row-major.
fn sample_half(grid: &RhombusGrid, var: f64, seed: u64, sign: &str, jm: i64, km: i64) -> Vec<f64> {
    let h = grid.dt();
    let top = (jm + km + 1) as usize;
    let width = (2 * km + 1) as usize;
    let mut out = vec![f64::NAN; (jm as usize + 1) * width];
    let mut store = |k: i64, col: &[f64]| {
        for j in 0..=jm as usize {
            if (j as i64 + k).rem_euclid(2) == 0 {
                out[j * width + (k + km) as usize] = col[j];
            }
        }
    };
    let mut g = rng::stream(seed, &format!("rhombus-spine{sign}"), 0);
    let mut spine = vec![0.0; top + 1];
    for j in 1..=top {
        spine[j] = spine[j - 1] + h.sqrt() * g.sample::<f64, _>(StandardNormal);
    }
    store(0, &spine);
    store(1, &spine);
    let sd = var.sqrt();
    let step = |prev: &[f64], k: i64, valid: usize, tag: &str, index: u64| -> Vec<f64> {
        let mut g = rng::stream(seed, tag, index);
        let mut next = vec![f64::NAN; top + 1];
        for j in 0..=valid {
            if (j as i64 + k).rem_euclid(2) != 0 {
                continue;
            }
            next[j] = if j == 0 { 0.0 } else { 0.5 * (prev[j - 1] + prev[j + 1]) + sd * g.sample::<f64, _>(StandardNormal) };
        }
        next
    };
    let tag = format!("rhombus{sign}");
    let mut col = spine.clone();
    for k in 2..=km {
        let valid = top - k as usize;
        col = step(&col, k, valid, &tag, k as u64);
        store(k, &col);
    }
    let mut col = spine;
    for k in 1..=km {
        let valid = top - k as usize;
        col = step(&col, -k, valid, &tag, (1u64 << 32) + k as u64);
        store(-k, &col);
    }
    out
}

/// Steps 0–2 of the construction on the window of `grid`; the two time-halves use
/// independent streams.
pub fn sample_grid_nbm(grid: &RhombusGrid, options: RhombusOptions, seed: u64) -> GridField {
    let (jm, km) = (grid.rows() + 1, grid.cols() + 1);
    let var = options.variance.weak(grid.n as f64, grid.alpha);
    let (pos, neg) = rayon::join(
        || sample_half(grid, var, seed, "+", jm, km),
        || sample_half(grid, var, seed, "-", jm, km),
    );
    let width = (2 * km + 1) as usize;
    let mut values = vec![f64::NAN; (2 * jm as usize + 1) * width];
    for j in 0..=jm as usize {
        let up = (jm as usize + j) * width;
        let down = (jm as usize - j) * width;
        values[up..up + width].copy_from_slice(&pos[j * width..(j + 1) * width]);
        if j > 0 {
            values[down..down + width].copy_from_slice(&neg[j * width..(j + 1) * width]);
        }
    }
    GridField { grid: *grid, options, seed, step_variance: var, jm, km, values }
}

/// Extremes of one zero-endpoint edge bridge, in units of `√dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBridge {
    /// Standard bridge on the refinement points.
    pub path: Vec<f64>,
    pub hi: f64,
    pub lo: f64,
}

impl GridField {
    pub fn row_range(&self) -> i64 {
        self.jm
    }

    pub fn col_range(&self) -> i64 {
        self.km
    }

    pub fn get(&self, j: i64, k: i64) -> Result<f64> {
        if j.abs() > self.jm || k.abs() > self.km || !self.grid.is_lattice(j, k) {
            return Err(Error::OffGraph(format!("({j}, {k}) is not a stored lattice point")));
        }
        Ok(self.values[((j + self.jm) * (2 * self.km + 1) + k + self.km) as usize])
    }

    fn at(&self, j: i64, k: i64) -> f64 {
        self.values[((j + self.jm) * (2 * self.km + 1) + k + self.km) as usize]
    }

    /// Lattice points `(j, k, value)` inside the window.
    pub fn points(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let (jw, kw) = (self.grid.rows(), self.grid.cols());
        (-jw..=jw).flat_map(move |j| {
            (-kw..=kw).filter(move |&k| self.grid.is_lattice(j, k)).map(move |k| (j, k, self.at(j, k)))
        })
    }

    fn edge_stream(&self, j: i64, k: i64, k2: i64) -> rng::Stream {
        rng::keyed_stream(self.seed, "rhombus-edge", &[j, k, k2])
    }

    /// Bridge on the edge from `(j, k)` to `(j + 1, k2)`.
    pub fn edge_bridge(&self, j: i64, k: i64, k2: i64) -> EdgeBridge {
        let mut g = self.edge_stream(j, k, k2);
        let mut path = Vec::new();
        standard_bridge_path(self.options.refine_log2, &mut g, &mut path);
        let dt = 1.0 / (path.len() - 1) as f64;
        let (hi, lo) = path_extremes(&path, dt, MaxMethod::ExactBetween, &mut g);
        EdgeBridge { path, hi, lo }
    }

    fn edge_offset(&self, j: i64, k: i64, k2: i64, u: f64) -> f64 {
        let mut g = self.edge_stream(j, k, k2);
        let mut path = Vec::new();
        standard_bridge_path(self.options.refine_log2, &mut g, &mut path);
        let m = (path.len() - 1) as f64;
        let pos = (u * m).clamp(0.0, m);
        let i = (pos.floor() as usize).min(path.len() - 2);
        let f = pos - i as f64;
        self.grid.dt().sqrt() * ((1.0 - f) * path[i] + f * path[i + 1])
    }

    fn check_window(&self, t: f64, x: f64) -> Result<()> {
        let tmax = self.grid.rows() as f64 * self.grid.dt();
        let xmax = self.grid.cols() as f64 * self.grid.dx();
        if t.abs() > tmax + 1e-12 || x.abs() > xmax + 1e-12 || !t.is_finite() || !x.is_finite() {
            return Err(Error::OffGraph(format!("({t}, {x}) outside the window")));
        }
        Ok(())
    }

    fn evaluate(&self, t: f64, x: f64, bridged: bool) -> Result<f64> {
        self.check_window(t, x)?;
        let st = if t < 0.0 { -1 } else { 1 };
        let sx = if x < 0.0 { -1 } else { 1 };
        let value = |r: usize, c: usize| self.at(st * c as i64, sx * r as i64);
        let edge = |r: usize, c: usize, c2: usize, s: f64| {
            if !bridged {
                return 0.0;
            }
            // Endpoints (t index, x index) of the segment in signed lattice coordinates.
            let p = (st * c as i64, sx * r as i64);
            let q = (st * c2 as i64, sx * (r as i64 + 1));
            let (lo, hi, u) = if p.0 < q.0 { (p, q, s) } else { (q, p, 1.0 - s) };
            self.edge_offset(lo.0, lo.1, hi.1, u)
        };
        interpolate_lattice_with_edges(
            self.km as usize + 1,
            self.jm as usize + 1,
            self.grid.dx(),
            self.grid.dt(),
            value,
            edge,
            x.abs(),
            t.abs(),
            true,
        )
    }

    /// `Ỹ`: interpolation from lattice values only.
    pub fn interpolate_vertex(&self, t: f64, x: f64) -> Result<f64> {
        self.evaluate(t, x, false)
    }

    /// `Y`: interpolation with the in-edge bridge values on the refinement points.
    pub fn interpolate(&self, t: f64, x: f64) -> Result<f64> {
        self.evaluate(t, x, true)
    }

    /// `X(t_{j+1}, x_{k±1}) − ½(X(t_j, x_k) + X(t_{j+2}, x_k))` over every midpoint step
    /// inside the window, away from the spine and the row `t = 0`.
    pub fn residuals(&self) -> Vec<f64> {
        let (jw, kw) = (self.grid.rows(), self.grid.cols());
        let mut out = Vec::new();
        for k in -kw..=kw {
            let k2 = if k >= 1 { k + 1 } else { k - 1 };
            if k2.abs() > kw || k == 0 && k2 == 1 {
                continue;
            }
            for j in -jw..=jw - 2 {
                if !self.grid.is_lattice(j, k) || (j < 0 && j + 2 > 0) {
                    continue;
                }
                out.push(self.at(j + 1, k2) - 0.5 * (self.at(j, k) + self.at(j + 2, k)));
            }
        }
        out
    }

    /// `Zₙ`: largest `|B^{br}_{jk}|` over the midpoint bridges started at lattice points of
    /// `[0, b] × [0, a]` (time × space) that fit in the stored lattice; also returns their count.
    pub fn bridge_network_sup(&self, a: f64, b: f64) -> (f64, usize) {
        let h = self.grid.dt();
        let kmax = ((a / self.grid.dx() + 1e-9).floor() as i64).min(self.km - 1);
        let jmax = ((b / h + 1e-9).floor() as i64).min(self.jm - 2);
        let m = 1usize << self.options.refine_log2;
        let step = h / m as f64;
        let starts: Vec<(i64, i64)> =
            (1..=kmax).flat_map(|k| (0..=jmax).filter(move |j| (j + k) % 2 == 0).map(move |j| (j, k))).collect();
        let sup = starts
            .par_iter()
            .map_init(Vec::new, |buf, &(j, k)| {
                let e = self.at(j + 1, k + 1) - 0.5 * (self.at(j, k) + self.at(j + 2, k));
                let mut best = 0.0f64;
                for (jj, kk, kk2, rising) in [(j, k, k + 1, true), (j + 1, k + 1, k, false)] {
                    let mut g = self.edge_stream(jj, kk, kk2);
                    standard_bridge_path(self.options.refine_log2, &mut g, buf);
                    for (i, v) in buf.iter_mut().enumerate() {
                        let s = i as f64 / m as f64;
                        let lin = if rising { s * e } else { (1.0 - s) * e };
                        *v = lin + h.sqrt() * *v;
                    }
                    let (hi, lo) = path_extremes(buf, step, MaxMethod::ExactBetween, &mut g);
                    best = best.max(hi).max(-lo);
                }
                best
            })
            .reduce(|| 0.0, f64::max);
        (sup, starts.len())
    }

    /// `sup |Y − Ỹ|` over the edges inside `[0, b] × [0, a]`.
    pub fn edge_sup(&self, a: f64, b: f64) -> f64 {
        let kmax = ((a / self.grid.dx() + 1e-9).floor() as i64).min(self.km - 1);
        let jmax = ((b / self.grid.dt() + 1e-9).floor() as i64).min(self.jm - 1);
        let edges: Vec<(i64, i64, i64)> = (0..jmax)
            .flat_map(|j| {
                (0..=kmax).filter(move |k| (j + k) % 2 == 0).flat_map(move |k| [(j, k, k + 1), (j, k, k - 1)])
            })
            .filter(|&(_, _, k2)| k2 >= 0 && k2 <= kmax)
            .collect();
        let scale = self.grid.dt().sqrt();
        edges
            .par_iter()
            .map(|&(j, k, k2)| {
                let b = self.edge_bridge(j, k, k2);
                scale * b.hi.max(-b.lo)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// `(1/(2n^{1/2+α})) · ln(a·b·n^{3/2+α} + 1)`.
pub fn bridge_network_bound(n: u64, alpha: f64, a: f64, b: f64) -> f64 {
    let nf = n as f64;
    (a * b * nf.powf(1.5 + alpha) + 1.0).ln() / (2.0 * nf.powf(0.5 + alpha))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitOptions {
    pub alpha: f64,
    pub ns: Vec<u64>,
    pub time_extent: f64,
    pub space_extent: f64,
    /// Probe points `(t, x)`.
    pub probes: Vec<(f64, f64)>,
    /// Each probe is also compared with `(t, pair_x)`.
    pub pair_x: f64,
    pub reps: usize,
    pub seed: u64,
    pub options: RhombusOptions,
    pub bridge_stats: bool,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            alpha: 0.0,
            ns: vec![64, 256, 1024],
            time_extent: 1.0,
            space_extent: 1.0,
            probes: vec![(0.5, 0.25), (-0.5, 0.25), (0.25, -0.5)],
            pair_x: 0.0,
            reps: 200,
            seed: 0,
            options: RhombusOptions::default(),
            bridge_stats: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeStat {
    pub t: f64,
    pub x: f64,
    /// `E Y(t, x)²` (the mean is zero).
    pub variance: MeanEstimate,
    /// `|t|`, the variance of the limit when `α = 0`.
    pub target: f64,
    /// `E (Y(t, x) − Y(t, pair_x))²`.
    pub pair_variance: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub n: u64,
    pub probes: Vec<ProbeStat>,
    pub residual_variance: MeanEstimate,
    pub residual_target: f64,
    /// `E Zₙ²` on `[0, T] × [0, X]`.
    pub z_sq: Option<MeanEstimate>,
    pub z_bound: f64,
    pub z_bridges: usize,
    /// `E sup |Y − Ỹ|²` on the same window.
    pub edge_sup_sq: Option<MeanEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub alpha: f64,
    pub pair_x: f64,
    pub rows: Vec<LimitRow>,
}

struct RepOut {
    probes: Vec<f64>,
    pairs: Vec<f64>,
    residual: f64,
    z: f64,
    bridges: usize,
    edge: f64,
}

/// Moment diagnostics of the interpolated field for each `n`.
pub fn limit_diagnostics(opts: &LimitOptions) -> Result<LimitReport> {
    let mut rows = Vec::new();
    for &n in &opts.ns {
        let grid = RhombusGrid::new(n, opts.alpha, opts.time_extent, opts.space_extent)?;
        for &(t, x) in &opts.probes {
            if t.abs() > opts.time_extent || x.abs() > opts.space_extent || opts.pair_x.abs() > opts.space_extent {
                return Err(Error::Argument(format!("probe ({t}, {x}) outside the window")));
            }
        }
        let outs: Vec<RepOut> = (0..opts.reps)
            .map(|r| -> Result<RepOut> {
                let f = sample_grid_nbm(&grid, opts.options, rng::sub_seed(opts.seed, &format!("rhombus-rep-{n}"), r as u64));
                let mut probes = Vec::new();
                let mut pairs = Vec::new();
                for &(t, x) in &opts.probes {
                    let y = f.interpolate(t, x)?;
                    probes.push(y * y);
                    pairs.push((y - f.interpolate(t, opts.pair_x)?).powi(2));
                }
                let res = f.residuals();
                let residual = res.iter().map(|v| v * v).sum::<f64>() / res.len().max(1) as f64;
                let (z, bridges, edge) = if opts.bridge_stats {
                    let (z, c) = f.bridge_network_sup(opts.space_extent, opts.time_extent);
                    (z, c, f.edge_sup(opts.space_extent, opts.time_extent))
                } else {
                    (f64::NAN, 0, f64::NAN)
                };
                Ok(RepOut { probes, pairs, residual, z, bridges, edge })
            })
            .collect::<Result<_>>()?;
        let probes = opts
            .probes
            .iter()
            .enumerate()
            .map(|(i, &(t, x))| ProbeStat {
                t,
                x,
                variance: mean_estimate(outs.iter().map(|o| o.probes[i])),
                target: t.abs(),
                pair_variance: mean_estimate(outs.iter().map(|o| o.pairs[i])),
            })
            .collect();
        let (z_sq, edge_sup_sq) = if opts.bridge_stats {
            (
                Some(mean_estimate(outs.iter().map(|o| o.z * o.z))),
                Some(mean_estimate(outs.iter().map(|o| o.edge * o.edge))),
            )
        } else {
            (None, None)
        };
        rows.push(LimitRow {
            n,
            probes,
            residual_variance: mean_estimate(outs.iter().map(|o| o.residual)),
            residual_target: opts.options.variance.weak(n as f64, opts.alpha),
            z_sq,
            z_bound: bridge_network_bound(n, opts.alpha, opts.space_extent, opts.time_extent),
            z_bridges: outs.first().map_or(0, |o| o.bridges),
            edge_sup_sq,
        });
    }
    Ok(LimitReport { alpha: opts.alpha, pair_x: opts.pair_x, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GridField {
        let g = RhombusGrid::new(16, 0.0, 1.0, 0.5).unwrap();
        sample_grid_nbm(&g, RhombusOptions::default(), 11)
    }

    #[test]
    fn grid_geometry() {
        let g = RhombusGrid::new(16, 0.0, 1.0, 0.5).unwrap();
        assert_eq!((g.rows(), g.cols()), (4, 8));
        assert!(g.is_lattice(0, 0) && g.is_lattice(-1, 1) && !g.is_lattice(0, 1));
        assert!(RhombusGrid::new(16, -0.1, 1.0, 1.0).is_err());
        assert!(RhombusGrid::new(16, 0.0, 0.01, 1.0).is_err());
    }

    #[test]
    fn time_zero_row_vanishes() {
        let f = small();
        for k in (-8..=8).filter(|k| k % 2 == 0) {
            assert_eq!(f.get(0, k).unwrap(), 0.0);
        }
        assert_eq!(f.interpolate(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(f.interpolate_vertex(0.0, -0.17).unwrap(), 0.0);
    }

    #[test]
    fn interpolation_hits_lattice_values() {
        let f = small();
        for (j, k, v) in f.points() {
            let (t, x) = (j as f64 * f.grid.dt(), k as f64 * f.grid.dx());
            assert!((f.interpolate(t, x).unwrap() - v).abs() < 1e-12, "({j}, {k})");
            assert!((f.interpolate_vertex(t, x).unwrap() - v).abs() < 1e-12);
        }
        assert!(f.interpolate(1.5, 0.0).is_err());
    }

    #[test]
    fn same_seed_same_field() {
        assert_eq!(
            small().values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            small().values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn bound_formula() {
        let b = bridge_network_bound(64, 0.0, 1.0, 1.0);
        assert!((b - (513f64).ln() / 16.0).abs() < 1e-12);
    }
}
