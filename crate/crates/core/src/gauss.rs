//! Gaussian vectors, conditioning, bridges and maxima of bridges.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Relative eigenvalue threshold below which a covariance is treated as singular.
pub const CLIP_REL: f64 = 1e-9;
const PINV_REL: f64 = 1e-12;

/// A monotone or tabulated time change `t ↦ V(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Clock {
    Identity,
    Power { exponent: f64 },
    /// Piecewise-linear through the points, constant beyond the ends.
    Table { points: Vec<(f64, f64)> },
}

impl Clock {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Clock::Identity => t,
            Clock::Power { exponent } => t.signum() * t.abs().powf(*exponent),
            Clock::Table { points } => {
                let (first, last) = (points[0], points[points.len() - 1]);
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let i = points.partition_point(|p| p.0 <= t);
                let (a, b) = (points[i - 1], points[i]);
                a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
            }
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self {
            Clock::Identity => true,
            Clock::Power { exponent } => *exponent > 0.0,
            Clock::Table { points } => points.windows(2).all(|w| w[1].1 >= w[0].1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Clock::Table { points } = self {
            if points.is_empty() || points.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Argument("clock table needs strictly increasing abscissae".into()));
            }
        }
        Ok(())
    }
}

/// Symmetric eigen-factor `L` with `L Lᵀ = cov`; eigenvalues above `-CLIP_REL·λmax` are clipped to 0.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(cov.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut l = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -CLIP_REL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(format!("negative eigenvalue {lam:e} (scale {scale:e})")));
        }
        let s = lam.max(0.0).sqrt();
        for i in 0..n {
            l[(i, j)] *= s;
        }
    }
    Ok(l)
}

/// Moore–Penrose inverse of a symmetric matrix.
pub fn pinv_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > PINV_REL * scale && lam.abs() > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianVector {
    pub labels: Vec<String>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianVector {
    pub fn new(labels: Vec<String>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Argument("label, mean and covariance sizes differ".into()));
        }
        let scale = cov.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::Argument(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GaussianVector { labels, mean, cov })
    }

    pub fn zero_mean(labels: Vec<String>, cov: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        Self::new(labels, DVector::zeros(n), cov)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::Argument(format!("unknown label {label}")))
    }

    pub fn cov_of(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.cov[(self.index(a)?, self.index(b)?)])
    }

    /// Marginal on the given indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> GaussianVector {
        GaussianVector {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            mean: DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.mean[i])),
            cov: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]),
        }
    }

    /// Precision matrix (pseudo-inverse of the covariance).
    pub fn precision(&self) -> DMatrix<f64> {
        pinv_sym(&self.cov)
    }
}

/// Conditions on observed labels taking the given values.
pub fn condition(gv: &GaussianVector, observed: &[(&str, f64)]) -> Result<GaussianVector> {
    if observed.is_empty() {
        return Ok(gv.clone());
    }
    let o: Vec<usize> = observed.iter().map(|(l, _)| gv.index(l)).collect::<Result<_>>()?;
    let r: Vec<usize> = (0..gv.len()).filter(|i| !o.contains(i)).collect();
    let coo = DMatrix::from_fn(o.len(), o.len(), |i, j| gv.cov[(o[i], o[j])]);
    let cro = DMatrix::from_fn(r.len(), o.len(), |i, j| gv.cov[(r[i], o[j])]);
    let crr = DMatrix::from_fn(r.len(), r.len(), |i, j| gv.cov[(r[i], r[j])]);
    let pinv = pinv_sym(&coo);
    let dev = DVector::from_iterator(o.len(), observed.iter().zip(&o).map(|((_, x), &i)| x - gv.mean[i]));
    let resid = &dev - &coo * (&pinv * &dev);
    if resid.norm() > 1e-9 * (1.0 + dev.norm()) {
        return Err(Error::Singular("observed values lie outside the support of the observed block".into()));
    }
    let a = &cro * &pinv;
    let mean = DVector::from_iterator(r.len(), r.iter().map(|&i| gv.mean[i])) + &a * dev;
    let mut cov = crr - &a * cro.transpose();
    symmetrize(&mut cov);
    Ok(GaussianVector { labels: r.iter().map(|&i| gv.labels[i].clone()).collect(), mean, cov })
}

/// Conditional covariance of `keep` given `given` (values are irrelevant for the covariance).
pub fn conditional_cov(cov: &DMatrix<f64>, keep: &[usize], given: &[usize]) -> DMatrix<f64> {
    let ckk = DMatrix::from_fn(keep.len(), keep.len(), |i, j| cov[(keep[i], keep[j])]);
    if given.is_empty() {
        return ckk;
    }
    let cgg = DMatrix::from_fn(given.len(), given.len(), |i, j| cov[(given[i], given[j])]);
    let ckg = DMatrix::from_fn(keep.len(), given.len(), |i, j| cov[(keep[i], given[j])]);
    let mut out = &ckk - &ckg * pinv_sym(&cgg) * ckg.transpose();
    symmetrize(&mut out);
    out
}

pub fn sample<R: Rng + ?Sized>(gv: &GaussianVector, rng: &mut R) -> Result<Vec<f64>> {
    let l = psd_factor(&gv.cov)?;
    let z = DVector::from_iterator(gv.len(), (0..gv.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    Ok((&gv.mean + l * z).iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum BridgeFamily {
    Brownian,
    Glued { clock: Clock },
}

/// Covariance of the zero-pinned bridge on `[s, u]` at times `p`, `q`.
pub fn bridge_cov(family: &BridgeFamily, s: f64, u: f64, p: f64, q: f64) -> Result<f64> {
    if !(s <= p && p <= u && s <= q && q <= u) {
        return Err(Error::Argument(format!("times {p}, {q} outside [{s}, {u}]")));
    }
    let v = |t: f64| match family {
        BridgeFamily::Brownian => t,
        BridgeFamily::Glued { clock } => clock.eval(t),
    };
    let (vs, vu) = (v(s), v(u));
    if vu - vs < 1e-12 {
        return Ok(0.0);
    }
    let (lo, hi) = (v(p.min(q)), v(p.max(q)));
    Ok((lo - vs) * (vu - hi) / (vu - vs))
}

/// `E[Z(τ1) Y(τ2)]` for two Brownian motions on `[s1, s2]` that agree at both ends and are
/// conditionally independent given those values.
pub fn bridge_pair_cov(s1: f64, s2: f64, tau1: f64, tau2: f64) -> f64 {
    s1 + (tau1 - s1) * (tau2 - s1) / (s2 - s1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxMethod {
    /// Maximum over grid points only.
    GridPoints,
    /// Grid points plus an exact draw of the bridge maximum inside each grid cell.
    ExactBetween,
}

/// Fills `buf` with a standard bridge on `[0, 1]` at the `2^grid_log2 + 1` dyadic points.
pub fn standard_bridge_path<R: Rng + ?Sized>(grid_log2: u32, rng: &mut R, buf: &mut Vec<f64>) {
    let m = 1usize << grid_log2;
    let dt = 1.0 / m as f64;
    let sd = dt.sqrt();
    buf.clear();
    buf.push(0.0);
    let mut w = 0.0;
    for _ in 0..m {
        w += sd * rng.sample::<f64, _>(StandardNormal);
        buf.push(w);
    }
    for (i, x) in buf.iter_mut().enumerate() {
        *x -= i as f64 * dt * w;
    }
}

/// Supremum and infimum of a Brownian path known at equally spaced points `dt` apart,
/// with exact bridge extremes drawn in every cell that can reach the grid extremes.
pub fn path_extremes<R: Rng + ?Sized>(path: &[f64], dt: f64, method: MaxMethod, rng: &mut R) -> (f64, f64) {
    let mut hi = path.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = path.iter().cloned().fold(f64::INFINITY, f64::min);
    if method == MaxMethod::ExactBetween {
        let margin = 6.0 * dt.sqrt();
        let (ghi, glo) = (hi, lo);
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.max(b) >= ghi - margin {
                let u: f64 = 1.0 - rng.random::<f64>();
                hi = hi.max(0.5 * (a + b + ((a - b).powi(2) - 2.0 * dt * u.ln()).sqrt()));
            }
            if a.min(b) <= glo + margin {
                let u: f64 = 1.0 - rng.random::<f64>();
                lo = lo.min(0.5 * (a + b - ((a - b).powi(2) - 2.0 * dt * u.ln()).sqrt()));
            }
        }
    }
    (hi, lo)
}

/// Supremum and infimum of one standard bridge on `[0, 1]` simulated on `2^grid_log2` cells.
pub fn bridge_extremes<R: Rng + ?Sized>(grid_log2: u32, method: MaxMethod, rng: &mut R, buf: &mut Vec<f64>) -> (f64, f64) {
    standard_bridge_path(grid_log2, rng, buf);
    path_extremes(buf, 1.0 / (1usize << grid_log2) as f64, method, rng)
}

/// Extremes of `count` independent bridges; bridge `i` uses its own derived stream.
pub fn bridge_extremes_pool(count: usize, grid_log2: u32, method: MaxMethod, seed: u64) -> Vec<(f64, f64)> {
    (0..count)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            let mut r = rng::stream(seed, "bridge-max", i as u64);
            bridge_extremes(grid_log2, method, &mut r, buf)
        })
        .collect()
}

pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn mean_estimate(xs: impl Iterator<Item = f64>) -> MeanEstimate {
    let (mut n, mut s, mut s2) = (0usize, 0.0, 0.0);
    for x in xs {
        n += 1;
        s += x;
        s2 += x * x;
    }
    let mean = s / n as f64;
    let var = if n > 1 { ((s2 - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0) } else { 0.0 };
    MeanEstimate { mean, stderr: (var / n as f64).sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeMaxStats {
    pub n: usize,
    pub reps: usize,
    pub grid_log2: u32,
    /// `E M_n`, with `M_n` the supremum of `|B_k|` over all `n` bridges.
    pub abs_max: MeanEstimate,
    /// `E (M_n^+)²`.
    pub plus_sq: MeanEstimate,
    /// `4 E (M_n^+)²`.
    pub four_plus_sq: MeanEstimate,
    pub harmonic: f64,
    pub tail_beta: f64,
    /// `P(sup B_1 > β)` estimated from the first bridge of each replicate.
    pub tail: MeanEstimate,
    pub tail_reference: f64,
}

/// Statistics of maxima of `n` independent standard bridges from a pool of extremes.
/// Replicate `r` uses pool entries `r·n .. (r+1)·n`.
pub fn max_stats_from_pool(pool: &[(f64, f64)], n: usize, grid_log2: u32, beta: f64) -> BridgeMaxStats {
    let reps = pool.len() / n;
    let groups: Vec<&[(f64, f64)]> = pool[..reps * n].chunks(n).collect();
    let plus = |g: &[(f64, f64)]| g.iter().fold(0.0f64, |m, x| m.max(x.0));
    let abs = |g: &[(f64, f64)]| g.iter().fold(0.0f64, |m, x| m.max(x.0).max(-x.1));
    let plus_sq = mean_estimate(groups.iter().map(|g| plus(g).powi(2)));
    BridgeMaxStats {
        n,
        reps,
        grid_log2,
        abs_max: mean_estimate(groups.iter().map(|g| abs(g))),
        plus_sq,
        four_plus_sq: MeanEstimate { mean: 4.0 * plus_sq.mean, stderr: 4.0 * plus_sq.stderr },
        harmonic: harmonic(n),
        tail_beta: beta,
        tail: mean_estimate(groups.iter().map(|g| if g[0].0 > beta { 1.0 } else { 0.0 })),
        tail_reference: (-2.0 * beta * beta).exp(),
    }
}

pub fn bridge_max_stats(n: usize, reps: usize, grid_log2: u32, method: MaxMethod, seed: u64) -> BridgeMaxStats {
    let pool = bridge_extremes_pool(n * reps, grid_log2, method, seed);
    max_stats_from_pool(&pool, n, grid_log2, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxBoundReport {
    pub n: usize,
    pub abs: MeanEstimate,
    pub abs_bound: f64,
    pub abs_ok: bool,
    pub sq: MeanEstimate,
    pub sq_bound: f64,
    pub sq_ok: bool,
}

/// Monte Carlo check of `E max|X_i| ≤ 2σ√ln(n+1)` and `E max X_i² ≤ 2σ² ln(n+1)`.
pub fn max_bound_check(sigmas: &[f64], correlation: Option<&DMatrix<f64>>, reps: usize, seed: u64) -> Result<MaxBoundReport> {
    let n = sigmas.len();
    if sigmas.iter().any(|&s| s < 0.0 || !s.is_finite()) {
        return Err(Error::Argument("standard deviations must be finite and nonnegative".into()));
    }
    let l = match correlation {
        Some(c) => {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::Argument("correlation matrix has the wrong size".into()));
            }
            psd_factor(c)?
        }
        None => DMatrix::identity(n, n),
    };
    let smax = sigmas.iter().fold(0.0f64, |a, &b| a.max(b));
    let draws: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(seed, "max-bound", r as u64);
            let z = DVector::from_iterator(n, (0..n).map(|_| g.sample::<f64, _>(StandardNormal)));
            let x = &l * z;
            let m = x.iter().zip(sigmas).fold(0.0f64, |a, (v, s)| a.max((v * s).abs()));
            (m, m * m)
        })
        .collect();
    let abs = mean_estimate(draws.iter().map(|d| d.0));
    let sq = mean_estimate(draws.iter().map(|d| d.1));
    let ln = ((n + 1) as f64).ln();
    let abs_bound = 2.0 * smax * ln.sqrt();
    let sq_bound = 2.0 * smax * smax * ln;
    Ok(MaxBoundReport {
        n,
        abs,
        abs_bound,
        abs_ok: abs.mean + 4.0 * abs.stderr <= abs_bound + 1e-300,
        sq,
        sq_bound,
        sq_ok: sq.mean + 4.0 * sq.stderr <= sq_bound + 1e-300,
    })
}
