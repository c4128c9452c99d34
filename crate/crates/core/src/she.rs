//! Random-walk kernels and explicit schemes for the heat equation on the half-line.
//!
//! Lattice conventions: row `j` is time `j·dt`, column `k` is space `k·dx`, and the
//! stochastic schemes live on the parity lattice `j ≡ k (mod 2)` with zero values on
//! row 0 and column 0.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gauss::{mean_estimate, MeanEstimate};
use crate::rng;

/// `ln C(k, i)`.
fn ln_choose(k: u64, i: u64) -> f64 {
    ln_gamma(k as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((k - i) as f64 + 1.0)
}

/// `P(S_k = z)` for the simple symmetric walk; zero off the parity class.
pub fn walk_pmf(k: u64, z: i64) -> f64 {
    if z.unsigned_abs() > k || (k as i64 + z) % 2 != 0 {
        return 0.0;
    }
    let i = ((k as i64 + z) / 2) as u64;
    (ln_choose(k, i) - k as f64 * std::f64::consts::LN_2).exp()
}

/// `P(S_k / √n = x)`; zero when `x` is not on the lattice `(k + 2ℤ)/√n`.
pub fn rw_pmf(k: u64, x: f64, n: f64) -> f64 {
    let z = x * n.sqrt();
    let zr = z.round();
    if (z - zr).abs() > 1e-9 * (1.0 + z.abs()) {
        return 0.0;
    }
    walk_pmf(k, zr as i64)
}

/// Row of probabilities `P(S_k = 2i − k)` for `i = 0..=k`.
pub fn walk_row(k: u64) -> Vec<f64> {
    (0..=k).map(|i| (ln_choose(k, i) - k as f64 * std::f64::consts::LN_2).exp()).collect()
}

fn gauss_density(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LltGap {
    pub n: u64,
    pub beta: u64,
    pub gap: f64,
    pub argmax_k: u64,
    pub argmax_x: f64,
    /// `Ĉ/π · √(n/β³)` with the calibrated constant.
    pub bound: f64,
    pub constant: f64,
}

/// `sup_{β ≤ k ≤ n} sup_x |√n/2 · p_n^k(x) − ρ_n^k(x)|`, with `ρ_n^k` the centred Gaussian
/// density of variance `k/n`. Lattice points with `|x| > 10·√(k/n)` are skipped.
pub fn llt_sup_gap(n: u64, beta: u64) -> Result<(f64, u64, f64)> {
    if beta < 1 || beta > n {
        return Err(Error::Argument(format!("need 1 ≤ beta ≤ n, got beta = {beta}, n = {n}")));
    }
    let nf = n as f64;
    let (gap, kbest, xbest) = (beta..=n)
        .into_par_iter()
        .map(|k| {
            let row = walk_row(k);
            let var = k as f64 / nf;
            let lim = 10.0 * var.sqrt();
            let mut best = (0.0f64, k, 0.0f64);
            for (i, p) in row.iter().enumerate() {
                let x = (2 * i as i64 - k as i64) as f64 / nf.sqrt();
                if x.abs() > lim {
                    continue;
                }
                let g = (0.5 * nf.sqrt() * p - gauss_density(x, var)).abs();
                if g > best.0 {
                    best = (g, k, x);
                }
            }
            best
        })
        .reduce(|| (0.0, 0, 0.0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    Ok((gap, kbest, xbest))
}

/// `Ĉ = max gap·π·√(β³/n)` over `n ∈ {16, 32, 64, 128, 256}` and `β ∈ {n/4, n/2, n}`.
pub fn calibrate_llt_constant() -> f64 {
    let mut c = 0.0f64;
    for n in [16u64, 32, 64, 128, 256] {
        for beta in [n / 4, n / 2, n] {
            let (g, _, _) = llt_sup_gap(n, beta).unwrap();
            c = c.max(g * std::f64::consts::PI * ((beta as f64).powi(3) / n as f64).sqrt());
        }
    }
    c
}

pub fn llt_gap(n: u64, beta: u64, constant: f64) -> Result<LltGap> {
    let (gap, argmax_k, argmax_x) = llt_sup_gap(n, beta)?;
    let bound = constant / std::f64::consts::PI * (n as f64 / (beta as f64).powi(3)).sqrt();
    Ok(LltGap { n, beta, gap, argmax_k, argmax_x, bound, constant })
}

/// `E f(S_⌊nt⌋ / n^{1/2+α} + x)` as an exact finite sum.
pub fn rw_heat(f: impl Fn(f64) -> f64, n: u64, t: f64, x: f64, alpha: f64) -> f64 {
    let k = (n as f64 * t).floor().max(0.0) as u64;
    let scale = (n as f64).powf(0.5 + alpha);
    walk_row(k)
        .iter()
        .enumerate()
        .map(|(i, p)| p * f((2 * i as i64 - k as i64) as f64 / scale + x))
        .sum()
}

/// How the per-cell noise variance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum NoiseVariance {
    /// From the white-noise mass of the cell: `1/(2√n)`, or `n^{−1/2−α}/2` for weak noise.
    Derived,
    /// The printed values `1/√(2n)`, or `1/(√2·n^{1/2+α})` for weak noise.
    Printed,
    Fixed(f64),
}

impl NoiseVariance {
    pub fn euler(&self, n: f64) -> f64 {
        match *self {
            NoiseVariance::Derived => 0.5 / n.sqrt(),
            NoiseVariance::Printed => 1.0 / (2.0 * n).sqrt(),
            NoiseVariance::Fixed(v) => v,
        }
    }

    pub fn weak(&self, n: f64, alpha: f64) -> f64 {
        match *self {
            NoiseVariance::Derived => 0.5 * n.powf(-0.5 - alpha),
            NoiseVariance::Printed => n.powf(-0.5 - alpha) / 2f64.sqrt(),
            NoiseVariance::Fixed(v) => v,
        }
    }
}

/// Retained noise of a stochastic run: `eta[j·cols + k]` is added when row `j+1` is formed.
#[derive(Debug, Clone, PartialEq)]
pub struct Noise {
    pub cols: usize,
    pub eta: Vec<f64>,
    pub variance: f64,
}

impl Noise {
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.eta[j * self.cols + k]
    }
}

/// Values of a scheme on `[0, rows) × [0, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub n: u64,
    pub dt: f64,
    pub dx: f64,
    pub rows: usize,
    pub cols: usize,
    /// Only `j ≡ k (mod 2)` entries are meaningful when set.
    pub parity: bool,
    pub values: Vec<f64>,
    pub noise: Option<Noise>,
}

impl Field {
    pub fn defined(&self, j: usize, k: usize) -> bool {
        j < self.rows && k < self.cols && (!self.parity || (j + k).is_multiple_of(2))
    }

    pub fn get(&self, j: usize, k: usize) -> Result<f64> {
        if !self.defined(j, k) {
            return Err(Error::OffGraph(format!("({j}, {k}) is not a lattice point of the field")));
        }
        Ok(self.values[j * self.cols + k])
    }

    /// Lattice points `(j, k, t, x, value)`.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + '_ {
        (0..self.rows).flat_map(move |j| {
            (0..self.cols)
                .filter(move |&k| self.defined(j, k))
                .map(move |k| (j, k, j as f64 * self.dt, k as f64 * self.dx, self.values[j * self.cols + k]))
        })
    }
}

/// Draws the noise rows of a parity-lattice run; row `j` uses its own derived stream and
/// fills the columns `k ≥ 1` with `j + 1 + k` even, in increasing order.
fn draw_noise(seed: u64, tag: &str, rows: usize, cols: usize, variance: f64) -> Vec<f64> {
    let sd = variance.sqrt();
    let chunks: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|j| {
            let mut g = rng::stream(seed, tag, j as u64);
            let mut row = vec![0.0; cols];
            for (k, x) in row.iter_mut().enumerate().skip(1) {
                if (j + 1 + k) % 2 == 0 {
                    *x = sd * g.sample::<f64, _>(StandardNormal);
                }
            }
            row
        })
        .collect();
    chunks.concat()
}

/// Runs `Y^{j+1}_k = ½(Y^j_{k+1} + Y^j_{k−1}) + η_{jk}` with zero row 0 and column 0,
/// calling `visit(j, row)` on every row.
fn parity_recursion(rows: usize, cols: usize, noise: &[f64], mut visit: impl FnMut(usize, &[f64])) {
    let mut cur = vec![0.0; cols];
    let mut next = vec![0.0; cols];
    visit(0, &cur);
    for j in 0..rows - 1 {
        next[0] = 0.0;
        for k in 1..cols {
            if (j + 1 + k) % 2 != 0 {
                next[k] = 0.0;
                continue;
            }
            let right = if k + 1 < cols { cur[k + 1] } else { 0.0 };
            next[k] = 0.5 * (cur[k - 1] + right) + noise[j * cols + k];
        }
        std::mem::swap(&mut cur, &mut next);
        visit(j + 1, &cur);
    }
}

/// Columns needed so that every value on `[0, rows) × [0, cols)` is exact, with room
/// for the Gaussian kernel of the continuum sum.
fn light_cone_cols(rows: usize, cols: usize) -> usize {
    cols + rows + 8 * (rows as f64).sqrt().ceil() as usize + 2
}

/// Euler scheme for `v_t = ½ v_xx + W` with `dx = n^{−1/2}`, `dt = 1/n` on `[0, T] × [0, X]`.
pub fn euler_she(n: u64, horizon: f64, extent: f64, variance: NoiseVariance, seed: u64) -> Result<Field> {
    let nf = n as f64;
    let rows = (horizon * nf).round() as usize + 1;
    let cols = (extent * nf.sqrt()).round() as usize + 1;
    if cols < 4 {
        return Err(Error::Argument(format!("extent {extent} gives fewer than 2 interior columns at n = {n}")));
    }
    if rows < 2 {
        return Err(Error::Argument("horizon shorter than one time step".into()));
    }
    let wide = light_cone_cols(rows, cols);
    let var = variance.euler(nf);
    let eta = draw_noise(seed, "she-noise", rows - 1, wide, var);
    let mut values = vec![f64::NAN; rows * cols];
    parity_recursion(rows, wide, &eta, |j, row| {
        for k in 0..cols {
            if (j + k) % 2 == 0 {
                values[j * cols + k] = row[k];
            }
        }
    });
    Ok(Field {
        n,
        dt: 1.0 / nf,
        dx: 1.0 / nf.sqrt(),
        rows,
        cols,
        parity: true,
        values,
        noise: Some(Noise { cols: wide, eta, variance: var }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MildVariant {
    /// Exact discrete Green's function with image term.
    Discrete,
    /// Continuum image heat kernel at the centre of each noise cell.
    Continuum,
}

/// Continuum image kernel weights for a time lag of `d` rows, indexed by column offset:
/// `w[m] = (2/√n) · g((d + ½)/n, m·dx)`.
fn continuum_weights(n: f64, d: usize, reach: usize) -> Vec<f64> {
    let tau = (d as f64 + 0.5) / n;
    let dx = 1.0 / n.sqrt();
    (0..=reach).map(|m| 2.0 / n.sqrt() * gauss_density(m as f64 * dx, tau)).collect()
}

fn continuum_reach(d: usize) -> usize {
    (8.0 * (d as f64 + 0.5).sqrt()).ceil() as usize + 2
}

/// Mild-solution sum at lattice point `(j, k)` built from the retained noise of `field`.
pub fn mild_discrete(field: &Field, j: usize, k: usize, variant: MildVariant) -> Result<f64> {
    let noise = field.noise.as_ref().ok_or_else(|| Error::Argument("field carries no noise".into()))?;
    if !field.defined(j, k) {
        return Err(Error::OffGraph(format!("({j}, {k}) outside the field")));
    }
    let nf = field.n as f64;
    let mut total = 0.0;
    for jp in 1..=j {
        let d = j - jp;
        match variant {
            MildVariant::Discrete => {
                let lo = k.saturating_sub(d).max(1);
                for kp in lo..=(k + d).min(noise.cols - 1) {
                    let g = walk_pmf(d as u64, kp as i64 - k as i64) - walk_pmf(d as u64, -(k as i64) - kp as i64);
                    if g != 0.0 {
                        total += g * noise.at(jp - 1, kp);
                    }
                }
            }
            MildVariant::Continuum => {
                let reach = continuum_reach(d);
                let w = continuum_weights(nf, d, reach + 2 * k + 2);
                let lo = k.saturating_sub(reach).max(1);
                for kp in lo..=(k + reach).min(noise.cols - 1) {
                    if (jp + kp) % 2 != 0 {
                        continue;
                    }
                    total += (w[kp.abs_diff(k)] - w[kp + k]) * noise.at(jp - 1, kp);
                }
            }
        }
    }
    Ok(total)
}

/// Continuum mild sums on every lattice point of row `j` with column `≤ cols − 1`.
pub fn mild_continuum_row(field: &Field, j: usize) -> Result<Vec<(usize, f64)>> {
    let noise = field.noise.as_ref().ok_or_else(|| Error::Argument("field carries no noise".into()))?;
    if j >= field.rows {
        return Err(Error::OffGraph(format!("row {j} outside the field")));
    }
    let nf = field.n as f64;
    let ks: Vec<usize> = (1..field.cols).filter(|k| (j + k).is_multiple_of(2)).collect();
    let mut acc = vec![0.0; ks.len()];
    for jp in 1..=j {
        let d = j - jp;
        let reach = continuum_reach(d);
        let w = continuum_weights(nf, d, reach + 2 * field.cols + 2);
        let row = &noise.eta[(jp - 1) * noise.cols..jp * noise.cols];
        for (slot, &k) in acc.iter_mut().zip(&ks) {
            let lo = k.saturating_sub(reach).max(1);
            let hi = (k + reach).min(noise.cols - 1);
            let mut s = 0.0;
            for kp in lo..=hi {
                s += (w[kp.abs_diff(k)] - w[kp + k]) * row[kp];
            }
            *slot += s;
        }
    }
    Ok(ks.into_iter().zip(acc).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseReport {
    pub n: u64,
    pub seeds: usize,
    /// Mean squared difference between the Euler field and the continuum mild sum.
    pub mse: MeanEstimate,
    pub rows_used: Vec<usize>,
}

/// Rows `≈ i·(rows−1)/count`, `i = 1..=count`.
pub fn sample_rows(rows: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=count).map(|i| (i * (rows - 1) + count / 2) / count).filter(|&j| j > 0).collect();
    out.dedup();
    out
}

/// Euler-versus-continuum mean squared error on `[0, 1]²`, over `row_count` sampled rows
/// and every lattice column, one value per seed.
pub fn mse_study(n: u64, seeds: &[u64], row_count: usize, variance: NoiseVariance) -> Result<MseReport> {
    let per_seed: Vec<f64> = seeds
        .iter()
        .map(|&s| -> Result<f64> {
            let f = euler_she(n, 1.0, 1.0, variance, s)?;
            let rows = sample_rows(f.rows, row_count);
            let errs: Vec<(f64, usize)> = rows
                .par_iter()
                .map(|&j| {
                    let row = mild_continuum_row(&f, j).unwrap();
                    let se: f64 = row.iter().map(|&(k, v)| (f.values[j * f.cols + k] - v).powi(2)).sum();
                    (se, row.len())
                })
                .collect();
            let (se, cnt) = errs.iter().fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            Ok(se / cnt as f64)
        })
        .collect::<Result<_>>()?;
    Ok(MseReport {
        n,
        seeds: seeds.len(),
        mse: mean_estimate(per_seed.iter().copied()),
        rows_used: sample_rows((n as usize) + 1, row_count),
    })
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakNoiseRun {
    pub n: u64,
    pub alpha: f64,
    pub rows: usize,
    pub cols: usize,
    pub variance: f64,
    /// `sup |Y^j_k|` over `j ≤ A·n`, `k ≤ B·n^{1/2+α}`.
    pub sup: f64,
}

/// Scheme with cell variance of order `n^{−1/2−α}`, space step `n^{−1/2−α}` and time step `1/n`.
pub fn weak_noise_run(n: u64, alpha: f64, a: f64, b: f64, variance: NoiseVariance, seed: u64) -> Result<WeakNoiseRun> {
    if alpha <= 0.0 {
        return Err(Error::Argument("alpha must be positive".into()));
    }
    let nf = n as f64;
    let rows = (a * nf).floor() as usize + 1;
    let cols = (b * nf.powf(0.5 + alpha)).floor() as usize + 1;
    let wide = cols + rows + 1;
    let var = variance.weak(nf, alpha);
    let eta = draw_noise(seed, "weak-noise", rows.max(2) - 1, wide, var);
    let mut sup = 0.0f64;
    parity_recursion(rows.max(2), wide, &eta, |j, row| {
        if j < rows {
            for (k, v) in row.iter().enumerate().take(cols) {
                if (j + k) % 2 == 0 {
                    sup = sup.max(v.abs());
                }
            }
        }
    });
    Ok(WeakNoiseRun { n, alpha, rows, cols, variance: var, sup })
}

/// `E[sup²]` over independent seeds `seed, seed+1, …`.
pub fn weak_noise_study(n: u64, alpha: f64, runs: usize, variance: NoiseVariance, seed: u64) -> Result<MeanEstimate> {
    let sups: Vec<f64> = (0..runs)
        .map(|r| weak_noise_run(n, alpha, 1.0, 1.0, variance, seed.wrapping_add(r as u64)).map(|w| w.sup * w.sup))
        .collect::<Result<_>>()?;
    Ok(mean_estimate(sups.into_iter()))
}

/// Heat scheme without noise and with odd-extended initial data `g̃`.
pub fn deterministic_euler(g: impl Fn(f64) -> f64, n: u64, horizon: f64, extent: f64) -> Result<Field> {
    let nf = n as f64;
    let rows = (horizon * nf).round() as usize + 1;
    let cols = (extent * nf.sqrt()).round() as usize + 1;
    let dx = 1.0 / nf.sqrt();
    let gt = |x: f64| if x >= 0.0 { g(x) } else { -g(-x) };
    // Row j covers columns −(rows−1−j)+… so that the last row still spans [0, cols).
    let pad = rows;
    let width = cols + 2 * pad;
    let mut cur: Vec<f64> = (0..width).map(|i| gt((i as f64 - pad as f64) * dx)).collect();
    let mut values = vec![0.0; rows * cols];
    for j in 0..rows {
        for k in 0..cols {
            values[j * cols + k] = cur[k + pad];
        }
        let mut next = cur.clone();
        for i in 1..width - 1 {
            next[i] = 0.5 * (cur[i - 1] + cur[i + 1]);
        }
        cur = next;
    }
    Ok(Field { n, dt: 1.0 / nf, dx, rows, cols, parity: false, values, noise: None })
}

/// `W^j_k = E g̃((S_j + k)/√n)`.
pub fn walk_expectation(g: impl Fn(f64) -> f64, n: u64, j: usize, k: usize) -> f64 {
    let gt = |x: f64| if x >= 0.0 { g(x) } else { -g(-x) };
    let s = (n as f64).sqrt();
    walk_row(j as u64)
        .iter()
        .enumerate()
        .map(|(i, p)| p * gt((2 * i as i64 - j as i64 + k as i64) as f64 / s))
        .sum()
}

/// Interpolation of a parity-lattice field: linear along both diagonals of every rhombus,
/// zero on the boundary column, then linear in space between the nearest defined points.
/// Every `x ≤ (cols − 2)·dx` is covered; points in the last column strip may not be.
pub fn interpolate(field: &Field, t: f64, x: f64) -> Result<f64> {
    interpolate_lattice(field.rows, field.cols, field.dt, field.dx, |j, k| field.values[j * field.cols + k], t, x, true)
}

/// Generic form of [`interpolate`] for a lattice with `rows × cols` points, row spacing
/// `dr` and column spacing `dc`, whose defined points satisfy `j ≡ k (mod 2)`.
/// With `zero_column`, column coordinate 0 carries value 0.
#[allow(clippy::too_many_arguments)]
pub fn interpolate_lattice(
    rows: usize,
    cols: usize,
    dr: f64,
    dc: f64,
    value: impl Fn(usize, usize) -> f64,
    r: f64,
    c: f64,
    zero_column: bool,
) -> Result<f64> {
    interpolate_lattice_with_edges(rows, cols, dr, dc, value, |_, _, _, _| 0.0, r, c, zero_column)
}

/// [`interpolate_lattice`] where the value on the segment from `(j, k)` to `(j+1, k2)` at
/// fraction `s` is the linear interpolant plus `edge(j, k, k2, s)`.
#[allow(clippy::too_many_arguments)]
pub fn interpolate_lattice_with_edges(
    rows: usize,
    cols: usize,
    dr: f64,
    dc: f64,
    value: impl Fn(usize, usize) -> f64,
    edge: impl Fn(usize, usize, usize, f64) -> f64,
    r: f64,
    c: f64,
    zero_column: bool,
) -> Result<f64> {
    let rmax = (rows - 1) as f64 * dr;
    let cmax = (cols - 1) as f64 * dc;
    if !(0.0..=rmax + 1e-12).contains(&r) || !(0.0..=cmax + 1e-12).contains(&c) {
        return Err(Error::OffGraph(format!("({r}, {c}) outside the interpolation domain")));
    }
    let mut j = ((r / dr).floor() as usize).min(rows.saturating_sub(2));
    let mut s = r / dr - j as f64;
    if s > 1.0 - 1e-12 && j + 2 < rows {
        j += 1;
        s = 0.0;
    }
    let s = s.clamp(0.0, 1.0);
    let center = (c / dc).round() as i64;
    let mut defined: Vec<(f64, f64)> = Vec::new();
    if zero_column {
        defined.push((0.0, 0.0));
    }
    for k in (center - 3).max(0)..=(center + 3).min(cols as i64 - 1) {
        let k = k as usize;
        if !(j + k).is_multiple_of(2) {
            continue;
        }
        let v0 = value(j, k);
        if s == 0.0 {
            defined.push((k as f64 * dc, v0));
            continue;
        }
        if k + 1 < cols {
            defined.push(((k as f64 + s) * dc, (1.0 - s) * v0 + s * value(j + 1, k + 1) + edge(j, k, k + 1, s)));
        }
        if k >= 1 {
            defined.push(((k as f64 - s) * dc, (1.0 - s) * v0 + s * value(j + 1, k - 1) + edge(j, k, k - 1, s)));
        }
    }
    let below = defined.iter().filter(|p| p.0 <= c + 1e-12).max_by(|a, b| a.0.total_cmp(&b.0));
    let above = defined.iter().filter(|p| p.0 >= c - 1e-12).min_by(|a, b| a.0.total_cmp(&b.0));
    match (below, above) {
        (Some(a), Some(b)) if (b.0 - a.0).abs() < 1e-12 => Ok(0.5 * (a.1 + b.1)),
        (Some(a), Some(b)) => Ok(a.1 + (b.1 - a.1) * (c - a.0) / (b.0 - a.0)),
        _ => Err(Error::OffGraph(format!("({r}, {c}) has no defined neighbour on both sides"))),
    }
}
