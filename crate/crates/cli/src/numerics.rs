//! Commands for the lattice schemes, branching trees and bridge maxima.

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde_json::json;
use tlg_core::embed::is_tlg_star_star;
use tlg_core::gauss::{bridge_max_stats, max_bound_check, mean_estimate, MaxMethod};
use tlg_core::gw::{population_curve, sample_branching_markov, sample_gw_rep, tlt_to_tlg, Offspring, DEFAULT_NODE_CAP};
use tlg_core::io::graph_to_json;
use tlg_core::rhombus::{limit_diagnostics, sample_grid_nbm, LimitOptions, RhombusGrid, RhombusOptions};
use tlg_core::rng::sub_seed;
use tlg_core::she::{
    calibrate_llt_constant, euler_she, interpolate, llt_gap, loglog_slope, mild_continuum_row, mild_discrete, mse_study,
    sample_rows, weak_noise_study, MildVariant, NoiseVariance,
};

use crate::output::{num, pgm, Csv, OutputDir};
use crate::{parse_list, parse_pairs, Common, Outcome};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    /// Cell variance from the white-noise mass of a lattice cell.
    Derived,
    /// Cell variance larger by a factor √2.
    Printed,
}

impl Variance {
    fn noise(self) -> NoiseVariance {
        match self {
            Variance::Derived => NoiseVariance::Derived,
            Variance::Printed => NoiseVariance::Printed,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SheMode {
    /// One Euler field with heatmap and mild-sum comparison.
    Euler,
    /// Euler versus continuum mild sum over several `n`.
    Mse,
    /// Supremum of the weak-noise scheme over several `n`.
    Weak,
    /// Local limit gap of the lazy walk over several `n`.
    Llt,
}

#[derive(Args, Debug)]
pub struct SheArgs {
    #[arg(long, value_enum, default_value_t = SheMode::Euler)]
    pub mode: SheMode,
    #[arg(long, default_value_t = 256)]
    pub n: u64,
    /// Values of `n` for the study modes.
    #[arg(long, default_value = "64,256,1024")]
    pub ns: String,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub extent: f64,
    /// Weak-noise exponent.
    #[arg(long, default_value_t = 0.25)]
    pub alpha: f64,
    /// Seeds per `n` in the study modes.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Lower walk length for the local limit gap (default `n`).
    #[arg(long)]
    pub beta: Option<u64>,
    #[arg(long, value_enum, default_value_t = Variance::Derived)]
    pub variance: Variance,
    /// Heatmap width and height in pixels.
    #[arg(long, default_value_t = 256)]
    pub pixels: usize,
}

#[derive(Args, Debug)]
pub struct RhombusArgs {
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1024)]
    pub n: u64,
    #[arg(long, default_value_t = 1.0)]
    pub time_extent: f64,
    #[arg(long, default_value_t = 1.0)]
    pub space_extent: f64,
    #[arg(long, value_enum, default_value_t = Variance::Derived)]
    pub variance: Variance,
    /// Edge bridges are resolved on `2^refine` points.
    #[arg(long, default_value_t = 4)]
    pub refine: u32,
    #[arg(long, default_value_t = 256)]
    pub pixels: usize,
    /// Replicates for the moment diagnostics; 0 skips them.
    #[arg(long, default_value_t = 0)]
    pub reps: usize,
    /// Values of `n` for the diagnostics.
    #[arg(long, default_value = "64,256,1024")]
    pub ns: String,
    /// Probe points `t:x;t:x`.
    #[arg(long, default_value = "0.5:0.25;-0.5:0.25;0.25:-0.5")]
    pub probes: String,
    /// Spatial partner of every probe for the difference variance.
    #[arg(long, default_value_t = 0.0)]
    pub pair_x: f64,
}

#[derive(Args, Debug)]
pub struct GwArgs {
    /// Exponential lifetime rate.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Offspring law `p0,p1,p2,…`.
    #[arg(long, default_value = "0,0,1")]
    pub offspring: String,
    #[arg(long, default_value_t = 2.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Grid step of the branching Brownian paths.
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Times for the population and ancestral statistics (default: quarters of the horizon).
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub cap: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Maximum over grid points only.
    Grid,
    /// Grid points plus exact sampling of the maximum between them.
    Exact,
}

#[derive(Args, Debug)]
pub struct MaximaArgs {
    #[arg(long, default_value = "1,2,5,10")]
    pub ns: String,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Bridges are simulated on `2^grid` steps.
    #[arg(long, default_value_t = 12)]
    pub grid: u32,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    /// Standard deviations for the Gaussian maxima bound, comma separated.
    #[arg(long)]
    pub sigmas: Option<String>,
}

/// Rows `t` from high to low, columns `x` from low to high.
fn raster(width: usize, height: usize, t: (f64, f64), x: (f64, f64), f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let step = |lo: f64, hi: f64, n: usize, i: usize| if n > 1 { lo + (hi - lo) * i as f64 / (n - 1) as f64 } else { lo };
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        let tv = step(t.1, t.0, height, r);
        for c in 0..width {
            out.push(f(tv, step(x.0, x.1, width, c)));
        }
    }
    out
}

pub fn she(c: &Common, a: SheArgs) -> Result<Outcome> {
    let noise = a.variance.noise();
    let ns: Vec<u64> = parse_list(&a.ns)?;
    let cfg = json!({
        "mode": format!("{:?}", a.mode).to_lowercase(), "n": a.n, "ns": ns, "horizon": a.horizon, "extent": a.extent,
        "alpha": a.alpha, "reps": a.reps, "beta": a.beta, "variance": noise, "pixels": a.pixels,
    });
    let (seed, mut out) = match a.mode {
        SheMode::Llt => (None, OutputDir::create(&c.out_dir("she"), c.force)?),
        _ => (Some(c.need_seed()?), OutputDir::create(&c.out_dir("she"), c.force)?),
    };
    match a.mode {
        SheMode::Euler => {
            let seed = seed.unwrap();
            let f = euler_she(a.n, a.horizon, a.extent, noise, seed)?;
            let mut csv = Csv::new(&["j", "k", "t", "x", "value"]);
            for (j, k, t, x, v) in f.points() {
                csv.row(&[j.to_string(), k.to_string(), num(t), num(x), num(v)]);
            }
            out.write_csv("field.csv", &csv)?;
            let xmax = (f.cols - 2) as f64 * f.dx;
            let tmax = (f.rows - 1) as f64 * f.dt;
            let img = raster(a.pixels, a.pixels, (0.0, tmax), (0.0, xmax), |t, x| interpolate(&f, t, x).unwrap_or(f64::NAN));
            out.write("heatmap.pgm", pgm(a.pixels, a.pixels, &img).as_bytes())?;
            let mut mild = Csv::new(&["j", "k", "euler", "green", "continuum"]);
            let mut worst = 0.0f64;
            for j in sample_rows(f.rows, 4) {
                for (k, cont) in mild_continuum_row(&f, j)? {
                    let e = f.get(j, k)?;
                    let g = mild_discrete(&f, j, k, MildVariant::Discrete)?;
                    worst = worst.max((e - g).abs());
                    mild.row(&[j.to_string(), k.to_string(), num(e), num(g), num(cont)]);
                }
            }
            out.write_csv("mild.csv", &mild)?;
            println!("field {} x {}; max |euler - green sum| {worst:e}", f.rows, f.cols);
        }
        SheMode::Mse => {
            let seed = seed.unwrap();
            let seeds: Vec<u64> = (0..a.reps as u64).map(|i| sub_seed(seed, "she-mse", i)).collect();
            let mut csv = Csv::new(&["n", "estimate", "stderr"]);
            let mut ys = Vec::new();
            for &n in &ns {
                let r = mse_study(n, &seeds, 16, noise)?;
                println!("n={n}: mse {:.4e} +/- {:.1e}", r.mse.mean, r.mse.stderr);
                csv.row(&[n.to_string(), num(r.mse.mean), num(r.mse.stderr)]);
                ys.push(r.mse.mean);
            }
            let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
            let slope = if ns.len() >= 2 { loglog_slope(&xs, &ys) } else { f64::NAN };
            println!("log-log slope {slope:.4}");
            out.write_csv("mse.csv", &csv)?;
            let mut s = Csv::new(&["quantity", "value"]);
            s.row(&["loglog_slope".into(), num(slope)]);
            out.write_csv("slope.csv", &s)?;
        }
        SheMode::Weak => {
            let seed = seed.unwrap();
            let mut csv = Csv::new(&["n", "alpha", "estimate", "stderr"]);
            for &n in &ns {
                let e = weak_noise_study(n, a.alpha, a.reps, noise, sub_seed(seed, "she-weak", n))?;
                println!("n={n}: E sup^2 {:.4} +/- {:.4}", e.mean, e.stderr);
                csv.row(&[n.to_string(), num(a.alpha), num(e.mean), num(e.stderr)]);
            }
            out.write_csv("weak.csv", &csv)?;
        }
        SheMode::Llt => {
            let constant = calibrate_llt_constant();
            let mut csv = Csv::new(&["n", "beta", "gap", "n_gap", "bound", "argmax_k", "argmax_x"]);
            for &n in &ns {
                let g = llt_gap(n, a.beta.unwrap_or(n), constant)?;
                println!("n={n} beta={}: gap {:.4e}, n*gap {:.4}, bound {:.4e}", g.beta, g.gap, n as f64 * g.gap, g.bound);
                csv.row(&[
                    n.to_string(),
                    g.beta.to_string(),
                    num(g.gap),
                    num(n as f64 * g.gap),
                    num(g.bound),
                    g.argmax_k.to_string(),
                    num(g.argmax_x),
                ]);
            }
            out.write_csv("llt.csv", &csv)?;
        }
    }
    out.finish("she", seed, cfg)?;
    Ok(Outcome::Success)
}

pub fn rhombus(c: &Common, a: RhombusArgs) -> Result<Outcome> {
    let seed = c.need_seed()?;
    let options = RhombusOptions { variance: a.variance.noise(), refine_log2: a.refine };
    let grid = RhombusGrid::new(a.n, a.alpha, a.time_extent, a.space_extent)?;
    let probes = parse_pairs(&a.probes)?;
    let ns: Vec<u64> = parse_list(&a.ns)?;
    let cfg = json!({
        "alpha": a.alpha, "n": a.n, "time_extent": a.time_extent, "space_extent": a.space_extent,
        "options": options, "pixels": a.pixels, "reps": a.reps, "ns": ns, "probes": probes, "pair_x": a.pair_x,
    });
    let mut out = OutputDir::create(&c.out_dir("rhombus"), c.force)?;
    let f = sample_grid_nbm(&grid, options, seed);
    let mut csv = Csv::new(&["j", "k", "t", "x", "value"]);
    for (j, k, v) in f.points() {
        csv.row(&[j.to_string(), k.to_string(), num(j as f64 * grid.dt()), num(k as f64 * grid.dx()), num(v)]);
    }
    out.write_csv("field.csv", &csv)?;
    let (tw, xw) = (grid.rows() as f64 * grid.dt(), grid.cols() as f64 * grid.dx());
    let img = raster(a.pixels, a.pixels, (-tw, tw), (-xw, xw), |t, x| f.interpolate(t, x).unwrap_or(f64::NAN));
    out.write("heatmap.pgm", pgm(a.pixels, a.pixels, &img).as_bytes())?;
    println!("lattice {} x {} rows/cols per side", grid.rows(), grid.cols());
    if a.reps > 0 {
        let opts = LimitOptions {
            alpha: a.alpha,
            ns,
            time_extent: a.time_extent,
            space_extent: a.space_extent,
            probes,
            pair_x: a.pair_x,
            reps: a.reps,
            seed: sub_seed(seed, "rhombus-diagnostics", 0),
            options,
            bridge_stats: true,
        };
        let report = limit_diagnostics(&opts)?;
        let mut d = Csv::new(&["n", "quantity", "t", "x", "estimate", "stderr", "target"]);
        let nan = num(f64::NAN);
        for row in &report.rows {
            let n = row.n.to_string();
            for p in &row.probes {
                d.row(&[n.clone(), "variance".into(), num(p.t), num(p.x), num(p.variance.mean), num(p.variance.stderr), num(p.target)]);
                d.row(&[n.clone(), "pair_variance".into(), num(p.t), num(p.x), num(p.pair_variance.mean), num(p.pair_variance.stderr), nan.clone()]);
            }
            let r = row.residual_variance;
            d.row(&[n.clone(), "residual_variance".into(), nan.clone(), nan.clone(), num(r.mean), num(r.stderr), num(row.residual_target)]);
            if let Some(z) = row.z_sq {
                d.row(&[n.clone(), "bridge_network_sq".into(), nan.clone(), nan.clone(), num(z.mean), num(z.stderr), num(row.z_bound)]);
            }
            if let Some(e) = row.edge_sup_sq {
                d.row(&[n.clone(), "edge_sup_sq".into(), nan.clone(), nan.clone(), num(e.mean), num(e.stderr), nan.clone()]);
            }
            println!(
                "n={}: residual var {:.3e} (target {:.3e}), E Z^2 {:.4} (bound {:.4})",
                row.n,
                r.mean,
                row.residual_target,
                row.z_sq.map_or(f64::NAN, |z| z.mean),
                row.z_bound
            );
        }
        out.write_csv("diagnostics.csv", &d)?;
    }
    out.finish("rhombus", Some(seed), cfg)?;
    Ok(Outcome::Success)
}

pub fn gwtree(c: &Common, a: GwArgs) -> Result<Outcome> {
    let seed = c.need_seed()?;
    let offspring = Offspring::new(parse_list(&a.offspring)?)?;
    let times: Vec<f64> = match &a.times {
        Some(t) => parse_list(t)?,
        None => (1..=4).map(|i| a.horizon * i as f64 / 4.0).collect(),
    };
    if let Some(t) = times.iter().find(|&&t| !(0.0..=a.horizon).contains(&t)) {
        bail!("time {t} outside [0, {}]", a.horizon);
    }
    if a.reps == 0 {
        bail!("reps must be positive");
    }
    let cfg = json!({
        "rate": a.rate, "offspring": offspring.probs, "horizon": a.horizon, "reps": a.reps, "dt": a.dt,
        "times": times, "cap": a.cap,
    });
    let mut out = OutputDir::create(&c.out_dir("gwtree"), c.force)?;
    let malthus = a.rate * (offspring.mean() - 1.0);
    let mut alive: Vec<Vec<f64>> = vec![Vec::new(); times.len()];
    let mut ancestral: Vec<Vec<f64>> = vec![Vec::new(); times.len()];
    let mut star_star = 0usize;
    for r in 0..a.reps as u64 {
        let tree = sample_gw_rep(a.rate, &offspring, a.horizon, a.cap, seed, r)?;
        let graph = tlt_to_tlg(&tree)?;
        star_star += is_tlg_star_star(&graph)?.verdict as usize;
        let field = sample_branching_markov(&tree, a.dt, 0.0, sub_seed(seed, "gw-field", r))?;
        let curve = population_curve(&tree, &times);
        for (i, &t) in times.iter().enumerate() {
            alive[i].push(curve.alive[i] as f64);
            if let Some(node) = tree.first_lineage_at(t) {
                ancestral[i].push(field.value_at(node, t)?.powi(2));
            }
        }
        if r == 0 {
            out.write("tree.json", graph_to_json(&graph).as_bytes())?;
            let mut nodes = Csv::new(&["node", "label", "parent", "birth", "death", "offspring"]);
            for (i, n) in tree.nodes.iter().enumerate() {
                nodes.row(&[
                    i.to_string(),
                    n.label_string(),
                    n.parent.map_or(String::new(), |p| p.to_string()),
                    num(n.birth),
                    num(n.death()),
                    n.offspring.map_or(String::new(), |o| o.to_string()),
                ]);
            }
            out.write_csv("nodes.csv", &nodes)?;
            let mut fc = Csv::new(&["label", "time", "value"]);
            for (i, p) in field.paths.iter().enumerate() {
                for &(t, v) in p {
                    fc.row(&[tree.nodes[i].label_string(), num(t), num(v)]);
                }
            }
            out.write_csv("field.csv", &fc)?;
        }
    }
    let mut pop = Csv::new(&["time", "mean_alive", "stderr", "target", "ancestral_variance", "ancestral_stderr", "lineages"]);
    for (i, &t) in times.iter().enumerate() {
        let m = mean_estimate(alive[i].iter().copied());
        let v = mean_estimate(ancestral[i].iter().copied());
        pop.row(&[
            num(t),
            num(m.mean),
            num(m.stderr),
            num((malthus * t).exp()),
            num(v.mean),
            num(v.stderr),
            ancestral[i].len().to_string(),
        ]);
        println!("t={t}: mean alive {:.4} +/- {:.4} (e^(V(m-1)t) = {:.4}), ancestral var {:.4}", m.mean, m.stderr, (malthus * t).exp(), v.mean);
    }
    out.write_csv("population.csv", &pop)?;
    println!("{star_star} of {} trees are TLG**", a.reps);
    out.finish("gwtree", Some(seed), cfg)?;
    Ok(if star_star == a.reps { Outcome::Success } else { Outcome::Negative })
}

pub fn maxima(c: &Common, a: MaximaArgs) -> Result<Outcome> {
    let seed = c.need_seed()?;
    let ns: Vec<usize> = parse_list(&a.ns)?;
    let method = match a.method {
        Method::Grid => MaxMethod::GridPoints,
        Method::Exact => MaxMethod::ExactBetween,
    };
    let cfg = json!({ "ns": ns, "reps": a.reps, "grid": a.grid, "method": format!("{:?}", a.method).to_lowercase(), "sigmas": a.sigmas });
    let mut out = OutputDir::create(&c.out_dir("maxima"), c.force)?;
    let mut csv = Csv::new(&["quantity", "n", "estimate", "stderr", "bound"]);
    for &n in &ns {
        if n == 0 {
            bail!("bridge counts must be positive");
        }
        let s = bridge_max_stats(n, a.reps, a.grid, method, sub_seed(seed, "maxima", n as u64));
        let abs_bound = 2.0 * ((n + 1) as f64).ln().sqrt();
        csv.row(&["four_plus_sq".into(), n.to_string(), num(s.four_plus_sq.mean), num(s.four_plus_sq.stderr), num(s.harmonic)]);
        csv.row(&["abs_max".into(), n.to_string(), num(s.abs_max.mean), num(s.abs_max.stderr), num(abs_bound)]);
        csv.row(&["tail".into(), n.to_string(), num(s.tail.mean), num(s.tail.stderr), num(s.tail_reference)]);
        println!(
            "n={n}: 4E(M+^2) {:.4} +/- {:.4} (H_n {:.4}), E M {:.4}, P(max>1) {:.4}",
            s.four_plus_sq.mean, s.four_plus_sq.stderr, s.harmonic, s.abs_max.mean, s.tail.mean
        );
    }
    out.write_csv("maxima.csv", &csv)?;
    if let Some(sig) = &a.sigmas {
        let sigmas: Vec<f64> = parse_list(sig)?;
        let r = max_bound_check(&sigmas, None, a.reps, sub_seed(seed, "maxima-bound", 0))?;
        let mut b = Csv::new(&["quantity", "n", "estimate", "stderr", "bound", "satisfied"]);
        b.row(&["abs".into(), r.n.to_string(), num(r.abs.mean), num(r.abs.stderr), num(r.abs_bound), r.abs_ok.to_string()]);
        b.row(&["sq".into(), r.n.to_string(), num(r.sq.mean), num(r.sq.stderr), num(r.sq_bound), r.sq_ok.to_string()]);
        out.write_csv("bound.csv", &b)?;
        println!("E max|X| {:.4} <= {:.4}: {}", r.abs.mean, r.abs_bound, r.abs_ok);
    }
    out.finish("maxima", Some(seed), cfg)?;
    Ok(Outcome::Success)
}
