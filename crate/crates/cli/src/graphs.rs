//! Commands on graph files and process models.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tlg_core::embed::is_tlg_star_star;
use tlg_core::gauss::{bridge_pair_cov, MeanEstimate};
use tlg_core::io::{graph_from_json, graph_to_json, tower_from_json, tower_to_json};
use tlg_core::process::{
    check_cell_markov, check_moral_graph_markov, naive_counterexample, naive_counterexample_mc, sample_paths,
    truly_simple_cells, vertex_joint,
};
use tlg_core::{build_model, exact_joint, fixtures, is_tlg_star, validate_tlg, Family, GraphKind, GraphPoint, ProcessModel, TimeLikeGraph};

use crate::output::{num, Csv, OutputDir};
use crate::{parse_list, Common, Outcome};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Graph JSON file.
    pub graph: PathBuf,
}

/// Where a model comes from: a model descriptor, or a bare graph with Brownian paths.
#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model descriptor JSON `{graph, family, tower?}`.
    #[arg(long, conflicts_with = "graph", required_unless_present = "graph")]
    pub model: Option<PathBuf>,
    /// Graph JSON file, used with standard Brownian paths.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Cells per edge.
    #[arg(long, default_value_t = 8)]
    pub resolution: usize,
}

#[derive(Args, Debug)]
pub struct CovarianceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Points `edge@time`, comma separated; all vertices when absent.
    #[arg(long)]
    pub points: Option<String>,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    /// Monte Carlo replicates, used when a seed is given.
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
}

/// On-disk model descriptor. Paths are relative to the descriptor.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub graph: PathBuf,
    #[serde(default = "Family::brownian")]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tower: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_graph(path: &Path) -> Result<TimeLikeGraph> {
    graph_from_json(&read(path)?).with_context(|| format!("parsing graph {}", path.display()))
}

pub fn load_model(args: &ModelArgs) -> Result<(ProcessModel, serde_json::Value)> {
    if let Some(g) = &args.graph {
        let graph = load_graph(g)?;
        let model = build_model(&graph, Family::brownian(), None)?;
        return Ok((model, json!({ "graph": g, "family": Family::brownian() })));
    }
    let path = args.model.as_ref().ok_or_else(|| anyhow!("pass --model or --graph"))?;
    let file: ModelFile =
        serde_json::from_str(&read(path)?).with_context(|| format!("parsing model {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let graph = load_graph(&base.join(&file.graph))?;
    let tower = match &file.tower {
        Some(t) => Some(tower_from_json(&read(&base.join(t))?).with_context(|| format!("parsing tower {}", t.display()))?),
        None => None,
    };
    let model = build_model(&graph, file.family.clone(), tower.as_ref())?;
    Ok((model, serde_json::to_value(&file)?))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn verify(c: &Common, a: VerifyArgs) -> Result<Outcome> {
    let graph = load_graph(&a.graph)?;
    let report = validate_tlg(&graph);
    if !report.is_valid() {
        println!("TLG: no");
        for f in report.failures() {
            println!("  {f}");
        }
        return Ok(Outcome::Negative);
    }
    let ss = is_tlg_star_star(&graph)?;
    let tower = match graph.kind() {
        GraphKind::Simple => {
            let star = is_tlg_star(&graph, None)?;
            println!("TLG: yes, TLG*: {}", yes(star.verdict));
            println!("TLG**: {}", yes(ss.verdict));
            star.tower
        }
        GraphKind::General => {
            println!("TLG: yes, TLG*: n/a (general graph)");
            println!("TLG**: {}", yes(ss.verdict));
            ss.tower
        }
    };
    let Some(tower) = tower else {
        return Ok(Outcome::Negative);
    };
    let mut out = OutputDir::create(&c.out_dir("verify"), c.force)?;
    out.write("tower.json", tower_to_json(&tower).as_bytes())?;
    println!("tower written to {}", out.path().join("tower.json").display());
    out.finish("verify", None, json!({ "graph": a.graph }))?;
    Ok(Outcome::Success)
}

pub fn sample(c: &Common, a: SampleArgs) -> Result<Outcome> {
    let seed = c.need_seed()?;
    let (model, desc) = load_model(&a.model)?;
    let r = sample_paths(&model, a.resolution, a.reps, seed)?;
    let mut csv = Csv::new(&["replicate", "edge", "time", "value"]);
    for (rep, vals) in r.values.iter().enumerate() {
        for (&(e, t), v) in r.coords.iter().zip(vals) {
            csv.row(&[rep.to_string(), e.to_string(), num(t), num(*v)]);
        }
    }
    let mut out = OutputDir::create(&c.out_dir("sample"), c.force)?;
    out.write_csv("realizations.csv", &csv)?;
    out.finish("sample", Some(seed), json!({ "model": desc, "reps": a.reps, "resolution": a.resolution }))?;
    println!("{} replicates on {} edges", a.reps, model.graph.num_edges());
    Ok(Outcome::Success)
}

fn parse_point(s: &str) -> Result<GraphPoint> {
    let (e, t) = s.split_once('@').ok_or_else(|| anyhow!("expected `edge@time`, got `{s}`"))?;
    Ok(GraphPoint::new(e.trim().parse()?, t.trim().parse()?))
}

pub fn covariance(c: &Common, a: CovarianceArgs) -> Result<Outcome> {
    let (model, desc) = load_model(&a.model)?;
    let gv = match &a.points {
        Some(p) => {
            let pts: Vec<GraphPoint> = parse_list::<String>(p)?.iter().map(|s| parse_point(s)).collect::<Result<_>>()?;
            exact_joint(&model, &pts)?
        }
        None => vertex_joint(&model)?,
    };
    let prec = gv.precision();
    let mut cov = Csv::new(&["a", "b", "cov"]);
    let mut pcsv = Csv::new(&["a", "b", "precision"]);
    for i in 0..gv.len() {
        for j in 0..gv.len() {
            cov.row(&[gv.labels[i].clone(), gv.labels[j].clone(), num(gv.cov[(i, j)])]);
            pcsv.row(&[gv.labels[i].clone(), gv.labels[j].clone(), num(prec[(i, j)])]);
        }
    }
    let mut out = OutputDir::create(&c.out_dir("covariance"), c.force)?;
    out.write_csv("covariance.csv", &cov)?;
    out.write_csv("precision.csv", &pcsv)?;
    out.finish("covariance", None, json!({ "model": desc, "points": a.points }))?;
    println!("{} points", gv.len());
    Ok(Outcome::Success)
}

pub fn cellcheck(c: &Common, a: ModelArgs) -> Result<Outcome> {
    let (model, desc) = load_model(&a)?;
    let mut ok = true;
    let mut cells = Csv::new(&["start", "end", "pairs", "max_abs", "pass"]);
    for cell in truly_simple_cells(&model)? {
        let r = check_cell_markov(&model, &cell)?;
        ok &= r.pass;
        println!("cell {} -> {}: max |partial cov| {:e} ({})", r.start, r.end, r.max_abs, if r.pass { "pass" } else { "FAIL" });
        cells.row(&[r.start.to_string(), r.end.to_string(), r.pairs.to_string(), num(r.max_abs), r.pass.to_string()]);
    }
    let mut out = OutputDir::create(&c.out_dir("cellcheck"), c.force)?;
    out.write_csv("cells.csv", &cells)?;
    if model.is_markov() && model.graph.kind() == GraphKind::Simple {
        let m = check_moral_graph_markov(&model, &[])?;
        ok &= m.pass;
        println!(
            "moral graph: max |precision| off the moral edges {:e} over {} pairs ({})",
            m.max_nonadjacent,
            m.nonadjacent_pairs,
            if m.pass { "pass" } else { "FAIL" }
        );
        let mut moral = Csv::new(&["points", "pinned", "nonadjacent_pairs", "max_nonadjacent", "pass"]);
        moral.row(&[
            m.labels.len().to_string(),
            m.pinned.len().to_string(),
            m.nonadjacent_pairs.to_string(),
            num(m.max_nonadjacent),
            m.pass.to_string(),
        ]);
        out.write_csv("moral.csv", &moral)?;
    }
    out.finish("cellcheck", None, json!({ "model": desc }))?;
    Ok(if ok { Outcome::Success } else { Outcome::Negative })
}

pub fn counterexample(c: &Common, a: CounterexampleArgs) -> Result<Outcome> {
    let naive = naive_counterexample()?;
    let pair = bridge_pair_cov(0.4, 1.0, 0.6, 0.8);
    let mc: Option<MeanEstimate> = match c.seed {
        Some(s) if a.reps > 0 => Some(naive_counterexample_mc(a.reps, s)?),
        _ => None,
    };
    let mut csv = Csv::new(&["quantity", "exact", "claimed", "brownian", "mc_estimate", "mc_stderr"]);
    csv.row(&[
        "naive_cross_cov".into(),
        num(naive.naive),
        num(naive.claimed),
        num(naive.brownian),
        num(mc.map_or(f64::NAN, |m| m.mean)),
        num(mc.map_or(f64::NAN, |m| m.stderr)),
    ]);
    csv.row(&["bridge_pair_cov".into(), num(pair), num(8.0 / 15.0), num(f64::NAN), num(f64::NAN), num(f64::NAN)]);
    println!("{:<18}{:>12}{:>12}{:>12}", "quantity", "exact", "claimed", "brownian");
    println!("{:<18}{:>12.6}{:>12.6}{:>12.6}", "naive E[X1 X3]", naive.naive, naive.claimed, naive.brownian);
    println!("{:<18}{:>12.6}{:>12.6}{:>12}", "bridge pair", pair, 8.0 / 15.0, "-");
    if let Some(m) = mc {
        println!("monte carlo naive E[X1 X3]: {:.6} +/- {:.6}", m.mean, m.stderr);
    }
    let mut out = OutputDir::create(&c.out_dir("counterexample"), c.force)?;
    out.write_csv("counterexample.csv", &csv)?;
    let seed = mc.and(c.seed);
    out.finish("counterexample", seed, json!({ "reps": if seed.is_some() { a.reps } else { 0 } }))?;
    Ok(Outcome::Success)
}

/// Models shipped next to the fixture graphs.
fn fixture_models() -> Vec<(&'static str, ModelFile)> {
    let m = |g: &str, family: Family| ModelFile { graph: PathBuf::from(format!("../{g}.json")), family, tower: None };
    vec![
        ("one-cell-brownian", m("one-cell", Family::brownian())),
        ("pic34-brownian", m("pic34", Family::brownian())),
        ("sl3-brownian", m("sl3", Family::brownian())),
        ("binary-split-brownian", m("binary-split", Family::brownian())),
        ("coupling-bridge", m("coupling", Family::BrownianBridge { sigma2: 1.0, start: 0.0, end: 1.0 })),
    ]
}

pub fn fixtures(c: &Common) -> Result<Outcome> {
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("fixtures"));
    fs::create_dir_all(dir.join("models"))?;
    let mut files: Vec<(PathBuf, String)> = fixtures::all()
        .into_iter()
        .map(|(name, g)| (dir.join(format!("{name}.json")), graph_to_json(&g)))
        .collect();
    for (name, m) in fixture_models() {
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        files.push((dir.join("models").join(format!("{name}.json")), text));
    }
    for (path, _) in &files {
        if path.exists() && !c.force {
            bail!("{} exists; pass --force to overwrite", path.display());
        }
    }
    for (path, text) in &files {
        fs::write(path, text)?;
    }
    println!("{} files written to {}", files.len(), dir.display());
    Ok(Outcome::Success)
}
