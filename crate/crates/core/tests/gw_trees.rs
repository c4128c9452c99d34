use proptest::prelude::*;
use tlg_core::embed::is_tlg_star_star;
use tlg_core::gauss::{conditional_cov, mean_estimate};
use tlg_core::graph::GraphPoint;
use tlg_core::gw::*;
use tlg_core::process::{build_model, exact_joint, Family};

fn binary() -> Offspring {
    Offspring::constant(2)
}

/// `E N(t)` from the geometric law `P(N(t) = k) = e^{−t}(1 − e^{−t})^{k−1}` of the Yule
/// process, summed term by term.
fn yule_mean_series(t: f64) -> f64 {
    let p = (-t).exp();
    (1..20_000).map(|k| k as f64 * p * (1.0 - p).powi(k - 1)).sum()
}

#[test]
fn series_oracle_is_exponential() {
    for t in [0.5, 1.0, 2.0] {
        assert!((yule_mean_series(t) - f64::exp(t)).abs() < 1e-9);
    }
}

#[test]
fn mean_population_grows_like_exp() {
    let reps = 4000;
    let trees: Vec<GwTree> = (0..reps).map(|r| sample_gw_rep(1.0, &binary(), 2.0, DEFAULT_NODE_CAP, 17, r).unwrap()).collect();
    for t in [0.5, 1.0, 1.5] {
        let est = mean_estimate(trees.iter().map(|tr| tr.alive_at(t) as f64));
        let target = yule_mean_series(t);
        assert!((est.mean - target).abs() < 5.0 * est.stderr, "t={t}: {est:?} vs {target}");
        let single = mean_estimate(trees.iter().map(|tr| (tr.alive_at(t) == 1) as u8 as f64));
        assert!((single.mean - (-t).exp()).abs() < 5.0 * single.stderr);
    }
}

#[test]
fn subcritical_mean_follows_malthus_rate() {
    // m = 0.5: E N(t) = e^{V(m−1)t}.
    let off = Offspring::new(vec![0.5, 0.5]).unwrap();
    let reps = 4000;
    let est = mean_estimate((0..reps).map(|r| sample_gw_rep(2.0, &off, 1.0, DEFAULT_NODE_CAP, 3, r).unwrap().alive_at(0.8) as f64));
    let target = (2.0 * (0.5 - 1.0) * 0.8f64).exp();
    assert!((est.mean - target).abs() < 5.0 * est.stderr, "{est:?} vs {target}");
}

#[test]
fn population_curve_starts_with_root() {
    let t = sample_gw_rep(1.0, &binary(), 2.0, DEFAULT_NODE_CAP, 1, 0).unwrap();
    let c = population_curve(&t, &[0.0, 1.0, 2.0]);
    assert_eq!(c.alive[0], 1);
    assert_eq!(c.born[0], 1);
    assert!(c.born.windows(2).all(|w| w[0] <= w[1]));
    assert!(c.alive.iter().zip(&c.born).all(|(a, b)| a <= b));
}

#[test]
fn sampled_trees_are_star_star() {
    for r in 0..300 {
        let t = sample_gw_rep(1.0, &binary(), 2.0, DEFAULT_NODE_CAP, 23, r).unwrap();
        let g = tlt_to_tlg(&t).unwrap();
        assert!(is_tlg_star_star(&g).unwrap().verdict, "replicate {r}");
    }
}

#[test]
fn ancestral_value_variance_is_time() {
    let reps = 4000u64;
    for t in [0.5, 1.0, 2.0] {
        let vals: Vec<f64> = (0..reps)
            .map(|r| {
                let tree = sample_gw_rep(1.0, &binary(), 2.5, DEFAULT_NODE_CAP, 8, r).unwrap();
                let f = sample_branching_markov(&tree, 0.05, 0.0, 1000 + r).unwrap();
                f.value_at(tree.first_lineage_at(t).unwrap(), t).unwrap()
            })
            .collect();
        let est = mean_estimate(vals.iter().map(|v| v * v));
        assert!((est.mean - t).abs() < 5.0 * est.stderr, "t={t}: {est:?}");
    }
}

#[test]
fn sibling_increments_are_uncorrelated() {
    let mut prods = Vec::new();
    let mut r = 0u64;
    while prods.len() < 3000 {
        let tree = sample_gw_rep(1.0, &binary(), 3.0, DEFAULT_NODE_CAP, 31, r).unwrap();
        r += 1;
        let kids = &tree.nodes[0].children;
        if kids.len() != 2 {
            continue;
        }
        let f = sample_branching_markov(&tree, 0.1, 0.0, r).unwrap();
        let inc = |i: usize| f.paths[i].last().unwrap().1 - f.paths[i][0].1;
        let (a, b) = (inc(kids[0]), inc(kids[1]));
        let (la, lb) = (tree.end(kids[0]) - tree.nodes[kids[0]].birth, tree.end(kids[1]) - tree.nodes[kids[1]].birth);
        prods.push(a * b / (la * lb).sqrt());
    }
    let est = mean_estimate(prods.into_iter());
    assert!(est.mean.abs() < 5.0 * est.stderr, "{est:?}");
}

/// A fixed small tree sampled once, for the exact-engine comparisons.
fn small_tree() -> GwTree {
    (0..)
        .map(|r| sample_gw_rep(1.0, &binary(), 1.5, DEFAULT_NODE_CAP, 77, r).unwrap())
        .find(|t| (5..=9).contains(&t.nodes.len()))
        .unwrap()
}

#[test]
fn exact_engine_agrees_with_forward_sampler() {
    let tree = small_tree();
    let g = tlt_to_tlg(&tree).unwrap();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let ends: Vec<usize> = (0..tree.nodes.len()).collect();
    let pts: Vec<GraphPoint> = ends.iter().map(|&i| GraphPoint::new(i as i64, tree.end(i))).collect();
    let exact = exact_joint(&m, &pts).unwrap();
    let reps = 20_000u64;
    let samples: Vec<Vec<f64>> = (0..reps)
        .map(|s| {
            let f = sample_branching_markov(&tree, 0.25, 0.0, s).unwrap();
            ends.iter().map(|&i| f.paths[i].last().unwrap().1).collect()
        })
        .collect();
    let maxvar = (0..ends.len()).map(|i| exact.cov[(i, i)]).fold(0.0, f64::max);
    for a in 0..ends.len() {
        for b in 0..ends.len() {
            let est = mean_estimate(samples.iter().map(|v| v[a] * v[b]));
            assert!((est.mean - exact.cov[(a, b)]).abs() < 6.0 * maxvar / (reps as f64).sqrt(), "({a},{b})");
        }
    }
}

#[test]
fn subtrees_independent_given_branch_value() {
    let tree = small_tree();
    let g = tlt_to_tlg(&tree).unwrap();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let branch = (0..tree.nodes.len()).find(|&i| tree.nodes[i].children.len() == 2).unwrap();
    let (c0, c1) = (tree.nodes[branch].children[0], tree.nodes[branch].children[1]);
    let mid = |i: usize| GraphPoint::new(i as i64, 0.5 * (tree.nodes[i].birth + tree.end(i)));
    let pts = [GraphPoint::new(branch as i64, tree.end(branch)), mid(c0), GraphPoint::new(c0 as i64, tree.end(c0)), mid(c1), GraphPoint::new(c1 as i64, tree.end(c1))];
    let j = exact_joint(&m, &pts).unwrap();
    let c = conditional_cov(&j.cov, &[1, 2, 3, 4], &[0]);
    for a in 0..2 {
        for b in 2..4 {
            assert!(c[(a, b)].abs() < 1e-9);
        }
    }
}

#[test]
fn precision_zeros_follow_tree_edges() {
    let tree = small_tree();
    let g = tlt_to_tlg(&tree).unwrap();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    // End vertices of every node; the root birth vertex has zero variance.
    let pts: Vec<GraphPoint> = (0..tree.nodes.len()).map(|i| GraphPoint::new(i as i64, tree.end(i))).collect();
    let prec = exact_joint(&m, &pts).unwrap().precision();
    let scale = prec.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for a in 0..pts.len() {
        for b in 0..pts.len() {
            let adjacent = a == b || tree.nodes[a].parent == Some(b) || tree.nodes[b].parent == Some(a);
            if !adjacent {
                assert!(prec[(a, b)].abs() < 1e-8 * scale, "({a},{b}) {}", prec[(a, b)]);
            } else if a != b {
                assert!(prec[(a, b)].abs() > 1e-6 * scale);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn births_follow_deaths_and_graph_is_star_star(seed in 0u64..10_000, p0 in 0.0f64..0.6, horizon in 0.2f64..2.0) {
        let off = Offspring::new(vec![p0, 0.0, 1.0 - p0]).unwrap();
        let t = sample_gw_rep(1.0, &off, horizon, 5000, seed, 0).unwrap();
        for n in &t.nodes {
            if let Some(p) = n.parent {
                prop_assert_eq!(n.birth, t.nodes[p].death());
                prop_assert!(n.birth < horizon);
            }
        }
        let g = tlt_to_tlg(&t).unwrap();
        prop_assert!(tlg_core::graph::validate_tlg(&g).is_valid());
        prop_assert!(is_tlg_star_star(&g).unwrap().verdict);
    }

    #[test]
    fn field_paths_are_continuous(seed in 0u64..10_000, dt in 0.01f64..0.5) {
        let t = sample_gw_rep(1.0, &binary(), 1.5, 5000, seed, 1).unwrap();
        let f = sample_branching_markov(&t, dt, 0.7, seed).unwrap();
        prop_assert_eq!(f.paths[0][0].1, 0.7);
        for (i, n) in t.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                prop_assert_eq!(f.paths[i][0], *f.paths[p].last().unwrap());
            }
            prop_assert!(f.paths[i].windows(2).all(|w| w[1].0 > w[0].0));
        }
    }
}
