use std::collections::BTreeMap;

use proptest::prelude::*;
use tlg_core::gauss::{bridge_pair_cov, conditional_cov, Clock};
use tlg_core::graph::{Edge, GraphKind, GraphPoint, TimeLikeGraph, Vertex};
use tlg_core::paths::{full_time_paths, DEFAULT_PATH_CAP};
use tlg_core::process::{
    build_model, check_cell_markov, check_martingale, check_moral_graph_markov, exact_joint, naive_counterexample,
    naive_counterexample_mc, sample_paths, sample_points, truly_simple_cells, vertex_joint, Family, NodeKey,
};
use tlg_core::star::is_tlg_star;
use tlg_core::tower::{Move, Seed, Tower};
use tlg_core::{fixtures, TimePath};

fn gp(e: i64, t: f64) -> GraphPoint {
    GraphPoint::new(e, t)
}

/// Vertices and edge midpoints of a path, as graph points in time order.
fn path_points(g: &TimeLikeGraph, p: &TimePath) -> Vec<GraphPoint> {
    let mut out = Vec::new();
    for &e in &p.edges {
        let edge = g.edge(e).unwrap();
        let (a, b) = (g.time(edge.tail).unwrap(), g.time(edge.head).unwrap());
        out.push(gp(e, a));
        out.push(gp(e, 0.5 * (a + b)));
    }
    let last = *p.edges.last().unwrap();
    out.push(gp(last, g.time(g.edge(last).unwrap().head).unwrap()));
    out
}

fn midpoints(g: &TimeLikeGraph) -> Vec<GraphPoint> {
    g.edges()
        .iter()
        .map(|e| gp(e.id, 0.5 * (g.time(e.tail).unwrap() + g.time(e.head).unwrap())))
        .collect()
}

#[test]
fn brownian_path_law_on_every_full_path() {
    for (name, g) in fixtures::star_fixtures() {
        let m = build_model(&g, Family::brownian(), None).unwrap();
        for p in full_time_paths(&g, DEFAULT_PATH_CAP).unwrap() {
            let pts = path_points(&g, &p);
            let j = exact_joint(&m, &pts).unwrap();
            for (i, a) in pts.iter().enumerate() {
                for (k, b) in pts.iter().enumerate() {
                    assert!((j.cov[(i, k)] - a.time.min(b.time)).abs() < 1e-9, "{name} path {:?}", p.edges);
                }
            }
        }
    }
}

#[test]
fn covariance_does_not_depend_on_the_tower() {
    for (name, g) in fixtures::star_fixtures() {
        let paths = full_time_paths(&g, DEFAULT_PATH_CAP).unwrap();
        let first = is_tlg_star(&g, paths.first()).unwrap().tower.unwrap();
        let last = is_tlg_star(&g, paths.last()).unwrap().tower.unwrap();
        let pts = midpoints(&g);
        for fam in [Family::brownian(), Family::BrownianBridge { sigma2: 1.0, start: 0.0, end: 1.0 }] {
            let a = exact_joint(&build_model(&g, fam.clone(), Some(&first)).unwrap(), &pts).unwrap();
            let b = exact_joint(&build_model(&g, fam, Some(&last)).unwrap(), &pts).unwrap();
            assert!((a.cov - b.cov).abs().max() < 1e-9, "{name}");
        }
    }
}

#[test]
fn truly_simple_cells_are_conditionally_independent() {
    for (name, g) in fixtures::star_fixtures() {
        let m = build_model(&g, Family::brownian(), None).unwrap();
        for c in truly_simple_cells(&m).unwrap() {
            let r = check_cell_markov(&m, &c).unwrap();
            assert!(r.pass, "{name}: {r:?}");
        }
    }
}

#[test]
fn cell_start_has_zero_conditional_variance() {
    let g = fixtures::one_cell();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let j = exact_joint(&m, &[gp(0, 0.0), gp(0, 1.0), gp(0, 0.0)]).unwrap();
    assert!(conditional_cov(&j.cov, &[2], &[0, 1])[(0, 0)].abs() < 1e-12);
}

#[test]
fn moral_precision_zeros_match_non_adjacency() {
    for (name, g) in fixtures::star_fixtures() {
        let m = build_model(&g, Family::brownian(), None).unwrap();
        let r = check_moral_graph_markov(&m, &midpoints(&g)).unwrap();
        assert!(r.pass, "{name}: {}", r.max_nonadjacent);
    }
    let g = fixtures::double_cell();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let r = check_moral_graph_markov(&m, &midpoints(&g)).unwrap();
    assert_eq!(r.pinned, vec!["v0".to_string()]);
    assert!(r.nonadjacent_pairs > 0);
}

#[test]
fn double_cell_precision_pattern_by_brute_force_conditioning() {
    // Midpoints of the two parallel edges of the first cell are independent given all
    // other points; so are midpoints of different cells.
    let g = fixtures::double_cell();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let pts = [gp(0, 0.5), gp(2, 1.0), gp(0, 0.25), gp(1, 0.25), gp(2, 0.75), gp(3, 0.75)];
    let j = exact_joint(&m, &pts).unwrap();
    let pc = |a: usize, b: usize| {
        let rest: Vec<usize> = (0..6).filter(|&k| k != a && k != b).collect();
        conditional_cov(&j.cov, &[a, b], &rest)[(0, 1)]
    };
    assert!(pc(2, 3).abs() < 1e-12);
    assert!(pc(2, 4).abs() < 1e-12);
    assert!(pc(4, 5).abs() < 1e-12);
    assert!(pc(0, 2).abs() > 1e-3);
}

#[test]
fn one_cell_adjacent_pair_has_no_zero_constraint() {
    let m = build_model(&fixtures::one_cell(), Family::TwoSidedBrownian { sigma2: 1.0, center: -1.0 }, None).unwrap();
    let r = check_moral_graph_markov(&m, &[]).unwrap();
    assert_eq!(r.labels.len(), 2);
    assert_eq!(r.nonadjacent_pairs, 0);
}

#[test]
fn bridge_pair_formula_matches_engine() {
    let g = TimeLikeGraph::from_parts(GraphKind::Simple, &[(0, 0.0), (1, 0.4), (2, 1.0)], &[(0, 0, 1), (1, 1, 2), (2, 1, 2)])
        .unwrap();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let j = exact_joint(&m, &[gp(1, 0.6), gp(2, 0.8)]).unwrap();
    assert!((j.cov[(0, 1)] - 8.0 / 15.0).abs() < 1e-12);
    assert!((bridge_pair_cov(0.4, 1.0, 0.6, 0.8) - j.cov[(0, 1)]).abs() < 1e-12);
    let mc = sample_points(&m, &[gp(1, 0.6), gp(2, 0.8)], 100_000, 11).unwrap();
    let e = tlg_core::gauss::mean_estimate(mc.values.iter().map(|v| v[0] * v[1]));
    assert!((e.mean - 8.0 / 15.0).abs() < 5.0 * e.stderr, "{e:?}");
}

#[test]
fn naive_build_exact_and_monte_carlo_agree() {
    let r = naive_counterexample().unwrap();
    assert!((r.naive - 2.0 / 15.0).abs() < 1e-12);
    assert!((r.brownian - 0.2).abs() < 1e-15);
    let mc = naive_counterexample_mc(100_000, 5).unwrap();
    assert!((mc.mean - r.naive).abs() < 5.0 * mc.stderr, "{mc:?}");
}

#[test]
fn zero_variance_family_samples_zero() {
    let m = build_model(&fixtures::sl3(), Family::HomogeneousBrownian { sigma2: 0.0, origin: 0.0 }, None).unwrap();
    let r = sample_paths(&m, 4, 20, 1).unwrap();
    assert!(r.values.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn minimal_graph_monte_carlo_variance() {
    let m = build_model(&fixtures::minimal(), Family::brownian(), None).unwrap();
    let r = sample_paths(&m, 8, 10_000, 2).unwrap();
    let col = r.column(NodeKey::Vertex(1)).unwrap();
    let v = r.values.iter().map(|x| x[col] * x[col]).sum::<f64>() / r.values.len() as f64;
    assert!((v - 1.0).abs() < 0.05, "{v}");
}

#[test]
fn one_cell_cross_side_monte_carlo() {
    let m = build_model(&fixtures::one_cell(), Family::brownian(), None).unwrap();
    let r = sample_points(&m, &[gp(0, 0.5), gp(1, 0.5)], 40_000, 3).unwrap();
    let e = r.cov_estimate(0, 1);
    assert!((e.mean - 0.25).abs() < 5.0 * e.stderr, "{e:?}");
}

#[test]
fn monte_carlo_matches_exact_engine_entrywise() {
    for (name, g) in [("coupling", fixtures::coupling()), ("pic34", fixtures::pic34())] {
        let m = build_model(&g, Family::brownian(), None).unwrap();
        let pts = midpoints(&g);
        let exact = exact_joint(&m, &pts).unwrap();
        let reps = 20_000;
        let r = sample_points(&m, &pts, reps, 9).unwrap();
        let maxvar = exact.cov.diagonal().max();
        for i in 0..pts.len() {
            for k in 0..pts.len() {
                let est = r.cov_estimate(i, k).mean;
                assert!((est - exact.cov[(i, k)]).abs() < 6.0 * maxvar / (reps as f64).sqrt(), "{name} ({i},{k})");
            }
        }
    }
}

fn glued_square() -> Family {
    Family::GluedDiffusion {
        sigma2: 1.0,
        clocks: BTreeMap::from([(1, Clock::Power { exponent: 2.0 })]),
        default: Clock::Identity,
    }
}

#[test]
fn glued_diffusion_variances_and_martingale() {
    let g = fixtures::one_cell();
    let m = build_model(&g, glued_square(), None).unwrap();
    let j = exact_joint(&m, &[gp(0, 0.5), gp(1, 0.5)]).unwrap();
    assert!((j.cov[(0, 0)] - 0.5).abs() < 1e-12);
    assert!((j.cov[(1, 1)] - 0.25).abs() < 1e-12);
    // Both sides are bridges from 0 to the shared value at 1.
    assert!((j.cov[(0, 1)] - 0.5 * 0.25).abs() < 1e-12);
    assert!(check_martingale(&m, gp(1, 0.5), gp(1, 1.0)).unwrap().pass);
    assert!(check_martingale(&m, gp(0, 0.3), gp(1, 1.0)).unwrap().pass);
    let mc = sample_points(&m, &[gp(1, 0.5), gp(0, 1.0)], 40_000, 4).unwrap();
    let e = mc.cov_estimate(0, 1);
    assert!((e.mean - 0.25).abs() < 5.0 * e.stderr);
}

#[test]
fn martingale_checks_on_brownian() {
    let m = build_model(&fixtures::one_cell(), Family::brownian(), None).unwrap();
    assert!(check_martingale(&m, gp(0, 0.5), gp(0, 0.5)).unwrap().pass);
    assert!(check_martingale(&m, gp(0, 0.5), gp(0, 1.0)).unwrap().pass);
    assert!(check_martingale(&m, gp(1, 0.7), gp(0, 0.5)).is_err());
    let b = build_model(&fixtures::one_cell(), Family::BrownianBridge { sigma2: 1.0, start: 0.0, end: 1.0 }, None).unwrap();
    assert!(check_martingale(&b, gp(0, 0.5), gp(0, 1.0)).is_err());
}

#[test]
fn general_graphs_carry_brownian_marginals() {
    for g in [fixtures::planar_general(), fixtures::sl25a(), fixtures::binary_split()] {
        let m = build_model(&g, Family::brownian(), None).unwrap();
        let pts: Vec<GraphPoint> = midpoints(&g);
        let j = exact_joint(&m, &pts).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert!((j.cov[(i, i)] - p.time).abs() < 1e-9);
        }
    }
    let g = fixtures::sl25a();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let j = vertex_joint(&m).unwrap();
    let (i1, i3) = (j.index("v1").unwrap(), j.index("v3").unwrap());
    assert!(j.cov[(i1, i3)].abs() < 1e-12);
    assert!((j.cov[(i3, i3)] - 0.2).abs() < 1e-12);
}

#[test]
fn tree_branches_independent_given_branch_vertex() {
    let g = fixtures::binary_split();
    let m = build_model(&g, Family::brownian(), None).unwrap();
    let j = exact_joint(&m, &[gp(0, 0.5), gp(1, 0.8), gp(2, 0.6), gp(0, 0.2)]).unwrap();
    let c = conditional_cov(&j.cov, &[1, 2, 3], &[0]);
    assert!(c[(0, 1)].abs() < 1e-12 && c[(0, 2)].abs() < 1e-12 && c[(1, 2)].abs() < 1e-12);
}

#[test]
fn non_markov_family_keeps_path_law_on_grid() {
    let f3 = Clock::Table { points: vec![(0.0, 0.0), (1.0 / 3.0, 2.0 / 3.0), (2.0 / 3.0, 1.0 / 3.0), (1.0, 1.0)] };
    let f = Family::TimeChanged { sigma2: 1.0, clocks: BTreeMap::from([(1, f3.clone())]), default: Clock::Identity };
    let m = tlg_core::process::build_model_with(
        &fixtures::one_cell(),
        f,
        None,
        tlg_core::process::ModelOptions { grid: 6 },
    )
    .unwrap();
    let ts: Vec<f64> = (1..6).map(|k| k as f64 / 6.0).collect();
    let pts: Vec<GraphPoint> = ts.iter().map(|&t| gp(1, t)).collect();
    let j = exact_joint(&m, &pts).unwrap();
    for (i, &s) in ts.iter().enumerate() {
        for (k, &t) in ts.iter().enumerate() {
            assert!((j.cov[(i, k)] - f3.eval(s).min(f3.eval(t))).abs() < 1e-9);
        }
    }
    let r = sample_paths(&m, 6, 50, 8).unwrap();
    assert_eq!(r.values.len(), 50);
}

/// Builds a random TLG* by replaying random splits and connected-edge additions.
fn random_star(ops: &[(bool, u32, f64)]) -> (TimeLikeGraph, Tower) {
    let seed = Seed { tail: 0, head: 1, edge: 0, tail_time: 0.0, head_time: 1.0 };
    let mut tower = Tower { seed, moves: vec![] };
    let (mut next_v, mut next_e) = (2i64, 1i64);
    for &(split, pick, frac) in ops {
        let state = tower.replay_state().unwrap();
        let mut pairs = Vec::new();
        if !split {
            for (&u, &tu) in &state.times {
                for (&v, &tv) in &state.times {
                    if tu < tv && state.connected(u, v) {
                        pairs.push((u, v));
                    }
                }
            }
        }
        if pairs.is_empty() {
            let edges: Vec<_> = state.edges.iter().collect();
            let (&e, &(t, h)) = edges[pick as usize % edges.len()];
            let (a, b) = (state.times[&t], state.times[&h]);
            tower.moves.push(Move::AddVertex {
                edge: e,
                vertex: next_v,
                time: a + (b - a) * (0.1 + 0.8 * frac),
                lower_edge: next_e,
                upper_edge: e,
            });
            next_v += 1;
        } else {
            let (u, v) = pairs[pick as usize % pairs.len()];
            tower.moves.push(Move::AddEdge { tail: u, head: v, edge: next_e });
        }
        next_e += 1;
    }
    (tower.replay(GraphKind::Simple).unwrap(), tower)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generating_and_stingy_towers_agree(ops in prop::collection::vec((any::<bool>(), any::<u32>(), 0.0f64..1.0), 1..9)) {
        let (g, tower) = random_star(&ops);
        let a = vertex_joint(&build_model(&g, Family::brownian(), Some(&tower)).unwrap()).unwrap();
        let b = vertex_joint(&build_model(&g, Family::brownian(), None).unwrap()).unwrap();
        prop_assert!((a.cov.clone() - b.cov).abs().max() < 1e-9);
        for (i, v) in g.vertices().iter().enumerate() {
            prop_assert!((a.cov[(i, i)] - v.time).abs() < 1e-9);
        }
    }

    #[test]
    fn cells_of_random_stars_are_markov(ops in prop::collection::vec((any::<bool>(), any::<u32>(), 0.0f64..1.0), 1..7)) {
        let (g, _) = random_star(&ops);
        let m = build_model(&g, Family::brownian(), None).unwrap();
        for c in truly_simple_cells(&m).unwrap() {
            prop_assert!(check_cell_markov(&m, &c).unwrap().pass);
        }
    }
}

#[test]
fn engine_accepts_graphs_rebuilt_from_json_parts() {
    let g = fixtures::nested();
    let h = TimeLikeGraph::new(
        GraphKind::Simple,
        g.vertices().iter().rev().map(|v| Vertex { id: v.id, time: v.time }).collect(),
        g.edges().iter().rev().map(|e| Edge::new(e.id, e.tail, e.head)).collect(),
    )
    .unwrap();
    let a = vertex_joint(&build_model(&g, Family::brownian(), None).unwrap()).unwrap();
    let b = vertex_joint(&build_model(&h, Family::brownian(), None).unwrap()).unwrap();
    assert_eq!(a.cov, b.cov);
}
