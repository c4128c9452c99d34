use std::collections::BTreeSet;

use proptest::prelude::*;
use tlg_core::cells::{cell_collapse, find_cells, moralize, CellKind, Classification};
use tlg_core::embed::{embed, is_tlg_star_star, EmbedMode};
use tlg_core::fixtures;
use tlg_core::graph::{GraphKind, GraphPoint, TimeLikeGraph, VertexId};
use tlg_core::order::{meet_join, order_leq, Bound};
use tlg_core::paths::{full_time_paths, interval, DEFAULT_PATH_CAP};
use tlg_core::star::is_tlg_star;

fn vp(g: &TimeLikeGraph, v: VertexId) -> GraphPoint {
    GraphPoint::at_vertex(g, v).unwrap()
}

/// Brute-force order: enumerate every full path and look for one visiting both vertices in order.
fn brute_leq(g: &TimeLikeGraph, a: VertexId, b: VertexId) -> bool {
    if a == b {
        return true;
    }
    full_time_paths(g, DEFAULT_PATH_CAP).unwrap().iter().any(|p| {
        let vs = p.vertices(g).unwrap();
        match (vs.iter().position(|&x| x == a), vs.iter().position(|&x| x == b)) {
            (Some(i), Some(j)) => i < j,
            _ => false,
        }
    })
}

#[test]
fn order_matches_path_enumeration_on_all_fixtures() {
    for (name, g) in fixtures::all() {
        for a in g.vertices() {
            for b in g.vertices() {
                let fast = order_leq(&g, vp(&g, a.id), vp(&g, b.id)).unwrap();
                assert_eq!(fast, brute_leq(&g, a.id, b.id), "{name}: {} vs {}", a.id, b.id);
            }
        }
    }
}

#[test]
fn pic1_full_path_count_matches_recursive_count() {
    // Independent count: number of paths to each vertex by dynamic programming.
    let g = fixtures::pic1();
    let mut count = [0u64; 6];
    count[0] = 1;
    for v in 0..6i64 {
        for e in g.edges().iter().filter(|e| e.tail == v) {
            count[e.head as usize] += count[v as usize];
        }
    }
    assert_eq!(full_time_paths(&g, DEFAULT_PATH_CAP).unwrap().len() as u64, count[5]);
}

#[test]
fn pic1_interval_whole_graph_by_membership() {
    let g = fixtures::pic1();
    let h = interval(&g, 0, 5).unwrap();
    let on_paths: BTreeSet<VertexId> = full_time_paths(&g, DEFAULT_PATH_CAP)
        .unwrap()
        .iter()
        .flat_map(|p| p.vertices(&g).unwrap())
        .collect();
    let got: BTreeSet<VertexId> = h.vertices().iter().map(|v| v.id).collect();
    assert_eq!(got, on_paths);
    assert_eq!(h, g);
}

#[test]
fn interval_of_minimal_is_itself() {
    let g = fixtures::minimal();
    assert_eq!(interval(&g, 0, 1).unwrap(), g);
}

/// Rows t1..t8, columns t1..t8: meets above the diagonal, joins below.
const PIC33_TABLE: [[i64; 8]; 8] = [
    [-1, 0, 1, 0, 1, 0, 1, 0],
    [3, -1, 2, 0, 0, 0, 0, 2],
    [3, 3, -1, 0, 1, 0, 1, 2],
    [5, 8, 9, -1, 4, 4, 4, 4],
    [5, 9, 9, 5, -1, 4, 5, 4],
    [7, 8, 9, 6, 7, -1, 6, 6],
    [7, 9, 9, 7, 7, 7, -1, 6],
    [9, 8, 9, 8, 9, 8, 9, -1],
];

#[test]
fn pic33_lattice_table_entry_for_entry() {
    let g = fixtures::pic33();
    let mut checked = 0;
    for (r, row) in PIC33_TABLE.iter().enumerate() {
        for (c, &want) in row.iter().enumerate() {
            if r == c {
                continue;
            }
            let (a, b) = (r as i64 + 1, c as i64 + 1);
            let mj = meet_join(&g, vp(&g, a), vp(&g, b)).unwrap();
            assert!(mj.unique, "t{a}, t{b}");
            let got = if c > r { mj.meet.vertex(&g) } else { mj.join.vertex(&g) };
            assert_eq!(got, Some(want), "row t{a} column t{b}");
            checked += 1;
        }
    }
    // The diagonal entries are meet(t,t) = join(t,t) = t.
    for a in 1..=8 {
        let mj = meet_join(&g, vp(&g, a), vp(&g, a)).unwrap();
        assert_eq!(mj.meet.vertex(&g), Some(a));
        assert_eq!(mj.join.vertex(&g), Some(a));
        checked += 1;
    }
    assert_eq!(checked, 64);
}

#[test]
fn verdicts_on_named_examples() {
    assert!(!is_tlg_star(&fixtures::pic1(), None).unwrap().verdict);
    assert!(is_tlg_star(&fixtures::sl3(), None).unwrap().verdict);
    assert!(!is_tlg_star(&fixtures::pic33(), None).unwrap().verdict);
    assert!(!is_tlg_star_star(&fixtures::sl27()).unwrap().verdict);
    assert!(is_tlg_star_star(&fixtures::planar_general()).unwrap().verdict);
    assert!(is_tlg_star_star(&fixtures::binary_split()).unwrap().verdict);
}

#[test]
fn sl27_meet_is_ambiguous() {
    let g = fixtures::sl27();
    let mj = meet_join(&g, vp(&g, 3), vp(&g, 4)).unwrap();
    assert!(!mj.unique);
    assert_eq!(mj.meet_candidates, vec![1, 2]);
}

#[test]
fn spine_freedom_on_star_fixtures() {
    for (name, g) in fixtures::star_fixtures() {
        for p in full_time_paths(&g, DEFAULT_PATH_CAP).unwrap() {
            let v = is_tlg_star(&g, Some(&p)).unwrap();
            assert!(v.verdict, "{name} from {:?}", p.edges);
            assert!(v.tower.unwrap().reproduces(&g), "{name}");
        }
    }
}

#[test]
fn pic1_fails_from_every_spine() {
    let g = fixtures::pic1();
    for p in full_time_paths(&g, DEFAULT_PATH_CAP).unwrap() {
        assert!(!is_tlg_star(&g, Some(&p)).unwrap().verdict);
    }
}

#[test]
fn interval_closure_on_star_fixtures() {
    for (name, g) in fixtures::star_fixtures() {
        for a in g.vertices() {
            for b in g.vertices() {
                if a.id == b.id || !order_leq(&g, vp(&g, a.id), vp(&g, b.id)).unwrap() {
                    continue;
                }
                let h = interval(&g, a.id, b.id).unwrap();
                assert!(is_tlg_star(&h, None).unwrap().verdict, "{name} [{}, {}]", a.id, b.id);
            }
        }
    }
}

#[test]
fn lattice_laws_on_star_fixtures() {
    for (name, g) in fixtures::star_fixtures() {
        let ids: Vec<VertexId> = g.vertices().iter().map(|v| v.id).collect();
        let meet = |a: VertexId, b: VertexId| meet_join(&g, vp(&g, a), vp(&g, b)).unwrap();
        for &a in &ids {
            for &b in &ids {
                let ab = meet(a, b);
                let ba = meet(b, a);
                assert!(ab.unique, "{name}: {a} {b}");
                assert_eq!(ab.meet.vertex(&g), ba.meet.vertex(&g));
                assert_eq!(ab.join.vertex(&g), ba.join.vertex(&g));
                for &c in &ids {
                    let m = |x: &Bound| x.vertex(&g).unwrap();
                    let left = meet(m(&ab.meet), c).meet;
                    let bc = meet(b, c);
                    let right = meet(a, m(&bc.meet)).meet;
                    assert_eq!(left.vertex(&g), right.vertex(&g), "{name} meet assoc {a} {b} {c}");
                    let left = meet(m(&ab.join), c).join;
                    let right = meet(a, m(&bc.join)).join;
                    assert_eq!(left.vertex(&g), right.vertex(&g), "{name} join assoc {a} {b} {c}");
                }
            }
        }
    }
}

#[test]
fn collapse_closure_for_truly_simple_cells() {
    for (name, g) in fixtures::star_fixtures() {
        for c in find_cells(&g, DEFAULT_PATH_CAP).unwrap().iter().filter(|c| c.truly_simple) {
            let h = cell_collapse(&g, c).unwrap();
            assert!(tlg_core::validate_tlg(&h).is_valid(), "{name}");
            assert!(is_tlg_star(&h, None).unwrap().verdict, "{name} collapse {:?} {:?}", c.side_a, c.side_b);
        }
    }
}

#[test]
fn pic34_cell_is_simple_not_truly_simple_and_collapse_breaks_star() {
    let g = fixtures::pic34();
    assert!(is_tlg_star(&g, None).unwrap().verdict);
    let cells = find_cells(&g, DEFAULT_PATH_CAP).unwrap();
    let c = cells
        .iter()
        .find(|c| c.side_a.edges == vec![0, 1] && c.side_b.edges == vec![2, 3])
        .expect("cell u-a-v / u-b-v");
    assert_eq!(c.classification(), Classification::Simple);
    // Brute-force: the undirected walk a-p-z-q-b stays inside the interval and avoids u, v.
    let inside: BTreeSet<VertexId> = interval(&g, 0, 6).unwrap().vertices().iter().map(|v| v.id).collect();
    for v in [1, 4, 2, 5, 3] {
        assert!(inside.contains(&v));
    }
    let h = cell_collapse(&g, c).unwrap();
    assert!(tlg_core::validate_tlg(&h).is_valid());
    assert!(!is_tlg_star(&h, None).unwrap().verdict);
}

#[test]
fn moralization_keeps_star() {
    for (name, g) in fixtures::star_fixtures() {
        let h = moralize(&g, DEFAULT_PATH_CAP).unwrap();
        assert!(is_tlg_star(&h, None).unwrap().verdict, "{name}");
    }
}

#[test]
fn tree_cells_are_half_cells_only() {
    let cells = find_cells(&fixtures::binary_split(), DEFAULT_PATH_CAP).unwrap();
    assert!(cells.iter().all(|c| c.kind != CellKind::Full));
}

#[test]
fn star_star_towers_rebuild_general_fixtures() {
    for g in [fixtures::sl25a(), fixtures::planar_general(), fixtures::binary_split()] {
        let v = is_tlg_star_star(&g).unwrap();
        assert!(v.tower.unwrap().reproduces(&g.with_kind(GraphKind::General)));
        assert!(v.embedded_tower.unwrap().reproduces(&v.embedding.graph));
    }
}

#[test]
fn simple_star_graphs_are_star_star() {
    for (name, g) in fixtures::star_fixtures() {
        assert!(is_tlg_star_star(&g).unwrap().verdict, "{name}");
    }
}

/// Random time-like trees: each new vertex hangs below a random earlier vertex.
fn arb_tree() -> impl Strategy<Value = TimeLikeGraph> {
    prop::collection::vec((0usize..100, 1u32..100), 1..12).prop_map(|spec| {
        let mut vs = vec![(0i64, 0.0f64)];
        let mut es = Vec::new();
        for (i, (parent, dt)) in spec.into_iter().enumerate() {
            let p = parent % vs.len();
            let t = vs[p].1 + dt as f64 / 100.0;
            let id = (i + 1) as i64;
            vs.push((id, t));
            es.push((i as i64, vs[p].0, id));
        }
        TimeLikeGraph::from_parts(GraphKind::General, &vs, &es).unwrap()
    })
}

proptest! {
    #[test]
    fn trees_are_star_star(g in arb_tree()) {
        let v = is_tlg_star_star(&g).unwrap();
        prop_assert!(v.verdict);
        prop_assert!(v.tower.unwrap().reproduces(&g));
        prop_assert!(find_cells(&g, DEFAULT_PATH_CAP).unwrap().iter().all(|c| c.kind != CellKind::Full));
    }

    #[test]
    fn embedding_preserves_order_on_trees(g in arb_tree(), max in any::<bool>()) {
        let mode = if max { EmbedMode::Maximal } else { EmbedMode::Minimal };
        let e = embed(&g, mode).unwrap();
        for a in g.vertices() {
            for b in g.vertices() {
                let (p, q) = (vp(&g, a.id), vp(&g, b.id));
                prop_assert_eq!(order_leq(&g, p, q).unwrap(), order_leq(&e.graph, p, q).unwrap());
            }
        }
    }
}
