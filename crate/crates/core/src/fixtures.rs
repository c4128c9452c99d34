//! Example graphs used throughout the test-suite and the CLI.

use crate::graph::{GraphKind, TimeLikeGraph};

fn build(kind: GraphKind, vs: &[(i64, f64)], es: &[(i64, i64, i64)]) -> TimeLikeGraph {
    TimeLikeGraph::from_parts(kind, vs, es).expect("fixture is well formed")
}

fn uniform(n: usize) -> Vec<(i64, f64)> {
    (0..=n).map(|j| (j as i64, j as f64 / n as f64)).collect()
}

/// One edge from time 0 to time 1.
pub fn minimal() -> TimeLikeGraph {
    build(GraphKind::Simple, &[(0, 0.0), (1, 1.0)], &[(0, 0, 1)])
}

/// Two parallel edges between times 0 and 1.
pub fn one_cell() -> TimeLikeGraph {
    build(GraphKind::Simple, &[(0, 0.0), (1, 1.0)], &[(0, 0, 1), (1, 0, 1)])
}

/// A TLG that is not a TLG*. Edge ids 0..7 are E01, E02, E14, E13, E23, E24, E45, E35.
pub fn pic1() -> TimeLikeGraph {
    build(
        GraphKind::Simple,
        &uniform(5),
        &[(0, 0, 1), (1, 0, 2), (2, 1, 4), (3, 1, 3), (4, 2, 3), (5, 2, 4), (6, 4, 5), (7, 3, 5)],
    )
}

/// A non-planar TLG*: a chain 0..7 with chords 1→4, 2→5, 3→6.
pub fn sl3() -> TimeLikeGraph {
    build(
        GraphKind::Simple,
        &uniform(7),
        &[
            (0, 0, 1),
            (1, 1, 2),
            (2, 2, 3),
            (3, 3, 4),
            (4, 4, 5),
            (5, 5, 6),
            (6, 6, 7),
            (7, 1, 4),
            (8, 2, 5),
            (9, 3, 6),
        ],
    )
}

/// Ten-vertex graph whose order is a lattice although it is not a TLG*.
pub fn pic33() -> TimeLikeGraph {
    build(
        GraphKind::Simple,
        &uniform(9),
        &[
            (0, 0, 1),
            (1, 0, 2),
            (2, 0, 4),
            (3, 1, 3),
            (4, 2, 3),
            (5, 1, 5),
            (6, 4, 5),
            (7, 4, 6),
            (8, 5, 7),
            (9, 6, 7),
            (10, 6, 8),
            (11, 2, 8),
            (12, 3, 9),
            (13, 7, 9),
            (14, 8, 9),
        ],
    )
}

/// Coupling and branching graph: t = 0, 1/3, 2/3, 1 with doubled first and last edges.
pub fn coupling() -> TimeLikeGraph {
    build(
        GraphKind::Simple,
        &[(0, 0.0), (1, 1.0 / 3.0), (2, 2.0 / 3.0), (3, 1.0)],
        &[(0, 0, 1), (1, 0, 1), (2, 1, 2), (3, 2, 3), (4, 2, 3)],
    )
}

/// Two one-cells in series.
pub fn double_cell() -> TimeLikeGraph {
    build(GraphKind::Simple, &[(0, 0.0), (1, 0.5), (2, 1.0)], &[(0, 0, 1), (1, 0, 1), (2, 1, 2), (3, 1, 2)])
}

/// Nested cells: chain 0..4 with chords 0→4 and 1→3.
pub fn nested() -> TimeLikeGraph {
    build(
        GraphKind::Simple,
        &uniform(4),
        &[(0, 0, 1), (1, 1, 2), (2, 2, 3), (3, 3, 4), (4, 0, 4), (5, 1, 3)],
    )
}

/// A TLG* containing a simple cell `u-a-v` / `u-b-v` whose sides are joined by the
/// non-time path `a-p-z-q-b`. Ids: u=0, a=1, z=2, b=3, p=4, q=5, v=6.
pub fn pic34() -> TimeLikeGraph {
    build(
        GraphKind::Simple,
        &[(0, 0.0), (1, 0.3), (2, 0.35), (3, 0.4), (4, 0.6), (5, 0.7), (6, 1.0)],
        &[
            (0, 0, 1),
            (1, 1, 6),
            (2, 0, 3),
            (3, 3, 6),
            (4, 0, 2),
            (5, 2, 4),
            (6, 2, 5),
            (7, 1, 4),
            (8, 3, 5),
            (9, 4, 6),
            (10, 5, 6),
        ],
    )
}

/// General TLG in which the meet of vertices 3 and 4 is not unique.
pub fn sl27() -> TimeLikeGraph {
    build(
        GraphKind::General,
        &[(1, 0.0), (2, 0.1), (3, 0.6), (4, 0.7)],
        &[(0, 1, 3), (1, 1, 4), (2, 2, 3), (3, 2, 4)],
    )
}

/// General TLG with two connected components.
pub fn sl25a() -> TimeLikeGraph {
    build(
        GraphKind::General,
        &[(0, 0.0), (1, 0.5), (2, 0.8), (3, 0.2), (4, 1.0)],
        &[(0, 0, 1), (1, 0, 2), (2, 3, 4)],
    )
}

/// Planar general TLG whose entrances share one time and whose exits share another.
pub fn planar_general() -> TimeLikeGraph {
    build(
        GraphKind::General,
        &[(0, 0.0), (1, 0.0), (2, 0.5), (3, 1.0), (4, 1.0)],
        &[(0, 0, 2), (1, 1, 2), (2, 2, 3), (3, 2, 4)],
    )
}

/// Time-like tree that splits once.
pub fn binary_split() -> TimeLikeGraph {
    build(GraphKind::General, &[(0, 0.0), (1, 0.5), (2, 1.0), (3, 1.0)], &[(0, 0, 1), (1, 1, 2), (2, 1, 3)])
}

/// Simple graphs that are TLG*, with their names.
pub fn star_fixtures() -> Vec<(&'static str, TimeLikeGraph)> {
    vec![
        ("minimal", minimal()),
        ("one-cell", one_cell()),
        ("sl3", sl3()),
        ("coupling", coupling()),
        ("double-cell", double_cell()),
        ("nested", nested()),
        ("pic34", pic34()),
    ]
}

/// Every named fixture.
pub fn all() -> Vec<(&'static str, TimeLikeGraph)> {
    let mut v = star_fixtures();
    v.extend([
        ("pic1", pic1()),
        ("pic33", pic33()),
        ("sl27", sl27()),
        ("sl25a", sl25a()),
        ("planar-general", planar_general()),
        ("binary-split", binary_split()),
    ]);
    v
}

pub fn by_name(name: &str) -> Option<TimeLikeGraph> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, g)| g)
}
