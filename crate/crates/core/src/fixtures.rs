//! Small arrays and modules used throughout the tests and by the `figures`
//! command.
//!
//! Array coordinates use the bottom-left-minimum convention: the first
//! coordinate is the row counted from the bottom, the second the column.

use std::sync::Arc;

use crate::graph::{frac, q, Divisor, EdgePiece, GraphPoint, MetricGraph, PLFunction};
use crate::hyperarray::DotArray;
use crate::module::TropicalModule;

fn arr(r: u8, dots: &[&[u8]]) -> DotArray {
    DotArray::in_cube(r, dots.iter().map(|x| x.to_vec())).expect("fixture lies in its cube")
}

/// Three dots with axis ranks `(2, 1, 2)`.
pub fn fig2() -> DotArray {
    arr(2, &[&[1, 0, 0], &[2, 1, 1], &[0, 1, 2]])
}

/// A totally rankable array of rank 2 in `[2]^3` with no redundant dots.
pub fn fig3() -> DotArray {
    arr(2, &[&[1, 0, 0], &[2, 1, 1], &[0, 2, 1], &[0, 1, 2]])
}

/// [`fig3`] together with its redundant positions.
pub fn fig4() -> DotArray {
    fig3().meet_closure()
}

/// The full `[1]^1` array.
pub fn fig5_line() -> DotArray {
    arr(1, &[&[0], &[1]])
}

/// Closure of the anti-diagonal of `[1]^2`.
pub fn fig5_left() -> DotArray {
    arr(1, &[&[0, 0], &[0, 1], &[1, 0]])
}

/// The diagonal of `[1]^2`.
pub fn fig5_right() -> DotArray {
    arr(1, &[&[0, 0], &[1, 1]])
}

/// Satisfies P1-P4.
pub fn fig6_left() -> DotArray {
    arr(2, &[&[0, 0], &[1, 1], &[1, 2], &[2, 1]])
}

/// Fails P3.
pub fn fig6_middle() -> DotArray {
    arr(2, &[&[2, 0], &[2, 1], &[1, 1], &[0, 1]])
}

/// Fails P4 at `{(0,1), (0,2)}`.
pub fn fig6_right() -> DotArray {
    arr(2, &[&[0, 0], &[0, 1], &[0, 2], &[1, 0], &[2, 0]])
}

/// Interval `v -> u` of length 2 with `D = 2v` and three generators:
///
/// * `f1`: slope 1 up to `4/3`, then 0,
/// * `f2`: slope 2 up to `2/3`, then 1,
/// * `f3`: slope 2 up to `1`, then 0,
///
/// all vanishing at `v`.
pub fn interval_module() -> TropicalModule {
    let graph = Arc::new(MetricGraph::interval(q(2)).expect("valid interval"));
    let piece = |cut, slopes: [i64; 2]| EdgePiece {
        cuts: vec![cut],
        slopes: slopes.to_vec(),
    };
    let gens = [
        piece(frac(4, 3), [1, 0]),
        piece(frac(2, 3), [2, 1]),
        piece(q(1), [2, 0]),
    ]
    .into_iter()
    .map(|p| PLFunction::new(graph.clone(), vec![p], 0, q(0)).expect("continuous"))
    .collect();
    TropicalModule::new(Divisor::point(GraphPoint::Vertex(0), 2), gens).expect("generators lie in R(2v)")
}

/// The midpoint `x` of the interval fixture.
pub fn interval_x() -> GraphPoint {
    GraphPoint::Edge { edge: 0, offset: q(1) }
}

/// Two edges of length 1 from `u` to `v`, `D = 3u`, generated by the
/// constant 0 and the function with slope 1 along both edges from `u`.
pub fn loop_module() -> TropicalModule {
    let graph = Arc::new(MetricGraph::loop_graph(q(1)).expect("valid loop"));
    let constant = PLFunction::constant(graph.clone(), q(0));
    let rising = PLFunction::edge_linear(graph, &[1, 1], 0, q(0)).expect("continuous");
    TropicalModule::new(Divisor::point(GraphPoint::Vertex(0), 3), vec![constant, rising]).expect("generators lie in R(3u)")
}

/// The vertex `u` of the loop fixture.
pub fn loop_u() -> GraphPoint {
    GraphPoint::Vertex(0)
}
