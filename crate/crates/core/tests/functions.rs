use std::sync::Arc;

use itertools::Itertools;
use num_traits::Signed;
use proptest::prelude::*;

use tropical_series::fixtures::{interval_module, loop_module};
use tropical_series::graph::{
    frac, q, tropical_min, Divisor, EdgePiece, MetricGraph, PLFunction, Q,
};
use tropical_series::hyperarray::{enumerate_permutation_arrays, standard_permutation_array, Budget, DotArray};
use tropical_series::module::{find_dependence, lrp_bnrp_violations, verify_dependence, TropicalModule};
use tropical_series::properties::{billey_vakil_counterexample, check_p1, check_p2, check_p3, check_p4};
use tropical_series::realization::{bnrp_rank2_witness, realize_on_star};

#[derive(Debug, Clone, Copy)]
enum Kind {
    Interval,
    Star,
    Loop,
}

fn graph_of(kind: Kind) -> Arc<MetricGraph> {
    Arc::new(match kind {
        Kind::Interval => MetricGraph::interval(q(3)).unwrap(),
        Kind::Star => MetricGraph::star(3, q(2)).unwrap(),
        Kind::Loop => MetricGraph::loop_graph(q(2)).unwrap(),
    })
}

/// Cells as `(length in quarters, slope)`; the cells are stretched or cut
/// to fill the edge.
fn piece(length: &Q, cells: &[(u8, i64)]) -> EdgePiece {
    let mut cuts = Vec::new();
    let mut slopes = Vec::new();
    let mut at = q(0);
    for &(w, s) in cells {
        slopes.push(s);
        at += frac(w as i64, 4);
        if at >= *length {
            break;
        }
        cuts.push(at.clone());
    }
    if slopes.len() == cuts.len() {
        cuts.pop();
    }
    EdgePiece { cuts, slopes }
}

fn build(kind: Kind, cells: &[Vec<(u8, i64)>], value: i64) -> PLFunction {
    let graph = graph_of(kind);
    let pieces = match kind {
        Kind::Loop => {
            let len = graph.edges()[0].length.clone();
            let first = piece(&len, &cells[0]);
            // Cells in reverse order give the same total rise.
            let widths: Vec<Q> = first
                .cuts
                .iter()
                .chain([&len])
                .scan(q(0), |prev, c| {
                    let w = c - &*prev;
                    *prev = c.clone();
                    Some(w)
                })
                .collect();
            let mut at = q(0);
            let mut cuts = Vec::new();
            for w in widths.iter().rev().take(widths.len() - 1) {
                at += w;
                cuts.push(at.clone());
            }
            let slopes = first.slopes.iter().rev().copied().collect();
            vec![first, EdgePiece { cuts, slopes }]
        }
        _ => graph
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| piece(&edge.length, &cells[e % cells.len()]))
            .collect(),
    };
    PLFunction::new(graph, pieces, 0, q(value)).unwrap()
}

fn arb_kind() -> impl Strategy<Value = Kind> {
    prop_oneof![Just(Kind::Interval), Just(Kind::Star), Just(Kind::Loop)]
}

fn arb_cells() -> impl Strategy<Value = Vec<Vec<(u8, i64)>>> {
    proptest::collection::vec(proptest::collection::vec((1u8..=4, -3i64..=3), 1..=4), 3)
}

fn arb_function() -> impl Strategy<Value = PLFunction> {
    (arb_kind(), arb_cells(), -3i64..=3).prop_map(|(k, c, v)| build(k, &c, v))
}

fn arb_family(n: usize) -> impl Strategy<Value = Vec<PLFunction>> {
    (arb_kind(), proptest::collection::vec((arb_cells(), -3i64..=3), n))
        .prop_map(|(k, fs)| fs.iter().map(|(c, v)| build(k, c, *v)).collect())
}

/// Smallest `D` with every function in `R(D)`.
fn common_divisor(fns: &[PLFunction]) -> Divisor {
    let mut d = Divisor::zero();
    for f in fns {
        for (p, n) in f.divisor_of().entries() {
            if n < 0 && -n > d.get(p) {
                d.add_at(p.clone(), -n - d.get(p));
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn principal_divisors_have_degree_zero(f in arb_function()) {
        prop_assert_eq!(f.divisor_of().degree(), 0);
    }

    #[test]
    fn functions_are_continuous_at_vertices(f in arb_function()) {
        let eps = frac(1, 1000);
        for (e, edge) in f.graph().edges().iter().enumerate() {
            let near_start = f.value_on_edge(e, &eps);
            let near_end = f.value_on_edge(e, &(&edge.length - &eps));
            let bound = &eps * q(3);
            prop_assert!((near_start - f.vertex_value(edge.from)).abs() <= bound);
            prop_assert!((near_end - f.vertex_value(edge.to)).abs() <= bound);
            prop_assert_eq!(f.value_on_edge(e, &edge.length), f.vertex_value(edge.to).clone());
        }
    }

    #[test]
    fn order_vanishes_where_the_function_is_linear(f in arb_function(), k in 1i64..48) {
        for (e, edge) in f.graph().edges().iter().enumerate() {
            let t = &edge.length * frac(2 * k - 1, 96);
            if !f.pieces()[e].cuts.contains(&t) {
                let p = f.graph().point(e, t).unwrap();
                prop_assert_eq!(f.ord_at(&p), 0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tropical_minimum_stays_in_r_of_d(fns in arb_family(3), shifts in proptest::collection::vec(-4i64..=4, 3)) {
        let d = common_divisor(&fns);
        for f in &fns {
            prop_assert!(f.in_r_of_d(&d));
        }
        let shifts: Vec<Q> = shifts.into_iter().map(|a| frac(a, 2)).collect();
        let g = tropical_min(&fns, &shifts).unwrap();
        prop_assert!(g.in_r_of_d(&d));
        prop_assert_eq!(g.divisor_of().degree(), 0);
    }

    #[test]
    fn minimum_is_pointwise(fns in arb_family(2), shifts in proptest::collection::vec(-4i64..=4, 2), k in 0i64..=16) {
        let g = tropical_min(&fns, &[q(shifts[0]), q(shifts[1])]).unwrap();
        for (e, edge) in g.graph().edges().iter().enumerate() {
            let t = &edge.length * frac(k, 16);
            let want = fns.iter().zip(&shifts).map(|(f, a)| f.value_on_edge(e, &t) + q(*a)).min().unwrap();
            prop_assert_eq!(g.value_on_edge(e, &t), want);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dependence_certificates_verify(fns in arb_family(3)) {
        let search = find_dependence(&fns).unwrap();
        if let Some(cert) = search.certificate {
            prop_assert!(verify_dependence(&fns, &cert.shifts).unwrap().holds());
        }
    }

    #[test]
    fn common_shift_keeps_the_verdict(fns in arb_family(3), shifts in proptest::collection::vec(-4i64..=4, 3), c in -5i64..=5) {
        let base: Vec<Q> = shifts.iter().map(|a| frac(*a, 3)).collect();
        let lifted: Vec<Q> = base.iter().map(|a| a + frac(c, 7)).collect();
        prop_assert_eq!(
            verify_dependence(&fns, &base).unwrap().holds(),
            verify_dependence(&fns, &lifted).unwrap().holds()
        );
    }

    #[test]
    fn rank_two_witnesses_are_tropical_combinations(
        index in 0usize..1574,
        e1 in 0usize..4,
        e2 in 0usize..4,
        t1 in 0i64..=12,
        t2 in 0i64..=12,
    ) {
        let arrays = enumerate_permutation_arrays(2, 4, Budget::Default).unwrap();
        let real = realize_on_star(&arrays[index], q(3)).unwrap();
        let v1 = real.point(e1, frac(t1, 4)).unwrap();
        let v2 = real.point(e2, frac(t2, 4)).unwrap();
        let w = bnrp_rank2_witness(&real, &v1, &v2).unwrap();
        let (fns, shifts): (Vec<PLFunction>, Vec<Q>) = real
            .module()
            .generators()
            .iter()
            .zip(real.generator_shifts(&w.terms))
            .filter_map(|(f, a)| a.map(|a| (f.clone(), a)))
            .unzip();
        prop_assert_eq!(tropical_min(&fns, &shifts).unwrap(), w.function.clone());
        let e = Divisor::from_points([(v1, 1), (v2, 1)]);
        prop_assert!(real.module().check_bnrp(&w.function, &e));
    }
}

fn arr(r: u8, dots: &[&[u8]]) -> DotArray {
    DotArray::in_cube(r, dots.iter().map(|x| x.to_vec())).unwrap()
}

#[test]
fn local_arrays_of_realizations_satisfy_p1_p2_p3() {
    for d in 1..=3 {
        for r in 1..=2 {
            for p in enumerate_permutation_arrays(r, d, Budget::Default).unwrap() {
                let real = realize_on_star(&p, q(1)).unwrap();
                let local = real.module().local_array_at(&real.center()).unwrap();
                assert!(check_p1(&local).verdict, "{:?}", p.array().dots());
                assert!(check_p2(&local, r).verdict, "{:?}", p.array().dots());
                assert!(check_p3(&local, r).verdict, "{:?}", p.array().dots());
            }
        }
    }
}

#[test]
fn generic_points_carry_the_standard_closure() {
    let standard = arr(1, &[&[0, 0], &[0, 1], &[1, 0]]);
    let interval = interval_module();
    for t in [frac(1, 3), frac(5, 6), frac(7, 6), frac(9, 5)] {
        let p = interval.graph().point(0, t).unwrap();
        assert_eq!(interval.local_array_at(&p).unwrap(), standard);
    }
    let loop_ = loop_module();
    for (e, t) in [(0, frac(1, 2)), (1, frac(1, 3))] {
        let p = loop_.graph().point(e, t).unwrap();
        assert_eq!(loop_.local_array_at(&p).unwrap(), standard);
    }
    let real = realize_on_star(&standard_permutation_array(2, 3).unwrap(), q(2)).unwrap();
    let closure = standard_permutation_array(2, 2).unwrap().redundant_closure();
    for e in 0..3 {
        let p = real.point(e, frac(2, 3)).unwrap();
        assert_eq!(real.module().local_array_at(&p).unwrap(), closure);
    }
}

#[test]
fn rank_one_realizations_pass_the_axioms() {
    for d in 1..=4 {
        for p in enumerate_permutation_arrays(1, d, Budget::Default).unwrap() {
            let real = realize_on_star(&p, q(1)).unwrap();
            let report = real.module().check_tls_axioms(1).unwrap();
            assert!(report.passes(), "{:?}: {report:?}", p.array().dots());
        }
    }
}

#[test]
fn counterexample_still_realizes() {
    let p = billey_vakil_counterexample();
    let real = realize_on_star(&p, q(1)).unwrap();
    assert_eq!(real.module().generators().len(), 11);
    assert!(real.check_generator_dependence().verdict);
    assert!(!check_p4(&p.redundant_closure(), 3).verdict);
}

#[test]
fn fixtures_never_satisfy_lrp_without_bnrp() {
    let modules: Vec<TropicalModule> = vec![
        interval_module(),
        loop_module(),
        realize_on_star(&standard_permutation_array(2, 3).unwrap(), q(1)).unwrap().module().clone(),
    ];
    for (m, r) in modules.iter().zip([1u8, 1, 2]) {
        for e in m.critical_divisors(r) {
            for f in m.generators() {
                m.check_lrp(f, &e).unwrap();
            }
            if let Some(f) = m.find_bnrp_lrp_witness(&e).unwrap() {
                assert!(m.check_bnrp(&f, &e));
            }
        }
    }
    let m = interval_module();
    for (f, g) in m.generators().iter().tuple_combinations() {
        let h = tropical_min(&[f.clone(), g.clone()], &[q(0), frac(1, 3)]).unwrap();
        for e in m.critical_divisors(1) {
            // Combinations with slopes outside the module report an error.
            let _ = m.check_lrp(&h, &e);
        }
    }
    assert_eq!(lrp_bnrp_violations(), 0);
}
