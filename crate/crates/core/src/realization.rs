//! Modules on star graphs built from permutation arrays.
//!
//! For a permutation array `P ⊆ [r]^d` the star has center `v` and `d`
//! edges of a common length `ℓ`, edge `i` running from `v` to leaf `w_{i+1}`.
//! The generator `f_x` has slope `x_i` along edge `i` and vanishes at `v`.
//! The divisor is `s·v` with `s` the largest coordinate sum of a dot.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::{q, tropical_min, Divisor, GraphError, GraphPoint, MetricGraph, PLFunction, Q};
use crate::hyperarray::{enumerate_permutation_arrays, precedes, ArrayError, Budget, PermutationArray, Position};
use crate::module::{ModuleError, TropicalModule};
use crate::properties::{check_p3, PropertyReport};

#[derive(Debug, Error)]
pub enum RealizationError {
    #[error("edge length must be positive")]
    NonPositiveLength,
    #[error("the rank-2 construction needs rank 2, got {0}")]
    RankNotTwo(u8),
    #[error("rank-2 construction: {0}")]
    Assumption(String),
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

#[derive(Debug, Clone)]
pub struct StarRealization {
    array: PermutationArray,
    length: Q,
    s: u32,
    module: TropicalModule,
}

pub fn realize_on_star(p: &PermutationArray, length: Q) -> Result<StarRealization, RealizationError> {
    if !length.is_positive() {
        return Err(RealizationError::NonPositiveLength);
    }
    let graph = Arc::new(MetricGraph::star(p.dim(), length.clone())?);
    let s = p
        .array()
        .dots()
        .iter()
        .map(|x| x.iter().map(|&a| a as u32).sum::<u32>())
        .max()
        .unwrap_or(0);
    let generators = p
        .array()
        .dots()
        .iter()
        .map(|x| star_function(&graph, x))
        .collect::<Result<Vec<_>, _>>()?;
    let divisor = Divisor::point(GraphPoint::Vertex(0), s as i64);
    let module = TropicalModule::new(divisor, generators)?;
    Ok(StarRealization {
        array: p.clone(),
        length,
        s,
        module,
    })
}

fn star_function(graph: &Arc<MetricGraph>, x: &[u8]) -> Result<PLFunction, GraphError> {
    let slopes: Vec<i64> = x.iter().map(|&a| a as i64).collect();
    PLFunction::edge_linear(graph.clone(), &slopes, 0, q(0))
}

impl StarRealization {
    pub fn array(&self) -> &PermutationArray {
        &self.array
    }

    pub fn length(&self) -> &Q {
        &self.length
    }

    /// Multiplicity of the center in the divisor.
    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn module(&self) -> &TropicalModule {
        &self.module
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        self.module.graph()
    }

    pub fn center(&self) -> GraphPoint {
        GraphPoint::Vertex(0)
    }

    /// `f_x` for any position `x` of the box.
    pub fn function_for(&self, x: &[u8]) -> Result<PLFunction, RealizationError> {
        self.array.array().shape().check(x)?;
        Ok(star_function(self.graph(), x)?)
    }

    /// The point at distance `t` from the center along edge `edge`.
    pub fn point(&self, edge: usize, t: Q) -> Result<GraphPoint, RealizationError> {
        Ok(self.graph().point(edge, t)?)
    }

    /// Edge and distance from the center; the center itself is reported on
    /// edge 0.
    pub fn locate(&self, p: &GraphPoint) -> Result<(usize, Q), RealizationError> {
        self.graph().check_point(p)?;
        Ok(match p {
            GraphPoint::Vertex(0) => (0, Q::zero()),
            GraphPoint::Vertex(leaf) => (leaf - 1, self.length.clone()),
            GraphPoint::Edge { edge, offset } => (*edge, offset.clone()),
        })
    }

    /// P3 on the dots of `P`. Generators are linear on every edge, so this
    /// decides tropical dependence of every `(r+2)`-subset of them.
    pub fn check_generator_dependence(&self) -> PropertyReport {
        check_p3(self.array.array(), self.array.rank())
    }

    /// Shifts on the generators reproducing `min_k (f_{x_k} + a_k)` for
    /// positions `x_k` of the closure, using `f_x = min { f_p : p ∈ P, p ⪰ x }`.
    /// `None` marks a generator that does not take part.
    pub fn generator_shifts(&self, terms: &[(Position, Q)]) -> Vec<Option<Q>> {
        self.array
            .array()
            .dots()
            .iter()
            .map(|p| terms.iter().filter(|(x, _)| precedes(x, p)).map(|(_, a)| a.clone()).min())
            .collect()
    }

    /// `{"array":..,"length":..,"s":..,"graph":..,"divisor":..,"generators":[..]}`.
    pub fn to_json(&self) -> Value {
        let mut v = self.module.to_json();
        v["array"] = self.array.array().to_json();
        v["length"] = json!(self.length.to_string());
        v["s"] = json!(self.s);
        v
    }
}

/// Which branch of the rank-2 construction produced a witness. Points are
/// ordered so that `v1` is at least as far from the center as `v2`, on
/// edges `i` and `j`; `x2` coordinates are read on `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rank2Case {
    /// Both points on one edge, or a point at the center.
    SameEdge,
    /// `x1 = (1, 1)`, `x2 = (1, 2)`, `ℓ1 ≥ 2ℓ2`.
    TiedJumpLowFar,
    /// `x1 = (1, 1)`, `x2 = (1, 2)`, `ℓ1 < 2ℓ2`.
    TiedJumpLowNear,
    /// `x1 = (1, 1)`, `x2 = (2, 2)`.
    TiedJumpHigh,
    /// `x1 = (1, 0)`, `x2 = (1, 1)`.
    Split11,
    /// `x1 = (1, 0)`, `x2 = (1, 2)`.
    Split12,
    /// `x1 = (1, 0)`, `x2 = (2, 1)`.
    Split21,
    /// `x1 = (1, 0)`, `x2 = (2, 2)`, `ℓ1 ≥ 2ℓ2`.
    Split22Far,
    /// `x1 = (1, 0)`, `x2 = (2, 2)`, `ℓ1 < 2ℓ2`.
    Split22Near,
}

impl Rank2Case {
    pub const ALL: [Rank2Case; 9] = [
        Rank2Case::SameEdge,
        Rank2Case::TiedJumpLowFar,
        Rank2Case::TiedJumpLowNear,
        Rank2Case::TiedJumpHigh,
        Rank2Case::Split11,
        Rank2Case::Split12,
        Rank2Case::Split21,
        Rank2Case::Split22Far,
        Rank2Case::Split22Near,
    ];
}

impl fmt::Display for Rank2Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rank2Case::SameEdge => "same edge",
            Rank2Case::TiedJumpLowFar => "x1=(1,1), x2=(1,2), l1>=2l2",
            Rank2Case::TiedJumpLowNear => "x1=(1,1), x2=(1,2), l1<2l2",
            Rank2Case::TiedJumpHigh => "x1=(1,1), x2=(2,2)",
            Rank2Case::Split11 => "x1=(1,0), x2=(1,1)",
            Rank2Case::Split12 => "x1=(1,0), x2=(1,2)",
            Rank2Case::Split21 => "x1=(1,0), x2=(2,1)",
            Rank2Case::Split22Far => "x1=(1,0), x2=(2,2), l1>=2l2",
            Rank2Case::Split22Near => "x1=(1,0), x2=(2,2), l1<2l2",
        };
        f.write_str(name)
    }
}

/// A combination `min_k (f_{x_k} + a_k)` over closure positions `x_k`.
#[derive(Debug, Clone)]
pub struct Rank2Witness {
    pub case: Rank2Case,
    pub terms: Vec<(Position, Q)>,
    pub function: PLFunction,
}

/// Explicit element of the module satisfying BNRP for `E = v1 + v2` when
/// `P` has rank 2.
///
/// On one edge at distances `ℓ2 ≤ ℓ1` the witness is
/// `min { f_z, f_y + ℓ2, f_x + ℓ1 + ℓ2 }` with `x_i, y_i, z_i = 0, 1, 2`:
/// its slope on the edge drops from 2 to 1 at `ℓ2` and from 1 to 0 at `ℓ1`.
/// On two edges the jumps `x1 ⪰ p_i`, `x2 ⪰ x1 + p_j` and `y1 ⪰ p_j` of the
/// rank array select one of eight shapes. For `x1 = (1, 1)`, `x2 = (1, 2)`
/// the middle shift is `min(ℓ2, ℓ1 - ℓ2)`: with `ℓ2` alone the last term
/// would cut edge `j` at `ℓ1 / 2` whenever `ℓ1 < 2ℓ2`. A point at the center counts as
/// distance 0 on the other point's edge.
pub fn bnrp_rank2_witness(
    real: &StarRealization,
    v1: &GraphPoint,
    v2: &GraphPoint,
) -> Result<Rank2Witness, RealizationError> {
    let p = &real.array;
    if p.rank() != 2 {
        return Err(RealizationError::RankNotTwo(p.rank()));
    }
    let (mut e1, mut l1) = real.locate(v1)?;
    let (mut e2, mut l2) = real.locate(v2)?;
    if l1 < l2 {
        std::mem::swap(&mut e1, &mut e2);
        std::mem::swap(&mut l1, &mut l2);
    }
    if l2.is_zero() {
        e2 = e1;
    }
    let d = p.dim();
    let unit = |k: usize| {
        let mut x = vec![0u8; d];
        x[k] = 1;
        x
    };
    let (case, terms) = if e1 == e2 {
        let i = e1;
        let pick = |v: u8| {
            p.array()
                .dots()
                .iter()
                .find(|x| x[i] == v)
                .cloned()
                .ok_or_else(|| RealizationError::Assumption(format!("no dot with coordinate {v} on axis {i}")))
        };
        let terms = vec![(pick(2)?, q(0)), (pick(1)?, l2.clone()), (pick(0)?, &l1 + &l2)];
        (Rank2Case::SameEdge, terms)
    } else {
        let (i, j) = (e1, e2);
        let ranks = p.rank_array();
        let expect_rank = |x: &[u8], want: i32| {
            let got = ranks.get(x);
            if got == want {
                Ok(())
            } else {
                Err(RealizationError::Assumption(format!("rank at {x:?} is {got}, expected {want}")))
            }
        };
        expect_rank(&unit(i), 1)?;
        let x1 = p.find_jump(&unit(i))?;
        let mut up = x1.clone();
        up[j] += 1;
        if up[j] > 2 {
            return Err(RealizationError::Assumption(format!("x1 = {x1:?} has x1_j = 2")));
        }
        expect_rank(&up, 0)?;
        let x2 = p.find_jump(&up)?;
        let zero = vec![0u8; d];
        let bad = |what: &str| RealizationError::Assumption(format!("{what}: x1 = {x1:?}, x2 = {x2:?}"));
        if x1[j] >= 1 {
            if (x1[i], x1[j], x2[j]) != (1, 1, 2) {
                return Err(bad("tied jump shape"));
            }
            match x2[i] {
                1 if l1 >= q(2) * &l2 => (
                    Rank2Case::TiedJumpLowFar,
                    vec![(x2.clone(), q(0)), (x1.clone(), l2.clone()), (zero, l1.clone())],
                ),
                1 => (
                    Rank2Case::TiedJumpLowNear,
                    vec![(x2.clone(), q(0)), (x1.clone(), &l1 - &l2), (zero, l1.clone())],
                ),
                2 => (
                    Rank2Case::TiedJumpHigh,
                    vec![(x2.clone(), q(0)), (x1.clone(), l2.clone()), (zero, &l2 + &l1)],
                ),
                _ => return Err(bad("tied jump shape")),
            }
        } else {
            if x1[i] != 1 {
                return Err(bad("split jump shape"));
            }
            let y1 = p.find_jump(&unit(j))?;
            if (y1[i], y1[j]) != (0, 1) {
                return Err(RealizationError::Assumption(format!("y1 = {y1:?} is not (0,1) on (i,j)")));
            }
            let two = q(2);
            let (case, a1, a2) = match (x2[i], x2[j]) {
                (1, 1) => (Rank2Case::Split11, l2.clone(), l1.clone()),
                (1, 2) => (Rank2Case::Split12, &two * &l2, l1.clone()),
                (2, 1) => (Rank2Case::Split21, l2.clone(), &l2 + &l1),
                (2, 2) if l1 >= &two * &l2 => (Rank2Case::Split22Far, &two * &l2, &two * &l2 + &l1),
                (2, 2) => (Rank2Case::Split22Near, &two * &l2, &two * &l1),
                _ => return Err(bad("split jump shape")),
            };
            (case, vec![(x2.clone(), q(0)), (x1.clone(), a1), (y1, a2)])
        }
    };
    let fns = terms
        .iter()
        .map(|(x, _)| real.function_for(x))
        .collect::<Result<Vec<_>, _>>()?;
    let shifts: Vec<Q> = terms.iter().map(|(_, a)| a.clone()).collect();
    let function = tropical_min(&fns, &shifts)?;
    Ok(Rank2Witness { case, terms, function })
}

/// `count` sparse permutation arrays of rank `r` and dimension `d`, drawn
/// with replacement from the full enumeration.
pub fn random_sparse_arrays(r: u8, d: usize, count: usize, seed: u64) -> Result<Vec<PermutationArray>, ArrayError> {
    let sparse: Vec<PermutationArray> = enumerate_permutation_arrays(r, d, Budget::Default)?
        .into_iter()
        .filter(PermutationArray::is_sparse)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .filter_map(|_| sparse.choose(&mut rng).cloned())
        .collect_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig6_middle;
    use crate::graph::frac;
    use crate::hyperarray::{standard_permutation_array, DotArray};
    use crate::module::find_dependence;

    fn perm(r: u8, dots: &[&[u8]]) -> PermutationArray {
        PermutationArray::new(DotArray::in_cube(r, dots.iter().map(|x| x.to_vec())).unwrap()).unwrap()
    }

    #[test]
    fn anti_diagonal_realization() {
        let p = perm(1, &[&[0, 1], &[1, 0]]);
        let real = realize_on_star(&p, q(1)).unwrap();
        assert_eq!(real.module().generators().len(), 2);
        assert_eq!(real.s(), 1);
        let local = real.module().local_array_at(&real.center()).unwrap();
        assert_eq!(local, DotArray::in_cube(1, [vec![0, 0], vec![0, 1], vec![1, 0]]).unwrap());
    }

    #[test]
    fn standard_array_is_recovered_at_the_center() {
        for d in 2..=3 {
            let p = standard_permutation_array(2, d).unwrap();
            let real = realize_on_star(&p, frac(3, 2)).unwrap();
            let local = real.module().local_array_at(&real.center()).unwrap();
            assert_eq!(local, p.redundant_closure());
            assert_eq!(real.module().local_core(&real.center()).unwrap().array(), p.array());
        }
    }

    #[test]
    fn sparse_arrays_are_recovered_at_the_center() {
        for d in 2..=3 {
            for p in enumerate_permutation_arrays(2, d, Budget::Default).unwrap() {
                if !p.is_sparse() {
                    continue;
                }
                let real = realize_on_star(&p, q(1)).unwrap();
                assert_eq!(real.module().local_array_at(&real.center()).unwrap(), p.redundant_closure());
            }
        }
    }

    #[test]
    fn generator_dependence_matches_function_search() {
        let p = standard_permutation_array(2, 3).unwrap();
        let real = realize_on_star(&p, q(1)).unwrap();
        assert!(real.check_generator_dependence().verdict);
        let gens = real.module().generators();
        for subset in (0..gens.len()).combinations(4) {
            let fns: Vec<PLFunction> = subset.iter().map(|&k| gens[k].clone()).collect();
            assert!(find_dependence(&fns).unwrap().certificate.is_some());
        }
        assert!(!check_p3(&fig6_middle(), 2).verdict);
    }

    #[test]
    fn same_edge_witness_has_the_expected_coordinates() {
        let p = standard_permutation_array(2, 3).unwrap();
        let real = realize_on_star(&p, q(3)).unwrap();
        let v1 = real.point(0, q(2)).unwrap();
        let v2 = real.point(0, q(1)).unwrap();
        let w = bnrp_rank2_witness(&real, &v1, &v2).unwrap();
        assert_eq!(w.case, Rank2Case::SameEdge);
        let firsts: Vec<u8> = w.terms.iter().map(|(x, _)| x[0]).collect();
        assert_eq!(firsts, vec![2, 1, 0]);
        let e = Divisor::from_points([(v1, 1), (v2, 1)]);
        assert!(real.module().check_bnrp(&w.function, &e));
    }

    #[test]
    fn witness_lies_in_the_module() {
        let p = standard_permutation_array(2, 3).unwrap();
        let real = realize_on_star(&p, q(4)).unwrap();
        let v1 = real.point(0, q(3)).unwrap();
        let v2 = real.point(1, q(1)).unwrap();
        let w = bnrp_rank2_witness(&real, &v1, &v2).unwrap();
        let shifts = real.generator_shifts(&w.terms);
        let (fns, a): (Vec<PLFunction>, Vec<Q>) = real
            .module()
            .generators()
            .iter()
            .zip(shifts)
            .filter_map(|(f, a)| a.map(|a| (f.clone(), a)))
            .unzip();
        assert_eq!(tropical_min(&fns, &a).unwrap(), w.function);
    }

    #[test]
    fn rank_must_be_two() {
        let p = standard_permutation_array(1, 3).unwrap();
        let real = realize_on_star(&p, q(1)).unwrap();
        let c = real.center();
        assert!(matches!(bnrp_rank2_witness(&real, &c, &c), Err(RealizationError::RankNotTwo(1))));
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = random_sparse_arrays(2, 3, 5, 7).unwrap();
        let b = random_sparse_arrays(2, 3, 5, 7).unwrap();
        assert_eq!(a.len(), 5);
        assert!(a.iter().zip(&b).all(|(x, y)| x.array() == y.array()));
        assert!(a.iter().all(PermutationArray::is_sparse));
    }

    #[test]
    fn bundle_has_the_array() {
        let p = standard_permutation_array(2, 2).unwrap();
        let real = realize_on_star(&p, q(1)).unwrap();
        let json = real.to_json();
        assert_eq!(DotArray::from_json(&json["array"]).unwrap(), *p.array());
        assert_eq!(TropicalModule::from_json(&json).unwrap(), *real.module());
    }
}
