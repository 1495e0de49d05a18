//! Finitely generated tropical modules `<f_1, ..., f_m>` inside `R(D)`.
//!
//! Membership in the module is never materialized. Slopes along a tangent
//! direction are read from the generators only: the minimum of shifted
//! functions leaves every point with the slope of one of its branches.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use itertools::Itertools;
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::{
    common_refinement, q, tropical_min, Divisor, GraphError, GraphPoint, JsonError, MetricGraph, PLFunction,
    TangentDirection, Q,
};
use crate::hyperarray::{ArrayError, DotArray, PermutationArray, Position, Shape};
use crate::properties::check_p3_subset;

/// Candidate budget of the tie-lattice searches.
pub const DEFAULT_SEARCH_LIMIT: usize = 100_000;

#[derive(Debug, Error)]
pub enum ModuleError {
    #[error("a module needs at least one generator")]
    NoGenerators,
    #[error("generator {0} is not in R(D)")]
    NotInRD(usize),
    #[error("slope {slope} along {direction} is not a slope of the module")]
    UnknownSlope { direction: String, slope: i64 },
    #[error("{direction} carries {found} slopes, expected {expected}")]
    SlopeCount {
        direction: String,
        found: usize,
        expected: usize,
    },
    #[error("local array at {point} is not the closure of a permutation array: {reason}")]
    NotPermutation { point: String, reason: String },
    #[error("slopes on {segment} are not antisymmetric")]
    NotAntisymmetric { segment: String },
    #[error("local array at {point} is not the standard closure")]
    NotStandard { point: String },
    #[error("point {0} has no tangent directions")]
    NoDirections(String),
    #[error("divisor E must be effective")]
    NotEffective,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Json(#[from] JsonError),
}

static LRP_WITHOUT_BNRP: AtomicUsize = AtomicUsize::new(0);

/// Number of times an LRP check passed while BNRP failed for the same
/// function and divisor, across the whole process. Must stay zero.
pub fn lrp_bnrp_violations() -> usize {
    LRP_WITHOUT_BNRP.load(Ordering::SeqCst)
}

/// `div(f) + D ≥ E`.
pub fn check_bnrp(f: &PLFunction, d: &Divisor, e: &Divisor) -> bool {
    d.plus(&f.divisor_of()).minus(e).is_effective()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TropicalModule {
    graph: Arc<MetricGraph>,
    divisor: Divisor,
    generators: Vec<PLFunction>,
}

impl TropicalModule {
    pub fn new(divisor: Divisor, generators: Vec<PLFunction>) -> Result<Self, ModuleError> {
        let graph = generators.first().ok_or(ModuleError::NoGenerators)?.graph().clone();
        if generators.iter().any(|f| f.graph() != &graph) {
            return Err(GraphError::GraphMismatch.into());
        }
        for p in divisor.support() {
            graph.check_point(p)?;
        }
        if let Some(i) = generators.iter().position(|f| !f.in_r_of_d(&divisor)) {
            return Err(ModuleError::NotInRD(i));
        }
        Ok(TropicalModule {
            graph,
            divisor,
            generators,
        })
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    pub fn divisor(&self) -> &Divisor {
        &self.divisor
    }

    pub fn generators(&self) -> &[PLFunction] {
        &self.generators
    }

    /// Sorted distinct generator slopes along `dir`.
    pub fn slopes_at(&self, dir: &TangentDirection) -> Vec<i64> {
        let set: BTreeSet<i64> = self.generators.iter().map(|f| f.slope_along(dir)).collect();
        set.into_iter().collect()
    }

    /// `∂_p(f)`: the index of each outgoing slope of `f` in the module's
    /// slope list, one coordinate per tangent direction.
    pub fn local_index(&self, f: &PLFunction, p: &GraphPoint) -> Result<Position, ModuleError> {
        if f.graph() != &self.graph {
            return Err(GraphError::GraphMismatch.into());
        }
        self.graph.check_point(p)?;
        self.graph
            .tangent_directions(p)
            .iter()
            .map(|dir| {
                let slope = f.slope_along(dir);
                self.slopes_at(dir)
                    .binary_search(&slope)
                    .map(|i| i as u8)
                    .map_err(|_| ModuleError::UnknownSlope {
                        direction: self.graph.describe_direction(dir),
                        slope,
                    })
            })
            .collect()
    }

    /// Meet closure of the generators' local indices at `p`.
    pub fn local_array_at(&self, p: &GraphPoint) -> Result<DotArray, ModuleError> {
        self.graph.check_point(p)?;
        let dirs = self.graph.tangent_directions(p);
        if dirs.is_empty() {
            return Err(ModuleError::NoDirections(self.graph.describe_point(p)));
        }
        let bounds = dirs
            .iter()
            .map(|dir| u8::try_from(self.slopes_at(dir).len() - 1).map_err(|_| ArrayError::BoundTooLarge(u8::MAX)))
            .collect::<Result<Vec<u8>, _>>()?;
        let dots = self
            .generators
            .iter()
            .map(|f| self.local_index(f, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DotArray::new(Shape::new(bounds)?, dots)?.meet_closure())
    }

    /// Permutation core of the local array at `p`.
    pub fn local_core(&self, p: &GraphPoint) -> Result<PermutationArray, ModuleError> {
        self.local_array_at(p)?
            .permutation_core()
            .map_err(|e| ModuleError::NotPermutation {
                point: self.graph.describe_point(p),
                reason: e.to_string(),
            })
    }

    /// `ρ_p(f)`: the rank array of the local core at `∂_p(f)`.
    pub fn local_rank(&self, f: &PLFunction, p: &GraphPoint) -> Result<i32, ModuleError> {
        let x = self.local_index(f, p)?;
        Ok(self.local_core(p)?.rank_array().get(&x))
    }

    /// `ρ_p(f) ≥ E(p)` on the support of `E`. Every call also checks BNRP
    /// and counts an LRP pass with a BNRP failure in
    /// [`lrp_bnrp_violations`].
    pub fn check_lrp(&self, f: &PLFunction, e: &Divisor) -> Result<bool, ModuleError> {
        if !e.is_effective() {
            return Err(ModuleError::NotEffective);
        }
        let mut lrp = true;
        for (p, n) in e.entries() {
            if (self.local_rank(f, p)? as i64) < n {
                lrp = false;
                break;
            }
        }
        if lrp && !check_bnrp(f, &self.divisor, e) {
            LRP_WITHOUT_BNRP.fetch_add(1, Ordering::SeqCst);
        }
        Ok(lrp)
    }

    pub fn check_bnrp(&self, f: &PLFunction, e: &Divisor) -> bool {
        check_bnrp(f, &self.divisor, e)
    }

    /// A tropical combination of generators satisfying BNRP and LRP for
    /// `E`, searched over tie lattices with ties placed at `supp(E)` first,
    /// then at vertices and generator bends. Sound; complete only for the
    /// candidate family.
    pub fn find_bnrp_lrp_witness(&self, e: &Divisor) -> Result<Option<PLFunction>, ModuleError> {
        self.search_witness(e, true, DEFAULT_SEARCH_LIMIT)
    }

    /// Like [`TropicalModule::find_bnrp_lrp_witness`] without the LRP
    /// requirement.
    pub fn find_bnrp_witness(&self, e: &Divisor) -> Result<Option<PLFunction>, ModuleError> {
        self.search_witness(e, false, DEFAULT_SEARCH_LIMIT)
    }

    fn search_witness(&self, e: &Divisor, need_lrp: bool, limit: usize) -> Result<Option<PLFunction>, ModuleError> {
        if !e.is_effective() {
            return Err(ModuleError::NotEffective);
        }
        let mut points: Vec<GraphPoint> = e.support().cloned().collect();
        points.extend((0..self.graph.num_vertices()).map(GraphPoint::Vertex));
        points.extend(self.generators.iter().flat_map(PLFunction::bend_points));
        let points: Vec<GraphPoint> = points.into_iter().unique().collect();
        let lattice = TieLattice::new(&self.generators, &points)?;
        let mut seen = 0usize;
        for size in 1..=self.generators.len() {
            for subset in (0..self.generators.len()).combinations(size) {
                let mut found = None;
                let mut failure = None;
                lattice.for_each_tree(&subset, &mut |shifts| {
                    seen += 1;
                    if seen > limit {
                        return false;
                    }
                    let fns: Vec<PLFunction> = subset.iter().map(|&i| self.generators[i].clone()).collect();
                    let f = match tropical_min(&fns, shifts) {
                        Ok(f) => f,
                        Err(err) => {
                            failure = Some(ModuleError::from(err));
                            return false;
                        }
                    };
                    if !self.check_bnrp(&f, e) {
                        return true;
                    }
                    if need_lrp {
                        match self.check_lrp(&f, e) {
                            Ok(true) => {}
                            Ok(false) => return true,
                            Err(err) => {
                                failure = Some(err);
                                return false;
                            }
                        }
                    }
                    found = Some(f);
                    false
                });
                if let Some(err) = failure {
                    return Err(err);
                }
                if found.is_some() || seen > limit {
                    return Ok(found);
                }
            }
        }
        Ok(None)
    }

    /// Points used to certify condition (1): vertices, generator bends,
    /// `supp(D)`, and the points at 1/4, 1/2 and 3/4 of every cell those
    /// cut the edges into. On a star with generators linear on each edge the
    /// probes include pairs at distances `ℓ/2` and `ℓ/4`, where the
    /// rank-2 witnesses change shape.
    pub fn critical_points(&self) -> Vec<GraphPoint> {
        let mut base: BTreeSet<GraphPoint> = (0..self.graph.num_vertices()).map(GraphPoint::Vertex).collect();
        base.extend(self.generators.iter().flat_map(PLFunction::bend_points));
        base.extend(self.divisor.support().cloned());
        let mut all = base.clone();
        for (k, edge) in self.graph.edges().iter().enumerate() {
            let mut stops: BTreeSet<Q> = base.iter().filter_map(|p| self.graph.offset_on(k, p)).collect();
            stops.insert(q(0));
            stops.insert(edge.length.clone());
            let stops: Vec<Q> = stops.into_iter().collect();
            for w in stops.windows(2) {
                for part in 1..4 {
                    let t = &w[0] + (&w[1] - &w[0]) * Q::new(part.into(), 4.into());
                    all.insert(self.graph.point(k, t).expect("inside the edge"));
                }
            }
        }
        all.into_iter().collect()
    }

    /// Every effective divisor of degree `r` supported on
    /// [`TropicalModule::critical_points`].
    pub fn critical_divisors(&self, r: u8) -> Vec<Divisor> {
        self.critical_points()
            .into_iter()
            .combinations_with_replacement(r as usize)
            .map(|pts| Divisor::from_points(pts.into_iter().map(|p| (p, 1))))
            .collect()
    }

    /// Condition (1) over the critical divisors of degree `r` and
    /// condition (2) over all `(r+2)`-subsets of generators. This is a
    /// finite certification, not a decision procedure over all `E`.
    pub fn check_tls_axioms(&self, r: u8) -> Result<TlsReport, ModuleError> {
        let mut report = TlsReport {
            rank: r,
            divisors_checked: 0,
            both_properties: 0,
            condition1_failure: None,
            subsets_checked: 0,
            condition2_failure: None,
        };
        for e in self.critical_divisors(r) {
            report.divisors_checked += 1;
            if self.find_bnrp_lrp_witness(&e)?.is_some() {
                report.both_properties += 1;
            } else if self.find_bnrp_witness(&e)?.is_none() {
                report.condition1_failure = Some(e);
                break;
            }
        }
        for subset in (0..self.generators.len()).combinations(r as usize + 2) {
            report.subsets_checked += 1;
            let fns: Vec<PLFunction> = subset.iter().map(|&i| self.generators[i].clone()).collect();
            if find_dependence(&fns)?.certificate.is_none() {
                report.condition2_failure = Some(subset);
                break;
            }
        }
        Ok(report)
    }

    /// `{"graph":..,"divisor":..,"generators":[..]}`.
    pub fn to_json(&self) -> Value {
        json!({
            "graph": self.graph.to_json(),
            "divisor": self.graph.divisor_to_json(&self.divisor),
            "generators": self.generators.iter().map(PLFunction::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, ModuleError> {
        let (graph, fns) = functions_from_json(v)?;
        let divisor = match v.get("divisor") {
            Some(d) => graph.divisor_from_json(d)?,
            None => Divisor::zero(),
        };
        TropicalModule::new(divisor, fns)
    }
}

/// Reads the graph and the `"generators"` list of a bundle.
pub fn functions_from_json(v: &Value) -> Result<(Arc<MetricGraph>, Vec<PLFunction>), ModuleError> {
    let missing = |key: &str| JsonError::Syntax(serde::de::Error::custom(format!("missing field `{key}`")));
    let graph = Arc::new(MetricGraph::from_json(v.get("graph").ok_or_else(|| missing("graph"))?)?);
    let fns = v
        .get("generators")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("generators"))?
        .iter()
        .map(|f| PLFunction::from_json(graph.clone(), f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((graph, fns))
}

/// Outcome of [`TropicalModule::check_tls_axioms`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TlsReport {
    pub rank: u8,
    pub divisors_checked: usize,
    /// Divisors with a witness satisfying both BNRP and LRP.
    pub both_properties: usize,
    /// First critical divisor without a BNRP witness.
    pub condition1_failure: Option<Divisor>,
    pub subsets_checked: usize,
    /// First generator subset found independent.
    pub condition2_failure: Option<Vec<usize>>,
}

impl TlsReport {
    pub fn passes(&self) -> bool {
        self.condition1_failure.is_none() && self.condition2_failure.is_none()
    }

    pub fn to_json(&self, graph: &MetricGraph) -> Value {
        json!({
            "rank": self.rank,
            "scope": "critical divisors only",
            "divisors_checked": self.divisors_checked,
            "both_properties": self.both_properties,
            "condition1": self.condition1_failure.is_none(),
            "condition1_failure": self.condition1_failure.as_ref().map(|e| graph.divisor_to_json(e)),
            "subsets_checked": self.subsets_checked,
            "condition2": self.condition2_failure.is_none(),
            "condition2_failure": self.condition2_failure,
        })
    }
}

/// Branches attaining the minimum on one open cell of an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellRecord {
    pub edge: usize,
    pub from: Q,
    pub to: Q,
    pub attained: Vec<usize>,
}

/// Cell-by-cell outcome of [`verify_dependence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceCheck {
    /// First point where the minimum has a single branch.
    pub failure: Option<GraphPoint>,
    pub cells: Vec<CellRecord>,
}

impl DependenceCheck {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks that `min_i (f_i + a_i)` is attained by at least two branches at
/// every point. Each edge is cut at every bend and every pairwise crossing,
/// so the set of minimal branches is constant on each open cell; by
/// continuity the cell endpoints need no separate check.
pub fn verify_dependence(fns: &[PLFunction], shifts: &[Q]) -> Result<DependenceCheck, GraphError> {
    let first = fns.first().ok_or(GraphError::EmptyInput)?;
    if fns.len() != shifts.len() {
        return Err(GraphError::LengthMismatch {
            expected: fns.len(),
            got: shifts.len(),
        });
    }
    let graph = first.graph();
    if fns.iter().any(|f| f.graph() != graph) {
        return Err(GraphError::GraphMismatch);
    }
    let mut cells = Vec::new();
    if graph.edges().is_empty() {
        let vals: Vec<Q> = fns.iter().zip(shifts).map(|(f, a)| f.vertex_value(0) + a).collect();
        let failure = (argmin(&vals).len() < 2).then_some(GraphPoint::Vertex(0));
        return Ok(DependenceCheck { failure, cells });
    }
    let refs: Vec<&PLFunction> = fns.iter().collect();
    for e in 0..graph.edges().len() {
        for w in common_refinement(&refs, e).windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / q(2);
            let ahead = TangentDirection {
                base: GraphPoint::Edge { edge: e, offset: mid },
                edge: e,
                forward: true,
            };
            let lines: Vec<(Q, i64)> = fns
                .iter()
                .zip(shifts)
                .map(|(f, s)| (f.value_on_edge(e, a) + s, f.slope_along(&ahead)))
                .collect();
            let mut stops = vec![a.clone(), b.clone()];
            for ((vi, si), (vj, sj)) in lines.iter().tuple_combinations() {
                if si != sj {
                    let t = a + (vj - vi) / q(si - sj);
                    if &t > a && &t < b {
                        stops.push(t);
                    }
                }
            }
            stops.sort();
            stops.dedup();
            for s in stops.windows(2) {
                let m = (&s[0] + &s[1]) / q(2);
                let vals: Vec<Q> = lines.iter().map(|(v, sl)| v + (&m - a) * q(*sl)).collect();
                let attained = argmin(&vals);
                let single = attained.len() < 2;
                cells.push(CellRecord {
                    edge: e,
                    from: s[0].clone(),
                    to: s[1].clone(),
                    attained,
                });
                if single {
                    let failure = Some(GraphPoint::Edge { edge: e, offset: m });
                    return Ok(DependenceCheck { failure, cells });
                }
            }
        }
    }
    Ok(DependenceCheck { failure: None, cells })
}

fn argmin(vals: &[Q]) -> Vec<usize> {
    let min = vals.iter().min().expect("nonempty");
    vals.iter().positions(|v| v == min).collect()
}

/// Shifts with a verified cell record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceCertificate {
    pub shifts: Vec<Q>,
    pub cells: Vec<CellRecord>,
}

impl DependenceCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "shifts": self.shifts.iter().map(Q::to_string).collect::<Vec<_>>(),
            "cells": self.cells.iter().map(|c| json!({
                "edge": c.edge,
                "from": c.from.to_string(),
                "to": c.to.to_string(),
                "attained": c.attained,
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchRegime {
    /// Two functions: dependent exactly when they differ by a constant.
    Pair,
    /// Functions linear on every edge of a star: the P3 criterion on slope
    /// vectors decides.
    ConstantSlopeStar,
    /// Shifts forced by ties at vertices and bends.
    TieLattice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceSearch {
    pub regime: SearchRegime,
    pub certificate: Option<DependenceCertificate>,
    /// Whether a missing certificate proves independence.
    pub conclusive: bool,
}

/// Searches for shifts making `fns` tropically dependent. A returned
/// certificate has always passed [`verify_dependence`].
pub fn find_dependence(fns: &[PLFunction]) -> Result<DependenceSearch, GraphError> {
    if fns.len() == 2 {
        return pair_dependence(fns);
    }
    if let Some(search) = star_dependence(fns)? {
        return Ok(search);
    }
    find_dependence_by_ties(fns, DEFAULT_SEARCH_LIMIT)
}

fn certify(fns: &[PLFunction], shifts: Vec<Q>) -> Result<Option<DependenceCertificate>, GraphError> {
    let check = verify_dependence(fns, &shifts)?;
    Ok(check.holds().then_some(DependenceCertificate {
        shifts,
        cells: check.cells,
    }))
}

fn pair_dependence(fns: &[PLFunction]) -> Result<DependenceSearch, GraphError> {
    let (f, g) = (&fns[0], &fns[1]);
    if f.graph() != g.graph() {
        return Err(GraphError::GraphMismatch);
    }
    let certificate = if f.pieces() == g.pieces() {
        certify(fns, vec![q(0), f.vertex_value(0) - g.vertex_value(0)])?
    } else {
        None
    };
    Ok(DependenceSearch {
        regime: SearchRegime::Pair,
        certificate,
        conclusive: true,
    })
}

/// Center of a star: every edge joins it to a distinct leaf.
fn star_center(graph: &MetricGraph) -> Option<usize> {
    let edges = graph.edges();
    let first = edges.first()?;
    [first.from, first.to].into_iter().find(|&c| {
        edges.iter().all(|e| (e.from == c) != (e.to == c))
            && (0..graph.num_vertices()).all(|v| v == c || graph.valence(v) == 1)
    })
}

fn star_dependence(fns: &[PLFunction]) -> Result<Option<DependenceSearch>, GraphError> {
    let Some(first) = fns.first() else {
        return Ok(None);
    };
    let graph = first.graph();
    if fns.iter().any(|f| f.graph() != graph) {
        return Err(GraphError::GraphMismatch);
    }
    let Some(c) = star_center(graph) else {
        return Ok(None);
    };
    if fns.iter().any(|f| f.pieces().iter().any(|p| !p.cuts.is_empty())) {
        return Ok(None);
    }
    // Outgoing slope vectors at the center, translated to be nonnegative.
    let raw: Vec<Vec<i64>> = fns
        .iter()
        .map(|f| {
            graph
                .edges()
                .iter()
                .zip(f.pieces())
                .map(|(e, p)| if e.from == c { p.slopes[0] } else { -p.slopes[0] })
                .collect()
        })
        .collect();
    let d = graph.edges().len();
    let low: Vec<i64> = (0..d).map(|i| raw.iter().map(|x| x[i]).min().expect("nonempty")).collect();
    let vectors: Option<Vec<Position>> = raw
        .iter()
        .map(|x| x.iter().zip(&low).map(|(a, m)| u8::try_from(a - m).ok()).collect())
        .collect();
    let Some(vectors) = vectors else {
        return Ok(None);
    };
    let chosen: Vec<usize> = match (0..fns.len()).tuple_combinations().find(|&(i, j)| vectors[i] == vectors[j]) {
        Some((i, j)) => vec![i, j],
        None => match check_p3_subset(&vectors) {
            Some(rest) => (0..fns.len()).filter(|&i| rest.contains(&vectors[i])).collect(),
            None => Vec::new(),
        },
    };
    let certificate = if chosen.is_empty() {
        None
    } else {
        let center = GraphPoint::Vertex(c);
        let shifts = (0..fns.len())
            .map(|i| chosen.contains(&i).then(|| -fns[i].evaluate(&center).expect("vertex")))
            .collect();
        let cert = certify(fns, exclude_others(fns, shifts))?;
        assert!(cert.is_some(), "P3 subset must give a dependence");
        cert
    };
    Ok(Some(DependenceSearch {
        regime: SearchRegime::ConstantSlopeStar,
        certificate,
        conclusive: true,
    }))
}

/// Replaces missing shifts by ones that lift the branch above every
/// chosen branch everywhere.
fn exclude_others(fns: &[PLFunction], shifts: Vec<Option<Q>>) -> Vec<Q> {
    let top = fns
        .iter()
        .zip(&shifts)
        .filter_map(|(f, a)| a.as_ref().map(|a| f.extremes().0 + a))
        .max()
        .unwrap_or_else(|| q(0));
    fns.iter()
        .zip(shifts)
        .map(|(f, a)| a.unwrap_or_else(|| &top - f.extremes().1 + q(1)))
        .collect()
}

/// Tie-lattice search over subsets of `fns`: inside a subset, shifts come
/// from spanning trees whose edges force two branches to agree at a vertex
/// or bend point. Never conclusive.
pub fn find_dependence_by_ties(fns: &[PLFunction], limit: usize) -> Result<DependenceSearch, GraphError> {
    let mut search = DependenceSearch {
        regime: SearchRegime::TieLattice,
        certificate: None,
        conclusive: false,
    };
    let Some(first) = fns.first() else {
        return Ok(search);
    };
    let graph = first.graph();
    if fns.iter().any(|f| f.graph() != graph) {
        return Err(GraphError::GraphMismatch);
    }
    let mut points: Vec<GraphPoint> = (0..graph.num_vertices()).map(GraphPoint::Vertex).collect();
    points.extend(fns.iter().flat_map(PLFunction::bend_points));
    let points: Vec<GraphPoint> = points.into_iter().unique().collect();
    let lattice = TieLattice::new(fns, &points)?;
    let mut seen = 0usize;
    let mut failure = None;
    for size in 2..=fns.len() {
        for subset in (0..fns.len()).combinations(size) {
            lattice.for_each_tree(&subset, &mut |partial| {
                seen += 1;
                if seen > limit {
                    return false;
                }
                let mut shifts = vec![None; fns.len()];
                for (&i, a) in subset.iter().zip(partial) {
                    shifts[i] = Some(a.clone());
                }
                match certify(fns, exclude_others(fns, shifts)) {
                    Ok(Some(cert)) => {
                        search.certificate = Some(cert);
                        false
                    }
                    Ok(None) => true,
                    Err(e) => {
                        failure = Some(e);
                        false
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            if search.certificate.is_some() || seen > limit {
                return Ok(search);
            }
        }
    }
    Ok(search)
}

/// Function values at the candidate tie points.
struct TieLattice {
    values: Vec<Vec<Q>>,
}

impl TieLattice {
    fn new(fns: &[PLFunction], points: &[GraphPoint]) -> Result<Self, GraphError> {
        let values = fns
            .iter()
            .map(|f| points.iter().map(|p| f.evaluate(p)).collect())
            .collect::<Result<_, _>>()?;
        Ok(TieLattice { values })
    }

    /// Calls `visit` with the shifts of `subset` (first member at 0) for
    /// every distinct assignment given by a spanning tree of ties. Stops
    /// when `visit` returns false.
    fn for_each_tree(&self, subset: &[usize], visit: &mut dyn FnMut(&[Q]) -> bool) {
        let mut seen: HashSet<Vec<Q>> = HashSet::new();
        let (root, rest) = subset.split_first().expect("nonempty subset");
        for order in rest.iter().copied().permutations(rest.len()) {
            let mut members = vec![*root];
            members.extend(order);
            let mut shifts = vec![q(0)];
            if !self.extend(&members, &mut shifts, &mut seen, subset, visit) {
                return;
            }
        }
    }

    fn extend(
        &self,
        members: &[usize],
        shifts: &mut Vec<Q>,
        seen: &mut HashSet<Vec<Q>>,
        subset: &[usize],
        visit: &mut dyn FnMut(&[Q]) -> bool,
    ) -> bool {
        let k = shifts.len();
        if k == members.len() {
            // Report shifts in subset order.
            let by_subset: Vec<Q> = subset
                .iter()
                .map(|i| shifts[members.iter().position(|m| m == i).expect("member")].clone())
                .collect();
            if !seen.insert(by_subset.clone()) {
                return true;
            }
            return visit(&by_subset);
        }
        let new = members[k];
        for j in 0..k {
            let old = members[j];
            for p in 0..self.values[new].len() {
                let a = &shifts[j] + &self.values[old][p] - &self.values[new][p];
                shifts.push(a);
                let go_on = self.extend(members, shifts, seen, subset, visit);
                shifts.pop();
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
}

/// Slope lists on an open piece of an edge between consecutive points of
/// `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub edge: usize,
    pub from: Q,
    pub to: Q,
    pub forward: Vec<i64>,
    pub backward: Vec<i64>,
}

/// An `r`-slope structure read off a module.
#[derive(Debug, Clone)]
pub struct SlopeStructure {
    rank: u8,
    points: Vec<GraphPoint>,
    directions: BTreeMap<TangentDirection, Vec<i64>>,
    segments: Vec<Segment>,
    arrays: BTreeMap<GraphPoint, PermutationArray>,
}

impl SlopeStructure {
    pub fn rank(&self) -> u8 {
        self.rank
    }

    /// The distinguished points `V`.
    pub fn points(&self) -> &[GraphPoint] {
        &self.points
    }

    pub fn slopes(&self, dir: &TangentDirection) -> Option<&[i64]> {
        self.directions.get(dir).map(Vec::as_slice)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn array(&self, p: &GraphPoint) -> Option<&PermutationArray> {
        self.arrays.get(p)
    }

    /// Every outgoing slope of `f` lies in its list and every local index
    /// lies in the closure of the local permutation array, at the points of
    /// `V` and at every point of each segment (bends of `f` included).
    pub fn is_compatible(&self, f: &PLFunction, graph: &MetricGraph) -> bool {
        if f.graph().as_ref() != graph {
            return false;
        }
        let index = |list: &[i64], s: i64| list.binary_search(&s).ok().map(|i| i as u8);
        for p in &self.points {
            let x: Option<Position> = graph
                .tangent_directions(p)
                .iter()
                .map(|dir| index(&self.directions[dir], f.slope_along(dir)))
                .collect();
            let closure = self.arrays[p].redundant_closure();
            if !x.is_some_and(|x| closure.contains(&x)) {
                return false;
            }
        }
        let r = self.rank as u32;
        for seg in &self.segments {
            let mut probes = vec![(&seg.from + &seg.to) / q(2)];
            probes.extend(f.pieces()[seg.edge].cuts.iter().filter(|c| **c > seg.from && **c < seg.to).cloned());
            for t in probes {
                let base = GraphPoint::Edge { edge: seg.edge, offset: t };
                let dir = |forward| TangentDirection {
                    base: base.clone(),
                    edge: seg.edge,
                    forward,
                };
                let back = index(&seg.backward, f.slope_along(&dir(false)));
                let ahead = index(&seg.forward, f.slope_along(&dir(true)));
                match (back, ahead) {
                    (Some(b), Some(a)) if b as u32 + a as u32 <= r => {}
                    _ => return false,
                }
            }
        }
        true
    }

    /// `{"rank":..,"V":[..],"directions":[..],"segments":[..],"arrays":{..}}`.
    pub fn to_json(&self, graph: &MetricGraph) -> Value {
        let point = |p: &GraphPoint| serde_json::to_value(graph.point_to_json(p)).expect("plain data");
        json!({
            "rank": self.rank,
            "V": self.points.iter().map(point).collect::<Vec<_>>(),
            "directions": self.directions.iter().map(|(dir, slopes)| json!({
                "at": point(&dir.base),
                "edge": dir.edge,
                "forward": dir.forward,
                "slopes": slopes,
            })).collect::<Vec<_>>(),
            "segments": self.segments.iter().map(|s| json!({
                "edge": s.edge,
                "from": s.from.to_string(),
                "to": s.to.to_string(),
                "forward": s.forward,
                "backward": s.backward,
            })).collect::<Vec<_>>(),
            "arrays": self.arrays.iter().map(|(p, a)| (graph.describe_point(p), a.array().to_json())).collect::<BTreeMap<_, _>>(),
        })
    }
}

impl TropicalModule {
    /// Reads an `r`-slope structure off the module. `V` collects
    /// `supp(D)`, the vertices of valence other than 2, the vertices where a
    /// generator bends and all interior bends. Off `V` every local array
    /// must be the closure of the standard rank-`r` array of dimension 2 and
    /// opposite slope lists must be antisymmetric.
    pub fn slope_structure(&self, r: u8) -> Result<SlopeStructure, ModuleError> {
        let graph = &self.graph;
        let mut points: BTreeSet<GraphPoint> = self.divisor.support().cloned().collect();
        for v in 0..graph.num_vertices() {
            let p = GraphPoint::Vertex(v);
            if graph.valence(v) != 2 || self.generators.iter().any(|f| f.ord_at(&p) != 0) {
                points.insert(p);
            }
        }
        points.extend(self.generators.iter().flat_map(PLFunction::bend_points));
        let expected = r as usize + 1;
        let count_ok = |dir: &TangentDirection, slopes: &[i64]| {
            if slopes.len() == expected {
                Ok(())
            } else {
                Err(ModuleError::SlopeCount {
                    direction: graph.describe_direction(dir),
                    found: slopes.len(),
                    expected,
                })
            }
        };
        let mut directions = BTreeMap::new();
        let mut arrays = BTreeMap::new();
        for p in &points {
            for dir in graph.tangent_directions(p) {
                let slopes = self.slopes_at(&dir);
                count_ok(&dir, &slopes)?;
                directions.insert(dir, slopes);
            }
            arrays.insert(p.clone(), self.local_core(p)?);
        }
        let standard = DotArray::new(
            Shape::cube(r, 2)?,
            Shape::cube(r, 2)?.positions().filter(|x| x[0] as u32 + x[1] as u32 <= r as u32),
        )?;
        let mut segments = Vec::new();
        for (k, edge) in graph.edges().iter().enumerate() {
            let mut stops: BTreeSet<Q> = points.iter().filter_map(|p| graph.offset_on(k, p)).collect();
            stops.insert(q(0));
            stops.insert(edge.length.clone());
            let stops: Vec<Q> = stops.into_iter().collect();
            for w in stops.windows(2) {
                let mid = GraphPoint::Edge {
                    edge: k,
                    offset: (&w[0] + &w[1]) / q(2),
                };
                let dirs = graph.tangent_directions(&mid);
                let backward = self.slopes_at(&dirs[0]);
                let forward = self.slopes_at(&dirs[1]);
                count_ok(&dirs[0], &backward)?;
                count_ok(&dirs[1], &forward)?;
                let name = format!("e{k} ({}, {})", w[0], w[1]);
                if (0..expected).any(|i| forward[i] + backward[expected - 1 - i] != 0) {
                    return Err(ModuleError::NotAntisymmetric { segment: name });
                }
                if self.local_array_at(&mid)? != standard {
                    return Err(ModuleError::NotStandard { point: name });
                }
                segments.push(Segment {
                    edge: k,
                    from: w[0].clone(),
                    to: w[1].clone(),
                    forward,
                    backward,
                });
            }
        }
        Ok(SlopeStructure {
            rank: r,
            points: points.into_iter().collect(),
            directions,
            segments,
            arrays,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{interval_module, interval_x, loop_module, loop_u};
    use crate::graph::{frac, EdgePiece};

    fn dir(base: GraphPoint, edge: usize, forward: bool) -> TangentDirection {
        TangentDirection { base, edge, forward }
    }

    fn arr(r: u8, dots: &[&[u8]]) -> DotArray {
        DotArray::in_cube(r, dots.iter().map(|x| x.to_vec())).unwrap()
    }

    #[test]
    fn slopes_on_the_fixtures() {
        let m = interval_module();
        assert_eq!(m.slopes_at(&dir(GraphPoint::Vertex(0), 0, true)), vec![1, 2]);
        assert_eq!(m.slopes_at(&dir(interval_x(), 0, true)), vec![0, 1]);
        assert_eq!(m.slopes_at(&dir(interval_x(), 0, false)), vec![-2, -1]);
        let f3 = &m.generators()[2];
        assert_eq!(f3.slope_along(&dir(interval_x(), 0, false)), -2);
        assert_eq!(f3.slope_along(&dir(interval_x(), 0, true)), 0);
        let l = loop_module();
        for d in l.graph().tangent_directions(&loop_u()) {
            assert_eq!(l.slopes_at(&d), vec![0, 1]);
        }
    }

    #[test]
    fn local_arrays_on_the_interval() {
        let m = interval_module();
        assert_eq!(m.local_array_at(&interval_x()).unwrap(), arr(1, &[&[0, 0], &[1, 1]]));
        let w = GraphPoint::Edge {
            edge: 0,
            offset: frac(1, 2),
        };
        assert_eq!(m.local_array_at(&w).unwrap(), arr(1, &[&[0, 0], &[0, 1], &[1, 0]]));
        for end in [GraphPoint::Vertex(0), GraphPoint::Vertex(1)] {
            assert_eq!(m.local_array_at(&end).unwrap(), arr(1, &[&[0], &[1]]));
        }
        assert_eq!(m.local_index(&m.generators()[2], &interval_x()).unwrap(), vec![0, 0]);
    }

    #[test]
    fn local_ranks_on_the_loop() {
        let m = loop_module();
        let core = m.local_core(&loop_u()).unwrap();
        assert_eq!(core.array(), &arr(1, &[&[0, 0], &[1, 1]]));
        assert_eq!(core.rank_array().render(), "0 0\n1 0\n");
        let (constant, rising) = (&m.generators()[0], &m.generators()[1]);
        assert_eq!(m.local_rank(constant, &loop_u()).unwrap(), 1);
        assert_eq!(m.local_rank(rising, &loop_u()).unwrap(), 0);
        assert_eq!(
            rising.divisor_of(),
            Divisor::from_points([(GraphPoint::Vertex(0), -2), (GraphPoint::Vertex(1), 2)])
        );
    }

    #[test]
    fn rank_properties_on_the_loop() {
        let m = loop_module();
        let e = Divisor::point(loop_u(), 1);
        let (constant, rising) = (&m.generators()[0], &m.generators()[1]);
        assert!(m.check_bnrp(rising, &e));
        assert!(!m.check_lrp(rising, &e).unwrap());
        assert!(m.check_bnrp(constant, &e));
        assert!(m.check_lrp(constant, &e).unwrap());
        for f in m.generators() {
            assert!(m.check_bnrp(f, &Divisor::zero()));
            assert!(m.check_lrp(f, &Divisor::zero()).unwrap());
        }
        assert!(matches!(
            m.check_lrp(constant, &Divisor::point(loop_u(), -1)),
            Err(ModuleError::NotEffective)
        ));
    }

    #[test]
    fn incompatible_function_has_no_local_rank() {
        let m = interval_module();
        let steep = PLFunction::edge_linear(m.graph().clone(), &[3], 0, q(0)).unwrap();
        assert!(matches!(
            m.local_rank(&steep, &interval_x()),
            Err(ModuleError::UnknownSlope { slope: -3, .. })
        ));
    }

    #[test]
    fn identical_functions_are_dependent() {
        let m = interval_module();
        let f = m.generators()[0].clone();
        let check = verify_dependence(&[f.clone(), f.clone()], &[q(0), q(0)]).unwrap();
        assert!(check.holds());
        let check = verify_dependence(&[f.clone(), f], &[q(0), q(1)]).unwrap();
        assert_eq!(check.failure, Some(GraphPoint::Edge { edge: 0, offset: frac(2, 3) }));
    }

    #[test]
    fn interval_generators_pairwise_independent_triple_dependent() {
        let m = interval_module();
        let g = m.generators();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let pair = [g[i].clone(), g[j].clone()];
            let exact = find_dependence(&pair).unwrap();
            assert!(exact.conclusive && exact.certificate.is_none());
            assert!(find_dependence_by_ties(&pair, DEFAULT_SEARCH_LIMIT).unwrap().certificate.is_none());
        }
        let search = find_dependence(g).unwrap();
        assert_eq!(search.regime, SearchRegime::TieLattice);
        let cert = search.certificate.expect("the triple is dependent");
        assert!(verify_dependence(g, &cert.shifts).unwrap().holds());
        // Independent oracle: shifts worked out by hand.
        assert!(verify_dependence(g, &[frac(2, 3), q(0), q(0)]).unwrap().holds());
    }

    #[test]
    fn common_shift_does_not_change_the_verdict() {
        let g = interval_module().generators().to_vec();
        for base in [vec![frac(2, 3), q(0), q(0)], vec![q(0), q(1), q(0)]] {
            let lifted: Vec<Q> = base.iter().map(|a| a + frac(7, 5)).collect();
            assert_eq!(
                verify_dependence(&g, &base).unwrap().holds(),
                verify_dependence(&g, &lifted).unwrap().holds()
            );
        }
    }

    #[test]
    fn slope_structure_of_the_interval() {
        let m = interval_module();
        let s = m.slope_structure(1).unwrap();
        let pts = |offs: &[Q]| offs.iter().map(|t| m.graph().point(0, t.clone()).unwrap()).collect::<Vec<_>>();
        let expected = pts(&[q(0), frac(2, 3), q(1), frac(4, 3), q(2)]);
        let mut got = s.points().to_vec();
        got.sort();
        let mut want = expected;
        want.sort();
        assert_eq!(got, want);
        assert_eq!(s.array(&interval_x()).unwrap().array(), &arr(1, &[&[0, 0], &[1, 1]]));
        for f in m.generators() {
            assert!(s.is_compatible(f, m.graph()));
        }
        let steep = PLFunction::edge_linear(m.graph().clone(), &[3], 0, q(0)).unwrap();
        assert!(!s.is_compatible(&steep, m.graph()));
        assert_eq!(s.segments().len(), 4);
        let json = s.to_json(m.graph());
        assert_eq!(json["V"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn slope_structure_of_the_loop() {
        let m = loop_module();
        let s = m.slope_structure(1).unwrap();
        assert_eq!(s.points(), &[GraphPoint::Vertex(0), GraphPoint::Vertex(1)]);
        for f in m.generators() {
            assert!(s.is_compatible(f, m.graph()));
        }
    }

    #[test]
    fn slope_structure_needs_r_plus_one_slopes() {
        let m = interval_module();
        let two = TropicalModule::new(m.divisor().clone(), m.generators()[..2].to_vec()).unwrap();
        assert!(matches!(two.slope_structure(1), Err(ModuleError::SlopeCount { found: 1, .. })));
        assert!(matches!(m.slope_structure(2), Err(ModuleError::SlopeCount { found: 2, .. })));
    }

    #[test]
    fn witnesses_on_the_fixtures() {
        let l = loop_module();
        let f = l.find_bnrp_lrp_witness(&Divisor::point(loop_u(), 1)).unwrap().unwrap();
        assert_eq!(f, l.generators()[0]);
        let m = interval_module();
        let f = m.find_bnrp_lrp_witness(&Divisor::point(interval_x(), 1)).unwrap().unwrap();
        assert_eq!(m.local_index(&f, &interval_x()).unwrap(), vec![0, 0]);
        let f = m.find_bnrp_lrp_witness(&Divisor::zero()).unwrap().unwrap();
        assert_eq!(f, m.generators()[0]);
    }

    #[test]
    fn axioms_on_the_interval() {
        let m = interval_module();
        let report = m.check_tls_axioms(1).unwrap();
        assert!(report.passes(), "{report:?}");
        assert_eq!(report.divisors_checked, report.both_properties);
        assert_eq!(report.subsets_checked, 1);
        let thin = TropicalModule::new(m.divisor().clone(), vec![m.generators()[0].clone(), m.generators()[2].clone()]).unwrap();
        let report = thin.check_tls_axioms(1).unwrap();
        let e = report.condition1_failure.expect("no function reaches u with slope");
        assert_eq!(e.support().collect::<Vec<_>>(), vec![&GraphPoint::Vertex(1)]);
    }

    #[test]
    fn module_rejects_functions_outside_r_of_d() {
        let m = interval_module();
        let f = m.generators()[1].clone();
        assert!(matches!(
            TropicalModule::new(Divisor::point(GraphPoint::Vertex(0), 1), vec![f]),
            Err(ModuleError::NotInRD(0))
        ));
    }

    #[test]
    fn star_regime_uses_slope_vectors() {
        let graph = Arc::new(MetricGraph::star(2, q(1)).unwrap());
        let f = |x: [i64; 2]| PLFunction::edge_linear(graph.clone(), &x, 0, q(0)).unwrap();
        // Fails P3: (2,0) and (0,1) attain axis minima alone.
        let lone = [f([2, 0]), f([2, 1]), f([1, 1]), f([0, 1])];
        let search = find_dependence(&lone).unwrap();
        assert_eq!(search.regime, SearchRegime::ConstantSlopeStar);
        assert!(search.conclusive && search.certificate.is_none());
        let tied = [f([0, 0]), f([1, 1]), f([1, 2]), f([2, 1])];
        let cert = find_dependence(&tied).unwrap().certificate.unwrap();
        assert!(verify_dependence(&tied, &cert.shifts).unwrap().holds());
    }

    #[test]
    fn bundle_round_trip() {
        let m = interval_module();
        let back = TropicalModule::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn cuts_do_not_matter_for_equality_of_pieces() {
        let graph = Arc::new(MetricGraph::interval(q(2)).unwrap());
        let split = EdgePiece {
            cuts: vec![q(1)],
            slopes: vec![1, 1],
        };
        let f = PLFunction::new(graph.clone(), vec![split], 0, q(0)).unwrap();
        let g = PLFunction::edge_linear(graph, &[1], 0, q(5)).unwrap();
        let search = find_dependence(&[f, g]).unwrap();
        assert_eq!(search.certificate.unwrap().shifts, vec![q(0), q(-5)]);
    }
}
