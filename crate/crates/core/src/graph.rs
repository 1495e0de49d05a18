//! Metric graphs with rational edge lengths, divisors, and continuous
//! piecewise-linear functions with integer slopes.
//!
//! A function stores, per edge, the cut offsets measured from the `from`
//! endpoint and one slope per cell, together with its value at one anchor
//! vertex. Values everywhere else follow by integration.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"` or an integer.
pub fn parse_q(s: &str) -> Result<Q, GraphError> {
    let bad = || GraphError::BadRational(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid rational {0:?}")]
    BadRational(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error("edge {0} has non-positive length")]
    NonPositiveLength(usize),
    #[error("graph has no vertices")]
    NoVertices,
    #[error("graph is not connected")]
    Disconnected,
    #[error("edge {0} does not exist")]
    NoSuchEdge(usize),
    #[error("vertex {0} does not exist")]
    NoSuchVertex(usize),
    #[error("offset {offset} is outside edge {edge} of length {length}")]
    OffsetOutOfRange { edge: usize, offset: Q, length: Q },
    #[error("edge {edge}: {reason}")]
    BadPiece { edge: usize, reason: String },
    #[error("function values disagree at vertex {0}")]
    Discontinuous(String),
    #[error("functions live on different graphs")]
    GraphMismatch,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty list of functions")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub length: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricGraph {
    names: Vec<String>,
    edges: Vec<Edge>,
}

/// A point: a vertex, or an edge with an offset strictly inside it,
/// measured from the edge's `from` endpoint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphPoint {
    Vertex(usize),
    Edge { edge: usize, offset: Q },
}

/// An outgoing tangent direction at `base` along `edge`, pointing toward
/// the edge's `to` endpoint when `forward` holds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TangentDirection {
    pub base: GraphPoint,
    pub edge: usize,
    pub forward: bool,
}

impl MetricGraph {
    pub fn new(names: Vec<String>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if names.is_empty() {
            return Err(GraphError::NoVertices);
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(GraphError::DuplicateVertex(n.clone()));
            }
        }
        for (k, e) in edges.iter().enumerate() {
            if e.from >= names.len() {
                return Err(GraphError::NoSuchVertex(e.from));
            }
            if e.to >= names.len() {
                return Err(GraphError::NoSuchVertex(e.to));
            }
            if !e.length.is_positive() {
                return Err(GraphError::NonPositiveLength(k));
            }
        }
        let g = MetricGraph { names, edges };
        if g.bfs_order().len() != g.names.len() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Builds from vertex names and `(from, to, length)` triples.
    pub fn from_names(vertices: &[&str], edges: &[(&str, &str, Q)]) -> Result<Self, GraphError> {
        let names: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        let find = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| GraphError::UnknownVertex(s.to_string()))
        };
        let edges = edges
            .iter()
            .map(|(a, b, len)| {
                Ok(Edge {
                    from: find(a)?,
                    to: find(b)?,
                    length: len.clone(),
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        MetricGraph::new(names, edges)
    }

    /// One edge from `v` to `u`.
    pub fn interval(length: Q) -> Result<Self, GraphError> {
        Self::from_names(&["v", "u"], &[("v", "u", length)])
    }

    /// Two parallel edges of equal length from `u` to `v`.
    pub fn loop_graph(length: Q) -> Result<Self, GraphError> {
        Self::from_names(&["u", "v"], &[("u", "v", length.clone()), ("u", "v", length)])
    }

    /// Center `v` (vertex 0) joined to leaves `w1..wd` (vertices `1..=d`);
    /// edge `i` runs from the center to leaf `i+1`.
    pub fn star(d: usize, length: Q) -> Result<Self, GraphError> {
        let mut names = vec!["v".to_string()];
        names.extend((1..=d).map(|i| format!("w{i}")));
        let edges = (0..d)
            .map(|i| Edge {
                from: 0,
                to: i + 1,
                length: length.clone(),
            })
            .collect();
        MetricGraph::new(names, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex(&self, name: &str) -> Result<usize, GraphError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<&Edge, GraphError> {
        self.edges.get(e).ok_or(GraphError::NoSuchEdge(e))
    }

    /// Number of incident edge-ends; a loop counts twice.
    pub fn valence(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.from == v) as usize + (e.to == v) as usize)
            .sum()
    }

    /// Vertices in breadth-first order from vertex 0, each with the edge
    /// used to reach it.
    fn bfs_order(&self) -> Vec<(usize, Option<usize>)> {
        let n = self.names.len();
        let mut seen = vec![false; n];
        let mut order = vec![(0, None)];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for (k, e) in self.edges.iter().enumerate() {
                let other = if e.from == v {
                    e.to
                } else if e.to == v {
                    e.from
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    order.push((other, Some(k)));
                    queue.push_back(other);
                }
            }
        }
        order
    }

    /// The point at `offset` along edge `e`; endpoints become vertices.
    pub fn point(&self, e: usize, offset: Q) -> Result<GraphPoint, GraphError> {
        let edge = self.edge(e)?;
        if offset.is_negative() || offset > edge.length {
            return Err(GraphError::OffsetOutOfRange {
                edge: e,
                offset,
                length: edge.length.clone(),
            });
        }
        Ok(if offset.is_zero() {
            GraphPoint::Vertex(edge.from)
        } else if offset == edge.length {
            GraphPoint::Vertex(edge.to)
        } else {
            GraphPoint::Edge { edge: e, offset }
        })
    }

    pub fn check_point(&self, p: &GraphPoint) -> Result<(), GraphError> {
        match p {
            GraphPoint::Vertex(v) if *v < self.names.len() => Ok(()),
            GraphPoint::Vertex(v) => Err(GraphError::NoSuchVertex(*v)),
            GraphPoint::Edge { edge, offset } => {
                let len = &self.edge(*edge)?.length;
                if offset.is_positive() && offset < len {
                    Ok(())
                } else {
                    Err(GraphError::OffsetOutOfRange {
                        edge: *edge,
                        offset: offset.clone(),
                        length: len.clone(),
                    })
                }
            }
        }
    }

    /// All outgoing tangent directions at `p`, ordered by edge and with
    /// the direction toward `from` first.
    pub fn tangent_directions(&self, p: &GraphPoint) -> Vec<TangentDirection> {
        let mut out = Vec::new();
        match p {
            GraphPoint::Vertex(v) => {
                for (k, e) in self.edges.iter().enumerate() {
                    if e.to == *v {
                        out.push(TangentDirection {
                            base: p.clone(),
                            edge: k,
                            forward: false,
                        });
                    }
                    if e.from == *v {
                        out.push(TangentDirection {
                            base: p.clone(),
                            edge: k,
                            forward: true,
                        });
                    }
                }
            }
            GraphPoint::Edge { edge, .. } => {
                for forward in [false, true] {
                    out.push(TangentDirection {
                        base: p.clone(),
                        edge: *edge,
                        forward,
                    });
                }
            }
        }
        out
    }

    pub fn describe_point(&self, p: &GraphPoint) -> String {
        match p {
            GraphPoint::Vertex(v) => self.names[*v].clone(),
            GraphPoint::Edge { edge, offset } => format!("e{edge}@{offset}"),
        }
    }

    pub fn describe_direction(&self, t: &TangentDirection) -> String {
        let e = &self.edges[t.edge];
        let toward = if t.forward { e.to } else { e.from };
        format!("{} along e{} toward {}", self.describe_point(&t.base), t.edge, self.names[toward])
    }

    /// Distance from the `from` endpoint of `e` to `p`, if `p` lies on `e`
    /// (an endpoint vertex lies on every incident edge).
    pub fn offset_on(&self, e: usize, p: &GraphPoint) -> Option<Q> {
        let edge = &self.edges[e];
        match p {
            GraphPoint::Vertex(v) if *v == edge.from => Some(Q::zero()),
            GraphPoint::Vertex(v) if *v == edge.to => Some(edge.length.clone()),
            GraphPoint::Edge { edge: k, offset } if *k == e => Some(offset.clone()),
            _ => None,
        }
    }
}

/// A finitely supported integer combination of points.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Divisor {
    coeffs: BTreeMap<GraphPoint, i64>,
}

impl Divisor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn point(p: GraphPoint, n: i64) -> Self {
        let mut d = Self::zero();
        d.add_at(p, n);
        d
    }

    pub fn from_points<I: IntoIterator<Item = (GraphPoint, i64)>>(items: I) -> Self {
        let mut d = Self::zero();
        for (p, n) in items {
            d.add_at(p, n);
        }
        d
    }

    pub fn add_at(&mut self, p: GraphPoint, n: i64) {
        let c = self.coeffs.entry(p.clone()).or_insert(0);
        *c += n;
        if *c == 0 {
            self.coeffs.remove(&p);
        }
    }

    pub fn get(&self, p: &GraphPoint) -> i64 {
        self.coeffs.get(p).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> i64 {
        self.coeffs.values().sum()
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.values().all(|&c| c >= 0)
    }

    pub fn support(&self) -> impl Iterator<Item = &GraphPoint> {
        self.coeffs.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&GraphPoint, i64)> {
        self.coeffs.iter().map(|(p, &c)| (p, c))
    }

    pub fn plus(&self, other: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (p, c) in other.entries() {
            out.add_at(p.clone(), c);
        }
        out
    }

    pub fn minus(&self, other: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (p, c) in other.entries() {
            out.add_at(p.clone(), -c);
        }
        out
    }
}

/// Cuts and slopes of a function on one edge, read from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgePiece {
    pub cuts: Vec<Q>,
    pub slopes: Vec<i64>,
}

impl EdgePiece {
    pub fn linear(slope: i64) -> Self {
        EdgePiece {
            cuts: Vec::new(),
            slopes: vec![slope],
        }
    }

    /// Increase from `0` to `t`.
    fn rise(&self, t: &Q) -> Q {
        let mut total = Q::zero();
        let mut left = Q::zero();
        for (k, s) in self.slopes.iter().enumerate() {
            let right = self.cuts.get(k);
            let stop = match right {
                Some(c) if c < t => c.clone(),
                _ => t.clone(),
            };
            total += (&stop - &left) * q(*s);
            if right.is_none_or(|c| c >= t) {
                break;
            }
            left = stop;
        }
        total
    }

    /// Slope of the cell to the right of `t` and to the left of `t`.
    fn slopes_around(&self, t: &Q) -> (i64, i64) {
        let right = self.cuts.iter().filter(|c| *c <= t).count();
        let left = self.cuts.iter().filter(|c| *c < t).count();
        (self.slopes[right], self.slopes[left])
    }

    /// Drops cuts between equal slopes.
    fn normalized(&self) -> EdgePiece {
        let mut cuts = Vec::new();
        let mut slopes = vec![self.slopes[0]];
        for (c, &s) in self.cuts.iter().zip(&self.slopes[1..]) {
            if s != *slopes.last().expect("nonempty") {
                cuts.push(c.clone());
                slopes.push(s);
            }
        }
        EdgePiece { cuts, slopes }
    }
}

/// Continuous piecewise-linear function with integer slopes.
#[derive(Debug, Clone)]
pub struct PLFunction {
    graph: Arc<MetricGraph>,
    pieces: Vec<EdgePiece>,
    anchor: usize,
    anchor_value: Q,
    vertex_values: Vec<Q>,
}

impl PartialEq for PLFunction {
    fn eq(&self, other: &Self) -> bool {
        self.graph == other.graph && self.pieces == other.pieces && self.vertex_values == other.vertex_values
    }
}

impl Eq for PLFunction {}

impl PLFunction {
    /// Validates cuts, propagates values from the anchor and rejects data
    /// that disagree around a cycle.
    pub fn new(graph: Arc<MetricGraph>, pieces: Vec<EdgePiece>, anchor: usize, anchor_value: Q) -> Result<Self, GraphError> {
        if pieces.len() != graph.edges.len() {
            return Err(GraphError::LengthMismatch {
                expected: graph.edges.len(),
                got: pieces.len(),
            });
        }
        if anchor >= graph.num_vertices() {
            return Err(GraphError::NoSuchVertex(anchor));
        }
        for (k, (p, e)) in pieces.iter().zip(&graph.edges).enumerate() {
            let bad = |reason: &str| GraphError::BadPiece {
                edge: k,
                reason: reason.to_string(),
            };
            if p.slopes.len() != p.cuts.len() + 1 {
                return Err(bad("needs one more slope than cuts"));
            }
            if p.cuts.iter().any(|c| !c.is_positive() || *c >= e.length) {
                return Err(bad("cuts must lie strictly inside the edge"));
            }
            if p.cuts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("cuts must be strictly increasing"));
            }
        }
        let pieces: Vec<EdgePiece> = pieces.iter().map(EdgePiece::normalized).collect();
        let mut values: Vec<Option<Q>> = vec![None; graph.num_vertices()];
        values[anchor] = Some(anchor_value.clone());
        let mut queue = VecDeque::from([anchor]);
        while let Some(v) = queue.pop_front() {
            let here = values[v].clone().expect("visited");
            for (k, e) in graph.edges.iter().enumerate() {
                let full = pieces[k].rise(&e.length);
                let mut reach = Vec::new();
                if e.from == v {
                    reach.push((e.to, &here + &full));
                }
                if e.to == v {
                    reach.push((e.from, &here - &full));
                }
                for (w, val) in reach {
                    match &values[w] {
                        Some(old) if *old != val => {
                            return Err(GraphError::Discontinuous(graph.names[w].clone()));
                        }
                        Some(_) => {}
                        None => {
                            values[w] = Some(val);
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        let vertex_values = values.into_iter().map(|v| v.expect("connected")).collect();
        Ok(PLFunction {
            graph,
            pieces,
            anchor,
            anchor_value,
            vertex_values,
        })
    }

    pub fn constant(graph: Arc<MetricGraph>, c: Q) -> Self {
        let pieces = vec![EdgePiece::linear(0); graph.edges.len()];
        PLFunction::new(graph, pieces, 0, c).expect("constant is continuous")
    }

    /// Linear on every edge with the given slopes (read from `from` to `to`).
    pub fn edge_linear(graph: Arc<MetricGraph>, slopes: &[i64], anchor: usize, value: Q) -> Result<Self, GraphError> {
        let pieces = slopes.iter().map(|&s| EdgePiece::linear(s)).collect();
        PLFunction::new(graph, pieces, anchor, value)
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    pub fn pieces(&self) -> &[EdgePiece] {
        &self.pieces
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn anchor_value(&self) -> &Q {
        &self.anchor_value
    }

    pub fn vertex_value(&self, v: usize) -> &Q {
        &self.vertex_values[v]
    }

    /// Value at offset `t` of edge `e`, with `0 ≤ t ≤ length`.
    pub fn value_on_edge(&self, e: usize, t: &Q) -> Q {
        let from = self.graph.edges[e].from;
        &self.vertex_values[from] + self.pieces[e].rise(t)
    }

    pub fn evaluate(&self, p: &GraphPoint) -> Result<Q, GraphError> {
        self.graph.check_point(p)?;
        Ok(match p {
            GraphPoint::Vertex(v) => self.vertex_values[*v].clone(),
            GraphPoint::Edge { edge, offset } => self.value_on_edge(*edge, offset),
        })
    }

    /// Same function plus a constant.
    pub fn shifted(&self, a: &Q) -> PLFunction {
        let mut f = self.clone();
        f.anchor_value += a;
        for v in &mut f.vertex_values {
            *v += a;
        }
        f
    }

    /// Outgoing slope along `dir`.
    pub fn slope_along(&self, dir: &TangentDirection) -> i64 {
        let piece = &self.pieces[dir.edge];
        let len = &self.graph.edges[dir.edge].length;
        let mut t = self.graph.offset_on(dir.edge, &dir.base).expect("direction lies on its edge");
        // On a loop edge the base is both endpoints; the orientation decides.
        if !dir.forward && t.is_zero() {
            t = len.clone();
        }
        let (right, left) = piece.slopes_around(&t);
        if dir.forward {
            right
        } else {
            -left
        }
    }

    /// Minus the sum of outgoing slopes at `p`.
    pub fn ord_at(&self, p: &GraphPoint) -> i64 {
        -self
            .graph
            .tangent_directions(p)
            .iter()
            .map(|t| self.slope_along(t))
            .sum::<i64>()
    }

    /// Interior cut points, in edge order.
    pub fn bend_points(&self) -> Vec<GraphPoint> {
        self.pieces
            .iter()
            .enumerate()
            .flat_map(|(e, p)| {
                p.cuts.iter().map(move |c| GraphPoint::Edge {
                    edge: e,
                    offset: c.clone(),
                })
            })
            .collect()
    }

    pub fn divisor_of(&self) -> Divisor {
        let vertices = (0..self.graph.num_vertices()).map(GraphPoint::Vertex);
        Divisor::from_points(
            vertices
                .chain(self.bend_points())
                .map(|p| {
                    let n = self.ord_at(&p);
                    (p, n)
                })
                .filter(|(_, n)| *n != 0),
        )
    }

    /// `D + div(f) ≥ 0`.
    pub fn in_r_of_d(&self, d: &Divisor) -> bool {
        d.plus(&self.divisor_of()).is_effective()
    }

    /// Largest and smallest values; both are attained at vertices or cuts.
    pub fn extremes(&self) -> (Q, Q) {
        let mut vals: Vec<Q> = self.vertex_values.clone();
        for (e, p) in self.pieces.iter().enumerate() {
            for c in &p.cuts {
                vals.push(self.value_on_edge(e, c));
            }
        }
        let max = vals.iter().max().expect("a vertex").clone();
        let min = vals.iter().min().expect("a vertex").clone();
        (max, min)
    }
}

/// Sorted distinct cut offsets of all `fns` on edge `e`, with the two
/// endpoints.
pub fn common_refinement(fns: &[&PLFunction], e: usize) -> Vec<Q> {
    let len = fns[0].graph.edges[e].length.clone();
    let mut pts: BTreeSet<Q> = BTreeSet::new();
    pts.insert(Q::zero());
    pts.insert(len);
    for f in fns {
        pts.extend(f.pieces[e].cuts.iter().cloned());
    }
    pts.into_iter().collect()
}

/// Pointwise minimum of `f_i + a_i`.
pub fn tropical_min(fns: &[PLFunction], shifts: &[Q]) -> Result<PLFunction, GraphError> {
    if fns.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    if fns.len() != shifts.len() {
        return Err(GraphError::LengthMismatch {
            expected: fns.len(),
            got: shifts.len(),
        });
    }
    let graph = fns[0].graph.clone();
    if fns.iter().any(|f| f.graph != graph) {
        return Err(GraphError::GraphMismatch);
    }
    let refs: Vec<&PLFunction> = fns.iter().collect();
    let mut pieces = Vec::with_capacity(graph.edges.len());
    for e in 0..graph.edges.len() {
        let grid = common_refinement(&refs, e);
        let mut cuts = Vec::new();
        let mut slopes = Vec::new();
        for w in grid.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let lines: Vec<(Q, i64)> = fns
                .iter()
                .zip(shifts)
                .map(|(f, s)| {
                    let mid = (a + b) / q(2);
                    (f.value_on_edge(e, a) + s, f.pieces[e].slopes_around(&mid).0)
                })
                .collect();
            for (start, s) in lower_envelope(&lines, a, b) {
                if !slopes.is_empty() {
                    cuts.push(start);
                }
                slopes.push(s);
            }
        }
        pieces.push(EdgePiece { cuts, slopes });
    }
    let anchor = 0;
    let value = fns
        .iter()
        .zip(shifts)
        .map(|(f, s)| &f.vertex_values[anchor] + s)
        .min()
        .expect("nonempty");
    PLFunction::new(graph, pieces, anchor, value)
}

/// Lower envelope on `[a, b]` of lines given by their value at `a` and
/// slope: `(start, slope)` for each linear run.
fn lower_envelope(lines: &[(Q, i64)], a: &Q, b: &Q) -> Vec<(Q, i64)> {
    let at = |k: usize, t: &Q| &lines[k].0 + (t - a) * q(lines[k].1);
    let pick = |t: &Q| {
        (0..lines.len())
            .min_by(|&i, &j| at(i, t).cmp(&at(j, t)).then(lines[i].1.cmp(&lines[j].1)))
            .expect("nonempty")
    };
    let mut out = Vec::new();
    let mut t = a.clone();
    let mut cur = pick(&t);
    loop {
        out.push((t.clone(), lines[cur].1));
        // Earliest point after t where a line with a smaller slope catches up.
        let mut next: Option<(Q, usize)> = None;
        for k in 0..lines.len() {
            if lines[k].1 >= lines[cur].1 {
                continue;
            }
            let gap = at(k, &t) - at(cur, &t);
            let dt = gap / q(lines[cur].1 - lines[k].1);
            let cross = &t + dt;
            if cross <= t || cross >= *b {
                continue;
            }
            let better = match &next {
                None => true,
                Some((c, j)) => cross < *c || (cross == *c && lines[k].1 < lines[*j].1),
            };
            if better {
                next = Some((cross, k));
            }
        }
        match next {
            Some((c, k)) => {
                t = c;
                cur = k;
            }
            None => break,
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<String>,
    edges: Vec<EdgeJson>,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    from: String,
    to: String,
    length: String,
}

#[derive(Serialize, Deserialize)]
struct FunctionJson {
    anchor: String,
    value: String,
    edges: Vec<PieceJson>,
}

#[derive(Serialize, Deserialize)]
struct PieceJson {
    cuts: Vec<String>,
    slopes: Vec<i64>,
}

/// A point as JSON: `{"vertex":"u"}` or `{"edge":0,"offset":"1/2"}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Vertex { vertex: String },
    Edge { edge: usize, offset: String },
}

#[derive(Serialize, Deserialize)]
struct DivisorEntryJson {
    at: PointJson,
    coeff: i64,
}

impl MetricGraph {
    pub fn to_json(&self) -> serde_json::Value {
        let g = GraphJson {
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    from: self.names[e.from].clone(),
                    to: self.names[e.to].clone(),
                    length: e.length.to_string(),
                })
                .collect(),
        };
        serde_json::to_value(g).expect("plain data")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, JsonError> {
        let g: GraphJson = serde_json::from_value(v.clone())?;
        let names: Vec<&str> = g.vertices.iter().map(String::as_str).collect();
        let edges = g
            .edges
            .iter()
            .map(|e| Ok((e.from.as_str(), e.to.as_str(), parse_q(&e.length)?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        Ok(MetricGraph::from_names(&names, &edges)?)
    }

    pub fn point_to_json(&self, p: &GraphPoint) -> PointJson {
        match p {
            GraphPoint::Vertex(v) => PointJson::Vertex {
                vertex: self.names[*v].clone(),
            },
            GraphPoint::Edge { edge, offset } => PointJson::Edge {
                edge: *edge,
                offset: offset.to_string(),
            },
        }
    }

    pub fn point_from_json(&self, p: &PointJson) -> Result<GraphPoint, GraphError> {
        match p {
            PointJson::Vertex { vertex } => Ok(GraphPoint::Vertex(self.vertex(vertex)?)),
            PointJson::Edge { edge, offset } => self.point(*edge, parse_q(offset)?),
        }
    }

    pub fn divisor_to_json(&self, d: &Divisor) -> serde_json::Value {
        let entries: Vec<DivisorEntryJson> = d
            .entries()
            .map(|(p, c)| DivisorEntryJson {
                at: self.point_to_json(p),
                coeff: c,
            })
            .collect();
        serde_json::to_value(entries).expect("plain data")
    }

    pub fn divisor_from_json(&self, v: &serde_json::Value) -> Result<Divisor, JsonError> {
        let entries: Vec<DivisorEntryJson> = serde_json::from_value(v.clone())?;
        let mut d = Divisor::zero();
        for e in entries {
            d.add_at(self.point_from_json(&e.at)?, e.coeff);
        }
        Ok(d)
    }
}

impl PLFunction {
    pub fn to_json(&self) -> serde_json::Value {
        let f = FunctionJson {
            anchor: self.graph.names[self.anchor].clone(),
            value: self.anchor_value.to_string(),
            edges: self
                .pieces
                .iter()
                .map(|p| PieceJson {
                    cuts: p.cuts.iter().map(|c| c.to_string()).collect(),
                    slopes: p.slopes.clone(),
                })
                .collect(),
        };
        serde_json::to_value(f).expect("plain data")
    }

    pub fn from_json(graph: Arc<MetricGraph>, v: &serde_json::Value) -> Result<Self, JsonError> {
        let f: FunctionJson = serde_json::from_value(v.clone())?;
        let anchor = graph.vertex(&f.anchor)?;
        let pieces = f
            .edges
            .iter()
            .map(|p| {
                Ok(EdgePiece {
                    cuts: p.cuts.iter().map(|c| parse_q(c)).collect::<Result<_, _>>()?,
                    slopes: p.slopes.clone(),
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        Ok(PLFunction::new(graph, pieces, anchor, parse_q(&f.value)?)?)
    }
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error(transparent)]
    Syntax(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl fmt::Display for GraphPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphPoint::Vertex(v) => write!(f, "vertex {v}"),
            GraphPoint::Edge { edge, offset } => write!(f, "e{edge}@{offset}"),
        }
    }
}
