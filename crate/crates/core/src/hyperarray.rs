//! Dot arrays on boxes `[r_1] x ... x [r_d]`.
//!
//! Positions are 0-based coordinate tuples. The all-zeros tuple is the
//! minimum of the product order; the meet is the pointwise minimum.
//! Every set iteration is lexicographic so outputs are reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod enumeration;

pub use enumeration::{
    count_permutation_arrays, enumerate_permutation_arrays, for_each_permutation_array,
    for_each_permutation_array_within, par_map_permutation_arrays, Budget,
};

/// A position of a box: one coordinate per axis.
pub type Position = Vec<u8>;

/// Largest supported per-axis bound; axis value sets are kept in `u64` masks.
pub const MAX_BOUND: u8 = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArrayError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("position {0:?} lies outside the box")]
    OutOfBounds(Position),
    #[error("a box needs at least one axis")]
    ZeroDimension,
    #[error("axis bound {0} exceeds the supported maximum {MAX_BOUND}")]
    BoundTooLarge(u8),
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("rank is undefined for an empty dot array")]
    Empty,
    #[error("dot array is not totally rankable")]
    NotTotallyRankable,
    #[error("not a permutation array: {0}")]
    NotPermutationArray(String),
    #[error("projection needs dimension at least 2")]
    ProjectionOfLine,
    #[error("input is not an antichain")]
    NotAntichain,
    #[error("no jump exists at {0:?}: its rank is -1")]
    NoJump(Position),
    #[error("jump at {at:?} is not unique: {first:?} and {second:?}")]
    AmbiguousJump {
        at: Position,
        first: Position,
        second: Position,
    },
    #[error("enumeration of rank {r}, dimension {d} exceeds the budget ({reason})")]
    BudgetExceeded { r: u8, d: usize, reason: String },
}

/// Pointwise minimum of two positions.
pub fn meet(x: &[u8], y: &[u8]) -> Result<Position, ArrayError> {
    if x.len() != y.len() {
        return Err(ArrayError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| *a.min(b)).collect())
}

/// `x ⪯ y` in the product order.
pub fn precedes(x: &[u8], y: &[u8]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a <= b)
}

/// The box `[r_1] x ... x [r_d]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    bounds: Vec<u8>,
    strides: Vec<usize>,
    size: usize,
}

impl Shape {
    pub fn new(bounds: Vec<u8>) -> Result<Self, ArrayError> {
        if bounds.is_empty() {
            return Err(ArrayError::ZeroDimension);
        }
        if let Some(&b) = bounds.iter().find(|&&b| b > MAX_BOUND) {
            return Err(ArrayError::BoundTooLarge(b));
        }
        let mut strides = vec![1usize; bounds.len()];
        for i in (0..bounds.len() - 1).rev() {
            strides[i] = strides[i + 1] * (bounds[i + 1] as usize + 1);
        }
        let size = strides[0] * (bounds[0] as usize + 1);
        Ok(Shape {
            bounds,
            strides,
            size,
        })
    }

    /// The cube `[r]^d`.
    pub fn cube(r: u8, d: usize) -> Result<Self, ArrayError> {
        Shape::new(vec![r; d])
    }

    pub fn bounds(&self) -> &[u8] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Number of positions in the box.
    pub fn size(&self) -> usize {
        self.size
    }

    /// The common bound when the box is a cube.
    pub fn cube_bound(&self) -> Option<u8> {
        let r = self.bounds[0];
        self.bounds.iter().all(|&b| b == r).then_some(r)
    }

    pub fn contains(&self, x: &[u8]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(a, b)| a <= b)
    }

    pub fn check(&self, x: &[u8]) -> Result<(), ArrayError> {
        if x.len() != self.dim() {
            return Err(ArrayError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(ArrayError::OutOfBounds(x.to_vec()));
        }
        Ok(())
    }

    /// Mixed-radix index; the first coordinate is most significant, so index
    /// order is lexicographic order.
    pub fn index(&self, x: &[u8]) -> usize {
        x.iter()
            .zip(&self.strides)
            .map(|(&a, &s)| a as usize * s)
            .sum()
    }

    pub fn position(&self, mut index: usize) -> Position {
        self.strides
            .iter()
            .map(|&s| {
                let a = index / s;
                index %= s;
                a as u8
            })
            .collect()
    }

    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// All positions in lexicographic order.
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.size).map(|i| self.position(i))
    }
}

/// A finite set of dotted positions inside a box.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DotArray {
    shape: Shape,
    dots: BTreeSet<Position>,
}

impl DotArray {
    pub fn new<I>(shape: Shape, dots: I) -> Result<Self, ArrayError>
    where
        I: IntoIterator<Item = Position>,
    {
        let mut set = BTreeSet::new();
        for x in dots {
            shape.check(&x)?;
            set.insert(x);
        }
        Ok(DotArray { shape, dots: set })
    }

    /// Dots inside the cube `[r]^d`, with `d` taken from the first dot.
    pub fn in_cube<I>(r: u8, dots: I) -> Result<Self, ArrayError>
    where
        I: IntoIterator<Item = Position>,
    {
        let dots: Vec<Position> = dots.into_iter().collect();
        let d = dots.first().map(Vec::len).ok_or(ArrayError::Empty)?;
        DotArray::new(Shape::cube(r, d)?, dots)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn dots(&self) -> &BTreeSet<Position> {
        &self.dots
    }

    pub fn len(&self) -> usize {
        self.dots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dots.is_empty()
    }

    pub fn contains(&self, x: &[u8]) -> bool {
        self.dots.contains(x)
    }

    /// The dots `y ⪰ x`.
    pub fn principal_subarray(&self, x: &[u8]) -> Result<DotArray, ArrayError> {
        self.shape.check(x)?;
        let dots = self.dots.iter().filter(|y| precedes(x, y)).cloned();
        DotArray::new(self.shape.clone(), dots)
    }

    fn check_axis(&self, axis: usize) -> Result<(), ArrayError> {
        if axis >= self.dim() {
            return Err(ArrayError::AxisOutOfRange {
                axis,
                dim: self.dim(),
            });
        }
        Ok(())
    }

    /// One less than the number of distinct values on `axis` (0-based).
    pub fn axis_rank(&self, axis: usize) -> Result<i32, ArrayError> {
        self.check_axis(axis)?;
        if self.is_empty() {
            return Err(ArrayError::Empty);
        }
        let values: BTreeSet<u8> = self.dots.iter().map(|x| x[axis]).collect();
        Ok(values.len() as i32 - 1)
    }

    pub fn axis_ranks(&self) -> Result<Vec<i32>, ArrayError> {
        (0..self.dim()).map(|i| self.axis_rank(i)).collect()
    }

    /// The common axis rank, if every axis agrees.
    pub fn rankable(&self) -> Result<Option<i32>, ArrayError> {
        let ranks = self.axis_ranks()?;
        Ok(ranks.iter().all(|&s| s == ranks[0]).then_some(ranks[0]))
    }

    /// Rank of a possibly empty array: `-1` when empty.
    fn rank_or_empty(&self) -> Option<i32> {
        if self.is_empty() {
            Some(-1)
        } else {
            self.rankable().expect("nonempty")
        }
    }

    /// Checks every principal subarray directly.
    pub fn is_totally_rankable(&self) -> Result<bool, ArrayError> {
        if self.is_empty() {
            return Err(ArrayError::Empty);
        }
        for x in self.shape.positions() {
            if self.principal_subarray(&x)?.rank_or_empty().is_none() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Two-element exchange test: for dots `x, y` and axes `i, j` with
    /// `x_i > y_i` and `x_j = y_j` there must be a dot `z ⪰ x ∧ y` with
    /// `z_i = y_i` and `z_j > y_j`.
    pub fn is_totally_rankable_by_exchange(&self) -> Result<bool, ArrayError> {
        if self.is_empty() {
            return Err(ArrayError::Empty);
        }
        Ok(self.exchange_violation().is_none())
    }

    /// First `(x, y, i, j)` violating the exchange condition.
    pub fn exchange_violation(&self) -> Option<(Position, Position, usize, usize)> {
        let d = self.dim();
        for x in &self.dots {
            for y in &self.dots {
                for i in 0..d {
                    if x[i] <= y[i] {
                        continue;
                    }
                    for j in 0..d {
                        if x[j] != y[j] {
                            continue;
                        }
                        let m = meet(x, y).expect("same box");
                        let found = self
                            .dots
                            .iter()
                            .any(|z| precedes(&m, z) && z[i] == y[i] && z[j] > y[j]);
                        if !found {
                            return Some((x.clone(), y.clone(), i, j));
                        }
                    }
                }
            }
        }
        None
    }

    /// Per-position axis value masks of principal subarrays, plus the masks
    /// of `P[x] \ {x}` (the strict upper set).
    fn upper_masks(&self) -> (Vec<u64>, Vec<u64>) {
        let d = self.dim();
        let n = self.shape.size();
        let bounds = self.shape.bounds();
        let mut full = vec![0u64; n * d];
        let mut strict = vec![0u64; n * d];
        for idx in (0..n).rev() {
            let x = self.shape.position(idx);
            for i in 0..d {
                if x[i] < bounds[i] {
                    let up = idx + self.shape.stride(i);
                    for j in 0..d {
                        strict[idx * d + j] |= full[up * d + j];
                    }
                }
            }
            let dotted = self.dots.contains(&x);
            for j in 0..d {
                full[idx * d + j] = strict[idx * d + j] | if dotted { 1u64 << x[j] } else { 0 };
            }
        }
        (full, strict)
    }

    /// Rank array, computed by propagating axis value sets downward.
    pub fn rank_array(&self) -> Result<RankArray, ArrayError> {
        if self.is_empty() {
            return Err(ArrayError::Empty);
        }
        let d = self.dim();
        let (full, _) = self.upper_masks();
        let mut values = Vec::with_capacity(self.shape.size());
        for idx in 0..self.shape.size() {
            let counts: Vec<u32> = (0..d).map(|j| full[idx * d + j].count_ones()).collect();
            if counts.iter().any(|&c| c != counts[0]) {
                return Err(ArrayError::NotTotallyRankable);
            }
            values.push(counts[0] as i32 - 1);
        }
        Ok(RankArray {
            shape: self.shape.clone(),
            values,
        })
    }

    /// Positions that are the meet of at least two dots, each sharing a
    /// coordinate with the position. A position `x` qualifies exactly when
    /// every coordinate `x_j` is attained on axis `j` by some dot `y ⪰ x`,
    /// `y ≠ x`.
    pub fn redundant_positions(&self) -> BTreeSet<Position> {
        let d = self.dim();
        let (_, strict) = self.upper_masks();
        let mut out = BTreeSet::new();
        for idx in 0..self.shape.size() {
            let x = self.shape.position(idx);
            if (0..d).all(|j| strict[idx * d + j] & (1u64 << x[j]) != 0) {
                out.insert(x);
            }
        }
        out
    }

    /// Closure under pairwise meet; equals `P ∪ R(P)`.
    pub fn meet_closure(&self) -> DotArray {
        let mut dots = self.dots.clone();
        dots.extend(self.redundant_positions());
        DotArray {
            shape: self.shape.clone(),
            dots,
        }
    }

    pub fn is_meet_closed(&self) -> bool {
        self.redundant_positions().is_subset(&self.dots)
    }

    /// Totally rankable of rank `r` on `[r]^d` with no dotted redundant
    /// position.
    pub fn is_permutation_array(&self) -> bool {
        self.permutation_defect().is_none()
    }

    fn permutation_defect(&self) -> Option<String> {
        let Some(r) = self.shape.cube_bound() else {
            return Some("box is not a cube".into());
        };
        if self.is_empty() {
            return Some("empty array".into());
        }
        let ranks = match self.rank_array() {
            Ok(ranks) => ranks,
            Err(_) => return Some("not totally rankable".into()),
        };
        let top = ranks.get(&vec![0; self.dim()]);
        if top != r as i32 {
            return Some(format!("rank {top} differs from box bound {r}"));
        }
        let redundant = self.redundant_positions();
        if let Some(x) = self.dots.iter().find(|x| redundant.contains(*x)) {
            return Some(format!("dotted redundant position {x:?}"));
        }
        None
    }

    /// The unique permutation array with the same rank array: `P \ R(P)`.
    pub fn permutation_core(&self) -> Result<PermutationArray, ArrayError> {
        self.rank_array()?;
        let redundant = self.redundant_positions();
        let dots = self.dots.difference(&redundant).cloned();
        PermutationArray::new(DotArray::new(self.shape.clone(), dots)?)
    }

    /// Image under deletion of `axis`.
    pub fn project(&self, axis: usize) -> Result<DotArray, ArrayError> {
        if self.dim() < 2 {
            return Err(ArrayError::ProjectionOfLine);
        }
        self.check_axis(axis)?;
        let mut bounds = self.shape.bounds().to_vec();
        bounds.remove(axis);
        let dots = self.dots.iter().map(|x| {
            let mut y = x.clone();
            y.remove(axis);
            y
        });
        DotArray::new(Shape::new(bounds)?, dots)
    }

    /// Every full hyperplane slice holds exactly one dot.
    pub fn is_sparse(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            let mut counts = vec![0usize; self.shape.bounds()[i] as usize + 1];
            for x in &self.dots {
                counts[x[i] as usize] += 1;
            }
            counts.iter().all(|&c| c == 1)
        })
    }

    /// No two distinct dots are comparable.
    pub fn is_antichain(&self) -> bool {
        self.dots.iter().all(|x| {
            self.dots
                .iter()
                .all(|y| x == y || !precedes(x, y))
        })
    }

    /// Dot array on the same box with an explicit dot set.
    pub fn with_dots<I>(&self, dots: I) -> Result<DotArray, ArrayError>
    where
        I: IntoIterator<Item = Position>,
    {
        DotArray::new(self.shape.clone(), dots)
    }
}

impl fmt::Display for DotArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells = |x: &[u8]| {
            if self.contains(x) {
                "*".to_string()
            } else {
                ".".to_string()
            }
        };
        write!(f, "{}", render_layers(&self.shape, cells))
    }
}

/// Rank of every principal subarray, `-1` where it is empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankArray {
    shape: Shape,
    values: Vec<i32>,
}

impl RankArray {
    /// Builds a rank array from values listed in lexicographic position order.
    pub fn from_values(shape: Shape, values: Vec<i32>) -> Result<Self, ArrayError> {
        if values.len() != shape.size() {
            return Err(ArrayError::DimensionMismatch {
                expected: shape.size(),
                got: values.len(),
            });
        }
        Ok(RankArray { shape, values })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Value at a position of the box. Panics outside the box.
    pub fn get(&self, x: &[u8]) -> i32 {
        assert!(self.shape.contains(x), "position {x:?} outside the box");
        self.values[self.shape.index(x)]
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    /// `(position, value)` pairs in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (Position, i32)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.shape.position(i), v))
    }

    /// `x ⪯ y` implies `value(x) ≥ value(y)`.
    pub fn is_non_increasing(&self) -> bool {
        let d = self.shape.dim();
        (0..self.shape.size()).all(|idx| {
            let x = self.shape.position(idx);
            (0..d).all(|i| {
                x[i] == self.shape.bounds()[i]
                    || self.values[idx] >= self.values[idx + self.shape.stride(i)]
            })
        })
    }

    /// Rendering with the same layer layout as dot arrays.
    pub fn render(&self) -> String {
        let width = self
            .values
            .iter()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1);
        render_layers(&self.shape, |x| format!("{:>width$}", self.get(x)))
    }
}

/// `ρ_st(x) = max(-1, r - Σ x_i)`.
pub fn standard_rank_array(r: u8, d: usize) -> Result<RankArray, ArrayError> {
    let shape = Shape::cube(r, d)?;
    let values = shape
        .positions()
        .map(|x| (r as i32 - x.iter().map(|&a| a as i32).sum::<i32>()).max(-1))
        .collect();
    Ok(RankArray { shape, values })
}

/// Positions of `[r]^d` whose coordinates sum to `r`.
pub fn standard_permutation_array(r: u8, d: usize) -> Result<PermutationArray, ArrayError> {
    let shape = Shape::cube(r, d)?;
    let dots: Vec<Position> = shape
        .positions()
        .filter(|x| x.iter().map(|&a| a as u32).sum::<u32>() == r as u32)
        .collect();
    PermutationArray::new(DotArray::new(shape, dots)?)
}

/// A permutation array together with its rank array and redundant positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationArray {
    array: DotArray,
    ranks: RankArray,
    redundant: BTreeSet<Position>,
    rank: u8,
}

impl PermutationArray {
    pub fn new(array: DotArray) -> Result<Self, ArrayError> {
        if let Some(why) = array.permutation_defect() {
            return Err(ArrayError::NotPermutationArray(why));
        }
        let ranks = array.rank_array()?;
        let redundant = array.redundant_positions();
        let rank = array.shape().cube_bound().expect("checked cube");
        Ok(PermutationArray {
            array,
            ranks,
            redundant,
            rank,
        })
    }

    pub fn array(&self) -> &DotArray {
        &self.array
    }

    pub fn into_array(self) -> DotArray {
        self.array
    }

    pub fn rank(&self) -> u8 {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.array.dim()
    }

    pub fn rank_array(&self) -> &RankArray {
        &self.ranks
    }

    pub fn redundant_positions(&self) -> &BTreeSet<Position> {
        &self.redundant
    }

    /// `P ∪ R(P)`.
    pub fn redundant_closure(&self) -> DotArray {
        let mut dots = self.array.dots().clone();
        dots.extend(self.redundant.iter().cloned());
        DotArray {
            shape: self.array.shape().clone(),
            dots,
        }
    }

    pub fn is_sparse(&self) -> bool {
        self.array.is_sparse()
    }

    /// The unique `y` in the redundant closure with `y ⪰ x` and the same rank
    /// as `x`.
    pub fn find_jump(&self, x: &[u8]) -> Result<Position, ArrayError> {
        self.array.shape().check(x)?;
        let target = self.ranks.get(x);
        if target < 0 {
            return Err(ArrayError::NoJump(x.to_vec()));
        }
        let closure = self.redundant_closure();
        let mut found: Option<&Position> = None;
        for y in closure.dots() {
            if precedes(x, y) && self.ranks.get(y) == target {
                if let Some(first) = found {
                    return Err(ArrayError::AmbiguousJump {
                        at: x.to_vec(),
                        first: first.clone(),
                        second: y.clone(),
                    });
                }
                found = Some(y);
            }
        }
        // A jump always exists for a permutation array; absence is a bug.
        found
            .cloned()
            .ok_or_else(|| ArrayError::NoJump(x.to_vec()))
    }

    /// Duplicates the last coordinate, raising the dimension by one.
    pub fn extend_dimension(&self) -> Result<PermutationArray, ArrayError> {
        if !self.array.is_antichain() {
            return Err(ArrayError::NotAntichain);
        }
        let d = self.dim();
        let dots = self.array.dots().iter().map(|x| {
            let mut y = x.clone();
            y.push(x[d - 1]);
            y
        });
        PermutationArray::new(DotArray::new(Shape::cube(self.rank, d + 1)?, dots)?)
    }

    /// Adds the apex `(r+1, ..., r+1)` one above the current bound, raising
    /// the rank by one.
    pub fn extend_rank(&self) -> Result<PermutationArray, ArrayError> {
        let r = self.rank + 1;
        let d = self.dim();
        let mut dots: Vec<Position> = self.array.dots().iter().cloned().collect();
        dots.push(vec![r; d]);
        PermutationArray::new(DotArray::new(Shape::cube(r, d)?, dots)?)
    }
}

/// Renders a box as 2-d grids. Rows are the first coordinate with the
/// maximum on top, columns the second coordinate; grids for the remaining
/// coordinates are laid out left to right in lexicographic order. For
/// `d = 1` the single axis runs bottom to top.
pub fn render_layers<F>(shape: &Shape, cell: F) -> String
where
    F: Fn(&[u8]) -> String,
{
    let bounds = shape.bounds();
    let d = shape.dim();
    let rows = bounds[0] as usize + 1;
    let cols = if d >= 2 { bounds[1] as usize + 1 } else { 1 };
    let rest: Vec<Position> = if d > 2 {
        Shape::new(bounds[2..].to_vec())
            .expect("valid")
            .positions()
            .collect()
    } else {
        vec![Vec::new()]
    };
    let mut lines = vec![String::new(); rows];
    for (k, tail) in rest.iter().enumerate() {
        for (line_no, line) in lines.iter_mut().enumerate() {
            if k > 0 {
                line.push_str("   ");
            }
            let a = (rows - 1 - line_no) as u8;
            let cells: Vec<String> = (0..cols)
                .map(|b| {
                    let mut x = vec![a];
                    if d >= 2 {
                        x.push(b as u8);
                    }
                    x.extend_from_slice(tail);
                    cell(&x)
                })
                .collect();
            line.push_str(&cells.join(" "));
        }
    }
    let mut out = lines
        .iter()
        .map(|l| l.trim_end().to_string())
        .collect::<Vec<_>>()
        .join("\n");
    out.push('\n');
    out
}

#[derive(Serialize, Deserialize)]
struct ArrayJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<Vec<u8>>,
    dots: Vec<Position>,
}

#[derive(Debug, Error)]
pub enum ArrayJsonError {
    #[error(transparent)]
    Syntax(#[from] serde_json::Error),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

impl DotArray {
    /// `{"bounds":[..],"dots":[[..],..]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let json = ArrayJson {
            bounds: Some(self.shape.bounds().to_vec()),
            dots: self.dots.iter().cloned().collect(),
        };
        serde_json::to_value(json).expect("plain data")
    }

    /// Reads `{"bounds":[..],"dots":[..]}`. Without `bounds` the box is the
    /// smallest cube holding the dots.
    pub fn from_json(v: &serde_json::Value) -> Result<Self, ArrayJsonError> {
        let json: ArrayJson = serde_json::from_value(v.clone())?;
        let shape = match json.bounds {
            Some(b) => Shape::new(b)?,
            None => {
                let d = json.dots.first().map(Vec::len).ok_or(ArrayError::Empty)?;
                let r = json.dots.iter().flatten().copied().max().unwrap_or(0);
                Shape::cube(r, d)?
            }
        };
        Ok(DotArray::new(shape, json.dots)?)
    }
}

impl RankArray {
    /// `{"bounds":[..],"values":{"x1,...,xd":v,..}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let values: BTreeMap<String, i32> = self
            .entries()
            .map(|(x, v)| (x.iter().map(u8::to_string).collect::<Vec<_>>().join(","), v))
            .collect();
        serde_json::json!({ "bounds": self.shape.bounds(), "values": values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(r: u8, dots: &[&[u8]]) -> DotArray {
        DotArray::in_cube(r, dots.iter().map(|x| x.to_vec())).unwrap()
    }

    pub(crate) fn fig3() -> DotArray {
        arr(2, &[&[1, 0, 0], &[2, 1, 1], &[0, 2, 1], &[0, 1, 2]])
    }

    #[test]
    fn meet_examples() {
        assert_eq!(meet(&[1, 0, 0], &[0, 2, 1]).unwrap(), vec![0, 0, 0]);
        assert_eq!(meet(&[2, 1, 1], &[0, 1, 2]).unwrap(), vec![0, 1, 1]);
        assert_eq!(meet(&[2, 1, 1], &[2, 1, 1]).unwrap(), vec![2, 1, 1]);
        assert!(matches!(
            meet(&[1, 0], &[1, 0, 0]),
            Err(ArrayError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn axis_ranks_of_figures() {
        assert_eq!(fig3().axis_ranks().unwrap(), vec![2, 2, 2]);
        let fig2 = arr(2, &[&[1, 0, 0], &[2, 1, 1], &[0, 1, 2]]);
        assert_eq!(fig2.axis_ranks().unwrap(), vec![2, 1, 2]);
        assert_eq!(fig2.rankable().unwrap(), None);
        let single = arr(0, &[&[0, 0]]);
        assert_eq!(single.axis_rank(1).unwrap(), 0);
        assert_eq!(single.rankable().unwrap(), Some(0));
    }

    #[test]
    fn empty_array_has_no_rank() {
        let empty = DotArray::new(Shape::cube(1, 2).unwrap(), Vec::new()).unwrap();
        assert_eq!(empty.axis_rank(0), Err(ArrayError::Empty));
        assert_eq!(empty.rankable(), Err(ArrayError::Empty));
        assert_eq!(empty.is_totally_rankable(), Err(ArrayError::Empty));
    }

    #[test]
    fn rejects_out_of_box_dots() {
        assert!(matches!(
            DotArray::in_cube(1, vec![vec![0, 2]]),
            Err(ArrayError::OutOfBounds(_))
        ));
    }

    #[test]
    fn rank_array_of_fig3_matches_grid() {
        let ranks = fig3().rank_array().unwrap();
        assert_eq!(ranks.get(&[0, 0, 0]), 2);
        assert_eq!(ranks.get(&[2, 2, 2]), -1);
        assert_eq!(ranks.get(&[0, 0, 1]), 1);
        assert!(ranks.is_non_increasing());
    }

    #[test]
    fn rank_array_rejects_non_totally_rankable() {
        let fig2 = arr(2, &[&[1, 0, 0], &[2, 1, 1], &[0, 1, 2]]);
        assert_eq!(fig2.rank_array(), Err(ArrayError::NotTotallyRankable));
        assert!(!fig2.is_totally_rankable().unwrap());
        assert!(!fig2.is_totally_rankable_by_exchange().unwrap());
    }

    #[test]
    fn redundant_positions_examples() {
        let expected: BTreeSet<Position> = [vec![0, 0, 0], vec![0, 1, 1]].into();
        assert_eq!(fig3().redundant_positions(), expected);
        let anti = arr(1, &[&[0, 1], &[1, 0]]);
        assert_eq!(anti.redundant_positions(), [vec![0, 0]].into());
        assert!(arr(1, &[&[1, 1]]).redundant_positions().is_empty());
    }

    #[test]
    fn permutation_arrays_and_cores() {
        assert!(fig3().is_permutation_array());
        let fig4 = fig3().meet_closure();
        assert_eq!(fig4.len(), 6);
        assert!(!fig4.is_permutation_array());
        assert_eq!(fig4.permutation_core().unwrap().array(), &fig3());
        let closed_anti = arr(1, &[&[0, 0], &[0, 1], &[1, 0]]);
        assert_eq!(
            closed_anti.permutation_core().unwrap().array(),
            &arr(1, &[&[0, 1], &[1, 0]])
        );
    }

    #[test]
    fn closure_is_idempotent() {
        let c = fig3().meet_closure();
        assert_eq!(c.meet_closure(), c);
        assert!(c.is_meet_closed());
    }

    #[test]
    fn projection() {
        let p = fig3().project(2).unwrap();
        assert_eq!(p, arr(2, &[&[1, 0], &[2, 1], &[0, 2], &[0, 1]]));
        assert_eq!(
            arr(1, &[&[1]]).project(0),
            Err(ArrayError::ProjectionOfLine)
        );
    }

    #[test]
    fn standard_arrays() {
        let st = standard_permutation_array(2, 2).unwrap();
        assert_eq!(st.array(), &arr(2, &[&[2, 0], &[1, 1], &[0, 2]]));
        assert_eq!(st.rank_array(), &standard_rank_array(2, 2).unwrap());
        assert_eq!(st.rank_array().get(&[1, 1]), 0);
        let st13 = standard_permutation_array(1, 3).unwrap();
        assert_eq!(st13.array(), &arr(1, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        assert_eq!(standard_rank_array(3, 4).unwrap().get(&[0; 4]), 3);
    }

    #[test]
    fn jumps() {
        let p = PermutationArray::new(fig3()).unwrap();
        assert_eq!(p.find_jump(&[0, 0, 1]).unwrap(), vec![0, 1, 1]);
        assert_eq!(p.find_jump(&[2, 1, 1]).unwrap(), vec![2, 1, 1]);
        assert_eq!(p.find_jump(&[0, 0, 0]).unwrap(), vec![0, 0, 0]);
        assert!(matches!(p.find_jump(&[2, 2, 2]), Err(ArrayError::NoJump(_))));
        // (1,0) is itself the meet of (2,0) and (1,1).
        let st = standard_permutation_array(2, 2).unwrap();
        assert_eq!(st.find_jump(&[1, 0]).unwrap(), vec![1, 0]);
    }

    #[test]
    fn sparseness() {
        assert!(!fig3().is_sparse());
        assert!(standard_permutation_array(1, 2).unwrap().is_sparse());
        assert!(standard_permutation_array(3, 2).unwrap().is_sparse());
    }

    #[test]
    fn extensions_of_standard_array() {
        let st = standard_permutation_array(1, 2).unwrap();
        let up = st.extend_dimension().unwrap();
        assert_eq!(up.array(), &arr(1, &[&[1, 0, 0], &[0, 1, 1]]));
        assert!(up.array().dots().iter().all(|x| x[1] == x[2]));
        let taller = st.extend_rank().unwrap();
        assert_eq!(taller.rank(), 2);
        assert_eq!(taller.rank_array().get(&[0, 0]), 2);
        assert!(!fig3().is_antichain());
        let closure_chain =
            PermutationArray::new(arr(1, &[&[0, 0], &[1, 1]])).unwrap();
        assert_eq!(
            closure_chain.extend_dimension(),
            Err(ArrayError::NotAntichain)
        );
    }

    #[test]
    fn rendering_follows_figure_layout() {
        let text = fig3().to_string();
        assert_eq!(text, ". . .   . * .   . . .\n* . .   . . .   . . .\n. . .   . . *   . * .\n");
    }
}
