//! Checkers for the local-array properties P1, P2, P2', P3 and P4.
//!
//! A failing report always carries a witness that reproduces the failure
//! when fed back to the matching checker.

use std::collections::HashMap;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::hyperarray::{
    for_each_permutation_array_within, meet, Budget, ArrayError, DotArray, PermutationArray, Position,
    Shape,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    P1,
    P2,
    #[serde(rename = "P2'")]
    P2Prime,
    P3,
    P4,
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Property::P1 => "P1",
            Property::P2 => "P2",
            Property::P2Prime => "P2'",
            Property::P3 => "P3",
            Property::P4 => "P4",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub elements: Vec<Position>,
    pub note: String,
    /// Axes involved: `[j]` for P2, `[i, j]` for P2'.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<usize>>,
    /// Missing value for P2, the partition `[r_i, r_j]` for P2'.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<u8>>,
}

impl Witness {
    fn elements(elements: Vec<Position>, note: String) -> Self {
        Witness {
            elements,
            note,
            axes: None,
            values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub verdict: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl PropertyReport {
    fn pass(property: Property) -> Self {
        PropertyReport {
            property,
            verdict: true,
            witness: None,
        }
    }

    fn fail(property: Property, witness: Witness) -> Self {
        PropertyReport {
            property,
            verdict: false,
            witness: Some(witness),
        }
    }
}

fn fmt_pos(x: &[u8]) -> String {
    format!("({})", x.iter().join(","))
}

/// P1: closed under pairwise meet.
pub fn check_p1(m: &DotArray) -> PropertyReport {
    for (x, y) in m.dots().iter().tuple_combinations() {
        let z = meet(x, y).expect("same box");
        if !m.contains(&z) {
            let note = format!("meet {} is missing", fmt_pos(&z));
            return PropertyReport::fail(Property::P1, Witness::elements(vec![x.clone(), y.clone()], note));
        }
    }
    PropertyReport::pass(Property::P1)
}

/// P2: every value `0..=r` occurs on every axis.
pub fn check_p2(m: &DotArray, r: u8) -> PropertyReport {
    for j in 0..m.dim() {
        for v in 0..=r {
            if !m.dots().iter().any(|x| x[j] == v) {
                return PropertyReport::fail(
                    Property::P2,
                    Witness {
                        elements: Vec::new(),
                        note: format!("no dot has value {v} on axis {j}"),
                        axes: Some(vec![j]),
                        values: Some(vec![v]),
                    },
                );
            }
        }
    }
    PropertyReport::pass(Property::P2)
}

/// Largest `S' ⊆ S` with `|S'| ≥ 2` whose minimum on every axis is attained
/// at least twice, or `None`.
///
/// An element that alone attains the minimum of some axis can belong to no
/// such subset, so removing those repeatedly leaves the unique maximal one.
pub fn check_p3_subset(s: &[Position]) -> Option<Vec<Position>> {
    let mut rest: Vec<Position> = s.iter().cloned().sorted().dedup().collect();
    let d = rest.first().map_or(0, Vec::len);
    loop {
        let lone = (0..d).find_map(|i| {
            let min = rest.iter().map(|x| x[i]).min()?;
            let mut at_min = rest.iter().positions(|x| x[i] == min);
            let first = at_min.next()?;
            at_min.next().is_none().then_some(first)
        });
        match lone {
            Some(k) => {
                rest.remove(k);
            }
            None => break,
        }
    }
    (rest.len() >= 2).then_some(rest)
}

/// P3: every `(r+2)`-subset contains a valid `S'`.
pub fn check_p3(m: &DotArray, r: u8) -> PropertyReport {
    for s in m.dots().iter().cloned().combinations(r as usize + 2) {
        if check_p3_subset(&s).is_none() {
            let note = "no subset attains every axis minimum twice".to_string();
            return PropertyReport::fail(Property::P3, Witness::elements(s, note));
        }
    }
    PropertyReport::pass(Property::P3)
}

/// P2': for every ordered axis pair `(i, j)` and every split `r = r_i + r_j`
/// there are dots `z`, `w_1..w_{r_i}`, `u_1..u_{r_j}` with strictly
/// increasing `w` values on axis `i` below `z_i`, strictly increasing `u`
/// values on axis `j` below `z_j`, and every `u_j` below every `w_j`.
pub fn check_p2_prime(m: &DotArray, r: u8) -> PropertyReport {
    let d = m.dim();
    for i in 0..d {
        for j in 0..d {
            for ri in 0..=r {
                let rj = r - ri;
                if p2_prime_witness(m, r, i, j, ri, rj).is_none() {
                    return PropertyReport::fail(
                        Property::P2Prime,
                        Witness {
                            elements: Vec::new(),
                            note: format!("axes ({i},{j}) with split {ri}+{rj} have no witness"),
                            axes: Some(vec![i, j]),
                            values: Some(vec![ri, rj]),
                        },
                    );
                }
            }
        }
    }
    PropertyReport::pass(Property::P2Prime)
}

/// Witness `(z, w, u)` for one axis pair and split of P2'.
///
/// Any valid choice separates the `u` from the `w` by a threshold `c` on
/// axis `j`, so it suffices to try each threshold and count distinct values.
pub fn p2_prime_witness(
    m: &DotArray,
    r: u8,
    i: usize,
    j: usize,
    ri: u8,
    rj: u8,
) -> Option<(Position, Vec<Position>, Vec<Position>)> {
    let pick = |pool: Vec<&Position>, axis: usize, need: u8| -> Option<Vec<Position>> {
        let chosen: Vec<Position> = pool
            .into_iter()
            .unique_by(|x| x[axis])
            .sorted_by_key(|x| x[axis])
            .take(need as usize)
            .cloned()
            .collect();
        (chosen.len() == need as usize).then_some(chosen)
    };
    for z in m.dots() {
        for c in 0..=r as u16 + 1 {
            let ws: Vec<&Position> = m
                .dots()
                .iter()
                .filter(|w| w[i] < z[i] && w[j] as u16 >= c)
                .collect();
            let us: Vec<&Position> = m
                .dots()
                .iter()
                .filter(|u| u[j] < z[j] && (u[j] as u16) < c)
                .collect();
            if let (Some(w), Some(u)) = (pick(ws, i, ri), pick(us, j, rj)) {
                return Some((z.clone(), w, u));
            }
        }
    }
    None
}

/// Value grid of a `[k]^d`-subarray: `k+1` sorted values per axis.
type Grid = Vec<Vec<u8>>;

fn relabel(grid: &Grid, x: &[u8]) -> Option<Position> {
    x.iter()
        .zip(grid)
        .map(|(v, vals)| vals.iter().position(|a| a == v).map(|p| p as u8))
        .collect()
}

fn unlabel(grid: &Grid, x: &[u8]) -> Position {
    x.iter().zip(grid).map(|(&p, vals)| vals[p as usize]).collect()
}

/// P4 checker with memoized verdicts for relabeled subarrays.
///
/// A `[k]^d`-subarray of `M` is a subset of `M` inside a grid of `k+1`
/// values per axis, relabeled into `[k]^d`. A subarray satisfying P1-P4 is
/// meet-closed and totally rankable, hence the closure of a permutation
/// array; candidates are generated that way.
#[derive(Default)]
pub struct P4Checker {
    /// `(k, relabeled dots)` to whether the subarray satisfies P3 and P4.
    local: HashMap<(u8, Vec<Position>), bool>,
    /// `(k, d, occupied cells of [k]^d)` to the valid subarrays there.
    patterns: HashMap<(u8, usize, Vec<u64>), Arc<Vec<Vec<u64>>>>,
    /// Every valid subarray of `[k]^d` as a cell mask, for small cubes.
    libraries: HashMap<(u8, usize), Option<Arc<Vec<u64>>>>,
}

impl P4Checker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of memoized subarray verdicts and grid patterns.
    pub fn cache_sizes(&self) -> (usize, usize) {
        (self.local.len(), self.patterns.len())
    }

    /// Checks only subsets of the largest size `min(r, |M|)`. A valid
    /// subarray satisfies P4 itself, so every smaller subset of a covered
    /// set is covered too, and every smaller subset lies in a largest one.
    pub fn check(&mut self, m: &DotArray, r: u8) -> PropertyReport {
        let elems: Vec<Position> = m.dots().iter().cloned().collect();
        let size = (r as usize).min(elems.len());
        if size <= 1 {
            return PropertyReport::pass(Property::P4);
        }
        let k = (size - 1) as u8;
        let binom = binomials(elems.len(), size);
        let covered = self.covered_subsets(m, &elems, k, &binom);
        if covered.iter().all(|&c| c) {
            return PropertyReport::pass(Property::P4);
        }
        let combo = (0..elems.len())
            .combinations(size)
            .find(|combo| !covered[colex_rank(combo, &binom)])
            .expect("some subset is uncovered");
        let n = combo.iter().map(|&i| elems[i].clone()).collect();
        let note = format!("no [{k}]^d subarray containing these satisfies P1-P4");
        PropertyReport::fail(Property::P4, Witness::elements(n, note))
    }

    /// Direct reading of P4: every subset of every size `2..=r`, one at a
    /// time. Slower than [`P4Checker::check`]; both must agree.
    pub fn check_by_levels(&mut self, m: &DotArray, r: u8) -> PropertyReport {
        let elems: Vec<Position> = m.dots().iter().cloned().collect();
        let mut grids: HashMap<Grid, Vec<Vec<Position>>> = HashMap::new();
        for k in 1..r {
            for n in elems.iter().cloned().combinations(k as usize + 1) {
                if !self.extends(m, k, &n, &mut grids) {
                    let note = format!("no [{k}]^d subarray containing these satisfies P1-P4");
                    return PropertyReport::fail(Property::P4, Witness::elements(n, note));
                }
            }
        }
        PropertyReport::pass(Property::P4)
    }

    /// Marks, by colex rank, every `(k+1)`-subset of `elems` lying in a
    /// valid `[k]^d`-subarray.
    fn covered_subsets(&mut self, m: &DotArray, elems: &[Position], k: u8, binom: &[Vec<usize>]) -> Vec<bool> {
        let size = k as usize + 1;
        let d = m.dim();
        let mut covered = vec![false; binom[elems.len()][size]];
        let mut axes: Vec<Vec<Vec<u8>>> = Vec::with_capacity(d);
        for i in 0..d {
            let vals: Vec<u8> = elems.iter().map(|x| x[i]).sorted().dedup().collect();
            axes.push(vals.into_iter().combinations(size).collect());
        }
        let shape = Shape::cube(k, d).expect("small cube");
        let mut table = vec![usize::MAX; shape.size()];
        let mut cell = vec![0u8; d];
        // A valid subarray uses all k+1 values on every axis, so it belongs
        // to exactly one grid and is marked once.
        for grid in axes.into_iter().multi_cartesian_product() {
            let mut mask = vec![0u64; shape.size().div_ceil(64)];
            'elems: for (e, x) in elems.iter().enumerate() {
                for i in 0..d {
                    match grid[i].iter().position(|&v| v == x[i]) {
                        Some(p) => cell[i] = p as u8,
                        None => continue 'elems,
                    }
                }
                let c = shape.index(&cell);
                table[c] = e;
                mask[c / 64] |= 1 << (c % 64);
            }
            if !spans_grid(&mask, &shape) {
                continue;
            }
            let subs = self.valid_cells(d, k, mask);
            let inside = |a: &[u64], b: &[u64]| a != b && a.iter().zip(b).all(|(x, y)| x & !y == 0);
            for sub in subs.iter().filter(|a| !subs.iter().any(|b| inside(a, b))) {
                let mut idx: Vec<usize> = cells_of(sub).map(|c| table[c]).collect();
                idx.sort_unstable();
                mark_subsets(&idx, size, binom, &mut covered);
            }
        }
        covered
    }

    /// Whether the `k+1` elements `n` lie in a `[k]^d`-subarray of `m`
    /// satisfying P1-P4, with `k = |n| - 1`.
    pub fn subset_extends(&mut self, m: &DotArray, n: &[Position]) -> bool {
        if n.len() <= 1 {
            return n.iter().all(|x| m.contains(x));
        }
        let k = (n.len() - 1) as u8;
        self.extends(m, k, n, &mut HashMap::new())
    }

    fn extends(
        &mut self,
        m: &DotArray,
        k: u8,
        n: &[Position],
        grids: &mut HashMap<Grid, Vec<Vec<Position>>>,
    ) -> bool {
        let d = m.dim();
        let mut choices: Vec<Vec<Vec<u8>>> = Vec::with_capacity(d);
        for i in 0..d {
            let have: Vec<u8> = n.iter().map(|x| x[i]).sorted().dedup().collect();
            let spare: Vec<u8> = m
                .dots()
                .iter()
                .map(|x| x[i])
                .sorted()
                .dedup()
                .filter(|v| !have.contains(v))
                .collect();
            let need = k as usize + 1;
            if have.len() > need || have.len() + spare.len() < need {
                return false;
            }
            let axis: Vec<Vec<u8>> = spare
                .into_iter()
                .combinations(need - have.len())
                .map(|extra| have.iter().cloned().chain(extra).sorted().collect())
                .collect();
            choices.push(axis);
        }
        for grid in choices.into_iter().multi_cartesian_product() {
            if !grids.contains_key(&grid) {
                let found = self.valid_subarrays(m, k, &grid);
                grids.insert(grid.clone(), found);
            }
            if grids[&grid].iter().any(|sub| n.iter().all(|x| sub.binary_search(x).is_ok())) {
                return true;
            }
        }
        false
    }

    /// Every subset of `m` inside `grid` that satisfies P1-P4 at rank `k`,
    /// in original coordinates.
    fn valid_subarrays(&mut self, m: &DotArray, k: u8, grid: &Grid) -> Vec<Vec<Position>> {
        let shape = Shape::cube(k, m.dim()).expect("small cube");
        let mut mask = vec![0u64; shape.size().div_ceil(64)];
        for x in m.dots().iter().filter_map(|x| relabel(grid, x)) {
            let c = shape.index(&x);
            mask[c / 64] |= 1 << (c % 64);
        }
        self.valid_cells(m.dim(), k, mask)
            .iter()
            .map(|sub| cells_of(sub).map(|c| unlabel(grid, &shape.position(c))).sorted().collect())
            .collect()
    }

    /// Valid subarrays inside the cells of `[k]^d` flagged in `mask`, as
    /// cell masks.
    fn valid_cells(&mut self, d: usize, k: u8, mask: Vec<u64>) -> Arc<Vec<Vec<u64>>> {
        if let Some(lib) = self.library(d, k) {
            let words = mask.len();
            let found = lib
                .chunks_exact(words)
                .filter(|sub| sub.iter().zip(&mask).all(|(a, b)| a & !b == 0))
                .map(<[u64]>::to_vec)
                .collect();
            return Arc::new(found);
        }
        let key = (k, d, mask);
        if let Some(found) = self.patterns.get(&key) {
            return found.clone();
        }
        let found = Arc::new(self.search_cells(d, k, &key.2));
        self.patterns.insert(key, found.clone());
        found
    }

    /// Cell masks of every valid subarray of `[k]^d`, concatenated.
    fn library(&mut self, d: usize, k: u8) -> Option<Arc<Vec<u64>>> {
        if let Some(lib) = self.libraries.get(&(k, d)) {
            return lib.clone();
        }
        // Small cubes only: the [2]^5 library alone has ~70k candidates.
        let lib = Budget::MaxPositions(81).allows(k, d).is_ok().then(|| {
            let size = Shape::cube(k, d).expect("small cube").size();
            Arc::new(self.search_cells(d, k, &vec![u64::MAX; size.div_ceil(64)]).concat())
        });
        self.libraries.insert((k, d), lib.clone());
        lib
    }

    fn search_cells(&mut self, d: usize, k: u8, mask: &[u64]) -> Vec<Vec<u64>> {
        let shape = Shape::cube(k, d).expect("small cube");
        let cells = (0..shape.size()).filter(|c| mask[c / 64] & (1 << (c % 64)) != 0);
        let allowed = DotArray::new(shape.clone(), cells.map(|c| shape.position(c))).expect("inside the cube");
        let mut cores = Vec::new();
        for_each_permutation_array_within(&allowed, |q| cores.push(q)).expect("cube");
        let mut found = Vec::new();
        for q in cores {
            let closure = q.meet_closure();
            if closure.dots().is_subset(allowed.dots()) && self.is_local(&closure, k) {
                let mut sub = vec![0u64; mask.len()];
                for c in closure.dots().iter().map(|x| shape.index(x)) {
                    sub[c / 64] |= 1 << (c % 64);
                }
                found.push(sub);
            }
        }
        found
    }

    /// P3 and P4 for a relabeled closure of a rank-`k` permutation array;
    /// P1 and P2 hold by construction.
    fn is_local(&mut self, sub: &DotArray, k: u8) -> bool {
        let key = (k, sub.dots().iter().cloned().collect::<Vec<_>>());
        if let Some(&v) = self.local.get(&key) {
            return v;
        }
        let v = check_p3(sub, k).verdict && self.check(sub, k).verdict;
        self.local.insert(key, v);
        v
    }
}

/// Whether the cells in `mask` include the origin and every value on every
/// axis, as any valid subarray does.
fn spans_grid(mask: &[u64], shape: &Shape) -> bool {
    if mask[0] & 1 == 0 {
        return false;
    }
    let mut seen = vec![0u64; shape.dim()];
    for c in cells_of(mask) {
        for (i, v) in shape.position(c).into_iter().enumerate() {
            seen[i] |= 1 << v;
        }
    }
    let full = (1u64 << (shape.bounds()[0] + 1)) - 1;
    seen.iter().all(|&s| s == full)
}

/// Set bits of a cell mask, ascending.
fn cells_of(mask: &[u64]) -> impl Iterator<Item = usize> + '_ {
    mask.iter().enumerate().flat_map(|(w, &word)| {
        (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| w * 64 + b)
    })
}

/// `binom[n][k]` for `n ≤ max_n`, `k ≤ max_k`.
fn binomials(max_n: usize, max_k: usize) -> Vec<Vec<usize>> {
    let mut b = vec![vec![0usize; max_k + 1]; max_n + 1];
    for n in 0..=max_n {
        b[n][0] = 1;
        for k in 1..=max_k.min(n) {
            b[n][k] = b[n - 1][k - 1] + if k < n { b[n - 1][k] } else { 0 };
        }
    }
    b
}

/// Rank of a sorted index set in colexicographic order.
fn colex_rank(combo: &[usize], binom: &[Vec<usize>]) -> usize {
    combo.iter().enumerate().map(|(j, &c)| binom[c][j + 1]).sum()
}

/// Marks every `size`-subset of the sorted indices `idx`.
fn mark_subsets(idx: &[usize], size: usize, binom: &[Vec<usize>], covered: &mut [bool]) {
    fn go(idx: &[usize], from: usize, j: usize, size: usize, acc: usize, binom: &[Vec<usize>], covered: &mut [bool]) {
        if j + 1 == size {
            for &c in &idx[from..] {
                covered[acc + binom[c][size]] = true;
            }
            return;
        }
        for p in from..=idx.len() - (size - j) {
            go(idx, p + 1, j + 1, size, acc + binom[idx[p]][j + 1], binom, covered);
        }
    }
    if idx.len() >= size {
        go(idx, 0, 0, size, 0, binom, covered);
    }
}

/// P4 with a fresh memo table.
pub fn check_p4(m: &DotArray, r: u8) -> PropertyReport {
    P4Checker::new().check(m, r)
}

/// Whether the elements `n` extend to a `[|n|-1]^d`-subarray of `m`
/// satisfying P1-P4.
pub fn check_p4_for_subset(m: &DotArray, n: &[Position]) -> bool {
    P4Checker::new().subset_extends(m, n)
}

/// Rank-3, dimension-4 permutation array whose closure fails P4.
pub fn billey_vakil_counterexample() -> PermutationArray {
    let dots = [
        [0, 2, 0, 3],
        [2, 0, 0, 2],
        [0, 0, 1, 2],
        [1, 1, 0, 1],
        [1, 0, 1, 1],
        [0, 1, 1, 1],
        [0, 0, 2, 1],
        [3, 0, 3, 0],
        [2, 3, 0, 0],
        [1, 1, 1, 0],
        [0, 2, 2, 0],
    ];
    let array = DotArray::in_cube(3, dots.iter().map(|x| x.to_vec())).expect("inside [3]^4");
    PermutationArray::new(array).expect("a permutation array")
}

/// Three dots of [`billey_vakil_counterexample`] lying in no totally
/// rankable `[2]^4`-subarray of its closure.
pub fn billey_vakil_witness() -> Vec<Position> {
    vec![vec![2, 3, 0, 0], vec![0, 0, 2, 1], vec![2, 0, 0, 2]]
}

/// Re-runs the checker named in `report` on the witness and reports whether
/// the failure reproduces.
pub fn replay_failure(m: &DotArray, r: u8, report: &PropertyReport) -> Result<bool, ArrayError> {
    let Some(w) = &report.witness else {
        return Ok(false);
    };
    Ok(match report.property {
        Property::P1 => {
            let pair = m.with_dots(w.elements.iter().cloned())?;
            w.elements.len() == 2 && !check_p1(&pair).verdict && !{
                let z = meet(&w.elements[0], &w.elements[1])?;
                m.contains(&z)
            }
        }
        Property::P2 => {
            let (Some(axes), Some(values)) = (&w.axes, &w.values) else {
                return Ok(false);
            };
            !m.dots().iter().any(|x| x[axes[0]] == values[0])
        }
        Property::P2Prime => {
            let (Some(axes), Some(values)) = (&w.axes, &w.values) else {
                return Ok(false);
            };
            p2_prime_witness(m, r, axes[0], axes[1], values[0], values[1]).is_none()
        }
        Property::P3 => {
            w.elements.len() == r as usize + 2
                && w.elements.iter().all(|x| m.contains(x))
                && check_p3_subset(&w.elements).is_none()
        }
        Property::P4 => w.elements.iter().all(|x| m.contains(x)) && !check_p4_for_subset(m, &w.elements),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperarray::standard_permutation_array;

    fn arr(r: u8, dots: &[&[u8]]) -> DotArray {
        DotArray::in_cube(r, dots.iter().map(|x| x.to_vec())).unwrap()
    }

    fn fig3() -> DotArray {
        arr(2, &[&[1, 0, 0], &[2, 1, 1], &[0, 2, 1], &[0, 1, 2]])
    }

    fn fig6_left() -> DotArray {
        arr(2, &[&[0, 0], &[1, 1], &[1, 2], &[2, 1]])
    }

    fn fig6_middle() -> DotArray {
        arr(2, &[&[2, 0], &[2, 1], &[1, 1], &[0, 1]])
    }

    fn fig6_right() -> DotArray {
        arr(2, &[&[0, 0], &[0, 1], &[0, 2], &[1, 0], &[2, 0]])
    }

    #[test]
    fn p1_reports_a_missing_meet() {
        assert!(check_p1(&fig3().meet_closure()).verdict);
        let report = check_p1(&fig3());
        assert!(!report.verdict);
        assert!(replay_failure(&fig3(), 2, &report).unwrap());
        let pair = fig3().with_dots([vec![2, 1, 1], vec![0, 1, 2]]).unwrap();
        assert_eq!(check_p1(&pair).witness.unwrap().note, "meet (0,1,1) is missing");
        assert!(check_p1(&arr(1, &[&[0, 0]])).verdict);
    }

    #[test]
    fn p2_value_scan() {
        assert!(check_p2(&fig3().meet_closure(), 2).verdict);
        let report = check_p2(&arr(1, &[&[0, 0], &[1, 0]]), 1);
        let w = report.witness.unwrap();
        assert_eq!((w.axes, w.values), (Some(vec![1]), Some(vec![1])));
        assert!(check_p2(&arr(1, &[&[0, 0], &[0, 1], &[1, 0]]), 1).verdict);
    }

    #[test]
    fn p3_subsets() {
        let left: Vec<Position> = fig6_left().dots().iter().cloned().collect();
        assert_eq!(check_p3_subset(&left), Some(vec![vec![1, 1], vec![1, 2], vec![2, 1]]));
        let middle: Vec<Position> = fig6_middle().dots().iter().cloned().collect();
        assert_eq!(check_p3_subset(&middle), None);
        let corner = vec![vec![0, 0], vec![0, 1], vec![1, 0]];
        assert_eq!(check_p3_subset(&corner), Some(corner.clone()));
        assert!(check_p3(&arr(1, &[&[0, 0], &[0, 1], &[1, 0]]), 1).verdict);
        let report = check_p3(&fig6_middle(), 2);
        assert!(!report.verdict);
        assert!(replay_failure(&fig6_middle(), 2, &report).unwrap());
    }

    #[test]
    fn p2_prime_examples() {
        let st = standard_permutation_array(2, 2).unwrap().redundant_closure();
        assert!(check_p2_prime(&st, 2).verdict);
        let diagonal = arr(2, &[&[0, 0], &[1, 1], &[2, 2]]);
        assert!(check_p2_prime(&diagonal, 2).verdict);
        let (z, w, u) = p2_prime_witness(&diagonal, 2, 0, 1, 1, 1).unwrap();
        assert_eq!((z, w, u), (vec![2, 2], vec![vec![1, 1]], vec![vec![0, 0]]));
        let report = check_p2_prime(&fig6_right(), 2);
        assert!(!report.verdict);
        assert!(replay_failure(&fig6_right(), 2, &report).unwrap());
        assert!(p2_prime_witness(&fig6_right(), 2, 0, 1, 1, 1).is_none());
    }

    #[test]
    fn p4_small_figures() {
        assert!(check_p4(&fig6_left(), 2).verdict);
        let report = check_p4(&fig6_right(), 2);
        assert!(!report.verdict);
        assert_eq!(report.witness.as_ref().unwrap().elements, vec![vec![0, 1], vec![0, 2]]);
        assert!(replay_failure(&fig6_right(), 2, &report).unwrap());
        assert!(!check_p4_for_subset(&fig6_right(), &[vec![0, 1], vec![0, 2]]));
        assert!(check_p4_for_subset(&fig6_right(), &[vec![0, 0], vec![0, 1]]));
    }

    #[test]
    fn p4_uses_proper_subsets_of_the_grid() {
        // The pair (0,0), (1,1) forces the full [1]^2 grid, which fails P3;
        // the diagonal subset inside it is a valid subarray.
        let st = standard_permutation_array(2, 2).unwrap().redundant_closure();
        assert!(check_p4(&st, 2).verdict);
    }

    #[test]
    fn colex_ranks_are_a_bijection() {
        let binom = binomials(7, 3);
        let ranks: Vec<usize> = (0..7).combinations(3).map(|c| colex_rank(&c, &binom)).sorted().collect();
        assert_eq!(ranks, (0..35).collect::<Vec<_>>());
        let mut covered = vec![false; 35];
        mark_subsets(&[0, 2, 4, 6], 3, &binom, &mut covered);
        assert_eq!(covered.iter().filter(|&&c| c).count(), 4);
    }

    #[test]
    fn top_level_check_matches_level_by_level() {
        for m in [fig6_left(), fig6_right(), fig6_middle(), fig3().meet_closure()] {
            let fast = P4Checker::new().check(&m, 2);
            let slow = P4Checker::new().check_by_levels(&m, 2);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn report_json_shape() {
        let report = check_p4(&fig6_right(), 2);
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.starts_with(r#"{"property":"P4","verdict":false,"witness":{"elements":[[0,1],[0,2]]"#));
        let back: PropertyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        let p2 = serde_json::to_string(&check_p2_prime(&fig6_right(), 2)).unwrap();
        assert!(p2.contains(r#""property":"P2'""#));
    }
}
