//! Exhaustive generation of permutation arrays of `[r]^d`.
//!
//! Positions are decided in decreasing lexicographic order. Every position
//! above `x` in the product order comes earlier, so once `x` is decided the
//! principal subarray `P[x]` is final: its rankability, its rank, and the
//! redundancy of `x` are all known at that point. Branches are cut when
//!
//! * `P[x]` is not rankable,
//! * `x` would be a dotted redundant position,
//! * `ρ(x) < r - Σ x_i` (ranks drop by at most one per unit step, so the
//!   origin could no longer reach rank `r`).

use rayon::prelude::*;

use super::{ArrayError, DotArray, PermutationArray, Position, Shape};

/// Size limit for exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// `r ≤ 2` with `d ≤ 5`, or `r ≤ 4` with `d ≤ 3`.
    Default,
    /// Any cube with at most this many positions.
    MaxPositions(usize),
}

impl Budget {
    pub fn allows(&self, r: u8, d: usize) -> Result<(), ArrayError> {
        let ok = match *self {
            Budget::Default => (r <= 2 && d <= 5) || (r <= 4 && d <= 3),
            Budget::MaxPositions(n) => (r as f64 + 1.0).powi(d as i32) <= n as f64,
        };
        if ok {
            Ok(())
        } else {
            let reason = match *self {
                Budget::Default => "default budget: r <= 2 with d <= 5, or r <= 4 with d <= 3".into(),
                Budget::MaxPositions(n) => format!("more than {n} positions"),
            };
            Err(ArrayError::BudgetExceeded { r, d, reason })
        }
    }
}

#[derive(Clone)]
struct State {
    /// Axis value masks of `P[x]` for decided positions, `d` words each.
    masks: Vec<u64>,
    dotted: Vec<bool>,
}

struct Search {
    shape: Shape,
    r: u8,
    d: usize,
    coords: Vec<Position>,
    /// For each position, indices of its upper covers `x + e_i`.
    covers: Vec<Vec<usize>>,
    /// Positions that may carry a dot; all of them when absent.
    allowed: Option<Vec<bool>>,
}

impl Search {
    fn new(r: u8, d: usize) -> Result<Self, ArrayError> {
        let shape = Shape::cube(r, d)?;
        let coords: Vec<Position> = shape.positions().collect();
        let covers = coords
            .iter()
            .enumerate()
            .map(|(idx, x)| {
                (0..d)
                    .filter(|&i| x[i] < r)
                    .map(|i| idx + shape.stride(i))
                    .collect()
            })
            .collect();
        Ok(Search {
            shape,
            r,
            d,
            coords,
            covers,
            allowed: None,
        })
    }

    fn initial(&self) -> State {
        State {
            masks: vec![0; self.shape.size() * self.d],
            dotted: vec![false; self.shape.size()],
        }
    }

    /// Applies a choice at `idx`; returns false if the branch is dead.
    fn decide(&self, state: &mut State, idx: usize, dot: bool) -> bool {
        let d = self.d;
        let x = &self.coords[idx];
        let mut upper = [0u64; 64];
        let upper = &mut upper[..d];
        for &c in &self.covers[idx] {
            for j in 0..d {
                upper[j] |= state.masks[c * d + j];
            }
        }
        if dot {
            if self.allowed.as_ref().is_some_and(|a| !a[idx]) {
                return false;
            }
            let redundant = (0..d).all(|j| upper[j] & (1 << x[j]) != 0);
            if redundant {
                return false;
            }
            for j in 0..d {
                upper[j] |= 1 << x[j];
            }
        }
        let count = upper[0].count_ones();
        if upper.iter().any(|m| m.count_ones() != count) {
            return false;
        }
        let rank = count as i32 - 1;
        let sum: i32 = x.iter().map(|&a| a as i32).sum();
        if rank < self.r as i32 - sum {
            return false;
        }
        state.masks[idx * d..(idx + 1) * d].copy_from_slice(upper);
        state.dotted[idx] = dot;
        true
    }

    /// Depth-first search from `idx` downward; "empty" before "dotted".
    fn run<F: FnMut(&State)>(&self, state: &mut State, next: Option<usize>, emit: &mut F) {
        let Some(idx) = next else {
            emit(state);
            return;
        };
        let below = idx.checked_sub(1);
        // Lower positions are rewritten before they are read again, so no
        // undo step is needed.
        for dot in [false, true] {
            if self.decide(state, idx, dot) {
                self.run(state, below, emit);
            }
        }
    }

    /// All live states after deciding the `depth` highest positions, in
    /// search order.
    fn prefixes(&self, depth: usize) -> Vec<State> {
        let n = self.shape.size();
        let depth = depth.min(n);
        let mut frontier = vec![self.initial()];
        for k in 0..depth {
            let idx = n - 1 - k;
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for state in frontier {
                for dot in [false, true] {
                    let mut s = state.clone();
                    if self.decide(&mut s, idx, dot) {
                        next.push(s);
                    }
                }
            }
            frontier = next;
        }
        frontier
    }

    fn to_array(&self, state: &State) -> DotArray {
        let dots = (0..self.shape.size())
            .filter(|&i| state.dotted[i])
            .map(|i| self.coords[i].clone());
        DotArray::new(self.shape.clone(), dots).expect("positions come from the box")
    }
}

/// Calls `visit` once for every permutation array of rank `r` and
/// dimension `d`, in a fixed order.
pub fn for_each_permutation_array<F>(r: u8, d: usize, budget: Budget, mut visit: F) -> Result<(), ArrayError>
where
    F: FnMut(DotArray),
{
    budget.allows(r, d)?;
    let search = Search::new(r, d)?;
    let mut state = search.initial();
    let start = search.shape.size() - 1;
    search.run(&mut state, Some(start), &mut |s| visit(search.to_array(s)));
    Ok(())
}

/// Calls `visit` for every permutation array whose dots all lie in
/// `allowed`, which must sit on a cube. No budget applies: the caller
/// bounds the work through the size of `allowed`.
pub fn for_each_permutation_array_within<F>(allowed: &DotArray, mut visit: F) -> Result<(), ArrayError>
where
    F: FnMut(DotArray),
{
    let r = allowed
        .shape()
        .cube_bound()
        .ok_or_else(|| ArrayError::NotPermutationArray("box is not a cube".into()))?;
    let mut search = Search::new(r, allowed.dim())?;
    search.allowed = Some(search.coords.iter().map(|x| allowed.contains(x)).collect());
    let mut state = search.initial();
    let start = search.shape.size() - 1;
    search.run(&mut state, Some(start), &mut |s| visit(search.to_array(s)));
    Ok(())
}

/// Number of permutation arrays of rank `r` and dimension `d`.
pub fn count_permutation_arrays(r: u8, d: usize, budget: Budget) -> Result<u64, ArrayError> {
    budget.allows(r, d)?;
    let search = Search::new(r, d)?;
    let mut state = search.initial();
    let mut n = 0u64;
    search.run(&mut state, Some(search.shape.size() - 1), &mut |_| n += 1);
    Ok(n)
}

/// Every permutation array of rank `r` and dimension `d`, validated.
pub fn enumerate_permutation_arrays(r: u8, d: usize, budget: Budget) -> Result<Vec<PermutationArray>, ArrayError> {
    let mut out = Vec::new();
    for_each_permutation_array(r, d, budget, |a| {
        out.push(PermutationArray::new(a).expect("search emits permutation arrays"));
    })?;
    Ok(out)
}

/// Splits the search at a fixed prefix depth and maps `f` over every
/// permutation array in parallel. Results keep the sequential order.
pub fn par_map_permutation_arrays<T, F>(r: u8, d: usize, budget: Budget, f: F) -> Result<Vec<T>, ArrayError>
where
    T: Send,
    F: Fn(DotArray) -> T + Sync,
{
    budget.allows(r, d)?;
    let search = Search::new(r, d)?;
    let n = search.shape.size();
    let depth = (n / 3).min(12);
    let prefixes = search.prefixes(depth);
    let next = n.checked_sub(depth + 1);
    let chunks: Vec<Vec<T>> = prefixes
        .into_par_iter()
        .map(|mut state| {
            let mut out = Vec::new();
            search.run(&mut state, next, &mut |s| out.push(f(search.to_array(s))));
            out
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_matrix_counts() {
        assert_eq!(count_permutation_arrays(1, 2, Budget::Default).unwrap(), 2);
        assert_eq!(count_permutation_arrays(2, 2, Budget::Default).unwrap(), 6);
        assert_eq!(count_permutation_arrays(3, 2, Budget::Default).unwrap(), 24);
    }

    #[test]
    fn dimension_one_and_rank_zero() {
        let line = enumerate_permutation_arrays(3, 1, Budget::Default).unwrap();
        assert_eq!(line.len(), 1);
        assert_eq!(line[0].array().len(), 4);
        let point = enumerate_permutation_arrays(0, 3, Budget::Default).unwrap();
        assert_eq!(point.len(), 1);
    }

    #[test]
    fn budget_refuses_large_requests() {
        assert!(matches!(
            count_permutation_arrays(3, 4, Budget::Default),
            Err(ArrayError::BudgetExceeded { .. })
        ));
        assert!(count_permutation_arrays(3, 3, Budget::MaxPositions(64)).is_ok());
        assert!(count_permutation_arrays(3, 3, Budget::MaxPositions(63)).is_err());
    }

    #[test]
    fn restricted_search_stays_inside_allowed_set() {
        let all: Vec<DotArray> = enumerate_permutation_arrays(2, 2, Budget::Default)
            .unwrap()
            .into_iter()
            .map(PermutationArray::into_array)
            .collect();
        let allowed = DotArray::in_cube(2, [vec![0, 2], vec![1, 1], vec![2, 0], vec![0, 1], vec![1, 0], vec![2, 1]]).unwrap();
        let mut found = Vec::new();
        for_each_permutation_array_within(&allowed, |a| found.push(a)).unwrap();
        let expected: Vec<DotArray> = all
            .into_iter()
            .filter(|a| a.dots().iter().all(|x| allowed.contains(x)))
            .collect();
        assert_eq!(found, expected);
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn parallel_split_preserves_order() {
        let seq: Vec<DotArray> = enumerate_permutation_arrays(2, 3, Budget::Default)
            .unwrap()
            .into_iter()
            .map(PermutationArray::into_array)
            .collect();
        let par = par_map_permutation_arrays(2, 3, Budget::Default, |a| a).unwrap();
        assert_eq!(seq, par);
    }
}
