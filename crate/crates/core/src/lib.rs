//! Exact combinatorics of permutation arrays and finitely generated tropical
//! modules on metric graphs.
//!
//! * [`hyperarray`]: dot arrays on boxes, rank arrays, redundancy, closures,
//!   permutation arrays and their enumeration.
//! * [`properties`]: the local-array properties P1, P2, P2', P3, P4.
//! * [`graph`]: metric graphs, divisors and piecewise-linear functions over
//!   exact rationals.
//! * [`module`]: tropical modules, local arrays, dependence, slope
//!   structures and the rank properties.
//! * [`realization`]: modules on star graphs built from permutation arrays.
//! * [`fixtures`]: the small arrays and modules used by tests and figures.

pub mod fixtures;
pub mod graph;
pub mod hyperarray;
pub mod module;
pub mod properties;
pub mod realization;
