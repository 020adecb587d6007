//! Batch execution seam. With the `parallel` feature (the default) batch
//! entry points fan out over the rayon pool; without it they run
//! sequentially with identical results and ordering.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::sim::{simulate, SimConfig, SimTrace};

// Grid points cost a handful of flops each; chunk them so rayon's scheduling
// overhead stays amortized.
const FINE_GRAIN_MIN_LEN: usize = 1024;

#[cfg(feature = "parallel")]
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub(crate) fn map_fine<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items
        .par_iter()
        .with_min_len(FINE_GRAIN_MIN_LEN)
        .map(f)
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_fine<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Runs every configuration to completion. Output order matches input
/// order, and each trace is identical to a standalone [`simulate`] call.
pub fn simulate_many(configs: &[SimConfig]) -> Vec<SimTrace> {
    map(configs, simulate)
}
