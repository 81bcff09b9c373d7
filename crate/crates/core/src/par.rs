//! Execution strategy for the data-parallel inner loops.
//!
//! Every parallel loop in the crate produces its output in index order, so
//! results never depend on scheduling. Without the `parallel` feature,
//! [`Execution::Parallel`] silently runs sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How a data-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True if this build can actually run loops in parallel.
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Maps `f` over a slice, returning results in input order.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_range(exec, items.len(), |i| f(&items[i]))
}

/// Returns the index and value of the first maximum of `key` over `0..n`.
///
/// Ties resolve to the smallest index, so the answer is the same for every
/// execution mode. NaN keys are never selected.
pub fn argmax_range<F>(exec: Execution, n: usize, key: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    fn better(a: Option<(usize, f64)>, b: Option<(usize, f64)>) -> Option<(usize, f64)> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some((ia, va)), Some((ib, vb))) => {
                if vb > va || (vb == va && ib < ia) {
                    Some((ib, vb))
                } else {
                    Some((ia, va))
                }
            }
        }
    }
    let lift = |i: usize| {
        let v = key(i);
        if v.is_nan() {
            None
        } else {
            Some((i, v))
        }
    };
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(lift).reduce(|| None, better)
        }
        _ => (0..n).map(lift).fold(None, better),
    }
}

/// Deterministic generator for stream `stream` of experiment seed `seed`.
///
/// Workers never share a generator; each trial/channel index gets its own
/// stream of the same seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
