//! Execution policy for data-parallel work (sweep points, propagator blocks).
//!
//! With the `parallel` feature disabled every policy runs sequentially, so the
//! crate builds without rayon.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecPolicy {
    #[default]
    Parallel,
    Sequential,
}

impl ExecPolicy {
    /// Whether this build can actually run work in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

/// Maps `f` over `items`, preserving input order in the output.
pub fn map_collect<T, R, F>(policy: ExecPolicy, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = policy;
    items.iter().map(f).collect()
}

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "AQEC_THREADS";

/// Sizes the global worker pool from `AQEC_THREADS` if set. Returns the
/// configured thread count, or `None` when the variable is absent, invalid,
/// or the pool was already initialized.
pub fn configure_threads_from_env() -> Option<usize> {
    let n: usize = std::env::var(THREADS_ENV).ok()?.trim().parse().ok()?;
    if n == 0 {
        return None;
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok()
            .map(|_| n)
    }
    #[cfg(not(feature = "parallel"))]
    {
        Some(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..100).collect();
        let a = map_collect(ExecPolicy::Parallel, &items, |x| x * x);
        let b = map_collect(ExecPolicy::Sequential, &items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }
}
