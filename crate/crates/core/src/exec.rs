//! Sequential / data-parallel execution of per-item work.
//!
//! With the `parallel` feature (default) [`ExecMode::Parallel`] runs on the
//! rayon pool; without it every mode falls back to a plain loop.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Map every item and collect the results in input order.
pub fn map_collect<I, T, F>(mode: ExecMode, items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Map then reduce with an associative operation.
pub fn map_reduce<I, T, F, R>(mode: ExecMode, items: &[I], identity: T, f: F, reduce: R) -> T
where
    I: Sync,
    T: Send + Sync + Clone,
    F: Fn(&I) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).reduce(|| identity.clone(), &reduce);
    }
    let _ = mode;
    items.iter().map(f).fold(identity, reduce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let v: Vec<u64> = (0..1000).collect();
        let a = map_reduce(ExecMode::Sequential, &v, 0, |x| x * x, |a, b| a + b);
        let b = map_reduce(ExecMode::Parallel, &v, 0, |x| x * x, |a, b| a + b);
        assert_eq!(a, b);
        assert_eq!(
            map_collect(ExecMode::Parallel, &v, |x| x + 1),
            map_collect(ExecMode::Sequential, &v, |x| x + 1)
        );
    }
}
