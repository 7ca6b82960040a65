//! Sequential or data-parallel evaluation of independent work items.
//!
//! Results are always returned in index order, so a computation whose items
//! are deterministic functions of their index gives identical output under
//! either strategy.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Evaluates `f(0), f(1), ..., f(n - 1)`.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
        }
    }

    /// Evaluates `f` on every element of `items`.
    pub fn map_slice<'a, I, T, F>(self, items: &'a [I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&'a I) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }

    /// Folds `f(0..n)` in chunks of `chunk` items and merges the partial
    /// accumulators in chunk order. `merge` must be associative.
    pub fn fold_chunks<A, F, M>(self, n: usize, chunk: usize, f: F, merge: M) -> Option<A>
    where
        A: Send,
        F: Fn(std::ops::Range<usize>) -> A + Sync + Send,
        M: Fn(A, A) -> A,
    {
        let chunk = chunk.max(1);
        let n_chunks = n.div_ceil(chunk);
        let parts = self.map(n_chunks, |c| f(c * chunk..((c + 1) * chunk).min(n)));
        parts.into_iter().reduce(merge)
    }
}

/// Runs `f` inside a rayon pool capped at `threads` workers. Without the
/// `parallel` feature this just calls `f`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}
