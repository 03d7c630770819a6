//! Trial-level data parallelism.
//!
//! Experiments are batches of independent trials, each owning its own model
//! and seeded substream, so running them on a rayon pool or in a plain loop
//! produces identical results. The `parallel` cargo feature (on by default)
//! enables the rayon path; without it [`Exec::Parallel`] runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..n).map(f).collect(),
        }
    }

    /// Like [`Exec::map`] for fallible tasks; returns the first error by index.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}
