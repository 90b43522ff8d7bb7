//! Run scheduling. Each run is a pure function of its index, so results are
//! collected in index order and aggregation never depends on scheduling.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over runs; `threads` caps the pool size.
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel { threads: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    pub fn with_threads(threads: usize) -> Self {
        if threads <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel {
                threads: Some(threads),
            }
        }
    }
}

pub(crate) fn map_runs<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel { threads } => parallel_map(n, threads, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;

    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        None => run(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?
            .install(run),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if threads == Some(0) {
        return Err(Error::param("threads", "must be at least 1"));
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_runs(100, Execution::Sequential, |i| Ok(i * i)).unwrap();
        let par = map_runs(100, Execution::with_threads(4), |i| Ok(i * i)).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }

    #[test]
    fn first_error_surfaces() {
        let r = map_runs(10, Execution::default(), |i| {
            if i == 3 {
                Err(Error::EmptyObjective)
            } else {
                Ok(i)
            }
        });
        assert_eq!(r, Err(Error::EmptyObjective));
    }
}
