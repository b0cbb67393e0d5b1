//! Execution policy for the data-parallel loops.
//!
//! Every hot loop in the crate (per-frequency crack solves, per-trace
//! convolutions, per-sampling-point inversions) is written as an indexed map
//! whose results are gathered in index order, so the output never depends on
//! scheduling. With the `parallel` feature the map runs on rayon; without it,
//! or with [`Exec::Sequential`], it is a plain iterator.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential execution when built without `parallel`.
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
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self == Exec::Parallel {
                return (0..n).into_par_iter().map(f).collect();
            }
        }
        (0..n).map(f).collect()
    }

    /// Like [`Exec::map`] for fallible work; the first error in index order wins.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }

    /// Runs `f` on a dedicated pool with `workers` threads. `workers <= 1`
    /// selects sequential execution.
    pub fn with_workers<R, F>(workers: usize, f: F) -> R
    where
        R: Send,
        F: FnOnce(Exec) -> R + Send,
    {
        if workers <= 1 {
            return f(Exec::Sequential);
        }
        #[cfg(feature = "parallel")]
        {
            match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(pool) => pool.install(|| f(Exec::Parallel)),
                Err(_) => f(Exec::Parallel),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            f(Exec::Sequential)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let out = exec.map(1000, |i| i * i);
            assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
        }
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> =
            Exec::Parallel.try_map(100, |i| if i % 30 == 7 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(7));
    }
}
