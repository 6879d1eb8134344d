use std::sync::Arc;

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Paths per reduction chunk; fixed so sums do not depend on the worker count.
const CHUNK: usize = 256;

/// Worker pool running path-parallel work with deterministic, ordered
/// reductions: results are identical for any worker count.
#[derive(Clone)]
pub struct Executor {
    pool: Arc<ThreadPool>,
    workers: usize,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Executor {
    /// `workers == 0` means one worker per available core.
    pub fn new(workers: usize) -> Result<Self> {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
        Ok(Self { pool: Arc::new(pool), workers })
    }

    pub fn single() -> Self {
        Self::new(1).expect("single-thread pool")
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Maps `f` over `0..n`, returning results in index order. `init` builds
    /// per-worker scratch state.
    pub fn map<T, S, I, F>(&self, n: usize, init: I, f: F) -> Result<Vec<T>>
    where
        T: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize) -> Result<T> + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map_init(&init, |s, i| f(s, i)).collect())
    }

    /// Sums per-index vectors of length `len`. Indices are grouped in fixed
    /// chunks summed sequentially, and chunk sums are added in order.
    pub fn sum<S, I, F>(&self, n: usize, len: usize, init: I, f: F) -> Result<Vec<f64>>
    where
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize, &mut [f64]) -> Result<()> + Sync + Send,
    {
        let n_chunks = n.div_ceil(CHUNK);
        let partials: Vec<Vec<f64>> = self.pool.install(|| {
            (0..n_chunks)
                .into_par_iter()
                .map_init(&init, |s, c| {
                    let mut acc = vec![0.0; len];
                    let mut item = vec![0.0; len];
                    for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                        item.iter_mut().for_each(|v| *v = 0.0);
                        f(s, i, &mut item)?;
                        acc.iter_mut().zip(&item).for_each(|(a, v)| *a += v);
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut total = vec![0.0; len];
        for p in partials {
            total.iter_mut().zip(&p).for_each(|(a, v)| *a += v);
        }
        Ok(total)
    }
}
