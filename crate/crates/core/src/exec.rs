//! Serial / parallel dispatch for the data-parallel loops of the crate.
//!
//! Every helper here returns results in index order and reduces with an
//! order-independent rule, so the output never depends on the number of
//! worker threads or on whether the `parallel` feature is compiled in.

/// How data-parallel loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Runs on the rayon global pool. Falls back to serial execution when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build actually runs [`Execution::Parallel`] on several threads.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// `(0..n).map(f).collect()`, possibly in parallel.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Index of the maximum of `f` over `0..n`. Ties go to the smaller index.
    /// Returns `None` for `n == 0`.
    pub fn argmax<F>(self, n: usize, f: F) -> Option<(usize, f64)>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel if n >= PAR_THRESHOLD => {
                use rayon::prelude::*;
                (0..n)
                    .into_par_iter()
                    .map(|i| (i, f(i)))
                    .reduce_with(better)
            }
            _ => (0..n).map(|i| (i, f(i))).reduce(better),
        }
    }
}

/// Size the global worker pool. Must run before the first parallel loop; a
/// no-op without the `parallel` feature.
pub fn set_worker_threads(threads: usize) -> crate::Result<()> {
    if threads == 0 {
        return Err(crate::Error::usage("worker count must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| crate::Error::usage(format!("worker pool: {e}")))?;
    Ok(())
}

#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 4096;

// Total order on (value, index): larger value wins, then smaller index. The rule
// is associative and commutative, so any reduction tree gives the same answer.
fn better(x: (usize, f64), y: (usize, f64)) -> (usize, f64) {
    if y.1 > x.1 || (y.1 == x.1 && y.0 < x.0) || x.1.is_nan() {
        y
    } else {
        x
    }
}

/// Neumaier-compensated sum of `values` in the given order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
