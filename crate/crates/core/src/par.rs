//! Order-preserving parallel maps. Without the `parallel` feature these run
//! sequentially and produce identical output.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Applies `f` to consecutive chunks of `0..n` and concatenates the results.
#[cfg(feature = "parallel")]
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(core::ops::Range<usize>) -> Vec<T> + Sync + Send,
{
    use rayon::prelude::*;
    let chunks = n.div_ceil(chunk.max(1));
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(n)))
        .collect();
    parts.into_iter().flatten().collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    F: Fn(core::ops::Range<usize>) -> Vec<T>,
{
    let chunk = chunk.max(1);
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        out.extend(f(start..end));
        start = end;
    }
    out
}
