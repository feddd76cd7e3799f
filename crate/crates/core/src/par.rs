//! Parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the heavy loops run on rayon when the
//! problem is large enough to amortize the fork/join overhead; otherwise they
//! run serially. Reductions are chunked with a fixed chunk size and the chunk
//! partials are combined in index order, so sums are bit-identical for any
//! thread count, including the sequential build.

/// Fixed reduction chunk size. Also the work unit for parallel maps.
pub const CHUNK: usize = 4096;

/// Below this length loops stay sequential even on the parallel build.
pub const PAR_THRESHOLD: usize = 1 << 16;

#[cfg(feature = "parallel")]
pub fn for_each_chunk_mut<T: Send, F>(data: &mut [T], f: F)
where
    F: Fn(usize, &mut [T]) + Sync,
{
    if data.len() < PAR_THRESHOLD {
        for (c, chunk) in data.chunks_mut(CHUNK).enumerate() {
            f(c * CHUNK, chunk);
        }
    } else {
        use rayon::prelude::*;
        data.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| f(c * CHUNK, chunk));
    }
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_mut<T, F>(data: &mut [T], f: F)
where
    F: Fn(usize, &mut [T]),
{
    for (c, chunk) in data.chunks_mut(CHUNK).enumerate() {
        f(c * CHUNK, chunk);
    }
}

/// Deterministic chunked sum of `f(i)` over `0..n`.
#[cfg(feature = "parallel")]
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let nchunks = n.div_ceil(CHUNK);
    let partial: Vec<f64> = if n < PAR_THRESHOLD {
        (0..nchunks)
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(n);
                let mut s = 0.0;
                for i in lo..hi {
                    s += f(i);
                }
                s
            })
            .collect()
    } else {
        use rayon::prelude::*;
        (0..nchunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(n);
                let mut s = 0.0;
                for i in lo..hi {
                    s += f(i);
                }
                s
            })
            .collect()
    };
    partial.iter().sum()
}

#[cfg(not(feature = "parallel"))]
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    let nchunks = n.div_ceil(CHUNK);
    let mut partial = Vec::with_capacity(nchunks);
    for c in 0..nchunks {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut s = 0.0;
        for i in lo..hi {
            s += f(i);
        }
        partial.push(s);
    }
    partial.iter().sum()
}

/// Deterministic max of `f(i)` over `0..n`; ties resolved toward smaller index.
pub fn max_indexed<F>(n: usize, f: F) -> (usize, f64)
where
    F: Fn(usize) -> f64,
{
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let v = f(i);
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}
