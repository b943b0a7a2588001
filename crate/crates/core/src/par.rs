//! Thin switch between rayon worksharing and plain serial loops.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Worker count of the current pool (1 without the `parallel` feature).
#[inline]
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// `out[i] = f(i)` for every index.
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    #[cfg(not(feature = "parallel"))]
    out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
}

/// Collects `f(i)` for `i in 0..len` into a fresh vector.
pub fn collect_indexed<F>(len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Runs `f(chunk_index, chunk)` over consecutive `chunk_len`-sized pieces.
pub fn for_each_chunk<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(c, chunk)| f(c, chunk));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(c, chunk)| f(c, chunk));
}

/// Like [`for_each_chunk`] but gathers one result per chunk, in chunk order.
pub fn map_chunks<T, R, F>(data: &mut [T], chunk_len: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .map(|(c, chunk)| f(c, chunk))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len)
            .enumerate()
            .map(|(c, chunk)| f(c, chunk))
            .collect()
    }
}

/// Evaluates `f` on `parts` index ranges covering `0..len` and returns the
/// per-part results in range order.
pub fn map_ranges<R, F>(len: usize, parts: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(core::ops::Range<usize>) -> R + Sync + Send,
{
    let parts = parts.clamp(1, len.max(1));
    let step = len.div_ceil(parts).max(1);
    let range = |p: usize| (p * step).min(len)..((p + 1) * step).min(len);
    #[cfg(feature = "parallel")]
    {
        (0..parts).into_par_iter().map(|p| f(range(p))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..parts).map(|p| f(range(p))).collect()
    }
}

/// `y[i] = f(y[i], x[i])` elementwise. Lengths must match.
pub fn fill_zip<F>(y: &mut [f64], x: &[f64], f: F)
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    debug_assert_eq!(y.len(), x.len());
    #[cfg(feature = "parallel")]
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, &xi)| *yi = f(*yi, xi));
    #[cfg(not(feature = "parallel"))]
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi = f(*yi, xi));
}
