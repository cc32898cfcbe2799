//! Deterministic data-parallel reductions.
//!
//! Work is split into fixed-size chunks whose boundaries depend only on the
//! problem size. Partial results are gathered in chunk order and folded
//! sequentially, so the floating point result is identical for any number of
//! worker threads.

use std::ops::Range;

use rayon::prelude::*;

/// Pixels per work unit.
pub const CHUNK: usize = 2048;

pub fn chunk_ranges(n: usize, chunk: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(n))
        .collect()
}

/// Map every chunk in parallel, then fold the partials in chunk order.
pub fn map_reduce<A, M, R>(n: usize, map: M, mut reduce: R) -> Option<A>
where
    A: Send,
    M: Fn(Range<usize>) -> A + Sync + Send,
    R: FnMut(A, A) -> A,
{
    let parts: Vec<A> = chunk_ranges(n, CHUNK).into_par_iter().map(map).collect();
    let mut it = parts.into_iter();
    let first = it.next()?;
    Some(it.fold(first, &mut reduce))
}

/// Like [`map_reduce`] but hands each chunk a mutable slice of `out`
/// aligned with its range.
pub fn map_mut_reduce<T, A, M, R>(out: &mut [T], map: M, mut reduce: R) -> Option<A>
where
    T: Send,
    A: Send,
    M: Fn(Range<usize>, &mut [T]) -> A + Sync + Send,
    R: FnMut(A, A) -> A,
{
    let parts: Vec<A> = out
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, slice)| {
            let start = c * CHUNK;
            map(start..start + slice.len(), slice)
        })
        .collect();
    let mut it = parts.into_iter();
    let first = it.next()?;
    Some(it.fold(first, &mut reduce))
}
