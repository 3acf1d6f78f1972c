//! Data-parallel building blocks shared by the indexing phases.

use rayon::prelude::*;

/// Exclusive prefix sum. Returns the offsets and the grand total.
pub fn exclusive_scan(counts: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(counts.len());
    let mut acc = 0usize;
    for &c in counts {
        offsets.push(acc);
        acc += c;
    }
    (offsets, acc)
}

/// Splits `out` into consecutive mutable slices of the given lengths.
pub fn split_by_counts<'a, T>(mut out: &'a mut [T], counts: &[usize]) -> Vec<&'a mut [T]> {
    let mut parts = Vec::with_capacity(counts.len());
    for &c in counts {
        let (head, tail) = std::mem::take(&mut out).split_at_mut(c);
        parts.push(head);
        out = tail;
    }
    parts
}

/// Two-pass emission without write contention: a dry run counts the outputs
/// of every input item, an exclusive scan assigns output slots, and a second
/// pass writes each item's outputs into its own slot range.
///
/// `write(k, slot)` must fill exactly `count(k)` entries.
pub fn two_pass_emit<T, C, W>(n_items: usize, count: C, write: W) -> Vec<T>
where
    T: Default + Clone + Send,
    C: Fn(usize) -> usize + Sync,
    W: Fn(usize, &mut [T]) + Sync,
{
    let counts: Vec<usize> = (0..n_items).into_par_iter().map(&count).collect();
    let (_, total) = exclusive_scan(&counts);
    let mut out = vec![T::default(); total];
    split_by_counts(&mut out, &counts)
        .into_par_iter()
        .enumerate()
        .for_each(|(k, slot)| write(k, slot));
    out
}
