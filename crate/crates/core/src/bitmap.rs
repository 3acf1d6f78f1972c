//! Per-cell containment-test bitmaps.
//!
//! A cell with `nq` intersecting subqueries and `no` objects produces an
//! `nq x ceil(no / W)` matrix of `W`-bit words. Bit `k` of the word for
//! subquery `q` and object block `j` is the outcome for object `j * W + k`
//! of the cell. The filter writes words column-interlaced (all subqueries'
//! words for block 0, then block 1, ...); decoding wants each subquery's
//! words contiguous, so the matrix is transposed word-wise in between.

use crate::directory::CellId;
use crate::geometry::{Point, Rect};
use crate::primitives::exclusive_scan;

/// Bits per bitmap word.
pub const W: usize = 32;
/// Lane-group width: subqueries evaluated together, and the tile edge of
/// the blocked transpose.
pub const SZ_WARP: usize = 32;

/// Number of `W`-bit blocks covering `n_objects`.
#[inline]
pub fn blocks(n_objects: usize) -> usize {
    n_objects.div_ceil(W)
}

/// Word count of a cell's bitmap.
#[inline]
pub fn word_count(n_queries: usize, n_objects: usize) -> usize {
    n_queries * blocks(n_objects)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterlacedBitmap {
    pub cell_id: CellId,
    pub n_queries: usize,
    pub n_objects: usize,
    /// Word for `(q, j)` at `j * n_queries + q`.
    pub words: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearBitmap {
    pub cell_id: CellId,
    pub n_queries: usize,
    pub n_objects: usize,
    /// Word for `(q, j)` at `q * blocks + j`.
    pub words: Vec<u32>,
}

impl InterlacedBitmap {
    pub fn blocks(&self) -> usize {
        blocks(self.n_objects)
    }

    pub fn word(&self, q: usize, j: usize) -> u32 {
        self.words[j * self.n_queries + q]
    }

    pub fn bit(&self, q: usize, object: usize) -> bool {
        self.word(q, object / W) >> (object % W) & 1 == 1
    }
}

impl LinearBitmap {
    pub fn blocks(&self) -> usize {
        blocks(self.n_objects)
    }

    /// Words of subquery `q`.
    pub fn row(&self, q: usize) -> &[u32] {
        let b = self.blocks();
        &self.words[q * b..(q + 1) * b]
    }

    pub fn bit(&self, q: usize, object: usize) -> bool {
        self.row(q)[object / W] >> (object % W) & 1 == 1
    }
}

/// Evaluates every (subquery, object) pair of one cell into `words`, laid
/// out interlaced.
///
/// Subqueries run in lane groups of `SZ_WARP` taken in storage order. For
/// each object block, every lane of the group accumulates a private word
/// over the block's objects and the group then stores its words side by
/// side. Padding bits past the last object stay zero.
pub fn fill_interlaced(points: &[Point], rects: &[Rect], words: &mut [u32]) {
    let nq = rects.len();
    assert_eq!(words.len(), word_count(nq, points.len()));
    for g in (0..nq).step_by(SZ_WARP) {
        let lanes = &rects[g..nq.min(g + SZ_WARP)];
        for (j, block) in points.chunks(W).enumerate() {
            let out = &mut words[j * nq + g..j * nq + g + lanes.len()];
            for (slot, r) in out.iter_mut().zip(lanes) {
                let mut word = 0u32;
                for (k, p) in block.iter().enumerate() {
                    word |= (r.contains(*p) as u32) << k;
                }
                *slot = word;
            }
        }
    }
}

pub fn generate_interlaced(cell_id: CellId, points: &[Point], rects: &[Rect]) -> InterlacedBitmap {
    let mut words = vec![0; word_count(rects.len(), points.len())];
    fill_interlaced(points, rects, &mut words);
    InterlacedBitmap {
        cell_id,
        n_queries: rects.len(),
        n_objects: points.len(),
        words,
    }
}

/// Writes the transpose of the `rows x cols` row-major matrix `src` into
/// `dst` (`cols x rows`), one `SZ_WARP x SZ_WARP` tile at a time through a
/// scratch tile.
pub fn transpose_words(src: &[u32], rows: usize, cols: usize, dst: &mut [u32]) {
    assert_eq!(src.len(), rows * cols);
    assert_eq!(dst.len(), rows * cols);
    let mut tile = [[0u32; SZ_WARP]; SZ_WARP];
    for r0 in (0..rows).step_by(SZ_WARP) {
        let h = SZ_WARP.min(rows - r0);
        for c0 in (0..cols).step_by(SZ_WARP) {
            let w = SZ_WARP.min(cols - c0);
            for r in 0..h {
                let row = &src[(r0 + r) * cols + c0..][..w];
                for c in 0..w {
                    tile[c][r] = row[c];
                }
            }
            for c in 0..w {
                dst[(c0 + c) * rows + r0..][..h].copy_from_slice(&tile[c][..h]);
            }
        }
    }
}

pub fn linearize(b: &InterlacedBitmap) -> LinearBitmap {
    let mut words = vec![0; b.words.len()];
    transpose_words(&b.words, b.blocks(), b.n_queries, &mut words);
    LinearBitmap {
        cell_id: b.cell_id,
        n_queries: b.n_queries,
        n_objects: b.n_objects,
        words,
    }
}

pub fn delinearize(b: &LinearBitmap) -> InterlacedBitmap {
    let mut words = vec![0; b.words.len()];
    transpose_words(&b.words, b.n_queries, b.blocks(), &mut words);
    InterlacedBitmap {
        cell_id: b.cell_id,
        n_queries: b.n_queries,
        n_objects: b.n_objects,
        words,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResultCounts {
    pub counts: Vec<usize>,
    /// Exclusive prefix sum of `counts`.
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl ResultCounts {
    pub fn from_counts(counts: Vec<usize>) -> Self {
        let (offsets, total) = exclusive_scan(&counts);
        ResultCounts {
            counts,
            offsets,
            total,
        }
    }
}

pub fn count_results(b: &LinearBitmap) -> ResultCounts {
    let counts = (0..b.n_queries)
        .map(|q| b.row(q).iter().map(|w| w.count_ones() as usize).sum())
        .collect();
    ResultCounts::from_counts(counts)
}
