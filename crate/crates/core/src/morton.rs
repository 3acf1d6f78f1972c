//! Z-order (Morton) codes and the mapping from positions to grid cells.
//!
//! Bit `k` of the column index `i` lands on bit `2k` of the code and bit `k`
//! of the row index `j` on bit `2k + 1`. Every index in this crate uses this
//! x-first convention.

use thiserror::Error;

use crate::geometry::{Point, Rect};

/// Deepest level supported by the 64-bit codes and the leaf id packing.
pub const MAX_LEVEL: u8 = 15;

/// Default maximum quadtree level (4^12 deepest cells).
pub const DEFAULT_L_MAX: u8 = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MortonError {
    #[error("cannot truncate a level-{from} code to deeper level {to}")]
    LevelOrder { from: u8, to: u8 },
    #[error("point ({x}, {y}) lies outside the bounding rectangle")]
    OutOfBounds { x: f64, y: f64 },
    #[error("level {0} exceeds the supported maximum")]
    LevelTooDeep(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MortonCode {
    pub z: u64,
    pub level: u8,
}

/// Cell `(i, j)` of a `2^level x 2^level` grid; `i` is the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridCoord {
    pub i: u32,
    pub j: u32,
    pub level: u8,
}

impl GridCoord {
    pub fn new(i: u32, j: u32, level: u8) -> Self {
        debug_assert!(level <= MAX_LEVEL && (i as u64) < (1 << level) && (j as u64) < (1 << level));
        GridCoord { i, j, level }
    }
}

/// Spreads the low 32 bits of `v` onto the even bit positions.
#[inline]
fn spread(v: u32) -> u64 {
    let mut x = v as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

#[inline]
fn compact(z: u64) -> u32 {
    let mut x = z & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x >> 4)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x >> 8)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x >> 16)) & 0x0000_0000_FFFF_FFFF;
    x as u32
}

/// Interleaves column and row indices into a raw code.
#[inline]
pub fn encode(i: u32, j: u32) -> u64 {
    spread(i) | (spread(j) << 1)
}

/// Inverse of [`encode`].
#[inline]
pub fn decode(z: u64) -> (u32, u32) {
    (compact(z), compact(z >> 1))
}

pub fn interleave(c: GridCoord) -> MortonCode {
    MortonCode {
        z: encode(c.i, c.j),
        level: c.level,
    }
}

pub fn deinterleave(code: MortonCode) -> GridCoord {
    let (i, j) = decode(code.z);
    GridCoord {
        i,
        j,
        level: code.level,
    }
}

/// Code of the ancestor cell at level `to`: `z / 4^(from - to)`.
pub fn truncate(code: MortonCode, to: u8) -> Result<MortonCode, MortonError> {
    if to > code.level {
        return Err(MortonError::LevelOrder {
            from: code.level,
            to,
        });
    }
    Ok(MortonCode {
        z: code.z >> (2 * (code.level - to) as u32),
        level: to,
    })
}

/// Number of bits needed to index `n` cells along one axis.
pub fn level_for_side(n: u32) -> u8 {
    (32 - n.saturating_sub(1).leading_zeros()) as u8
}

/// Floor mapping of coordinates onto `cells` equally sized cells per axis,
/// optionally coarsened by dropping `shift` low bits of each index.
///
/// Values on an interior cell border go to the upper cell; values on the
/// rectangle's upper edge clamp into the last cell. The mapping is monotone
/// in each coordinate, which is what makes query splitting exact: every
/// point inside a query maps into the query's corner-cell window. A
/// coarsened mapper agrees bit for bit with truncating the fine indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMapper {
    pub bounds: Rect,
    /// Fine cells per axis.
    pub cells: u32,
    pub shift: u8,
    pub cell_w: f64,
    pub cell_h: f64,
}

impl CellMapper {
    pub fn new(bounds: Rect, cells: u32) -> Self {
        assert!(cells >= 1, "a grid needs at least one cell per side");
        CellMapper {
            bounds,
            cells,
            shift: 0,
            cell_w: bounds.width() / cells as f64,
            cell_h: bounds.height() / cells as f64,
        }
    }

    /// Same fine grid, indices truncated by `shift` bits.
    pub fn coarsened(self, shift: u8) -> Self {
        CellMapper { shift, ..self }
    }

    /// Cells per axis after coarsening.
    pub fn side(&self) -> u32 {
        self.cells.div_ceil(1 << self.shift)
    }

    #[inline]
    fn axis(v: f64, origin: f64, size: f64, cells: u32) -> u32 {
        if size <= 0.0 {
            return 0;
        }
        let k = ((v - origin) / size).floor();
        if k <= 0.0 {
            0
        } else {
            (k as u64).min(cells as u64 - 1) as u32
        }
    }

    #[inline]
    pub fn col(&self, x: f64) -> u32 {
        Self::axis(x, self.bounds.xa, self.cell_w, self.cells) >> self.shift
    }

    #[inline]
    pub fn row(&self, y: f64) -> u32 {
        Self::axis(y, self.bounds.ya, self.cell_h, self.cells) >> self.shift
    }

    /// Column and row of `p`, which must lie inside the bounds.
    pub fn cell_of(&self, p: Point) -> Result<(u32, u32), MortonError> {
        if !self.bounds.contains(p) {
            return Err(MortonError::OutOfBounds { x: p.x, y: p.y });
        }
        Ok((self.col(p.x), self.row(p.y)))
    }

    /// Inclusive column and row windows touched by `q` (already clipped).
    pub fn window(&self, q: &Rect) -> ((u32, u32), (u32, u32)) {
        ((self.col(q.xa), self.col(q.xb)), (self.row(q.ya), self.row(q.yb)))
    }

    /// True when every coordinate mapping into columns `lo..=hi` and rows
    /// `jlo..=jhi` lies inside `q`. Decided on the mapping itself, so it is
    /// exact with respect to how objects are assigned to cells.
    pub fn covers(&self, q: &Rect, (lo, hi): (u32, u32), (jlo, jhi): (u32, u32)) -> bool {
        let b = &self.bounds;
        let left = q.xa <= b.xa || self.col(q.xa.next_down()) < lo;
        let right = q.xb >= b.xb || self.col(q.xb.next_up()) > hi;
        let bottom = q.ya <= b.ya || self.row(q.ya.next_down()) < jlo;
        let top = q.yb >= b.yb || self.row(q.yb.next_up()) > jhi;
        left && right && bottom && top
    }

    /// Nominal geometric extent of the cell block `lo..=hi` x `jlo..=jhi`.
    pub fn block_rect(&self, (lo, hi): (u32, u32), (jlo, jhi): (u32, u32)) -> Rect {
        let b = &self.bounds;
        let edge = |k: u32, origin: f64, size: f64, upper: f64| {
            let fine = (k as u64) << self.shift;
            if fine >= self.cells as u64 {
                upper
            } else {
                origin + fine as f64 * size
            }
        };
        Rect {
            xa: edge(lo, b.xa, self.cell_w, b.xb),
            ya: edge(jlo, b.ya, self.cell_h, b.yb),
            xb: edge(hi + 1, b.xa, self.cell_w, b.xb),
            yb: edge(jhi + 1, b.ya, self.cell_h, b.yb),
        }
    }
}

/// Grid coordinates of `p` in the `2^level x 2^level` grid over `mbr`.
pub fn point_to_coord(p: Point, mbr: &Rect, level: u8) -> Result<GridCoord, MortonError> {
    if level > MAX_LEVEL {
        return Err(MortonError::LevelTooDeep(level));
    }
    let (i, j) = CellMapper::new(*mbr, 1u32 << level).cell_of(p)?;
    Ok(GridCoord { i, j, level })
}
