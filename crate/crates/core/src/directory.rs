//! Subqueries and the cell-sorted directory both indices feed into the
//! filtering phase.

use std::ops::Range;

use rayon::prelude::*;

use crate::geometry::{MovingObject, ObjectId, Point};

/// Cell identifier: a Morton code for the uniform grid, a packed
/// `(level, z)` leaf id for the quadtree.
pub type CellId = u64;

/// Restriction of one query to one index cell.
///
/// `query_id` is the dense position of the originating query in the tick's
/// query table, not the issuer id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SubQuery {
    pub query_id: u32,
    pub cell_id: CellId,
    pub covering: bool,
}

impl SubQuery {
    /// Sort key placing every intersecting subquery ahead of every covering
    /// one, each group ordered by cell.
    #[inline]
    pub fn sort_key(&self) -> (bool, CellId) {
        (self.covering, self.cell_id)
    }
}

/// Objects as a structure of vectors, aligned by position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectColumns {
    pub ids: Vec<ObjectId>,
    pub points: Vec<Point>,
    pub cells: Vec<CellId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubQueryColumns {
    pub query_ids: Vec<u32>,
    pub cells: Vec<CellId>,
}

impl SubQueryColumns {
    pub fn len(&self) -> usize {
        self.query_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query_ids.is_empty()
    }
}

/// Offsets of one cell's entries in each sorted vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellBlock {
    pub cell_id: CellId,
    pub objects: Range<usize>,
    pub intersecting: Range<usize>,
    pub covering: Range<usize>,
}

impl CellBlock {
    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_intersecting(&self) -> usize {
        self.intersecting.len()
    }

    pub fn is_active(&self) -> bool {
        !self.objects.is_empty()
    }
}

/// Objects and subqueries sorted by cell, plus the per-cell block table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellDirectory {
    pub objects: ObjectColumns,
    pub intersecting: SubQueryColumns,
    pub covering: SubQueryColumns,
    /// One entry per cell holding at least one object or subquery, ascending.
    pub blocks: Vec<CellBlock>,
    /// Cells holding at least one object, ascending.
    pub active_cells: Vec<CellId>,
}

impl CellDirectory {
    pub fn block(&self, cell: CellId) -> Option<&CellBlock> {
        self.blocks
            .binary_search_by_key(&cell, |b| b.cell_id)
            .ok()
            .map(|k| &self.blocks[k])
    }

    pub fn object_ids(&self, block: &CellBlock) -> &[ObjectId] {
        &self.objects.ids[block.objects.clone()]
    }

    pub fn object_points(&self, block: &CellBlock) -> &[Point] {
        &self.objects.points[block.objects.clone()]
    }

    /// Blocks of active cells, in cell order.
    pub fn active_blocks(&self) -> impl Iterator<Item = &CellBlock> {
        self.blocks.iter().filter(|b| b.is_active())
    }
}

fn runs(cells: &[CellId]) -> Vec<(CellId, Range<usize>)> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=cells.len() {
        if k == cells.len() || cells[k] != cells[start] {
            out.push((cells[start], start..k));
            start = k;
        }
    }
    out
}

/// Sorts objects and subqueries by cell (stable) and builds the block table.
///
/// `object_cells[k]` is the cell of `objects[k]`.
pub fn sort_by_cell(
    objects: &[MovingObject],
    object_cells: &[CellId],
    subqueries: &[SubQuery],
) -> CellDirectory {
    assert_eq!(objects.len(), object_cells.len());

    let mut order: Vec<u32> = (0..objects.len() as u32).collect();
    order.par_sort_by_key(|&k| object_cells[k as usize]);
    let objects = ObjectColumns {
        ids: order.iter().map(|&k| objects[k as usize].id).collect(),
        points: order.iter().map(|&k| objects[k as usize].position).collect(),
        cells: order.iter().map(|&k| object_cells[k as usize]).collect(),
    };

    let mut sq = subqueries.to_vec();
    sq.par_sort_by_key(SubQuery::sort_key);
    let split = sq.partition_point(|s| !s.covering);
    let columns = |s: &[SubQuery]| SubQueryColumns {
        query_ids: s.iter().map(|s| s.query_id).collect(),
        cells: s.iter().map(|s| s.cell_id).collect(),
    };
    let intersecting = columns(&sq[..split]);
    let covering = columns(&sq[split..]);

    let obj_runs = runs(&objects.cells);
    let int_runs = runs(&intersecting.cells);
    let cov_runs = runs(&covering.cells);
    let active_cells = obj_runs.iter().map(|(c, _)| *c).collect();

    let mut cells: Vec<CellId> = obj_runs
        .iter()
        .chain(&int_runs)
        .chain(&cov_runs)
        .map(|(c, _)| *c)
        .collect();
    cells.sort_unstable();
    cells.dedup();

    let (mut a, mut b, mut c) = (0, 0, 0);
    let mut blocks = Vec::with_capacity(cells.len());
    let take = |runs: &[(CellId, Range<usize>)], k: &mut usize, cell: CellId, end: usize| {
        if *k < runs.len() && runs[*k].0 == cell {
            *k += 1;
            runs[*k - 1].1.clone()
        } else {
            // empty range positioned where the cell would sit
            let at = runs.get(*k).map_or(end, |r| r.1.start);
            at..at
        }
    };
    for cell in cells {
        blocks.push(CellBlock {
            cell_id: cell,
            objects: take(&obj_runs, &mut a, cell, objects.ids.len()),
            intersecting: take(&int_runs, &mut b, cell, intersecting.len()),
            covering: take(&cov_runs, &mut c, cell, covering.len()),
        });
    }

    CellDirectory {
        objects,
        intersecting,
        covering,
        blocks,
        active_cells,
    }
}
