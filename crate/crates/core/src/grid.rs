//! Uniform grid index: a `split_factor x split_factor` grid over the MBR,
//! object mapping, query splitting into covering and intersecting
//! subqueries, and the split-factor sweep.

use rayon::prelude::*;
use thiserror::Error;

use crate::directory::{sort_by_cell, CellDirectory, CellId, SubQuery};
use crate::geometry::{GeometryError, MovingObject, Rect, TickBatch};
use crate::morton::{encode, level_for_side, CellMapper, MortonError, MAX_LEVEL};
use crate::primitives::two_pass_emit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("split factor must lie in 1..={max}, got {got}")]
    BadSplitFactor { got: u32, max: u32 },
    #[error("split-factor sweep needs at least one candidate")]
    EmptySweep,
    #[error(transparent)]
    Morton(#[from] MortonError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Largest split factor whose Morton codes fit the supported level.
pub const MAX_SPLIT_FACTOR: u32 = 1 << MAX_LEVEL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub mbr: Rect,
    pub split_factor: u32,
    pub cell_w: f64,
    pub cell_h: f64,
}

impl GridSpec {
    pub fn mapper(&self) -> CellMapper {
        CellMapper::new(self.mbr, self.split_factor)
    }

    /// Morton level of the smallest power-of-two grid holding this one.
    pub fn level(&self) -> u8 {
        level_for_side(self.split_factor)
    }

    pub fn cell_id(&self, i: u32, j: u32) -> CellId {
        encode(i, j)
    }

    /// Geometric region of cell `(i, j)`.
    pub fn cell_rect(&self, i: u32, j: u32) -> Rect {
        self.mapper().block_rect((i, i), (j, j))
    }
}

pub fn build_grid(mbr: Rect, split_factor: u32) -> Result<GridSpec, GridError> {
    if split_factor == 0 || split_factor > MAX_SPLIT_FACTOR {
        return Err(GridError::BadSplitFactor {
            got: split_factor,
            max: MAX_SPLIT_FACTOR,
        });
    }
    Ok(GridSpec {
        mbr,
        split_factor,
        cell_w: mbr.width() / split_factor as f64,
        cell_h: mbr.height() / split_factor as f64,
    })
}

/// Cell of every object, in input order.
pub fn map_objects(objects: &[MovingObject], grid: &GridSpec) -> Result<Vec<CellId>, MortonError> {
    let m = grid.mapper();
    objects
        .par_iter()
        .map(|o| m.cell_of(o.position).map(|(i, j)| encode(i, j)))
        .collect()
}

/// Splits clipped queries over the cells they touch. `queries[k]` yields
/// subqueries with `query_id = k`, emitted row by row.
pub fn split_queries(queries: &[Rect], grid: &GridSpec) -> Vec<SubQuery> {
    let m = grid.mapper();
    two_pass_emit(
        queries.len(),
        |k| {
            let ((i0, i1), (j0, j1)) = m.window(&queries[k]);
            ((i1 - i0 + 1) * (j1 - j0 + 1)) as usize
        },
        |k, slot| {
            let q = &queries[k];
            let ((i0, i1), (j0, j1)) = m.window(q);
            let mut n = 0;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    slot[n] = SubQuery {
                        query_id: k as u32,
                        cell_id: encode(i, j),
                        covering: m.covers(q, (i, i), (j, j)),
                    };
                    n += 1;
                }
            }
        },
    )
}

/// Work proxy used by the sweep: containment tests plus the bits of every
/// bitmap word the decoder has to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GridCost {
    pub containment_tests: u64,
    pub decoded_bits: u64,
}

impl GridCost {
    pub fn total(&self) -> u64 {
        self.containment_tests + self.decoded_bits
    }

    pub fn of(directory: &CellDirectory) -> Self {
        directory
            .active_blocks()
            .fold(GridCost::default(), |acc, b| {
                let (q, o) = (b.n_intersecting() as u64, b.n_objects() as u64);
                GridCost {
                    containment_tests: acc.containment_tests + q * o,
                    decoded_bits: acc.decoded_bits + q * o.div_ceil(32) * 32,
                }
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best: u32,
    /// `(split_factor, cost)` for every candidate, in candidate order.
    pub costs: Vec<(u32, GridCost)>,
}

/// Indexes `batch` with every candidate split factor and returns the one
/// with the lowest work; ties go to the smaller split factor.
pub fn sweep_split_factor(
    batch: &TickBatch,
    candidates: impl IntoIterator<Item = u32>,
    covering: bool,
) -> Result<SweepResult, GridError> {
    let mbr = batch.mbr()?;
    let queries: Vec<Rect> = batch.queries.iter().filter_map(|q| q.rect.clip(&mbr)).collect();

    let mut costs = Vec::new();
    for sf in candidates {
        let grid = build_grid(mbr, sf)?;
        let cells = map_objects(&batch.objects, &grid)?;
        let mut subs = split_queries(&queries, &grid);
        if !covering {
            subs.iter_mut().for_each(|s| s.covering = false);
        }
        let dir = sort_by_cell(&batch.objects, &cells, &subs);
        costs.push((sf, GridCost::of(&dir)));
    }
    let best = costs
        .iter()
        .min_by_key(|(sf, c)| (c.total(), *sf))
        .map(|(sf, _)| *sf)
        .ok_or(GridError::EmptySweep)?;
    Ok(SweepResult { best, costs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Query};
    use proptest::prelude::*;

    fn rect(xa: f64, ya: f64, xb: f64, yb: f64) -> Rect {
        Rect::new(xa, ya, xb, yb).unwrap()
    }

    fn ten() -> GridSpec {
        build_grid(rect(0.0, 0.0, 10.0, 10.0), 2).unwrap()
    }

    #[test]
    fn build_grid_examples() {
        let g = ten();
        assert_eq!((g.cell_w, g.cell_h), (5.0, 5.0));
        let one = build_grid(rect(0.0, 0.0, 10.0, 10.0), 1).unwrap();
        assert_eq!(one.cell_rect(0, 0), rect(0.0, 0.0, 10.0, 10.0));
        let big = build_grid(rect(0.0, 0.0, 22500.0, 22500.0), 110).unwrap();
        assert!((big.cell_w - 204.545).abs() < 1e-3);
        assert!(matches!(build_grid(one.mbr, 0), Err(GridError::BadSplitFactor { .. })));
    }

    #[test]
    fn map_objects_examples() {
        let g = ten();
        let o = [
            MovingObject::new(0, 0.0, 0.0),
            MovingObject::new(1, 5.0, 1.0),
            MovingObject::new(2, 1.0, 1.0),
            MovingObject::new(3, 2.0, 3.0),
        ];
        let cells = map_objects(&o, &g).unwrap();
        assert_eq!(cells[0], 0);
        // on the vertical border x = cell_w: floor(5/5) = 1, right cell
        assert_eq!(cells[1], encode(1, 0));
        assert_eq!(cells[2], cells[3]);
    }

    #[test]
    fn query_inside_one_cell() {
        let s = split_queries(&[rect(1.0, 1.0, 2.0, 2.0)], &ten());
        assert_eq!(s.len(), 1);
        assert!(!s[0].covering);
    }

    #[test]
    fn query_equal_to_cell_is_one_covering_subquery_at_upper_edge() {
        // the upper-right cell owns its closed upper borders
        let s = split_queries(&[rect(5.0, 5.0, 10.0, 10.0)], &ten());
        assert_eq!(s, vec![SubQuery { query_id: 0, cell_id: 3, covering: true }]);
    }

    #[test]
    fn interior_cell_query_touches_neighbour_borders() {
        // objects on x = 5 or y = 5 belong to the neighbouring cells, so a
        // closed query equal to cell (0, 0) also reaches those cells
        let s = split_queries(&[rect(0.0, 0.0, 5.0, 5.0)], &ten());
        assert_eq!(s.len(), 4);
        assert_eq!(s.iter().filter(|s| s.covering).count(), 1);
        assert!(s.iter().find(|s| s.covering).unwrap().cell_id == 0);
    }

    #[test]
    fn three_by_three_window() {
        let g = build_grid(rect(0.0, 0.0, 30.0, 30.0), 3).unwrap();
        let s = split_queries(&[rect(8.0, 8.0, 22.0, 22.0)], &g);
        assert_eq!(s.len(), 9);
        let cov: Vec<_> = s.iter().filter(|s| s.covering).collect();
        assert_eq!(cov.len(), 1);
        assert_eq!(cov[0].cell_id, encode(1, 1));
    }

    #[test]
    fn sweep_examples() {
        let objects: Vec<_> = (0..200)
            .map(|k| MovingObject::new(k, (k % 20) as f64 * 5.0, (k / 20) as f64 * 10.0))
            .collect();
        let queries: Vec<_> = objects
            .iter()
            .map(|o| Query { issuer_id: o.id, rect: Rect::centered(o.position, 12.0) })
            .collect();
        let batch = TickBatch::new(0, objects, queries);
        assert_eq!(sweep_split_factor(&batch, [64], true).unwrap().best, 64);
        let r = sweep_split_factor(&batch, [1, 8], true).unwrap();
        let (c1, c8) = (r.costs[0].1, r.costs[1].1);
        assert!(c8.containment_tests < c1.containment_tests && c8.total() < c1.total());
        assert_eq!(r.best, 8);
        assert!(matches!(sweep_split_factor(&batch, [], true), Err(GridError::EmptySweep)));
    }

    fn pts() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64), 2..80)
    }

    proptest! {
        // every (query, object) pair with the object inside the query is
        // reachable through exactly one subquery
        #[test]
        fn partition_and_covering_soundness(
            p in pts(),
            qs in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.0..60.0f64), 1..12),
            sf in 1u32..40,
        ) {
            let objects: Vec<_> = p.iter().enumerate()
                .map(|(k, &(x, y))| MovingObject::new(k as u32, x, y)).collect();
            let mbr = crate::geometry::compute_mbr(&objects).unwrap();
            let queries: Vec<Rect> = qs.iter()
                .filter_map(|&(x, y, s)| Rect::centered(Point::new(x, y), s).clip(&mbr))
                .collect();
            let g = build_grid(mbr, sf).unwrap();
            let cells = map_objects(&objects, &g).unwrap();
            let subs = split_queries(&queries, &g);
            for (k, q) in queries.iter().enumerate() {
                for (o, &c) in objects.iter().zip(&cells) {
                    let hits = subs.iter().filter(|s| s.query_id == k as u32 && s.cell_id == c).count();
                    if q.contains(o.position) {
                        prop_assert_eq!(hits, 1);
                    }
                }
            }
            for s in subs.iter().filter(|s| s.covering) {
                let q = &queries[s.query_id as usize];
                for (o, &c) in objects.iter().zip(&cells) {
                    if c == s.cell_id {
                        prop_assert!(q.contains(o.position));
                    }
                }
            }
        }
    }
}
