//! PR-quadtree index built level by level over Morton-sorted objects, with a
//! flat lookup table (`zmap`) from deepest-level grid cells to leaves.
//!
//! Construction follows the data-parallel scheme: compute every object's
//! Morton code at `l_max`, sort once, then walk down the levels. At each
//! level the children of every quadrant marked for splitting are located as
//! sub-intervals of the sorted vector (truncating a code gives its ancestor
//! at any level, so a quadrant's objects are always contiguous). A small
//! serial check decides which children split again and which become leaves.
//! Quadrants at `l_max` are leaves whatever their occupancy.
//!
//! Leaves are identified by a packed `(level, z)` integer. Ordering packed
//! ids orders leaves by level first, then by Morton code.

use rayon::prelude::*;
use thiserror::Error;

use crate::directory::{CellId, SubQuery};
use crate::geometry::{MovingObject, Rect};
use crate::morton::{decode, encode, CellMapper, MortonError, MAX_LEVEL};
use crate::primitives::{split_by_counts, two_pass_emit};

/// Default occupancy threshold.
pub const DEFAULT_TH_QUAD: usize = 384;

const LEVEL_SHIFT: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("th_quad must be at least 1")]
    BadThreshold,
    #[error("l_max must lie in 1..={MAX_LEVEL}, got {0}")]
    BadMaxLevel(u8),
    #[error("leaf ({level}, {z}) does not fit a level-{l_deep} lookup table")]
    BadLeaf { level: u8, z: u64, l_deep: u8 },
    #[error("deepest cell {0} is not covered by any leaf")]
    TilingGap(u64),
    #[error("deepest cell {0} is covered by more than one leaf")]
    TilingOverlap(u64),
    #[error(transparent)]
    Morton(#[from] MortonError),
}

/// Packs a leaf's level and Morton code into one cell id.
#[inline]
pub fn pack_leaf(level: u8, z: u64) -> CellId {
    ((level as u64) << LEVEL_SHIFT) | z
}

#[inline]
pub fn unpack_leaf(id: CellId) -> (u8, u64) {
    ((id >> LEVEL_SHIFT) as u8, id & ((1u64 << LEVEL_SHIFT) - 1))
}

/// A quadrant's objects as a half-open range of the sorted object vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadrantInterval {
    pub start: usize,
    pub end: usize,
    pub level: u8,
    pub z: u64,
}

impl QuadrantInterval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// What happened to the quadrants detected at one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTrace {
    pub level: u8,
    pub quadrants: Vec<QuadrantInterval>,
    /// `split[k]` is true when `quadrants[k]` goes on to the next level.
    pub split: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadIndex {
    pub mbr: Rect,
    pub th_quad: usize,
    pub l_max: u8,
    pub l_deep: u8,
    /// Packed leaf ids, ascending.
    pub leaves: Vec<CellId>,
    /// Objects per leaf when the index was built, aligned with `leaves`.
    pub occupancy: Vec<u32>,
    /// Position in `leaves` of the leaf holding each deepest cell, indexed
    /// by the cell's Morton code.
    zmap: Vec<u32>,
    mapper: CellMapper,
}

/// Output of [`build_quadtree`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadBuild {
    pub index: QuadIndex,
    /// Object positions (indices into the input) sorted by `l_max` code.
    pub order: Vec<u32>,
    /// Sorted `l_max` codes, aligned with `order`.
    pub codes: Vec<u64>,
    pub trace: Vec<LevelTrace>,
}

fn check_params(th_quad: usize, l_max: u8) -> Result<(), QuadError> {
    if th_quad == 0 {
        return Err(QuadError::BadThreshold);
    }
    if l_max == 0 || l_max > MAX_LEVEL {
        return Err(QuadError::BadMaxLevel(l_max));
    }
    Ok(())
}

/// Builds the PR-quadtree for `objects` over `mbr`. The root is always split.
pub fn build_quadtree(
    objects: &[MovingObject],
    th_quad: usize,
    l_max: u8,
    mbr: Rect,
) -> Result<QuadBuild, QuadError> {
    check_params(th_quad, l_max)?;
    let fine = CellMapper::new(mbr, 1 << l_max);

    let mut keyed: Vec<(u64, u32)> = objects
        .par_iter()
        .enumerate()
        .map(|(k, o)| fine.cell_of(o.position).map(|(i, j)| (encode(i, j), k as u32)))
        .collect::<Result<_, _>>()?;
    keyed.par_sort_by_key(|&(z, _)| z);
    let (codes, order): (Vec<u64>, Vec<u32>) = keyed.into_iter().unzip();

    let mut to_split = vec![QuadrantInterval {
        start: 0,
        end: codes.len(),
        level: 0,
        z: 0,
    }];
    let mut leaves: Vec<(CellId, u32)> = Vec::new();
    let mut trace = Vec::new();
    let mut level = 1u8;
    let mut l_deep = 1u8;

    while !to_split.is_empty() && level <= l_max {
        let quadrants = detect_quadrants(&codes, &to_split, level, l_max);
        let split: Vec<bool> = quadrants
            .iter()
            .map(|q| q.len() > th_quad && level < l_max)
            .collect();
        to_split = quadrants
            .iter()
            .zip(&split)
            .filter(|(_, &s)| s)
            .map(|(q, _)| *q)
            .collect();
        leaves.extend(
            quadrants
                .iter()
                .zip(&split)
                .filter(|(_, &s)| !s)
                .map(|(q, _)| (pack_leaf(q.level, q.z), q.len() as u32)),
        );
        trace.push(LevelTrace {
            level,
            quadrants,
            split,
        });
        l_deep = level;
        level += 1;
    }

    leaves.sort_unstable_by_key(|&(id, _)| id);
    let (leaf_ids, occupancy): (Vec<_>, Vec<_>) = leaves.into_iter().unzip();
    let mut index = QuadIndex::from_leaves(mbr, th_quad, l_max, leaf_ids)?;
    debug_assert_eq!(index.l_deep, l_deep);
    index.occupancy = occupancy;
    Ok(QuadBuild {
        index,
        order,
        codes,
        trace,
    })
}

/// Splits each interval into its four children at `level`, empty ones
/// included, by bisecting the sorted codes on the truncated prefix.
fn detect_quadrants(
    codes: &[u64],
    parents: &[QuadrantInterval],
    level: u8,
    l_max: u8,
) -> Vec<QuadrantInterval> {
    let shift = 2 * (l_max - level) as u32;
    parents
        .par_iter()
        .flat_map_iter(|p| {
            let slice = &codes[p.start..p.end];
            let mut bounds = [0usize; 5];
            for c in 1..4 {
                let z = p.z * 4 + c as u64;
                bounds[c] = slice.partition_point(|&code| (code >> shift) < z);
            }
            bounds[4] = slice.len();
            (0..4).map(move |c| QuadrantInterval {
                start: p.start + bounds[c],
                end: p.start + bounds[c + 1],
                level,
                z: p.z * 4 + c as u64,
            })
        })
        .collect()
}

/// Lookup table over the `4^l_deep` deepest cells. Entry `z` holds the
/// position in `leaves` of the leaf containing deepest cell `z`.
pub fn build_zmap(leaves: &[CellId], l_deep: u8) -> Result<Vec<u32>, QuadError> {
    let mut spans: Vec<(u64, u64, u32)> = Vec::with_capacity(leaves.len());
    for (k, &id) in leaves.iter().enumerate() {
        let (level, z) = unpack_leaf(id);
        if level > l_deep || z >= 1u64 << (2 * level as u32) {
            return Err(QuadError::BadLeaf { level, z, l_deep });
        }
        let d = 2 * (l_deep - level) as u32;
        spans.push((z << d, (z + 1) << d, k as u32));
    }
    spans.sort_unstable();

    let total = 1u64 << (2 * l_deep as u32);
    let mut cursor = 0u64;
    for &(start, end, _) in &spans {
        match start.cmp(&cursor) {
            std::cmp::Ordering::Greater => return Err(QuadError::TilingGap(cursor)),
            std::cmp::Ordering::Less => return Err(QuadError::TilingOverlap(start)),
            std::cmp::Ordering::Equal => cursor = end,
        }
    }
    if cursor != total {
        return Err(QuadError::TilingGap(cursor));
    }

    let counts: Vec<usize> = spans.iter().map(|&(s, e, _)| (e - s) as usize).collect();
    let mut zmap = vec![0u32; total as usize];
    split_by_counts(&mut zmap, &counts)
        .into_par_iter()
        .zip(&spans)
        .for_each(|(slot, &(_, _, leaf))| slot.fill(leaf));
    Ok(zmap)
}

impl QuadIndex {
    /// Index over an explicit set of leaves. The leaves must tile `mbr`.
    pub fn from_leaves(
        mbr: Rect,
        th_quad: usize,
        l_max: u8,
        mut leaves: Vec<CellId>,
    ) -> Result<Self, QuadError> {
        check_params(th_quad, l_max)?;
        leaves.sort_unstable();
        let l_deep = leaves.iter().map(|&id| unpack_leaf(id).0).max().unwrap_or(1);
        if l_deep > l_max {
            let (level, z) = unpack_leaf(*leaves.last().unwrap());
            return Err(QuadError::BadLeaf { level, z, l_deep: l_max });
        }
        let zmap = build_zmap(&leaves, l_deep)?;
        let occupancy = vec![0; leaves.len()];
        Ok(QuadIndex {
            mbr,
            th_quad,
            l_max,
            l_deep,
            leaves,
            occupancy,
            zmap,
            mapper: CellMapper::new(mbr, 1 << l_max).coarsened(l_max - l_deep),
        })
    }

    /// Mapper onto the deepest-level grid.
    pub fn deep_mapper(&self) -> CellMapper {
        self.mapper
    }

    /// Leaf holding deepest cell `z`.
    #[inline]
    pub fn zmap_leaf(&self, z: u64) -> CellId {
        self.leaves[self.zmap[z as usize] as usize]
    }

    pub fn zmap_len(&self) -> usize {
        self.zmap.len()
    }

    /// Rank of `leaf` among the leaves in packed-id order.
    pub fn leaf_ordinal(&self, leaf: CellId) -> Option<usize> {
        self.leaves.binary_search(&leaf).ok()
    }

    /// Inclusive column and row ranges of `leaf` on the deepest grid.
    pub fn leaf_span(&self, leaf: CellId) -> ((u32, u32), (u32, u32)) {
        let (level, z) = unpack_leaf(leaf);
        let d = (self.l_deep - level) as u32;
        let (i, j) = decode(z);
        (((i << d), ((i + 1) << d) - 1), ((j << d), ((j + 1) << d) - 1))
    }

    pub fn leaf_rect(&self, leaf: CellId) -> Rect {
        let (xs, ys) = self.leaf_span(leaf);
        self.mapper.block_rect(xs, ys)
    }

    /// Deepest-level Morton code of a point inside the MBR.
    pub fn deep_code(&self, p: crate::geometry::Point) -> Result<u64, MortonError> {
        self.mapper.cell_of(p).map(|(i, j)| encode(i, j))
    }

    /// Calls `emit(leaf, covering)` once per distinct leaf touched by `q`.
    ///
    /// Walks the query's deepest-cell window row by row, jumping over the
    /// full width of every leaf it lands on. A leaf is reported from the
    /// row holding its minimal grid coordinates within the window, which
    /// removes the duplicates a cell-by-cell walk would produce.
    pub fn for_each_leaf(&self, q: &Rect, mut emit: impl FnMut(CellId, bool)) {
        let ((i0, i1), (j0, j1)) = self.mapper.window(q);
        for j in j0..=j1 {
            let mut i = i0;
            while i <= i1 {
                let leaf = self.zmap_leaf(encode(i, j));
                let ((li0, li1), (lj0, lj1)) = self.leaf_span(leaf);
                if j == j0.max(lj0) {
                    emit(leaf, self.mapper.covers(q, (li0, li1), (lj0, lj1)));
                }
                i = li1 + 1;
            }
        }
    }
}

/// Leaf of every object, in input order.
pub fn map_objects_quad(objects: &[MovingObject], index: &QuadIndex) -> Result<Vec<CellId>, MortonError> {
    objects
        .par_iter()
        .map(|o| index.deep_code(o.position).map(|z| index.zmap_leaf(z)))
        .collect()
}

/// One subquery per distinct leaf touched by each clipped query.
pub fn split_queries_quad(queries: &[Rect], index: &QuadIndex) -> Vec<SubQuery> {
    two_pass_emit(
        queries.len(),
        |k| {
            let mut n = 0;
            index.for_each_leaf(&queries[k], |_, _| n += 1);
            n
        },
        |k, slot| {
            let mut n = 0;
            index.for_each_leaf(&queries[k], |cell_id, covering| {
                slot[n] = SubQuery {
                    query_id: k as u32,
                    cell_id,
                    covering,
                };
                n += 1;
            });
        },
    )
}

/// When a quadtree built on an earlier tick stops fitting the objects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RebuildPolicy {
    /// A leaf is overfull above `overfull_factor * th_quad` objects.
    pub overfull_factor: f64,
    /// Rebuild when more than this fraction of leaves is overfull.
    pub overfull_fraction: f64,
    /// Rebuild when any leaf exceeds `hard_factor * th_quad` objects.
    pub hard_factor: f64,
}

impl Default for RebuildPolicy {
    fn default() -> Self {
        RebuildPolicy {
            overfull_factor: 2.0,
            overfull_fraction: 0.05,
            hard_factor: 8.0,
        }
    }
}

/// Decides whether `index` should be rebuilt for the current positions.
/// Objects outside the index's MBR always force a rebuild.
pub fn needs_rebuild(index: &QuadIndex, objects: &[MovingObject], policy: &RebuildPolicy) -> bool {
    let Ok(cells) = map_objects_quad(objects, index) else {
        return true;
    };
    let mut counts = vec![0u64; index.leaves.len()];
    for c in cells {
        counts[index.leaf_ordinal(c).expect("mapped leaf exists")] += 1;
    }
    let th = index.th_quad as f64;
    let overfull = counts
        .iter()
        .filter(|&&n| n as f64 > policy.overfull_factor * th)
        .count();
    let hard = counts.iter().any(|&n| n as f64 > policy.hard_factor * th);
    hard || overfull as f64 > policy.overfull_fraction * counts.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use proptest::prelude::*;

    fn rect(xa: f64, ya: f64, xb: f64, yb: f64) -> Rect {
        Rect::new(xa, ya, xb, yb).unwrap()
    }

    /// Seven objects on a 4x4 unit grid: one in the lower-left quadrant,
    /// three in the lower-right, two in the upper-left, one in the
    /// upper-right.
    fn seven() -> Vec<MovingObject> {
        [
            (0.5, 0.5),
            (2.5, 0.5),
            (3.5, 1.5),
            (2.5, 1.5),
            (0.5, 2.5),
            (1.5, 3.5),
            (3.5, 3.5),
        ]
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| MovingObject::new(k as u32, x, y))
        .collect()
    }

    #[test]
    fn seven_object_layout() {
        let b = build_quadtree(&seven(), 1, 2, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        let idx = &b.index;
        assert_eq!(idx.leaves.len(), 10);
        let at = |l| idx.leaves.iter().filter(|&&id| unpack_leaf(id).0 == l).count();
        assert_eq!((at(1), at(2)), (2, 8));
        assert!(idx.leaves.contains(&pack_leaf(1, 0)) && idx.leaves.contains(&pack_leaf(1, 3)));
        assert_eq!(idx.l_deep, 2);
        // codes at l_max = 2, hand-interleaved
        assert_eq!(b.codes, vec![0, 4, 6, 7, 8, 11, 15]);
        assert_eq!(b.order, vec![0, 1, 3, 2, 4, 5, 6]);
    }

    #[test]
    fn generous_threshold_gives_four_leaves() {
        let b = build_quadtree(&seven(), 7, 5, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        assert_eq!(b.index.leaves, (0..4).map(|z| pack_leaf(1, z)).collect::<Vec<_>>());
        let empty = build_quadtree(&[], 1, 5, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        assert_eq!(empty.index.leaves.len(), 4);
    }

    #[test]
    fn colocated_cluster_stops_at_l_max() {
        let mut objs: Vec<_> = (0..5).map(|k| MovingObject::new(k, 1.0, 1.0)).collect();
        objs.push(MovingObject::new(5, 8.0, 8.0));
        let b = build_quadtree(&objs, 1, 3, rect(0.0, 0.0, 8.0, 8.0)).unwrap();
        let idx = &b.index;
        assert_eq!(idx.l_deep, 3);
        // (1, 1) at level 3 is code 3 and holds the whole cluster
        let k = idx.leaf_ordinal(pack_leaf(3, 3)).unwrap();
        assert_eq!(idx.occupancy[k], 5);
        // 4 at level 1, minus 1 split, +4 at level 2, minus 1 split, +4 at level 3
        assert_eq!(idx.leaves.len(), 10);
    }

    #[test]
    fn zmap_examples() {
        let b = build_quadtree(&seven(), 1, 2, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        let idx = &b.index;
        let of = |leaf| (0..16u64).filter(|&z| idx.zmap_leaf(z) == leaf).collect::<Vec<_>>();
        assert_eq!(of(pack_leaf(1, 0)), vec![0, 1, 2, 3]);
        assert_eq!(of(pack_leaf(1, 3)), vec![12, 13, 14, 15]);

        let roots: Vec<_> = (0..4).map(|z| pack_leaf(1, z)).collect();
        let z = build_zmap(&roots, 1).unwrap();
        assert_eq!(z, vec![0, 1, 2, 3]);

        let fine: Vec<_> = (0..16).rev().map(|z| pack_leaf(2, z)).collect();
        let mut z = build_zmap(&fine, 2).unwrap();
        z.sort_unstable();
        assert_eq!(z, (0..16).collect::<Vec<_>>());

        assert_eq!(build_zmap(&roots[..3], 1), Err(QuadError::TilingGap(3)));
        let mut overlap = roots.clone();
        overlap.push(pack_leaf(2, 0));
        assert_eq!(build_zmap(&overlap, 2), Err(QuadError::TilingOverlap(0)));
    }

    /// 28-leaf layout on an 8x8 unit grid whose leaf ranks in packed-id
    /// order put the query issued from (3.5, 4.25) over ranks
    /// {0, 3, 6, 8, 10, 11} partially and rank 9 entirely.
    fn mapping_fixture() -> QuadIndex {
        let mut leaves = vec![pack_leaf(1, 0)];
        leaves.extend([4, 5, 6, 7, 8, 12, 13].iter().map(|&z| pack_leaf(2, z)));
        leaves.extend((36..48).chain(56..64).map(|z| pack_leaf(3, z)));
        QuadIndex::from_leaves(rect(0.0, 0.0, 8.0, 8.0), 1, 3, leaves).unwrap()
    }

    #[test]
    fn mapping_fixture_examples() {
        let idx = mapping_fixture();
        assert_eq!(idx.leaves.len(), 28);
        let issuer = MovingObject::new(1, 3.5, 4.25);
        let cell = map_objects_quad(&[issuer], &idx).unwrap()[0];
        assert_eq!(idx.leaf_ordinal(cell), Some(9));

        let q = rect(2.5, 3.0, 4.5, 5.5);
        let subs = split_queries_quad(&[q], &idx);
        assert_eq!(subs.len(), 7);
        let mut inter: Vec<_> = subs
            .iter()
            .filter(|s| !s.covering)
            .map(|s| idx.leaf_ordinal(s.cell_id).unwrap())
            .collect();
        inter.sort_unstable();
        assert_eq!(inter, vec![0, 3, 6, 8, 10, 11]);
        let cov: Vec<_> = subs.iter().filter(|s| s.covering).map(|s| idx.leaf_ordinal(s.cell_id)).collect();
        assert_eq!(cov, vec![Some(9)]);
    }

    #[test]
    fn duplicate_deep_cells_collapse_to_one_subquery() {
        let b = build_quadtree(&seven(), 1, 2, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        let idx = &b.index;
        // touches all four deepest cells of leaf (1, 3) plus six other leaves
        let q = rect(1.5, 1.5, 3.8, 3.8);
        let subs = split_queries_quad(&[q], idx);
        let on_13: Vec<_> = subs.iter().filter(|s| s.cell_id == pack_leaf(1, 3)).collect();
        assert_eq!(on_13.len(), 1);
        assert!(!on_13[0].covering);
        assert_eq!(subs.len(), 6);
    }

    #[test]
    fn query_inside_one_leaf() {
        let b = build_quadtree(&seven(), 1, 2, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        let subs = split_queries_quad(&[rect(0.2, 0.2, 0.8, 0.8)], &b.index);
        assert_eq!(subs.len(), 1);
        assert!(!subs[0].covering);
        assert_eq!(subs[0].cell_id, pack_leaf(1, 0));
    }

    #[test]
    fn map_objects_corner_and_shared_cell() {
        let b = build_quadtree(&seven(), 1, 2, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        let objs = [
            MovingObject::new(0, 0.0, 0.0),
            MovingObject::new(1, 2.1, 2.1),
            MovingObject::new(2, 2.9, 2.9),
        ];
        let c = map_objects_quad(&objs, &b.index).unwrap();
        assert_eq!(c[0], b.index.zmap_leaf(0));
        assert_eq!(c[1], c[2]);
    }

    #[test]
    fn rebuild_policy_examples() {
        let objs = seven();
        let b = build_quadtree(&objs, 1, 2, rect(0.0, 0.0, 4.0, 4.0)).unwrap();
        let policy = RebuildPolicy::default();
        assert!(!needs_rebuild(&b.index, &objs, &policy));
        let piled: Vec<_> = (0..9).map(|k| MovingObject::new(k, 0.3, 0.3)).collect();
        assert!(needs_rebuild(&b.index, &piled, &policy));
        let drift: Vec<_> = objs
            .iter()
            .map(|o| MovingObject::new(o.id, o.position.x + 0.1, o.position.y + 0.1))
            .collect();
        assert!(!needs_rebuild(&b.index, &drift, &policy));
        let outside = [MovingObject::new(0, 9.0, 9.0)];
        assert!(needs_rebuild(&b.index, &outside, &policy));
    }

    fn cloud() -> impl Strategy<Value = Vec<MovingObject>> {
        proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0u8..4), 0..200).prop_map(|v| {
            v.into_iter()
                .enumerate()
                // a quarter of the points pile onto a few exact spots
                .map(|(k, (x, y, s))| match s {
                    0 => MovingObject::new(k as u32, 10.0 + (k % 3) as f64, 10.0),
                    _ => MovingObject::new(k as u32, x, y),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn structural_invariants(objs in cloud(), th in 1usize..20, l_max in 1u8..8) {
            let mbr = rect(0.0, 0.0, 100.0, 100.0);
            let b = build_quadtree(&objs, th, l_max, mbr).unwrap();
            let idx = &b.index;
            prop_assert!(idx.l_deep <= l_max);
            let tiles: u64 = idx.leaves.iter()
                .map(|&id| 1u64 << (2 * (idx.l_deep - unpack_leaf(id).0) as u32))
                .sum();
            prop_assert_eq!(tiles, 1u64 << (2 * idx.l_deep as u32));
            for (&id, &n) in idx.leaves.iter().zip(&idx.occupancy) {
                if unpack_leaf(id).0 < l_max {
                    prop_assert!(n as usize <= th);
                }
            }
            prop_assert_eq!(idx.occupancy.iter().map(|&n| n as usize).sum::<usize>(), objs.len());
            prop_assert!(b.codes.windows(2).all(|w| w[0] <= w[1]));

            // objects sorted by deepest code stay grouped per leaf
            let cells = map_objects_quad(&objs, idx).unwrap();
            let mut by_code: Vec<(u64, CellId)> = objs.iter().zip(&cells)
                .map(|(o, &c)| (idx.deep_code(o.position).unwrap(), c)).collect();
            by_code.sort_by_key(|&(z, _)| z);
            let mut seen = std::collections::HashSet::new();
            for w in by_code.chunk_by(|a, b| a.1 == b.1) {
                prop_assert!(seen.insert(w[0].1), "leaf split across blocks");
            }
        }

        #[test]
        fn splitting_is_exact_and_duplicate_free(
            objs in cloud(),
            th in 1usize..10,
            qs in proptest::collection::vec((0.0..100.0f64, 0.0..100.0f64, 0.0..50.0f64), 1..10),
        ) {
            let mbr = rect(0.0, 0.0, 100.0, 100.0);
            let b = build_quadtree(&objs, th, 6, mbr).unwrap();
            let idx = &b.index;
            let queries: Vec<Rect> = qs.iter()
                .filter_map(|&(x, y, s)| Rect::centered(Point::new(x, y), s).clip(&mbr))
                .collect();
            let subs = split_queries_quad(&queries, idx);
            let mut keys: Vec<_> = subs.iter().map(|s| (s.query_id, s.cell_id)).collect();
            keys.sort_unstable();
            let n = keys.len();
            keys.dedup();
            prop_assert_eq!(keys.len(), n);

            let cells = map_objects_quad(&objs, idx).unwrap();
            for (k, q) in queries.iter().enumerate() {
                for (o, &c) in objs.iter().zip(&cells) {
                    let sub = subs.iter().find(|s| s.query_id == k as u32 && s.cell_id == c);
                    if q.contains(o.position) {
                        prop_assert!(sub.is_some());
                    }
                    if let Some(s) = sub {
                        if s.covering {
                            prop_assert!(q.contains(o.position));
                        }
                    }
                }
            }
        }
    }
}
