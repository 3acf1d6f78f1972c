//! Turning bitmaps and covering subqueries into per-query result lists.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::bitmap::{LinearBitmap, ResultCounts, W};
use crate::directory::{CellDirectory, CellId};
use crate::geometry::ObjectId;
use crate::scheduler::dispatch;

/// Default number of bitmaps decoded per chunk.
pub const DEFAULT_CHUNK_SIZE: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("cell {cell_id} subquery {subquery}: expected {expected} results, found {found}")]
    CountMismatch {
        cell_id: CellId,
        subquery: usize,
        expected: usize,
        found: usize,
    },
    #[error("object {object} reported twice for the query of issuer {issuer}")]
    DuplicateResult { issuer: ObjectId, object: ObjectId },
    #[error("bitmap for cell {0} has no directory block")]
    UnknownCell(CellId),
    #[error("chunk size must be at least 1")]
    BadChunkSize,
}

/// Result list per issued query, keyed by issuer id. Lists are sorted by
/// object id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResultSet(pub BTreeMap<ObjectId, Vec<ObjectId>>);

impl ResultSet {
    pub fn get(&self, issuer: ObjectId) -> Option<&[ObjectId]> {
        self.0.get(&issuer).map(Vec::as_slice)
    }

    pub fn n_queries(&self) -> usize {
        self.0.len()
    }

    /// Number of (query, object) pairs.
    pub fn total(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectId, &[ObjectId])> {
        self.0.iter().map(|(&q, l)| (q, l.as_slice()))
    }
}

/// One `issuer: id,id,...` line per query, in issuer order.
impl fmt::Display for ResultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, ids) in self.iter() {
            write!(f, "{q}:")?;
            for (k, id) in ids.iter().enumerate() {
                write!(f, "{}{id}", if k == 0 { " " } else { "," })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Decoded results of one bitmap: every subquery's ids back to back,
/// subquery `s` at `counts.offsets[s]..+counts.counts[s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedCell {
    pub cell_id: CellId,
    pub query_ids: Vec<u32>,
    pub counts: ResultCounts,
    pub ids: Vec<ObjectId>,
}

impl DecodedCell {
    pub fn list(&self, s: usize) -> &[ObjectId] {
        let start = self.counts.offsets[s];
        &self.ids[start..start + self.counts.counts[s]]
    }

    pub fn lists(&self) -> impl Iterator<Item = (u32, &[ObjectId])> {
        self.query_ids.iter().enumerate().map(|(s, &q)| (q, self.list(s)))
    }
}

/// Scans each subquery's words and writes the ids of set bits at the
/// subquery's offset.
pub fn decode_bitmap(
    bitmap: &LinearBitmap,
    counts: &ResultCounts,
    object_ids: &[ObjectId],
) -> Result<Vec<ObjectId>, DecodeError> {
    debug_assert_eq!(object_ids.len(), bitmap.n_objects);
    let mut out = vec![0; counts.total];
    for s in 0..bitmap.n_queries {
        let start = counts.offsets[s];
        let mut n = 0;
        for (j, &word) in bitmap.row(s).iter().enumerate() {
            let mut w = word;
            while w != 0 {
                let k = w.trailing_zeros() as usize;
                if n < counts.counts[s] {
                    out[start + n] = object_ids[j * W + k];
                }
                n += 1;
                w &= w - 1;
            }
        }
        if n != counts.counts[s] {
            return Err(DecodeError::CountMismatch {
                cell_id: bitmap.cell_id,
                subquery: s,
                expected: counts.counts[s],
                found: n,
            });
        }
    }
    Ok(out)
}

/// Decodes `bitmaps` in chunks of `chunk_size`. Chunks run one after the
/// other; the bitmaps of a chunk are spread over `n_workers` jobs. The
/// output follows the input order whatever the chunking.
pub fn decode_bitmaps(
    bitmaps: &[LinearBitmap],
    counts: &[ResultCounts],
    directory: &CellDirectory,
    chunk_size: usize,
    n_workers: usize,
) -> Result<Vec<DecodedCell>, DecodeError> {
    if chunk_size == 0 {
        return Err(DecodeError::BadChunkSize);
    }
    assert_eq!(bitmaps.len(), counts.len());
    let mut out = Vec::with_capacity(bitmaps.len());
    for (chunk, chunk_counts) in bitmaps.chunks(chunk_size).zip(counts.chunks(chunk_size)) {
        let decoded = dispatch(chunk.len(), n_workers, |k| {
            let b = &chunk[k];
            let block = directory.block(b.cell_id).ok_or(DecodeError::UnknownCell(b.cell_id))?;
            let ids = decode_bitmap(b, &chunk_counts[k], directory.object_ids(block))?;
            Ok(DecodedCell {
                cell_id: b.cell_id,
                query_ids: directory.intersecting.query_ids[block.intersecting.clone()].to_vec(),
                counts: chunk_counts[k].clone(),
                ids,
            })
        });
        for d in decoded {
            out.push(d?);
        }
    }
    Ok(out)
}

/// Results of one covering subquery: its cell's whole object list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringList {
    pub query_id: u32,
    pub cell_id: CellId,
    pub ids: Vec<ObjectId>,
}

/// Expands every covering subquery of `directory` whose cell is active.
pub fn expand_covering(directory: &CellDirectory) -> Vec<CoveringList> {
    directory
        .blocks
        .par_iter()
        .filter(|b| b.is_active() && !b.covering.is_empty())
        .flat_map_iter(|b| {
            let ids = directory.object_ids(b);
            directory.covering.query_ids[b.covering.clone()]
                .iter()
                .map(move |&q| CoveringList {
                    query_id: q,
                    cell_id: b.cell_id,
                    ids: ids.to_vec(),
                })
        })
        .collect()
}

/// Concatenates subquery lists per query and sorts them.
///
/// `issuers[q]` is the issuer of dense query `q`; `issued` lists every
/// issuer of the tick, so queries that reached no cell still get an empty
/// list.
pub fn merge_results<'a>(
    lists: impl IntoIterator<Item = (u32, &'a [ObjectId])>,
    issuers: &[ObjectId],
    issued: impl IntoIterator<Item = ObjectId>,
) -> Result<ResultSet, DecodeError> {
    let mut per_query: Vec<Vec<ObjectId>> = vec![Vec::new(); issuers.len()];
    for (q, ids) in lists {
        per_query[q as usize].extend_from_slice(ids);
    }
    let mut out: BTreeMap<ObjectId, Vec<ObjectId>> = issued.into_iter().map(|i| (i, Vec::new())).collect();
    for (q, mut ids) in per_query.into_iter().enumerate() {
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(DecodeError::DuplicateResult {
                issuer: issuers[q],
                object: w[0],
            });
        }
        out.insert(issuers[q], ids);
    }
    Ok(ResultSet(out))
}
