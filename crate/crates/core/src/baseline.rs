//! Direct result emission without bitmaps.
//!
//! Each task appends positive pairs to a private staging buffer and, when
//! the buffer fills up (and once more at the end of the task), reserves a
//! slot range in the global buffer with a fetch-and-add on a shared cursor
//! and copies the staged pairs there.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use parking_lot::RwLock;

use crate::geometry::{ObjectId, Point, Rect};

/// Staged pairs per task before a flush.
pub const STAGING_CAPACITY: usize = 1024;

/// Synchronized-operation counters.
///
/// `appends` counts one synchronized append per positive outcome, standing
/// for the atomic increments lanes perform on a shared staging buffer.
/// `flushes` counts global cursor reservations.
#[derive(Debug, Default)]
pub struct ContentionCounters {
    appends: AtomicU64,
    flushes: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContentionSnapshot {
    pub appends: u64,
    pub flushes: u64,
}

impl ContentionSnapshot {
    pub fn sync_ops(&self) -> u64 {
        self.appends + self.flushes
    }
}

impl ContentionCounters {
    pub fn snapshot(&self) -> ContentionSnapshot {
        ContentionSnapshot {
            appends: self.appends.load(Ordering::Relaxed),
            flushes: self.flushes.load(Ordering::Relaxed),
        }
    }
}

/// Global `(query_id, object_id)` buffer shared by all tasks.
///
/// Pairs are stored packed in atomic slots, so writers that reserved
/// disjoint ranges only need the read side of the lock. Growing the
/// backing vector takes the write side.
#[derive(Debug)]
pub struct SharedResultBuffer {
    cursor: AtomicUsize,
    slots: RwLock<Vec<AtomicU64>>,
    pub counters: ContentionCounters,
    staging_capacity: usize,
}

impl Default for SharedResultBuffer {
    fn default() -> Self {
        Self::new(STAGING_CAPACITY)
    }
}

impl SharedResultBuffer {
    pub fn new(staging_capacity: usize) -> Self {
        assert!(staging_capacity > 0);
        SharedResultBuffer {
            cursor: AtomicUsize::new(0),
            slots: RwLock::new(Vec::new()),
            counters: ContentionCounters::default(),
            staging_capacity,
        }
    }

    pub fn staging_capacity(&self) -> usize {
        self.staging_capacity
    }

    pub fn len(&self) -> usize {
        self.cursor.load(Ordering::Acquire)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn flush(&self, staged: &mut Vec<u64>) {
        if staged.is_empty() {
            return;
        }
        self.counters.flushes.fetch_add(1, Ordering::Relaxed);
        let start = self.cursor.fetch_add(staged.len(), Ordering::AcqRel);
        let end = start + staged.len();
        loop {
            let slots = self.slots.read();
            if slots.len() >= end {
                for (slot, &v) in slots[start..end].iter().zip(staged.iter()) {
                    slot.store(v, Ordering::Relaxed);
                }
                break;
            }
            drop(slots);
            let mut slots = self.slots.write();
            if slots.len() < end {
                let new_len = end.max(slots.len() * 2);
                slots.resize_with(new_len, || AtomicU64::new(0));
            }
        }
        staged.clear();
    }

    /// All pairs in reservation order. Call once every task has finished.
    pub fn into_pairs(self) -> Vec<(u32, ObjectId)> {
        let n = self.cursor.into_inner();
        let mut slots = self.slots.into_inner();
        slots.truncate(n);
        slots
            .into_iter()
            .map(|s| {
                let v = s.into_inner();
                ((v >> 32) as u32, v as u32)
            })
            .collect()
    }
}

/// Tests every (subquery, object) pair of one cell and emits the positives.
///
/// `query_ids[s]` tags results of `rects[s]`; `object_ids[k]` is the id of
/// `points[k]`. Returns the number of pairs emitted.
pub fn filter_direct(
    points: &[Point],
    object_ids: &[ObjectId],
    rects: &[Rect],
    query_ids: &[u32],
    buffer: &SharedResultBuffer,
) -> usize {
    debug_assert_eq!(points.len(), object_ids.len());
    debug_assert_eq!(rects.len(), query_ids.len());
    let mut staged = Vec::with_capacity(buffer.staging_capacity.min(rects.len() * points.len()));
    let mut emitted = 0;
    for (r, &q) in rects.iter().zip(query_ids) {
        for (p, &o) in points.iter().zip(object_ids) {
            if r.contains(*p) {
                buffer.counters.appends.fetch_add(1, Ordering::Relaxed);
                staged.push(((q as u64) << 32) | o as u64);
                emitted += 1;
                if staged.len() == buffer.staging_capacity {
                    buffer.flush(&mut staged);
                }
            }
        }
    }
    buffer.flush(&mut staged);
    emitted
}
