//! Static task lists, greedy assignment simulation, and the worker-pool
//! dispatch used by the filtering and decoding phases.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::directory::{CellDirectory, CellId};

/// One active cell with at least one intersecting subquery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellTask {
    /// Position of the cell in `CellDirectory::blocks`.
    pub block: usize,
    pub cell_id: CellId,
    /// Containment tests: intersecting subqueries times objects.
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Policy {
    /// Directory (cell) order.
    Unordered,
    #[default]
    HeaviestFirst,
}

/// Tasks for every active cell holding intersecting subqueries, in
/// directory order.
pub fn build_tasks(directory: &CellDirectory) -> Vec<CellTask> {
    directory
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_active() && b.n_intersecting() > 0)
        .map(|(k, b)| CellTask {
            block: k,
            cell_id: b.cell_id,
            weight: (b.n_intersecting() * b.n_objects()) as u64,
        })
        .collect()
}

pub fn order_tasks(mut tasks: Vec<CellTask>, policy: Policy) -> Vec<CellTask> {
    if policy == Policy::HeaviestFirst {
        tasks.sort_by(|a, b| b.weight.cmp(&a.weight).then(a.cell_id.cmp(&b.cell_id)));
    }
    tasks
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImbalanceReport {
    /// Total weight handled by each worker.
    pub totals: Vec<u64>,
    /// `(max - min) / max` over `totals`; zero when every total is zero.
    pub imbalance: f64,
}

impl ImbalanceReport {
    pub fn from_totals(totals: Vec<u64>) -> Self {
        let max = totals.iter().copied().max().unwrap_or(0);
        let min = totals.iter().copied().min().unwrap_or(0);
        let imbalance = if max == 0 {
            0.0
        } else {
            (max - min) as f64 / max as f64
        };
        ImbalanceReport { totals, imbalance }
    }
}

/// Hands tasks out in list order, each to the currently least-loaded
/// worker (lowest index on ties).
pub fn simulate_assignment(tasks: &[CellTask], n_workers: usize) -> ImbalanceReport {
    assert!(n_workers >= 1, "n_workers must be at least 1");
    let mut totals = vec![0u64; n_workers];
    for t in tasks {
        let (w, _) = totals
            .iter()
            .enumerate()
            .min_by_key(|&(w, &load)| (load, w))
            .expect("at least one worker");
        totals[w] += t.weight;
    }
    ImbalanceReport::from_totals(totals)
}

/// Runs `work(k)` for every `k` in `0..n_tasks` on `n_workers` jobs of the
/// current rayon pool. Jobs claim the next index from a shared counter, so
/// every task runs exactly once and tasks start in list order. Results come
/// back in list order.
pub fn dispatch<T, F>(n_tasks: usize, n_workers: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let next = AtomicUsize::new(0);
    let claim = || {
        let mut done = Vec::new();
        loop {
            let k = next.fetch_add(1, Ordering::Relaxed);
            if k >= n_tasks {
                return done;
            }
            done.push((k, work(k)));
        }
    };
    let jobs = n_workers.clamp(1, n_tasks.max(1));
    let mut parts: Vec<Vec<(usize, T)>> = Vec::with_capacity(jobs);
    if jobs == 1 {
        parts.push(claim());
    } else {
        let slots: Vec<parking_lot::Mutex<Vec<(usize, T)>>> =
            (0..jobs).map(|_| parking_lot::Mutex::new(Vec::new())).collect();
        rayon::scope(|s| {
            for slot in &slots {
                let claim = &claim;
                s.spawn(move |_| *slot.lock() = claim());
            }
        });
        parts.extend(slots.into_iter().map(|m| m.into_inner()));
    }
    let mut all: Vec<(usize, T)> = parts.into_iter().flatten().collect();
    all.sort_unstable_by_key(|&(k, _)| k);
    all.into_iter().map(|(_, t)| t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tasks(weights: &[u64]) -> Vec<CellTask> {
        weights
            .iter()
            .enumerate()
            .map(|(k, &weight)| CellTask {
                block: k,
                cell_id: k as CellId,
                weight,
            })
            .collect()
    }

    fn weights(t: &[CellTask]) -> Vec<u64> {
        t.iter().map(|t| t.weight).collect()
    }

    #[test]
    fn order_examples() {
        assert_eq!(weights(&order_tasks(tasks(&[3, 9, 1]), Policy::HeaviestFirst)), vec![9, 3, 1]);
        let tied = order_tasks(tasks(&[2, 2, 2]), Policy::HeaviestFirst);
        assert_eq!(tied.iter().map(|t| t.cell_id).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(order_tasks(vec![], Policy::HeaviestFirst).is_empty());
        assert_eq!(weights(&order_tasks(tasks(&[3, 9, 1]), Policy::Unordered)), vec![3, 9, 1]);
    }

    #[test]
    fn simulate_examples() {
        assert_eq!(simulate_assignment(&tasks(&[5]), 1).imbalance, 0.0);
        let r = simulate_assignment(&order_tasks(tasks(&[4, 3, 2, 1]), Policy::HeaviestFirst), 2);
        assert_eq!(r.totals, vec![5, 5]);
        assert_eq!(r.imbalance, 0.0);
        let r = simulate_assignment(&tasks(&[1, 1, 8]), 2);
        assert_eq!(r.totals, vec![9, 1]);
        assert!((r.imbalance - 8.0 / 9.0).abs() < 1e-12);
        assert_eq!(simulate_assignment(&[], 3).imbalance, 0.0);
    }

    #[test]
    fn dispatch_runs_each_task_once_in_order() {
        for workers in [1, 2, 8] {
            let hits: Vec<AtomicUsize> = (0..100).map(|_| AtomicUsize::new(0)).collect();
            let out = dispatch(100, workers, |k| {
                hits[k].fetch_add(1, Ordering::Relaxed);
                k * 2
            });
            assert_eq!(out, (0..100).map(|k| k * 2).collect::<Vec<_>>());
            assert!(hits.iter().all(|h| h.load(Ordering::Relaxed) == 1));
        }
        assert!(dispatch(0, 4, |k| k).is_empty());
    }

    proptest! {
        #[test]
        fn ordering_is_a_permutation_and_totals_are_conserved(
            w in proptest::collection::vec(0u64..1000, 0..60),
            workers in 1usize..9,
        ) {
            let base = tasks(&w);
            for policy in [Policy::Unordered, Policy::HeaviestFirst] {
                let ordered = order_tasks(base.clone(), policy);
                let mut a = weights(&ordered);
                let mut b = w.clone();
                a.sort_unstable();
                b.sort_unstable();
                prop_assert_eq!(a, b);
                if policy == Policy::HeaviestFirst {
                    prop_assert!(ordered.windows(2).all(|p| p[0].weight >= p[1].weight));
                }
                let r = simulate_assignment(&ordered, workers);
                prop_assert_eq!(r.totals.iter().sum::<u64>(), w.iter().sum::<u64>());
                prop_assert!((0.0..=1.0).contains(&r.imbalance));
            }
        }
    }
}
