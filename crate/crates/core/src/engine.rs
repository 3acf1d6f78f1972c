//! Per-tick pipeline: index, map and split, sort, filter, decode, merge.

use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use thiserror::Error;

use crate::baseline::{filter_direct, SharedResultBuffer, STAGING_CAPACITY};
use crate::bitmap::{count_results, fill_interlaced, linearize, word_count, InterlacedBitmap, LinearBitmap, W};
use crate::decode::{decode_bitmaps, expand_covering, merge_results, DecodeError, ResultSet, DEFAULT_CHUNK_SIZE};
use crate::directory::{sort_by_cell, CellDirectory};
use crate::geometry::{compute_mbr, GeometryError, ObjectId, Rect, TickBatch};
use crate::grid::{build_grid, map_objects, split_queries, sweep_split_factor, GridError};
use crate::morton::{MortonError, DEFAULT_L_MAX};
use crate::oracle::brute_force_join;
use crate::primitives::split_by_counts;
use crate::quadtree::{
    build_quadtree, map_objects_quad, needs_rebuild, split_queries_quad, QuadError, QuadIndex, RebuildPolicy,
    DEFAULT_TH_QUAD,
};
use crate::scheduler::{build_tasks, dispatch, order_tasks, simulate_assignment, CellTask, ImbalanceReport, Policy};
use crate::workload::WorkloadRun;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid method config: {0}")]
    BadConfig(String),
    #[error("latency threshold {lambda} must exceed the tick length {delta_t}")]
    BadQos { delta_t: f64, lambda: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Morton(#[from] MortonError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ug,
    UgBaseline,
    Quad,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ug => "ug",
            Method::UgBaseline => "ug-baseline",
            Method::Quad => "quad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitFactor {
    Fixed(u32),
    /// Picked by [`sweep_split_factor`] on the first tick with objects and
    /// kept for the rest of the run.
    Sweep(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Rebuild {
    #[default]
    EveryTick,
    /// Keep the previous quadtree while the policy accepts it.
    Reuse(RebuildPolicy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub split_factor: SplitFactor,
    pub th_quad: usize,
    pub l_max: u8,
    pub covering: bool,
    pub policy: Policy,
    pub n_workers: usize,
    pub chunk_size: usize,
    pub rebuild: Rebuild,
    pub staging_capacity: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            method: Method::Quad,
            split_factor: SplitFactor::Fixed(64),
            th_quad: DEFAULT_TH_QUAD,
            l_max: DEFAULT_L_MAX,
            covering: true,
            policy: Policy::HeaviestFirst,
            n_workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            chunk_size: DEFAULT_CHUNK_SIZE,
            rebuild: Rebuild::EveryTick,
            staging_capacity: STAGING_CAPACITY,
        }
    }
}

impl MethodConfig {
    pub fn with_method(method: Method) -> Self {
        MethodConfig {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::BadConfig(m.into()));
        if self.n_workers == 0 {
            return bad("n_workers must be at least 1");
        }
        if self.chunk_size == 0 {
            return bad("chunk_size must be at least 1");
        }
        if self.staging_capacity == 0 {
            return bad("staging capacity must be at least 1");
        }
        match (&self.method, &self.split_factor) {
            (Method::Quad, _) => {
                if self.th_quad == 0 {
                    return bad("th_quad must be at least 1");
                }
                if self.l_max == 0 || self.l_max > crate::morton::MAX_LEVEL {
                    return bad("l_max out of range");
                }
            }
            (_, SplitFactor::Sweep(c)) if c.is_empty() => return bad("empty split-factor sweep"),
            (_, SplitFactor::Sweep(c)) if c.contains(&0) => return bad("split factor must be at least 1"),
            (_, SplitFactor::Fixed(0)) => return bad("split factor must be at least 1"),
            _ => {}
        }
        Ok(())
    }
}

/// Wall-clock time spent in each phase of one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimes {
    pub index: Duration,
    pub map_split: Duration,
    pub sort: Duration,
    pub filter: Duration,
    pub linearize: Duration,
    pub decode: Duration,
    pub covering: Duration,
    pub merge: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickStats {
    pub tick: u32,
    pub n_objects: usize,
    pub n_queries: usize,
    /// Grid split factor used this tick (uniform grid methods).
    pub split_factor: Option<u32>,
    /// Quadtree leaves this tick, and whether the tree was rebuilt.
    pub n_leaves: Option<usize>,
    pub rebuilt: bool,
    pub containment_tests: u64,
    pub subq_intersecting: usize,
    pub subq_covering: usize,
    pub results_total: usize,
    pub covering_results: usize,
    pub covering_result_fraction: f64,
    pub active_cells: usize,
    pub occupancy_mean: f64,
    pub occupancy_variance: f64,
    /// Variance-to-mean ratio of objects per active cell.
    pub dispersion: f64,
    pub imbalance: ImbalanceReport,
    /// Synchronized operations during filtering: appends plus flushes for
    /// the baseline, zero for the bitmap methods.
    pub sync_ops: u64,
    pub flushes: u64,
    pub bitmap_words: u64,
    pub decoded_bits: u64,
    pub times: PhaseTimes,
}

/// Mean, population variance and dispersion of per-cell occupancies.
pub fn occupancy_stats(occupancy: impl IntoIterator<Item = usize>) -> (f64, f64, f64) {
    let v: Vec<f64> = occupancy.into_iter().map(|n| n as f64).collect();
    if v.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var, if mean > 0.0 { var / mean } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosParams {
    pub delta_t: f64,
    pub lambda: f64,
    pub q_max: f64,
}

/// Whether a tick finishing `exec_time` after its close meets the latency
/// bound.
pub fn check_latency(exec_time: f64, qos: &QosParams) -> bool {
    qos.delta_t + exec_time <= qos.lambda
}

/// Lowest query throughput that keeps every tick within the latency bound.
pub fn min_bandwidth(qos: &QosParams) -> Result<f64, EngineError> {
    if qos.lambda <= qos.delta_t {
        return Err(EngineError::BadQos {
            delta_t: qos.delta_t,
            lambda: qos.lambda,
        });
    }
    Ok(qos.q_max / (qos.lambda - qos.delta_t))
}

/// Index state for one tick: cells of the objects and the subqueries.
struct Indexed {
    object_cells: Vec<u64>,
    subqueries: Vec<crate::directory::SubQuery>,
}

pub struct Engine {
    cfg: MethodConfig,
    pool: Arc<rayon::ThreadPool>,
    swept: Option<u32>,
    quad: Option<QuadIndex>,
}

impl Engine {
    pub fn new(cfg: MethodConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.n_workers)
            .build()
            .map_err(|e| EngineError::BadConfig(e.to_string()))?;
        Ok(Engine {
            cfg,
            pool: Arc::new(pool),
            swept: None,
            quad: None,
        })
    }

    pub fn config(&self) -> &MethodConfig {
        &self.cfg
    }

    /// Split factor chosen by the sweep, once it has run.
    pub fn swept_split_factor(&self) -> Option<u32> {
        self.swept
    }

    pub fn process_tick(&mut self, batch: &TickBatch) -> Result<(ResultSet, TickStats), EngineError> {
        let pool = Arc::clone(&self.pool);
        pool.install(|| self.tick(batch))
    }

    fn tick(&mut self, batch: &TickBatch) -> Result<(ResultSet, TickStats), EngineError> {
        let start = Instant::now();
        let mut stats = TickStats {
            tick: batch.tick_index,
            n_objects: batch.objects.len(),
            n_queries: batch.queries.len(),
            ..Default::default()
        };
        let issued = || batch.queries.iter().map(|q| q.issuer_id);
        if batch.objects.is_empty() {
            let results = merge_results(std::iter::empty(), &[], issued())?;
            stats.times.total = start.elapsed();
            return Ok((results, stats));
        }

        let mbr = compute_mbr(&batch.objects)?;
        let (rects, issuers): (Vec<Rect>, Vec<ObjectId>) = batch
            .queries
            .iter()
            .filter_map(|q| q.rect.clip(&mbr).map(|r| (r, q.issuer_id)))
            .unzip();

        let mut t = Instant::now();
        let mut lap = |slot: &mut Duration| {
            *slot = t.elapsed();
            t = Instant::now();
        };

        let indexed = match self.cfg.method {
            Method::Ug | Method::UgBaseline => {
                let sf = match &self.cfg.split_factor {
                    SplitFactor::Fixed(sf) => *sf,
                    SplitFactor::Sweep(candidates) => match self.swept {
                        Some(sf) => sf,
                        None => {
                            let best = sweep_split_factor(batch, candidates.iter().copied(), self.cfg.covering)?.best;
                            self.swept = Some(best);
                            best
                        }
                    },
                };
                let grid = build_grid(mbr, sf)?;
                stats.split_factor = Some(sf);
                lap(&mut stats.times.index);
                let object_cells = map_objects(&batch.objects, &grid)?;
                let subqueries = split_queries(&rects, &grid);
                Indexed {
                    object_cells,
                    subqueries,
                }
            }
            Method::Quad => {
                let keep = match (&self.cfg.rebuild, &self.quad) {
                    (Rebuild::Reuse(policy), Some(prev)) => !needs_rebuild(prev, &batch.objects, policy),
                    _ => false,
                };
                if !keep {
                    let built = build_quadtree(&batch.objects, self.cfg.th_quad, self.cfg.l_max, mbr)?;
                    self.quad = Some(built.index);
                }
                let index = self.quad.as_ref().expect("quadtree present");
                stats.rebuilt = !keep;
                stats.n_leaves = Some(index.leaves.len());
                lap(&mut stats.times.index);
                let object_cells = map_objects_quad(&batch.objects, index)?;
                let subqueries = split_queries_quad(&rects, index);
                Indexed {
                    object_cells,
                    subqueries,
                }
            }
        };
        let Indexed {
            object_cells,
            mut subqueries,
        } = indexed;
        if !self.cfg.covering {
            subqueries.iter_mut().for_each(|s| s.covering = false);
        }
        lap(&mut stats.times.map_split);

        let dir = sort_by_cell(&batch.objects, &object_cells, &subqueries);
        let tasks = order_tasks(build_tasks(&dir), self.cfg.policy);
        lap(&mut stats.times.sort);

        stats.subq_intersecting = dir.intersecting.len();
        stats.subq_covering = dir.covering.len();
        stats.containment_tests = tasks.iter().map(|t| t.weight).sum();
        stats.imbalance = simulate_assignment(&tasks, self.cfg.n_workers);
        stats.active_cells = dir.active_cells.len();
        (stats.occupancy_mean, stats.occupancy_variance, stats.dispersion) =
            occupancy_stats(dir.active_blocks().map(|b| b.n_objects()));

        let covering_start = Instant::now();
        let (filtered, (covering, covering_time)) = rayon::join(
            || self.filter_and_decode(&dir, &rects, &tasks, &mut stats),
            || (expand_covering(&dir), covering_start.elapsed()),
        );
        let intersecting = filtered?;
        stats.times.covering = covering_time;
        t = Instant::now();

        stats.covering_results = covering.iter().map(|c| c.ids.len()).sum();
        let lists = intersecting
            .iter()
            .map(|(q, ids)| (*q, ids.as_slice()))
            .chain(covering.iter().map(|c| (c.query_id, c.ids.as_slice())));
        let results = merge_results(lists, &issuers, issued())?;
        stats.times.merge = t.elapsed();

        stats.results_total = results.total();
        stats.covering_result_fraction = if stats.results_total == 0 {
            0.0
        } else {
            stats.covering_results as f64 / stats.results_total as f64
        };
        stats.times.total = start.elapsed();
        Ok((results, stats))
    }

    /// Results of the intersecting subqueries as `(query, ids)` lists.
    fn filter_and_decode(
        &self,
        dir: &CellDirectory,
        rects: &[Rect],
        tasks: &[CellTask],
        stats: &mut TickStats,
    ) -> Result<Vec<(u32, Vec<ObjectId>)>, EngineError> {
        let workers = self.cfg.n_workers;
        let task_rects = |t: &CellTask| -> Vec<Rect> {
            let b = &dir.blocks[t.block];
            dir.intersecting.query_ids[b.intersecting.clone()]
                .iter()
                .map(|&q| rects[q as usize])
                .collect()
        };

        if self.cfg.method == Method::UgBaseline {
            let t = Instant::now();
            let buffer = SharedResultBuffer::new(self.cfg.staging_capacity);
            dispatch(tasks.len(), workers, |k| {
                let b = &dir.blocks[tasks[k].block];
                filter_direct(
                    dir.object_points(b),
                    dir.object_ids(b),
                    &task_rects(&tasks[k]),
                    &dir.intersecting.query_ids[b.intersecting.clone()],
                    &buffer,
                );
            });
            let c = buffer.counters.snapshot();
            stats.sync_ops = c.sync_ops();
            stats.flushes = c.flushes;
            let mut pairs = buffer.into_pairs();
            pairs.sort_unstable();
            stats.times.filter = t.elapsed();
            let lists = pairs
                .chunk_by(|a, b| a.0 == b.0)
                .map(|run| (run[0].0, run.iter().map(|p| p.1).collect()))
                .collect();
            return Ok(lists);
        }

        let t = Instant::now();
        let sizes: Vec<usize> = tasks
            .iter()
            .map(|t| {
                let b = &dir.blocks[t.block];
                word_count(b.n_intersecting(), b.n_objects())
            })
            .collect();
        let mut arena = vec![0u32; sizes.iter().sum()];
        let slots: Vec<Mutex<&mut [u32]>> = split_by_counts(&mut arena, &sizes).into_iter().map(Mutex::new).collect();
        dispatch(tasks.len(), workers, |k| {
            let b = &dir.blocks[tasks[k].block];
            fill_interlaced(dir.object_points(b), &task_rects(&tasks[k]), &mut slots[k].lock());
        });
        drop(slots);
        stats.times.filter = t.elapsed();
        stats.bitmap_words = arena.len() as u64;

        let t = Instant::now();
        let mut offset = 0;
        let starts: Vec<usize> = sizes
            .iter()
            .map(|&n| {
                offset += n;
                offset - n
            })
            .collect();
        let mut bitmaps: Vec<LinearBitmap> = dispatch(tasks.len(), workers, |k| {
            let b = &dir.blocks[tasks[k].block];
            let words = arena[starts[k]..starts[k] + sizes[k]].to_vec();
            linearize(&InterlacedBitmap {
                cell_id: b.cell_id,
                n_queries: b.n_intersecting(),
                n_objects: b.n_objects(),
                words,
            })
        });
        if self.cfg.policy == Policy::HeaviestFirst {
            bitmaps.sort_by(|a, b| b.words.len().cmp(&a.words.len()).then(a.cell_id.cmp(&b.cell_id)));
        }
        let counts: Vec<_> = bitmaps.iter().map(count_results).collect();
        stats.times.linearize = t.elapsed();

        let t = Instant::now();
        let decoded = decode_bitmaps(&bitmaps, &counts, dir, self.cfg.chunk_size, workers)?;
        stats.decoded_bits = bitmaps.iter().map(|b| (b.words.len() * W) as u64).sum();
        let lists = decoded
            .iter()
            .flat_map(|d| d.lists().map(|(q, ids)| (q, ids.to_vec())))
            .collect();
        stats.times.decode = t.elapsed();
        Ok(lists)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub results: ResultSet,
    pub stats: TickStats,
    /// `None` without QoS parameters.
    pub qos_pass: Option<bool>,
    /// `None` unless verification was requested.
    pub oracle_match: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub ticks: Vec<TickReport>,
    /// Queries processed per second of processing time.
    pub bandwidth: f64,
}

impl RunReport {
    pub fn all_verified(&self) -> bool {
        self.ticks.iter().all(|t| t.oracle_match != Some(false))
    }
}

/// Processes every tick of `workload` in order.
pub fn run(
    workload: &WorkloadRun,
    cfg: &MethodConfig,
    qos: Option<&QosParams>,
    verify: bool,
) -> Result<RunReport, EngineError> {
    let mut engine = Engine::new(cfg.clone())?;
    let mut ticks = Vec::with_capacity(workload.ticks.len());
    let (mut queries, mut busy) = (0usize, 0.0f64);
    for batch in &workload.ticks {
        let (results, stats) = engine.process_tick(batch)?;
        let secs = stats.times.total.as_secs_f64();
        queries += stats.n_queries;
        busy += secs;
        let oracle_match = verify.then(|| brute_force_join(batch) == results);
        ticks.push(TickReport {
            results,
            qos_pass: qos.map(|q| check_latency(secs, q)),
            stats,
            oracle_match,
        });
    }
    let bandwidth = if busy > 0.0 { queries as f64 / busy } else { 0.0 };
    Ok(RunReport { ticks, bandwidth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MovingObject, Point, Query};
    use crate::workload::{generate, Distribution, QuerySide, WorkloadConfig};

    fn cfg(method: Method) -> MethodConfig {
        MethodConfig {
            n_workers: 2,
            th_quad: 16,
            split_factor: SplitFactor::Fixed(8),
            ..MethodConfig::with_method(method)
        }
    }

    const METHODS: [Method; 3] = [Method::Ug, Method::UgBaseline, Method::Quad];

    /// Three objects; q3 is issued by o3 and reaches o2.
    fn three() -> TickBatch {
        let objects = vec![
            MovingObject::new(1, 1.0, 8.0),
            MovingObject::new(2, 6.0, 3.0),
            MovingObject::new(3, 7.0, 2.0),
        ];
        let queries = vec![
            Query { issuer_id: 1, rect: Rect::centered(Point::new(1.0, 8.0), 2.0) },
            Query { issuer_id: 2, rect: Rect::new(4.0, 4.0, 5.0, 9.0).unwrap() },
            Query { issuer_id: 3, rect: Rect::centered(Point::new(7.0, 2.0), 3.0) },
        ];
        TickBatch::new(0, objects, queries)
    }

    #[test]
    fn small_scenario_all_methods() {
        for m in METHODS {
            let (r, _) = Engine::new(cfg(m)).unwrap().process_tick(&three()).unwrap();
            assert_eq!(r.get(3), Some(&[2, 3][..]), "{m:?}");
            assert_eq!(r.get(1), Some(&[1][..]));
            assert_eq!(r.get(2), Some(&[][..]));
        }
    }

    #[test]
    fn zero_split_factor_rejected() {
        for sf in [SplitFactor::Fixed(0), SplitFactor::Sweep(vec![16, 0]), SplitFactor::Sweep(vec![])] {
            let c = MethodConfig { split_factor: sf, ..cfg(Method::Ug) };
            assert!(matches!(Engine::new(c), Err(EngineError::BadConfig(_))));
        }
    }

    #[test]
    fn no_queries_and_no_objects() {
        let mut b = three();
        b.queries.clear();
        let (r, s) = Engine::new(cfg(Method::Quad)).unwrap().process_tick(&b).unwrap();
        assert_eq!(r.n_queries(), 0);
        assert_eq!(s.containment_tests, 0);

        let mut b = three();
        b.objects.clear();
        let (r, _) = Engine::new(cfg(Method::Ug)).unwrap().process_tick(&b).unwrap();
        assert_eq!(r.n_queries(), 3);
        assert_eq!(r.total(), 0);
    }

    #[test]
    fn methods_match_oracle_on_a_random_batch() {
        let w = generate(&WorkloadConfig {
            region_side: 2000.0,
            n_objects: 2000,
            n_ticks: 2,
            max_speed: 20.0,
            query_side: QuerySide::Range(20.0, 80.0),
            distribution: Distribution::Gaussian { n_hotspots: 4, sigma: Some(100.0) },
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        for m in METHODS {
            for covering in [true, false] {
                let c = MethodConfig { covering, ..cfg(m) };
                let rep = run(&w, &c, None, true).unwrap();
                assert!(rep.all_verified(), "{m:?} covering={covering}");
            }
        }
    }

    #[test]
    fn baseline_counts_sync_ops_and_bitmaps_do_not() {
        let b = three();
        let tested = |m| MethodConfig { covering: false, ..cfg(m) };
        let (r, s) = Engine::new(tested(Method::UgBaseline)).unwrap().process_tick(&b).unwrap();
        assert_eq!(s.sync_ops, r.total() as u64 + s.flushes);
        assert!(s.flushes > 0);
        let (_, s) = Engine::new(tested(Method::Ug)).unwrap().process_tick(&b).unwrap();
        assert_eq!(s.sync_ops, 0);
    }

    #[test]
    fn sweep_runs_once() {
        let w = generate(&WorkloadConfig {
            region_side: 1000.0,
            n_objects: 500,
            n_ticks: 3,
            query_side: QuerySide::Fixed(50.0),
            distribution: Distribution::Uniform,
            ..Default::default()
        })
        .unwrap();
        let c = MethodConfig {
            split_factor: SplitFactor::Sweep(vec![2, 8, 16, 32]),
            ..cfg(Method::Ug)
        };
        let rep = run(&w, &c, None, true).unwrap();
        let sf = rep.ticks[0].stats.split_factor;
        assert!(rep.ticks.iter().all(|t| t.stats.split_factor == sf));
        assert!(rep.all_verified());
    }

    #[test]
    fn quadtree_reuse_still_correct() {
        let w = generate(&WorkloadConfig {
            region_side: 1000.0,
            n_objects: 800,
            n_ticks: 5,
            max_speed: 5.0,
            query_side: QuerySide::Fixed(40.0),
            distribution: Distribution::Gaussian { n_hotspots: 3, sigma: Some(60.0) },
            ..Default::default()
        })
        .unwrap();
        let c = MethodConfig {
            rebuild: Rebuild::Reuse(RebuildPolicy::default()),
            ..cfg(Method::Quad)
        };
        let rep = run(&w, &c, None, true).unwrap();
        assert!(rep.all_verified());
        assert!(rep.ticks[0].stats.rebuilt);
    }

    #[test]
    fn qos_examples() {
        let q = |delta_t, lambda| QosParams { delta_t, lambda, q_max: 1000.0 };
        assert!(check_latency(0.5, &q(1.0, 2.0)));
        assert!(!check_latency(1.5, &q(1.0, 2.0)));
        assert!(check_latency(1.0, &q(1.0, 2.0)));
        assert_eq!(min_bandwidth(&q(1.0, 2.0)).unwrap(), 1000.0);
        assert_eq!(min_bandwidth(&QosParams { q_max: 0.0, ..q(1.0, 2.0) }).unwrap(), 0.0);
        assert!(matches!(min_bandwidth(&q(1.0, 1.0)), Err(EngineError::BadQos { .. })));
    }

    #[test]
    fn occupancy_examples() {
        assert_eq!(occupancy_stats([4, 4, 4]), (4.0, 0.0, 0.0));
        assert_eq!(occupancy_stats([1, 3]), (2.0, 1.0, 0.5));
        assert_eq!(occupancy_stats([]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(Engine::new(MethodConfig { n_workers: 0, ..cfg(Method::Ug) }).is_err());
        assert!(Engine::new(MethodConfig { chunk_size: 0, ..cfg(Method::Ug) }).is_err());
        assert!(Engine::new(MethodConfig { th_quad: 0, ..cfg(Method::Quad) }).is_err());
        let sweep = MethodConfig { split_factor: SplitFactor::Sweep(vec![]), ..cfg(Method::Ug) };
        assert!(Engine::new(sweep).is_err());
    }
}
