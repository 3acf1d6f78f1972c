//! Synthetic moving-object workloads and the text dataset format.
//!
//! Randomness comes from ChaCha8 seeded with the run seed. Object `id`
//! draws from stream `id + 1`, for its start position, every movement step
//! and every query it issues, in that order per tick. Stream 0 holds the
//! draws shared by all objects (hotspot centers). A run therefore does not
//! depend on how many objects are generated after a given one.

use std::f64::consts::TAU;
use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use thiserror::Error;

use crate::geometry::{MovingObject, ObjectId, Point, Query, Rect, TickBatch};

/// Gaussian spread as a fraction of the region side when none is given.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid workload config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuerySide {
    Fixed(f64),
    /// Side drawn uniformly from `[lo, hi]` per query.
    Range(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Uniform,
    /// Objects around `n_hotspots` centers drawn uniformly in the region.
    /// `sigma` defaults to `region_side * DEFAULT_SIGMA_FRACTION`.
    Gaussian { n_hotspots: u32, sigma: Option<f64> },
    /// Objects on a Manhattan grid of `grid_degree` lines per axis, evenly
    /// spaced and including both borders.
    Network { grid_degree: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    pub region_side: f64,
    pub n_objects: u32,
    pub n_ticks: u32,
    pub max_speed: f64,
    pub query_rate: f64,
    pub query_side: QuerySide,
    pub distribution: Distribution,
    pub seed: u64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            region_side: 22500.0,
            n_objects: 10_000,
            n_ticks: 30,
            max_speed: 200.0,
            query_rate: 1.0,
            query_side: QuerySide::Range(200.0, 800.0),
            distribution: Distribution::Gaussian {
                n_hotspots: 25,
                sigma: None,
            },
            seed: 0,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::BadConfig(m));
        if !(self.region_side.is_finite() && self.region_side > 0.0) {
            return bad(format!("region side must be positive, got {}", self.region_side));
        }
        if !(self.max_speed.is_finite() && self.max_speed >= 0.0) {
            return bad(format!("max speed must be non-negative, got {}", self.max_speed));
        }
        if !(0.0..=1.0).contains(&self.query_rate) {
            return bad(format!("query rate must lie in [0, 1], got {}", self.query_rate));
        }
        let (lo, hi) = match self.query_side {
            QuerySide::Fixed(s) => (s, s),
            QuerySide::Range(lo, hi) => (lo, hi),
        };
        if !(lo >= 0.0 && lo <= hi && hi <= self.region_side) {
            return bad(format!(
                "query side range [{lo}, {hi}] must lie within [0, {}]",
                self.region_side
            ));
        }
        match self.distribution {
            Distribution::Gaussian { n_hotspots: 0, .. } => bad("need at least one hotspot".into()),
            Distribution::Gaussian { sigma: Some(s), .. } if !(s.is_finite() && s > 0.0) => {
                bad(format!("sigma must be positive, got {s}"))
            }
            Distribution::Network { grid_degree } if grid_degree < 2 => {
                bad(format!("grid degree must be at least 2, got {grid_degree}"))
            }
            _ => Ok(()),
        }
    }

    /// Largest number of queries one tick can carry.
    pub fn q_max(&self) -> f64 {
        self.n_objects as f64 * self.query_rate
    }
}

/// A generated or loaded run: one batch per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadRun {
    pub region_side: f64,
    pub n_objects: u32,
    pub ticks: Vec<TickBatch>,
}

/// Position on the street grid: `t` is measured in grid spacings along
/// line `line`, which runs vertically when `vertical` is set.
#[derive(Debug, Clone, Copy)]
struct Street {
    vertical: bool,
    line: u32,
    t: f64,
    dir: f64,
}

struct Mover {
    rng: ChaCha8Rng,
    pos: Point,
    street: Option<Street>,
}

/// Folds `v` back into `[0, side]` by mirroring at the borders.
pub fn reflect(v: f64, side: f64) -> f64 {
    let period = 2.0 * side;
    let m = v.rem_euclid(period);
    if m > side {
        period - m
    } else {
        m
    }
}

fn object_rng(seed: u64, id: ObjectId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64 + 1);
    rng
}

struct Generator<'a> {
    cfg: &'a WorkloadConfig,
    hotspots: Vec<Point>,
    sigma: f64,
    spacing: f64,
}

impl Generator<'_> {
    fn street_point(&self, s: &Street) -> Point {
        let across = s.line as f64 * self.spacing;
        let along = s.t * self.spacing;
        if s.vertical {
            Point::new(across, along)
        } else {
            Point::new(along, across)
        }
    }

    fn spawn(&self, id: ObjectId) -> Mover {
        let side = self.cfg.region_side;
        let mut rng = object_rng(self.cfg.seed, id);
        let (pos, street) = match self.cfg.distribution {
            Distribution::Uniform => (Point::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side)), None),
            Distribution::Gaussian { .. } => {
                let c = self.hotspots[rng.random_range(0..self.hotspots.len())];
                let n = Normal::new(0.0, self.sigma).expect("validated sigma");
                let p = Point::new(reflect(c.x + n.sample(&mut rng), side), reflect(c.y + n.sample(&mut rng), side));
                (p, None)
            }
            Distribution::Network { grid_degree } => {
                let top = (grid_degree - 1) as f64;
                let s = Street {
                    vertical: rng.random_bool(0.5),
                    line: rng.random_range(0..grid_degree),
                    t: rng.random_range(0.0..=top),
                    dir: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                };
                (self.street_point(&s), Some(s))
            }
        };
        Mover { rng, pos, street }
    }

    fn step(&self, m: &mut Mover) {
        let side = self.cfg.region_side;
        let dist = m.rng.random_range(0.0..=self.cfg.max_speed);
        match &mut m.street {
            None => {
                let angle = m.rng.random_range(0.0..TAU);
                m.pos = Point::new(
                    reflect(m.pos.x + dist * angle.cos(), side),
                    reflect(m.pos.y + dist * angle.sin(), side),
                );
            }
            Some(s) => {
                let top = match self.cfg.distribution {
                    Distribution::Network { grid_degree } => (grid_degree - 1) as f64,
                    _ => unreachable!(),
                };
                walk(s, dist / self.spacing, top, &mut m.rng);
                m.pos = self.street_point(s);
            }
        }
    }

    fn query(&self, m: &mut Mover, id: ObjectId) -> Option<Query> {
        let issue = m.rng.random::<f64>() < self.cfg.query_rate;
        let side = match self.cfg.query_side {
            QuerySide::Fixed(s) => s,
            QuerySide::Range(lo, hi) => m.rng.random_range(lo..=hi),
        };
        issue.then(|| Query {
            issuer_id: id,
            rect: Rect::centered(m.pos, side),
        })
    }
}

/// Moves `r` spacings along the grid, picking a random continuation at
/// every intersection reached. U-turns only happen at dead ends.
fn walk(s: &mut Street, mut r: f64, top: f64, rng: &mut ChaCha8Rng) {
    loop {
        let next = if s.dir > 0.0 { s.t.floor() + 1.0 } else { s.t.ceil() - 1.0 };
        if !(0.0..=top).contains(&next) {
            s.dir = -s.dir;
            continue;
        }
        let gap = (next - s.t).abs();
        if r < gap {
            s.t += s.dir * r;
            return;
        }
        r -= gap;
        s.t = next;
        let cross = s.line as f64;
        let mut options: Vec<(bool, u32, f64, f64)> = Vec::with_capacity(3);
        if (0.0..=top).contains(&(next + s.dir)) {
            options.push((s.vertical, s.line, next, s.dir));
        }
        for d in [-1.0, 1.0] {
            if (0.0..=top).contains(&(cross + d)) {
                options.push((!s.vertical, next as u32, cross, d));
            }
        }
        let (vertical, line, t, dir) = options[rng.random_range(0..options.len())];
        *s = Street { vertical, line, t, dir };
        if r == 0.0 {
            return;
        }
    }
}

pub fn generate(cfg: &WorkloadConfig) -> Result<WorkloadRun, WorkloadError> {
    cfg.validate()?;
    let side = cfg.region_side;
    let mut shared = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (hotspots, sigma) = match cfg.distribution {
        Distribution::Gaussian { n_hotspots, sigma } => (
            (0..n_hotspots)
                .map(|_| Point::new(shared.random_range(0.0..=side), shared.random_range(0.0..=side)))
                .collect(),
            sigma.unwrap_or(side * DEFAULT_SIGMA_FRACTION),
        ),
        _ => (Vec::new(), 0.0),
    };
    let spacing = match cfg.distribution {
        Distribution::Network { grid_degree } => side / (grid_degree - 1) as f64,
        _ => 0.0,
    };
    let g = Generator {
        cfg,
        hotspots,
        sigma,
        spacing,
    };

    let mut movers: Vec<Mover> = (0..cfg.n_objects).map(|id| g.spawn(id)).collect();
    let mut ticks = Vec::with_capacity(cfg.n_ticks as usize);
    for k in 0..cfg.n_ticks {
        if k > 0 {
            movers.iter_mut().for_each(|m| g.step(m));
        }
        let objects = movers
            .iter()
            .enumerate()
            .map(|(id, m)| MovingObject {
                id: id as ObjectId,
                position: m.pos,
            })
            .collect();
        let queries = movers
            .iter_mut()
            .enumerate()
            .filter_map(|(id, m)| g.query(m, id as ObjectId))
            .collect();
        ticks.push(TickBatch::new(k, objects, queries));
    }
    Ok(WorkloadRun {
        region_side: side,
        n_objects: cfg.n_objects,
        ticks,
    })
}

pub const DATASET_MAGIC: &str = "tickjoin-v1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Writes `run` in the text dataset format.
///
/// ```text
/// tickjoin-v1 <n_objects> <n_ticks> <region_side>
/// T <tick>
/// O <id> <x> <y>
/// Q <issuer_id> <xa> <ya> <xb> <yb>
/// ```
///
/// Every tick starts with its `T` line, followed by its objects and then
/// its queries. Numbers use the shortest decimal form that reads back to
/// the same value.
pub fn write_dataset(run: &WorkloadRun, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{DATASET_MAGIC} {} {} {}", run.n_objects, run.ticks.len(), run.region_side)?;
    for t in &run.ticks {
        writeln!(w, "T {}", t.tick_index)?;
        for o in &t.objects {
            writeln!(w, "O {} {} {}", o.id, o.position.x, o.position.y)?;
        }
        for q in &t.queries {
            let r = &q.rect;
            writeln!(w, "Q {} {} {} {} {}", q.issuer_id, r.xa, r.ya, r.xb, r.yb)?;
        }
    }
    w.flush()
}

pub fn read_dataset(r: impl BufRead) -> Result<WorkloadRun, DatasetError> {
    let mut lines = r.lines().enumerate();
    let err = |line: usize, msg: String| DatasetError::Parse { line: line + 1, msg };

    let (n, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(err(0, "empty file".into())),
    };
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 || h[0] != DATASET_MAGIC {
        return Err(err(n, format!("expected `{DATASET_MAGIC} <n_objects> <n_ticks> <region_side>`")));
    }
    let n_objects: u32 = h[1].parse().map_err(|e| err(n, format!("n_objects: {e}")))?;
    let n_ticks: usize = h[2].parse().map_err(|e| err(n, format!("n_ticks: {e}")))?;
    let region_side: f64 = h[3].parse().map_err(|e| err(n, format!("region_side: {e}")))?;

    let mut ticks: Vec<TickBatch> = Vec::with_capacity(n_ticks);
    for (n, line) in lines {
        let line = line?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        let num = |k: usize| -> Result<f64, DatasetError> {
            let v: f64 = f[k].parse().map_err(|e| err(n, format!("field {}: {e}", k + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(n, format!("field {} is not finite", k + 1)))
            }
        };
        let id = |k: usize| -> Result<ObjectId, DatasetError> {
            f[k].parse().map_err(|e| err(n, format!("field {}: {e}", k + 1)))
        };
        let arity = |want: usize| {
            if f.len() == want {
                Ok(())
            } else {
                Err(err(n, format!("`{}` line needs {} fields, got {}", f[0], want, f.len())))
            }
        };
        match f[0] {
            "T" => {
                arity(2)?;
                let k = id(1)?;
                ticks.push(TickBatch::new(k, Vec::new(), Vec::new()));
            }
            "O" | "Q" if ticks.is_empty() => return Err(err(n, "record before the first `T` line".into())),
            "O" => {
                arity(4)?;
                let o = MovingObject::new(id(1)?, num(2)?, num(3)?);
                ticks.last_mut().unwrap().objects.push(o);
            }
            "Q" => {
                arity(6)?;
                let rect = Rect::new(num(2)?, num(3)?, num(4)?, num(5)?).map_err(|e| err(n, e.to_string()))?;
                let q = Query { issuer_id: id(1)?, rect };
                ticks.last_mut().unwrap().queries.push(q);
            }
            other => return Err(err(n, format!("unknown record `{other}`"))),
        }
    }
    if ticks.len() != n_ticks {
        return Err(err(0, format!("header announces {n_ticks} ticks, found {}", ticks.len())));
    }
    Ok(WorkloadRun {
        region_side,
        n_objects,
        ticks,
    })
}
