//! Tick-batched spatial joins between rectangular range queries and moving
//! point objects.
//!
//! Each tick, every object reports a position and some objects issue a query
//! rectangle. The engine indexes the tick's objects with a uniform grid or a
//! PR-quadtree, splits queries into per-cell subqueries, evaluates each cell
//! as an independent task that writes containment outcomes into a bitmap,
//! and decodes the bitmaps into per-query result lists. Subqueries that
//! cover a whole cell skip the tests and take the cell's objects directly.
//!
//! ```
//! use tickjoin::engine::{Engine, Method, MethodConfig};
//! use tickjoin::geometry::{MovingObject, Point, Query, Rect, TickBatch};
//!
//! let objects = vec![
//!     MovingObject::new(0, 1.0, 1.0),
//!     MovingObject::new(1, 2.0, 2.0),
//!     MovingObject::new(2, 9.0, 9.0),
//! ];
//! let queries = vec![Query { issuer_id: 0, rect: Rect::centered(Point::new(1.0, 1.0), 3.0) }];
//! let batch = TickBatch::new(0, objects, queries);
//!
//! let mut engine = Engine::new(MethodConfig::with_method(Method::Quad)).unwrap();
//! let (results, stats) = engine.process_tick(&batch).unwrap();
//! assert_eq!(results.get(0), Some(&[0, 1][..]));
//! assert_eq!(stats.n_queries, 1);
//! ```

pub mod baseline;
pub mod bitmap;
pub mod decode;
pub mod directory;
pub mod engine;
pub mod geometry;
pub mod grid;
pub mod morton;
pub mod oracle;
pub mod primitives;
pub mod quadtree;
pub mod scheduler;
pub mod workload;

pub use decode::ResultSet;
pub use engine::{run, Engine, EngineError, Method, MethodConfig, QosParams, RunReport, TickStats};
pub use geometry::{MovingObject, Point, Query, Rect, TickBatch};
pub use oracle::brute_force_join;
pub use workload::{generate, WorkloadConfig, WorkloadRun};
