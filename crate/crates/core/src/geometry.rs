//! Points, rectangles and tick batches.
//!
//! Rectangles are closed on all four edges: a point lying exactly on a border
//! belongs to the rectangle. How points on shared cell borders are assigned to
//! cells is decided by the index mappings, never by [`Rect::contains`].

use thiserror::Error;

/// Dense object identifier. Query identifiers are the identifiers of their
/// issuing objects.
pub type ObjectId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("tick batch holds no objects")]
    EmptyBatch,
    #[error("invalid rectangle ({xa}, {ya}, {xb}, {yb})")]
    InvalidRect { xa: f64, ya: f64, xb: f64, yb: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned closed rectangle `[xa, xb] x [ya, yb]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xa: f64,
    pub ya: f64,
    pub xb: f64,
    pub yb: f64,
}

impl Rect {
    /// Builds a rectangle from its lower-left and upper-right corners.
    pub fn new(xa: f64, ya: f64, xb: f64, yb: f64) -> Result<Self, GeometryError> {
        let ok = [xa, ya, xb, yb].iter().all(|v| v.is_finite()) && xa <= xb && ya <= yb;
        if ok {
            Ok(Rect { xa, ya, xb, yb })
        } else {
            Err(GeometryError::InvalidRect { xa, ya, xb, yb })
        }
    }

    /// Square of side `side` centered on `center`.
    pub fn centered(center: Point, side: f64) -> Self {
        let h = side / 2.0;
        Rect {
            xa: center.x - h,
            ya: center.y - h,
            xb: center.x + h,
            yb: center.y + h,
        }
    }

    pub fn width(&self) -> f64 {
        self.xb - self.xa
    }

    pub fn height(&self) -> f64 {
        self.yb - self.ya
    }

    pub fn is_valid(&self) -> bool {
        Rect::new(self.xa, self.ya, self.xb, self.yb).is_ok()
    }

    /// Closed containment test: `xa <= x <= xb && ya <= y <= yb`.
    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        self.xa <= p.x && p.x <= self.xb && self.ya <= p.y && p.y <= self.yb
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.xa <= other.xa && other.xb <= self.xb && self.ya <= other.ya && other.yb <= self.yb
    }

    /// Intersection with `other`, or `None` when the two are disjoint.
    /// Rectangles touching along an edge intersect in a degenerate rectangle.
    pub fn clip(&self, other: &Rect) -> Option<Rect> {
        let xa = self.xa.max(other.xa);
        let ya = self.ya.max(other.ya);
        let xb = self.xb.min(other.xb);
        let yb = self.yb.min(other.yb);
        (xa <= xb && ya <= yb).then_some(Rect { xa, ya, xb, yb })
    }
}

/// Free-function form of [`Rect::contains`].
#[inline]
pub fn contains(rect: &Rect, p: Point) -> bool {
    rect.contains(p)
}

/// Free-function form of [`Rect::clip`].
pub fn clip(q: &Rect, mbr: &Rect) -> Option<Rect> {
    q.clip(mbr)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingObject {
    pub id: ObjectId,
    pub position: Point,
}

impl MovingObject {
    pub const fn new(id: ObjectId, x: f64, y: f64) -> Self {
        MovingObject {
            id,
            position: Point::new(x, y),
        }
    }
}

/// A range query. An object that issued no query in a tick simply has no
/// entry in the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub issuer_id: ObjectId,
    pub rect: Rect,
}

/// Positions and queries collected during one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickBatch {
    pub tick_index: u32,
    pub objects: Vec<MovingObject>,
    pub queries: Vec<Query>,
}

impl TickBatch {
    pub fn new(tick_index: u32, objects: Vec<MovingObject>, queries: Vec<Query>) -> Self {
        TickBatch {
            tick_index,
            objects,
            queries,
        }
    }

    /// Smallest closed rectangle holding every object position.
    pub fn mbr(&self) -> Result<Rect, GeometryError> {
        compute_mbr(&self.objects)
    }
}

/// Min/max reduction over object positions.
pub fn compute_mbr(objects: &[MovingObject]) -> Result<Rect, GeometryError> {
    let first = objects.first().ok_or(GeometryError::EmptyBatch)?.position;
    let init = Rect {
        xa: first.x,
        ya: first.y,
        xb: first.x,
        yb: first.y,
    };
    Ok(objects.iter().fold(init, |r, o| Rect {
        xa: r.xa.min(o.position.x),
        ya: r.ya.min(o.position.y),
        xb: r.xb.max(o.position.x),
        yb: r.yb.max(o.position.y),
    }))
}
