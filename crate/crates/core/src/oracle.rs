//! Brute-force join: every query against every object.

use std::collections::BTreeMap;

use crate::decode::ResultSet;
use crate::geometry::{contains, TickBatch};

/// Results of every issued query, computed with a plain double loop.
pub fn brute_force_join(batch: &TickBatch) -> ResultSet {
    let mut out = BTreeMap::new();
    for q in &batch.queries {
        let mut ids: Vec<_> = batch
            .objects
            .iter()
            .filter(|o| contains(&q.rect, o.position))
            .map(|o| o.id)
            .collect();
        ids.sort_unstable();
        out.insert(q.issuer_id, ids);
    }
    ResultSet(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MovingObject, Point, Query, Rect};

    #[test]
    fn examples() {
        let objects = vec![
            MovingObject::new(1, 1.0, 1.0),
            MovingObject::new(2, 5.0, 5.0),
            MovingObject::new(3, 6.0, 4.0),
        ];
        let queries = vec![
            Query { issuer_id: 3, rect: Rect::centered(Point::new(6.0, 4.0), 3.0) },
            Query { issuer_id: 1, rect: Rect::new(20.0, 20.0, 30.0, 30.0).unwrap() },
            Query { issuer_id: 2, rect: Rect::new(0.0, 0.0, 10.0, 10.0).unwrap() },
        ];
        let batch = TickBatch::new(0, objects.clone(), queries.clone());
        let r = brute_force_join(&batch);
        assert_eq!(r.get(3), Some(&[2, 3][..]));
        assert_eq!(r.get(1), Some(&[][..]));
        assert_eq!(r.get(2), Some(&[1, 2, 3][..]));

        let mut rev = batch.clone();
        rev.objects.reverse();
        rev.queries.reverse();
        assert_eq!(brute_force_join(&rev), r);
    }
}
