use rustc_hash::FxHashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

/// Absolute per-component tolerance under which two real values share a table entry.
pub const TOL_C: f64 = 1e-13;

// Beyond this the bucket index no longer fits an i64; such values are kept as-is.
const MAX_UNIQUED: f64 = 1e5;

/// Uniquing table for the real components of edge weights.
///
/// Values are bucketed by `round(x / TOL_C)`. A lookup scans its own bucket
/// and both neighbours, so any stored value within `TOL_C` is found and
/// returned in place of the query. Zero is never stored: anything below the
/// tolerance snaps to exactly `0.0`.
#[derive(Clone, Debug)]
pub struct ValueTable {
    buckets: FxHashMap<i64, Vec<f64>>,
    len: usize,
}

impl Default for ValueTable {
    fn default() -> Self {
        Self::new()
    }
}

impl ValueTable {
    pub fn new() -> Self {
        let mut table = ValueTable {
            buckets: FxHashMap::default(),
            len: 0,
        };
        for v in [1.0, 0.5, FRAC_1_SQRT_2] {
            table.lookup(v);
            table.lookup(-v);
        }
        table
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lookup(&mut self, x: f64) -> f64 {
        if x.abs() < TOL_C {
            return 0.0;
        }
        if !x.is_finite() || x.abs() > MAX_UNIQUED {
            return x;
        }
        let key = (x / TOL_C).round() as i64;
        for probe in [key, key - 1, key + 1] {
            if let Some(bucket) = self.buckets.get(&probe) {
                if let Some(&hit) = bucket.iter().find(|&&y| (y - x).abs() <= TOL_C) {
                    return hit;
                }
            }
        }
        self.buckets.entry(key).or_default().push(x);
        self.len += 1;
        x
    }

    pub fn complex(&mut self, c: Complex64) -> Complex64 {
        Complex64::new(self.lookup(c.re), self.lookup(c.im))
    }
}
