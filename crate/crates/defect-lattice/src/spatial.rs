//! Uniform bucket grid for radius queries over point clouds.

use crate::vec3::{norm2, sub, Vec3};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct SpatialHash {
    h: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl SpatialHash {
    pub fn new(points: &[Vec3], h: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(h, *p)).or_default().push(i);
        }
        SpatialHash { h, cells }
    }

    fn key(h: f64, p: Vec3) -> [i64; 3] {
        [
            (p[0] / h).floor() as i64,
            (p[1] / h).floor() as i64,
            (p[2] / h).floor() as i64,
        ]
    }

    /// Indices of points within distance `r` of `x`, sorted ascending.
    pub fn within(&self, points: &[Vec3], x: Vec3, r: f64) -> Vec<usize> {
        let lo = Self::key(self.h, [x[0] - r, x[1] - r, x[2] - r]);
        let hi = Self::key(self.h, [x[0] + r, x[1] + r, x[2] + r]);
        let r2 = r * r;
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for k in lo[2]..=hi[2] {
                    if let Some(v) = self.cells.get(&[i, j, k]) {
                        for &idx in v {
                            if norm2(sub(points[idx], x)) <= r2 {
                                out.push(idx);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest point to `x` searching outward up to `rmax`.
    pub fn nearest(&self, points: &[Vec3], x: Vec3, rmax: f64) -> Option<(usize, f64)> {
        let mut r = self.h;
        loop {
            let cand = self.within(points, x, r);
            if !cand.is_empty() {
                let best = cand
                    .iter()
                    .map(|&i| (i, norm2(sub(points[i], x)).sqrt()))
                    .fold(None, |acc: Option<(usize, f64)>, c| match acc {
                        Some(a) if a.1 <= c.1 => Some(a),
                        _ => Some(c),
                    });
                return best;
            }
            if r > rmax {
                return None;
            }
            r *= 2.0;
        }
    }
}
