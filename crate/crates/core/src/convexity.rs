//! Discrete convexity verification via the convex hull of pixel centres.

use crate::error::{Error, Result};
use crate::field::RegionMask;

/// Default slack band (pixels) used when certifying a region as convex.
pub const DEFAULT_SLACK: f64 = 1.0;

/// Convex hull of integer points, counter-clockwise in (x = col, y = row).
#[derive(Debug, Clone)]
pub struct ConvexHull {
    vertices: Vec<(i64, i64)>,
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

impl ConvexHull {
    /// Monotone-chain hull. Collinear points are dropped.
    pub fn from_points(points: &[(i64, i64)]) -> Self {
        let mut pts = points.to_vec();
        pts.sort_unstable();
        pts.dedup();
        if pts.len() < 3 {
            return Self { vertices: pts };
        }
        let mut lower: Vec<(i64, i64)> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<(i64, i64)> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    /// Hull of the inside pixel centres of a mask.
    pub fn from_mask(mask: &RegionMask) -> Self {
        // Only row extremes can be hull vertices, which keeps the sort small.
        let mut pts = Vec::new();
        for row in 0..mask.height() {
            let mut first = None;
            let mut last = None;
            for col in 0..mask.width() {
                if mask.get(row, col) {
                    first.get_or_insert(col);
                    last = Some(col);
                }
            }
            if let (Some(a), Some(b)) = (first, last) {
                pts.push((a as i64, row as i64));
                if b != a {
                    pts.push((b as i64, row as i64));
                }
            }
        }
        Self::from_points(&pts)
    }

    pub fn vertices(&self) -> &[(i64, i64)] {
        &self.vertices
    }

    /// True when the hull has no interior (fewer than three non-collinear points).
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Signed distance from `(x, y)` to the hull boundary, positive inside.
    ///
    /// For a degenerate hull the distance to the point or segment is returned
    /// with a negative sign (nothing is strictly inside).
    pub fn inner_distance(&self, x: f64, y: f64) -> f64 {
        match self.vertices.len() {
            0 => f64::NEG_INFINITY,
            1 => {
                let (px, py) = self.vertices[0];
                -((x - px as f64).hypot(y - py as f64))
            }
            2 => -segment_distance(self.vertices[0], self.vertices[1], x, y),
            n => {
                let mut min_edge = f64::INFINITY;
                for i in 0..n {
                    let a = self.vertices[i];
                    let b = self.vertices[(i + 1) % n];
                    let ex = (b.0 - a.0) as f64;
                    let ey = (b.1 - a.1) as f64;
                    let len = ex.hypot(ey);
                    // left of a CCW edge is inside
                    let s = (ex * (y - a.1 as f64) - ey * (x - a.0 as f64)) / len;
                    min_edge = min_edge.min(s);
                }
                if min_edge >= 0.0 {
                    min_edge
                } else {
                    // outside: distance to the polygon is the smallest edge distance
                    let mut best = f64::INFINITY;
                    for i in 0..n {
                        best = best.min(segment_distance(self.vertices[i], self.vertices[(i + 1) % n], x, y));
                    }
                    -best
                }
            }
        }
    }

    /// Rasterize the hull dilated by `dilation` pixels (negative values erode).
    pub fn rasterize(&self, width: usize, height: usize, dilation: f64) -> RegionMask {
        RegionMask::from_fn(width, height, |r, c| {
            self.inner_distance(c as f64, r as f64) >= -dilation
        })
    }
}

fn segment_distance(a: (i64, i64), b: (i64, i64), x: f64, y: f64) -> f64 {
    let (ax, ay) = (a.0 as f64, a.1 as f64);
    let (bx, by) = (b.0 as f64, b.1 as f64);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    (x - ax - t * dx).hypot(y - ay - t * dy)
}

/// Whether the region equals its convex hull up to a band of `slack` pixels.
///
/// Every pixel whose centre lies inside the hull of the inside pixel centres
/// at distance greater than `slack` from the hull boundary must be inside the
/// mask.
pub fn is_convex_region(mask: &RegionMask, slack: f64) -> Result<bool> {
    if !(slack >= 0.0) {
        return Err(Error::InvalidParameter(format!("slack must be >= 0, got {slack}")));
    }
    if mask.is_empty() {
        return Err(Error::invalid("convexity check on an empty mask"));
    }
    Ok(convexity_defects(mask, slack).is_empty())
}

/// Outside pixels lying deeper than `slack` inside the hull of the region.
pub fn convexity_defects(mask: &RegionMask, slack: f64) -> Vec<crate::field::GridIndex> {
    let hull = ConvexHull::from_mask(mask);
    let mut defects = Vec::new();
    if hull.is_degenerate() {
        return defects;
    }
    let (xmin, xmax) = bounds(hull.vertices().iter().map(|v| v.0));
    let (ymin, ymax) = bounds(hull.vertices().iter().map(|v| v.1));
    for row in ymin..=ymax {
        for col in xmin..=xmax {
            let (r, c) = (row as usize, col as usize);
            if !mask.get(r, c) && hull.inner_distance(col as f64, row as f64) > slack {
                defects.push(crate::field::GridIndex::new(r, c));
            }
        }
    }
    defects
}

fn bounds(it: impl Iterator<Item = i64>) -> (i64, i64) {
    it.fold((i64::MAX, i64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)))
}
