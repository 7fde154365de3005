//! Small planar geometry helpers shared by the mesh, quadrature and factory code.

use super::Point;

/// Signed area of a closed polygon (positive for counter-clockwise loops).
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Twice the signed area of the triangle `(a, b, c)`.
#[inline]
pub fn cross3(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

pub fn perimeter(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| (poly[(i + 1) % n] - poly[i]).norm()).sum()
}

/// Largest pairwise vertex distance.
pub fn diameter(poly: &[Point]) -> f64 {
    let mut d2: f64 = 0.0;
    for i in 0..poly.len() {
        for j in i + 1..poly.len() {
            d2 = d2.max((poly[i] - poly[j]).norm_squared());
        }
    }
    d2.sqrt()
}

pub fn vertex_average(poly: &[Point]) -> Point {
    let n = poly.len() as f64;
    let (sx, sy) = poly.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}

/// Area centroid of a simple polygon.
pub fn centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let a = signed_area(poly);
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let c = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    Point::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Even-odd point-in-polygon test (boundary points may go either way).
pub fn point_in_polygon(p: &Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x = pj.x + (p.y - pj.y) * (pi.x - pj.x) / (pi.y - pj.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// True if the closed segments `[a, b]` and `[c, d]` intersect.
pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = cross3(c, d, a);
    let d2 = cross3(c, d, b);
    let d3 = cross3(a, b, c);
    let d4 = cross3(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point, c: f64| {
        c == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// Checks that a closed polygon has no repeated vertices and no crossing
/// non-adjacent edges.
pub fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if poly[i] == poly[j] {
                return false;
            }
        }
    }
    if n == 3 {
        return true;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(&a, &b, &c, &d) {
                return false;
            }
        }
    }
    true
}

/// Radius of the largest disc centred at a sampled interior point, found by
/// sampling a `samples x samples` grid over the bounding box plus the centroid.
pub fn inradius_estimate(poly: &[Point], samples: usize) -> f64 {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in poly {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let n = poly.len();
    let dist = |p: &Point| {
        (0..n)
            .map(|i| point_segment_distance(p, &poly[i], &poly[(i + 1) % n]))
            .fold(f64::MAX, f64::min)
    };
    let mut best = 0.0f64;
    let c = centroid(poly);
    if point_in_polygon(&c, poly) {
        best = dist(&c);
    }
    for i in 0..samples {
        for j in 0..samples {
            let p = Point::new(
                xmin + (xmax - xmin) * (i as f64 + 0.5) / samples as f64,
                ymin + (ymax - ymin) * (j as f64 + 0.5) / samples as f64,
            );
            if point_in_polygon(&p, poly) {
                best = best.max(dist(&p));
            }
        }
    }
    best
}
