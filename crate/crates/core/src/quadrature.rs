//! Quadrature on segments and polygons.
//!
//! Segment rules are Gauss–Legendre. Polygon rules triangulate the polygon
//! (a fan from the vertex average when every fan triangle is positively
//! oriented, ear clipping otherwise) and apply a collapsed-coordinate
//! Gauss product rule on each triangle.

use crate::error::{Error, Result};
use crate::mesh::geometry::{cross3, signed_area, vertex_average};
use crate::mesh::Point;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, d)
}

/// Gauss–Legendre rule on the segment `[a, b]`, exact up to degree `order`.
pub fn segment_quadrature(a: &Point, b: &Point, order: usize) -> Result<QuadratureRule> {
    let len = (b - a).norm();
    if len == 0.0 || !len.is_finite() {
        return Err(Error::DegenerateDomain("zero-length face".into()));
    }
    let n = (order + 2) / 2;
    let (x, w) = gauss_legendre(n.max(1));
    let points = x.iter().map(|t| a + (b - a) * (0.5 * (t + 1.0))).collect();
    let weights = w.iter().map(|wi| 0.5 * len * wi).collect();
    Ok(QuadratureRule {
        points,
        weights,
        exactness: order,
    })
}

/// Collapsed (Duffy) Gauss product rule on a triangle, exact up to `order`.
pub fn triangle_quadrature(a: &Point, b: &Point, c: &Point, order: usize) -> QuadratureRule {
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        exactness: order,
    };
    push_triangle(&mut rule, a, b, c, order);
    rule
}

fn push_triangle(rule: &mut QuadratureRule, a: &Point, b: &Point, c: &Point, order: usize) {
    let area2 = cross3(a, b, c);
    // the Jacobian of the collapse adds one degree in the radial direction
    let (xu, wu) = gauss_legendre((order + 3) / 2);
    let (xv, wv) = gauss_legendre((order + 2) / 2);
    for (u, wu) in xu.iter().zip(&wu) {
        let u = 0.5 * (u + 1.0);
        for (v, wv) in xv.iter().zip(&wv) {
            let v = 0.5 * (v + 1.0);
            let p = a + ((b - a) * (1.0 - v) + (c - a) * v) * u;
            rule.points.push(p);
            rule.weights.push(0.25 * wu * wv * area2 * u);
        }
    }
}

/// Triangles covering a simple counter-clockwise polygon.
pub fn triangulate(poly: &[Point]) -> Result<Vec<[Point; 3]>> {
    let c = vertex_average(poly);
    let n = poly.len();
    let scale = signed_area(poly).abs();
    let fan_ok = (0..n).all(|i| cross3(&c, &poly[i], &poly[(i + 1) % n]) > 1e-14 * scale);
    if fan_ok {
        return Ok((0..n).map(|i| [c, poly[i], poly[(i + 1) % n]]).collect());
    }
    ear_clip(poly)
}

fn ear_clip(poly: &[Point]) -> Result<Vec<[Point; 3]>> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut tris = Vec::with_capacity(poly.len());
    let scale = signed_area(poly).abs();
    let tol = 1e-14 * scale;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for i in 0..m {
            let (ip, ic, inx) = (idx[(i + m - 1) % m], idx[i], idx[(i + 1) % m]);
            let (a, b, c) = (poly[ip], poly[ic], poly[inx]);
            let cr = cross3(&a, &b, &c);
            if cr.abs() <= tol {
                // collinear vertex: dropping it leaves the polygon unchanged
                if (b - a).dot(&(c - b)) > 0.0 {
                    idx.remove(i);
                    clipped = true;
                    break;
                }
                continue;
            }
            if cr < 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ip || j == ic || j == inx {
                    return false;
                }
                let p = poly[j];
                cross3(&a, &b, &p) >= -tol && cross3(&b, &c, &p) >= -tol && cross3(&c, &a, &p) >= -tol
            });
            if blocked {
                continue;
            }
            tris.push([a, b, c]);
            idx.remove(i);
            clipped = true;
            break;
        }
        if !clipped {
            return Err(Error::DegenerateDomain(
                "ear clipping failed: polygon is not simple".into(),
            ));
        }
    }
    let (a, b, c) = (poly[idx[0]], poly[idx[1]], poly[idx[2]]);
    if cross3(&a, &b, &c) > tol {
        tris.push([a, b, c]);
    }
    Ok(tris)
}

/// Quadrature on a simple counter-clockwise polygon, exact up to `order`.
pub fn polygon_quadrature(poly: &[Point], order: usize) -> Result<QuadratureRule> {
    let tris = triangulate(poly)?;
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        exactness: order,
    };
    for t in &tris {
        push_triangle(&mut rule, &t[0], &t[1], &t[2], order);
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point> {
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]
    }

    #[test]
    fn gauss_legendre_weights_and_exactness() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // exact for degree 2n-1
            for d in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn segment_rules() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let r = segment_quadrature(&a, &b, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.points[0].x - 0.5).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = segment_quadrature(&a, &b, 2).unwrap();
        assert!((r.integrate(|p| p.x * p.x) - 1.0 / 3.0).abs() < 1e-15);
        let c = Point::new(3.0, 4.0);
        let r = segment_quadrature(&a, &c, 0).unwrap();
        assert!((r.measure() - 5.0).abs() < 1e-15);
        assert!(segment_quadrature(&a, &a, 2).is_err());
    }

    #[test]
    fn square_moments() {
        let r = polygon_quadrature(&unit_square(), 2).unwrap();
        assert!((r.measure() - 1.0).abs() < 1e-14);
        assert!((r.integrate(|p| p.x * p.y) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn l_shaped_first_moment() {
        let l = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        // x-moment by splitting into [0,2]x[0,1] (gives 2) and [0,1]x[1,2] (gives 1/2)
        let oracle = 2.0 + 0.5;
        let r = polygon_quadrature(&l, 1).unwrap();
        assert!((r.measure() - 3.0).abs() < 1e-14);
        let ix = r.integrate(|p| p.x);
        assert!((ix - oracle).abs() < 1e-13, "{ix}");
    }

    #[test]
    fn nonconvex_staircase_uses_positive_weights() {
        // staircase that is not star-shaped w.r.t. its vertex average
        let s = vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 0.1),
            Point::new(0.1, 0.1),
            Point::new(0.1, 3.0),
            Point::new(0.0, 3.0),
        ];
        let r = polygon_quadrature(&s, 4).unwrap();
        assert!(r.weights.iter().all(|w| *w > 0.0));
        let area = signed_area(&s);
        assert!((r.measure() - area).abs() < 1e-13);
    }
}
