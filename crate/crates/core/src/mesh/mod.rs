//! Polygonal mesh data model.
//!
//! A [`PolyMesh`] stores vertices, counter-clockwise element loops and the
//! deduplicated face (edge) set with its connectivity. Faces are straight
//! segments between two consecutive loop vertices, so an element side that
//! carries a hanging node is represented as two faces.

pub mod geometry;
pub mod io;
mod metrics;

use std::collections::HashMap;

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

pub use metrics::{characteristic_lengths, MeshMetrics};

pub type Point = Point2<f64>;
pub type Vector = Vector2<f64>;

/// One element-face incidence. `sign` is `+1` when the element traverses the
/// face in its stored vertex order, so the outward normal of the element on
/// that face is `sign * face_normal(face)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceRef {
    pub face: usize,
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct PolyMesh {
    vertices: Vec<Point>,
    elements: Vec<Vec<usize>>,
    faces: Vec<[usize; 2]>,
    face_elements: Vec<Vec<usize>>,
    element_faces: Vec<Vec<FaceRef>>,
    boundary: Vec<bool>,
    dangling: Vec<usize>,
}

impl PolyMesh {
    /// Builds the face set and connectivity from vertices and cell loops.
    ///
    /// Cells must be simple, counter-clockwise polygons referencing valid
    /// vertex indices. Vertices used by no cell are tolerated and reported by
    /// [`PolyMesh::dangling_vertices`].
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let nv = vertices.len();
        let mut used = vec![false; nv];
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::DegenerateCell {
                    cell: c,
                    reason: format!("{} vertices", cell.len()),
                });
            }
            for &v in cell {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} references vertex {v}, only {nv} vertices"
                    )));
                }
                used[v] = true;
            }
            let poly: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let area = geometry::signed_area(&poly);
            if area == 0.0 || !area.is_finite() {
                return Err(Error::DegenerateCell {
                    cell: c,
                    reason: "zero area".into(),
                });
            }
            if area < 0.0 {
                return Err(Error::DegenerateCell {
                    cell: c,
                    reason: "clockwise orientation".into(),
                });
            }
            if !geometry::is_simple(&poly) {
                return Err(Error::DegenerateCell {
                    cell: c,
                    reason: "self-intersecting loop".into(),
                });
            }
        }

        let mut faces: Vec<[usize; 2]> = Vec::new();
        let mut face_elements: Vec<Vec<usize>> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut element_faces = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let m = cell.len();
            let mut refs = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (cell[i], cell[(i + 1) % m]);
                let key = (a.min(b), a.max(b));
                let f = *lookup.entry(key).or_insert_with(|| {
                    faces.push([a, b]);
                    face_elements.push(Vec::new());
                    faces.len() - 1
                });
                if face_elements[f].contains(&c) {
                    return Err(Error::DegenerateCell {
                        cell: c,
                        reason: format!("edge {a}-{b} traversed twice"),
                    });
                }
                face_elements[f].push(c);
                let sign = if faces[f][0] == a { 1.0 } else { -1.0 };
                refs.push(FaceRef { face: f, sign });
            }
            element_faces.push(refs);
        }

        let mut boundary = Vec::with_capacity(faces.len());
        for (f, els) in face_elements.iter().enumerate() {
            if els.len() > 2 {
                return Err(Error::NonManifoldFace {
                    face: f,
                    count: els.len(),
                });
            }
            if els.len() == 2 {
                let s0 = sign_of(&element_faces[els[0]], f);
                let s1 = sign_of(&element_faces[els[1]], f);
                if s0 * s1 > 0.0 {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} traversed in the same direction by both neighbours"
                    )));
                }
            }
            boundary.push(els.len() == 1);
        }

        let dangling: Vec<usize> = (0..nv).filter(|&v| !used[v]).collect();
        if !dangling.is_empty() {
            log::warn!("mesh has {} dangling vertices", dangling.len());
        }

        Ok(Self {
            vertices,
            elements: cells,
            faces,
            face_elements,
            element_faces,
            boundary,
            dangling,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_internal_faces(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.boundary.iter().filter(|b| **b).count()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    /// Vertex loops of all elements.
    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn element_polygon(&self, e: usize) -> Vec<Point> {
        self.elements[e].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn faces(&self) -> &[[usize; 2]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 2] {
        self.faces[f]
    }

    pub fn face_endpoints(&self, f: usize) -> (Point, Point) {
        let [a, b] = self.faces[f];
        (self.vertices[a], self.vertices[b])
    }

    pub fn face_length(&self, f: usize) -> f64 {
        let (a, b) = self.face_endpoints(f);
        (b - a).norm()
    }

    /// Unit normal of a face for its stored orientation (the outward normal of
    /// an element that traverses the face from its first to its second vertex).
    pub fn face_normal(&self, f: usize) -> Vector {
        let (a, b) = self.face_endpoints(f);
        let t = b - a;
        Vector::new(t.y, -t.x) / t.norm()
    }

    /// Elements incident to a face: one for boundary faces, two otherwise.
    pub fn face_elements(&self, f: usize) -> &[usize] {
        &self.face_elements[f]
    }

    /// Ordered faces of an element with their orientation signs.
    pub fn element_faces(&self, e: usize) -> &[FaceRef] {
        &self.element_faces[e]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.boundary[f]
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.boundary[f])
    }

    pub fn internal_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| !self.boundary[f])
    }

    /// Vertices referenced by no element.
    pub fn dangling_vertices(&self) -> &[usize] {
        &self.dangling
    }

    pub fn element_area(&self, e: usize) -> f64 {
        geometry::signed_area(&self.element_polygon(e))
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        geometry::diameter(&self.element_polygon(e))
    }

    pub fn element_perimeter(&self, e: usize) -> f64 {
        self.element_faces[e]
            .iter()
            .map(|r| self.face_length(r.face))
            .sum()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_area(e)).sum()
    }

    /// Elements sharing at least one face with `e`, in ascending order.
    pub fn neighbours(&self, e: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.element_faces[e]
            .iter()
            .flat_map(|r| self.face_elements[r.face].iter().copied())
            .filter(|&o| o != e)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Checks that no mesh vertex lies strictly inside a boundary face, which
    /// would indicate a non-conforming (hanging-node) skeleton that the face
    /// set does not partition.
    pub fn check_conforming(&self) -> Result<()> {
        let scale = self
            .faces
            .iter()
            .enumerate()
            .map(|(f, _)| self.face_length(f))
            .fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        for f in self.boundary_faces() {
            let [a, b] = self.faces[f];
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            for (v, p) in self.vertices.iter().enumerate() {
                if v == a || v == b || self.dangling.contains(&v) {
                    continue;
                }
                if geometry::point_segment_distance(p, &pa, &pb) < tol
                    && (p - pa).norm() > tol
                    && (p - pb).norm() > tol
                {
                    return Err(Error::InvalidMesh(format!(
                        "vertex {v} lies inside boundary face {f}: hanging node"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn sign_of(refs: &[FaceRef], f: usize) -> f64 {
    refs.iter().find(|r| r.face == f).map(|r| r.sign).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn grid(n: usize) -> PolyMesh {
        let h = 1.0 / n as f64;
        let mut v = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                v.push(Point::new(i as f64 * h, j as f64 * h));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut c = Vec::new();
        for j in 0..n {
            for i in 0..n {
                c.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        PolyMesh::new(v, c).unwrap()
    }

    #[test]
    fn single_square() {
        let m = grid(1);
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.num_boundary_faces(), 4);
        assert_eq!(m.num_internal_faces(), 0);
    }

    #[test]
    fn two_by_two_counts() {
        let m = grid(2);
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.num_internal_faces(), 4);
        assert_eq!(m.num_boundary_faces(), 8);
        m.check_conforming().unwrap();
    }

    #[test]
    fn shared_diagonal_has_opposite_signs() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let m = PolyMesh::new(v, vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        assert_eq!(m.num_internal_faces(), 1);
        let f = m.internal_faces().next().unwrap();
        let s: Vec<f64> = m
            .face_elements(f)
            .iter()
            .map(|&e| sign_of(m.element_faces(e), f))
            .collect();
        assert_eq!(s[0] + s[1], 0.0);
        // outward normals point away from each triangle's interior
        for &e in m.face_elements(f) {
            let n = m.face_normal(f) * sign_of(m.element_faces(e), f);
            let c = geometry::centroid(&m.element_polygon(e));
            let (a, _) = m.face_endpoints(f);
            assert!((a - c).dot(&n) > 0.0);
        }
    }

    #[test]
    fn rejects_non_manifold_and_degenerate() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 1.0),
            Point::new(0.5, -1.0),
            Point::new(0.5, 2.0),
        ];
        // three triangles on edge 0-1, one reversed to keep orientation consistent
        let err = PolyMesh::new(v.clone(), vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]]);
        assert!(err.is_err());
        let err = PolyMesh::new(v.clone(), vec![vec![0, 1]]);
        assert!(matches!(err, Err(Error::DegenerateCell { .. })));
        let err = PolyMesh::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)],
            vec![vec![0, 1, 2]],
        );
        assert!(matches!(err, Err(Error::DegenerateCell { .. })));
        let err = PolyMesh::new(v, vec![vec![0, 2, 1]]);
        assert!(matches!(err, Err(Error::DegenerateCell { .. })));
    }

    #[test]
    fn dangling_vertex_is_reported() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(5.0, 5.0),
        ];
        let m = PolyMesh::new(v, vec![vec![0, 1, 2]]).unwrap();
        assert_eq!(m.dangling_vertices(), &[3]);
    }

    #[test]
    fn incidence_maps_are_consistent() {
        let m = grid(3);
        for e in 0..m.num_elements() {
            for r in m.element_faces(e) {
                assert!(m.face_elements(r.face).contains(&e));
            }
        }
        for f in 0..m.num_faces() {
            for &e in m.face_elements(f) {
                assert!(m.element_faces(e).iter().any(|r| r.face == f));
            }
        }
        assert!((m.total_area() - 1.0).abs() < 1e-14);
    }
}
