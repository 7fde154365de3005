use crate::error::{Error, Result};
use crate::mesh::{Point, PolyMesh};

fn grid_vertices(n: usize) -> Vec<Point> {
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point::new(i as f64 * h, j as f64 * h));
        }
    }
    v
}

/// `n x n` squares on `(0,1)^2`, cells numbered row by row from the bottom.
pub fn cartesian_mesh(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::Config("cartesian mesh needs n >= 1".into()));
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::new(grid_vertices(n), cells)
}

/// Each square of [`cartesian_mesh`] split along its `(0,0)-(1,1)` diagonal,
/// lower-right triangle first.
pub fn triangular_mesh(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::Config("triangular mesh needs n >= 1".into()));
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::new(grid_vertices(n), cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let m = cartesian_mesh(1).unwrap();
        assert_eq!((m.num_elements(), m.num_internal_faces()), (1, 0));
        let m = cartesian_mesh(2).unwrap();
        assert_eq!((m.num_elements(), m.num_internal_faces()), (4, 4));
        let m = triangular_mesh(2).unwrap();
        assert_eq!((m.num_elements(), m.num_internal_faces()), (8, 8));
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert!(cartesian_mesh(0).is_err());
    }
}
