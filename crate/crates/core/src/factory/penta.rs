use super::cartesian_mesh;
use super::merge::merge_groups;
use crate::error::{Error, Result};
use crate::mesh::PolyMesh;

/// `n x n` grid where the cells with `|i - j| <= 2` stay individual squares
/// and the two remaining corners each become one staircase element that keeps
/// every grid edge of its boundary as a face.
pub fn penta_diagonal_mesh(n: usize) -> Result<PolyMesh> {
    if n < 5 {
        return Err(Error::Config("penta-diagonal mesh needs n >= 5".into()));
    }
    let base = cartesian_mesh(n)?;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut groups = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let c = j * n + i;
            let d = i as isize - j as isize;
            if d > 2 {
                lower.push(c);
            } else if d < -2 {
                upper.push(c);
            } else {
                groups.push(vec![c]);
            }
        }
    }
    groups.push(lower);
    groups.push(upper);
    merge_groups(&base, &groups)
}
