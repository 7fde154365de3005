use super::{geometry, PolyMesh};
use crate::error::{Error, Result};

/// Size and shape measures of a mesh.
#[derive(Clone, Debug)]
pub struct MeshMetrics {
    pub h_max: f64,
    pub h_min: f64,
    pub element_diameters: Vec<f64>,
    pub face_diameters: Vec<f64>,
    pub element_areas: Vec<f64>,
    pub element_perimeters: Vec<f64>,
    /// Minimum over elements of (sampled inradius) / diameter. Diagnostic only.
    pub regularity_estimate: f64,
}

impl MeshMetrics {
    pub fn compute(mesh: &PolyMesh) -> Self {
        let ne = mesh.num_elements();
        let mut element_diameters = Vec::with_capacity(ne);
        let mut element_areas = Vec::with_capacity(ne);
        let mut element_perimeters = Vec::with_capacity(ne);
        let mut regularity = f64::INFINITY;
        for e in 0..ne {
            let poly = mesh.element_polygon(e);
            let h = geometry::diameter(&poly);
            element_diameters.push(h);
            element_areas.push(geometry::signed_area(&poly));
            element_perimeters.push(mesh.element_perimeter(e));
            regularity = regularity.min(geometry::inradius_estimate(&poly, 16) / h);
        }
        let face_diameters = (0..mesh.num_faces()).map(|f| mesh.face_length(f)).collect();
        let h_max = element_diameters.iter().copied().fold(0.0, f64::max);
        let h_min = element_diameters
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Self {
            h_max,
            h_min,
            element_diameters,
            face_diameters,
            element_areas,
            element_perimeters,
            regularity_estimate: regularity,
        }
    }
}

/// `(H_min, H_max)` over the internal faces: the minimum of the summed
/// diameters of the two incident elements, and the inverse of the maximum of
/// the summed inverse diameters.
pub fn characteristic_lengths(mesh: &PolyMesh, metrics: &MeshMetrics) -> Result<(f64, f64)> {
    let mut h_min_sum = f64::INFINITY;
    let mut inv_max = 0.0f64;
    let mut any = false;
    for f in mesh.internal_faces() {
        let els = mesh.face_elements(f);
        let (a, b) = (
            metrics.element_diameters[els[0]],
            metrics.element_diameters[els[1]],
        );
        h_min_sum = h_min_sum.min(a + b);
        inv_max = inv_max.max(1.0 / a + 1.0 / b);
        any = true;
    }
    if !any {
        return Err(Error::EmptySystem);
    }
    Ok((h_min_sum, 1.0 / inv_max))
}
