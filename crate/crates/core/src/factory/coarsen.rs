use super::merge::{merge_groups, union_loop};
use crate::error::Result;
use crate::mesh::PolyMesh;

/// Applies `levels` rounds of greedy pairwise agglomeration. In each round the
/// elements are visited in index order and an unpaired element is merged with
/// the unpaired neighbour sharing the longest interface (sum of shared face
/// lengths, ties to the lowest index). Pairs whose union is not a simple
/// polygon are skipped and the next candidate is tried.
pub fn coarsen(mesh: &PolyMesh, levels: usize) -> Result<PolyMesh> {
    let mut m = mesh.clone();
    for _ in 0..levels {
        m = coarsen_once(&m)?;
    }
    Ok(m)
}

fn coarsen_once(mesh: &PolyMesh) -> Result<PolyMesh> {
    let ne = mesh.num_elements();
    let mut paired = vec![false; ne];
    let mut groups = Vec::with_capacity(ne / 2 + 1);
    for e in 0..ne {
        if paired[e] {
            continue;
        }
        paired[e] = true;
        let mut cands: Vec<(usize, f64)> = Vec::new();
        for r in mesh.element_faces(e) {
            let els = mesh.face_elements(r.face);
            if els.len() != 2 {
                continue;
            }
            let other = if els[0] == e { els[1] } else { els[0] };
            if paired[other] {
                continue;
            }
            let len = mesh.face_length(r.face);
            match cands.iter_mut().find(|c| c.0 == other) {
                Some(c) => c.1 += len,
                None => cands.push((other, len)),
            }
        }
        cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let partner = cands.into_iter().map(|c| c.0).find(|&o| {
            union_loop(&[mesh.element(e), mesh.element(o)]).is_some()
        });
        match partner {
            Some(o) => {
                paired[o] = true;
                groups.push(vec![e, o]);
            }
            None => groups.push(vec![e]),
        }
    }
    merge_groups(mesh, &groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factory::{cartesian_mesh, triangular_mesh};

    #[test]
    fn zero_levels_is_identity() {
        let m = triangular_mesh(3).unwrap();
        let c = coarsen(&m, 0).unwrap();
        assert_eq!(c.elements(), m.elements());
    }

    #[test]
    fn triangles_pair_across_diagonals_then_blocks_form() {
        let m = triangular_mesh(16).unwrap();
        let l1 = coarsen(&m, 1).unwrap();
        assert_eq!(l1.num_elements(), 256);
        assert!(l1.elements().iter().all(|c| c.len() == 4));
        let l3 = coarsen(&m, 3).unwrap();
        assert_eq!(l3.num_elements(), 64);
        assert_eq!(l3.num_internal_faces(), 224);
        assert!((l3.total_area() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn area_is_conserved() {
        let m = cartesian_mesh(5).unwrap();
        for lv in 1..4 {
            let c = coarsen(&m, lv).unwrap();
            assert!((c.total_area() - 1.0).abs() < 1e-13);
        }
    }
}
