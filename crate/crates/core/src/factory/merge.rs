//! Element merging by cancellation of opposite directed edges.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::mesh::{Point, PolyMesh};

/// Boundary loop of the union of counter-clockwise cells. Every vertex of the
/// cells that lies on the union boundary is kept, so sides made of several
/// original edges stay subdivided. Returns `None` when the union boundary is
/// not a single simple loop (disconnected union, hole or pinch vertex).
pub fn union_loop(cells: &[&[usize]]) -> Option<Vec<usize>> {
    let mut directed: Vec<(usize, usize)> = Vec::new();
    let mut present: HashSet<(usize, usize)> = HashSet::new();
    for c in cells {
        for i in 0..c.len() {
            let e = (c[i], c[(i + 1) % c.len()]);
            directed.push(e);
            present.insert(e);
        }
    }
    let kept: Vec<(usize, usize)> = directed
        .into_iter()
        .filter(|(a, b)| !present.contains(&(*b, *a)))
        .collect();
    if kept.is_empty() {
        return None;
    }
    let mut next: HashMap<usize, usize> = HashMap::with_capacity(kept.len());
    for (a, b) in &kept {
        if next.insert(*a, *b).is_some() {
            return None;
        }
    }
    let start = kept[0].0;
    let mut lp = vec![start];
    let mut cur = next[&start];
    while cur != start {
        if lp.len() > kept.len() {
            return None;
        }
        lp.push(cur);
        cur = *next.get(&cur)?;
    }
    (lp.len() == kept.len()).then_some(lp)
}

/// Replaces each group of elements by the union of its cells. Groups must
/// partition the elements; merged elements are ordered by their smallest
/// constituent index and each loop starts from the first boundary vertex of
/// that constituent.
pub fn merge_groups(mesh: &PolyMesh, groups: &[Vec<usize>]) -> Result<PolyMesh> {
    let mut seen = vec![false; mesh.num_elements()];
    for g in groups {
        for &e in g {
            if e >= mesh.num_elements() || std::mem::replace(&mut seen[e], true) {
                return Err(Error::Aggregation(format!("element {e} listed twice or out of range")));
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Aggregation("groups do not cover every element".into()));
    }
    let mut order: Vec<&Vec<usize>> = groups.iter().filter(|g| !g.is_empty()).collect();
    order.sort_by_key(|g| *g.iter().min().unwrap());
    let mut cells = Vec::with_capacity(order.len());
    for g in order {
        if g.len() == 1 {
            cells.push(mesh.element(g[0]).to_vec());
            continue;
        }
        let parts: Vec<&[usize]> = g.iter().map(|e| mesh.element(*e)).collect();
        let lp = union_loop(&parts).ok_or_else(|| {
            Error::Aggregation(format!("union of elements {g:?} is not a simple polygon"))
        })?;
        let first = *g.iter().min().unwrap();
        let anchor = mesh
            .element(first)
            .iter()
            .find_map(|v| lp.iter().position(|w| w == v))
            .unwrap_or(0);
        let mut lp = lp;
        lp.rotate_left(anchor);
        cells.push(lp);
    }
    let (v, c) = compact(mesh.vertices(), &cells);
    PolyMesh::new(v, c)
}

/// Drops unused vertices and renumbers cells, preserving vertex order.
pub fn compact(vertices: &[Point], cells: &[Vec<usize>]) -> (Vec<Point>, Vec<Vec<usize>>) {
    let mut used = vec![false; vertices.len()];
    for c in cells {
        for &v in c {
            used[v] = true;
        }
    }
    let mut map = vec![usize::MAX; vertices.len()];
    let mut out = Vec::new();
    for (i, p) in vertices.iter().enumerate() {
        if used[i] {
            map[i] = out.len();
            out.push(*p);
        }
    }
    let cells = cells
        .iter()
        .map(|c| c.iter().map(|v| map[*v]).collect())
        .collect();
    (out, cells)
}
