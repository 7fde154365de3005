//! Background grids clipped against a domain.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::mesh::geometry::{diameter, perimeter, signed_area};
use crate::mesh::{Point, PolyMesh};

use super::merge::compact;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellStatus {
    Exterior,
    Interior,
    Cut,
}

/// A clipped background cell.
#[derive(Clone, Debug)]
pub struct CutCell {
    pub cell: usize,
    pub element: usize,
    pub polygon: Vec<Point>,
    pub diameter: f64,
    /// `|T| / (|dT| h_T)`.
    pub sliver_ratio: f64,
}

/// Status of every background cell and the geometry of the cut ones.
#[derive(Clone, Debug)]
pub struct CutClassification {
    pub cells_per_side: usize,
    pub spacing: f64,
    pub status: Vec<CellStatus>,
    /// Mesh element of each active background cell.
    pub element_of_cell: Vec<Option<usize>>,
    pub cut_cells: Vec<CutCell>,
}

impl CutClassification {
    pub fn count(&self, s: CellStatus) -> usize {
        self.status.iter().filter(|x| **x == s).count()
    }

    /// `cell,status,element,diameter,sliver_ratio` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "cell,status,element,diameter,sliver_ratio")?;
        let mut cut = self.cut_cells.iter().peekable();
        for (c, s) in self.status.iter().enumerate() {
            let el = self.element_of_cell[c].map(|e| e.to_string()).unwrap_or_default();
            let (name, d, r) = match s {
                CellStatus::Exterior => ("exterior", String::new(), String::new()),
                CellStatus::Interior => ("interior", String::new(), String::new()),
                CellStatus::Cut => {
                    let cc = cut.next().expect("cut cell record");
                    ("cut", format!("{:e}", cc.diameter), format!("{:e}", cc.sliver_ratio))
                }
            };
            writeln!(out, "{c},{name},{el},{d},{r}")?;
        }
        Ok(())
    }
}

/// A mesh whose elements are flagged when they contain part of a cut cell,
/// with the background cell diameter used as the reference size.
#[derive(Clone, Debug)]
pub struct CutMesh {
    pub mesh: PolyMesh,
    pub cut: Vec<bool>,
    pub background_diameter: f64,
}

/// Cartesian `n x n` grid on `(0,1)^2` restricted to `x < (n-1)/n + epsilon`:
/// the last column has width `epsilon` and is flagged as cut.
pub fn cut_strip_mesh(n: usize, epsilon: f64) -> Result<(CutMesh, CutClassification)> {
    let h = 1.0 / n as f64;
    if n < 2 {
        return Err(Error::Config("cut strip mesh needs n >= 2".into()));
    }
    if !(epsilon > 1e-12 * h && epsilon < h) {
        return Err(Error::Config(format!(
            "epsilon = {epsilon:e} must lie in (1e-12/n, 1/n) for n = {n}"
        )));
    }
    let xs: Vec<f64> = (0..n)
        .map(|i| i as f64 * h)
        .chain(std::iter::once((n - 1) as f64 * h + epsilon))
        .collect();
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for x in &xs {
            vertices.push(Point::new(*x, j as f64 * h));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    let mut status = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            status.push(if i + 1 == n {
                CellStatus::Cut
            } else {
                CellStatus::Interior
            });
        }
    }
    let mesh = PolyMesh::new(vertices, cells)?;
    let cut: Vec<bool> = status.iter().map(|s| *s == CellStatus::Cut).collect();
    let cut_cells = cut_records(&mesh, &cut);
    let class = CutClassification {
        cells_per_side: n,
        spacing: h,
        element_of_cell: (0..n * n).map(Some).collect(),
        status,
        cut_cells,
    };
    Ok((
        CutMesh {
            mesh,
            cut,
            background_diameter: h * 2f64.sqrt(),
        },
        class,
    ))
}

fn cut_records(mesh: &PolyMesh, cut: &[bool]) -> Vec<CutCell> {
    (0..mesh.num_elements())
        .filter(|e| cut[*e])
        .map(|e| {
            let p = mesh.element_polygon(e);
            let d = diameter(&p);
            CutCell {
                cell: e,
                element: e,
                sliver_ratio: signed_area(&p) / (perimeter(&p) * d),
                diameter: d,
                polygon: p,
            }
        })
        .collect()
}

/// Unit disc cut from a background grid of spacing `h = 2/n`. The grid has
/// `n + 1` cells per side starting at `-1 - h/2`, so no grid line passes
/// through the axis extremities of the circle. The boundary is the piecewise
/// linear interpolant of `x^2 + y^2 - 1` along cell edges.
pub fn cut_circle_mesh(n: usize) -> Result<(CutMesh, CutClassification)> {
    if n < 2 {
        return Err(Error::Config("cut circle mesh needs n >= 2".into()));
    }
    let h = 2.0 / n as f64;
    let m = n + 1;
    let origin = -1.0 - 0.5 * h;
    cut_grid(m, origin, h, |p: &Point| p.x * p.x + p.y * p.y - 1.0)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

fn cut_grid(
    m: usize,
    origin: f64,
    h: f64,
    phi: impl Fn(&Point) -> f64,
) -> Result<(CutMesh, CutClassification)> {
    let grid_id = |i: usize, j: usize| j * (m + 1) + i;
    let mut vertices: Vec<Point> = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            vertices.push(Point::new(origin + i as f64 * h, origin + j as f64 * h));
        }
    }
    let values: Vec<f64> = vertices.iter().map(&phi).collect();
    // zero counts as outside
    let inside = |v: usize| values[v] < 0.0;
    let snap = 1e-12 * h;
    let mut crossings: HashMap<EdgeKey, usize> = HashMap::new();

    let mut cells = Vec::new();
    let mut status = vec![CellStatus::Exterior; m * m];
    let mut element_of_cell = vec![None; m * m];
    let mut cut_cells_raw: Vec<(usize, usize)> = Vec::new();

    for j in 0..m {
        for i in 0..m {
            let c = j * m + i;
            let corners = [grid_id(i, j), grid_id(i + 1, j), grid_id(i + 1, j + 1), grid_id(i, j + 1)];
            let keys = [EdgeKey::H(i, j), EdgeKey::V(i + 1, j), EdgeKey::H(i, j + 1), EdgeKey::V(i, j)];
            let ins: Vec<bool> = corners.iter().map(|v| inside(*v)).collect();
            let n_in = ins.iter().filter(|b| **b).count();
            if n_in == 0 {
                continue;
            }
            if n_in == 4 {
                status[c] = CellStatus::Interior;
                element_of_cell[c] = Some(cells.len());
                cells.push(corners.to_vec());
                continue;
            }
            let changes = (0..4).filter(|k| ins[*k] != ins[(k + 1) % 4]).count();
            if changes > 2 {
                return Err(Error::DegenerateDomain(format!(
                    "background cell ({i}, {j}) intersects the domain in more than one component"
                )));
            }
            let mut poly: Vec<usize> = Vec::with_capacity(6);
            for k in 0..4 {
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                if ins[k] {
                    poly.push(a);
                }
                if ins[k] != ins[(k + 1) % 4] {
                    let v = *crossings.entry(keys[k]).or_insert_with(|| {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let t = values[a] / (values[a] - values[b]);
                        let len = (pb - pa).norm();
                        if t * len <= snap {
                            a
                        } else if (1.0 - t) * len <= snap {
                            b
                        } else {
                            vertices.push(pa + (pb - pa) * t);
                            vertices.len() - 1
                        }
                    });
                    poly.push(v);
                }
            }
            poly.dedup();
            while poly.len() > 1 && poly.first() == poly.last() {
                poly.pop();
            }
            if poly.len() < 3 {
                continue;
            }
            let pts: Vec<Point> = poly.iter().map(|v| vertices[*v]).collect();
            if signed_area(&pts) < 1e-14 {
                continue;
            }
            status[c] = CellStatus::Cut;
            element_of_cell[c] = Some(cells.len());
            cut_cells_raw.push((c, cells.len()));
            cells.push(poly);
        }
    }
    let (v, cells) = compact(&vertices, &cells);
    let mesh = PolyMesh::new(v, cells)?;
    let mut cut = vec![false; mesh.num_elements()];
    for (_, e) in &cut_cells_raw {
        cut[*e] = true;
    }
    let cut_cells = cut_cells_raw
        .iter()
        .map(|(c, e)| {
            let p = mesh.element_polygon(*e);
            let d = diameter(&p);
            CutCell {
                cell: *c,
                element: *e,
                sliver_ratio: signed_area(&p) / (perimeter(&p) * d),
                diameter: d,
                polygon: p,
            }
        })
        .collect();
    let class = CutClassification {
        cells_per_side: m,
        spacing: h,
        status,
        element_of_cell,
        cut_cells,
    };
    Ok((
        CutMesh {
            mesh,
            cut,
            background_diameter: h * 2f64.sqrt(),
        },
        class,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{characteristic_lengths, MeshMetrics};

    #[test]
    fn strip_cut_column_has_width_epsilon() {
        let n = 4;
        let (cm, class) = cut_strip_mesh(n, 1.0 / 8.0).unwrap();
        assert_eq!(class.count(CellStatus::Cut), 4);
        for cc in &class.cut_cells {
            let p = &cc.polygon;
            assert!(((p[1].x - p[0].x) - 1.0 / 8.0).abs() < 1e-15);
            assert!(((p[2].y - p[1].y) - 0.25).abs() < 1e-15);
        }
        assert!((cm.mesh.total_area() - (0.75 + 1.0 / 8.0)).abs() < 1e-14);
        assert!(cut_strip_mesh(4, 0.3).is_err());
        assert!(cut_strip_mesh(4, 0.0).is_err());
    }

    #[test]
    fn strip_characteristic_lengths_do_not_depend_on_epsilon() {
        let lens: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|e| {
                let (cm, _) = cut_strip_mesh(8, *e).unwrap();
                characteristic_lengths(&cm.mesh, &MeshMetrics::compute(&cm.mesh)).unwrap().1
            })
            .collect();
        for l in &lens {
            assert!((l / lens[0] - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn circle_cells_and_area() {
        let (cm, class) = cut_circle_mesh(16).unwrap();
        let h = 2.0 / 16.0;
        for cc in &class.cut_cells {
            let a = signed_area(&cc.polygon);
            assert!(a > 0.0 && a < h * h * (1.0 + 1e-12));
            assert!((3..=6).contains(&cc.polygon.len()));
        }
        for (c, s) in class.status.iter().enumerate() {
            if *s == CellStatus::Interior {
                let e = class.element_of_cell[c].unwrap();
                assert_eq!(cm.mesh.element(e).len(), 4);
            }
        }
        let err = |n: usize| (cut_circle_mesh(n).unwrap().0.mesh.total_area() - std::f64::consts::PI).abs();
        let (e16, e32, e64) = (err(16), err(32), err(64));
        // second order in h
        assert!(e32 < e16 / 3.0 && e64 < e32 / 3.0, "{e16} {e32} {e64}");
    }
}
