//! `POLYMESH2D` plain-text mesh format.
//!
//! ```text
//! POLYMESH2D <n_vertices> <n_cells>
//! x y                     (one line per vertex)
//! m i1 ... im             (one line per cell, 0-based vertex indices)
//! ```
//!
//! Coordinates are written with the shortest decimal representation that
//! parses back to the same `f64`, so write/read round-trips bit-exactly.

use std::io::{BufRead, Write};

use super::{Point, PolyMesh};
use crate::error::{Error, Result};

pub const MAGIC: &str = "POLYMESH2D";

pub fn write_polymesh<W: Write>(mesh: &PolyMesh, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC} {} {}", mesh.num_vertices(), mesh.num_elements())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {}", p.x, p.y)?;
    }
    for cell in mesh.elements() {
        write!(out, "{}", cell.len())?;
        for v in cell {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Parses the raw vertex and cell lists without building connectivity.
pub fn read_raw<R: BufRead>(input: R) -> Result<(Vec<Point>, Vec<Vec<usize>>)> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));

    let perr = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
    let header = header?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(perr(ln, "missing POLYMESH2D header"));
    }
    let nv: usize = tok
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| perr(ln, "bad vertex count"))?;
    let nc: usize = tok
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| perr(ln, "bad cell count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of vertices"))?;
        let l = l?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, &e.to_string()))?;
        if xs.len() != 2 {
            return Err(perr(ln, "expected two coordinates"));
        }
        vertices.push(Point::new(xs[0], xs[1]));
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of cells"))?;
        let l = l?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, &e.to_string()))?;
        let (&m, rest) = ids.split_first().ok_or_else(|| perr(ln, "empty cell line"))?;
        if rest.len() != m {
            return Err(perr(ln, "cell vertex count mismatch"));
        }
        cells.push(rest.to_vec());
    }
    Ok((vertices, cells))
}

pub fn read_polymesh<R: BufRead>(input: R) -> Result<PolyMesh> {
    let (v, c) = read_raw(input)?;
    PolyMesh::new(v, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "POLYMESH2D 3 1\n0 0\n1 0\n0 1\n4 0 1 2\n";
        match read_raw(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(read_raw("MESH 1 1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            xs in proptest::collection::vec(-1e6f64..1e6, 3),
            ys in proptest::collection::vec(-1e6f64..1e6, 3),
        ) {
            // a valid counter-clockwise triangle from arbitrary coordinates
            let mut v: Vec<Point> = (0..3).map(|i| Point::new(xs[i], ys[i])).collect();
            let a = super::super::geometry::signed_area(&v);
            prop_assume!(a.abs() > 1e-3);
            if a < 0.0 { v.swap(1, 2); }
            let m = PolyMesh::new(v, vec![vec![0, 1, 2]]).unwrap();
            let mut buf = Vec::new();
            write_polymesh(&m, &mut buf).unwrap();
            let back = read_polymesh(buf.as_slice()).unwrap();
            for (p, q) in m.vertices().iter().zip(back.vertices()) {
                prop_assert_eq!(p.x.to_bits(), q.x.to_bits());
                prop_assert_eq!(p.y.to_bits(), q.y.to_bits());
            }
            let mut buf2 = Vec::new();
            write_polymesh(&back, &mut buf2).unwrap();
            prop_assert_eq!(buf, buf2);
        }
    }
}
