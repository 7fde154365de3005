//! Compressed sparse row storage, reverse Cuthill–McKee ordering and an
//! envelope (skyline) Cholesky factorisation for symmetric positive definite
//! matrices.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR format with sorted, duplicate-free columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Entries are stably sorted by
    /// `(row, col)` and duplicates summed in their original order, so the same
    /// triplet sequence always yields bit-identical values.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range for n = {n}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|p| v[p]).unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.n, (0..self.n).map(|i| self.get(i, i)))
    }

    /// `y = A x`; rows are processed in parallel, each with a sequential sum.
    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        y.as_mut_slice()
            .par_iter_mut()
            .enumerate()
            .with_min_len(256)
            .for_each(|(i, yi)| {
                let (c, v) = self.row(i);
                *yi = c.iter().zip(v).map(|(j, a)| a * x[*j]).sum();
            });
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, x) in c.iter().zip(v) {
                a[(i, *j)] = *x;
            }
        }
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` over stored entries, relative to `max |a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (j, x) in c.iter().zip(v) {
                worst = worst.max((x - self.get(*j, i)).abs());
            }
        }
        let s = self.max_abs();
        if s == 0.0 {
            0.0
        } else {
            worst / s
        }
    }

    /// Symmetric permutation `B = P A P^T` with `B[i][j] = A[perm[i]][perm[j]]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0; self.n];
        for (i, p) in perm.iter().enumerate() {
            inv[*p] = i;
        }
        let mut t = Vec::with_capacity(self.nnz());
        for (i, &p) in perm.iter().enumerate() {
            let (c, v) = self.row(p);
            for (j, x) in c.iter().zip(v) {
                t.push((i, inv[*j], *x));
            }
        }
        Self::from_triplets(self.n, t)
    }

    /// Writes the lower triangle in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        let lower: Vec<(usize, usize, f64)> = (0..self.n)
            .flat_map(|i| {
                let (c, v) = self.row(i);
                c.iter()
                    .zip(v)
                    .filter(move |(j, _)| **j <= i)
                    .map(move |(j, x)| (i, *j, *x))
                    .collect::<Vec<_>>()
            })
            .collect();
        writeln!(out, "{} {} {}", self.n, self.n, lower.len())?;
        for (i, j, x) in lower {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, x)?;
        }
        Ok(())
    }
}

/// Reverse Cuthill–McKee ordering of the sparsity graph. Each connected
/// component starts from a pseudo-peripheral vertex; ties are broken by index.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).0.iter().copied().filter(|j| *j != i).collect())
        .collect();
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize| -> (Vec<usize>, usize) {
        let mut dist = vec![usize::MAX; n];
        let mut q = VecDeque::from([start]);
        dist[start] = 0;
        let mut seen = vec![start];
        while let Some(u) = q.pop_front() {
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    seen.push(w);
                    q.push_back(w);
                }
            }
        }
        let ecc = seen.iter().map(|v| dist[*v]).max().unwrap_or(0);
        (seen.into_iter().filter(|v| dist[*v] == ecc).collect(), ecc)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start
        let mut start = seed;
        let (mut last, mut ecc) = bfs_levels(start);
        for _ in 0..8 {
            let cand = *last.iter().min_by_key(|v| (deg[**v], **v)).unwrap();
            let (l2, e2) = bfs_levels(cand);
            if e2 <= ecc {
                break;
            }
            start = cand;
            last = l2;
            ecc = e2;
        }
        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|w| !visited[*w]).collect();
            nb.sort_by_key(|w| (deg[*w], *w));
            for w in nb {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `L` of `P A P^T`, stored row by row from the first
/// structurally non-zero column up to the diagonal.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factorises with a reverse Cuthill–McKee ordering.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::factor_with(a, perm)
    }

    pub fn factor_with(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        let b = a.permute(&perm);
        let first: Vec<usize> = (0..n)
            .map(|i| b.row(i).0.first().copied().unwrap_or(i).min(i))
            .collect();
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let (c, v) = b.row(i);
            for (j, x) in c.iter().zip(v) {
                if *j <= i {
                    data[start[i] + j - first[i]] = *x;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (start[i] - fi, start[j] - fj);
                let mut s = data[ri + j];
                for k in lo..j {
                    s -= data[ri + k] * data[rj + k];
                }
                data[ri + j] = s / data[rj + j];
            }
            let ri = start[i] - fi;
            let mut d = data[ri + i];
            for k in fi..i {
                d -= data[ri + k] * data[ri + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Singular {
                    reason: format!("matrix is not positive definite (pivot {d:e} at row {i})"),
                    lambda_min_estimate: None,
                });
            }
            data[ri + i] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            first,
            start,
            data,
        })
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|p| rhs[*p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.start[i] - fi;
            let mut s = y[i];
            for k in fi..i {
                s -= self.data[ri + k] * y[k];
            }
            y[i] = s / self.data[ri + i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.start[i] - fi;
            let xi = y[i] / self.data[ri + i];
            y[i] = xi;
            for k in fi..i {
                y[k] -= self.data[ri + k] * xi;
            }
        }
        let mut x = DVector::zeros(n);
        for (i, p) in self.perm.iter().enumerate() {
            x[*p] = y[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, 0.5), (0, 1, 3.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 1), 1.5);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn envelope_cholesky_solves() {
        let a = laplace_1d(50);
        let x0 = DVector::from_fn(50, |i, _| (i as f64).sin());
        let b = a.mul_vec(&x0);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x = f.solve(&b);
        assert!((x - x0).amax() < 1e-10);
    }

    #[test]
    fn cholesky_on_scrambled_grid_laplacian() {
        // 2D 5-point Laplacian with a scrambled numbering
        let m = 12;
        let n = m * m;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 37) % n).collect();
        let mut t = Vec::new();
        for y in 0..m {
            for x in 0..m {
                let i = scramble[y * m + x];
                t.push((i, i, 4.0));
                let mut nb = |xx: usize, yy: usize| {
                    let j = scramble[yy * m + xx];
                    t.push((i, j, -1.0));
                };
                if x > 0 {
                    nb(x - 1, y);
                }
                if x + 1 < m {
                    nb(x + 1, y);
                }
                if y > 0 {
                    nb(x, y - 1);
                }
                if y + 1 < m {
                    nb(x, y + 1);
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let f = EnvelopeCholesky::factor(&a).unwrap();
        // the RCM envelope of an m x m grid is about m per row
        assert!(f.envelope_size() < 3 * m * n);
        let b = DVector::from_element(n, 1.0);
        let x = f.solve(&b);
        let dense = a.to_dense().cholesky().unwrap().solve(&b);
        assert!((x - dense).amax() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn matrix_market_lower_triangle() {
        let a = laplace_1d(3);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real symmetric");
        assert_eq!(lines[1], "3 3 5");
        assert_eq!(lines.len(), 7);
    }
}
