//! Extreme eigenvalues and condition numbers of symmetric positive definite
//! systems.
//!
//! Small systems use a dense symmetric eigensolver. Larger ones use Lanczos
//! with full reorthogonalisation: plain for `lambda_max` (refined by a
//! shift-invert run just above the spectrum when the plain run has not reached
//! the residual target) and shift-invert at zero for `lambda_min`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{sequential_dense, to_faer, CondensedSystem};
use crate::error::{Error, Result};
use crate::mesh::characteristic_lengths;
use crate::mesh::{MeshMetrics, PolyMesh};
use crate::sparse::{CsrMatrix, EnvelopeCholesky};

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub dense_threshold: usize,
    /// Target for `||A v - lambda v|| / (|lambda| ||v||)`.
    pub tol: f64,
    /// Krylov dimension of one Lanczos run.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 2000,
            tol: 1e-8,
            krylov_dim: 120,
            max_restarts: 20,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug)]
pub struct ExtremeEigenpairs {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub vector_min: DVector<f64>,
    pub vector_max: DVector<f64>,
    /// Relative eigen-residuals of the two pairs.
    pub residual_min: f64,
    pub residual_max: f64,
    pub method: EigenMethod,
}

impl ExtremeEigenpairs {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Relative residual `||A v - lambda v|| / (|lambda| ||v||)`.
pub fn eigen_residual(a: &CsrMatrix, lambda: f64, v: &DVector<f64>) -> f64 {
    let r = a.mul_vec(v) - v * lambda;
    r.norm() / (lambda.abs() * v.norm()).max(f64::MIN_POSITIVE)
}

pub fn extreme_eigenvalues(a: &CsrMatrix, opts: &EigenOptions) -> Result<ExtremeEigenpairs> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    if n <= opts.dense_threshold {
        return dense_extremes(a);
    }
    match lanczos_extremes(a, opts) {
        Ok(r) => Ok(r),
        Err(e @ Error::EigenNotConverged { .. }) if n <= 4 * opts.dense_threshold.max(1000) => {
            log::warn!("{e}; falling back to the dense eigensolver");
            dense_extremes(a)
        }
        Err(e) => Err(e),
    }
}

pub fn dense_extremes(a: &CsrMatrix) -> Result<ExtremeEigenpairs> {
    let n = a.nrows();
    let m = to_faer(a);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::EigenNotConverged {
            residual: f64::NAN,
            iterations: 0,
        })?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let col = |j: usize| DVector::from_fn(n, |i, _| u[(i, j)]);
    let (lmin, lmax) = (s[0], s[n - 1]);
    let (vmin, vmax) = (col(0), col(n - 1));
    Ok(ExtremeEigenpairs {
        lambda_min: lmin,
        lambda_max: lmax,
        residual_min: eigen_residual(a, lmin, &vmin),
        residual_max: eigen_residual(a, lmax, &vmax),
        vector_min: vmin,
        vector_max: vmax,
        method: EigenMethod::Dense,
    })
}

/// All eigenvalues, ascending (dense).
pub fn dense_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    sequential_dense();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    m.self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("symmetric eigenvalues")
}

fn lanczos_extremes(a: &CsrMatrix, opts: &EigenOptions) -> Result<ExtremeEigenpairs> {
    let n = a.nrows();
    // lambda_min: largest eigenvalue of A^-1
    let chol = EnvelopeCholesky::factor(a)?;
    let inv = lanczos_largest(|x| chol.solve(x), n, opts, |mu, v| {
        eigen_residual(a, 1.0 / mu, v)
    })?;
    let lmin = 1.0 / inv.value;
    let vmin = inv.vector;

    // one unrestarted run: enough to place a certified shift just above the top
    let single = EigenOptions {
        max_restarts: 1,
        ..*opts
    };
    let plain = lanczos_largest(|x| a.mul_vec(x), n, &single, |t, v| eigen_residual(a, t, v));
    let (lmax, vmax) = match plain {
        Ok(p) if p.residual <= opts.tol => (p.value, p.vector),
        Ok(p) => refine_top(a, p.value, p.residual, opts)?,
        Err(Error::EigenNotConverged { .. }) => {
            let gersh = gershgorin_upper(a);
            refine_top(a, gersh, 1.0, opts)?
        }
        Err(e) => return Err(e),
    };
    let residual_min = eigen_residual(a, lmin, &vmin);
    let residual_max = eigen_residual(a, lmax, &vmax);
    let worst = residual_min.max(residual_max);
    if !(worst <= opts.tol) {
        return Err(Error::EigenNotConverged {
            residual: worst,
            iterations: opts.krylov_dim * opts.max_restarts,
        });
    }
    Ok(ExtremeEigenpairs {
        lambda_min: lmin,
        lambda_max: lmax,
        vector_min: vmin,
        vector_max: vmax,
        residual_min,
        residual_max,
        method: EigenMethod::Lanczos,
    })
}

fn gershgorin_upper(a: &CsrMatrix) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let (c, v) = a.row(i);
            c.iter()
                .zip(v)
                .map(|(j, x)| if *j == i { *x } else { x.abs() })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Shift-invert with `sigma` just above `lambda_max`: `sigma I - A` is
/// positive definite exactly when `sigma > lambda_max`, so a successful
/// factorisation certifies the shift.
fn refine_top(a: &CsrMatrix, theta: f64, residual: f64, opts: &EigenOptions) -> Result<(f64, DVector<f64>)> {
    let n = a.nrows();
    let mut delta = (2.0 * residual).max(1e-8) * theta.abs();
    for _ in 0..40 {
        let sigma = theta + delta;
        let mut t = Vec::with_capacity(a.nnz() + n);
        for i in 0..n {
            let (c, v) = a.row(i);
            for (j, x) in c.iter().zip(v) {
                t.push((i, *j, -x));
            }
            t.push((i, i, sigma));
        }
        let shifted = CsrMatrix::from_triplets(n, t);
        let Ok(chol) = EnvelopeCholesky::factor(&shifted) else {
            delta *= 4.0;
            continue;
        };
        let p = lanczos_largest(|x| chol.solve(x), n, opts, |mu, v| {
            eigen_residual(a, sigma - 1.0 / mu, v)
        })?;
        return Ok((sigma - 1.0 / p.value, p.vector));
    }
    Err(Error::EigenNotConverged {
        residual,
        iterations: 0,
    })
}

struct RitzPair {
    value: f64,
    vector: DVector<f64>,
    residual: f64,
}

/// Largest eigenpair of a symmetric operator by Lanczos with full
/// reorthogonalisation and explicit restarts from the current Ritz vector.
/// `check(theta, x)` returns the residual used for the stopping test.
fn lanczos_largest(
    op: impl Fn(&DVector<f64>) -> DVector<f64>,
    n: usize,
    opts: &EigenOptions,
    check: impl Fn(f64, &DVector<f64>) -> f64,
) -> Result<RitzPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    start /= start.norm();
    let m = opts.krylov_dim.min(n).max(1);
    let mut best: Option<RitzPair> = None;
    let mut iterations = 0;

    for _ in 0..opts.max_restarts {
        let mut basis: Vec<DVector<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut last_est = f64::INFINITY;
        let mut done = None;
        for j in 0..m {
            iterations += 1;
            let mut w = op(&basis[j]);
            let aj = w.dot(&basis[j]);
            alpha.push(aj);
            for _ in 0..2 {
                for q in &basis {
                    let c = w.dot(q);
                    w.axpy(-c, q, 1.0);
                }
            }
            let bj = w.norm();
            let at_end = j + 1 == m || bj <= 1e-13 * aj.abs().max(1e-300);
            if at_end || (j + 1) % 10 == 0 {
                let (theta, s) = top_ritz(&alpha, &beta);
                let est = (bj * s[j]).abs() / theta.abs().max(f64::MIN_POSITIVE);
                let stalled = est >= 0.5 * last_est;
                last_est = est;
                if at_end || est <= 1e-3 * opts.tol || stalled && est <= opts.tol {
                    done = Some((theta, s));
                    break;
                }
            }
            beta.push(bj);
            basis.push(w / bj);
        }
        let (theta, s) = match done {
            Some(d) => d,
            None => top_ritz(&alpha, &beta),
        };
        let mut x = DVector::zeros(n);
        for (c, q) in s.iter().zip(&basis) {
            x.axpy(*c, q, 1.0);
        }
        x /= x.norm();
        let residual = check(theta, &x);
        let improved = best.as_ref().map_or(true, |b| residual < b.residual);
        if improved {
            best = Some(RitzPair {
                value: theta,
                vector: x.clone(),
                residual,
            });
        }
        if residual <= opts.tol || basis.len() >= n {
            break;
        }
        start = x;
    }
    let b = best.expect("at least one Lanczos run");
    if b.residual.is_finite() {
        Ok(b)
    } else {
        Err(Error::EigenNotConverged {
            residual: b.residual,
            iterations,
        })
    }
}

/// Largest eigenpair of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta` (`beta.len() == alpha.len() - 1`).
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let e = t.symmetric_eigen();
    let (imax, _) = e
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    (e.eigenvalues[imax], e.eigenvectors.column(imax).into_owned())
}

/// Extreme eigenvalues of a condensed system alongside the characteristic
/// lengths of its mesh.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub num_dofs: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    /// `H_min(F_h)`.
    pub h_min: f64,
    /// `H_max(F_h)`.
    pub h_max: f64,
    /// `H_min`, the lower bound up to a constant.
    pub bound_lower: f64,
    /// `(k+1)^2 / H_max`, the upper bound up to a constant.
    pub bound_upper: f64,
    /// `lambda_min / H_min`.
    pub ratio_min: f64,
    /// `lambda_max H_max / (k+1)^2`.
    pub ratio_max: f64,
    pub residual_min: f64,
    pub residual_max: f64,
    pub method: EigenMethod,
}

pub fn spectral_report(
    system: &CondensedSystem,
    mesh: &PolyMesh,
    metrics: &MeshMetrics,
    opts: &EigenOptions,
) -> Result<SpectralReport> {
    let eig = extreme_eigenvalues(&system.matrix, opts)?;
    if !(eig.lambda_min > 0.0) {
        return Err(Error::Singular {
            reason: "condensed matrix is not positive definite".into(),
            lambda_min_estimate: Some(eig.lambda_min),
        });
    }
    let (h_min, h_max) = characteristic_lengths(mesh, metrics)?;
    let k1 = (system.config.space.k + 1) as f64;
    Ok(SpectralReport {
        num_dofs: system.num_dofs(),
        lambda_min: eig.lambda_min,
        lambda_max: eig.lambda_max,
        kappa: eig.lambda_max / eig.lambda_min,
        h_min,
        h_max,
        bound_lower: h_min,
        bound_upper: k1 * k1 / h_max,
        ratio_min: eig.lambda_min / h_min,
        ratio_max: eig.lambda_max * h_max / (k1 * k1),
        residual_min: eig.residual_min,
        residual_max: eig.residual_max,
        method: eig.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let e = extreme_eigenvalues(&CsrMatrix::identity(5), &EigenOptions::default()).unwrap();
        assert!((e.lambda_min - 1.0).abs() < 1e-14 && (e.lambda_max - 1.0).abs() < 1e-14);
        assert!((e.condition() - 1.0).abs() < 1e-14);
        let d = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 4.0)]);
        let e = extreme_eigenvalues(&d, &EigenOptions::default()).unwrap();
        assert!((e.lambda_min - 1.0).abs() < 1e-14 && (e.lambda_max - 4.0).abs() < 1e-14);
        assert!((e.condition() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn lanczos_matches_closed_form_on_1d_laplacian() {
        let n = 400;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let opts = EigenOptions {
            dense_threshold: 10,
            ..Default::default()
        };
        let e = extreme_eigenvalues(&a, &opts).unwrap();
        assert_eq!(e.method, EigenMethod::Lanczos);
        let lam = |j: usize| {
            2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()
        };
        assert!((e.lambda_min - lam(1)).abs() < 1e-9 * lam(1));
        assert!((e.lambda_max - lam(n)).abs() < 1e-9 * lam(n));
        assert!(e.residual_min <= 1e-8 && e.residual_max <= 1e-8);
    }
}
