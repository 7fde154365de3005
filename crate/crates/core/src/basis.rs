//! Polynomial bases on elements and faces.
//!
//! Element bases start from monomials scaled as `((x - x_T) / h_T)^a ((y - y_T) / h_T)^b`
//! centred at the vertex average, ordered by total degree. Face bases start
//! from `t^j` where `t in [-1, 1]` is the affine pullback of the face. Both are
//! L²-orthonormalised by classical Gram–Schmidt with one re-orthogonalisation
//! pass. Because the monomials are ordered by degree, the first
//! `(l+1)(l+2)/2` element functions span `P^l` for every `l` up to the basis
//! degree.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{Point, Vector};
use crate::quadrature::QuadratureRule;

/// Whether face bases are L²-orthonormalised or left as raw pullback monomials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BasisMode {
    #[default]
    Orthonormal,
    Raw,
}

impl std::str::FromStr for BasisMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orthonormal" | "ortho" => Ok(Self::Orthonormal),
            "raw" | "monomial" => Ok(Self::Raw),
            _ => Err(Error::Config(format!("unknown basis mode '{s}'"))),
        }
    }
}

/// Dimension of `P^degree` in two variables.
pub const fn dim_p2(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Exponents `(a, b)` of the 2D monomials up to `degree`, by total degree.
pub fn monomial_exponents(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_p2(degree));
    for d in 0..=degree {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Something that can be evaluated pointwise and projected onto.
pub trait PolyBasis {
    fn dim(&self) -> usize;
    fn eval(&self, p: &Point) -> DVector<f64>;
    fn is_orthonormal(&self) -> bool;
}

#[derive(Clone, Debug)]
pub struct ElementBasis {
    pub center: Point,
    pub scale: f64,
    pub degree: usize,
    exps: Vec<(usize, usize)>,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: DMatrix<f64>,
    orthonormal: bool,
}

impl ElementBasis {
    /// Scaled monomials without orthonormalisation.
    pub fn monomial(center: Point, scale: f64, degree: usize) -> Self {
        let n = dim_p2(degree);
        Self {
            center,
            scale,
            degree,
            exps: monomial_exponents(degree),
            coeffs: DMatrix::identity(n, n),
            orthonormal: false,
        }
    }

    /// L²-orthonormal basis of `P^degree` on the region integrated by `rule`.
    pub fn orthonormal(
        center: Point,
        scale: f64,
        degree: usize,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        if rule.exactness < 2 * degree {
            return Err(Error::Config(format!(
                "quadrature exactness {} below 2*degree = {}",
                rule.exactness,
                2 * degree
            )));
        }
        let raw = Self::monomial(center, scale, degree);
        let values = raw.values_at(&rule.points);
        let coeffs = gram_schmidt(&values, &rule.weights)?;
        Ok(Self {
            coeffs,
            orthonormal: true,
            ..raw
        })
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    fn monomials(&self, p: &Point) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let xi = (p.x - self.center.x) / self.scale;
        let eta = (p.y - self.center.y) / self.scale;
        let n = self.exps.len();
        let mut px = vec![1.0; self.degree + 1];
        let mut py = vec![1.0; self.degree + 1];
        for i in 1..=self.degree {
            px[i] = px[i - 1] * xi;
            py[i] = py[i - 1] * eta;
        }
        let mut v = DVector::zeros(n);
        let mut dx = DVector::zeros(n);
        let mut dy = DVector::zeros(n);
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            v[i] = px[a] * py[b];
            if a > 0 {
                dx[i] = a as f64 * px[a - 1] * py[b] / self.scale;
            }
            if b > 0 {
                dy[i] = b as f64 * px[a] * py[b - 1] / self.scale;
            }
        }
        (v, dx, dy)
    }

    /// Values and gradients of all basis functions at `p`.
    pub fn eval_with_grad(&self, p: &Point) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let (v, dx, dy) = self.monomials(p);
        (&self.coeffs * v, &self.coeffs * dx, &self.coeffs * dy)
    }

    pub fn grad(&self, p: &Point) -> (DVector<f64>, DVector<f64>) {
        let (_, gx, gy) = self.eval_with_grad(p);
        (gx, gy)
    }

    /// `nq x dim` matrix of basis values at the given points.
    pub fn values_at(&self, pts: &[Point]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(pts.len(), self.dim());
        for (q, p) in pts.iter().enumerate() {
            m.row_mut(q).copy_from(&self.eval(p).transpose());
        }
        m
    }

    /// Evaluates `sum_i c_i phi_i` at `p`.
    pub fn eval_combination(&self, c: &[f64], p: &Point) -> f64 {
        let v = self.eval(p);
        c.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }

    /// Gradient of `sum_i c_i phi_i` at `p`.
    pub fn grad_combination(&self, c: &[f64], p: &Point) -> Vector {
        let (gx, gy) = self.grad(p);
        let x = c.iter().zip(gx.iter()).map(|(a, b)| a * b).sum();
        let y = c.iter().zip(gy.iter()).map(|(a, b)| a * b).sum();
        Vector::new(x, y)
    }
}

impl PolyBasis for ElementBasis {
    fn dim(&self) -> usize {
        self.exps.len()
    }

    fn eval(&self, p: &Point) -> DVector<f64> {
        &self.coeffs * self.monomials(p).0
    }

    fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }
}

#[derive(Clone, Debug)]
pub struct FaceBasis {
    pub a: Point,
    pub b: Point,
    pub degree: usize,
    coeffs: DMatrix<f64>,
    orthonormal: bool,
}

impl FaceBasis {
    /// Raw pullback monomials `t^j`, `t in [-1, 1]` along `a -> b`.
    pub fn monomial(a: Point, b: Point, degree: usize) -> Self {
        Self {
            a,
            b,
            degree,
            coeffs: DMatrix::identity(degree + 1, degree + 1),
            orthonormal: false,
        }
    }

    pub fn orthonormal(a: Point, b: Point, degree: usize, rule: &QuadratureRule) -> Result<Self> {
        if rule.exactness < 2 * degree {
            return Err(Error::Config(format!(
                "quadrature exactness {} below 2*degree = {}",
                rule.exactness,
                2 * degree
            )));
        }
        let raw = Self::monomial(a, b, degree);
        let values = raw.values_at(&rule.points);
        let coeffs = gram_schmidt(&values, &rule.weights)?;
        Ok(Self {
            coeffs,
            orthonormal: true,
            ..raw
        })
    }

    pub fn with_mode(
        a: Point,
        b: Point,
        degree: usize,
        rule: &QuadratureRule,
        mode: BasisMode,
    ) -> Result<Self> {
        match mode {
            BasisMode::Orthonormal => Self::orthonormal(a, b, degree, rule),
            BasisMode::Raw => Ok(Self::monomial(a, b, degree)),
        }
    }

    fn monomials(&self, p: &Point) -> DVector<f64> {
        let ab = self.b - self.a;
        let s = (p - self.a).dot(&ab) / ab.norm_squared();
        let t = 2.0 * s - 1.0;
        let mut v = DVector::zeros(self.degree + 1);
        let mut tp = 1.0;
        for j in 0..=self.degree {
            v[j] = tp;
            tp *= t;
        }
        v
    }

    pub fn values_at(&self, pts: &[Point]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(pts.len(), self.dim());
        for (q, p) in pts.iter().enumerate() {
            m.row_mut(q).copy_from(&self.eval(p).transpose());
        }
        m
    }
}

impl PolyBasis for FaceBasis {
    fn dim(&self) -> usize {
        self.degree + 1
    }

    fn eval(&self, p: &Point) -> DVector<f64> {
        &self.coeffs * self.monomials(p)
    }

    fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }
}

/// Classical Gram–Schmidt with one re-orthogonalisation pass on the columns of
/// `values` (basis functions sampled at quadrature points) for the weighted
/// inner product. Returns the lower-triangular change of basis whose row `i`
/// expresses orthonormal function `i` in the input family.
pub fn gram_schmidt(values: &DMatrix<f64>, weights: &[f64]) -> Result<DMatrix<f64>> {
    let (nq, n) = values.shape();
    let w = DVector::from_column_slice(weights);
    let inner = |u: &DVector<f64>, v: &DVector<f64>| -> f64 {
        (0..nq).map(|q| w[q] * u[q] * v[q]).sum()
    };
    let mut coeffs = DMatrix::<f64>::zeros(n, n);
    let mut ortho_vals: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v: DVector<f64> = values.column(i).into();
        let mut c = DVector::<f64>::zeros(n);
        c[i] = 1.0;
        let norm0 = inner(&v, &v).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            return Err(Error::DegenerateDomain(format!(
                "basis function {i} vanishes on the quadrature rule"
            )));
        }
        for _pass in 0..2 {
            let r: Vec<f64> = ortho_vals.iter().map(|o| inner(&v, o)).collect();
            for (j, rj) in r.iter().enumerate() {
                v.axpy(-rj, &ortho_vals[j], 1.0);
                let cj = coeffs.row(j).transpose();
                c.axpy(-rj, &cj, 1.0);
            }
        }
        let nrm = inner(&v, &v).sqrt();
        if nrm < 1e-13 * norm0 {
            return Err(Error::DegenerateDomain(format!(
                "numerically dependent basis family at function {i} (pivot {:e})",
                nrm / norm0
            )));
        }
        v /= nrm;
        c /= nrm;
        coeffs.row_mut(i).copy_from(&c.transpose());
        ortho_vals.push(v);
    }
    Ok(coeffs)
}

/// Gram matrix `(phi_i, phi_j)` under `rule`.
pub fn gram_matrix<B: PolyBasis>(basis: &B, rule: &QuadratureRule) -> DMatrix<f64> {
    let n = basis.dim();
    let mut g = DMatrix::zeros(n, n);
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let v = basis.eval(p);
        g.ger(*w, &v, &v, 1.0);
    }
    g
}

/// Frame bounds `(c, C)`: extreme eigenvalues of the Gram matrix.
pub fn frame_bounds<B: PolyBasis>(basis: &B, rule: &QuadratureRule) -> (f64, f64) {
    let ev = gram_matrix(basis, rule).symmetric_eigenvalues();
    (ev.min(), ev.max())
}

/// Coefficients of the L² projection of `f` onto `basis`. For an orthonormal
/// basis these are the moments `(f, phi_i)`; otherwise the Gram system is solved.
pub fn l2_project<B: PolyBasis>(
    f: impl Fn(&Point) -> f64,
    basis: &B,
    rule: &QuadratureRule,
) -> DVector<f64> {
    let mut b = DVector::zeros(basis.dim());
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        b.axpy(w * f(p), &basis.eval(p), 1.0);
    }
    if basis.is_orthonormal() {
        b
    } else {
        let g = gram_matrix(basis, rule);
        g.clone()
            .cholesky()
            .map(|c| c.solve(&b))
            .unwrap_or_else(|| g.lu().solve(&b).expect("singular Gram matrix"))
    }
}
