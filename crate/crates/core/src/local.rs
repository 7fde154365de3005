//! Per-element HHO operators.
//!
//! For an element `T` with faces `F_1..F_m`, local unknowns are ordered as the
//! element block (coefficients in the orthonormal basis of `P^l(T)`) followed
//! by one block of `k+1` face coefficients per face, in the element's face
//! order. The reconstruction space `P^{k+1}(T)` uses the same hierarchical
//! orthonormal element basis, so element coefficients coincide with the first
//! `dim P^l` reconstruction coefficients.

use nalgebra::{DMatrix, DVector};

use crate::basis::{dim_p2, BasisMode, ElementBasis, FaceBasis, PolyBasis};
use crate::error::{Error, Result};
use crate::mesh::geometry::{diameter, signed_area, vertex_average};
use crate::mesh::{Point, PolyMesh, Vector};
use crate::quadrature::{polygon_quadrature, segment_quadrature, QuadratureRule};

/// Stabilisation bilinear forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stabilization {
    /// `h_T^-2 (dT u, dT v)_T + h_T^-1 (dF u, dF v)_dT`
    Main,
    /// `h_T^-1 (dF u, dF v)_dT`, only for `l = k - 1`
    KMinus1,
    /// `h_T^-1 ((dF - dT) u, (dF - dT) v)_dT`
    Boundary,
    /// `(grad dT u, grad dT v)_T + h_T^-1 (dF u, dF v)_dT`
    Gradient,
    /// `h_T^-1 (pi_F (u_F - u_T), pi_F (v_F - v_T))_dT`, only for `l = k + 1`
    Hdg,
}

impl Stabilization {
    pub const ALL: [Stabilization; 5] = [
        Stabilization::Main,
        Stabilization::KMinus1,
        Stabilization::Boundary,
        Stabilization::Gradient,
        Stabilization::Hdg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Main => "main",
            Self::KMinus1 => "kminus1",
            Self::Boundary => "boundary",
            Self::Gradient => "gradient",
            Self::Hdg => "hdg",
        }
    }
}

impl std::str::FromStr for Stabilization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "main" | "vol" => Self::Main,
            "kminus1" | "k-1" => Self::KMinus1,
            "boundary" | "bdry" => Self::Boundary,
            "gradient" | "grad" => Self::Gradient,
            "hdg" => Self::Hdg,
            _ => return Err(Error::Config(format!("unknown stabilisation '{s}'"))),
        })
    }
}

impl std::fmt::Display for Stabilization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which diameter scales the face terms of the stabilisation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FaceScaling {
    #[default]
    Element,
    Face,
}

/// Face degree `k` and element degree `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalSpace {
    pub k: usize,
    pub l: usize,
}

impl LocalSpace {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        if l + 1 < k || l > k + 1 {
            return Err(Error::Config(format!(
                "element degree l = {l} must satisfy k-1 <= l <= k+1 for k = {k}"
            )));
        }
        Ok(Self { k, l })
    }

    pub fn element_dim(&self) -> usize {
        dim_p2(self.l)
    }

    pub fn face_dim(&self) -> usize {
        self.k + 1
    }

    pub fn reconstruction_dim(&self) -> usize {
        dim_p2(self.k + 1)
    }

    pub fn local_dim(&self, num_faces: usize) -> usize {
        self.element_dim() + num_faces * self.face_dim()
    }

    /// Rejects `(variant, k, l)` combinations for which the local bilinear form
    /// is not coercive.
    pub fn check_admissible(&self, stab: Stabilization) -> Result<()> {
        let (k, l) = (self.k, self.l);
        match stab {
            Stabilization::KMinus1 if l + 1 != k => Err(Error::Config(format!(
                "the kminus1 stabilisation requires l = k-1 (got k = {k}, l = {l})"
            ))),
            Stabilization::Hdg if l != k + 1 => Err(Error::Config(format!(
                "the hdg stabilisation requires l = k+1 (got k = {k}, l = {l})"
            ))),
            _ => Ok(()),
        }
    }
}

/// Discretisation parameters shared by all elements.
#[derive(Clone, Debug)]
pub struct HhoConfig {
    pub space: LocalSpace,
    pub stabilization: Stabilization,
    pub basis_mode: BasisMode,
    pub face_scaling: FaceScaling,
    /// Element quadrature exactness; defaults to `2(k+2)`.
    pub element_order: Option<usize>,
    /// Face quadrature exactness; defaults to `2k+2`.
    pub face_order: Option<usize>,
}

impl HhoConfig {
    /// `l = k`, main stabilisation, orthonormal bases.
    pub fn new(k: usize) -> Self {
        Self {
            space: LocalSpace { k, l: k },
            stabilization: Stabilization::Main,
            basis_mode: BasisMode::Orthonormal,
            face_scaling: FaceScaling::Element,
            element_order: None,
            face_order: None,
        }
    }

    pub fn with_l(mut self, l: usize) -> Result<Self> {
        self.space = LocalSpace::new(self.space.k, l)?;
        Ok(self)
    }

    pub fn with_stabilization(mut self, s: Stabilization) -> Self {
        self.stabilization = s;
        self
    }

    pub fn with_basis_mode(mut self, m: BasisMode) -> Self {
        self.basis_mode = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        LocalSpace::new(self.space.k, self.space.l)?;
        self.space.check_admissible(self.stabilization)
    }

    pub fn element_quadrature_order(&self) -> usize {
        self.element_order.unwrap_or(2 * (self.space.k + 2))
    }

    pub fn face_quadrature_order(&self) -> usize {
        self.face_order.unwrap_or(2 * self.space.k + 2)
    }
}

/// Quadrature and basis of one mesh face, in the face's stored orientation.
#[derive(Clone, Debug)]
pub struct FaceData {
    pub a: Point,
    pub b: Point,
    pub length: f64,
    pub rule: QuadratureRule,
    pub basis: FaceBasis,
}

impl FaceData {
    pub fn new(a: Point, b: Point, cfg: &HhoConfig) -> Result<Self> {
        let order = cfg.face_quadrature_order().max(2 * cfg.space.k);
        let rule = segment_quadrature(&a, &b, order)?;
        let basis = FaceBasis::with_mode(a, b, cfg.space.k, &rule, cfg.basis_mode)?;
        Ok(Self {
            a,
            b,
            length: (b - a).norm(),
            rule,
            basis,
        })
    }

    pub fn build_all(mesh: &PolyMesh, cfg: &HhoConfig) -> Result<Vec<FaceData>> {
        (0..mesh.num_faces())
            .map(|f| {
                let (a, b) = mesh.face_endpoints(f);
                FaceData::new(a, b, cfg)
            })
            .collect()
    }
}

/// One face of an element as seen from the element.
#[derive(Clone, Debug)]
pub struct LocalFace {
    pub face: usize,
    /// Outward unit normal.
    pub normal: Vector,
    pub data: FaceData,
    /// Element basis (reconstruction degree) at the face quadrature points.
    psi: DMatrix<f64>,
    psi_dx: DMatrix<f64>,
    psi_dy: DMatrix<f64>,
    /// Face basis at the face quadrature points.
    phi: DMatrix<f64>,
    mass: DMatrix<f64>,
}

/// Geometry, bases and quadrature of one element.
#[derive(Clone, Debug)]
pub struct ElementContext {
    pub element: usize,
    pub space: LocalSpace,
    pub polygon: Vec<Point>,
    pub area: f64,
    pub diameter: f64,
    pub basis: ElementBasis,
    pub rule: QuadratureRule,
    pub faces: Vec<LocalFace>,
    psi: DMatrix<f64>,
    psi_dx: DMatrix<f64>,
    psi_dy: DMatrix<f64>,
}

impl ElementContext {
    pub fn new(
        mesh: &PolyMesh,
        e: usize,
        face_data: &[FaceData],
        cfg: &HhoConfig,
    ) -> Result<Self> {
        let polygon = mesh.element_polygon(e);
        let area = signed_area(&polygon);
        let h = diameter(&polygon);
        let k = cfg.space.k;
        let rdeg = k + 1;
        let rule = polygon_quadrature(&polygon, cfg.element_quadrature_order().max(2 * rdeg))?;
        let basis = ElementBasis::orthonormal(vertex_average(&polygon), h, rdeg, &rule)?;
        let (psi, psi_dx, psi_dy) = tabulate(&basis, &rule.points);

        let normal_of = |f: usize, sign: f64| mesh.face_normal(f) * sign;
        let mut faces = Vec::with_capacity(mesh.element_faces(e).len());
        for r in mesh.element_faces(e) {
            let data = face_data[r.face].clone();
            let (psi_f, dx_f, dy_f) = tabulate(&basis, &data.rule.points);
            let phi = data.basis.values_at(&data.rule.points);
            let mass = weighted_product(&phi, &data.rule.weights, &phi);
            faces.push(LocalFace {
                face: r.face,
                normal: normal_of(r.face, r.sign),
                data,
                psi: psi_f,
                psi_dx: dx_f,
                psi_dy: dy_f,
                phi,
                mass,
            });
        }
        Ok(Self {
            element: e,
            space: cfg.space,
            polygon,
            area,
            diameter: h,
            basis,
            rule,
            faces,
            psi,
            psi_dx,
            psi_dy,
        })
    }

    pub fn element_dim(&self) -> usize {
        self.space.element_dim()
    }

    pub fn face_dim(&self) -> usize {
        self.space.face_dim()
    }

    pub fn local_dim(&self) -> usize {
        self.space.local_dim(self.faces.len())
    }

    pub fn face_offset(&self, i: usize) -> usize {
        self.element_dim() + i * self.face_dim()
    }

    /// `I_T v = (pi_T^l v, pi_dT^k v)`.
    pub fn interpolate(&self, v: impl Fn(&Point) -> f64) -> DVector<f64> {
        let nt = self.element_dim();
        let nf = self.face_dim();
        let mut out = DVector::zeros(self.local_dim());
        for (q, w) in self.rule.weights.iter().enumerate() {
            let fv = v(&self.rule.points[q]);
            for j in 0..nt {
                out[j] += w * fv * self.psi[(q, j)];
            }
        }
        for (i, lf) in self.faces.iter().enumerate() {
            let mut rhs = DVector::zeros(nf);
            for (q, w) in lf.data.rule.weights.iter().enumerate() {
                let fv = v(&lf.data.rule.points[q]);
                for j in 0..nf {
                    rhs[j] += w * fv * lf.phi[(q, j)];
                }
            }
            let c = solve_spd(&lf.mass, &rhs);
            out.rows_mut(self.face_offset(i), nf).copy_from(&c);
        }
        out
    }

    /// Element right-hand side `(f, phi_j)_T` for the element basis of `P^l`.
    pub fn load(&self, f: &dyn Fn(&Point) -> f64) -> DVector<f64> {
        let nt = self.element_dim();
        let mut b = DVector::zeros(nt);
        for (q, w) in self.rule.weights.iter().enumerate() {
            let fv = f(&self.rule.points[q]);
            for j in 0..nt {
                b[j] += w * fv * self.psi[(q, j)];
            }
        }
        b
    }

    /// `||v||_{1,T} = (|grad v_T|_T^2 + h_T^-1 |v_dT - v_T|_dT^2)^{1/2}`.
    pub fn seminorm(&self, v: &DVector<f64>) -> f64 {
        let nt = self.element_dim();
        let nf = self.face_dim();
        let vt = v.rows(0, nt);
        let mut grad2 = 0.0;
        for (q, w) in self.rule.weights.iter().enumerate() {
            let gx: f64 = (0..nt).map(|j| self.psi_dx[(q, j)] * vt[j]).sum();
            let gy: f64 = (0..nt).map(|j| self.psi_dy[(q, j)] * vt[j]).sum();
            grad2 += w * (gx * gx + gy * gy);
        }
        let mut jump2 = 0.0;
        for (i, lf) in self.faces.iter().enumerate() {
            let vf = v.rows(self.face_offset(i), nf);
            for (q, w) in lf.data.rule.weights.iter().enumerate() {
                let a: f64 = (0..nf).map(|j| lf.phi[(q, j)] * vf[j]).sum();
                let b: f64 = (0..nt).map(|j| lf.psi[(q, j)] * vt[j]).sum();
                jump2 += w * (a - b) * (a - b);
            }
        }
        (grad2 + jump2 / self.diameter).sqrt()
    }

    /// Stiffness matrix `(grad psi_i, grad psi_j)_T` of the degree-`k+1` basis.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let w = &self.rule.weights;
        weighted_product(&self.psi_dx, w, &self.psi_dx) + weighted_product(&self.psi_dy, w, &self.psi_dy)
    }

    /// Boundary-only part of the local space: the vector `(0, v_dT)` with the
    /// given face blocks.
    pub fn face_only(&self, face_coeffs: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.local_dim());
        v.rows_mut(self.element_dim(), face_coeffs.len())
            .copy_from(face_coeffs);
        v
    }

    fn face_scale(&self, lf: &LocalFace, scaling: FaceScaling) -> f64 {
        match scaling {
            FaceScaling::Element => 1.0 / self.diameter,
            FaceScaling::Face => 1.0 / lf.data.length,
        }
    }
}

fn tabulate(basis: &ElementBasis, pts: &[Point]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = basis.dim();
    let mut v = DMatrix::zeros(pts.len(), n);
    let mut dx = DMatrix::zeros(pts.len(), n);
    let mut dy = DMatrix::zeros(pts.len(), n);
    for (q, p) in pts.iter().enumerate() {
        let (a, b, c) = basis.eval_with_grad(p);
        v.row_mut(q).copy_from(&a.transpose());
        dx.row_mut(q).copy_from(&b.transpose());
        dy.row_mut(q).copy_from(&c.transpose());
    }
    (v, dx, dy)
}

/// `A^T diag(w) B`.
fn weighted_product(a: &DMatrix<f64>, w: &[f64], b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wb = b.clone();
    for (q, wq) in w.iter().enumerate() {
        wb.row_mut(q).scale_mut(*wq);
    }
    a.transpose() * wb
}

fn solve_spd(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    m.clone()
        .cholesky()
        .expect("face mass matrix is positive definite")
        .solve(b)
}

fn solve_spd_mat(m: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone()
        .cholesky()
        .expect("face mass matrix is positive definite")
        .solve(b)
}

/// Matrices of all local operators of one element.
#[derive(Clone, Debug)]
pub struct LocalOperators {
    /// Stiffness of the degree-`k+1` basis.
    pub stiffness: DMatrix<f64>,
    /// Potential reconstruction: local dofs to `P^{k+1}(T)` coefficients.
    pub reconstruction: DMatrix<f64>,
    /// `delta_T^l` in the element basis of `P^l(T)`.
    pub delta_element: DMatrix<f64>,
    /// `delta_F^k` per face, in the face basis.
    pub delta_faces: Vec<DMatrix<f64>>,
    pub stabilization: DMatrix<f64>,
    /// Local bilinear form `a_T`.
    pub bilinear: DMatrix<f64>,
}

impl LocalOperators {
    pub fn build(ctx: &ElementContext, stab: Stabilization, scaling: FaceScaling) -> Result<Self> {
        ctx.space.check_admissible(stab)?;
        let nt = ctx.element_dim();
        let nf = ctx.face_dim();
        let nr = ctx.space.reconstruction_dim();
        let dim = ctx.local_dim();

        let stiffness = ctx.stiffness();
        let reconstruction = potential_reconstruction(ctx, &stiffness)?;

        let mut delta_element = reconstruction.rows(0, nt).into_owned();
        for j in 0..nt {
            delta_element[(j, j)] -= 1.0;
        }

        // pi_F^k p_T v - v_F
        let mut delta_faces = Vec::with_capacity(ctx.faces.len());
        for (i, lf) in ctx.faces.iter().enumerate() {
            let cross = weighted_product(&lf.phi, &lf.data.rule.weights, &lf.psi);
            let mut d = solve_spd_mat(&lf.mass, &(cross * &reconstruction));
            let off = ctx.face_offset(i);
            for j in 0..nf {
                d[(j, off + j)] -= 1.0;
            }
            delta_faces.push(d);
        }

        let mut s = DMatrix::<f64>::zeros(dim, dim);
        let h = ctx.diameter;
        let face_dd = |s: &mut DMatrix<f64>| {
            for (lf, d) in ctx.faces.iter().zip(&delta_faces) {
                let c = ctx.face_scale(lf, scaling);
                *s += (d.transpose() * &lf.mass * d) * c;
            }
        };
        match stab {
            Stabilization::Main => {
                *&mut s += delta_element.transpose() * &delta_element / (h * h);
                face_dd(&mut s);
            }
            Stabilization::KMinus1 => face_dd(&mut s),
            Stabilization::Gradient => {
                let kl = stiffness.view((0, 0), (nt, nt));
                s += delta_element.transpose() * kl * &delta_element;
                face_dd(&mut s);
            }
            Stabilization::Boundary => {
                for (lf, d) in ctx.faces.iter().zip(&delta_faces) {
                    let c = ctx.face_scale(lf, scaling);
                    let v = &lf.phi * d - lf.psi.columns(0, nt) * &delta_element;
                    s += weighted_product(&v, &lf.data.rule.weights, &v) * c;
                }
            }
            Stabilization::Hdg => {
                for (i, lf) in ctx.faces.iter().enumerate() {
                    let c = ctx.face_scale(lf, scaling);
                    let cross_t = weighted_product(&lf.phi, &lf.data.rule.weights, &lf.psi.columns(0, nt).into_owned());
                    let proj_t = solve_spd_mat(&lf.mass, &cross_t);
                    let mut x = DMatrix::<f64>::zeros(nf, dim);
                    x.view_mut((0, 0), (nf, nt)).copy_from(&(-proj_t));
                    let off = ctx.face_offset(i);
                    for j in 0..nf {
                        x[(j, off + j)] += 1.0;
                    }
                    s += (x.transpose() * &lf.mass * &x) * c;
                }
            }
        }
        symmetrize(&mut s);

        let mut bilinear = reconstruction.transpose() * &stiffness * &reconstruction + &s;
        symmetrize(&mut bilinear);
        debug_assert_eq!(reconstruction.nrows(), nr);

        Ok(Self {
            stiffness,
            reconstruction,
            delta_element,
            delta_faces,
            stabilization: s,
            bilinear,
        })
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Solves `(grad p, grad w)_T = -(v_T, lap w)_T + (v_dT, grad w . n)_dT` for all
/// `w` in `P^{k+1}(T)`, with the mean of `p` fixed to that of `v_T`. The
/// right-hand side is integrated by parts so only first derivatives appear.
fn potential_reconstruction(ctx: &ElementContext, stiffness: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let nt = ctx.element_dim();
    let nf = ctx.face_dim();
    let nr = ctx.space.reconstruction_dim();
    let dim = ctx.local_dim();

    let mut rhs = DMatrix::<f64>::zeros(nr, dim);
    rhs.view_mut((0, 0), (nr, nt))
        .copy_from(&stiffness.view((0, 0), (nr, nt)));
    for (i, lf) in ctx.faces.iter().enumerate() {
        let off = ctx.face_offset(i);
        let (nx, ny) = (lf.normal.x, lf.normal.y);
        let gn = &lf.psi_dx * nx + &lf.psi_dy * ny;
        let w = &lf.data.rule.weights;
        let elem_part = weighted_product(&gn, w, &lf.psi.columns(0, nt).into_owned());
        let face_part = weighted_product(&gn, w, &lf.phi);
        let mut v = rhs.view_mut((0, 0), (nr, nt));
        v -= &elem_part;
        let mut v = rhs.view_mut((0, off), (nr, nf));
        v += &face_part;
    }

    let mut p = DMatrix::<f64>::zeros(nr, dim);
    // closure: the constant mode of p equals that of v_T
    p[(0, 0)] = 1.0;
    if nr > 1 {
        let k_nc = stiffness.view((1, 1), (nr - 1, nr - 1)).into_owned();
        let chol = k_nc.cholesky().ok_or_else(|| Error::Singular {
            reason: format!(
                "reconstruction stiffness is singular on element {}",
                ctx.element
            ),
            lambda_min_estimate: None,
        })?;
        let sol = chol.solve(&rhs.rows(1, nr - 1).into_owned());
        p.rows_mut(1, nr - 1).copy_from(&sol);
    }
    Ok(p)
}

/// Static condensation of one element: elimination of the element block.
#[derive(Clone, Debug)]
pub struct LocalCondensation {
    /// `A_FF - A_FT A_TT^-1 A_TF`.
    pub schur: DMatrix<f64>,
    /// `-A_TT^-1 A_TF`: face unknowns to element unknowns.
    pub lift: DMatrix<f64>,
    a_tt: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    a_ft: DMatrix<f64>,
}

impl LocalCondensation {
    pub fn new(a: &DMatrix<f64>, nt: usize) -> Result<Self> {
        let dim = a.nrows();
        let nfd = dim - nt;
        let a_tt = a.view((0, 0), (nt, nt)).into_owned();
        let a_tf = a.view((0, nt), (nt, nfd)).into_owned();
        let a_ft = a.view((nt, 0), (nfd, nt)).into_owned();
        let a_ff = a.view((nt, nt), (nfd, nfd)).into_owned();
        let chol = a_tt.cholesky().ok_or_else(|| Error::Singular {
            reason: "element-element block of a_T is not positive definite".into(),
            lambda_min_estimate: None,
        })?;
        let lift = -chol.solve(&a_tf);
        let mut schur = a_ff + &a_ft * &lift;
        symmetrize(&mut schur);
        Ok(Self {
            schur,
            lift,
            a_tt: chol,
            a_ft,
        })
    }

    /// `g_T = A_TT^-1 (f, phi)_T` and the face load contribution `-A_FT g_T`.
    pub fn load(&self, element_rhs: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let g = self.a_tt.solve(element_rhs);
        let face = -(&self.a_ft * &g);
        (g, face)
    }

    /// Element unknowns from face unknowns: `u_T = lift u_dT + g_T`.
    pub fn recover(&self, faces: &DVector<f64>, g: &DVector<f64>) -> DVector<f64> {
        &self.lift * faces + g
    }
}
