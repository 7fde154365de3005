//! Global face numbering, condensed and full system assembly, linear solve
//! and recovery of element unknowns.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::local::{ElementContext, FaceData, HhoConfig, LocalCondensation, LocalOperators};
use crate::mesh::{Point, PolyMesh};
use crate::sparse::{CsrMatrix, EnvelopeCholesky};

/// Source or exact-solution callback.
pub type ScalarFn<'a> = &'a (dyn Fn(&Point) -> f64 + Sync);

/// Numbering of face unknowns. Only internal faces carry unknowns; offsets
/// follow the face index order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofMap {
    offsets: Vec<Option<usize>>,
    block: usize,
    n: usize,
}

impl DofMap {
    pub fn new(mesh: &PolyMesh, k: usize) -> Self {
        let block = k + 1;
        let mut n = 0;
        let offsets = (0..mesh.num_faces())
            .map(|f| {
                if mesh.is_boundary_face(f) {
                    None
                } else {
                    n += block;
                    Some(n - block)
                }
            })
            .collect();
        Self { offsets, block, n }
    }

    pub fn offset(&self, face: usize) -> Option<usize> {
        self.offsets[face]
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn num_dofs(&self) -> usize {
        self.n
    }

    pub fn num_internal_faces(&self) -> usize {
        self.n / self.block
    }
}

/// Local data of one element: geometry, operators and condensation.
#[derive(Clone, Debug)]
pub struct ElementPack {
    pub context: ElementContext,
    pub operators: LocalOperators,
    pub condensation: LocalCondensation,
}

/// Symmetric condensed face system `A_h U = F`.
#[derive(Clone, Debug)]
pub struct CondensedSystem {
    pub matrix: CsrMatrix,
    pub rhs: DVector<f64>,
    pub dofmap: DofMap,
    pub config: HhoConfig,
    /// `g_T` per element.
    pub element_lifts: Vec<DVector<f64>>,
}

impl CondensedSystem {
    pub fn num_dofs(&self) -> usize {
        self.dofmap.num_dofs()
    }
}

/// Uncondensed system over element and internal-face unknowns. Element blocks
/// come first, in element order, followed by the face unknowns of the
/// [`DofMap`].
#[derive(Clone, Debug)]
pub struct FullSystem {
    pub matrix: CsrMatrix,
    pub rhs: DVector<f64>,
    pub num_element_dofs: usize,
}

/// Discrete solution in local coefficients.
#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    /// Per face, zero on boundary faces.
    pub faces: Vec<DVector<f64>>,
    /// Per element, in the orthonormal basis of `P^l(T)`.
    pub elements: Vec<DVector<f64>>,
    /// Per element, coefficients of `p_T u` in the degree-`k+1` basis.
    pub reconstruction: Vec<DVector<f64>>,
}

/// The HHO discretisation of a mesh: all element packs and the face numbering.
pub struct Discretization<'m> {
    mesh: &'m PolyMesh,
    config: HhoConfig,
    packs: Vec<ElementPack>,
    dofmap: DofMap,
}

impl<'m> Discretization<'m> {
    /// Builds every element pack in parallel.
    pub fn new(mesh: &'m PolyMesh, config: HhoConfig) -> Result<Self> {
        config.validate()?;
        let faces = FaceData::build_all(mesh, &config)?;
        let packs = (0..mesh.num_elements())
            .into_par_iter()
            .map(|e| {
                let context = ElementContext::new(mesh, e, &faces, &config)?;
                let operators =
                    LocalOperators::build(&context, config.stabilization, config.face_scaling)?;
                let condensation =
                    LocalCondensation::new(&operators.bilinear, context.element_dim())?;
                Ok(ElementPack {
                    context,
                    operators,
                    condensation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dofmap = DofMap::new(mesh, config.space.k);
        Ok(Self {
            mesh,
            config,
            packs,
            dofmap,
        })
    }

    pub fn mesh(&self) -> &PolyMesh {
        self.mesh
    }

    pub fn config(&self) -> &HhoConfig {
        &self.config
    }

    pub fn packs(&self) -> &[ElementPack] {
        &self.packs
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    /// Global offsets of the local face blocks of element `e` (`None` on the
    /// boundary).
    fn face_offsets(&self, e: usize) -> Vec<Option<usize>> {
        self.packs[e]
            .context
            .faces
            .iter()
            .map(|lf| self.dofmap.offset(lf.face))
            .collect()
    }

    pub fn assemble_condensed(&self, f: ScalarFn) -> Result<CondensedSystem> {
        let n = self.dofmap.num_dofs();
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        let nb = self.dofmap.block_size();
        let local: Vec<(DVector<f64>, DVector<f64>)> = self
            .packs
            .par_iter()
            .map(|p| p.condensation.load(&p.context.load(f)))
            .collect();

        let mut triplets = Vec::new();
        let mut rhs = DVector::zeros(n);
        let mut lifts = Vec::with_capacity(self.packs.len());
        for (e, (pack, (g, face_load))) in self.packs.iter().zip(local).enumerate() {
            let offs = self.face_offsets(e);
            let schur = &pack.condensation.schur;
            for (i, oi) in offs.iter().enumerate() {
                let Some(oi) = oi else { continue };
                for a in 0..nb {
                    rhs[oi + a] += face_load[i * nb + a];
                }
                for (j, oj) in offs.iter().enumerate() {
                    let Some(oj) = oj else { continue };
                    for a in 0..nb {
                        for b in 0..nb {
                            triplets.push((oi + a, oj + b, schur[(i * nb + a, j * nb + b)]));
                        }
                    }
                }
            }
            lifts.push(g);
        }
        Ok(CondensedSystem {
            matrix: CsrMatrix::from_triplets(n, triplets),
            rhs,
            dofmap: self.dofmap.clone(),
            config: self.config.clone(),
            element_lifts: lifts,
        })
    }

    pub fn assemble_full(&self, f: ScalarFn) -> Result<FullSystem> {
        let nf = self.dofmap.num_dofs();
        if nf == 0 {
            return Err(Error::EmptySystem);
        }
        let nt = self.config.space.element_dim();
        let ne = nt * self.packs.len();
        let nb = self.dofmap.block_size();
        let n = ne + nf;
        let mut triplets = Vec::new();
        let mut rhs = DVector::zeros(n);
        for (e, pack) in self.packs.iter().enumerate() {
            let mut map: Vec<Option<usize>> = (0..nt).map(|j| Some(e * nt + j)).collect();
            for o in self.face_offsets(e) {
                for a in 0..nb {
                    map.push(o.map(|o| ne + o + a));
                }
            }
            let a = &pack.operators.bilinear;
            for (i, gi) in map.iter().enumerate() {
                let Some(gi) = gi else { continue };
                for (j, gj) in map.iter().enumerate() {
                    let Some(gj) = gj else { continue };
                    triplets.push((*gi, *gj, a[(i, j)]));
                }
            }
            let b = pack.context.load(f);
            rhs.rows_mut(e * nt, nt).copy_from(&b);
        }
        Ok(FullSystem {
            matrix: CsrMatrix::from_triplets(n, triplets),
            rhs,
            num_element_dofs: ne,
        })
    }

    /// Element unknowns and reconstructions from the face solution.
    pub fn recover(&self, system: &CondensedSystem, u: &DVector<f64>) -> DiscreteSolution {
        let nb = self.dofmap.block_size();
        let faces: Vec<DVector<f64>> = (0..self.mesh.num_faces())
            .map(|f| match self.dofmap.offset(f) {
                Some(o) => u.rows(o, nb).into_owned(),
                None => DVector::zeros(nb),
            })
            .collect();
        let (elements, reconstruction): (Vec<_>, Vec<_>) = self
            .packs
            .par_iter()
            .enumerate()
            .map(|(e, pack)| {
                let ub = self.local_face_vector(e, &faces);
                let ut = pack.condensation.recover(&ub, &system.element_lifts[e]);
                let local = self.join(&ut, &ub);
                (ut, &pack.operators.reconstruction * local)
            })
            .unzip();
        DiscreteSolution {
            faces,
            elements,
            reconstruction,
        }
    }

    fn local_face_vector(&self, e: usize, faces: &[DVector<f64>]) -> DVector<f64> {
        let nb = self.dofmap.block_size();
        let lfs = &self.packs[e].context.faces;
        let mut v = DVector::zeros(lfs.len() * nb);
        for (i, lf) in lfs.iter().enumerate() {
            v.rows_mut(i * nb, nb).copy_from(&faces[lf.face]);
        }
        v
    }

    fn join(&self, ut: &DVector<f64>, ub: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(ut.len() + ub.len());
        v.rows_mut(0, ut.len()).copy_from(ut);
        v.rows_mut(ut.len(), ub.len()).copy_from(ub);
        v
    }

    /// Local unknown vector of element `e` from a solution.
    pub fn local_vector(&self, e: usize, sol: &DiscreteSolution) -> DVector<f64> {
        self.join(&sol.elements[e], &self.local_face_vector(e, &sol.faces))
    }

    /// `I_h u`: element and face projections of `u` (boundary faces included).
    pub fn interpolate(&self, u: ScalarFn) -> DiscreteSolution {
        let nt = self.config.space.element_dim();
        let nb = self.dofmap.block_size();
        let mut faces = vec![DVector::zeros(nb); self.mesh.num_faces()];
        let mut elements = Vec::with_capacity(self.packs.len());
        let mut reconstruction = Vec::with_capacity(self.packs.len());
        for pack in &self.packs {
            let v = pack.context.interpolate(u);
            for (i, lf) in pack.context.faces.iter().enumerate() {
                faces[lf.face] = v.rows(pack.context.face_offset(i), nb).into_owned();
            }
            elements.push(v.rows(0, nt).into_owned());
            reconstruction.push(&pack.operators.reconstruction * v);
        }
        DiscreteSolution {
            faces,
            elements,
            reconstruction,
        }
    }

    /// `a_h(v, v)^(1/2)`.
    pub fn energy_norm(&self, sol: &DiscreteSolution) -> f64 {
        let s: f64 = (0..self.packs.len())
            .map(|e| {
                let v = self.local_vector(e, sol);
                v.dot(&(&self.packs[e].operators.bilinear * &v))
            })
            .sum();
        s.max(0.0).sqrt()
    }

    /// `a_h(u_h - I_h u, u_h - I_h u)^(1/2)`.
    pub fn energy_error(&self, sol: &DiscreteSolution, exact: ScalarFn) -> f64 {
        let iu = self.interpolate(exact);
        let diff = DiscreteSolution {
            faces: sol.faces.iter().zip(&iu.faces).map(|(a, b)| a - b).collect(),
            elements: sol.elements.iter().zip(&iu.elements).map(|(a, b)| a - b).collect(),
            reconstruction: Vec::new(),
        };
        self.energy_norm(&diff)
    }

    /// Residual of the element equations `a_T((u_T, u_dT), (v_T, 0)) - (f, v_T)`,
    /// maximum over elements relative to the load.
    pub fn element_residual(&self, sol: &DiscreteSolution, f: ScalarFn) -> f64 {
        let nt = self.config.space.element_dim();
        let mut worst = 0.0f64;
        for (e, pack) in self.packs.iter().enumerate() {
            let v = self.local_vector(e, sol);
            let a = &pack.operators.bilinear;
            let r = a.rows(0, nt) * &v - pack.context.load(f);
            let scale = (a.rows(0, nt).abs() * v.abs()).amax().max(1e-300);
            worst = worst.max(r.amax() / scale);
        }
        worst
    }
}

/// Linear solver choice by size.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Dense Cholesky up to this many unknowns, envelope Cholesky above.
    pub dense_threshold: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 2000,
        }
    }
}

/// Symmetric positive definite solver for a sparse matrix.
pub enum SpdSolver {
    Dense(faer::linalg::solvers::Llt<f64>),
    Envelope(EnvelopeCholesky),
}

impl SpdSolver {
    pub fn factor(a: &CsrMatrix, opts: SolveOptions) -> Result<Self> {
        if a.nrows() <= opts.dense_threshold {
            let m = to_faer(a);
            m.llt(faer::Side::Lower)
                .map(SpdSolver::Dense)
                .map_err(|_| Error::Singular {
                    reason: "dense Cholesky failed: matrix is not positive definite".into(),
                    lambda_min_estimate: None,
                })
        } else {
            EnvelopeCholesky::factor(a).map(SpdSolver::Envelope)
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdSolver::Dense(llt) => {
                use faer::linalg::solvers::Solve;
                let rhs = faer::Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
                let x = llt.solve(&rhs);
                DVector::from_fn(b.len(), |i, _| x[(i, 0)])
            }
            SpdSolver::Envelope(c) => c.solve(b),
        }
    }
}

/// Dense kernels run sequentially so results do not depend on the size of
/// the surrounding thread pool.
pub(crate) fn sequential_dense() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

pub(crate) fn to_faer(a: &CsrMatrix) -> faer::Mat<f64> {
    sequential_dense();
    let n = a.nrows();
    let mut m = faer::Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let (c, v) = a.row(i);
        for (j, x) in c.iter().zip(v) {
            m[(i, *j)] = *x;
        }
    }
    m
}

/// Solves `A_h U = F` with up to two steps of iterative refinement and checks
/// `||A U - F|| <= 1e-10 ||F||`.
pub fn solve(system: &CondensedSystem, opts: SolveOptions) -> Result<DVector<f64>> {
    solve_spd(&system.matrix, &system.rhs, opts)
}

pub fn solve_spd(a: &CsrMatrix, rhs: &DVector<f64>, opts: SolveOptions) -> Result<DVector<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::EmptySystem);
    }
    let bnorm = rhs.norm();
    if bnorm == 0.0 {
        return Ok(DVector::zeros(n));
    }
    let solver = SpdSolver::factor(a, opts).map_err(|e| match e {
        Error::Singular { reason, .. } => Error::Singular {
            reason,
            lambda_min_estimate: estimate_lambda_min(a),
        },
        other => other,
    })?;
    let mut x = solver.solve(rhs);
    for _ in 0..2 {
        let r = rhs - a.mul_vec(&x);
        if r.norm() <= 1e-12 * bnorm {
            break;
        }
        x += solver.solve(&r);
    }
    let res = (rhs - a.mul_vec(&x)).norm();
    if !(res <= 1e-10 * bnorm) {
        return Err(Error::Singular {
            reason: format!("solve residual {:e} exceeds 1e-10 ||rhs||", res / bnorm),
            lambda_min_estimate: estimate_lambda_min(a),
        });
    }
    Ok(x)
}

fn estimate_lambda_min(a: &CsrMatrix) -> Option<f64> {
    if a.nrows() > 3000 {
        return None;
    }
    let m = to_faer(a);
    m.self_adjoint_eigenvalues(faer::Side::Lower)
        .ok()
        .and_then(|v| v.first().copied())
}

/// Writes `face,index,coefficient` rows for the internal faces.
pub fn write_solution_csv<W: Write>(
    system: &CondensedSystem,
    u: &DVector<f64>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "face,index,coefficient")?;
    let nb = system.dofmap.block_size();
    for f in 0..system.dofmap.offsets.len() {
        if let Some(o) = system.dofmap.offset(f) {
            for a in 0..nb {
                writeln!(out, "{f},{a},{:e}", u[o + a])?;
            }
        }
    }
    Ok(())
}

/// Dense Schur complement of the full system onto its face block.
pub fn eliminate_element_dofs(full: &FullSystem) -> DMatrix<f64> {
    let a = full.matrix.to_dense();
    let ne = full.num_element_dofs;
    let n = a.nrows();
    let att = a.view((0, 0), (ne, ne)).into_owned();
    let atf = a.view((0, ne), (ne, n - ne)).into_owned();
    let aft = a.view((ne, 0), (n - ne, ne)).into_owned();
    let aff = a.view((ne, ne), (n - ne, n - ne)).into_owned();
    let x = att.lu().solve(&atf).expect("element block is invertible");
    aff - aft * x
}
