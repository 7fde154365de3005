use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyhho::basis::PolyBasis;
use polyhho::local::{
    ElementContext, FaceData, FaceScaling, HhoConfig, LocalCondensation, LocalOperators, Stabilization,
};
use polyhho::quadrature::{polygon_quadrature, segment_quadrature};
use polyhho::{Point, PolyMesh};

fn single(poly: Vec<Point>) -> PolyMesh {
    let n = poly.len();
    PolyMesh::new(poly, vec![(0..n).collect()]).unwrap()
}

fn unit_square() -> PolyMesh {
    single(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ])
}

fn pentagon() -> PolyMesh {
    single(vec![
        Point::new(0.1, 0.0),
        Point::new(1.0, 0.2),
        Point::new(1.2, 0.9),
        Point::new(0.5, 1.3),
        Point::new(-0.1, 0.7),
    ])
}

fn setup(mesh: &PolyMesh, cfg: &HhoConfig) -> (ElementContext, LocalOperators) {
    let fd = FaceData::build_all(mesh, cfg).unwrap();
    let ctx = ElementContext::new(mesh, 0, &fd, cfg).unwrap();
    let ops = LocalOperators::build(&ctx, cfg.stabilization, FaceScaling::Element).unwrap();
    (ctx, ops)
}

fn variants(k: usize) -> Vec<(usize, Stabilization)> {
    let mut v = vec![
        (k, Stabilization::Main),
        (k, Stabilization::Gradient),
        (k, Stabilization::Boundary),
        (k + 1, Stabilization::Hdg),
    ];
    if k > 0 {
        v.push((k - 1, Stabilization::KMinus1));
    }
    v
}

#[test]
fn unit_square_face_only_vector_by_hand() {
    // v_T = 0, v_F = 1: the reconstruction is 0, so delta_F = -1 on every face
    // and a_T(v, v) = 4 / h_T.
    let m = unit_square();
    let cfg = HhoConfig::new(0);
    let (ctx, ops) = setup(&m, &cfg);
    let mut v = DVector::zeros(ctx.local_dim());
    for i in 0..4 {
        v[ctx.face_offset(i)] = 1.0;
    }
    let p = &ops.reconstruction * &v;
    assert!(p.amax() < 1e-14);
    for d in &ops.delta_faces {
        let dv = d * &v;
        assert!((dv[0].abs() - 1.0).abs() < 1e-14);
    }
    let expect = 4.0 / 2f64.sqrt();
    let s = v.dot(&(&ops.stabilization * &v));
    assert!((s - expect).abs() < 1e-13, "{s}");
    assert!((v.dot(&(&ops.bilinear * &v)) - expect).abs() < 1e-13);
}

#[test]
fn interpolate_x_squared_gives_linear_face_fits() {
    let m = unit_square();
    let cfg = HhoConfig::new(1);
    let fd = FaceData::build_all(&m, &cfg).unwrap();
    let ctx = ElementContext::new(&m, 0, &fd, &cfg).unwrap();
    let iv = ctx.interpolate(|p| p.x * p.x);
    for (i, f) in ctx.faces.iter().enumerate() {
        let (a, b) = (f.data.a, f.data.b);
        // L2 fit of x^2 along the face, in closed form
        let fit = |p: &Point| -> f64 {
            if (a.x - b.x).abs() < 1e-14 {
                a.x * a.x
            } else {
                p.x - 1.0 / 6.0
            }
        };
        let rule = segment_quadrature(&a, &b, 6).unwrap();
        let vals = f.data.basis.values_at(&rule.points);
        let c = iv.rows(ctx.face_offset(i), 2);
        for (q, p) in rule.points.iter().enumerate() {
            let got = (vals.row(q) * c)[0];
            assert!((got - fit(p)).abs() < 1e-13, "face {i}");
        }
    }
}

#[test]
fn reconstruction_and_stabilisation_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for mesh in [unit_square(), pentagon()] {
        for k in 0..=4 {
            for (l, stab) in variants(k) {
                let cfg = HhoConfig::new(k).with_l(l).unwrap().with_stabilization(stab);
                let (ctx, ops) = setup(&mesh, &cfg);
                for _ in 0..20 {
                    let c: Vec<f64> = (0..ctx.basis.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let iw = ctx.interpolate(|p| ctx.basis.eval_combination(&c, p));
                    let p = &ops.reconstruction * &iw;
                    let cv = DVector::from_vec(c.clone());
                    // orthonormal basis: coefficient error is the L2 error
                    assert!((&p - &cv).norm() <= 1e-9 * cv.norm(), "{stab} k={k}");
                    let sv = &ops.stabilization * &iw;
                    assert!(sv.norm() <= 1e-9 * ops.stabilization.norm() * iw.norm());
                    assert!((&ops.delta_element * &iw).amax() < 1e-10);
                }
                let zero = DVector::zeros(ctx.local_dim());
                assert_eq!((&ops.reconstruction * &zero).amax(), 0.0);
            }
        }
    }
}

#[test]
fn local_forms_are_symmetric_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for mesh in [unit_square(), pentagon()] {
        for k in 0..=3 {
            for (l, stab) in variants(k) {
                let cfg = HhoConfig::new(k).with_l(l).unwrap().with_stabilization(stab);
                let (ctx, ops) = setup(&mesh, &cfg);
                let a = &ops.bilinear;
                assert!((a - a.transpose()).amax() <= 1e-13 * a.amax());
                let s = &ops.stabilization;
                let ev = s.clone().symmetric_eigenvalues();
                assert!(ev.min() >= -1e-12 * ev.max(), "{stab} k={k}");
                for _ in 0..100 {
                    let v = DVector::from_fn(ctx.local_dim(), |_, _| rng.gen_range(-1.0..1.0));
                    assert!(v.dot(&(a * &v)) >= -1e-12 * a.amax() * v.norm_squared());
                }
            }
        }
    }
}

/// `|grad v_T|^2 + sum_F h_T^-1 ||v_F - v_T||_F^2` by independent quadrature.
fn seminorm_oracle(ctx: &ElementContext, v: &DVector<f64>) -> f64 {
    let nt = ctx.element_dim();
    let mut c = vec![0.0; ctx.basis.dim()];
    c[..nt].copy_from_slice(v.rows(0, nt).as_slice());
    let rule = polygon_quadrature(&ctx.polygon, 12).unwrap();
    let mut total: f64 = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(p, w)| w * ctx.basis.grad_combination(&c, p).norm_squared())
        .sum();
    for (i, f) in ctx.faces.iter().enumerate() {
        let r = segment_quadrature(&f.data.a, &f.data.b, 12).unwrap();
        let vals = f.data.basis.values_at(&r.points);
        let vf = v.rows(ctx.face_offset(i), ctx.face_dim());
        for (q, p) in r.points.iter().enumerate() {
            let d = (vals.row(q) * vf)[0] - ctx.basis.eval_combination(&c, p);
            total += r.weights[q] * d * d / ctx.diameter;
        }
    }
    total.sqrt()
}

#[test]
fn seminorm_matches_direct_integration_and_bounds_the_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for mesh in [unit_square(), pentagon()] {
        for k in 0..=3 {
            let cfg = HhoConfig::new(k);
            let (ctx, ops) = setup(&mesh, &cfg);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for _ in 0..50 {
                let v = DVector::from_fn(ctx.local_dim(), |_, _| rng.gen_range(-1.0..1.0));
                let s = ctx.seminorm(&v);
                let o = seminorm_oracle(&ctx, &v);
                assert!((s - o).abs() <= 1e-12 * o, "{s} vs {o}");
                let ratio = v.dot(&(&ops.bilinear * &v)) / (s * s);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            assert!(lo > 1e-2 && hi < 1e2, "k={k}: [{lo}, {hi}]");
            assert!(ctx.seminorm(&ctx.interpolate(|_| 2.5)) < 1e-12);
        }
    }
}

#[test]
fn single_element_condensation_has_constant_kernel() {
    for k in 0..=3 {
        let m = pentagon();
        let cfg = HhoConfig::new(k);
        let (ctx, ops) = setup(&m, &cfg);
        let nt = ctx.element_dim();
        let cond = LocalCondensation::new(&ops.bilinear, nt).unwrap();
        let mut ev: Vec<f64> = cond.schur.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let scale = ev[ev.len() - 1];
        assert!(ev[0].abs() < 1e-11 * scale);
        assert!(ev[1] > 1e-8 * scale);

        // dense block elimination oracle
        let a = &ops.bilinear;
        let n = a.nrows();
        let att = a.view((0, 0), (nt, nt)).into_owned();
        let atf = a.view((0, nt), (nt, n - nt)).into_owned();
        let aff = a.view((nt, nt), (n - nt, n - nt)).into_owned();
        let oracle: DMatrix<f64> = &aff - atf.transpose() * att.try_inverse().unwrap() * &atf;
        assert!((&oracle - &cond.schur).amax() <= 1e-11 * oracle.amax());

        // homogeneous load: u_T is the lift of the face values
        let faces = DVector::from_fn(n - nt, |i, _| (i as f64 * 0.37).sin());
        let (g, _) = cond.load(&DVector::zeros(nt));
        let ut = cond.recover(&faces, &g);
        assert!((&ut - &cond.lift * &faces).amax() < 1e-14);
    }
}
