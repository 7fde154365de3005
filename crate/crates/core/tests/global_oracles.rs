use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyhho::assembly::{eliminate_element_dofs, solve, solve_spd, Discretization, SolveOptions};
use polyhho::basis::BasisMode;
use polyhho::experiment::{manufactured_solution, manufactured_source};
use polyhho::factory::{cartesian_mesh, cut_strip_mesh, triangular_mesh};
use polyhho::local::{HhoConfig, Stabilization};
use polyhho::sparse::CsrMatrix;
use polyhho::spectral::{
    dense_eigenvalues, extreme_eigenvalues, spectral_report, EigenMethod, EigenOptions,
};
use polyhho::{Error, MeshMetrics, Point, PolyMesh};

fn f(p: &Point) -> f64 {
    1.0 + p.x * p.y
}

#[test]
fn two_by_two_grid_k0() {
    let mesh = cartesian_mesh(2).unwrap();
    let disc = Discretization::new(&mesh, HhoConfig::new(0)).unwrap();
    let sys = disc.assemble_condensed(&f).unwrap();
    assert_eq!(sys.num_dofs(), 4);
    let a = sys.matrix.to_dense();
    assert!((&a - a.transpose()).amax() < 1e-14);
    let oracle = eliminate_element_dofs(&disc.assemble_full(&f).unwrap());
    assert!((&a - &oracle).amax() <= 1e-11 * a.amax());

    let ev = a.clone().symmetric_eigenvalues();
    assert!(ev.min() > 0.0);
    let e = extreme_eigenvalues(&sys.matrix, &EigenOptions::default()).unwrap();
    assert!((e.lambda_min - ev.min()).abs() <= 1e-9 * ev.min());
    assert!((e.lambda_max - ev.max()).abs() <= 1e-9 * ev.max());
}

#[test]
fn single_element_mesh_has_no_system() {
    let mesh = cartesian_mesh(1).unwrap();
    let disc = Discretization::new(&mesh, HhoConfig::new(1)).unwrap();
    assert!(matches!(disc.assemble_condensed(&f), Err(Error::EmptySystem)));
}

#[test]
fn full_system_dimension_and_recovery() {
    let mesh = triangular_mesh(4).unwrap();
    for k in 0..=2 {
        let disc = Discretization::new(&mesh, HhoConfig::new(k)).unwrap();
        let full = disc.assemble_full(&f).unwrap();
        let nt = (k + 1) * (k + 2) / 2;
        assert_eq!(full.matrix.nrows(), nt * mesh.num_elements() + (k + 1) * mesh.num_internal_faces());
        assert!(full.matrix.asymmetry() < 1e-13 * full.matrix.max_abs());

        let sys = disc.assemble_condensed(&f).unwrap();
        let u = solve(&sys, SolveOptions::default()).unwrap();
        let sol = disc.recover(&sys, &u);
        assert!(disc.element_residual(&sol, &f) <= 1e-10);

        let w = solve_spd(&full.matrix, &full.rhs, SolveOptions::default()).unwrap();
        for (e, ut) in sol.elements.iter().enumerate() {
            let we = w.rows(e * nt, nt);
            assert!((ut - we).amax() <= 1e-10 * w.amax());
        }
    }
}

#[test]
fn solve_zero_load_and_consistency() {
    let mesh = triangular_mesh(6).unwrap();
    let disc = Discretization::new(&mesh, HhoConfig::new(1)).unwrap();
    let zero = disc.assemble_condensed(&|_| 0.0).unwrap();
    let u = solve(&zero, SolveOptions::default()).unwrap();
    assert_eq!(u.amax(), 0.0);
    let sol = disc.recover(&zero, &u);
    assert!(sol.elements.iter().all(|e| e.amax() == 0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = DVector::from_fn(zero.num_dofs(), |_, _| rng.gen_range(-1.0..1.0));
    let rhs = zero.matrix.mul_vec(&w);
    for threshold in [0, 100_000] {
        let opts = SolveOptions {
            dense_threshold: threshold,
        };
        let got = solve_spd(&zero.matrix, &rhs, opts).unwrap();
        assert!((&got - &w).norm() <= 1e-10 * w.norm());
    }
}

#[test]
fn energy_error_of_interpolant_and_refinement() {
    let mesh = cartesian_mesh(4).unwrap();
    let disc = Discretization::new(&mesh, HhoConfig::new(1)).unwrap();
    let iu = disc.interpolate(&manufactured_solution);
    assert!(disc.energy_error(&iu, &manufactured_solution) < 1e-13);

    let mut prev = f64::INFINITY;
    for n in [2, 4, 8, 16] {
        let mesh = cartesian_mesh(n).unwrap();
        let disc = Discretization::new(&mesh, HhoConfig::new(1)).unwrap();
        let sys = disc.assemble_condensed(&manufactured_source).unwrap();
        let u = solve(&sys, SolveOptions::default()).unwrap();
        let e = disc.energy_error(&disc.recover(&sys, &u), &manufactured_solution);
        assert!(e >= 0.0 && e < prev);
        prev = e;
    }
}

#[test]
fn rayleigh_sandwich_constants_are_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let k = 1;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for n in [4, 8, 16, 32] {
        let mesh = cartesian_mesh(n).unwrap();
        let metrics = MeshMetrics::compute(&mesh);
        let disc = Discretization::new(&mesh, HhoConfig::new(k)).unwrap();
        let sys = disc.assemble_condensed(&f).unwrap();
        let r = spectral_report(&sys, &mesh, &metrics, &EigenOptions::default()).unwrap();
        assert_eq!(r.kappa, r.lambda_max / r.lambda_min);
        for _ in 0..200 {
            let u = DVector::from_fn(sys.num_dofs(), |_, _| rng.gen_range(-1.0..1.0));
            let q = u.dot(&sys.matrix.mul_vec(&u)) / u.norm_squared();
            assert!(q >= r.ratio_min * r.h_min * (1.0 - 1e-10));
            assert!(q <= r.ratio_max * (k as f64 + 1.0).powi(2) / r.h_max * (1.0 + 1e-10));
        }
        lower.push(r.ratio_min);
        upper.push(r.ratio_max);
    }
    for c in [&lower, &upper] {
        let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        assert!(hi / lo <= 1.25 / 0.75, "{c:?}");
    }
}

#[test]
fn assembly_is_deterministic() {
    let mesh = triangular_mesh(8).unwrap();
    let a = Discretization::new(&mesh, HhoConfig::new(2)).unwrap().assemble_condensed(&f).unwrap();
    let b = Discretization::new(&mesh, HhoConfig::new(2)).unwrap().assemble_condensed(&f).unwrap();
    assert_eq!(a.matrix.values(), b.matrix.values());
    assert_eq!(a.rhs, b.rhs);
}

#[test]
fn matrix_market_round_trip() {
    let mesh = cartesian_mesh(3).unwrap();
    let disc = Discretization::new(&mesh, HhoConfig::new(1)).unwrap();
    let sys = disc.assemble_condensed(&f).unwrap();
    let mut buf = Vec::new();
    sys.matrix.write_matrix_market(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    let dims: Vec<usize> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    let n = sys.num_dofs();
    assert_eq!(&dims[..2], &[n, n]);
    let mut t = Vec::new();
    for l in lines {
        let p: Vec<&str> = l.split_whitespace().collect();
        let (i, j, v): (usize, usize, f64) = (p[0].parse().unwrap(), p[1].parse().unwrap(), p[2].parse().unwrap());
        assert!(i >= j);
        t.push((i - 1, j - 1, v));
        if i != j {
            t.push((j - 1, i - 1, v));
        }
    }
    assert_eq!(dims[2], t.iter().filter(|(i, j, _)| i >= j).count());
    let back = CsrMatrix::from_triplets(n, t);
    assert!((back.to_dense() - sys.matrix.to_dense()).amax() <= 1e-15 * sys.matrix.max_abs());
}

#[test]
fn lanczos_agrees_with_dense_on_a_cut_mesh() {
    let (cm, _) = cut_strip_mesh(16, 1e-3).unwrap();
    let disc = Discretization::new(&cm.mesh, HhoConfig::new(1)).unwrap();
    let sys = disc.assemble_condensed(&f).unwrap();
    let opts = EigenOptions {
        dense_threshold: 0,
        ..Default::default()
    };
    let it = extreme_eigenvalues(&sys.matrix, &opts).unwrap();
    assert_eq!(it.method, EigenMethod::Lanczos);
    let all = dense_eigenvalues(&sys.matrix.to_dense());
    assert!((it.lambda_min - all[0]).abs() <= 1e-7 * all[0]);
    assert!((it.lambda_max - all[all.len() - 1]).abs() <= 1e-7 * all[all.len() - 1]);
    assert!(it.residual_min <= 1e-8 && it.residual_max <= 1e-8);
}

fn kappa(mesh: &PolyMesh, basis: BasisMode) -> f64 {
    let cfg = HhoConfig::new(1)
        .with_stabilization(Stabilization::Main)
        .with_basis_mode(basis);
    let disc = Discretization::new(mesh, cfg).unwrap();
    let sys = disc.assemble_condensed(&f).unwrap();
    extreme_eigenvalues(&sys.matrix, &EigenOptions::default()).unwrap().condition()
}

#[test]
fn raw_face_bases_degrade_conditioning_on_small_faces() {
    // the cut column has horizontal faces 1000x shorter than their neighbours
    let n = 8;
    let (cm, _) = cut_strip_mesh(n, 1e-3 / n as f64).unwrap();
    let ortho = kappa(&cm.mesh, BasisMode::Orthonormal);
    let raw = kappa(&cm.mesh, BasisMode::Raw);
    assert!(raw >= 10.0 * ortho, "raw {raw:e}, orthonormal {ortho:e}");
}
