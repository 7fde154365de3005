//! Local HHO operators on a single pentagon: the reconstruction reproduces
//! polynomials of degree k+1 and every stabilisation vanishes on them.

use polyhho::local::{
    ElementContext, FaceData, FaceScaling, HhoConfig, LocalCondensation, LocalOperators, Stabilization,
};
use polyhho::{Point, PolyMesh};

fn main() -> polyhho::Result<()> {
    let poly = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.1),
        Point::new(1.2, 0.8),
        Point::new(0.5, 1.2),
        Point::new(-0.2, 0.6),
    ];
    let mesh = PolyMesh::new(poly, vec![vec![0, 1, 2, 3, 4]])?;
    let w = |p: &Point| 1.0 + p.x - 2.0 * p.y + p.x * p.y + 0.5 * p.x * p.x;

    println!("{:>9} {:>3} {:>3} {:>12} {:>12} {:>8}", "stab", "k", "l", "|p(Iw)-w|", "|S Iw|", "nullity");
    for k in 1..=3 {
        for stab in Stabilization::ALL {
            let l = match stab {
                Stabilization::KMinus1 => k - 1,
                Stabilization::Hdg => k + 1,
                _ => k,
            };
            let cfg = HhoConfig::new(k).with_l(l)?.with_stabilization(stab);
            let faces = FaceData::build_all(&mesh, &cfg)?;
            let ctx = ElementContext::new(&mesh, 0, &faces, &cfg)?;
            let ops = LocalOperators::build(&ctx, stab, FaceScaling::Element)?;

            let iw = ctx.interpolate(w);
            let p = &ops.reconstruction * &iw;
            let err = ctx
                .rule
                .points
                .iter()
                .map(|x| (ctx.basis.eval_combination(p.as_slice(), x) - w(x)).abs())
                .fold(0.0, f64::max);
            let s = (&ops.stabilization * &iw).amax();

            // a single element with all faces free: constants are the only kernel
            let cond = LocalCondensation::new(&ops.bilinear, ctx.element_dim())?;
            let ev = cond.schur.clone().symmetric_eigenvalues();
            let scale = ev.amax();
            let nullity = ev.iter().filter(|v| v.abs() < 1e-10 * scale).count();
            println!("{:>9} {k:>3} {l:>3} {err:>12.2e} {s:>12.2e} {nullity:>8}", stab.name());
        }
    }
    Ok(())
}
