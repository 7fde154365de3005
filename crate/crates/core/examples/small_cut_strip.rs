//! A background grid whose last column is cut to width eps. Without
//! aggregation lambda_max grows like 1/eps; with it the spectrum is flat.

use polyhho::assembly::Discretization;
use polyhho::factory::{aggregate, cut_strip_mesh, AggregationParams};
use polyhho::local::HhoConfig;
use polyhho::spectral::{extreme_eigenvalues, EigenOptions};
use polyhho::PolyMesh;

fn extremes(mesh: &PolyMesh) -> polyhho::Result<(f64, f64)> {
    let disc = Discretization::new(mesh, HhoConfig::new(1))?;
    let sys = disc.assemble_condensed(&|_| 1.0)?;
    let e = extreme_eigenvalues(&sys.matrix, &EigenOptions::default())?;
    Ok((e.lambda_min, e.lambda_max))
}

fn main() -> polyhho::Result<()> {
    println!("{:>8} {:>10} {:>12} {:>10} {:>12}", "eps", "min", "max", "min(agg)", "max(agg)");
    for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let (cut, _) = cut_strip_mesh(8, eps)?;
        let (agg, _) = aggregate(&cut, AggregationParams::default())?;
        let (a, b) = extremes(&cut.mesh)?;
        let (c, d) = extremes(&agg.mesh)?;
        println!("{eps:>8.0e} {a:>10.4} {b:>12.1} {c:>10.4} {d:>12.1}");
    }
    Ok(())
}
