//! Extreme eigenvalues of the condensed system on a coarsened mesh family,
//! next to the characteristic lengths that bound them.

use polyhho::assembly::Discretization;
use polyhho::factory::{coarsen, triangular_mesh};
use polyhho::local::HhoConfig;
use polyhho::spectral::{spectral_report, EigenOptions};
use polyhho::MeshMetrics;

fn main() -> polyhho::Result<()> {
    let fine = triangular_mesh(32)?;
    let k = 1;
    println!(
        "{:>5} {:>6} {:>6} {:>9} {:>9} {:>10} {:>10} {:>10} {:>10}",
        "level", "cells", "N", "H_min", "H_max", "lambda_min", "lambda_max", "kappa", "method"
    );
    for level in 1..=4 {
        let mesh = coarsen(&fine, level)?;
        let metrics = MeshMetrics::compute(&mesh);
        let disc = Discretization::new(&mesh, HhoConfig::new(k))?;
        let system = disc.assemble_condensed(&|_| 1.0)?;
        let r = spectral_report(&system, &mesh, &metrics, &EigenOptions::default())?;
        println!(
            "{level:>5} {:>6} {:>6} {:>9.4} {:>9.4} {:>10.4} {:>10.2} {:>10.2} {:>10?}",
            mesh.num_elements(),
            r.num_dofs,
            r.h_min,
            r.h_max,
            r.lambda_min,
            r.lambda_max,
            r.kappa,
            r.method
        );
    }
    Ok(())
}
