//! Penta-diagonal meshes: a band of small squares between two large
//! staircase elements. lambda_max grows like 1/h_min while lambda_min levels
//! off, so kappa eventually grows only like 1/h_min.

use polyhho::assembly::Discretization;
use polyhho::factory::penta_diagonal_mesh;
use polyhho::local::HhoConfig;
use polyhho::spectral::{extreme_eigenvalues, EigenOptions};
use polyhho::MeshMetrics;

fn main() -> polyhho::Result<()> {
    println!("{:>5} {:>6} {:>9} {:>10} {:>10} {:>10}", "n", "cells", "1/h_min", "lambda_min", "lambda_max", "kappa");
    for n in [8, 16, 32, 64, 128] {
        let mesh = penta_diagonal_mesh(n)?;
        let m = MeshMetrics::compute(&mesh);
        let disc = Discretization::new(&mesh, HhoConfig::new(0))?;
        let sys = disc.assemble_condensed(&|_| 1.0)?;
        let e = extreme_eigenvalues(&sys.matrix, &EigenOptions::default())?;
        println!(
            "{n:>5} {:>6} {:>9.1} {:>10.4} {:>10.2} {:>10.1}",
            mesh.num_elements(),
            1.0 / m.h_min,
            e.lambda_min,
            e.lambda_max,
            e.condition()
        );
    }
    Ok(())
}
