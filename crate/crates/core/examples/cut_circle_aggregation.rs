//! Cut the unit disc out of a Cartesian background, aggregate ill-posed cut
//! elements and compare the conditioning before and after.
//!
//! Writes the cell classification and the merge plan as CSV to the directory
//! given as first argument (default: the system temp dir).

use std::fs::File;
use std::path::PathBuf;

use polyhho::assembly::Discretization;
use polyhho::factory::{aggregate, cut_circle_mesh, scan, AggregationMode, AggregationParams, CellStatus};
use polyhho::local::HhoConfig;
use polyhho::spectral::{extreme_eigenvalues, EigenOptions};
use polyhho::PolyMesh;

fn kappa(mesh: &PolyMesh) -> polyhho::Result<f64> {
    let disc = Discretization::new(mesh, HhoConfig::new(0))?;
    let sys = disc.assemble_condensed(&|_| 1.0)?;
    Ok(extreme_eigenvalues(&sys.matrix, &EigenOptions::default())?.condition())
}

fn main() -> polyhho::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let n = 32;
    let (cut, class) = cut_circle_mesh(n)?;
    println!(
        "background {n}x{n}: {} inside, {} cut, {} outside",
        class.count(CellStatus::Interior),
        class.count(CellStatus::Cut),
        class.count(CellStatus::Exterior)
    );
    class.write_csv(File::create(dir.join("circle_cells.csv"))?)?;

    let sliver = AggregationParams {
        mode: AggregationMode::Sliver,
        ..Default::default()
    };
    let full = AggregationParams::default();
    println!("ill-posed before: {}", scan(&cut, &full).len());

    let (a_sliver, _) = aggregate(&cut, sliver)?;
    let (a_full, plan) = aggregate(&cut, full)?;
    plan.write_csv(File::create(dir.join("circle_plan.csv"))?)?;
    println!("{} merges in {} passes", plan.steps.len(), plan.passes);

    for (name, mesh) in [("none", &cut.mesh), ("sliver", &a_sliver.mesh), ("full", &a_full.mesh)] {
        println!("{name:>7}: {:>5} elements, kappa = {:.1}", mesh.num_elements(), kappa(mesh)?);
    }
    Ok(())
}
