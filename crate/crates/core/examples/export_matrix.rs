//! Write a mesh in POLYMESH2D format, read it back, and export the condensed
//! matrix in Matrix Market format together with the face solution.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use polyhho::assembly::{solve, write_solution_csv, Discretization, SolveOptions};
use polyhho::factory::{coarsen, triangular_mesh};
use polyhho::local::HhoConfig;
use polyhho::mesh::io::{read_polymesh, write_polymesh};

fn main() -> polyhho::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let mesh_path = dir.join("coarsened.polymesh");
    write_polymesh(&coarsen(&triangular_mesh(8)?, 2)?, BufWriter::new(File::create(&mesh_path)?))?;
    let mesh = read_polymesh(BufReader::new(File::open(&mesh_path)?))?;

    let disc = Discretization::new(&mesh, HhoConfig::new(1))?;
    let system = disc.assemble_condensed(&|_| 1.0)?;
    let mtx = dir.join("condensed.mtx");
    system.matrix.write_matrix_market(BufWriter::new(File::create(&mtx)?))?;

    let u = solve(&system, SolveOptions::default())?;
    let csv = dir.join("faces.csv");
    write_solution_csv(&system, &u, BufWriter::new(File::create(&csv)?))?;

    println!("{} elements, {} face unknowns", mesh.num_elements(), system.num_dofs());
    for p in [&mesh_path, &mtx, &csv] {
        println!("wrote {}", p.display());
    }
    Ok(())
}
