//! Solve -Δu = f on the unit square and report the energy error.
//!
//! cargo run --release --example poisson_cartesian -- 16 1

use polyhho::assembly::{solve, Discretization, SolveOptions};
use polyhho::experiment::{manufactured_solution, manufactured_source};
use polyhho::factory::cartesian_mesh;
use polyhho::local::HhoConfig;

fn main() -> polyhho::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(16);
    let k = args.get(1).copied().unwrap_or(1);

    let mesh = cartesian_mesh(n)?;
    let disc = Discretization::new(&mesh, HhoConfig::new(k))?;
    let system = disc.assemble_condensed(&manufactured_source)?;
    let u = solve(&system, SolveOptions::default())?;
    let sol = disc.recover(&system, &u);

    println!("n = {n}, k = {k}");
    println!("face unknowns:  {}", system.num_dofs());
    println!("nonzeros:       {}", system.matrix.nnz());
    println!("energy error:   {:.6e}", disc.energy_error(&sol, &manufactured_solution));
    println!("energy norm:    {:.6e}", disc.energy_norm(&sol));
    Ok(())
}
