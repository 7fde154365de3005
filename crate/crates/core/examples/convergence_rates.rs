//! Energy-error convergence rates for k = 0..3 through the experiment driver.

use polyhho::experiment::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> polyhho::Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Convergence);
    cfg.ks = vec![0, 1, 2, 3];
    cfg.ns = vec![4, 8, 16, 32];
    let out = run_experiment(&cfg)?;
    println!("{:>3} {:>9} {:>12} {:>6}", "k", "h", "error", "rate");
    for k in &cfg.ks {
        let rows: Vec<_> = out.rows.iter().filter(|r| r.k == *k).collect();
        for (i, r) in rows.iter().enumerate() {
            let e = r.energy_error.unwrap_or(f64::NAN);
            let rate = if i == 0 {
                String::new()
            } else {
                let p = rows[i - 1];
                format!("{:.2}", (p.energy_error.unwrap() / e).ln() / (p.h_max / r.h_max).ln())
            };
            println!("{k:>3} {:>9.5} {e:>12.4e} {rate:>6}", r.h_max);
        }
    }
    for s in out.summary.iter().filter(|s| s.label.contains("EnergyError")) {
        println!("{}: {:.3}", s.label, s.value);
    }
    Ok(())
}
