use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polyhho::experiment::{parse_config_text, run_experiment, ExperimentConfig};
use polyhho::{Error, Result};

/// Spectral conditioning experiments for hybrid high-order discretisations.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// key=value configuration file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// coarsened, ksweep, cut_eps, cut_refine, penta or convergence
    #[arg(long)]
    experiment: Option<String>,
    /// face degrees, e.g. "0,1,2" or "1..6"
    #[arg(long)]
    k: Option<String>,
    /// element degree relative to k: k-1, k or k+1
    #[arg(long)]
    l_mode: Option<String>,
    /// stabilisations: main, kminus1, boundary, gradient, hdg
    #[arg(long)]
    stab: Option<String>,
    /// mesh sizes
    #[arg(long)]
    n: Option<String>,
    /// cut widths for cut_eps
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    /// orthonormal or raw
    #[arg(long)]
    basis: Option<String>,
    /// output CSV (stdout when absent)
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    dense_threshold: Option<String>,
}

impl Cli {
    fn settings(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(p) => parse_config_text(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("experiment", &self.experiment),
            ("k", &self.k),
            ("l-mode", &self.l_mode),
            ("stab", &self.stab),
            ("n", &self.n),
            ("eps", &self.eps),
            ("levels", &self.levels),
            ("basis", &self.basis),
            ("out", &self.out),
            ("threads", &self.threads),
            ("dense-threshold", &self.dense_threshold),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                map.remove(&key.replace('-', "_"));
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = ExperimentConfig::from_map(&cli.settings()?)?;
    let output = run_experiment(&cfg)?;
    match &cfg.out {
        Some(p) => output.write_csv(BufWriter::new(File::create(p)?))?,
        None => output.write_csv(io::stdout().lock())?,
    }
    let mut err = io::stderr().lock();
    for s in &output.summary {
        writeln!(err, "{}: {:.4}", s.label, s.value)?;
    }
    if output.rows.is_empty() {
        return Err(Error::InvalidData("every row failed".into()));
    }
    if let Some((what, e)) = output.failures.first() {
        return Err(Error::InvalidData(format!(
            "{} row(s) failed, first: {what}: {e}",
            output.failures.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
