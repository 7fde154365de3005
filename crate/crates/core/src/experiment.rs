//! Conditioning and convergence experiments.
//!
//! An [`ExperimentConfig`] names a mesh family, the polynomial degrees and the
//! stabilisations to run. [`run_experiment`] builds every mesh, assembles and
//! analyses one system per (mesh, degree, stabilisation) in parallel, and
//! returns the rows in configuration order together with log-log slope
//! summaries.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::assembly::{solve, Discretization, SolveOptions};
use crate::basis::BasisMode;
use crate::error::{Error, Result};
use crate::factory::{
    aggregate, cartesian_mesh, coarsen, cut_circle_mesh, cut_strip_mesh, penta_diagonal_mesh,
    triangular_mesh, AggregationMode, AggregationParams, CutMesh,
};
use crate::local::{HhoConfig, LocalSpace, Stabilization};
use crate::mesh::{MeshMetrics, Point, PolyMesh};
use crate::spectral::{spectral_report, EigenOptions};

pub const CSV_HEADER: &str =
    "hMin,hMax,NbCells,NbInternalEdges,Epsilon,MinEig,MaxEig,Condition,EnergyError,EdgeDegree,Stabilisation";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Coarsened,
    KSweep,
    CutEps,
    CutRefine,
    Penta,
    Convergence,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "coarsened" => Self::Coarsened,
            "ksweep" => Self::KSweep,
            "cut_eps" => Self::CutEps,
            "cut_refine" => Self::CutRefine,
            "penta" => Self::Penta,
            "convergence" => Self::Convergence,
            _ => return Err(Error::Config(format!("unknown experiment '{s}'"))),
        })
    }
}

/// Element degree relative to the face degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LMode {
    KMinus1,
    K,
    KPlus1,
}

impl LMode {
    pub fn l_for(&self, k: usize) -> Result<usize> {
        match self {
            LMode::KMinus1 if k == 0 => Err(Error::Config("l = k-1 needs k >= 1".into())),
            LMode::KMinus1 => Ok(k - 1),
            LMode::K => Ok(k),
            LMode::KPlus1 => Ok(k + 1),
        }
    }
}

impl std::str::FromStr for LMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "k-1" | "kminus1" => Self::KMinus1,
            "k" => Self::K,
            "k+1" | "kplus1" => Self::KPlus1,
            _ => return Err(Error::Config(format!("unknown l-mode '{s}' (k-1, k or k+1)"))),
        })
    }
}

/// Aggregation applied to cut meshes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregate {
    None,
    Sliver,
    Full,
}

impl std::str::FromStr for Aggregate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" | "off" => Self::None,
            "sliver" => Self::Sliver,
            "full" | "on" => Self::Full,
            _ => return Err(Error::Config(format!("unknown aggregation '{s}'"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ks: Vec<usize>,
    pub l_mode: LMode,
    pub stabs: Vec<Stabilization>,
    /// Mesh sizes; the meaning depends on the experiment.
    pub ns: Vec<usize>,
    pub eps: Vec<f64>,
    /// Coarsening levels: rows `1..=levels` for `coarsened`, the fixed level
    /// for `ksweep`.
    pub levels: usize,
    /// Fine triangular mesh size for the coarsened families.
    pub fine_n: usize,
    pub basis: BasisMode,
    pub aggregate: Aggregate,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub dense_threshold: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Defaults of each experiment.
    pub fn new(experiment: ExperimentKind) -> Self {
        use ExperimentKind::*;
        let (ks, ns, eps, levels, fine_n, aggregate, stabs) = match experiment {
            Coarsened => (vec![0, 1, 2], vec![], vec![], 4, 32, Aggregate::None, vec![Stabilization::Main]),
            KSweep => (
                (1..=6).collect(),
                vec![],
                vec![],
                3,
                16,
                Aggregate::None,
                vec![Stabilization::Main, Stabilization::Gradient, Stabilization::Boundary],
            ),
            CutEps => (vec![0, 1, 2], vec![8], vec![1e-2, 1e-3, 1e-4, 1e-5], 0, 0, Aggregate::None, vec![Stabilization::Main]),
            CutRefine => (vec![0, 1, 2], vec![8, 16, 32, 64], vec![], 0, 0, Aggregate::Full, vec![Stabilization::Main]),
            Penta => (vec![0, 1, 2], vec![8, 16, 32, 64], vec![], 0, 0, Aggregate::None, vec![Stabilization::Main]),
            Convergence => (vec![0, 1, 2], vec![4, 8, 16, 32], vec![], 0, 0, Aggregate::None, vec![Stabilization::Main]),
        };
        Self {
            experiment,
            ks,
            l_mode: LMode::K,
            stabs,
            ns,
            eps,
            levels,
            fine_n,
            basis: BasisMode::Orthonormal,
            aggregate,
            out: None,
            threads: None,
            dense_threshold: 2000,
            seed: 0x5eed,
        }
    }

    /// Builds a configuration from `key=value` pairs. `experiment` is
    /// required; other keys override its defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let kind: ExperimentKind = map
            .get("experiment")
            .ok_or_else(|| Error::Config("missing 'experiment'".into()))?
            .parse()?;
        let mut c = Self::new(kind);
        for (key, v) in map {
            match key.as_str() {
                "experiment" => {}
                "k" => c.ks = parse_usize_list(v)?,
                "l-mode" | "l_mode" => c.l_mode = v.parse()?,
                "stab" => {
                    c.stabs = v
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<Result<_>>()?
                }
                "n" => c.ns = parse_usize_list(v)?,
                "eps" => c.eps = parse_f64_list(v)?,
                "levels" => c.levels = parse_one(key, v)?,
                "fine_n" | "fine-n" => c.fine_n = parse_one(key, v)?,
                "basis" => c.basis = v.parse()?,
                "aggregate" => c.aggregate = v.parse()?,
                "out" => c.out = Some(PathBuf::from(v)),
                "threads" => c.threads = Some(parse_one(key, v)?),
                "dense-threshold" | "dense_threshold" => c.dense_threshold = parse_one(key, v)?,
                "seed" => c.seed = parse_one(key, v)?,
                _ => return Err(Error::Config(format!("unknown key '{key}'"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.stabs.is_empty() {
            return Err(Error::Config("k and stab lists must not be empty".into()));
        }
        for &k in &self.ks {
            if k > 9 {
                return Err(Error::Config(format!("k = {k} is outside 0..9")));
            }
            let space = LocalSpace::new(k, self.l_mode.l_for(k)?)?;
            for s in &self.stabs {
                space.check_admissible(*s)?;
            }
        }
        use ExperimentKind::*;
        match self.experiment {
            Coarsened | KSweep if self.fine_n == 0 => {
                return Err(Error::Config("fine_n must be positive".into()))
            }
            CutEps if self.ns.len() != 1 || self.eps.is_empty() => {
                return Err(Error::Config("cut_eps needs one n and a non-empty eps list".into()))
            }
            CutRefine | Penta | Convergence if self.ns.is_empty() => {
                return Err(Error::Config("n list must not be empty".into()))
            }
            _ => {}
        }
        if self.eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Config("eps values must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}

/// `"1,2,3"` or the inclusive range `"1..6"`.
pub fn parse_usize_list(v: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = v.split_once("..") {
        let a: usize = parse_one("range", a)?;
        let b: usize = parse_one("range", b.trim_start_matches('='))?;
        if a > b {
            return Err(Error::Config(format!("empty range '{v}'")));
        }
        return Ok((a..=b).collect());
    }
    v.split(',').map(|s| parse_one("list", s)).collect()
}

pub fn parse_f64_list(v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| parse_one("list", s)).collect()
}

/// Parses flat `key=value` text; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key=value, got '{line}'"),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// One mesh of an experiment.
#[derive(Clone, Debug)]
pub struct MeshCase {
    pub mesh: PolyMesh,
    pub epsilon: Option<f64>,
}

/// Builds the meshes of an experiment, in row order.
pub fn build_meshes(cfg: &ExperimentConfig) -> Result<Vec<MeshCase>> {
    use ExperimentKind::*;
    let plain = |mesh| MeshCase { mesh, epsilon: None };
    let agg = |cm: CutMesh| -> Result<PolyMesh> {
        let mode = match cfg.aggregate {
            Aggregate::None => return Ok(cm.mesh),
            Aggregate::Sliver => AggregationMode::Sliver,
            Aggregate::Full => AggregationMode::Full,
        };
        let params = AggregationParams {
            mode,
            ..Default::default()
        };
        Ok(aggregate(&cm, params)?.0.mesh)
    };
    match cfg.experiment {
        Coarsened => {
            let fine = triangular_mesh(cfg.fine_n)?;
            let mut out = Vec::new();
            let mut m = fine;
            for _ in 0..cfg.levels {
                m = coarsen(&m, 1)?;
                out.push(plain(m.clone()));
            }
            Ok(out)
        }
        KSweep => Ok(vec![plain(coarsen(&triangular_mesh(cfg.fine_n)?, cfg.levels)?)]),
        CutEps => {
            let n = cfg.ns[0];
            cfg.eps
                .iter()
                .map(|e| {
                    let (cm, _) = cut_strip_mesh(n, *e)?;
                    Ok(MeshCase {
                        mesh: agg(cm)?,
                        epsilon: Some(*e),
                    })
                })
                .collect()
        }
        CutRefine => cfg
            .ns
            .iter()
            .map(|n| Ok(plain(agg(cut_circle_mesh(*n)?.0)?)))
            .collect(),
        Penta => cfg.ns.iter().map(|n| Ok(plain(penta_diagonal_mesh(*n)?))).collect(),
        Convergence => cfg.ns.iter().map(|n| Ok(plain(cartesian_mesh(*n)?))).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub h_min: f64,
    pub h_max: f64,
    pub nb_cells: usize,
    pub nb_internal_edges: usize,
    pub epsilon: Option<f64>,
    pub min_eig: f64,
    pub max_eig: f64,
    pub condition: f64,
    pub energy_error: Option<f64>,
    pub k: usize,
    pub stab: Stabilization,
    /// Characteristic lengths `H_min(F_h)`, `H_max(F_h)`.
    pub char_min: f64,
    pub char_max: f64,
}

impl Row {
    pub fn csv_line(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.h_min,
            self.h_max,
            self.nb_cells,
            self.nb_internal_edges,
            opt(self.epsilon),
            self.min_eig,
            self.max_eig,
            self.condition,
            opt(self.energy_error),
            self.k,
            self.stab
        )
    }
}

/// Manufactured solution `sin(pi x) sin(pi y)`.
pub fn manufactured_solution(p: &Point) -> f64 {
    (PI * p.x).sin() * (PI * p.y).sin()
}

pub fn manufactured_source(p: &Point) -> f64 {
    2.0 * PI * PI * manufactured_solution(p)
}

/// Assembles and analyses one system.
pub fn run_case(
    case: &MeshCase,
    k: usize,
    stab: Stabilization,
    cfg: &ExperimentConfig,
) -> Result<Row> {
    let mesh = &case.mesh;
    let hho = HhoConfig::new(k)
        .with_l(cfg.l_mode.l_for(k)?)?
        .with_stabilization(stab)
        .with_basis_mode(cfg.basis);
    let disc = Discretization::new(mesh, hho)?;
    let metrics = MeshMetrics::compute(mesh);
    let convergence = cfg.experiment == ExperimentKind::Convergence;
    let source: &(dyn Fn(&Point) -> f64 + Sync) = if convergence {
        &manufactured_source
    } else {
        &|_| 1.0
    };
    let system = disc.assemble_condensed(source)?;
    let eig = EigenOptions {
        dense_threshold: cfg.dense_threshold,
        seed: cfg.seed,
        ..Default::default()
    };
    let report = spectral_report(&system, mesh, &metrics, &eig)?;
    let energy_error = if convergence {
        let u = solve(
            &system,
            SolveOptions {
                dense_threshold: cfg.dense_threshold,
            },
        )?;
        let sol = disc.recover(&system, &u);
        Some(disc.energy_error(&sol, &manufactured_solution))
    } else {
        None
    };
    Ok(Row {
        h_min: metrics.h_min,
        h_max: metrics.h_max,
        nb_cells: mesh.num_elements(),
        nb_internal_edges: mesh.num_internal_faces(),
        epsilon: case.epsilon,
        min_eig: report.lambda_min,
        max_eig: report.lambda_max,
        condition: report.kappa,
        energy_error,
        k,
        stab,
        char_min: report.h_min,
        char_max: report.h_max,
    })
}

#[derive(Clone, Debug)]
pub struct SummaryLine {
    pub label: String,
    pub value: f64,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub rows: Vec<Row>,
    /// `(row description, reason)` for rows that failed.
    pub failures: Vec<(String, Error)>,
    pub summary: Vec<SummaryLine>,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{}", r.csv_line())?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }

    pub fn summary_value(&self, label: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.label == label).map(|s| s.value)
    }
}

/// Runs every (mesh, k, stabilisation) combination. Rows come back in
/// configuration order whatever the thread count; a failing row is logged
/// and left out.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let meshes = build_meshes(cfg)?;
        let mut jobs = Vec::new();
        for stab in &cfg.stabs {
            for &k in &cfg.ks {
                for (i, case) in meshes.iter().enumerate() {
                    jobs.push((i, case, k, *stab));
                }
            }
        }
        let results: Vec<(String, Result<Row>)> = jobs
            .par_iter()
            .map(|(i, case, k, stab)| {
                let what = format!("mesh {i}, k = {k}, stab = {stab}");
                log::info!("running {what}");
                (what, run_case(case, *k, *stab, cfg))
            })
            .collect();
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for (what, r) in results {
            match r {
                Ok(row) => rows.push(row),
                Err(e) => {
                    log::error!("{what} failed: {e}");
                    failures.push((what, e));
                }
            }
        }
        let summary = summarize(cfg, &rows);
        Ok(ExperimentOutput {
            rows,
            failures,
            summary,
        })
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidData("x and y lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(Error::InvalidData(format!(
            "slope fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidData("slope fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidData("all x values are equal".into()));
    }
    Ok(sxy / sxx)
}

/// `max / min` of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn summarize(cfg: &ExperimentConfig, rows: &[Row]) -> Vec<SummaryLine> {
    use ExperimentKind::*;
    let mut out = Vec::new();
    let push_slope = |label: String, xs: Vec<f64>, ys: Vec<f64>, out: &mut Vec<SummaryLine>| {
        if let Ok(s) = fit_slope(&xs, &ys) {
            out.push(SummaryLine { label, value: s });
        }
    };
    for stab in &cfg.stabs {
        let by_stab: Vec<&Row> = rows.iter().filter(|r| r.stab == *stab).collect();
        if cfg.experiment == KSweep {
            let x: Vec<f64> = by_stab.iter().map(|r| (r.k + 1) as f64).collect();
            let col = |f: fn(&Row) -> f64| by_stab.iter().map(|r| f(r)).collect::<Vec<_>>();
            push_slope(format!("{stab}: slope MaxEig vs k+1"), x.clone(), col(|r| r.max_eig), &mut out);
            push_slope(format!("{stab}: slope Condition vs k+1"), x, col(|r| r.condition), &mut out);
            if !by_stab.is_empty() {
                out.push(SummaryLine {
                    label: format!("{stab}: spread MinEig"),
                    value: spread(&col(|r| r.min_eig)),
                });
            }
            continue;
        }
        for &k in &cfg.ks {
            let rs: Vec<&Row> = by_stab.iter().copied().filter(|r| r.k == k).collect();
            if rs.is_empty() {
                continue;
            }
            let col = |f: fn(&Row) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let p = format!("{stab} k={k}");
            match cfg.experiment {
                Coarsened | CutRefine => {
                    if cfg.experiment == CutRefine {
                        push_slope(
                            format!("{p}: slope Condition vs InvMaxMin"),
                            col(|r| 1.0 / (r.h_max * r.h_min)),
                            col(|r| r.condition),
                            &mut out,
                        );
                    }
                    let hinv = col(|r| 1.0 / r.h_max);
                    push_slope(format!("{p}: slope Condition vs 1/hMax"), hinv.clone(), col(|r| r.condition), &mut out);
                    push_slope(format!("{p}: slope MinEig vs hMax"), col(|r| r.h_max), col(|r| r.min_eig), &mut out);
                    push_slope(format!("{p}: slope MaxEig vs 1/hMax"), hinv, col(|r| r.max_eig), &mut out);
                }
                CutEps => {
                    let einv = col(|r| 1.0 / r.epsilon.unwrap_or(f64::NAN));
                    push_slope(format!("{p}: slope MaxEig vs 1/Epsilon"), einv.clone(), col(|r| r.max_eig), &mut out);
                    push_slope(format!("{p}: slope Condition vs 1/Epsilon"), einv, col(|r| r.condition), &mut out);
                    for (name, f) in [
                        ("MinEig", (|r: &Row| r.min_eig) as fn(&Row) -> f64),
                        ("MaxEig", |r: &Row| r.max_eig),
                        ("Condition", |r: &Row| r.condition),
                    ] {
                        out.push(SummaryLine {
                            label: format!("{p}: spread {name}"),
                            value: spread(&col(f)),
                        });
                    }
                }
                Penta => {
                    push_slope(format!("{p}: slope Condition vs 1/hMin"), col(|r| 1.0 / r.h_min), col(|r| r.condition), &mut out);
                    push_slope(format!("{p}: slope MaxEig vs 1/hMin"), col(|r| 1.0 / r.h_min), col(|r| r.max_eig), &mut out);
                    out.push(SummaryLine {
                        label: format!("{p}: spread MinEig"),
                        value: spread(&col(|r| r.min_eig)),
                    });
                }
                Convergence => {
                    push_slope(
                        format!("{p}: slope EnergyError vs hMax"),
                        col(|r| r.h_max),
                        col(|r| r.energy_error.unwrap_or(f64::NAN)),
                        &mut out,
                    );
                    push_slope(format!("{p}: slope Condition vs 1/hMax"), col(|r| 1.0 / r.h_max), col(|r| r.condition), &mut out);
                }
                KSweep => unreachable!(),
            }
        }
    }
    out
}
