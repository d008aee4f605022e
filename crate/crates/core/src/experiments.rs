//! Configuration-driven convergence studies.
//!
//! A TOML file selects one of the three studies (convergence under a
//! length-scale sweep, nearly incompressible material, degenerate composite
//! material) or the property suite. Each study writes one CSV table and one
//! log-log plot into `output_dir`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{error_norms, eval_discrete, ErrorSet, ErrorTable, Rate, NORM_NAMES};
use crate::assembly::{DiscreteProblem, Family, Method};
use crate::cosserat_core::{LengthField, MaterialModel};
use crate::manufactured::{ManufacturedSolution, SolutionCase};
use crate::mesh::Mesh;
use crate::plot;
use crate::quadrature::QuadratureRule;
use crate::solver::{solve_direct, solve_minres, BlockPreconditioner, SolverKind, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Smooth solution, `ℓ` swept over constants.
    Convergence,
    /// Divergence-free solution, `λ_σ` swept.
    Incompressible,
    /// Kinked `ℓ` vanishing on `max_i x_i ≤ 1/3`.
    Degenerate,
    /// Run the invariant suite instead of a study.
    Properties,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Incompressible => "incompressible",
            ExperimentKind::Degenerate => "degenerate",
            ExperimentKind::Properties => "properties",
        }
    }
}

/// A number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// `ell` entry: constants or the name of a spatially varying field.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EllSpec {
    Values(OneOrMany),
    Named(String),
}

/// The config file, field for field.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub families: Option<Vec<String>>,
    #[serde(default)]
    pub mesh_levels: Option<Vec<usize>>,
    #[serde(default)]
    pub ell: Option<EllSpec>,
    #[serde(default)]
    pub lambda_sigma: Option<OneOrMany>,
    #[serde(default)]
    pub solver: Option<SolverKind>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Write measured solve times; off gives byte-identical reruns.
    #[serde(default = "default_true")]
    pub record_timings: bool,
}

fn default_dim() -> usize {
    2
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_jobs() -> usize {
    1
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solve failed for {point}: {message} (partial table in {})", csv.display())]
    Solve { point: String, message: String, csv: PathBuf },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Process exit code: 1 for solve failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Solve { .. } => 1,
            _ => 2,
        }
    }
}

/// Default mesh ladder for a study.
pub fn default_levels(kind: ExperimentKind, dim: usize, k: usize) -> Vec<usize> {
    match (kind, dim, k) {
        (ExperimentKind::Degenerate, 2, _) => vec![6, 12, 24, 48],
        (ExperimentKind::Degenerate, _, _) => vec![3, 6, 12],
        (_, 2, 0) => vec![4, 8, 16, 32, 64],
        (_, 2, _) => vec![4, 8, 16, 32],
        (_, _, 0) => vec![2, 4, 8],
        _ => vec![2, 4],
    }
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub k: usize,
    pub methods: Vec<Method>,
    pub levels: Vec<usize>,
    pub ells: Vec<LengthField>,
    pub lambdas: Vec<f64>,
    pub solver: SolverKind,
    pub output_dir: PathBuf,
    pub jobs: usize,
    pub record_timings: bool,
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, ExperimentError> {
    Err(ExperimentError::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fill defaults and check every constraint.
    pub fn validate(&self) -> Result<Experiment, ExperimentError> {
        let kind = self.experiment;
        if !(2..=3).contains(&self.dim) {
            return cfg_err(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if self.k > 1 {
            return cfg_err(format!("k must be 0 or 1, got {}", self.k));
        }
        if self.jobs == 0 {
            return cfg_err("jobs must be at least 1");
        }
        let degenerate = kind == ExperimentKind::Degenerate;
        let methods: Vec<Method> = match &self.families {
            None if degenerate => vec![Method::WC_RT, Method::WC_BDM],
            None => Method::ALL.to_vec(),
            Some(names) => {
                let mut out = Vec::new();
                for n in names {
                    let m: Method = n.parse().map_err(ExperimentError::Config)?;
                    if out.contains(&m) {
                        return cfg_err(format!("family {m} listed twice"));
                    }
                    out.push(m);
                }
                out
            }
        };
        if methods.is_empty() {
            return cfg_err("families must not be empty");
        }
        let levels = self.mesh_levels.clone().unwrap_or_else(|| default_levels(kind, self.dim, self.k));
        if levels.is_empty() || levels.contains(&0) {
            return cfg_err("mesh_levels must be a nonempty list of positive integers");
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return cfg_err("mesh_levels must be strictly increasing");
        }
        let ells = match (&self.ell, kind) {
            (None, ExperimentKind::Convergence) => vec![1.0, 1e-2, 1e-4].into_iter().map(LengthField::Constant).collect(),
            (None, ExperimentKind::Degenerate) => vec![LengthField::Kinked],
            (None, _) => vec![LengthField::Constant(1.0)],
            (Some(EllSpec::Named(name)), _) if name.eq_ignore_ascii_case("kinked") => vec![LengthField::Kinked],
            (Some(EllSpec::Named(name)), _) => return cfg_err(format!("unknown ell field {name:?} (expected a number, a list, or \"kinked\")")),
            (Some(EllSpec::Values(v)), _) => {
                let v = v.to_vec();
                if v.is_empty() || v.iter().any(|l| !(0.0..=1.0).contains(l)) {
                    return cfg_err("constant ell values must lie in [0, 1]");
                }
                v.into_iter().map(LengthField::Constant).collect()
            }
        };
        let lambdas = match (&self.lambda_sigma, kind) {
            (None, ExperimentKind::Incompressible) => vec![1.0, 1e2, 1e4],
            (None, _) => vec![1.0],
            (Some(v), _) => v.to_vec(),
        };
        if lambdas.is_empty() || lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return cfg_err("lambda_sigma must be finite and nonnegative");
        }
        if degenerate {
            if ells != [LengthField::Kinked] {
                return cfg_err("the degenerate experiment uses the kinked ell field only");
            }
            if methods.iter().any(|m| m.family == Family::SC) {
                return cfg_err("the degenerate experiment runs WC families only (A_omega is unbounded where ell = 0)");
            }
            if levels.iter().any(|n| n % 3 != 0) {
                return cfg_err("degenerate mesh levels must be divisible by 3 so the kink lies on facets");
            }
        }
        for m in methods.iter().filter(|m| m.family == Family::SC) {
            for l in &ells {
                if l.is_constant() && l.eval(&[0.0; 3]) > 0.0 {
                    continue;
                }
                return cfg_err(format!("{m} needs ell bounded away from zero"));
            }
        }
        let solver = self.solver.unwrap_or(if self.dim == 3 { SolverKind::Minres } else { SolverKind::Direct });
        Ok(Experiment {
            kind,
            dim: self.dim,
            k: self.k,
            methods,
            levels,
            ells,
            lambdas,
            solver,
            output_dir: self.output_dir.clone(),
            jobs: self.jobs,
            record_timings: self.record_timings,
        })
    }
}

/// Label of an `ℓ` field in tables.
pub fn ell_label(ell: &LengthField) -> String {
    match ell {
        LengthField::Constant(c) => format!("{c}"),
        LengthField::Kinked => "kinked".into(),
        LengthField::PiecewiseLinear { .. } => "piecewise-linear".into(),
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub family: String,
    pub dim: usize,
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub ell: String,
    pub lambda_sigma: f64,
    pub n_dofs: usize,
    pub err_sigma_l2: f64,
    pub err_sigma_hdiv: f64,
    pub err_omega_l2: f64,
    pub err_omega_hdivl: f64,
    pub err_u_l2: f64,
    pub err_r_l2: f64,
    pub err_u_proj: f64,
    pub err_r_proj: f64,
    pub err_composite: f64,
    pub err_improved: f64,
    pub solver_iters: usize,
    pub solve_seconds: f64,
}

impl CsvRow {
    pub fn errors(&self) -> ErrorSet {
        ErrorSet {
            sigma_l2: self.err_sigma_l2,
            sigma_hdiv: self.err_sigma_hdiv,
            omega_l2: self.err_omega_l2,
            omega_hdivl: self.err_omega_hdivl,
            u_l2: self.err_u_l2,
            r_l2: self.err_r_l2,
            u_proj: self.err_u_proj,
            r_proj: self.err_r_proj,
            composite: self.err_composite,
            improved: self.err_improved,
        }
    }

    /// Everything but the level: rows with equal keys form one refinement series.
    pub fn series_key(&self) -> SeriesKey {
        SeriesKey {
            experiment: self.experiment.clone(),
            family: self.family.clone(),
            dim: self.dim,
            k: self.k,
            ell: self.ell.clone(),
            lambda_sigma: self.lambda_sigma.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub experiment: String,
    pub family: String,
    pub dim: usize,
    pub k: usize,
    pub ell: String,
    pub lambda_sigma: String,
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} d={} k={} ell={} lambda_sigma={}",
            self.experiment, self.family, self.dim, self.k, self.ell, self.lambda_sigma
        )
    }
}

/// `max |ω̃_h|` on the elastic block `max_i x_i ≤ 1/3` against the whole domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElasticRegionCheck {
    pub n: usize,
    pub elastic_max: f64,
    pub global_max: f64,
}

impl ElasticRegionCheck {
    pub fn ratio(&self) -> f64 {
        if self.global_max > 0.0 {
            self.elastic_max / self.global_max
        } else {
            0.0
        }
    }
}

/// One parameter point of a study.
#[derive(Debug, Clone)]
pub struct Point {
    pub method: Method,
    pub ell: LengthField,
    pub lambda_sigma: f64,
    pub n: usize,
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} n={} ell={} lambda_sigma={}", self.method, self.n, ell_label(&self.ell), self.lambda_sigma)
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub row: CsvRow,
    pub elastic: Option<ElasticRegionCheck>,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub rows: Vec<CsvRow>,
    pub elastic_checks: Vec<(SeriesKey, ElasticRegionCheck)>,
    pub csv_path: PathBuf,
    pub plot_path: PathBuf,
}

impl Experiment {
    pub fn case(&self) -> SolutionCase {
        match self.kind {
            ExperimentKind::Incompressible => SolutionCase::DivFree,
            _ => SolutionCase::Smooth,
        }
    }

    pub fn file_stem(&self) -> String {
        format!("{}_d{}_k{}", self.kind.name(), self.dim, self.k)
    }

    /// Parameter points in table order.
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &method in &self.methods {
            for ell in &self.ells {
                for &lambda_sigma in &self.lambdas {
                    for &n in &self.levels {
                        out.push(Point { method, ell: ell.clone(), lambda_sigma, n });
                    }
                }
            }
        }
        out
    }

    /// Build, solve and measure one point.
    pub fn run_point(&self, pt: &Point) -> Result<PointResult, String> {
        let material = MaterialModel::with(pt.lambda_sigma, pt.ell.clone());
        let sol = ManufacturedSolution::new(self.dim, self.case(), material.clone());
        let mesh = Arc::new(Mesh::structured(self.dim, pt.n).map_err(|e| e.to_string())?);
        let problem = DiscreteProblem::new(mesh, pt.method, self.k, material).map_err(|e| e.to_string())?;
        let load = |x: &[f64; 3]| sol.load(x);
        let opts = SolverOptions { kind: self.solver, ..SolverOptions::default() };
        let solution = match self.solver {
            SolverKind::Direct => {
                let sys = problem.assemble(&load);
                solve_direct(&sys, &opts)
            }
            SolverKind::Minres => {
                let (sys, pp) = problem.assemble_with_preconditioner(&load);
                let pc = BlockPreconditioner::new(pp).map_err(|e| e.to_string())?;
                solve_minres(&sys, &pc, &opts)
            }
        }
        .map_err(|e| e.to_string())?;
        let exact = |x: &[f64; 3]| sol.eval(x);
        let errors = error_norms(&problem, &solution.p, &solution.u, &exact, self.kind == ExperimentKind::Incompressible);
        let e = errors;
        let row = CsvRow {
            experiment: self.kind.name().into(),
            family: pt.method.name().into(),
            dim: self.dim,
            k: self.k,
            n: pt.n,
            h: problem.mesh.h(),
            ell: ell_label(&pt.ell),
            lambda_sigma: pt.lambda_sigma,
            n_dofs: problem.n_dofs(),
            err_sigma_l2: e.sigma_l2,
            err_sigma_hdiv: e.sigma_hdiv,
            err_omega_l2: e.omega_l2,
            err_omega_hdivl: e.omega_hdivl,
            err_u_l2: e.u_l2,
            err_r_l2: e.r_l2,
            err_u_proj: e.u_proj,
            err_r_proj: e.r_proj,
            err_composite: e.composite,
            err_improved: e.improved,
            solver_iters: solution.report.iterations,
            solve_seconds: if self.record_timings { solution.report.wall_time } else { 0.0 },
        };
        let elastic = (self.kind == ExperimentKind::Degenerate).then(|| elastic_region_check(&problem, &solution.p, &solution.u));
        Ok(PointResult { row, elastic })
    }
}

/// Sample `|ω̃_h|` at vertices and interior quadrature points of every cell.
pub fn elastic_region_check(problem: &DiscreteProblem, p: &[f64], u: &[f64]) -> ElasticRegionCheck {
    let mesh = &problem.mesh;
    let rule = QuadratureRule::simplex(mesh.dim(), 4);
    let (elastic_max, global_max) = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let map = mesh.affine_map(c);
            let mut pts: Vec<[f64; 3]> = mesh.cell(c).iter().map(|&v| mesh.vertex(v)).collect();
            pts.extend(rule.points.iter().map(|xi| map.apply(xi)));
            let m = eval_discrete(problem, p, u, c, &pts).iter().map(|v| v.omega.norm()).fold(0.0, f64::max);
            let elastic = mesh.cell(c).iter().all(|&v| mesh.vertex(v).iter().all(|&x| x <= 1.0 / 3.0 + 1e-12));
            (if elastic { m } else { 0.0 }, m)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    ElasticRegionCheck { n: mesh.cells_per_axis(), elastic_max, global_max }
}

/// Run a validated study: solve every point, write the CSV and the plot.
///
/// On a solve failure the rows finished before the failing point are still
/// written and `ExperimentError::Solve` is returned.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentReport, ExperimentError> {
    if exp.kind == ExperimentKind::Properties {
        return cfg_err("the properties experiment has no table; use run_properties");
    }
    fs::create_dir_all(&exp.output_dir)?;
    let stem = exp.file_stem();
    let csv_path = exp.output_dir.join(format!("{stem}.csv"));
    let plot_path = exp.output_dir.join(format!("{stem}.svg"));
    let points = exp.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exp.jobs)
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let results: Vec<Result<PointResult, String>> = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                let r = exp.run_point(pt);
                match &r {
                    Ok(res) => log::info!("{pt}: composite {:.3e}", res.row.err_composite),
                    Err(e) => log::error!("{pt}: {e}"),
                }
                r
            })
            .collect()
    });
    let mut report = ExperimentReport { csv_path: csv_path.clone(), plot_path: plot_path.clone(), ..Default::default() };
    let mut failure = None;
    for (pt, r) in points.iter().zip(results) {
        match r {
            Ok(res) => {
                if let Some(chk) = res.elastic {
                    report.elastic_checks.push((res.row.series_key(), chk));
                }
                report.rows.push(res.row);
            }
            Err(message) => {
                failure = Some((pt.to_string(), message));
                break;
            }
        }
    }
    write_csv(&csv_path, &report.rows)?;
    if let Some((point, message)) = failure {
        return Err(ExperimentError::Solve { point, message, csv: csv_path });
    }
    let title = format!("{} study, {}D, k = {}", exp.kind.name(), exp.dim, exp.k);
    fs::write(&plot_path, plot::rate_plot(&title, &report.rows, exp.k))?;
    Ok(report)
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(csv_header())?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names of the experiment tables.
pub fn csv_header() -> Vec<&'static str> {
    let mut h = vec!["experiment", "family", "dim", "k", "n", "h", "ell", "lambda_sigma", "n_dofs"];
    h.extend(NORM_NAMES);
    h.extend(["solver_iters", "solve_seconds"]);
    h
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

/// Rows grouped into refinement series, each sorted by `n`.
pub fn group_series(rows: &[CsvRow]) -> BTreeMap<SeriesKey, Vec<CsvRow>> {
    let mut out: BTreeMap<SeriesKey, Vec<CsvRow>> = BTreeMap::new();
    for r in rows {
        out.entry(r.series_key()).or_default().push(r.clone());
    }
    for v in out.values_mut() {
        v.sort_by_key(|r| r.n);
    }
    out
}

/// Observed orders between consecutive levels of one series, per norm.
#[derive(Debug, Clone)]
pub struct SeriesRates {
    pub key: SeriesKey,
    pub levels: Vec<usize>,
    pub rates: Vec<(&'static str, Vec<Rate>)>,
}

impl SeriesRates {
    pub fn final_rate(&self, norm: &str) -> Option<Rate> {
        self.rates.iter().find(|(n, _)| *n == norm).and_then(|(_, r)| r.last().copied())
    }
}

pub fn series_rates(rows: &[CsvRow]) -> Vec<SeriesRates> {
    group_series(rows)
        .into_iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(key, v)| {
            let mut table = ErrorTable::default();
            for r in &v {
                table.push(r.n, r.h, r.n_dofs, &r.errors());
            }
            let rates = NORM_NAMES.iter().map(|name| (*name, table.rates(name).unwrap_or_default())).collect();
            SeriesRates { key, levels: v.iter().map(|r| r.n).collect(), rates }
        })
        .collect()
}

/// Rates of every series in a CSV file written by `run_experiment`.
pub fn rates_from_csv(path: &Path) -> Result<Vec<SeriesRates>, ExperimentError> {
    Ok(series_rates(&read_csv(path)?))
}

/// Plain-text rate table: one line per series with the final composite and
/// improved rates and every consecutive composite rate.
pub fn format_rates(rates: &[SeriesRates]) -> String {
    let mut s = String::new();
    for sr in rates {
        let all: Vec<String> = sr
            .rates
            .iter()
            .find(|(n, _)| *n == "err_composite")
            .map(|(_, r)| r.iter().map(|x| x.to_string()).collect())
            .unwrap_or_default();
        let f = |n: &str| sr.final_rate(n).map(|r| r.to_string()).unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{}: levels {:?}, composite rates [{}], final composite {}, final improved {}\n",
            sr.key,
            sr.levels,
            all.join(", "),
            f("err_composite"),
            f("err_improved")
        ));
    }
    s
}
