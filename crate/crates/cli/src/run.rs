//! One function per subcommand. Each builds its report, its checks and its
//! CSV tables, then hands them to [`emit`].

use std::path::PathBuf;

use orthospline::analysis::{
    convergence_report, decay_report, domination_report, kernel_bound_report, lemma_constants, stability_constant,
    weak_sup, weak_type_report, Check, MaximalGrid, MAXIMAL_WEAK_LIMIT,
};
use orthospline::projection::uniform_grid;
use orthospline::{
    eval_basis_block, greville, moments, scaled_norms, DirichletKernel, GramMatrix, InverseGram, KnotSequence, Projector,
    TestFunction,
};
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::{csv_path, json_path, write_atomic, Cell, Envelope, Table, SCHEMA_VERSION};

/// Commands that form the dense inverse are limited to this dimension.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// B-spline values at points (or on the evaluation grid)
    BasisEval,
    /// Gram matrix band and scaled row sums
    Gram,
    /// Inverse Gram matrix, residual and scaled norms
    Invert,
    /// Dirichlet kernel on a grid and its reproduction of constants
    Kernel,
    /// Orthogonal projection of a test function
    Project,
    /// Off-diagonal decay of the inverse Gram matrix
    VerifyDecay,
    /// Fitted kernel bound constants
    VerifyKernelBound,
    /// Lemma constants and the chained bound
    VerifyLemma,
    /// Hardy–Littlewood maximal function on a grid
    Maximal,
    /// Domination of projections by the maximal function over a ladder
    Dominate,
    /// Weak type (1,1) constants over a ladder
    Weak11,
    /// Errors under mesh refinement
    Converge,
    /// Local stability constant of the B-spline basis
    Stability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BasisEval => "basis-eval",
            Command::Gram => "gram",
            Command::Invert => "invert",
            Command::Kernel => "kernel",
            Command::Project => "project",
            Command::VerifyDecay => "verify-decay",
            Command::VerifyKernelBound => "verify-kernel-bound",
            Command::VerifyLemma => "verify-lemma",
            Command::Maximal => "maximal",
            Command::Dominate => "dominate",
            Command::Weak11 => "weak11",
            Command::Converge => "converge",
            Command::Stability => "stability",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] orthospline::Error),
    #[error("{0}")]
    Input(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot encode report: {0}")]
    Encode(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub pass: bool,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    match command {
        Command::BasisEval => basis_eval(cfg),
        Command::Gram => gram(cfg),
        Command::Invert => invert(cfg),
        Command::Kernel => kernel(cfg),
        Command::Project => project(cfg),
        Command::VerifyDecay => verify_decay(cfg),
        Command::VerifyKernelBound => verify_kernel_bound(cfg),
        Command::VerifyLemma => verify_lemma(cfg),
        Command::Maximal => maximal(cfg),
        Command::Dominate => dominate(cfg),
        Command::Weak11 => weak11(cfg),
        Command::Converge => converge(cfg),
        Command::Stability => stability(cfg),
    }
}

fn emit<R: Serialize>(
    command: Command,
    cfg: &ExperimentConfig,
    report: &R,
    checks: Vec<Check>,
    tables: Vec<Table>,
) -> Result<RunOutcome, CliError> {
    let name = command.name();
    let mut files = Vec::new();
    for t in &tables {
        let path = csv_path(&cfg.out, name, &t.name);
        let bytes = t.to_csv().map_err(|e| CliError::Encode(e.to_string()))?;
        write_atomic(&path, &bytes).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        files.push(path);
    }
    let pass = checks.iter().all(|c| c.pass);
    let envelope = Envelope {
        schema: SCHEMA_VERSION,
        command: name,
        config: cfg,
        report,
        checks: &checks,
        pass,
        tables: tables.iter().map(|t| t.name.clone()).collect(),
    };
    let mut json = serde_json::to_vec_pretty(&envelope).map_err(|e| CliError::Encode(e.to_string()))?;
    json.push(b'\n');
    let path = json_path(&cfg.out, name);
    write_atomic(&path, &json).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    files.push(path);
    Ok(RunOutcome { pass, checks, files })
}

fn function(cfg: &ExperimentConfig) -> Result<TestFunction, CliError> {
    Ok(TestFunction::from_name(&cfg.function)?)
}

fn dense_inverse(cfg: &ExperimentConfig) -> Result<(KnotSequence, GramMatrix, InverseGram), CliError> {
    let knots = cfg.knots()?;
    if knots.dim() > DENSE_LIMIT {
        return Err(CliError::Input(format!(
            "dimension {} exceeds {DENSE_LIMIT} for commands that form the inverse",
            knots.dim()
        )));
    }
    let g = GramMatrix::assemble(&knots);
    let inv = InverseGram::new(&g)?;
    Ok((knots, g, inv))
}

fn grid_points(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.points.is_empty() {
        uniform_grid(cfg.a, cfg.b, cfg.eval_grid)
    } else {
        cfg.points.clone()
    }
}

#[derive(Serialize)]
struct BasisReport {
    k: usize,
    dim: usize,
    knots: Vec<f64>,
    points: usize,
    max_unity_error: f64,
}

fn basis_eval(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let knots = cfg.knots()?;
    let mut table = Table::new("values", &["x", "i", "value"]);
    let mut worst = 0.0f64;
    let points = grid_points(cfg);
    for &x in &points {
        let blk = eval_basis_block(&knots, x)?;
        worst = worst.max((blk.values.iter().sum::<f64>() - 1.0).abs());
        for (p, v) in blk.values.iter().enumerate() {
            table.push(vec![x.into(), (blk.first + p).into(), (*v).into()]);
        }
    }
    let report = BasisReport {
        k: knots.order(),
        dim: knots.dim(),
        knots: knots.knots().to_vec(),
        points: points.len(),
        max_unity_error: worst,
    };
    let checks = vec![Check::at_most("partition of unity", worst, 1e-13)];
    emit(Command::BasisEval, cfg, &report, checks, vec![table])
}

#[derive(Serialize)]
struct GramReport {
    k: usize,
    dim: usize,
    min_pivot: f64,
    max_pivot: f64,
    max_row_sum_error: f64,
}

fn gram(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let knots = cfg.knots()?;
    let g = GramMatrix::assemble(&knots);
    let pivots = g.factor()?.pivots();
    let scaled = g.scaled(&knots)?;
    let row_err = scaled.row_sums().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let mut table = Table::new("entries", &["i", "j", "g", "g_scaled"]);
    for (i, j, v) in g.entries() {
        table.push(vec![i.into(), j.into(), v.into(), scaled.get(i, j).into()]);
    }
    let report = GramReport {
        k: knots.order(),
        dim: knots.dim(),
        min_pivot: pivots.iter().copied().fold(f64::INFINITY, f64::min),
        max_pivot: pivots.iter().copied().fold(0.0, f64::max),
        max_row_sum_error: row_err,
    };
    let checks = vec![Check::at_most("row sums of scaled Gram", row_err, 1e-13)];
    emit(Command::Gram, cfg, &report, checks, vec![table])
}

#[derive(Serialize)]
struct InverseReport {
    k: usize,
    dim: usize,
    residual: f64,
    asymmetry: f64,
    norms: orthospline::ScaledNorms,
}

fn invert(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let (knots, g, inv) = dense_inverse(cfg)?;
    let n = knots.dim();
    let b = inv.scaled_inverse(&knots);
    let mut table = Table::new("inverse", &["i", "j", "a", "b"]);
    for i in 0..n {
        for j in 0..n {
            table.push(vec![i.into(), j.into(), inv.get(i, j).into(), b[i * n + j].into()]);
        }
    }
    let report = InverseReport {
        k: knots.order(),
        dim: n,
        residual: inv.residual_against(&g),
        asymmetry: inv.asymmetry,
        norms: scaled_norms(&g, &inv, &knots)?,
    };
    let checks = vec![
        Check::at_most("max |G0 A - I|", report.residual, 1e-9),
        Check::at_most("relative asymmetry of A", report.asymmetry, 1e-10),
    ];
    emit(Command::Invert, cfg, &report, checks, vec![table])
}

#[derive(Serialize)]
struct KernelReport {
    k: usize,
    dim: usize,
    grid: usize,
    max_reproduction_error: f64,
}

fn kernel(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let (knots, _, inv) = dense_inverse(cfg)?;
    let kern = DirichletKernel::new(&knots, &inv)?;
    let xs = uniform_grid(cfg.a, cfg.b, cfg.kernel_grid);
    let mut values = Table::new("values", &["x", "y", "kernel"]);
    let mut repro = Table::new("reproduction", &["x", "integral_minus_one"]);
    let mut worst = 0.0f64;
    for &x in &xs {
        for &y in &xs {
            values.push(vec![x.into(), y.into(), kern.eval(x, y)?.into()]);
        }
        let e = kern.constant_integral(x)? - 1.0;
        worst = worst.max(e.abs());
        repro.push(vec![x.into(), e.into()]);
    }
    let report = KernelReport {
        k: knots.order(),
        dim: knots.dim(),
        grid: xs.len(),
        max_reproduction_error: worst,
    };
    let checks = vec![Check::at_most("max |int K(x, y) dy - 1|", worst, 1e-9)];
    emit(Command::Kernel, cfg, &report, checks, vec![values, repro])
}

#[derive(Serialize)]
struct ProjectReport {
    k: usize,
    dim: usize,
    function: String,
    coefficients: Vec<f64>,
    rhs_error: f64,
    l1_norm: f64,
    galerkin_defect: f64,
}

fn project(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let knots = cfg.knots()?;
    let f = function(cfg)?;
    let mut proj = Projector::new(&knots)?;
    proj.tol = cfg.tol;
    let p = proj.project(&f)?;
    let reference = moments(&knots, &f, cfg.tol * 1e-2)?;
    let defect = proj.galerkin_defect(&reference.values, &p);
    let l1 = f.l1_norm(cfg.a, cfg.b, cfg.tol * 1e-2)?;
    let mut coeffs = Table::new("coefficients", &["i", "greville", "coefficient"]);
    for (i, (g, c)) in greville(&knots).iter().zip(&p.coeffs).enumerate() {
        coeffs.push(vec![i.into(), (*g).into(), (*c).into()]);
    }
    let mut values = Table::new("values", &["x", "f", "pf"]);
    for x in grid_points(cfg) {
        values.push(vec![x.into(), f.eval(x).into(), p.eval(x)?.into()]);
    }
    let checks = vec![Check::at_most("Galerkin defect", defect, 1e-8 * l1)];
    let report = ProjectReport {
        k: knots.order(),
        dim: knots.dim(),
        function: cfg.function.clone(),
        coefficients: p.coeffs.clone(),
        rhs_error: p.rhs_error,
        l1_norm: l1,
        galerkin_defect: defect,
    };
    emit(Command::Project, cfg, &report, checks, vec![coeffs, values])
}

fn verify_decay(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let (knots, _, inv) = dense_inverse(cfg)?;
    let r = decay_report(&inv, &knots);
    let mut table = Table::new("profile", &["d", "rho", "rho_scaled"]);
    for (d, (v, vb)) in r.profile.iter().zip(&r.b_profile).enumerate() {
        table.push(vec![d.into(), (*v).into(), (*vb).into()]);
    }
    emit(Command::VerifyDecay, cfg, &r, r.checks(), vec![table])
}

fn verify_kernel_bound(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let (knots, _, inv) = dense_inverse(cfg)?;
    let floor = decay_report(&inv, &knots).gamma.unwrap_or(0.0);
    let r = kernel_bound_report(&inv, &knots, cfg.samples_per_cell, floor)?;
    let mut profile = Table::new("profile", &["d", "v"]);
    for (d, v) in r.profile.iter().enumerate() {
        profile.push(vec![d.into(), (*v).into()]);
    }
    let mut theta = Table::new("theta", &["theta", "c"]);
    for (t, c) in r.theta_grid.iter().zip(&r.c_of_theta) {
        theta.push(vec![(*t).into(), (*c).into()]);
    }
    emit(Command::VerifyKernelBound, cfg, &r, r.checks(), vec![profile, theta])
}

fn verify_lemma(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let (knots, _, inv) = dense_inverse(cfg)?;
    let gamma = decay_report(&inv, &knots).gamma.unwrap_or(0.5).max(0.5);
    let r = lemma_constants(&inv, &knots, gamma)?;
    emit(Command::VerifyLemma, cfg, &r, r.checks(), Vec::new())
}

#[derive(Serialize)]
struct MaximalReport {
    function: String,
    cells: usize,
    l1_norm: f64,
    weak_constant: Option<f64>,
}

fn maximal(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let f = function(cfg)?;
    let m = MaximalGrid::new(&f, cfg.a, cfg.b, cfg.maximal_grid, cfg.tol)?;
    let mut table = Table::new("values", &["x", "f", "maximal"]);
    for (x, v) in m.nodes().iter().zip(m.node_values()) {
        table.push(vec![(*x).into(), f.eval(*x).into(), (*v).into()]);
    }
    let w = (cfg.b - cfg.a) / m.cells() as f64;
    let l1 = m.l1_norm();
    let weak = (l1 > 0.0).then(|| weak_sup(m.cell_values(), w, &cfg.thresholds) / l1);
    let checks = weak
        .map(|c| vec![Check::at_most("maximal weak-type constant", c, MAXIMAL_WEAK_LIMIT)])
        .unwrap_or_default();
    let report = MaximalReport {
        function: cfg.function.clone(),
        cells: m.cells(),
        l1_norm: l1,
        weak_constant: weak,
    };
    emit(Command::Maximal, cfg, &report, checks, vec![table])
}

fn dominate(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let f = function(cfg)?;
    let r = domination_report(&cfg.ladder()?, &f, cfg.eval_grid, cfg.maximal_grid)?;
    let mut table = Table::new("levels", &["n_intervals", "mesh", "ratio", "argmax"]);
    for l in &r.levels {
        table.push(vec![l.n_intervals.into(), l.mesh.into(), l.ratio.into(), l.argmax.into()]);
    }
    emit(Command::Dominate, cfg, &r, r.checks(), vec![table])
}

fn weak11(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let f = function(cfg)?;
    let r = weak_type_report(&cfg.ladder()?, &f, &cfg.thresholds, cfg.maximal_grid)?;
    emit(Command::Weak11, cfg, &r, r.checks(), Vec::new())
}

fn converge(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let f = function(cfg)?;
    let r = convergence_report(&cfg.ladder()?, &f, &cfg.probes, cfg.eval_grid)?;
    let mut header: Vec<String> = ["n_intervals", "mesh", "sup_error", "omega_k", "rhs_error"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..cfg.probes.len()).map(|p| format!("probe_{p}")));
    let mut table = Table::with_header("errors", header);
    for l in &r.levels {
        let mut row: Vec<Cell> = vec![
            l.n_intervals.into(),
            l.mesh.into(),
            l.sup_error.into(),
            l.omega_k.into(),
            l.rhs_error.into(),
        ];
        row.extend(l.probe_errors.iter().map(|&e| Cell::from(e)));
        table.push(row);
    }
    emit(Command::Converge, cfg, &r, r.checks(), vec![table])
}

fn stability(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let knots = cfg.knots()?;
    let r = stability_constant(&knots, cfg.trials, cfg.seed)?;
    let checks = vec![
        Check::at_least("d_hat", r.d_hat, 1.0),
        Check::at_most("d_hat finite", if r.d_hat.is_finite() { 0.0 } else { 1.0 }, 0.0),
    ];
    emit(Command::Stability, cfg, &r, checks, Vec::new())
}
