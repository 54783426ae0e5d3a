//! File-driven front end: problem specifications in TOML, results as JSON or
//! CSV, and stable exit codes so scripts can tell a malformed file from an
//! invalid problem from a solver that gave up.
//!
//! Numeric CSV cells use 12 significant digits in scientific notation with a
//! `.` separator, independent of locale; identical spec and seed produce
//! byte-identical output files.

pub mod checks;

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::entangled::{optimize_entangled, EntangledProblem, SolverError};
use crate::jcmodel::{build_jc, sweep, JCError, JCParams, SweepResult};
use crate::landscape::{
    jq_bounds, landscape_observable, optimal_state, BipartiteHamiltonian, DensityMatrix,
    LandscapeError, Observable, OptimalSolution, Sense, DEGENERACY_TOL,
};
use crate::qmat::{ComplexMatrix, QmatError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

/// Failures sorted by exit code: unreadable or malformed input (2), a
/// well-formed spec describing an invalid problem (3), or numerics that did
/// not settle (4).
#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Convergence(_) => EXIT_CONVERGENCE,
        }
    }
}

fn classify_landscape(err: LandscapeError) -> CliError {
    match err {
        LandscapeError::Kernel(QmatError::NoConvergence(n)) => {
            CliError::Convergence(format!("eigensolver did not converge within {n} iterations"))
        }
        other => CliError::Validation(other.to_string()),
    }
}

fn classify_solver(err: SolverError) -> CliError {
    match err {
        SolverError::Kernel(QmatError::NoConvergence(n)) => {
            CliError::Convergence(format!("eigensolver did not converge within {n} iterations"))
        }
        SolverError::Landscape(e) => classify_landscape(e),
        SolverError::ProjectionStalled { .. } | SolverError::DualStalled { .. } => {
            CliError::Convergence(err.to_string())
        }
        other => CliError::Validation(other.to_string()),
    }
}

fn classify_jc(err: JCError) -> CliError {
    match err {
        JCError::Landscape(e) => classify_landscape(e),
        JCError::SpotCheck { .. } => CliError::Convergence(err.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

/// What to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Bounds,
    Optimal,
    Sweep,
    Entangled,
    Verify,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Task::Bounds => "bounds",
            Task::Optimal => "optimal",
            Task::Sweep => "sweep",
            Task::Entangled => "entangled",
            Task::Verify => "verify",
        };
        f.write_str(name)
    }
}

/// Which family of problem the spec describes: explicit matrices or the
/// atom-field case study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Generic,
    Jc,
}

/// A complex matrix in a spec file: rows of [re, im] pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "tStart")]
    pub t_start: f64,
    #[serde(rename = "tEnd")]
    pub t_end: f64,
    pub steps: usize,
}

/// The default duration grid when a sweep spec leaves it out.
pub const DEFAULT_GRID: GridSpec = GridSpec {
    t_start: 0.0,
    t_end: 100.0,
    steps: 1001,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    #[serde(rename = "hA")]
    pub h_a: Spanned<MatrixSpec>,
    #[serde(rename = "hB")]
    pub h_b: Spanned<MatrixSpec>,
}

/// Explicit matrices of a generic bipartite problem. Spans are kept so
/// invariant failures can point back into the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(rename = "hA0")]
    pub h_a0: Spanned<MatrixSpec>,
    #[serde(rename = "hB0")]
    pub h_b0: Spanned<MatrixSpec>,
    #[serde(rename = "rhoA")]
    pub rho_a: Spanned<MatrixSpec>,
    #[serde(rename = "oA")]
    pub o_a: Spanned<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub couplings: Vec<CouplingSpec>,
}

/// Optional numerical knobs; anything absent uses the library default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Tolerances {
    /// Relative window for grouping degenerate optimal eigenvalues.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<f64>,
    /// Stationarity tolerance for the pinned-marginal solver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_tol: Option<f64>,
    /// Iteration cap for the pinned-marginal solver.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    /// Gradient step; defaults to the reciprocal spectral radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

/// One problem, one task: the parsed form of a spec file.
///
/// Top-level scalars first (TOML wants values before tables), then the
/// `grid`, `system`/`jc`, and `tolerances` tables. Exactly one of `system`
/// and `jc` must be present, matching `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: SpecKind,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<Sense>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jc: Option<JCParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

impl ProblemSpec {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn sense(&self) -> Sense {
        self.sense.unwrap_or(Sense::Maximize)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid.unwrap_or(DEFAULT_GRID)
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.unwrap_or_default()
    }
}

/// 1-based line and column of a byte offset.
fn position(source: &str, offset: usize) -> (usize, usize) {
    let clamped = offset.min(source.len());
    let upto = &source[..clamped];
    let line = upto.bytes().filter(|&b| b == b'\n').count() + 1;
    let column = upto.rfind('\n').map_or(clamped + 1, |p| clamped - p);
    (line, column)
}

fn located(path: &Path, source: &str, span: Range<usize>, message: impl fmt::Display) -> CliError {
    let (line, column) = position(source, span.start);
    CliError::Validation(format!("{}:{line}:{column}: {message}", path.display()))
}

fn matrix_from_spec(rows: &MatrixSpec) -> Result<ComplexMatrix, String> {
    let n_rows = rows.len();
    if n_rows == 0 {
        return Err("matrix has no rows".into());
    }
    let n_cols = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n_cols {
            return Err(format!(
                "row {i} has {} entries, row 0 has {n_cols}",
                row.len()
            ));
        }
    }
    let entries = rows
        .iter()
        .flat_map(|row| row.iter().map(|&[re, im]| num_complex::Complex64::new(re, im)))
        .collect();
    ComplexMatrix::new(n_rows, n_cols, entries).map_err(|e| e.to_string())
}

fn matrix_to_spec(m: &ComplexMatrix) -> MatrixSpec {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let z = m.get(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

/// The span of the named Hamiltonian block inside a system table, for error
/// messages that point into the file.
fn block_span(system: &SystemSpec, block: &str) -> Option<Range<usize>> {
    match block {
        "hA0" => Some(system.h_a0.span()),
        "hB0" => Some(system.h_b0.span()),
        _ => {
            let rest = block.strip_prefix("couplings[")?;
            let (index, field) = rest.split_once("].")?;
            let coupling = system.couplings.get(index.parse::<usize>().ok()?)?;
            match field {
                "hA" => Some(coupling.h_a.span()),
                "hB" => Some(coupling.h_b.span()),
                _ => None,
            }
        }
    }
}

/// The matrices of a materialized problem.
pub struct Problem {
    pub hamiltonian: BipartiteHamiltonian,
    pub rho_a: DensityMatrix,
    pub o_a: Observable,
}

fn build_generic(
    system: &SystemSpec,
    diag: Option<(&Path, &str)>,
) -> Result<Problem, CliError> {
    let fail = |span: Range<usize>, label: &str, message: String| match diag {
        Some((path, source)) => located(path, source, span, format!("{label}: {message}")),
        None => CliError::Validation(format!("{label}: {message}")),
    };
    let load = |field: &Spanned<MatrixSpec>, label: &str| {
        matrix_from_spec(field.get_ref()).map_err(|m| fail(field.span(), label, m))
    };
    let h_a0 = load(&system.h_a0, "hA0")?;
    let h_b0 = load(&system.h_b0, "hB0")?;
    let mut couplings = Vec::with_capacity(system.couplings.len());
    for (k, pair) in system.couplings.iter().enumerate() {
        couplings.push((
            load(&pair.h_a, &format!("couplings[{k}].hA"))?,
            load(&pair.h_b, &format!("couplings[{k}].hB"))?,
        ));
    }
    let hamiltonian = BipartiteHamiltonian::new(h_a0, h_b0, couplings).map_err(|e| match &e {
        LandscapeError::BlockNotHermitian { block, .. }
        | LandscapeError::BlockShape { block, .. } => {
            match block_span(system, block) {
                Some(span) => fail(span, block, e.to_string()),
                None => CliError::Validation(e.to_string()),
            }
        }
        _ => CliError::Validation(e.to_string()),
    })?;
    let rho_a = DensityMatrix::new(load(&system.rho_a, "rhoA")?)
        .map_err(|e| fail(system.rho_a.span(), "rhoA", e.to_string()))?;
    let o_a = Observable::new(load(&system.o_a, "oA")?)
        .map_err(|e| fail(system.o_a.span(), "oA", e.to_string()))?;
    if rho_a.dim() != hamiltonian.dim_a() {
        return Err(fail(
            system.rho_a.span(),
            "rhoA",
            format!(
                "dimension {} does not match hA0 dimension {}",
                rho_a.dim(),
                hamiltonian.dim_a()
            ),
        ));
    }
    if o_a.dim() != hamiltonian.dim_a() {
        return Err(fail(
            system.o_a.span(),
            "oA",
            format!(
                "dimension {} does not match hA0 dimension {}",
                o_a.dim(),
                hamiltonian.dim_a()
            ),
        ));
    }
    Ok(Problem {
        hamiltonian,
        rho_a,
        o_a,
    })
}

/// Materialize the spec's matrices: the explicit ones, or the atom-field
/// Hamiltonian with the |g⟩-prepared atom and excited-state projector.
pub fn build_problem(spec: &ProblemSpec) -> Result<Problem, CliError> {
    match spec.kind {
        SpecKind::Generic => {
            let system = spec
                .system
                .as_ref()
                .ok_or_else(|| CliError::Validation("kind=generic needs a [system] table".into()))?;
            build_generic(system, None)
        }
        SpecKind::Jc => {
            let params = spec
                .jc
                .ok_or_else(|| CliError::Validation("kind=jc needs a [jc] table".into()))?;
            let hamiltonian = build_jc(&params).map_err(classify_jc)?;
            Ok(Problem {
                hamiltonian,
                rho_a: DensityMatrix::basis_state(2, 0),
                o_a: Observable::basis_projector(2, 1),
            })
        }
    }
}

fn validate_spec(spec: &ProblemSpec, source: &str, path: &Path) -> Result<(), CliError> {
    match spec.kind {
        SpecKind::Generic => {
            if spec.jc.is_some() {
                return Err(CliError::Validation(format!(
                    "{}: kind=generic must not carry a [jc] table",
                    path.display()
                )));
            }
            let system = spec.system.as_ref().ok_or_else(|| {
                CliError::Validation(format!("{}: kind=generic needs a [system] table", path.display()))
            })?;
            build_generic(system, Some((path, source)))?;
        }
        SpecKind::Jc => {
            if spec.system.is_some() {
                return Err(CliError::Validation(format!(
                    "{}: kind=jc must not carry a [system] table",
                    path.display()
                )));
            }
            let params = spec.jc.ok_or_else(|| {
                CliError::Validation(format!("{}: kind=jc needs a [jc] table", path.display()))
            })?;
            params.validate().map_err(|e| {
                CliError::Validation(format!("{}: {e}", path.display()))
            })?;
        }
    }
    if matches!(spec.task, Task::Bounds | Task::Optimal | Task::Entangled)
        && spec.duration.is_none()
    {
        return Err(CliError::Validation(format!(
            "{}: task={} needs a duration T",
            path.display(),
            spec.task
        )));
    }
    if let Some(t) = spec.duration {
        if !t.is_finite() {
            return Err(CliError::Validation(format!(
                "{}: duration T must be finite",
                path.display()
            )));
        }
    }
    if spec.task == Task::Sweep && spec.kind != SpecKind::Jc {
        return Err(CliError::Validation(format!(
            "{}: task=sweep needs kind=jc (duration sweeps are defined for the atom-field case study)",
            path.display()
        )));
    }
    if let Some(grid) = spec.grid {
        check_grid(&grid).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    }
    let tol = spec.tolerances();
    for (name, value) in [
        ("degeneracy", tol.degeneracy),
        ("solverTol", tol.solver_tol),
        ("step", tol.step),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Validation(format!(
                    "{}: tolerances.{name} must be positive and finite, got {v}",
                    path.display()
                )));
            }
        }
    }
    if tol.max_iters == Some(0) {
        return Err(CliError::Validation(format!(
            "{}: tolerances.maxIters must be at least 1",
            path.display()
        )));
    }
    Ok(())
}

fn check_grid(grid: &GridSpec) -> Result<(), String> {
    if !(grid.t_start.is_finite() && grid.t_end.is_finite()) {
        return Err("grid endpoints must be finite".into());
    }
    if grid.t_end < grid.t_start {
        return Err(format!(
            "grid runs backwards: {} > {}",
            grid.t_start, grid.t_end
        ));
    }
    if grid.steps < 1 {
        return Err("grid needs at least one point".into());
    }
    Ok(())
}

/// Read and fully validate a spec file: TOML syntax, table coherence, every
/// matrix against its type invariants. Validation failures carry
/// `file:line:column` positions.
pub fn parse_spec(path: &Path) -> Result<ProblemSpec, CliError> {
    let source = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let spec: ProblemSpec = toml::from_str(&source)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    validate_spec(&spec, &source, path)?;
    Ok(spec)
}

/// Spec serialization, inverse of [`parse_spec`] up to formatting.
pub fn render_spec(spec: &ProblemSpec) -> Result<String, CliError> {
    toml::to_string(spec).map_err(|e| CliError::Validation(format!("cannot serialize spec: {e}")))
}

/// The spec file's declared task must match the command actually invoked;
/// anything else is a sign the wrong file was passed.
pub fn ensure_task(spec: &ProblemSpec, expected: Task) -> Result<(), CliError> {
    if spec.task != expected {
        return Err(CliError::Validation(format!(
            "spec file declares task={} but the command is {expected}",
            spec.task
        )));
    }
    Ok(())
}

/// `tStart:tEnd:steps`, e.g. `0:100:1001`.
pub fn parse_grid_arg(arg: &str) -> Result<GridSpec, CliError> {
    let parts: Vec<&str> = arg.split(':').collect();
    let bad = || CliError::Parse(format!("--grid expects tStart:tEnd:steps, got {arg:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let grid = GridSpec {
        t_start: parts[0].parse().map_err(|_| bad())?,
        t_end: parts[1].parse().map_err(|_| bad())?,
        steps: parts[2].parse().map_err(|_| bad())?,
    };
    check_grid(&grid).map_err(CliError::Parse)?;
    Ok(grid)
}

/// Fold command-line overrides into the parsed spec.
pub fn apply_overrides(
    spec: &mut ProblemSpec,
    seed: Option<u64>,
    grid: Option<GridSpec>,
    sense: Option<Sense>,
) {
    if seed.is_some() {
        spec.seed = seed;
    }
    if grid.is_some() {
        spec.grid = grid;
    }
    if sense.is_some() {
        spec.sense = sense;
    }
}

/// 12 significant digits, scientific, locale-independent.
fn sig(v: f64) -> String {
    format!("{:.11e}", v)
}

fn write_file(out: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(out, contents).map_err(|e| CliError::Parse(format!("{}: {e}", out.display())))
}

fn write_json<T: Serialize>(out: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    write_file(out, &text)
}

#[derive(Serialize)]
struct BoundsOut {
    #[serde(rename = "jMin")]
    j_min: f64,
    #[serde(rename = "jMax")]
    j_max: f64,
    #[serde(rename = "T")]
    t: f64,
}

#[derive(Serialize)]
struct OptimalOut {
    objective: f64,
    degeneracy: usize,
    representative: MatrixSpec,
    eigenspace: MatrixSpec,
}

#[derive(Serialize)]
struct ReportOut {
    objective: f64,
    state: MatrixSpec,
    iterations: usize,
    constraint_residual: f64,
    objective_history: Vec<f64>,
    converged: bool,
}

fn required_duration(spec: &ProblemSpec) -> Result<f64, CliError> {
    spec.duration.ok_or_else(|| {
        CliError::Validation(format!("task={} needs a duration T", spec.task))
    })
}

fn sweep_csv(result: &SweepResult) -> String {
    let mut text = String::from("T,j_max,j_min,argmax_level\n");
    for i in 0..result.times.len() {
        text.push_str(&format!(
            "{},{},{},{}\n",
            sig(result.times[i]),
            sig(result.j_max[i]),
            sig(result.j_min[i]),
            result.argmax_level[i]
        ));
    }
    text
}

/// Combined long-form sweep data, one row per (T, truncation) pair, with
/// the truncation size and detuning on every row so plotting tools can facet
/// without reshaping. All sweeps must share one duration grid.
pub fn emit_plotdata(sweeps: &[SweepResult], out: &Path) -> Result<(), CliError> {
    let first = sweeps
        .first()
        .ok_or_else(|| CliError::Validation("no sweeps to emit".into()))?;
    for s in sweeps {
        if s.times != first.times {
            return Err(CliError::Validation(
                "sweeps disagree on the duration grid".into(),
            ));
        }
    }
    let mut text = String::from("T,j_max,j_min,argmax_level,n_levels,delta\n");
    for s in sweeps {
        let delta = sig(s.params.detuning());
        for i in 0..s.times.len() {
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                sig(s.times[i]),
                sig(s.j_max[i]),
                sig(s.j_min[i]),
                s.argmax_level[i],
                s.params.n_b,
                delta
            ));
        }
    }
    write_file(out, &text)
}

fn optimal_out(solution: &OptimalSolution) -> OptimalOut {
    OptimalOut {
        objective: solution.objective,
        degeneracy: solution.degeneracy,
        representative: matrix_to_spec(solution.representative.matrix()),
        eigenspace: matrix_to_spec(&solution.eigenspace),
    }
}

/// Execute the spec's task and write its output file.
///
/// An unconverged entangled solve still writes the full report, then fails
/// with the convergence exit code; a failed verify battery writes the
/// per-property report and fails with the validation code.
pub fn run(spec: &ProblemSpec, out: &Path) -> Result<(), CliError> {
    match spec.task {
        Task::Bounds => {
            let t = required_duration(spec)?;
            let problem = build_problem(spec)?;
            let ob = landscape_observable(&problem.hamiltonian, &problem.rho_a, &problem.o_a, t)
                .map_err(classify_landscape)?;
            let (j_min, j_max) = jq_bounds(&ob);
            write_json(out, &BoundsOut { j_min, j_max, t })
        }
        Task::Optimal => {
            let t = required_duration(spec)?;
            let problem = build_problem(spec)?;
            let ob = landscape_observable(&problem.hamiltonian, &problem.rho_a, &problem.o_a, t)
                .map_err(classify_landscape)?;
            let tol = spec.tolerances().degeneracy.unwrap_or(DEGENERACY_TOL);
            let solution = optimal_state(&ob, spec.sense(), tol);
            write_json(out, &optimal_out(&solution))
        }
        Task::Sweep => {
            let params = spec
                .jc
                .ok_or_else(|| CliError::Validation("task=sweep needs kind=jc".into()))?;
            let grid = spec.grid();
            let result = sweep(&params, grid.t_start, grid.t_end, grid.steps)
                .map_err(classify_jc)?;
            write_file(out, &sweep_csv(&result))
        }
        Task::Entangled => {
            let t = required_duration(spec)?;
            let problem = build_problem(spec)?;
            let entangled = EntangledProblem::new(
                problem.hamiltonian,
                problem.rho_a,
                problem.o_a,
                t,
                spec.sense(),
            )
            .map_err(classify_landscape)?;
            let tol = spec.tolerances();
            let report = optimize_entangled(
                &entangled,
                tol.step,
                tol.max_iters.unwrap_or(100_000),
                tol.solver_tol.unwrap_or(1e-8),
            )
            .map_err(classify_solver)?;
            write_json(
                out,
                &ReportOut {
                    objective: report.objective,
                    state: matrix_to_spec(report.state.matrix()),
                    iterations: report.iterations,
                    constraint_residual: report.constraint_residual,
                    objective_history: report.objective_history.clone(),
                    converged: report.converged,
                },
            )?;
            if !report.converged {
                return Err(CliError::Convergence(format!(
                    "solver unconverged after {} iterations (report written to {})",
                    report.iterations,
                    out.display()
                )));
            }
            Ok(())
        }
        Task::Verify => {
            let report = match spec.kind {
                SpecKind::Generic => {
                    let problem = build_problem(spec)?;
                    checks::generic_battery(
                        &problem.hamiltonian,
                        &problem.rho_a,
                        &problem.o_a,
                        spec.duration.unwrap_or(1.7),
                        spec.seed(),
                    )
                }
                SpecKind::Jc => {
                    let params = spec
                        .jc
                        .ok_or_else(|| CliError::Validation("kind=jc needs a [jc] table".into()))?;
                    checks::jc_battery(&params, spec.grid(), spec.seed())
                }
            };
            write_json(out, &report)?;
            if !report.passed {
                let failed = report.properties.iter().filter(|p| !p.passed).count();
                return Err(CliError::Validation(format!(
                    "{failed} of {} properties failed (report written to {})",
                    report.properties.len(),
                    out.display()
                )));
            }
            Ok(())
        }
    }
}

/// Sweep several truncation sizes on one grid and write the combined
/// long-form CSV.
pub fn run_sweep_levels(
    spec: &ProblemSpec,
    levels: &[usize],
    out: &Path,
) -> Result<(), CliError> {
    let params = spec
        .jc
        .ok_or_else(|| CliError::Validation("task=sweep needs kind=jc".into()))?;
    if levels.is_empty() {
        return Err(CliError::Validation("--levels needs at least one size".into()));
    }
    let grid = spec.grid();
    let mut sweeps = Vec::with_capacity(levels.len());
    for &n_b in levels {
        let swept = sweep(
            &JCParams { n_b, ..params },
            grid.t_start,
            grid.t_end,
            grid.steps,
        )
        .map_err(classify_jc)?;
        sweeps.push(swept);
    }
    emit_plotdata(&sweeps, out)
}
