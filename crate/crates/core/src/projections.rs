//! The three projections, and the harness that checks the artifacts they
//! produce against each other and against the native interpreter.
//!
//! * Projection 1 specializes an interpreter to one dialog: a stager.
//! * Projection 2 specializes the L0 mix to an interpreter: a compiler from
//!   dialogs to stagers.
//! * Projection 3 specializes the L0 mix to itself: a generator of such
//!   compilers from interpreters.
//!
//! The outer specializer is [`mix_host`] by default. [`project2_self_applied`]
//! and [`project3_self_applied`] run the L0 mix instead, which is slower but
//! has no native code between the projections and the evaluator.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::assets::AssetError;
use crate::ddsl::{dialog_to_datum, enumerate_paths, DdslError, DialogSpec, ResponseVector, Step, DEFAULT_PATH_CAP};
use crate::dinterp::{
    direct_compile, host_interp, interp_l0_program, interp_step_l0_program, run_stager, StageOutcome,
    DEFAULT_STAGE_BUDGET,
};
use crate::lcore::{eval, Datum, EvalError, Outcome, Program};
use crate::mixer::{
    alpha_equivalent, assoc, decode_residual, mix_host_with_budget, mix_l0_program, run_mix_l0, BindingSplit,
    BudgetKind, MixBudget, MixError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Dialog(#[from] DdslError),
    #[error("running the {what} failed: {detail}")]
    Generated { what: &'static str, detail: String },
    #[error("interpreter entry `{0}` must take the dialog first and at least one run-time input")]
    BadInterpreter(String),
}

impl ProjectionError {
    pub fn is_budget(&self) -> bool {
        matches!(self, ProjectionError::Mix(MixError::BudgetExceeded { .. }))
    }
}

/// Which specializer ran as the outer mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixEngine {
    Host,
    L0,
}

impl fmt::Display for MixEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixEngine::Host => "host",
            MixEngine::L0 => "l0",
        })
    }
}

fn interp_params(interp: &Program) -> Result<(&str, Vec<String>), ProjectionError> {
    let entry = interp.entry();
    match entry.params.split_first() {
        Some((first, rest)) if !rest.is_empty() => Ok((first, rest.iter().map(|p| p.to_string()).collect())),
        _ => Err(ProjectionError::BadInterpreter(entry.name.to_string())),
    }
}

fn stager_split(interp: &Program, dialog: &Datum) -> Result<BindingSplit, ProjectionError> {
    let (first, rest) = interp_params(interp)?;
    Ok(BindingSplit::new([(first.to_owned(), dialog.clone())], rest))
}

fn dynamic_names(interp: &Program) -> Result<Datum, ProjectionError> {
    Ok(Datum::list(interp_params(interp)?.1.iter().map(|p| Datum::atom(p))))
}

fn compiler_split(interp: &Program) -> Result<BindingSplit, ProjectionError> {
    Ok(BindingSplit::new(
        [("subject".to_owned(), interp.to_datum()), ("dynamic-names".to_owned(), dynamic_names(interp)?)],
        ["static-assoc".to_owned()],
    ))
}

fn cogen_split(mix_l0: &Program) -> BindingSplit {
    BindingSplit::new(
        [
            ("subject".to_owned(), mix_l0.to_datum()),
            ("dynamic-names".to_owned(), Datum::list([Datum::atom("static-assoc")])),
        ],
        ["static-assoc".to_owned()],
    )
}

/// Projection 1: a stager for `dialog`, taking the interpreter's run-time
/// inputs.
pub fn project1(interp: &Program, dialog: &Datum) -> Result<Program, ProjectionError> {
    project1_with_budget(interp, dialog, MixBudget::default())
}

pub fn project1_with_budget(interp: &Program, dialog: &Datum, budget: MixBudget) -> Result<Program, ProjectionError> {
    Ok(mix_host_with_budget(interp, &stager_split(interp, dialog)?, budget)?)
}

/// Projection 2: a compiler taking `((dialog <dialog>))` to a stager.
pub fn project2(mix_l0: &Program, interp: &Program) -> Result<Program, ProjectionError> {
    project2_with_budget(mix_l0, interp, MixBudget::default())
}

pub fn project2_with_budget(mix_l0: &Program, interp: &Program, budget: MixBudget) -> Result<Program, ProjectionError> {
    Ok(mix_host_with_budget(mix_l0, &compiler_split(interp)?, budget)?)
}

/// Projection 3: a compiler generator taking
/// `((subject <interpreter>) (dynamic-names (<param> ...)))` to a compiler.
pub fn project3(mix_l0: &Program) -> Result<Program, ProjectionError> {
    project3_with_budget(mix_l0, MixBudget::default())
}

pub fn project3_with_budget(mix_l0: &Program, budget: MixBudget) -> Result<Program, ProjectionError> {
    Ok(mix_host_with_budget(mix_l0, &cogen_split(mix_l0), budget)?)
}

/// Projection 2 with the L0 mix as the outer specializer too.
pub fn project2_self_applied(mix_l0: &Program, interp: &Program, max_steps: u64) -> Result<Program, ProjectionError> {
    Ok(run_mix_l0(mix_l0, mix_l0, &compiler_split(interp)?, max_steps)?.residual)
}

/// Projection 3 with the L0 mix as the outer specializer too.
pub fn project3_self_applied(mix_l0: &Program, max_steps: u64) -> Result<Program, ProjectionError> {
    Ok(run_mix_l0(mix_l0, mix_l0, &cogen_split(mix_l0), max_steps)?.residual)
}

fn run_generator(what: &'static str, p: &Program, arg: Datum, max_steps: u64) -> Result<Program, ProjectionError> {
    let report = eval(p, &[arg], max_steps).map_err(|e| match e {
        EvalError::BudgetExceeded { budget } => {
            ProjectionError::Mix(MixError::BudgetExceeded { kind: BudgetKind::Steps, limit: budget })
        }
        other => ProjectionError::Generated { what, detail: other.to_string() },
    })?;
    match report.outcome {
        Outcome::Value(d) => decode_residual(&d).map_err(|e| ProjectionError::Generated { what, detail: e.to_string() }),
        Outcome::Abort(d) => Err(ProjectionError::Generated { what, detail: format!("aborted with {d}") }),
    }
}

/// Runs a Projection 2 compiler built from `interp` on `dialog`.
pub fn apply_compiler(
    compiler: &Program,
    interp: &Program,
    dialog: &Datum,
    max_steps: u64,
) -> Result<Program, ProjectionError> {
    let (first, _) = interp_params(interp)?;
    run_generator("compiler", compiler, assoc([(first, dialog.clone())]), max_steps)
}

/// Runs a Projection 3 compiler generator on `interp`.
pub fn apply_cogen(cogen: &Program, interp: &Program, max_steps: u64) -> Result<Program, ProjectionError> {
    let arg = assoc([("subject", interp.to_datum()), ("dynamic-names", dynamic_names(interp)?)]);
    run_generator("compiler generator", cogen, arg, max_steps)
}

/// Writes `program` in canonical form to `dir/file`.
pub fn write_program(dir: &Path, file: &str, program: &Program) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(file);
    fs::write(&path, program.to_text())?;
    Ok(path)
}

/// The interpreter-independent half of the projections, plus the compilers
/// derived for the batch interpreter.
#[derive(Debug, Clone)]
pub struct Toolchain {
    pub interp: Program,
    pub interp_step: Program,
    pub mix_l0: Program,
    /// Projection 2 on `interp`.
    pub compiler: Program,
    /// Projection 3.
    pub cogen: Program,
    /// `cogen` run on `interp`; expected to be `compiler` up to renaming.
    pub cogen_compiler: Result<Program, String>,
    pub provenance: Provenance,
    pub budget: MixBudget,
    pub run_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub stagers: MixEngine,
    pub compiler: MixEngine,
    pub cogen: MixEngine,
}

impl Toolchain {
    /// Builds from the bundled assets with the host mix outside.
    pub fn bundled(budget: MixBudget) -> Result<Toolchain, ProjectionError> {
        Toolchain::from_programs(interp_l0_program()?, interp_step_l0_program()?, mix_l0_program()?, budget)
    }

    pub fn from_programs(
        interp: Program,
        interp_step: Program,
        mix_l0: Program,
        budget: MixBudget,
    ) -> Result<Toolchain, ProjectionError> {
        let compiler = project2_with_budget(&mix_l0, &interp, budget)?;
        let cogen = project3_with_budget(&mix_l0, budget)?;
        Ok(Toolchain::assemble(interp, interp_step, mix_l0, compiler, cogen, budget, MixEngine::Host))
    }

    /// Replaces the outer host mix by the L0 one for Projections 2 and 3.
    pub fn self_applied(budget: MixBudget) -> Result<Toolchain, ProjectionError> {
        let (interp, interp_step, mix_l0) = (interp_l0_program()?, interp_step_l0_program()?, mix_l0_program()?);
        let compiler = project2_self_applied(&mix_l0, &interp, budget.max_steps)?;
        let cogen = project3_self_applied(&mix_l0, budget.max_steps)?;
        Ok(Toolchain::assemble(interp, interp_step, mix_l0, compiler, cogen, budget, MixEngine::L0))
    }

    /// Uses already-built artifacts as they are.
    pub fn assemble(
        interp: Program,
        interp_step: Program,
        mix_l0: Program,
        compiler: Program,
        cogen: Program,
        budget: MixBudget,
        outer: MixEngine,
    ) -> Toolchain {
        let run_steps = budget.max_steps.max(DEFAULT_STAGE_BUDGET);
        let cogen_compiler = apply_cogen(&cogen, &interp, run_steps).map_err(|e| e.to_string());
        Toolchain {
            interp,
            interp_step,
            mix_l0,
            compiler,
            cogen,
            cogen_compiler,
            provenance: Provenance { stagers: MixEngine::Host, compiler: outer, cogen: outer },
            budget,
            run_steps,
        }
    }

    /// Stager for the incremental interpreter.
    pub fn step_stager(&self, spec: &DialogSpec) -> Result<Program, ProjectionError> {
        project1_with_budget(&self.interp_step, &dialog_to_datum(spec), self.budget)
    }
}

/// Every way of staging one dialog.
#[derive(Debug, Clone)]
pub struct StagedDialog {
    pub spec: DialogSpec,
    pub direct: Program,
    pub p1: Program,
    pub p2: Result<Program, String>,
    pub p3: Result<Program, String>,
}

impl StagedDialog {
    pub fn build(tc: &Toolchain, spec: &DialogSpec) -> Result<StagedDialog, ProjectionError> {
        let g = dialog_to_datum(spec);
        let p1 = project1_with_budget(&tc.interp, &g, tc.budget)?;
        let p2 = apply_compiler(&tc.compiler, &tc.interp, &g, tc.run_steps).map_err(|e| e.to_string());
        let p3 = match &tc.cogen_compiler {
            Ok(c) => apply_compiler(c, &tc.interp, &g, tc.run_steps).map_err(|e| e.to_string()),
            Err(e) => Err(format!("no compiler from the compiler generator: {e}")),
        };
        Ok(StagedDialog { spec: spec.clone(), direct: direct_compile(spec), p1, p2, p3 })
    }
}

pub const ENGINES: [&str; 6] = ["host-interp", "interp-l0", "direct-compile", "p1-stager", "p2-stager", "p3-stager"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// A complete, valid response vector.
    Path,
    /// A vector that must be rejected.
    Probe,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub engine: &'static str,
    pub result: Result<StageOutcome, String>,
    pub steps: Option<u64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub responses: ResponseVector,
    pub kind: RowKind,
    pub expected: StageOutcome,
    pub cells: Vec<Cell>,
}

impl Row {
    fn steps_of(&self, engine: &str) -> Option<u64> {
        self.cells.iter().find(|c| c.engine == engine).and_then(|c| c.steps)
    }

    /// `(interpreter steps, stager steps)`.
    pub fn speedup(&self) -> Option<(u64, u64)> {
        Some((self.steps_of("interp-l0")?, self.steps_of("p1-stager")?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureReport {
    pub dialog: String,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixReport {
    pub checks: Vec<Check>,
    pub fixtures: Vec<FixtureReport>,
}

/// The first cell or check that did not pass.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{fixture} / {location} / {column}: {detail}")]
pub struct MatrixFailure {
    pub fixture: String,
    pub location: String,
    pub column: String,
    pub detail: String,
}

fn show(result: &Result<StageOutcome, String>) -> String {
    match result {
        Ok(o) => o.to_string(),
        Err(e) => format!("error: {e}"),
    }
}

impl MatrixReport {
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn first_failure(&self) -> Option<MatrixFailure> {
        let check_failure = |fixture: &str, c: &Check| MatrixFailure {
            fixture: fixture.to_owned(),
            location: "check".into(),
            column: c.name.clone(),
            detail: c.detail.clone(),
        };
        for f in &self.fixtures {
            for row in &f.rows {
                if let Some(cell) = row.cells.iter().find(|c| !c.pass) {
                    return Some(MatrixFailure {
                        fixture: f.dialog.clone(),
                        location: row.responses.to_string(),
                        column: cell.engine.to_owned(),
                        detail: format!("expected {}, got {}", row.expected, show(&cell.result)),
                    });
                }
            }
            if let Some(c) = f.checks.iter().find(|c| !c.pass) {
                return Some(check_failure(&f.dialog, c));
            }
        }
        self.checks.iter().find(|c| !c.pass).map(|c| check_failure("toolchain", c))
    }

    pub fn cell_count(&self) -> usize {
        self.fixtures.iter().flat_map(|f| &f.rows).map(|r| r.cells.len()).sum()
    }

    /// Human-readable table: one line per row, one column per engine.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!("{} {}  {}\n", mark(c.pass), c.name, c.detail));
        }
        for f in &self.fixtures {
            out.push_str(&format!("\n== {} ==\n", f.dialog));
            let width = f.rows.iter().map(|r| r.responses.to_string().len()).max().unwrap_or(2).max(9);
            out.push_str(&format!("{:<width$}  kind  ", "responses"));
            for e in ENGINES {
                out.push_str(&format!("{e:<15}"));
            }
            out.push_str("interp/stager steps\n");
            for row in &f.rows {
                let kind = match row.kind {
                    RowKind::Path => "path ",
                    RowKind::Probe => "probe",
                };
                out.push_str(&format!("{:<width$}  {kind} ", row.responses.to_string()));
                for c in &row.cells {
                    out.push_str(&format!("{:<15}", mark(c.pass)));
                }
                if let Some((i, s)) = row.speedup() {
                    out.push_str(&format!("{i}/{s}"));
                }
                out.push('\n');
            }
            for c in &f.checks {
                out.push_str(&format!("{} {}  {}\n", mark(c.pass), c.name, c.detail));
            }
        }
        let verdict = match self.first_failure() {
            None => format!("\nall {} cells and all checks pass\n", self.cell_count()),
            Some(f) => format!("\nFAILED at {f}\n"),
        };
        out.push_str(&verdict);
        out
    }
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "FAIL"
    }
}

/// Vectors that must be rejected, derived from the valid ones: an unknown
/// answer in last place, a missing last answer, and one answer too many.
fn probes(paths: &[ResponseVector]) -> Vec<ResponseVector> {
    let mut out: Vec<ResponseVector> = Vec::new();
    let mut push = |v: ResponseVector| {
        if !out.contains(&v) && !paths.contains(&v) {
            out.push(v);
        }
    };
    for p in paths {
        if let Some((_, init)) = p.0.split_last() {
            let mut wrong = init.to_vec();
            wrong.push("bogus".into());
            push(ResponseVector(wrong));
            push(ResponseVector(init.to_vec()));
        }
        let mut extra = p.0.clone();
        extra.push("extra".into());
        push(ResponseVector(extra));
    }
    out
}

fn stage_cell(engine: &'static str, program: Result<&Program, &String>, args: &[Datum], expected: &StageOutcome) -> Cell {
    let (result, steps) = match program {
        Ok(p) => match run_stager(p, args, DEFAULT_STAGE_BUDGET) {
            Ok(run) => (Ok(run.outcome), Some(run.steps)),
            Err(e) => (Err(e.to_string()), None),
        },
        Err(e) => (Err(e.clone()), None),
    };
    let pass = result.as_ref() == Ok(expected);
    Cell { engine, result, steps, pass }
}

/// Every vector over the dialog's choices (plus one unknown answer) up to one
/// longer than the longest path; the ones the host interpreter accepts must
/// be exactly the enumerated paths.
fn path_oracle(spec: &DialogSpec, paths: &[ResponseVector]) -> Check {
    let mut alphabet: Vec<String> = Vec::new();
    for (_, _, choices) in spec.prompts() {
        for c in choices {
            if !alphabet.contains(c) {
                alphabet.push(c.clone());
            }
        }
    }
    alphabet.push("bogus".into());
    let max_len = paths.iter().map(|p| p.0.len()).max().unwrap_or(0) + 1;
    let total: usize = (0..=max_len).map(|n| alphabet.len().saturating_pow(n as u32)).sum();
    if total > 2_000_000 {
        return Check {
            name: "path-oracle".into(),
            pass: true,
            detail: format!("skipped: {total} vectors in the cross product"),
        };
    }
    let mut accepted = Vec::new();
    let mut current = Vec::new();
    fn go(spec: &DialogSpec, alphabet: &[String], max: usize, cur: &mut Vec<String>, acc: &mut Vec<ResponseVector>) {
        let v = ResponseVector(cur.clone());
        if matches!(host_interp(spec, &v), StageOutcome::Done { .. }) {
            acc.push(v);
        }
        if cur.len() < max {
            for a in alphabet {
                cur.push(a.clone());
                go(spec, alphabet, max, cur, acc);
                cur.pop();
            }
        }
    }
    go(spec, &alphabet, max_len, &mut current, &mut accepted);
    let mut want = paths.to_vec();
    want.sort();
    accepted.sort();
    Check {
        name: "path-oracle".into(),
        pass: accepted == want,
        detail: format!("{} of {total} vectors accepted, {} paths enumerated", accepted.len(), want.len()),
    }
}

fn identity_check(name: &str, a: &Result<Program, String>, b: &Result<Program, String>) -> Check {
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let same = alpha_equivalent(a, b);
            Check {
                name: name.into(),
                pass: same,
                detail: if same { "identical after renaming".into() } else { "programs differ".into() },
            }
        }
        (Err(e), _) | (_, Err(e)) => Check { name: name.into(), pass: false, detail: e.clone() },
    }
}

/// Interpreter-specific words the compiler generator must not contain.
fn interpreter_atoms(interp: &Program, mix_l0: &Program) -> Vec<String> {
    let own: std::collections::HashSet<String> = mix_l0.to_datum().atoms().iter().map(|a| a.to_string()).collect();
    let mut out: Vec<String> = interp
        .to_datum()
        .atoms()
        .iter()
        .map(|a| a.to_string())
        .filter(|a| !own.contains(a))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn dialog_atoms(spec: &DialogSpec) -> Vec<String> {
    let mut out = vec![spec.name.clone()];
    fn walk(steps: &[Step], out: &mut Vec<String>) {
        for s in steps {
            match s {
                Step::Prompt { id, choices, .. } => {
                    out.push(id.clone());
                    out.extend(choices.iter().cloned());
                }
                Step::Branch { arms, .. } => arms.iter().for_each(|(_, b)| walk(b, out)),
            }
        }
    }
    walk(&spec.steps, &mut out);
    out
}

/// Checks every engine on every path and probe of every dialog, plus the
/// structural identities between projection outputs.
pub fn run_equivalence_matrix(tc: &Toolchain, dialogs: &[StagedDialog]) -> Result<MatrixReport, ProjectionError> {
    let compiler = Ok(tc.compiler.clone());
    let mut checks = vec![identity_check("cogen(interp) = compiler", &tc.cogen_compiler, &compiler)];
    let cogen_atoms: std::collections::HashSet<String> =
        tc.cogen.to_datum().atoms().iter().map(|a| a.to_string()).collect();
    let mut foreign: Vec<String> = interpreter_atoms(&tc.interp, &tc.mix_l0);
    for d in dialogs {
        foreign.extend(dialog_atoms(&d.spec));
    }
    foreign.retain(|a| cogen_atoms.contains(a));
    foreign.sort();
    foreign.dedup();
    checks.push(Check {
        name: "cogen is dialog-agnostic".into(),
        pass: foreign.is_empty(),
        detail: if foreign.is_empty() { "no dialog or interpreter atoms".into() } else { format!("contains {foreign:?}") },
    });

    let mut fixtures = Vec::new();
    for d in dialogs {
        let g = dialog_to_datum(&d.spec);
        let paths: Vec<ResponseVector> =
            enumerate_paths(&d.spec, DEFAULT_PATH_CAP)?.into_iter().map(|p| p.responses).collect();
        let mut rows = Vec::new();
        let kinds = paths.iter().map(|p| (p.clone(), RowKind::Path));
        for (r, kind) in kinds.chain(probes(&paths).into_iter().map(|p| (p, RowKind::Probe))) {
            let expected = host_interp(&d.spec, &r);
            let rd = r.to_datum();
            let mut cells = vec![Cell {
                engine: ENGINES[0],
                result: Ok(expected.clone()),
                steps: None,
                pass: kind == RowKind::Path && matches!(expected, StageOutcome::Done { .. })
                    || kind == RowKind::Probe && matches!(expected, StageOutcome::Invalid { .. }),
            }];
            cells.push(stage_cell(ENGINES[1], Ok(&tc.interp), &[g.clone(), rd.clone()], &expected));
            cells.push(stage_cell(ENGINES[2], Ok(&d.direct), std::slice::from_ref(&rd), &expected));
            cells.push(stage_cell(ENGINES[3], Ok(&d.p1), std::slice::from_ref(&rd), &expected));
            cells.push(stage_cell(ENGINES[4], d.p2.as_ref(), std::slice::from_ref(&rd), &expected));
            cells.push(stage_cell(ENGINES[5], d.p3.as_ref(), &[rd], &expected));
            rows.push(Row { responses: r, kind, expected, cells });
        }

        let p1 = Ok(d.p1.clone());
        let mut fchecks = vec![
            identity_check("p2-stager = p1-stager", &d.p2, &p1),
            identity_check("p3-stager = p2-stager", &d.p3, &d.p2),
            path_oracle(&d.spec, &paths),
        ];
        let speed: Vec<(u64, u64)> = rows.iter().filter(|r| r.kind == RowKind::Path).filter_map(Row::speedup).collect();
        let slow = speed.iter().filter(|(i, s)| s >= i).count();
        let complete = speed.len() == paths.len();
        fchecks.push(Check {
            name: "speedup".into(),
            pass: complete && slow == 0,
            detail: match (speed.iter().map(|(i, _)| i).sum::<u64>(), speed.iter().map(|(_, s)| s).sum::<u64>()) {
                (i, s) if s > 0 => format!(
                    "stager/interpreter steps {s}/{i} over {} paths ({:.1}x); {slow} paths not faster",
                    speed.len(),
                    i as f64 / s as f64
                ),
                _ => format!("{} of {} paths measured", speed.len(), paths.len()),
            },
        });
        fixtures.push(FixtureReport { dialog: d.spec.name.clone(), rows, checks: fchecks });
    }
    Ok(MatrixReport { checks, fixtures })
}

/// Copy of `program` with the atom `from` replaced by `to` wherever it occurs
/// inside quoted data; `None` if it occurs nowhere.
pub fn corrupt_literal(program: &Program, from: &str, to: &str) -> Option<Program> {
    fn in_quote(d: &Datum, from: &str, to: &str, hit: &mut bool) -> Datum {
        match d {
            Datum::Atom(a) if &**a == from => {
                *hit = true;
                Datum::atom(to)
            }
            Datum::List(l) => Datum::list(l.iter().map(|x| in_quote(x, from, to, hit))),
            other => other.clone(),
        }
    }
    fn walk(d: &Datum, from: &str, to: &str, hit: &mut bool) -> Datum {
        match d.as_list() {
            Some(l) if l.head().is_some_and(|h| h.is_atom("quote")) => {
                Datum::list(l.iter().enumerate().map(|(i, x)| if i == 0 { x.clone() } else { in_quote(x, from, to, hit) }))
            }
            Some(l) => Datum::list(l.iter().map(|x| walk(x, from, to, hit))),
            None => d.clone(),
        }
    }
    let mut hit = false;
    let datum = walk(&program.to_datum(), from, to, &mut hit);
    if !hit {
        return None;
    }
    crate::lcore::lift_program(&datum).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddsl::parse_dialog;

    const COFFEE: &str = include_str!("../../../fixtures/coffee.dlg");

    #[test]
    fn projection_one_stages_coffee() {
        let interp = interp_l0_program().unwrap();
        let spec = parse_dialog(COFFEE).unwrap();
        let stager = project1(&interp, &dialog_to_datum(&spec)).unwrap();
        assert_eq!(stager.entry().params.len(), 1);
        let r: ResponseVector = ["small", "dark", "no"].into_iter().collect();
        let out = run_stager(&stager, &[r.to_datum()], 100_000).unwrap();
        assert_eq!(out.outcome, host_interp(&spec, &r));
    }

    #[test]
    fn corrupt_literal_only_touches_quotes() {
        let p = crate::lcore::load_program("(program (def f (done) (if (eq? done 'done) 'x '(a done))))").unwrap();
        let q = corrupt_literal(&p, "done", "dome").unwrap();
        assert_eq!(q.to_text(), "(program\n  (def f (done) (if (eq? done (quote dome)) (quote x) (quote (a dome)))))\n");
        assert!(corrupt_literal(&p, "zzz", "y").is_none());
    }

    #[test]
    fn bad_interpreter_shape() {
        let p = crate::lcore::load_program("(program (def f (x) x))").unwrap();
        assert!(matches!(project1(&p, &Datum::nil()), Err(ProjectionError::BadInterpreter(_))));
    }
}
