mod stage;

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use futamix::assets::{self, AssetError};
use futamix::ddsl::{dialog_to_datum, parse_dialog, DdslError, DialogSpec};
use futamix::dinterp::StageError;
use futamix::lcore::{eval, load_program, parse_datum, EvalError, LoadError, Outcome};
use futamix::mixer::{mix_host_with_budget, run_mix_l0, BindingSplit, MixBudget, MixError};
use futamix::projections::{
    project1_with_budget, project2_self_applied, project2_with_budget, project3_self_applied, project3_with_budget,
    run_equivalence_matrix, write_program, ProjectionError, RowKind, StagedDialog, Toolchain,
};
use futamix::{Datum, Program};
use serde_json::json;

use crate::stage::StageEngine;

#[derive(Parser)]
#[command(name = "futamix", version, about = "Partial evaluation and dialog staging by the Futamura projections")]
struct Cli {
    /// Print machine-readable JSON lines instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an L0 program.
    Run {
        file: PathBuf,
        /// Arguments as one datum list, e.g. '(3 (a b))'.
        #[arg(long, default_value = "()")]
        args: String,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Specialize an L0 program to some of its inputs.
    Mix {
        subject: PathBuf,
        /// A static input as NAME=DATUM. Repeatable.
        #[arg(long = "static", value_name = "NAME=DATUM")]
        statics: Vec<String>,
        /// A dynamic parameter name. Repeatable.
        #[arg(long = "dynamic", value_name = "NAME")]
        dynamics: Vec<String>,
        /// Which specializer to run.
        #[arg(long, value_enum, default_value_t = MixWith::Host)]
        engine: MixWith,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Write the residual program here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the three projections and write the result.
    Project {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
        /// Dialog to stage (Projection 1 only).
        #[arg(long)]
        dialog: Option<PathBuf>,
        /// Use the incremental interpreter instead of the batch one.
        #[arg(long)]
        step: bool,
        /// Run the L0 mix as the outer specializer instead of the host one.
        #[arg(long)]
        self_applied: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, env = "FUTAMIX_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Walk a dialog interactively, reading responses from stdin.
    Stage {
        dialog: PathBuf,
        #[arg(long, value_enum, default_value_t = StageEngine::Stager)]
        engine: StageEngine,
        /// Stop at the first invalid response instead of asking again.
        #[arg(long)]
        strict: bool,
    },
    /// Run the equivalence matrix over a directory of dialogs.
    Check {
        #[arg(default_value = "fixtures")]
        fixtures: PathBuf,
        /// Load mix.l0, interp.l0 and interp_step.l0 from here.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Register every *.dlg in this directory at startup.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Append-only event log, replayed at startup.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MixWith {
    Host,
    L0,
}

#[derive(clap::Args)]
struct BudgetArgs {
    /// Maximum specialization points.
    #[arg(long)]
    budget_points: Option<usize>,
    /// Maximum evaluation steps (static steps, or L0 mix steps when self-applied).
    #[arg(long)]
    budget_steps: Option<u64>,
}

impl BudgetArgs {
    fn resolve(&self, default_steps: u64) -> MixBudget {
        let d = MixBudget::default();
        MixBudget {
            max_points: self.budget_points.unwrap_or(d.max_points),
            max_steps: self.budget_steps.unwrap_or(default_steps),
        }
    }
}

const SELF_APPLIED_STEPS: u64 = 1_000_000_000;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Eval = 1,
    Input = 2,
    Budget = 3,
    Environment = 4,
}

#[derive(Debug)]
struct Failure {
    exit: Exit,
    message: String,
}

impl Failure {
    fn new(exit: Exit, message: impl fmt::Display) -> Failure {
        Failure { exit, message: message.to_string() }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Failure {
        let exit = if matches!(e, EvalError::BudgetExceeded { .. }) { Exit::Budget } else { Exit::Eval };
        Failure::new(exit, e)
    }
}

impl From<MixError> for Failure {
    fn from(e: MixError) -> Failure {
        match e {
            MixError::BudgetExceeded { .. } => Failure::new(Exit::Budget, e),
            MixError::BadSplit(_) => Failure::new(Exit::Input, e),
            MixError::Asset(a) => a.into(),
            _ => Failure::new(Exit::Eval, e),
        }
    }
}

impl From<AssetError> for Failure {
    fn from(e: AssetError) -> Failure {
        Failure::new(Exit::Environment, e)
    }
}

impl From<ProjectionError> for Failure {
    fn from(e: ProjectionError) -> Failure {
        match e {
            ProjectionError::Mix(m) => m.into(),
            ProjectionError::Asset(a) => a.into(),
            ProjectionError::Dialog(_) | ProjectionError::BadInterpreter(_) => Failure::new(Exit::Input, e),
            ProjectionError::Generated { .. } => Failure::new(Exit::Eval, e),
        }
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Failure {
        match e {
            StageError::Eval(e) => e.into(),
            other => Failure::new(Exit::Eval, other),
        }
    }
}

impl From<DdslError> for Failure {
    fn from(e: DdslError) -> Failure {
        Failure::new(Exit::Input, e)
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(Exit::Input, format!("{}: {e}", path.display())))
}

fn load_file(path: &Path) -> Result<Program, Failure> {
    let text = read_input(path)?;
    load_program(&text).map_err(|e: LoadError| Failure::new(Exit::Input, format!("{}: {e}", path.display())))
}

fn load_dialog(path: &Path) -> Result<DialogSpec, Failure> {
    parse_dialog(&read_input(path)?).map_err(|e| Failure::new(Exit::Input, format!("{}: {e}", path.display())))
}

fn datum_arg(text: &str) -> Result<Datum, Failure> {
    parse_datum(text).map_err(|e| Failure::new(Exit::Input, format!("`{text}`: {e}")))
}

fn write_out(dir: &Path, file: &str, program: &Program) -> Result<PathBuf, Failure> {
    write_program(dir, file, program).map_err(|e| Failure::new(Exit::Environment, format!("{}: {e}", dir.display())))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let cli = Cli::parse();
    let json = cli.json;
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            if json {
                println!("{}", json!({ "error": f.message, "exit": f.exit as u8 }));
            } else {
                eprintln!("futamix: {}", f.message);
            }
            ExitCode::from(f.exit as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Failure> {
    let json = cli.json;
    match cli.command {
        Command::Run { file, args, budget } => run(&file, &args, budget, json),
        Command::Mix { subject, statics, dynamics, engine, budget, out } => {
            mix(&subject, &statics, dynamics, engine, &budget, out.as_deref(), json)
        }
        Command::Project { which, dialog, step, self_applied, budget, out } => {
            project(which, dialog.as_deref(), step, self_applied, &budget, &out, json)
        }
        Command::Stage { dialog, engine, strict } => {
            let spec = load_dialog(&dialog)?;
            stage::interact(&spec, engine, strict, json, std::io::stdin().lock(), std::io::stdout().lock(), std::io::stderr())
        }
        Command::Check { fixtures, assets } => check(&fixtures, assets.as_deref(), json),
        Command::Serve { host, port, fixtures, journal } => serve(&host, port, fixtures, journal),
    }
}

fn run(file: &Path, args: &str, budget: u64, json: bool) -> Result<ExitCode, Failure> {
    let program = load_file(file)?;
    let args = datum_arg(args)?;
    let args: Vec<Datum> = args
        .as_list()
        .ok_or_else(|| Failure::new(Exit::Input, "--args must be a list"))?
        .iter()
        .cloned()
        .collect();
    let report = eval(&program, &args, budget)?;
    let (status, value) = match &report.outcome {
        Outcome::Value(v) => ("value", v),
        Outcome::Abort(v) => ("abort", v),
    };
    if json {
        println!("{}", json!({ "status": status, "value": value.to_string(), "steps": report.steps }));
    } else {
        match status {
            "value" => println!("{value}"),
            _ => println!("abort {value}"),
        }
        eprintln!("{} steps", report.steps);
    }
    Ok(match report.outcome {
        Outcome::Value(_) => ExitCode::SUCCESS,
        Outcome::Abort(_) => ExitCode::from(Exit::Eval as u8),
    })
}

fn mix(
    subject: &Path,
    statics: &[String],
    dynamics: Vec<String>,
    engine: MixWith,
    budget: &BudgetArgs,
    out: Option<&Path>,
    json: bool,
) -> Result<ExitCode, Failure> {
    let program = load_file(subject)?;
    let mut pairs = Vec::new();
    for s in statics {
        let (name, value) =
            s.split_once('=').ok_or_else(|| Failure::new(Exit::Input, format!("--static `{s}` is not NAME=DATUM")))?;
        pairs.push((name.to_owned(), datum_arg(value)?));
    }
    let split = BindingSplit::new(pairs, dynamics);
    let start = Instant::now();
    let (residual, steps) = match engine {
        MixWith::Host => (mix_host_with_budget(&program, &split, budget.resolve(MixBudget::default().max_steps))?, None),
        MixWith::L0 => {
            let mix = assets::load_bundled(assets::MIX)?;
            let r = run_mix_l0(&mix, &program, &split, budget.resolve(SELF_APPLIED_STEPS).max_steps)?;
            (r.residual, Some(r.steps))
        }
    };
    let elapsed = start.elapsed();
    let path = match out {
        Some(p) => {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let file = p.file_name().and_then(|f| f.to_str()).ok_or_else(|| Failure::new(Exit::Input, "bad --out"))?;
            Some(write_out(dir, file, &residual)?)
        }
        None => None,
    };
    if json {
        println!(
            "{}",
            json!({
                "defs": residual.defs().len(),
                "program": residual.to_text(),
                "path": path.as_ref().map(|p| p.display().to_string()),
                "steps": steps,
                "millis": elapsed.as_millis() as u64,
            })
        );
    } else {
        match &path {
            Some(p) => println!("wrote {} ({} defs)", p.display(), residual.defs().len()),
            None => print!("{}", residual.to_text()),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn project(
    which: u8,
    dialog: Option<&Path>,
    step: bool,
    self_applied: bool,
    budget: &BudgetArgs,
    out: &Path,
    json: bool,
) -> Result<ExitCode, Failure> {
    let interp = assets::load_bundled(if step { assets::INTERP_STEP } else { assets::INTERP })?;
    let mix = assets::load_bundled(assets::MIX)?;
    let default_steps = if self_applied { SELF_APPLIED_STEPS } else { MixBudget::default().max_steps };
    let b = budget.resolve(default_steps);
    let start = Instant::now();
    let (file, program) = match which {
        1 => {
            let path = dialog.ok_or_else(|| Failure::new(Exit::Input, "projection 1 needs --dialog"))?;
            let spec = load_dialog(path)?;
            let g = dialog_to_datum(&spec);
            let stager = if self_applied {
                let params = &interp.entry().params;
                let split = BindingSplit::new([(params[0].to_string(), g)], params[1..].iter().map(|p| p.to_string()));
                run_mix_l0(&mix, &interp, &split, b.max_steps)?.residual
            } else {
                project1_with_budget(&interp, &g, b)?
            };
            (format!("stager_{}.l0", spec.name), stager)
        }
        2 if self_applied => ("compiler.l0".into(), project2_self_applied(&mix, &interp, b.max_steps)?),
        2 => ("compiler.l0".into(), project2_with_budget(&mix, &interp, b)?),
        _ if self_applied => ("cogen.l0".into(), project3_self_applied(&mix, b.max_steps)?),
        _ => ("cogen.l0".into(), project3_with_budget(&mix, b)?),
    };
    let elapsed = start.elapsed();
    let path = write_out(out, &file, &program)?;
    let bytes = program.to_text().len();
    if json {
        println!(
            "{}",
            json!({
                "projection": which,
                "path": path.display().to_string(),
                "defs": program.defs().len(),
                "bytes": bytes,
                "self_applied": self_applied,
                "millis": elapsed.as_millis() as u64,
            })
        );
    } else {
        println!("wrote {} ({} defs, {bytes} bytes) in {elapsed:.2?}", path.display(), program.defs().len());
    }
    Ok(ExitCode::SUCCESS)
}

fn load_fixture_dir(dir: &Path) -> Result<Vec<DialogSpec>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::new(Exit::Input, format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dlg"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::new(Exit::Input, format!("{}: no .dlg files", dir.display())));
    }
    files.iter().map(|f| load_dialog(f)).collect()
}

fn check(dir: &Path, assets_dir: Option<&Path>, json: bool) -> Result<ExitCode, Failure> {
    let specs = load_fixture_dir(dir)?;
    let load = |a| match assets_dir {
        Some(d) => assets::load_from_dir(a, d),
        None => assets::load_bundled(a),
    };
    let start = Instant::now();
    let tc = Toolchain::from_programs(load(assets::INTERP)?, load(assets::INTERP_STEP)?, load(assets::MIX)?, MixBudget::default())?;
    let staged = specs.iter().map(|s| StagedDialog::build(&tc, s)).collect::<Result<Vec<_>, _>>()?;
    let report = run_equivalence_matrix(&tc, &staged)?;
    let elapsed = start.elapsed();
    let failure = report.first_failure();
    if json {
        for f in &report.fixtures {
            for row in &f.rows {
                let cells: serde_json::Map<String, serde_json::Value> = row
                    .cells
                    .iter()
                    .map(|c| {
                        let result = match &c.result {
                            Ok(o) => o.to_string(),
                            Err(e) => format!("error: {e}"),
                        };
                        (c.engine.to_owned(), json!({ "pass": c.pass, "result": result, "steps": c.steps }))
                    })
                    .collect();
                let kind = if row.kind == RowKind::Path { "path" } else { "probe" };
                println!(
                    "{}",
                    json!({ "type": "row", "fixture": f.dialog, "kind": kind, "responses": row.responses.to_string(),
                            "expected": row.expected.to_string(), "cells": cells })
                );
            }
            for c in &f.checks {
                println!("{}", json!({ "type": "check", "fixture": f.dialog, "name": c.name, "pass": c.pass, "detail": c.detail }));
            }
        }
        for c in &report.checks {
            println!("{}", json!({ "type": "check", "fixture": null, "name": c.name, "pass": c.pass, "detail": c.detail }));
        }
        let first = failure.as_ref().map(|f| json!({ "fixture": f.fixture, "location": f.location, "column": f.column, "detail": f.detail }));
        println!(
            "{}",
            json!({ "type": "summary", "pass": failure.is_none(), "cells": report.cell_count(), "first_failure": first,
                    "millis": elapsed.as_millis() as u64 })
        );
    } else {
        print!("{}", report.render_table());
        match &failure {
            None => println!("\nPASS: {} cells over {} dialogs in {elapsed:.2?}", report.cell_count(), specs.len()),
            Some(f) => println!("\nFAIL: {f}"),
        }
    }
    Ok(if failure.is_none() { ExitCode::SUCCESS } else { ExitCode::from(Exit::Eval as u8) })
}

fn serve(host: &str, port: u16, fixtures: Option<PathBuf>, journal: Option<PathBuf>) -> Result<ExitCode, Failure> {
    use futamix_service::{preregister, Journal, ServeError, Store};

    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| Failure::new(Exit::Input, format!("bad address {host}:{port}: {e}")))?;
    let mut store = Store::new().map_err(|e| Failure::new(Exit::Environment, e))?;
    if let Some(path) = &journal {
        let j = Journal::open(path).map_err(|e| Failure::new(Exit::Environment, format!("{}: {e}", path.display())))?;
        store = store.with_journal(j).map_err(|e| Failure::new(Exit::Environment, format!("replaying journal: {e}")))?;
    }
    if let Some(dir) = &fixtures {
        let ids = preregister(&store, dir).map_err(|e| Failure::new(Exit::Input, e))?;
        eprintln!("registered {} dialog(s) from {}", ids.len(), dir.display());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(Exit::Environment, e))?;
    runtime.block_on(futamix_service::serve(Arc::new(store), addr)).map_err(|e| match e {
        ServeError::Bind { .. } | ServeError::Io(_) => Failure::new(Exit::Environment, e),
        other => Failure::new(Exit::Eval, other),
    })?;
    Ok(ExitCode::SUCCESS)
}
