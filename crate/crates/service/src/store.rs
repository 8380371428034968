//! Registered dialogs and staging sessions.
//!
//! L0 programs are not `Send`, so everything kept here is canonical program
//! text; engines are re-read from text when a session advances. Stagers are
//! built for every engine when a dialog is registered, so all engines cost
//! about the same per response.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use futamix::ddsl::{dialog_to_datum, enumerate_paths, parse_dialog, DdslError, DialogSpec, ResponseVector};
use futamix::dinterp::{host_step, run_stager, StageOutcome, DEFAULT_STAGE_BUDGET};
use futamix::lcore::parse::is_valid_atom;
use futamix::lcore::{load_program, parse_datum};
use futamix::mixer::{alpha_equivalent, MixBudget};
use futamix::projections::{apply_cogen, apply_compiler, project1, Toolchain};
use futamix::Program;
use thiserror::Error;

use crate::journal::{Event, Journal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Interp,
    Stager,
    Compiled,
    Cogen,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Interp, Engine::Stager, Engine::Compiled, Engine::Cogen];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Interp => "interp",
            Engine::Stager => "stager",
            Engine::Compiled => "compiled",
            Engine::Cogen => "cogen",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Engine, ServiceError> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ServiceError::BadRequest(format!("unknown engine `{s}`; expected interp, stager, compiled or cogen")))
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    BadDialog(#[from] DdslError),
    #[error("{0}")]
    BadRequest(String),
    #[error("no dialog `{0}`")]
    UnknownDialog(String),
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` has already finished")]
    SessionFinished(String),
    #[error("`{value}` is not a choice for `{prompt}`")]
    NotAChoice { prompt: String, value: String, choices: Vec<String> },
    #[error("engine failure: {0}")]
    Engine(String),
    #[error("journal: {0}")]
    Journal(#[from] std::io::Error),
}

fn engine_err(e: impl fmt::Display) -> ServiceError {
    ServiceError::Engine(e.to_string())
}

/// Generators shared by every dialog, as program text.
struct Generators {
    interp: Arc<str>,
    interp_step: Arc<str>,
    /// Projection 2 for the batch and the incremental interpreter.
    compiler: Arc<str>,
    compiler_step: Arc<str>,
    cogen: Arc<str>,
    /// The compiler generator's output for the incremental interpreter.
    cogen_compiler_step: Arc<str>,
}

fn text(p: &Program) -> Arc<str> {
    Arc::from(p.to_text())
}

fn load(t: &str) -> Result<Program, ServiceError> {
    load_program(t).map_err(engine_err)
}

impl Generators {
    fn build() -> Result<Generators, ServiceError> {
        let tc = Toolchain::bundled(MixBudget::default()).map_err(engine_err)?;
        let compiler_step = futamix::projections::project2(&tc.mix_l0, &tc.interp_step).map_err(engine_err)?;
        let cogen_compiler_step = apply_cogen(&tc.cogen, &tc.interp_step, tc.run_steps).map_err(engine_err)?;
        Ok(Generators {
            interp: text(&tc.interp),
            interp_step: text(&tc.interp_step),
            compiler: text(&tc.compiler),
            compiler_step: text(&compiler_step),
            cogen: text(&tc.cogen),
            cogen_compiler_step: text(&cogen_compiler_step),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRow {
    pub responses: Vec<String>,
    pub interp: u64,
    pub stager: u64,
}

/// What the artifact view shows for one dialog.
#[derive(Debug, Clone)]
pub struct Artifacts {
    /// Projection 1 of the batch interpreter.
    pub stager: String,
    /// The same stager obtained by running the Projection 2 compiler.
    pub compiled_stager: String,
    pub compiler: Arc<str>,
    pub cogen: Arc<str>,
    /// Whether the two stagers are identical up to renaming.
    pub identical: bool,
    pub steps: Vec<StepRow>,
    pub steps_truncated: bool,
}

pub struct DialogEntry {
    pub id: String,
    pub spec: DialogSpec,
    pub source: String,
    dialog_text: String,
    engines: BTreeMap<Engine, Arc<str>>,
    pub artifacts: Artifacts,
}

const STEP_ROWS: usize = 200;

impl DialogEntry {
    fn build(id: String, source: &str, gens: &Generators) -> Result<DialogEntry, ServiceError> {
        let spec = parse_dialog(source)?;
        let g = dialog_to_datum(&spec);
        let interp = load(&gens.interp)?;
        let interp_step = load(&gens.interp_step)?;
        let budget = DEFAULT_STAGE_BUDGET;

        let stager_step = project1(&interp_step, &g).map_err(engine_err)?;
        let compiled_step = apply_compiler(&load(&gens.compiler_step)?, &interp_step, &g, budget).map_err(engine_err)?;
        let cogen_step = apply_compiler(&load(&gens.cogen_compiler_step)?, &interp_step, &g, budget).map_err(engine_err)?;
        let engines = BTreeMap::from([
            (Engine::Interp, gens.interp_step.clone()),
            (Engine::Stager, text(&stager_step)),
            (Engine::Compiled, text(&compiled_step)),
            (Engine::Cogen, text(&cogen_step)),
        ]);

        let stager = project1(&interp, &g).map_err(engine_err)?;
        let compiled = apply_compiler(&load(&gens.compiler)?, &interp, &g, budget).map_err(engine_err)?;
        let paths = enumerate_paths(&spec, futamix::ddsl::DEFAULT_PATH_CAP)?;
        let mut steps = Vec::new();
        for path in paths.iter().take(STEP_ROWS) {
            let r = path.responses.to_datum();
            let i = run_stager(&interp, &[g.clone(), r.clone()], budget).map_err(engine_err)?;
            let s = run_stager(&stager, &[r], budget).map_err(engine_err)?;
            steps.push(StepRow { responses: path.responses.0.clone(), interp: i.steps, stager: s.steps });
        }
        let artifacts = Artifacts {
            identical: alpha_equivalent(&stager, &compiled),
            stager: stager.to_text(),
            compiled_stager: compiled.to_text(),
            compiler: gens.compiler.clone(),
            cogen: gens.cogen.clone(),
            steps,
            steps_truncated: paths.len() > STEP_ROWS,
        };
        Ok(DialogEntry { id, dialog_text: g.to_string(), spec, source: source.to_owned(), engines, artifacts })
    }

    fn advance(&self, engine: Engine, responses: &[String]) -> Result<StageOutcome, ServiceError> {
        let program = load(&self.engines[&engine])?;
        let r = ResponseVector(responses.to_vec()).to_datum();
        let args = match engine {
            Engine::Interp => vec![parse_datum(&self.dialog_text).map_err(engine_err)?, r],
            _ => vec![r],
        };
        Ok(run_stager(&program, &args, DEFAULT_STAGE_BUDGET).map_err(engine_err)?.outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub id: String,
    pub dialog_id: String,
    pub engine: Engine,
    pub transcript: Vec<(String, String)>,
    pub outcome: StageOutcome,
}

impl Session {
    fn responses(&self) -> Vec<String> {
        self.transcript.iter().map(|(_, r)| r.clone()).collect()
    }
}

pub struct Store {
    gens: Generators,
    dialogs: RwLock<BTreeMap<u64, Arc<DialogEntry>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    next_dialog: AtomicU64,
    next_session: AtomicU64,
    journal: Option<Mutex<Journal>>,
}

fn numeric_id(id: &str, prefix: &str) -> Option<u64> {
    id.strip_prefix(prefix)?.parse().ok()
}

impl Store {
    /// Builds the generators (Projections 2 and 3) once.
    pub fn new() -> Result<Store, ServiceError> {
        Ok(Store {
            gens: Generators::build()?,
            dialogs: RwLock::default(),
            sessions: RwLock::default(),
            next_dialog: AtomicU64::new(1),
            next_session: AtomicU64::new(1),
            journal: None,
        })
    }

    /// Replays `journal` and appends every later event to it.
    pub fn with_journal(mut self, journal: Journal) -> Result<Store, ServiceError> {
        for event in journal.replay()? {
            match event {
                Event::Dialog { id, source } => {
                    self.insert_dialog(id, &source)?;
                }
                Event::Session { id, dialog, engine } => {
                    self.insert_session(id, &dialog, engine.parse()?)?;
                }
                Event::Response { session, value } => {
                    self.respond(&session, &value)?;
                }
            }
        }
        self.journal = Some(Mutex::new(journal));
        Ok(self)
    }

    fn record(&self, event: Event) -> Result<(), ServiceError> {
        if let Some(j) = &self.journal {
            j.lock().expect("journal lock").append(&event)?;
        }
        Ok(())
    }

    fn insert_dialog(&self, id: String, source: &str) -> Result<Arc<DialogEntry>, ServiceError> {
        let n = numeric_id(&id, "dlg-").ok_or_else(|| ServiceError::BadRequest(format!("bad dialog id {id}")))?;
        self.next_dialog.fetch_max(n + 1, Ordering::SeqCst);
        let entry = Arc::new(DialogEntry::build(id, source, &self.gens)?);
        self.dialogs.write().expect("dialog lock").insert(n, entry.clone());
        Ok(entry)
    }

    pub fn register_dialog(&self, source: &str) -> Result<Arc<DialogEntry>, ServiceError> {
        parse_dialog(source)?;
        let id = format!("dlg-{}", self.next_dialog.fetch_add(1, Ordering::SeqCst));
        let entry = self.insert_dialog(id.clone(), source)?;
        self.record(Event::Dialog { id, source: source.to_owned() })?;
        Ok(entry)
    }

    pub fn dialogs(&self) -> Vec<Arc<DialogEntry>> {
        self.dialogs.read().expect("dialog lock").values().cloned().collect()
    }

    pub fn dialog(&self, id: &str) -> Result<Arc<DialogEntry>, ServiceError> {
        numeric_id(id, "dlg-")
            .and_then(|n| self.dialogs.read().expect("dialog lock").get(&n).cloned())
            .ok_or_else(|| ServiceError::UnknownDialog(id.to_owned()))
    }

    fn insert_session(&self, id: String, dialog_id: &str, engine: Engine) -> Result<Session, ServiceError> {
        let dialog = self.dialog(dialog_id)?;
        if let Some(n) = numeric_id(&id, "ses-") {
            self.next_session.fetch_max(n + 1, Ordering::SeqCst);
        }
        let outcome = dialog.advance(engine, &[])?;
        let session = Session { id: id.clone(), dialog_id: dialog.id.clone(), engine, transcript: Vec::new(), outcome };
        self.sessions.write().expect("session lock").insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn create_session(&self, dialog_id: &str, engine: Engine) -> Result<Session, ServiceError> {
        self.dialog(dialog_id)?;
        let id = format!("ses-{}", self.next_session.fetch_add(1, Ordering::SeqCst));
        let session = self.insert_session(id.clone(), dialog_id, engine)?;
        self.record(Event::Session { id, dialog: dialog_id.to_owned(), engine: engine.name().to_owned() })?;
        Ok(session)
    }

    fn session_handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions.read().expect("session lock").get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.into()))
    }

    pub fn session(&self, id: &str) -> Result<Session, ServiceError> {
        Ok(self.session_handle(id)?.lock().expect("session lock").clone())
    }

    /// Feeds one response to a waiting session. A response that is not one
    /// of the current choices is refused and leaves the session unchanged.
    pub fn respond(&self, id: &str, value: &str) -> Result<Session, ServiceError> {
        let handle = self.session_handle(id)?;
        let mut session = handle.lock().expect("session lock");
        let StageOutcome::NeedInput { prompt, choices, .. } = session.outcome.clone() else {
            return Err(ServiceError::SessionFinished(id.to_owned()));
        };
        let refuse = || ServiceError::NotAChoice { prompt: prompt.clone(), value: value.to_owned(), choices: choices.clone() };
        if !is_valid_atom(value) {
            return Err(refuse());
        }
        let dialog = self.dialog(&session.dialog_id)?;
        let mut responses = session.responses();
        responses.push(value.to_owned());
        let next = dialog.advance(session.engine, &responses)?;
        if matches!(&next, StageOutcome::Invalid { prompt: Some(p), .. } if *p == prompt) {
            return Err(refuse());
        }
        session.transcript.push((prompt, value.to_owned()));
        session.outcome = next;
        self.record(Event::Response { session: id.to_owned(), value: value.to_owned() })?;
        Ok(session.clone())
    }

    /// The native incremental interpreter's view, for cross-checking engines.
    pub fn reference_outcome(&self, session: &Session) -> Result<StageOutcome, ServiceError> {
        let dialog = self.dialog(&session.dialog_id)?;
        Ok(host_step(&dialog.spec, &ResponseVector(session.responses())))
    }
}
