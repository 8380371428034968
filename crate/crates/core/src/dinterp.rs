//! Staging dialogs: the L0 interpreters, a native reference interpreter and
//! a hand-written dialog-to-L0 compiler.
//!
//! The native pieces ([`host_interp`], [`host_step`], [`direct_compile`]) do
//! not share code with the L0 assets or with the specializer; they exist to
//! check them.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::assets::{self, AssetError};
use crate::ddsl::{DialogSpec, ResponseVector, Step};
use crate::lcore::{eval, lift_program, Datum, EvalError, Outcome, Program};

/// Where a dialog stands after some responses.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StageOutcome {
    NeedInput { prompt: String, text: String, choices: Vec<String> },
    Done { message: String, echoes: Vec<(String, String)> },
    /// `prompt` is `None` for a response left over after the last prompt;
    /// `response` is `None` when a prompt received nothing.
    Invalid { prompt: Option<String>, response: Option<String> },
}

impl StageOutcome {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, StageOutcome::NeedInput { .. })
    }

    /// `(need id "text" (choice ...))`, `(done "message" ((id response) ...))`
    /// or `(invalid id response)`, with `()` for an absent id or response.
    pub fn to_datum(&self) -> Datum {
        let opt = |o: &Option<String>| o.as_deref().map_or_else(Datum::nil, Datum::atom);
        match self {
            StageOutcome::NeedInput { prompt, text, choices } => Datum::list([
                Datum::atom("need"),
                Datum::atom(prompt),
                Datum::string(text),
                Datum::list(choices.iter().map(|c| Datum::atom(c))),
            ]),
            StageOutcome::Done { message, echoes } => Datum::list([
                Datum::atom("done"),
                Datum::string(message),
                Datum::list(echoes.iter().map(|(id, r)| Datum::list([Datum::atom(id), Datum::atom(r)]))),
            ]),
            StageOutcome::Invalid { prompt, response } => {
                Datum::list([Datum::atom("invalid"), opt(prompt), opt(response)])
            }
        }
    }

    pub fn from_datum(d: &Datum) -> Option<StageOutcome> {
        let xs: Vec<&Datum> = d.as_list()?.iter().collect();
        let opt = |x: &Datum| if x.is_nil() { Some(None) } else { x.as_atom().map(|a| Some(a.to_owned())) };
        let atoms = |x: &Datum| -> Option<Vec<String>> {
            x.as_list()?.iter().map(|c| c.as_atom().map(str::to_owned)).collect()
        };
        match (xs.first()?.as_atom()?, xs.len()) {
            ("need", 4) => Some(StageOutcome::NeedInput {
                prompt: xs[1].as_atom()?.to_owned(),
                text: xs[2].as_str()?.to_owned(),
                choices: atoms(xs[3])?,
            }),
            ("done", 3) => Some(StageOutcome::Done {
                message: xs[1].as_str()?.to_owned(),
                echoes: xs[2]
                    .as_list()?
                    .iter()
                    .map(|e| {
                        let pair = atoms(e)?;
                        (pair.len() == 2).then(|| (pair[0].clone(), pair[1].clone()))
                    })
                    .collect::<Option<_>>()?,
            }),
            ("invalid", 3) => Some(StageOutcome::Invalid { prompt: opt(xs[1])?, response: opt(xs[2])? }),
            _ => None,
        }
    }
}

impl fmt::Display for StageOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_datum())
    }
}

/// Accepted `(prompt, response)` pairs of a finished run and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub pairs: Vec<(String, String)>,
    pub terminal: StageOutcome,
}

/// Batch interpreter, entry `(interp dialog responses)`.
pub fn interp_l0_program() -> Result<Program, AssetError> {
    assets::load_bundled(assets::INTERP)
}

/// Incremental interpreter, entry `(interp-step dialog responses-so-far)`.
pub fn interp_step_l0_program() -> Result<Program, AssetError> {
    assets::load_bundled(assets::INTERP_STEP)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StageError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("stager aborted with {0}")]
    Aborted(Datum),
    #[error("stager returned {0}, which is not a stage outcome")]
    NotAnOutcome(Datum),
}

/// An outcome and what it cost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRun {
    pub outcome: StageOutcome,
    pub steps: u64,
}

pub const DEFAULT_STAGE_BUDGET: u64 = 10_000_000;

/// Evaluates any staging program (interpreter or stager) and decodes its
/// outcome.
pub fn run_stager(program: &Program, args: &[Datum], budget: u64) -> Result<StageRun, StageError> {
    let report = eval(program, args, budget)?;
    match report.outcome {
        Outcome::Value(d) => match StageOutcome::from_datum(&d) {
            Some(outcome) => Ok(StageRun { outcome, steps: report.steps }),
            None => Err(StageError::NotAnOutcome(d)),
        },
        Outcome::Abort(d) => Err(StageError::Aborted(d)),
    }
}

/// Native batch semantics: running out of responses is `Invalid`.
pub fn host_interp(spec: &DialogSpec, responses: &ResponseVector) -> StageOutcome {
    host_run(spec, responses, false)
}

/// Native incremental semantics: running out of responses asks for more.
pub fn host_step(spec: &DialogSpec, responses: &ResponseVector) -> StageOutcome {
    host_run(spec, responses, true)
}

fn host_run(spec: &DialogSpec, responses: &ResponseVector, incremental: bool) -> StageOutcome {
    let mut agenda: Vec<&Step> = spec.steps.iter().rev().collect();
    let mut answers: Vec<(&str, &str)> = Vec::new();
    let mut input = responses.0.iter();
    while let Some(step) = agenda.pop() {
        match step {
            Step::Prompt { id, text, choices } => match input.next() {
                None if incremental => {
                    return StageOutcome::NeedInput { prompt: id.clone(), text: text.clone(), choices: choices.clone() }
                }
                None => return StageOutcome::Invalid { prompt: Some(id.clone()), response: None },
                Some(r) if choices.contains(r) => answers.push((id, r)),
                Some(r) => return StageOutcome::Invalid { prompt: Some(id.clone()), response: Some(r.clone()) },
            },
            Step::Branch { on, arms } => {
                let given = answers.iter().find(|(p, _)| p == on).map(|(_, r)| *r);
                if let Some((_, body)) = arms.iter().find(|(c, _)| Some(c.as_str()) == given) {
                    agenda.extend(body.iter().rev());
                }
            }
        }
    }
    if let Some(extra) = input.next() {
        return StageOutcome::Invalid { prompt: None, response: Some(extra.clone()) };
    }
    let echoes = spec
        .result
        .echo
        .iter()
        .filter_map(|id| answers.iter().find(|(p, _)| p == id).map(|(p, r)| ((*p).to_owned(), (*r).to_owned())))
        .collect();
    StageOutcome::Done { message: spec.result.message.clone(), echoes }
}

/// Drives an incremental engine with `responses`, one more response per
/// call, until the outcome is terminal. Running out of responses ends the
/// run as `Invalid` at the pending prompt, which is what the batch
/// interpreter reports.
pub fn fold_step<E, F>(mut step: F, responses: &ResponseVector) -> Result<Transcript, E>
where
    F: FnMut(&ResponseVector) -> Result<StageOutcome, E>,
{
    let mut given = 0;
    let mut pairs = Vec::new();
    let mut pending: Option<(String, String)> = None;
    loop {
        let out = step(&ResponseVector(responses.0[..given].to_vec()))?;
        if let Some((prompt, response)) = pending.take() {
            let rejected = matches!(&out, StageOutcome::Invalid { prompt: Some(p), .. } if *p == prompt);
            if !rejected {
                pairs.push((prompt, response));
            }
        }
        match out {
            StageOutcome::NeedInput { prompt, .. } if given < responses.0.len() => {
                pending = Some((prompt, responses.0[given].clone()));
                given += 1;
            }
            StageOutcome::NeedInput { prompt, .. } => {
                let terminal = StageOutcome::Invalid { prompt: Some(prompt), response: None };
                return Ok(Transcript { pairs, terminal });
            }
            StageOutcome::Done { .. } if given < responses.0.len() => given = responses.0.len(),
            terminal => return Ok(Transcript { pairs, terminal }),
        }
    }
}

/// Compiles `spec` straight to an L0 stager with entry `(stage responses)`.
///
/// Each step becomes one definition taking the remaining responses and the
/// answers so far; branches dispatch on a run-time lookup of the answer.
pub fn direct_compile(spec: &DialogSpec) -> Program {
    let mut cg = Codegen { defs: Vec::new() };
    let finish = cg.finish(spec);
    let first = cg.seq(&spec.steps, finish);
    let mut defs = vec![def("stage", &["responses"], call(&first, vec![var("responses"), quote(Datum::nil())]))];
    defs.extend(cg.defs);
    defs.push(lookup_def());
    defs.push(keep_def());
    let program = Datum::list(std::iter::once(Datum::atom("program")).chain(defs));
    lift_program(&program).expect("generated stager is well formed")
}

struct Codegen {
    defs: Vec<Datum>,
}

fn var(name: &str) -> Datum {
    Datum::atom(name)
}

fn quote(d: Datum) -> Datum {
    Datum::list([Datum::atom("quote"), d])
}

fn qatom(name: &str) -> Datum {
    quote(Datum::atom(name))
}

fn form(head: &str, args: impl IntoIterator<Item = Datum>) -> Datum {
    Datum::list(std::iter::once(Datum::atom(head)).chain(args))
}

fn call(name: &str, args: Vec<Datum>) -> Datum {
    form("call", std::iter::once(Datum::atom(name)).chain(args))
}

fn def(name: &str, params: &[&str], body: Datum) -> Datum {
    form("def", [Datum::atom(name), Datum::list(params.iter().map(|p| Datum::atom(p))), body])
}

fn if_(c: Datum, t: Datum, e: Datum) -> Datum {
    form("if", [c, t, e])
}

fn lookup_def() -> Datum {
    def(
        "lookup",
        &["id", "a"],
        if_(
            form("null?", [var("a")]),
            quote(Datum::nil()),
            if_(
                form("eq?", [form("hd", [form("hd", [var("a")])]), var("id")]),
                form("hd", [form("tl", [form("hd", [var("a")])])]),
                call("lookup", vec![var("id"), form("tl", [var("a")])]),
            ),
        ),
    )
}

fn keep_def() -> Datum {
    def(
        "keep",
        &["id", "v", "rest"],
        if_(form("null?", [var("v")]), var("rest"), form("cons", [form("list", [var("id"), var("v")]), var("rest")])),
    )
}

impl Codegen {
    fn fresh(&self) -> String {
        format!("s{}", self.defs.len())
    }

    fn finish(&mut self, spec: &DialogSpec) -> String {
        let echo = spec.result.echo.iter().rev().fold(quote(Datum::nil()), |rest, id| {
            call("keep", vec![qatom(id), call("lookup", vec![qatom(id), var("a")]), rest])
        });
        let done = form("list", [qatom("done"), quote(Datum::string(&spec.result.message)), echo]);
        let extra = form("list", [qatom("invalid"), quote(Datum::nil()), form("hd", [var("r")])]);
        let name = self.fresh();
        self.defs.push(def(&name, &["r", "a"], if_(form("null?", [var("r")]), done, extra)));
        name
    }

    fn seq(&mut self, steps: &[Step], then: String) -> String {
        steps.iter().rev().fold(then, |next, step| self.step(step, next))
    }

    fn step(&mut self, step: &Step, next: String) -> String {
        let body = match step {
            Step::Prompt { id, choices, .. } => {
                let accept = call(
                    &next,
                    vec![form("tl", [var("r")]), form("cons", [form("list", [qatom(id), form("hd", [var("r")])]), var("a")])],
                );
                let reject = form("list", [qatom("invalid"), qatom(id), form("hd", [var("r")])]);
                let dispatch = choices
                    .iter()
                    .rev()
                    .fold(reject, |els, c| if_(form("eq?", [form("hd", [var("r")]), qatom(c)]), accept.clone(), els));
                let missing = form("list", [qatom("invalid"), qatom(id), quote(Datum::nil())]);
                if_(form("null?", [var("r")]), missing, dispatch)
            }
            Step::Branch { on, arms } => {
                let arm_entries: Vec<(String, String)> =
                    arms.iter().map(|(c, body)| (c.clone(), self.seq(body, next.clone()))).collect();
                arm_entries.iter().rev().fold(call(&next, vec![var("r"), var("a")]), |els, (c, target)| {
                    if_(
                        form("eq?", [call("lookup", vec![qatom(on), var("a")]), qatom(c)]),
                        call(target, vec![var("r"), var("a")]),
                        els,
                    )
                })
            }
        };
        let name = self.fresh();
        self.defs.push(def(&name, &["r", "a"], body));
        name
    }
}

/// Atoms of `program` that also occur as a prompt id or choice in one of
/// `specs`.
pub fn dialog_atoms_in(program: &Program, specs: &[&DialogSpec]) -> BTreeSet<String> {
    let vocabulary: BTreeSet<String> = specs
        .iter()
        .flat_map(|s| s.prompts())
        .flat_map(|(id, _, choices)| std::iter::once(id.to_owned()).chain(choices.iter().cloned()))
        .collect();
    program.to_datum().atoms().into_iter().map(|a| a.to_string()).filter(|a| vocabulary.contains(a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddsl::{enumerate_paths, parse_dialog, DEFAULT_PATH_CAP};

    const COFFEE: &str = include_str!("../../../fixtures/coffee.dlg");
    const BRANCHY: &str = include_str!("../../../fixtures/branchy.dlg");

    fn rv(s: &str) -> ResponseVector {
        s.split_whitespace().collect()
    }

    fn done(msg: &str, echoes: &[(&str, &str)]) -> StageOutcome {
        StageOutcome::Done {
            message: msg.into(),
            echoes: echoes.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    #[test]
    fn coffee_as_ordered() {
        let spec = parse_dialog(COFFEE).unwrap();
        let want = done("coffee as ordered", &[("size", "small"), ("blend", "dark"), ("cream", "no")]);
        assert_eq!(host_interp(&spec, &rv("small dark no")), want);
        let interp = interp_l0_program().unwrap();
        let args = [crate::ddsl::dialog_to_datum(&spec), rv("small dark no").to_datum()];
        assert_eq!(run_stager(&interp, &args, 100_000).unwrap().outcome, want);
        let compiled = direct_compile(&spec);
        assert_eq!(run_stager(&compiled, &[rv("small dark no").to_datum()], 100_000).unwrap().outcome, want);
    }

    #[test]
    fn invalid_outcomes() {
        let spec = parse_dialog(COFFEE).unwrap();
        let inv = |p: Option<&str>, r: Option<&str>| StageOutcome::Invalid {
            prompt: p.map(Into::into),
            response: r.map(Into::into),
        };
        assert_eq!(host_interp(&spec, &rv("huge dark no")), inv(Some("size"), Some("huge")));
        assert_eq!(host_interp(&spec, &rv("small")), inv(Some("blend"), None));
        assert_eq!(host_interp(&spec, &rv("small dark no more")), inv(None, Some("more")));
    }

    #[test]
    fn outcome_datum_round_trip() {
        for o in [
            done("m", &[("a", "b")]),
            StageOutcome::Invalid { prompt: None, response: Some("x".into()) },
            StageOutcome::NeedInput { prompt: "p".into(), text: "t".into(), choices: vec!["c".into()] },
        ] {
            assert_eq!(StageOutcome::from_datum(&o.to_datum()), Some(o));
        }
    }

    #[test]
    fn step_interpreter_asks_in_order() {
        let spec = parse_dialog(COFFEE).unwrap();
        let step = interp_step_l0_program().unwrap();
        let dialog = crate::ddsl::dialog_to_datum(&spec);
        let first = run_stager(&step, &[dialog.clone(), rv("").to_datum()], 100_000).unwrap().outcome;
        assert_eq!(
            first,
            StageOutcome::NeedInput {
                prompt: "size".into(),
                text: "What size?".into(),
                choices: vec!["small".into(), "medium".into(), "large".into()]
            }
        );
        assert_eq!(first, host_step(&spec, &rv("")));
        let second = run_stager(&step, &[dialog, rv("small").to_datum()], 100_000).unwrap().outcome;
        assert!(matches!(second, StageOutcome::NeedInput { ref prompt, .. } if prompt == "blend"));
    }

    #[test]
    fn fold_law_on_branchy() {
        let spec = parse_dialog(BRANCHY).unwrap();
        let step = interp_step_l0_program().unwrap();
        let dialog = crate::ddsl::dialog_to_datum(&spec);
        let probes = ["hot oat sweet croissant", "cold crushed", "hot soy", "cold cubed skip extra", ""];
        let paths = enumerate_paths(&spec, DEFAULT_PATH_CAP).unwrap();
        for r in paths.iter().map(|p| p.responses.clone()).chain(probes.iter().map(|p| rv(p))) {
            let t = fold_step(|prefix| run_stager(&step, &[dialog.clone(), prefix.to_datum()], 100_000).map(|s| s.outcome), &r)
                .unwrap();
            assert_eq!(t.terminal, host_interp(&spec, &r), "responses {r}");
        }
        let t = fold_step(|p| Ok::<_, ()>(host_step(&spec, p)), &rv("hot oat sweet croissant")).unwrap();
        let ids: Vec<&str> = t.pairs.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(ids, ["temp", "milk", "sweet", "pastry"]);
    }

    #[test]
    fn interpreters_are_dialog_agnostic() {
        let specs: Vec<DialogSpec> = [COFFEE, BRANCHY].iter().map(|t| parse_dialog(t).unwrap()).collect();
        let refs: Vec<&DialogSpec> = specs.iter().collect();
        assert!(dialog_atoms_in(&interp_l0_program().unwrap(), &refs).is_empty());
        assert!(dialog_atoms_in(&interp_step_l0_program().unwrap(), &refs).is_empty());
        assert!(!dialog_atoms_in(&direct_compile(&specs[0]), &refs).is_empty());
    }
}
