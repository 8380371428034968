//! The dialog language. A dialog is an L0 datum:
//!
//! ```text
//! (dialog <name>
//!   (steps <step> ...)
//!   (result "<message>" <echo-id> ...))
//!
//! <step> = (prompt <id> "<text>" (<choice> ...))
//!        | (branch <id> (<choice> <step> ...) ...)
//! ```
//!
//! A branch looks up the answer already given to prompt `<id>` and runs the
//! steps of the matching arm before carrying on; a choice without an arm adds
//! nothing.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::lcore::{parse_datum, print_datum, Datum, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogSpec {
    pub name: String,
    pub steps: Vec<Step>,
    pub result: ResultTemplate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Prompt { id: String, text: String, choices: Vec<String> },
    Branch { on: String, arms: Vec<(String, Vec<Step>)> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultTemplate {
    pub message: String,
    pub echo: Vec<String>,
}

/// Responses in the order they are given.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ResponseVector(pub Vec<String>);

impl ResponseVector {
    pub fn to_datum(&self) -> Datum {
        Datum::list(self.0.iter().map(|r| Datum::atom(r)))
    }

    /// Accepts a list of atoms.
    pub fn from_datum(d: &Datum) -> Option<ResponseVector> {
        let items = d.as_list()?;
        items.iter().map(|x| x.as_atom().map(str::to_owned)).collect::<Option<Vec<_>>>().map(ResponseVector)
    }
}

impl fmt::Display for ResponseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(" "))
    }
}

impl<S: Into<String>> FromIterator<S> for ResponseVector {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        ResponseVector(iter.into_iter().map(Into::into).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DdslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("malformed dialog: {0}")]
    Malformed(String),
    #[error("prompt id `{0}` is declared more than once")]
    DuplicatePromptId(String),
    #[error("branch on `{0}`, which is not a prompt of this dialog")]
    UnknownBranchTarget(String),
    #[error("branch on `{0}` where that prompt is not guaranteed to have been answered yet")]
    BranchBeforePrompt(String),
    #[error("branch on `{prompt}` has arm `{arm}`, which is not one of its choices")]
    ArmNotAChoice { prompt: String, arm: String },
    #[error("branch on `{prompt}` has more than one arm for `{arm}`")]
    DuplicateArm { prompt: String, arm: String },
    #[error("prompt `{0}` has no choices")]
    EmptyChoices(String),
    #[error("prompt `{prompt}` lists choice `{choice}` more than once")]
    DuplicateChoice { prompt: String, choice: String },
    #[error("result echoes `{0}`, which is not a prompt of this dialog")]
    UnknownEchoId(String),
    #[error("dialog has more than {cap} complete paths")]
    PathExplosion { cap: usize },
}

impl DialogSpec {
    /// Every prompt in document order.
    pub fn prompts(&self) -> Vec<(&str, &str, &[String])> {
        fn walk<'a>(steps: &'a [Step], out: &mut Vec<(&'a str, &'a str, &'a [String])>) {
            for s in steps {
                match s {
                    Step::Prompt { id, text, choices } => out.push((id, text, choices)),
                    Step::Branch { arms, .. } => arms.iter().for_each(|(_, body)| walk(body, out)),
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.steps, &mut out);
        out
    }

    pub fn prompt(&self, id: &str) -> Option<(&str, &[String])> {
        self.prompts().into_iter().find(|(p, _, _)| *p == id).map(|(_, t, c)| (t, c))
    }

    pub fn branch_count(&self) -> usize {
        fn walk(steps: &[Step]) -> usize {
            steps
                .iter()
                .map(|s| match s {
                    Step::Prompt { .. } => 0,
                    Step::Branch { arms, .. } => 1 + arms.iter().map(|(_, b)| walk(b)).sum::<usize>(),
                })
                .sum()
        }
        walk(&self.steps)
    }

    /// Checks every dialog invariant.
    ///
    /// A branch may only look at a prompt that every path reaching the
    /// branch has already asked: one that comes earlier in the same step
    /// list, or earlier in an enclosing one.
    pub fn validate(&self) -> Result<(), DdslError> {
        let mut declared = HashSet::new();
        for (id, _, choices) in self.prompts() {
            if !declared.insert(id) {
                return Err(DdslError::DuplicatePromptId(id.to_owned()));
            }
            if choices.is_empty() {
                return Err(DdslError::EmptyChoices(id.to_owned()));
            }
            let mut seen = HashSet::new();
            for c in choices {
                if !seen.insert(c) {
                    return Err(DdslError::DuplicateChoice { prompt: id.to_owned(), choice: c.clone() });
                }
            }
        }
        self.check_branches(&self.steps, &mut Vec::new(), &declared)?;
        for id in &self.result.echo {
            if !declared.contains(id.as_str()) {
                return Err(DdslError::UnknownEchoId(id.clone()));
            }
        }
        Ok(())
    }

    fn check_branches<'a>(
        &'a self,
        steps: &'a [Step],
        answered: &mut Vec<&'a str>,
        declared: &HashSet<&str>,
    ) -> Result<(), DdslError> {
        let mark = answered.len();
        for s in steps {
            match s {
                Step::Prompt { id, .. } => answered.push(id),
                Step::Branch { on, arms } => {
                    if !declared.contains(on.as_str()) {
                        return Err(DdslError::UnknownBranchTarget(on.clone()));
                    }
                    if !answered.contains(&on.as_str()) {
                        return Err(DdslError::BranchBeforePrompt(on.clone()));
                    }
                    let (_, choices) = self.prompt(on).expect("declared prompt");
                    let mut seen = HashSet::new();
                    for (arm, body) in arms {
                        if !choices.contains(arm) {
                            return Err(DdslError::ArmNotAChoice { prompt: on.clone(), arm: arm.clone() });
                        }
                        if !seen.insert(arm) {
                            return Err(DdslError::DuplicateArm { prompt: on.clone(), arm: arm.clone() });
                        }
                        self.check_branches(body, answered, declared)?;
                    }
                }
            }
        }
        answered.truncate(mark);
        Ok(())
    }

    /// Canonical single-line source text.
    pub fn to_text(&self) -> String {
        print_datum(&dialog_to_datum(self))
    }
}

pub fn parse_dialog(text: &str) -> Result<DialogSpec, DdslError> {
    datum_to_dialog(&parse_datum(text)?)
}

pub fn dialog_to_datum(spec: &DialogSpec) -> Datum {
    let mut result = vec![Datum::atom("result"), Datum::string(&spec.result.message)];
    result.extend(spec.result.echo.iter().map(|id| Datum::atom(id)));
    Datum::list([
        Datum::atom("dialog"),
        Datum::atom(&spec.name),
        Datum::list(std::iter::once(Datum::atom("steps")).chain(spec.steps.iter().map(step_to_datum))),
        Datum::list(result),
    ])
}

fn step_to_datum(step: &Step) -> Datum {
    match step {
        Step::Prompt { id, text, choices } => Datum::list([
            Datum::atom("prompt"),
            Datum::atom(id),
            Datum::string(text),
            Datum::list(choices.iter().map(|c| Datum::atom(c))),
        ]),
        Step::Branch { on, arms } => {
            let arms = arms.iter().map(|(choice, body)| {
                Datum::list(std::iter::once(Datum::atom(choice)).chain(body.iter().map(step_to_datum)))
            });
            Datum::list([Datum::atom("branch"), Datum::atom(on)].into_iter().chain(arms))
        }
    }
}

fn malformed(what: &str, d: &Datum) -> DdslError {
    DdslError::Malformed(format!("expected {what}, found {d}"))
}

fn items<'d>(d: &'d Datum, what: &str) -> Result<Vec<&'d Datum>, DdslError> {
    d.as_list().map(|l| l.iter().collect()).ok_or_else(|| malformed(what, d))
}

fn atom(d: &Datum, what: &str) -> Result<String, DdslError> {
    d.as_atom().map(str::to_owned).ok_or_else(|| malformed(what, d))
}

fn tagged<'d>(d: &'d Datum, tag: &str) -> Result<Vec<&'d Datum>, DdslError> {
    let xs = items(d, &format!("a ({tag} ...) form"))?;
    match xs.first() {
        Some(h) if h.is_atom(tag) => Ok(xs),
        _ => Err(malformed(&format!("a ({tag} ...) form"), d)),
    }
}

/// Decodes and validates a dialog datum.
pub fn datum_to_dialog(d: &Datum) -> Result<DialogSpec, DdslError> {
    let xs = tagged(d, "dialog")?;
    if xs.len() != 4 {
        return Err(malformed("(dialog <name> (steps ...) (result ...))", d));
    }
    let name = atom(xs[1], "a dialog name")?;
    let steps = tagged(xs[2], "steps")?[1..].iter().map(|s| datum_to_step(s)).collect::<Result<_, _>>()?;
    let result = tagged(xs[3], "result")?;
    let message = result
        .get(1)
        .and_then(|m| m.as_str())
        .ok_or_else(|| malformed("(result \"<message>\" <id> ...)", xs[3]))?
        .to_owned();
    let echo = result[2..].iter().map(|e| atom(e, "an echoed prompt id")).collect::<Result<_, _>>()?;
    let spec = DialogSpec { name, steps, result: ResultTemplate { message, echo } };
    spec.validate()?;
    Ok(spec)
}

fn datum_to_step(d: &Datum) -> Result<Step, DdslError> {
    let xs = items(d, "a step")?;
    match xs.first().and_then(|h| h.as_atom()) {
        Some("prompt") if xs.len() == 4 => Ok(Step::Prompt {
            id: atom(xs[1], "a prompt id")?,
            text: xs[2].as_str().ok_or_else(|| malformed("prompt text", xs[2]))?.to_owned(),
            choices: items(xs[3], "a choice list")?.into_iter().map(|c| atom(c, "a choice")).collect::<Result<_, _>>()?,
        }),
        Some("branch") if xs.len() >= 2 => {
            let on = atom(xs[1], "a prompt id")?;
            let arms = xs[2..]
                .iter()
                .map(|arm| {
                    let a = items(arm, "a branch arm")?;
                    let choice = a.first().ok_or_else(|| malformed("a branch arm", arm))?;
                    let body = a[1..].iter().map(|s| datum_to_step(s)).collect::<Result<_, _>>()?;
                    Ok((atom(choice, "an arm choice")?, body))
                })
                .collect::<Result<_, DdslError>>()?;
            Ok(Step::Branch { on, arms })
        }
        _ => Err(malformed("(prompt <id> \"<text>\" (<choice> ...)) or (branch <id> <arm> ...)", d)),
    }
}

pub const DEFAULT_PATH_CAP: usize = 10_000;

/// One complete response vector together with the prompts it answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogPath {
    pub responses: ResponseVector,
    pub prompts: Vec<String>,
}

/// Every complete, valid response vector of `spec`, in choice order.
pub fn enumerate_paths(spec: &DialogSpec, cap: usize) -> Result<Vec<DialogPath>, DdslError> {
    let mut out = Vec::new();
    let mut todo: Vec<&Step> = spec.steps.iter().rev().collect();
    let mut answers: Vec<(&str, &str)> = Vec::new();
    walk(&mut todo, &mut answers, &mut out, cap)?;
    Ok(out)
}

fn walk<'a>(
    todo: &mut Vec<&'a Step>,
    answers: &mut Vec<(&'a str, &'a str)>,
    out: &mut Vec<DialogPath>,
    cap: usize,
) -> Result<(), DdslError> {
    let Some(step) = todo.pop() else {
        if out.len() == cap {
            return Err(DdslError::PathExplosion { cap });
        }
        out.push(DialogPath {
            responses: answers.iter().map(|(_, r)| *r).collect(),
            prompts: answers.iter().map(|(p, _)| (*p).to_owned()).collect(),
        });
        return Ok(());
    };
    match step {
        Step::Prompt { id, choices, .. } => {
            for c in choices {
                answers.push((id, c));
                walk(todo, answers, out, cap)?;
                answers.pop();
            }
        }
        Step::Branch { on, arms } => {
            let given = answers.iter().find(|(p, _)| p == on).map(|(_, r)| *r);
            let body: &[Step] = arms.iter().find(|(c, _)| Some(c.as_str()) == given).map_or(&[], |(_, b)| b);
            let mark = todo.len();
            todo.extend(body.iter().rev());
            walk(todo, answers, out, cap)?;
            todo.truncate(mark);
        }
    }
    todo.push(step);
    Ok(())
}
