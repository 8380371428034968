//! `futamix stage`: one dialog, one engine, responses from a reader.

use std::io::{BufRead, Write};
use std::process::ExitCode;

use clap::ValueEnum;
use futamix::assets::{self, INTERP_STEP, MIX};
use futamix::ddsl::{dialog_to_datum, DialogSpec, ResponseVector};
use futamix::dinterp::{run_stager, StageOutcome, DEFAULT_STAGE_BUDGET};
use futamix::lcore::parse::is_valid_atom;
use futamix::projections::{apply_cogen, apply_compiler, project1, project2, project3};
use futamix::{Datum, Program};
use serde_json::json;

use crate::{Exit, Failure};

/// All engines use the incremental interpreter, staged in different ways.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageEngine {
    /// The interpreter itself.
    Interp,
    /// Projection 1.
    Stager,
    /// The Projection 2 compiler applied to the dialog.
    Compiled,
    /// The compiler built by the Projection 3 generator, applied to the dialog.
    Cogen,
}

struct Stepper {
    program: Program,
    /// Leading argument for the interpreter engine.
    dialog: Option<Datum>,
}

impl Stepper {
    fn build(spec: &DialogSpec, engine: StageEngine) -> Result<Stepper, Failure> {
        let interp = assets::load_bundled(INTERP_STEP)?;
        let g = dialog_to_datum(spec);
        let program = match engine {
            StageEngine::Interp => return Ok(Stepper { program: interp, dialog: Some(g) }),
            StageEngine::Stager => project1(&interp, &g)?,
            StageEngine::Compiled => {
                let compiler = project2(&assets::load_bundled(MIX)?, &interp)?;
                apply_compiler(&compiler, &interp, &g, DEFAULT_STAGE_BUDGET)?
            }
            StageEngine::Cogen => {
                let cogen = project3(&assets::load_bundled(MIX)?)?;
                let compiler = apply_cogen(&cogen, &interp, DEFAULT_STAGE_BUDGET)?;
                apply_compiler(&compiler, &interp, &g, DEFAULT_STAGE_BUDGET)?
            }
        };
        Ok(Stepper { program, dialog: None })
    }

    fn step(&self, responses: &[String]) -> Result<StageOutcome, Failure> {
        let r = ResponseVector(responses.to_vec()).to_datum();
        let args: Vec<Datum> = self.dialog.iter().cloned().chain([r]).collect();
        Ok(run_stager(&self.program, &args, DEFAULT_STAGE_BUDGET)?.outcome)
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::new(Exit::Environment, e)
}

pub fn interact(
    spec: &DialogSpec,
    engine: StageEngine,
    strict: bool,
    json: bool,
    mut input: impl BufRead,
    mut out: impl Write,
    mut err: impl Write,
) -> Result<ExitCode, Failure> {
    let stepper = Stepper::build(spec, engine)?;
    let mut transcript: Vec<(String, String)> = Vec::new();
    let responses = |t: &[(String, String)]| t.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>();
    let mut outcome = stepper.step(&[])?;
    let mut line = String::new();
    while let StageOutcome::NeedInput { prompt, text, choices } = &outcome {
        if json {
            writeln!(out, "{}", json!({ "event": "prompt", "prompt": prompt, "text": text, "choices": choices }))
                .map_err(io_err)?;
        } else {
            write!(err, "{text} [{}] ", choices.join("/")).map_err(io_err)?;
            err.flush().map_err(io_err)?;
        }
        line.clear();
        if input.read_line(&mut line).map_err(io_err)? == 0 {
            outcome = StageOutcome::Invalid { prompt: Some(prompt.clone()), response: None };
            break;
        }
        let value = line.trim();
        let next = if is_valid_atom(value) {
            let mut r = responses(&transcript);
            r.push(value.to_owned());
            stepper.step(&r)?
        } else {
            StageOutcome::Invalid { prompt: Some(prompt.clone()), response: None }
        };
        let rejected = matches!(&next, StageOutcome::Invalid { prompt: Some(p), .. } if p == prompt);
        if rejected && !strict {
            if json {
                writeln!(out, "{}", json!({ "event": "rejected", "prompt": prompt, "value": value })).map_err(io_err)?;
            } else {
                writeln!(err, "`{value}` is not one of: {}", choices.join(", ")).map_err(io_err)?;
            }
            continue;
        }
        if !rejected {
            transcript.push((prompt.clone(), value.to_owned()));
        }
        outcome = next;
    }

    if json {
        let t: Vec<_> = transcript.iter().map(|(p, r)| json!({ "prompt": p, "response": r })).collect();
        writeln!(out, "{}", json!({ "event": "outcome", "outcome": outcome.to_string(), "transcript": t })).map_err(io_err)?;
    } else {
        for (p, r) in &transcript {
            writeln!(out, "{p}: {r}").map_err(io_err)?;
        }
        writeln!(out, "{outcome}").map_err(io_err)?;
    }
    Ok(match outcome {
        StageOutcome::Done { .. } => ExitCode::SUCCESS,
        _ => ExitCode::from(Exit::Input as u8),
    })
}
