//! L0: a tiny first-order, homoiconic language. Programs are data.

pub mod datum;
pub mod eval;
pub mod parse;
pub mod print;
pub mod program;

pub use datum::{Datum, List};
pub use eval::{eval, EvalError, EvalReport, Machine, Outcome};
pub use parse::{parse_all, parse_datum, ParseError, Pos};
pub use print::{print_datum, print_program_text};
pub use program::{lift_program, Def, Expr, LiftError, PrimOp, Program};

use thiserror::Error;

/// Failure to load an L0 program from source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lift(#[from] LiftError),
}

/// Parses and validates program source text.
pub fn load_program(text: &str) -> Result<Program, LoadError> {
    Ok(lift_program(&parse_datum(text)?)?)
}
