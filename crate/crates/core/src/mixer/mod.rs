//! Offline partial evaluation: binding-time analysis plus a polyvariant
//! specializer, in two interchangeable forms.
//!
//! [`mix_host`] is the native implementation. [`mix_l0_program`] is the same
//! algorithm written in L0 (`assets/mix.l0`), which is what lets mix be given
//! to itself as a subject. Their outputs agree after [`alpha_normalize`].

pub mod bta;
pub mod normalize;
pub mod specialize;

use std::fmt;

use thiserror::Error;

use crate::assets::{self, AssetError};
use crate::lcore::{self, Datum, EvalError, Outcome, Program};

pub use bta::{analyze, check_congruence, BindingSplit, BindingTime, Division};
pub use normalize::{alpha_equivalent, alpha_normalize, decode_residual, prune};
pub use specialize::specialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Points,
    Steps,
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetKind::Points => "specialization points",
            BudgetKind::Steps => "static evaluation steps",
        })
    }
}

/// Limits that turn non-terminating specialization into an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixBudget {
    pub max_points: usize,
    pub max_steps: u64,
}

impl Default for MixBudget {
    fn default() -> Self {
        MixBudget { max_points: 5_000, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MixError {
    #[error("budget exceeded: more than {limit} {kind}")]
    BudgetExceeded { kind: BudgetKind, limit: u64 },
    #[error("division is not congruent: {0}")]
    NonCongruentDivision(String),
    #[error("bad binding split: {0}")]
    BadSplit(String),
    #[error("static computation in `{def}` failed: {detail}")]
    StaticEval { def: String, detail: String },
    #[error("cannot decode residual program: {0}")]
    Decode(String),
    #[error("L0 mix did not produce a program: {0}")]
    L0Run(String),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error("internal error: {0}")]
    Internal(String),
}

// `limit` is a u64 for steps; points are widened.
impl MixError {
    pub(crate) fn points(limit: usize) -> MixError {
        MixError::BudgetExceeded { kind: BudgetKind::Points, limit: limit as u64 }
    }
}

/// Analyze then specialize.
pub fn mix_host(subject: &Program, split: &BindingSplit) -> Result<Program, MixError> {
    mix_host_with_budget(subject, split, MixBudget::default())
}

pub fn mix_host_with_budget(subject: &Program, split: &BindingSplit, budget: MixBudget) -> Result<Program, MixError> {
    let div = analyze(subject, split)?;
    specialize(subject, split, &div, budget)
}

/// The bundled L0 implementation of mix; entry
/// `(mix subject static-assoc dynamic-names)`.
pub fn mix_l0_program() -> Result<Program, AssetError> {
    assets::load_bundled(assets::MIX)
}

/// `((name value) ...)` in the order given.
pub fn assoc<'a, I: IntoIterator<Item = (&'a str, Datum)>>(pairs: I) -> Datum {
    Datum::list(pairs.into_iter().map(|(k, v)| Datum::list([Datum::atom(k), v])))
}

/// The three arguments of the L0 mix for `subject` under `split`.
pub fn mix_l0_args(subject: &Program, split: &BindingSplit) -> [Datum; 3] {
    [
        subject.to_datum(),
        assoc(split.static_args.iter().map(|(k, v)| (k.as_str(), v.clone()))),
        Datum::list(split.dynamic_params.iter().map(|p| Datum::atom(p))),
    ]
}

/// Result of running the L0 mix under the evaluator.
#[derive(Debug, Clone)]
pub struct L0MixRun {
    pub residual: Program,
    pub steps: u64,
}

/// Runs `mix_l0` on `(subject, split)` and decodes its output.
pub fn run_mix_l0(mix_l0: &Program, subject: &Program, split: &BindingSplit, max_steps: u64) -> Result<L0MixRun, MixError> {
    split.validate(subject)?;
    let report = lcore::eval(mix_l0, &mix_l0_args(subject, split), max_steps).map_err(|e| match e {
        EvalError::BudgetExceeded { budget } => MixError::BudgetExceeded { kind: BudgetKind::Steps, limit: budget },
        other => MixError::L0Run(other.to_string()),
    })?;
    match report.outcome {
        Outcome::Value(d) => Ok(L0MixRun { residual: decode_residual(&d)?, steps: report.steps }),
        Outcome::Abort(payload) => Err(MixError::L0Run(format!("aborted with {payload}"))),
    }
}
