//! Call-by-value evaluator for L0 with a step budget.
//!
//! The machine keeps its own work and value stacks, so the depth of L0
//! recursion is bounded by memory rather than by the host thread's stack.
//! One step is charged per expression node reduced.

use std::rc::Rc;

use thiserror::Error;

use super::datum::{Datum, List};
use super::program::{Expr, PrimOp, Program};

/// Normal result or the payload of a `fail`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Outcome {
    Value(Datum),
    Abort(Datum),
}

impl Outcome {
    pub fn value(&self) -> Option<&Datum> {
        match self {
            Outcome::Value(d) => Some(d),
            Outcome::Abort(_) => None,
        }
    }

    pub fn into_value(self) -> Option<Datum> {
        match self {
            Outcome::Value(d) => Some(d),
            Outcome::Abort(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub outcome: Outcome,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("`if` condition must be true or false, got {value}")]
    IfConditionNotBoolean { value: Datum },
    #[error("`{op}` cannot be applied to {args}")]
    PrimTypeError { op: PrimOp, args: String },
    #[error("integer overflow in `{op}`")]
    Overflow { op: PrimOp },
    #[error("entry takes {expected} argument(s), given {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("step budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
}

/// Evaluates `p`'s entry on `args`.
pub fn eval(p: &Program, args: &[Datum], budget: u64) -> Result<EvalReport, EvalError> {
    let entry = p.entry();
    if entry.params.len() != args.len() {
        return Err(EvalError::ArityMismatch { expected: entry.params.len(), found: args.len() });
    }
    let mut m = Machine::new(p, budget);
    let outcome = m.run(&entry.body, Rc::from(args))?;
    Ok(EvalReport { outcome, steps: m.steps() })
}

enum Task<'p> {
    Eval(&'p Expr, Rc<[Datum]>),
    Branch(&'p Expr, &'p Expr, Rc<[Datum]>),
    Call(usize, usize),
    Prim(PrimOp, usize),
    Fail,
}

/// A reusable evaluator whose step counter and budget persist across runs.
pub struct Machine<'p> {
    program: &'p Program,
    steps: u64,
    budget: u64,
    tasks: Vec<Task<'p>>,
    values: Vec<Datum>,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program, budget: u64) -> Self {
        Machine { program, steps: 0, budget, tasks: Vec::new(), values: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Evaluates `expr` (which must belong to this machine's program) under
    /// `env`, the full parameter vector of the enclosing def.
    pub fn run(&mut self, expr: &'p Expr, env: Rc<[Datum]>) -> Result<Outcome, EvalError> {
        self.tasks.clear();
        self.values.clear();
        self.tasks.push(Task::Eval(expr, env));
        while let Some(task) = self.tasks.pop() {
            match task {
                Task::Eval(e, env) => {
                    if self.steps >= self.budget {
                        return Err(EvalError::BudgetExceeded { budget: self.budget });
                    }
                    self.steps += 1;
                    match e {
                        Expr::Lit(d) => self.values.push(d.clone()),
                        Expr::Var { slot, .. } => self.values.push(env[*slot].clone()),
                        Expr::If(c, t, f) => {
                            self.tasks.push(Task::Branch(t, f, env.clone()));
                            self.tasks.push(Task::Eval(c, env));
                        }
                        Expr::Call { target, args, .. } => {
                            self.tasks.push(Task::Call(*target, args.len()));
                            self.push_args(args, &env);
                        }
                        Expr::Prim { op, args } => {
                            self.tasks.push(Task::Prim(*op, args.len()));
                            self.push_args(args, &env);
                        }
                        Expr::Fail(a) => {
                            self.tasks.push(Task::Fail);
                            self.tasks.push(Task::Eval(a, env));
                        }
                    }
                }
                Task::Branch(t, f, env) => {
                    let c = self.values.pop().expect("condition value");
                    let next = match truth(&c) {
                        Some(true) => t,
                        Some(false) => f,
                        None => return Err(EvalError::IfConditionNotBoolean { value: c }),
                    };
                    self.tasks.push(Task::Eval(next, env));
                }
                Task::Call(target, argc) => {
                    let at = self.values.len() - argc;
                    let env: Rc<[Datum]> = self.values.drain(at..).collect();
                    self.tasks.push(Task::Eval(&self.program.defs()[target].body, env));
                }
                Task::Prim(op, argc) => {
                    let at = self.values.len() - argc;
                    let v = apply_prim(op, &self.values[at..])?;
                    self.values.truncate(at);
                    self.values.push(v);
                }
                Task::Fail => {
                    let payload = self.values.pop().expect("fail payload");
                    self.tasks.clear();
                    self.values.clear();
                    return Ok(Outcome::Abort(payload));
                }
            }
        }
        Ok(Outcome::Value(self.values.pop().expect("result value")))
    }

    fn push_args(&mut self, args: &'p [Expr], env: &Rc<[Datum]>) {
        for a in args.iter().rev() {
            self.tasks.push(Task::Eval(a, env.clone()));
        }
    }
}

fn truth(d: &Datum) -> Option<bool> {
    match d.as_atom() {
        Some("true") => Some(true),
        Some("false") => Some(false),
        _ => None,
    }
}

fn type_error(op: PrimOp, args: &[Datum]) -> EvalError {
    let shown: Vec<String> = args.iter().map(|a| a.to_string()).collect();
    let mut args = shown.join(" ");
    if args.len() > 200 {
        let cut = (0..=200).rev().find(|&i| args.is_char_boundary(i)).unwrap_or(0);
        args.truncate(cut);
        args.push_str("...");
    }
    EvalError::PrimTypeError { op, args }
}

/// Applies a primitive to already-evaluated arguments. Arity is assumed to
/// have been checked when the program was lifted.
pub fn apply_prim(op: PrimOp, args: &[Datum]) -> Result<Datum, EvalError> {
    let num = |i: usize| args[i].as_num().ok_or_else(|| type_error(op, args));
    let arith = |f: fn(i64, i64) -> Option<i64>| -> Result<Datum, EvalError> {
        let (a, b) = (num(0)?, num(1)?);
        f(a, b).map(Datum::Num).ok_or(EvalError::Overflow { op })
    };
    match op {
        PrimOp::Cons => match &args[1] {
            Datum::List(tail) => Ok(Datum::List(List::cons(args[0].clone(), tail.clone()))),
            _ => Err(type_error(op, args)),
        },
        PrimOp::Hd => match &args[0] {
            Datum::List(l) if !l.is_empty() => Ok(l.head().cloned().expect("nonempty")),
            _ => Err(type_error(op, args)),
        },
        PrimOp::Tl => match &args[0] {
            Datum::List(l) if !l.is_empty() => Ok(Datum::List(l.tail().cloned().expect("nonempty"))),
            _ => Err(type_error(op, args)),
        },
        PrimOp::Eq => Ok(Datum::boolean(args[0] == args[1])),
        PrimOp::IsAtom => Ok(Datum::boolean(!matches!(args[0], Datum::List(_)))),
        PrimOp::IsNull => Ok(Datum::boolean(args[0].is_nil())),
        PrimOp::Add => arith(i64::checked_add),
        PrimOp::Sub => arith(i64::checked_sub),
        PrimOp::Mul => arith(i64::checked_mul),
        PrimOp::Lt => Ok(Datum::boolean(num(0)? < num(1)?)),
        PrimOp::List => Ok(Datum::list(args.iter().cloned())),
    }
}
