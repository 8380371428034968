//! L0 programs: a validated, resolved view of a `(program (def ...) ...)` datum.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use super::datum::Datum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimOp {
    Cons,
    Hd,
    Tl,
    Eq,
    IsAtom,
    IsNull,
    Add,
    Sub,
    Mul,
    Lt,
    List,
}

impl PrimOp {
    pub const ALL: [PrimOp; 11] = [
        PrimOp::Cons,
        PrimOp::Hd,
        PrimOp::Tl,
        PrimOp::Eq,
        PrimOp::IsAtom,
        PrimOp::IsNull,
        PrimOp::Add,
        PrimOp::Sub,
        PrimOp::Mul,
        PrimOp::Lt,
        PrimOp::List,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimOp::Cons => "cons",
            PrimOp::Hd => "hd",
            PrimOp::Tl => "tl",
            PrimOp::Eq => "eq?",
            PrimOp::IsAtom => "atom?",
            PrimOp::IsNull => "null?",
            PrimOp::Add => "+",
            PrimOp::Sub => "-",
            PrimOp::Mul => "*",
            PrimOp::Lt => "<",
            PrimOp::List => "list",
        }
    }

    pub fn from_name(name: &str) -> Option<PrimOp> {
        PrimOp::ALL.into_iter().find(|op| op.name() == name)
    }

    /// `None` means variadic.
    pub fn arity(self) -> Option<usize> {
        match self {
            PrimOp::Hd | PrimOp::Tl | PrimOp::IsAtom | PrimOp::IsNull => Some(1),
            PrimOp::List => None,
            _ => Some(2),
        }
    }
}

impl fmt::Display for PrimOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Lit(Datum),
    /// `slot` is the parameter index in the enclosing def.
    Var { name: Rc<str>, slot: usize },
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `target` is the callee's index in `Program::defs`.
    Call { name: Rc<str>, target: usize, args: Vec<Expr> },
    Prim { op: PrimOp, args: Vec<Expr> },
    Fail(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Def {
    pub name: Rc<str>,
    pub params: Vec<Rc<str>>,
    pub body: Expr,
}

#[derive(Debug, Clone)]
pub struct Program {
    defs: Vec<Def>,
    index: HashMap<Rc<str>, usize>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        self.defs == other.defs
    }
}

impl Eq for Program {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiftError {
    #[error("malformed program{}: {detail}", in_def(.def))]
    Malformed { def: Option<String>, detail: String },
    #[error("duplicate definition `{def}`")]
    DuplicateDef { def: String },
    #[error("in `{def}`: duplicate parameter `{param}`")]
    DuplicateParam { def: String, param: String },
    #[error("in `{def}`: call to unknown function `{target}`")]
    UnknownCallTarget { def: String, target: String },
    #[error("in `{def}`: `{target}` takes {expected} argument(s), called with {found}")]
    ArityMismatch { def: String, target: String, expected: usize, found: usize },
    #[error("in `{def}`: unbound variable `{var}`")]
    UnboundVariable { def: String, var: String },
    #[error("in `{def}`: `{op}` takes {expected} argument(s), given {found}")]
    BadPrimArity { def: String, op: String, expected: usize, found: usize },
}

fn in_def(def: &Option<String>) -> String {
    def.as_ref().map(|d| format!(" in `{d}`")).unwrap_or_default()
}

impl Program {
    pub fn defs(&self) -> &[Def] {
        &self.defs
    }

    pub fn entry(&self) -> &Def {
        &self.defs[0]
    }

    pub fn def_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn def(&self, name: &str) -> Option<&Def> {
        self.def_index(name).map(|i| &self.defs[i])
    }

    /// The `(program (def name (params) body) ...)` datum for this program.
    pub fn to_datum(&self) -> Datum {
        let defs = self.defs.iter().map(|d| {
            Datum::list([
                Datum::atom("def"),
                Datum::Atom(d.name.clone()),
                Datum::list(d.params.iter().map(|p| Datum::Atom(p.clone()))),
                expr_to_datum(&d.body),
            ])
        });
        Datum::list(std::iter::once(Datum::atom("program")).chain(defs))
    }

    /// Canonical program text (one def per line), the byte-stable artifact form.
    pub fn to_text(&self) -> String {
        super::print::print_program_text(&self.to_datum())
    }
}

pub fn expr_to_datum(e: &Expr) -> Datum {
    match e {
        Expr::Lit(d) => Datum::list([Datum::atom("quote"), d.clone()]),
        Expr::Var { name, .. } => Datum::Atom(name.clone()),
        Expr::If(c, t, f) => Datum::list([Datum::atom("if"), expr_to_datum(c), expr_to_datum(t), expr_to_datum(f)]),
        Expr::Call { name, args, .. } => Datum::list(
            [Datum::atom("call"), Datum::Atom(name.clone())]
                .into_iter()
                .chain(args.iter().map(expr_to_datum)),
        ),
        Expr::Prim { op, args } => {
            Datum::list(std::iter::once(Datum::atom(op.name())).chain(args.iter().map(expr_to_datum)))
        }
        Expr::Fail(a) => Datum::list([Datum::atom("fail"), expr_to_datum(a)]),
    }
}

fn malformed(def: Option<&str>, detail: impl Into<String>) -> LiftError {
    LiftError::Malformed { def: def.map(str::to_owned), detail: detail.into() }
}

struct Header {
    name: Rc<str>,
    params: Vec<Rc<str>>,
    body: Datum,
}

fn atom_of(d: &Datum) -> Option<Rc<str>> {
    match d {
        Datum::Atom(a) => Some(a.clone()),
        _ => None,
    }
}

/// Validates a program datum and resolves calls and variables.
pub fn lift_program(d: &Datum) -> Result<Program, LiftError> {
    let items = d.as_list().ok_or_else(|| malformed(None, "expected `(program ...)`"))?;
    if !items.head().is_some_and(|h| h.is_atom("program")) {
        return Err(malformed(None, "expected `(program ...)`"));
    }
    let mut headers = Vec::new();
    let mut index = HashMap::new();
    for def in items.iter().skip(1) {
        let parts: Vec<&Datum> = def.as_list().map(|l| l.iter().collect()).unwrap_or_default();
        if parts.len() != 4 || !parts[0].is_atom("def") {
            return Err(malformed(None, format!("expected `(def name (params) body)`, found {def}")));
        }
        let name = atom_of(parts[1]).ok_or_else(|| malformed(None, format!("def name must be an atom: {}", parts[1])))?;
        let param_list = parts[2]
            .as_list()
            .ok_or_else(|| malformed(Some(&name), "parameter list must be a list"))?;
        let mut params = Vec::new();
        let mut seen = HashSet::new();
        for p in param_list {
            let p = atom_of(p).ok_or_else(|| malformed(Some(&name), format!("parameter must be an atom: {p}")))?;
            if !seen.insert(p.clone()) {
                return Err(LiftError::DuplicateParam { def: name.to_string(), param: p.to_string() });
            }
            params.push(p);
        }
        if index.insert(name.clone(), headers.len()).is_some() {
            return Err(LiftError::DuplicateDef { def: name.to_string() });
        }
        headers.push(Header { name, params, body: parts[3].clone() });
    }
    if headers.is_empty() {
        return Err(malformed(None, "a program needs at least one def"));
    }
    let arities: Vec<usize> = headers.iter().map(|h| h.params.len()).collect();
    let mut defs = Vec::with_capacity(headers.len());
    for h in &headers {
        let cx = LiftCx { def: &h.name, params: &h.params, index: &index, arities: &arities };
        let body = cx.expr(&h.body)?;
        defs.push(Def { name: h.name.clone(), params: h.params.clone(), body });
    }
    Ok(Program { defs, index })
}

struct LiftCx<'a> {
    def: &'a str,
    params: &'a [Rc<str>],
    index: &'a HashMap<Rc<str>, usize>,
    arities: &'a [usize],
}

impl LiftCx<'_> {
    fn expr(&self, d: &Datum) -> Result<Expr, LiftError> {
        match d {
            Datum::Atom(name) => match self.params.iter().position(|p| p == name) {
                Some(slot) => Ok(Expr::Var { name: name.clone(), slot }),
                None => Err(LiftError::UnboundVariable { def: self.def.into(), var: name.to_string() }),
            },
            Datum::Num(_) | Datum::Str(_) => {
                Err(malformed(Some(self.def), format!("literal {d} must be quoted")))
            }
            Datum::List(l) => {
                let parts: Vec<&Datum> = l.iter().collect();
                let Some(head) = parts.first().and_then(|h| h.as_atom()) else {
                    return Err(malformed(Some(self.def), format!("bad expression {d}")));
                };
                let args = &parts[1..];
                match head {
                    "quote" => {
                        if args.len() != 1 {
                            return Err(malformed(Some(self.def), "quote takes exactly one datum"));
                        }
                        Ok(Expr::Lit(args[0].clone()))
                    }
                    "if" => {
                        if args.len() != 3 {
                            return Err(malformed(Some(self.def), format!("if takes 3 parts: {d}")));
                        }
                        Ok(Expr::If(
                            Box::new(self.expr(args[0])?),
                            Box::new(self.expr(args[1])?),
                            Box::new(self.expr(args[2])?),
                        ))
                    }
                    "call" => {
                        let Some(name) = args.first().and_then(|n| atom_of(n)) else {
                            return Err(malformed(Some(self.def), format!("call needs a function name: {d}")));
                        };
                        let target = *self.index.get(&name).ok_or_else(|| LiftError::UnknownCallTarget {
                            def: self.def.into(),
                            target: name.to_string(),
                        })?;
                        let found = args.len() - 1;
                        if self.arities[target] != found {
                            return Err(LiftError::ArityMismatch {
                                def: self.def.into(),
                                target: name.to_string(),
                                expected: self.arities[target],
                                found,
                            });
                        }
                        let args = args[1..].iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?;
                        Ok(Expr::Call { name, target, args })
                    }
                    "fail" => {
                        if args.len() != 1 {
                            return Err(LiftError::BadPrimArity {
                                def: self.def.into(),
                                op: "fail".into(),
                                expected: 1,
                                found: args.len(),
                            });
                        }
                        Ok(Expr::Fail(Box::new(self.expr(args[0])?)))
                    }
                    other => {
                        let op = PrimOp::from_name(other)
                            .ok_or_else(|| malformed(Some(self.def), format!("unknown form `{other}`")))?;
                        if let Some(expected) = op.arity() {
                            if expected != args.len() {
                                return Err(LiftError::BadPrimArity {
                                    def: self.def.into(),
                                    op: other.into(),
                                    expected,
                                    found: args.len(),
                                });
                            }
                        }
                        let args = args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?;
                        Ok(Expr::Prim { op, args })
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcore::parse::parse_datum;

    fn lift(text: &str) -> Result<Program, LiftError> {
        lift_program(&parse_datum(text).unwrap())
    }

    #[test]
    fn identity_program() {
        let p = lift("(program (def id (x) x))").unwrap();
        assert_eq!(&*p.entry().name, "id");
        assert_eq!(p.entry().params.len(), 1);
    }

    #[test]
    fn unknown_call_target() {
        assert_eq!(
            lift("(program (def f (x) (call g x)))").unwrap_err(),
            LiftError::UnknownCallTarget { def: "f".into(), target: "g".into() }
        );
    }

    #[test]
    fn duplicate_def() {
        assert_eq!(
            lift("(program (def f (x) x) (def f (y) y))").unwrap_err(),
            LiftError::DuplicateDef { def: "f".into() }
        );
    }

    #[test]
    fn arity_mismatch() {
        assert!(matches!(
            lift("(program (def f (x) (call g x x)) (def g (y) y))").unwrap_err(),
            LiftError::ArityMismatch { expected: 1, found: 2, .. }
        ));
    }

    #[test]
    fn unbound_variable() {
        assert_eq!(
            lift("(program (def f (x) y))").unwrap_err(),
            LiftError::UnboundVariable { def: "f".into(), var: "y".into() }
        );
    }

    #[test]
    fn bad_prim_arity() {
        assert!(matches!(lift("(program (def f (x) (hd x x)))").unwrap_err(), LiftError::BadPrimArity { .. }));
        assert!(matches!(lift("(program (def f (x) (fail)))").unwrap_err(), LiftError::BadPrimArity { .. }));
        assert!(lift("(program (def f (x) (list)))").is_ok());
    }

    #[test]
    fn bare_literals_rejected() {
        assert!(matches!(lift("(program (def f () 5))").unwrap_err(), LiftError::Malformed { .. }));
    }

    #[test]
    fn datum_round_trip() {
        let text = "(program (def f (x y) (if (eq? x (quote a)) (call g (list x 1)) (fail y))) (def g (z) (+ (quote 1) (hd z))))";
        let text = text.replace("(list x 1)", "(list x (quote 1))");
        let d = parse_datum(&text).unwrap();
        let p = lift_program(&d).unwrap();
        assert_eq!(p.to_datum(), d);
        assert_eq!(lift_program(&p.to_datum()).unwrap(), p);
    }
}
