//! Polyvariant specializer driven by a division.
//!
//! The subject is first annotated into a two-level form, then residual
//! definitions are generated from a LIFO worklist of specialization points
//! `(def, static values)`. Point `k` of def `f` is named `f_k`, with `k`
//! counting points in discovery order. The L0 mix asset follows exactly the
//! same annotation, traversal order and numbering.

use std::collections::HashMap;
use std::rc::Rc;

use crate::lcore::{lift_program, Datum, Expr, Machine, Outcome, PrimOp, Program};

use super::bta::{BindingSplit, BindingTime, Division};
use super::{BudgetKind, MixBudget, MixError};

/// Two-level expression.
#[derive(Debug)]
enum Ann<'p> {
    /// Fully static: evaluate and residualize as a literal.
    Lift(&'p Expr),
    Var(Rc<str>),
    /// Static test, dynamic branches: only the chosen branch is kept.
    SIf(&'p Expr, Box<Ann<'p>>, Box<Ann<'p>>),
    DIf(Box<Ann<'p>>, Box<Ann<'p>>, Box<Ann<'p>>),
    DCall { target: usize, static_args: Vec<&'p Expr>, dynamic_args: Vec<Ann<'p>> },
    DPrim(PrimOp, Vec<Ann<'p>>),
    DFail(Box<Ann<'p>>),
}

fn annotate<'p>(e: &'p Expr, def: usize, div: &Division) -> Ann<'p> {
    if div.expr_bt(def, e).is_static() {
        return Ann::Lift(e);
    }
    match e {
        Expr::Lit(_) => unreachable!("literals are static"),
        Expr::Var { name, .. } => Ann::Var(name.clone()),
        Expr::If(c, t, f) => {
            let (t, f) = (Box::new(annotate(t, def, div)), Box::new(annotate(f, def, div)));
            if div.expr_bt(def, c).is_static() {
                Ann::SIf(c, t, f)
            } else {
                Ann::DIf(Box::new(annotate(c, def, div)), t, f)
            }
        }
        Expr::Call { target, args, .. } => {
            let bts = div.param_bts(*target);
            let mut static_args = Vec::new();
            let mut dynamic_args = Vec::new();
            for (a, bt) in args.iter().zip(bts) {
                match bt {
                    BindingTime::Static => static_args.push(a),
                    BindingTime::Dynamic => dynamic_args.push(annotate(a, def, div)),
                }
            }
            Ann::DCall { target: *target, static_args, dynamic_args }
        }
        Expr::Prim { op, args } => Ann::DPrim(*op, args.iter().map(|a| annotate(a, def, div)).collect()),
        Expr::Fail(a) => Ann::DFail(Box::new(annotate(a, def, div))),
    }
}

struct Point {
    def: usize,
    statics: Vec<Datum>,
    name: Rc<str>,
}

struct Specializer<'p> {
    subject: &'p Program,
    div: &'p Division,
    bodies: Vec<Ann<'p>>,
    machine: Machine<'p>,
    budget: MixBudget,
    memo: HashMap<(usize, Vec<Datum>), usize>,
    points: Vec<Point>,
    pending: Vec<usize>,
}

fn quote(d: Datum) -> Datum {
    Datum::list([Datum::atom("quote"), d])
}

impl<'p> Specializer<'p> {
    fn def_name(&self, def: usize) -> &str {
        &self.subject.defs()[def].name
    }

    fn static_eval(&mut self, e: &'p Expr, env: &Rc<[Datum]>, def: usize) -> Result<Datum, MixError> {
        let outcome = self.machine.run(e, env.clone()).map_err(|err| match err {
            crate::lcore::EvalError::BudgetExceeded { .. } => {
                MixError::BudgetExceeded { kind: BudgetKind::Steps, limit: self.budget.max_steps }
            }
            other => MixError::StaticEval { def: self.def_name(def).to_owned(), detail: other.to_string() },
        })?;
        match outcome {
            Outcome::Value(v) => Ok(v),
            Outcome::Abort(payload) => Err(MixError::StaticEval {
                def: self.def_name(def).to_owned(),
                detail: format!("static computation failed with {payload}"),
            }),
        }
    }

    fn point(&mut self, def: usize, statics: Vec<Datum>) -> Result<Rc<str>, MixError> {
        let key = (def, statics);
        if let Some(&k) = self.memo.get(&key) {
            return Ok(self.points[k].name.clone());
        }
        if self.points.len() >= self.budget.max_points {
            return Err(MixError::points(self.budget.max_points));
        }
        let k = self.points.len();
        let name: Rc<str> = Rc::from(format!("{}_{}", self.def_name(def), k));
        self.points.push(Point { def, statics: key.1.clone(), name: name.clone() });
        self.memo.insert(key, k);
        self.pending.push(k);
        Ok(name)
    }

    fn spec(&mut self, ann: &Ann<'p>, env: &Rc<[Datum]>, def: usize) -> Result<Datum, MixError> {
        Ok(match ann {
            Ann::Lift(e) => quote(self.static_eval(e, env, def)?),
            Ann::Var(name) => Datum::Atom(name.clone()),
            Ann::SIf(c, t, f) => {
                let test = self.static_eval(c, env, def)?;
                if test.is_atom("true") {
                    self.spec(t, env, def)?
                } else if test.is_atom("false") {
                    self.spec(f, env, def)?
                } else {
                    return Err(MixError::StaticEval {
                        def: self.def_name(def).to_owned(),
                        detail: format!("`if` condition must be true or false, got {test}"),
                    });
                }
            }
            Ann::DIf(c, t, f) => {
                let c = self.spec(c, env, def)?;
                let t = self.spec(t, env, def)?;
                let f = self.spec(f, env, def)?;
                Datum::list([Datum::atom("if"), c, t, f])
            }
            Ann::DCall { target, static_args, dynamic_args } => {
                let mut statics = Vec::with_capacity(static_args.len());
                for a in static_args {
                    statics.push(self.static_eval(a, env, def)?);
                }
                let mut code = Vec::with_capacity(dynamic_args.len() + 2);
                code.push(Datum::atom("call"));
                code.push(Datum::nil());
                for a in dynamic_args {
                    code.push(self.spec(a, env, def)?);
                }
                code[1] = Datum::Atom(self.point(*target, statics)?);
                Datum::list(code)
            }
            Ann::DPrim(op, args) => {
                let mut code = vec![Datum::atom(op.name())];
                for a in args {
                    code.push(self.spec(a, env, def)?);
                }
                Datum::list(code)
            }
            Ann::DFail(a) => Datum::list([Datum::atom("fail"), self.spec(a, env, def)?]),
        })
    }

    fn residual_def(&mut self, k: usize) -> Result<Datum, MixError> {
        let def = self.points[k].def;
        let bts = self.div.param_bts(def);
        let d = &self.subject.defs()[def];
        let mut statics = self.points[k].statics.iter();
        let env: Rc<[Datum]> = bts
            .iter()
            .map(|bt| match bt {
                BindingTime::Static => statics.next().cloned().expect("one value per static parameter"),
                BindingTime::Dynamic => Datum::nil(),
            })
            .collect();
        let params = d
            .params
            .iter()
            .zip(bts)
            .filter(|(_, bt)| **bt == BindingTime::Dynamic)
            .map(|(p, _)| Datum::Atom(p.clone()));
        let params = Datum::list(params);
        let body = std::mem::replace(&mut self.bodies[def], Ann::Var(Rc::from("")));
        let code = self.spec(&body, &env, def);
        self.bodies[def] = body;
        Ok(Datum::list([Datum::atom("def"), Datum::Atom(self.points[k].name.clone()), params, code?]))
    }
}

/// Produces the residual program of `subject` with `split.static_args` fixed.
pub fn specialize(
    subject: &Program,
    split: &BindingSplit,
    div: &Division,
    budget: MixBudget,
) -> Result<Program, MixError> {
    split.validate(subject)?;
    super::bta::check_congruence(subject, split, div).map_err(MixError::NonCongruentDivision)?;
    let entry = subject.entry();
    let entry_bts = div.param_bts(0);
    for (p, bt) in entry.params.iter().zip(entry_bts) {
        if *bt == BindingTime::Dynamic && split.static_args.contains_key(&**p) {
            return Err(MixError::BadSplit(format!(
                "entry parameter `{p}` is given statically but the division makes it dynamic"
            )));
        }
    }
    let bodies = subject.defs().iter().enumerate().map(|(i, d)| annotate(&d.body, i, div)).collect();
    let mut sp = Specializer {
        subject,
        div,
        bodies,
        machine: Machine::new(subject, budget.max_steps),
        budget,
        memo: HashMap::new(),
        points: Vec::new(),
        pending: Vec::new(),
    };
    let initial: Vec<Datum> = entry
        .params
        .iter()
        .zip(entry_bts)
        .filter(|(_, bt)| bt.is_static())
        .map(|(p, _)| split.static_args[&**p].clone())
        .collect();
    sp.point(0, initial)?;
    let mut residual: Vec<(usize, Datum)> = Vec::new();
    while let Some(k) = sp.pending.pop() {
        residual.push((k, sp.residual_def(k)?));
    }
    residual.sort_by_key(|(k, _)| *k);
    let program = Datum::list(std::iter::once(Datum::atom("program")).chain(residual.into_iter().map(|(_, d)| d)));
    let program = lift_program(&program).map_err(|e| MixError::Internal(format!("residual program is invalid: {e}")))?;
    Ok(super::normalize::prune(&program))
}
