//! Structural normal form for residual programs, and decoding of the L0 mix's
//! output.

use std::collections::HashMap;
use std::rc::Rc;

use crate::lcore::{lift_program, Datum, Expr, Program};

use super::MixError;

fn call_targets_in_order(e: &Expr, out: &mut Vec<usize>) {
    match e {
        Expr::Lit(_) | Expr::Var { .. } => {}
        Expr::If(c, t, f) => {
            call_targets_in_order(c, out);
            call_targets_in_order(t, out);
            call_targets_in_order(f, out);
        }
        Expr::Call { target, args, .. } => {
            out.push(*target);
            for a in args {
                call_targets_in_order(a, out);
            }
        }
        Expr::Prim { args, .. } => {
            for a in args {
                call_targets_in_order(a, out);
            }
        }
        Expr::Fail(a) => call_targets_in_order(a, out),
    }
}

/// Def indices reachable from the entry, breadth-first, each def's callees
/// taken in left-to-right order of their call sites.
fn reachable_order(p: &Program) -> Vec<usize> {
    let mut order = vec![0];
    let mut seen = vec![false; p.defs().len()];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        let mut targets = Vec::new();
        call_targets_in_order(&p.defs()[order[i]].body, &mut targets);
        for t in targets {
            if !seen[t] {
                seen[t] = true;
                order.push(t);
            }
        }
        i += 1;
    }
    order
}

fn rebuild(p: &Program, order: &[usize], rename: impl Fn(usize) -> Rc<str>) -> Program {
    let names: HashMap<&str, Rc<str>> = order.iter().map(|&i| (&*p.defs()[i].name, rename(i))).collect();
    let defs = order.iter().map(|&i| {
        let d = &p.defs()[i];
        Datum::list([
            Datum::atom("def"),
            Datum::Atom(names[&*d.name].clone()),
            Datum::list(d.params.iter().map(|x| Datum::Atom(x.clone()))),
            rename_calls(&d.body, &names),
        ])
    });
    let datum = Datum::list(std::iter::once(Datum::atom("program")).chain(defs));
    lift_program(&datum).expect("renaming preserves validity")
}

fn rename_calls(e: &Expr, names: &HashMap<&str, Rc<str>>) -> Datum {
    match e {
        Expr::Call { name, args, .. } => Datum::list(
            [Datum::atom("call"), Datum::Atom(names[&**name].clone())]
                .into_iter()
                .chain(args.iter().map(|a| rename_calls(a, names))),
        ),
        Expr::If(c, t, f) => Datum::list([
            Datum::atom("if"),
            rename_calls(c, names),
            rename_calls(t, names),
            rename_calls(f, names),
        ]),
        Expr::Prim { op, args } => {
            Datum::list(std::iter::once(Datum::atom(op.name())).chain(args.iter().map(|a| rename_calls(a, names))))
        }
        Expr::Fail(a) => Datum::list([Datum::atom("fail"), rename_calls(a, names)]),
        Expr::Lit(_) | Expr::Var { .. } => crate::lcore::program::expr_to_datum(e),
    }
}

/// Drops definitions unreachable from the entry, keeping names and the
/// relative order of the survivors.
pub fn prune(p: &Program) -> Program {
    let mut order = reachable_order(p);
    if order.len() == p.defs().len() {
        return p.clone();
    }
    order.sort_unstable();
    rebuild(p, &order, |i| p.defs()[i].name.clone())
}

/// Renames definitions to `d0..dn` in reachability order from the entry and
/// drops unreachable ones. Idempotent; two programs equal up to def naming
/// and ordering normalize to identical text.
pub fn alpha_normalize(p: &Program) -> Program {
    let order = reachable_order(p);
    let position: HashMap<usize, usize> = order.iter().enumerate().map(|(pos, &i)| (i, pos)).collect();
    rebuild(p, &order, |i| Rc::from(format!("d{}", position[&i])))
}

/// True when the two programs have identical normalized text.
pub fn alpha_equivalent(a: &Program, b: &Program) -> bool {
    alpha_normalize(a).to_datum() == alpha_normalize(b).to_datum()
}

fn decode_name(d: &Datum) -> Result<(Rc<str>, Option<i64>), MixError> {
    match d {
        Datum::Atom(a) => Ok((a.clone(), None)),
        Datum::List(l) if l.len() == 2 => {
            let base = l.get(0).and_then(Datum::as_atom);
            let k = l.get(1).and_then(Datum::as_num);
            match (base, k) {
                (Some(base), Some(k)) => Ok((Rc::from(format!("{base}_{k}")), Some(k))),
                _ => Err(MixError::Decode(format!("bad residual name {d}"))),
            }
        }
        _ => Err(MixError::Decode(format!("bad residual name {d}"))),
    }
}

fn decode_expr(e: &Datum) -> Result<Datum, MixError> {
    let Some(items) = e.as_list() else {
        return Ok(e.clone());
    };
    match items.head().and_then(Datum::as_atom) {
        Some("quote") => Ok(e.clone()),
        Some("call") => {
            let mut out = vec![Datum::atom("call")];
            let name = items.get(1).ok_or_else(|| MixError::Decode(format!("call without target: {e}")))?;
            out.push(Datum::Atom(decode_name(name)?.0));
            for a in items.iter().skip(2) {
                out.push(decode_expr(a)?);
            }
            Ok(Datum::list(out))
        }
        _ => {
            let mut out = Vec::with_capacity(items.len());
            for (i, x) in items.iter().enumerate() {
                out.push(if i == 0 { x.clone() } else { decode_expr(x)? });
            }
            Ok(Datum::list(out))
        }
    }
}

/// Turns the datum produced by running the L0 mix into a program: residual
/// names `(f k)` become atoms `f_k`, and definitions are put in order of `k`
/// (discovery order).
pub fn decode_residual(d: &Datum) -> Result<Program, MixError> {
    let items = d.as_list().ok_or_else(|| MixError::Decode(format!("expected (program ...), got {d}")))?;
    if !items.head().is_some_and(|h| h.is_atom("program")) {
        return Err(MixError::Decode("expected (program ...)".into()));
    }
    let mut defs = Vec::new();
    for def in items.iter().skip(1) {
        let parts: Vec<&Datum> = def.as_list().map(|l| l.iter().collect()).unwrap_or_default();
        if parts.len() != 4 || !parts[0].is_atom("def") {
            return Err(MixError::Decode(format!("bad definition {def}")));
        }
        let (name, k) = decode_name(parts[1])?;
        let body = decode_expr(parts[3])?;
        defs.push((k, Datum::list([Datum::atom("def"), Datum::Atom(name), parts[2].clone(), body])));
    }
    defs.sort_by_key(|(k, _)| *k);
    let datum = Datum::list(std::iter::once(Datum::atom("program")).chain(defs.into_iter().map(|(_, d)| d)));
    lift_program(&datum).map_err(|e| MixError::Decode(e.to_string()))
}
