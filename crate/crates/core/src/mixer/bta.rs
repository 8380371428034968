//! Monovariant binding-time analysis over the two-point lattice S ⊑ D.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use crate::lcore::{Datum, Expr, Program};

use super::MixError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BindingTime {
    Static,
    Dynamic,
}

impl BindingTime {
    pub fn join(self, other: BindingTime) -> BindingTime {
        self.max(other)
    }

    pub fn is_static(self) -> bool {
        self == BindingTime::Static
    }
}

impl fmt::Display for BindingTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BindingTime::Static => "S",
            BindingTime::Dynamic => "D",
        })
    }
}

/// The known and unknown inputs of a subject program's entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingSplit {
    pub static_args: BTreeMap<String, Datum>,
    pub dynamic_params: Vec<String>,
}

impl BindingSplit {
    pub fn new<S, D>(static_args: S, dynamic_params: D) -> Self
    where
        S: IntoIterator<Item = (String, Datum)>,
        D: IntoIterator<Item = String>,
    {
        BindingSplit {
            static_args: static_args.into_iter().collect(),
            dynamic_params: dynamic_params.into_iter().collect(),
        }
    }

    /// Checks that the split partitions `subject`'s entry parameters and that
    /// the dynamic ones are listed in parameter order.
    pub fn validate(&self, subject: &Program) -> Result<(), MixError> {
        let params = &subject.entry().params;
        for name in self.static_args.keys() {
            if self.dynamic_params.contains(name) {
                return Err(MixError::BadSplit(format!("`{name}` is both static and dynamic")));
            }
            if !params.iter().any(|p| &**p == name) {
                return Err(MixError::BadSplit(format!("`{name}` is not a parameter of the entry")));
            }
        }
        let dyn_in_order: Vec<&str> =
            params.iter().map(|p| &**p).filter(|p| !self.static_args.contains_key(*p)).collect();
        let given: Vec<&str> = self.dynamic_params.iter().map(String::as_str).collect();
        if dyn_in_order != given {
            return Err(MixError::BadSplit(format!(
                "dynamic parameters must be exactly {dyn_in_order:?} in order, got {given:?}"
            )));
        }
        Ok(())
    }
}

/// Binding times for every parameter and result of a subject program,
/// indexed like `Program::defs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Division {
    names: Vec<Rc<str>>,
    params: Vec<Vec<BindingTime>>,
    results: Vec<BindingTime>,
}

impl Division {
    pub fn param_bts(&self, def: usize) -> &[BindingTime] {
        &self.params[def]
    }

    pub fn result_bt(&self, def: usize) -> BindingTime {
        self.results[def]
    }

    pub fn param_bt_by_name(&self, subject: &Program, def: &str, param: &str) -> Option<BindingTime> {
        let i = self.names.iter().position(|n| &**n == def)?;
        let slot = subject.defs()[i].params.iter().position(|p| &**p == param)?;
        Some(self.params[i][slot])
    }

    pub fn result_bt_by_name(&self, def: &str) -> Option<BindingTime> {
        let i = self.names.iter().position(|n| &**n == def)?;
        Some(self.results[i])
    }

    /// Binding time of `e` appearing in def `def`.
    pub fn expr_bt(&self, def: usize, e: &Expr) -> BindingTime {
        expr_bt(e, &self.params[def], &self.results)
    }

    /// Builds a division from explicit tables; used to exercise the
    /// congruence check.
    pub fn from_parts(subject: &Program, params: Vec<Vec<BindingTime>>, results: Vec<BindingTime>) -> Division {
        Division { names: subject.defs().iter().map(|d| d.name.clone()).collect(), params, results }
    }
}

fn expr_bt(e: &Expr, params: &[BindingTime], results: &[BindingTime]) -> BindingTime {
    use BindingTime::*;
    match e {
        Expr::Lit(_) => Static,
        Expr::Var { slot, .. } => params[*slot],
        Expr::If(c, t, f) => expr_bt(c, params, results)
            .join(expr_bt(t, params, results))
            .join(expr_bt(f, params, results)),
        Expr::Prim { args, .. } => args.iter().fold(Static, |bt, a| bt.join(expr_bt(a, params, results))),
        Expr::Call { target, args, .. } => {
            args.iter().fold(results[*target], |bt, a| bt.join(expr_bt(a, params, results)))
        }
        Expr::Fail(_) => Dynamic,
    }
}

fn raise_call_sites(
    e: &Expr,
    own: &[BindingTime],
    results: &[BindingTime],
    params: &mut [Vec<BindingTime>],
    changed: &mut bool,
) {
    match e {
        Expr::Lit(_) | Expr::Var { .. } => {}
        Expr::If(c, t, f) => {
            for sub in [c, t, f] {
                raise_call_sites(sub, own, results, params, changed);
            }
        }
        Expr::Prim { args, .. } => {
            for a in args {
                raise_call_sites(a, own, results, params, changed);
            }
        }
        Expr::Fail(a) => raise_call_sites(a, own, results, params, changed),
        Expr::Call { target, args, .. } => {
            for (i, a) in args.iter().enumerate() {
                raise_call_sites(a, own, results, params, changed);
                if expr_bt(a, own, results) == BindingTime::Dynamic && params[*target][i] == BindingTime::Static {
                    params[*target][i] = BindingTime::Dynamic;
                    *changed = true;
                }
            }
        }
    }
}

/// Least congruent division for `subject` under `split`.
pub fn analyze(subject: &Program, split: &BindingSplit) -> Result<Division, MixError> {
    split.validate(subject)?;
    let defs = subject.defs();
    let mut params: Vec<Vec<BindingTime>> = defs.iter().map(|d| vec![BindingTime::Static; d.params.len()]).collect();
    let mut results = vec![BindingTime::Static; defs.len()];
    for (slot, p) in defs[0].params.iter().enumerate() {
        if split.dynamic_params.iter().any(|d| **d == **p) {
            params[0][slot] = BindingTime::Dynamic;
        }
    }
    loop {
        let mut changed = false;
        for (i, def) in defs.iter().enumerate() {
            let own = params[i].clone();
            raise_call_sites(&def.body, &own, &results, &mut params, &mut changed);
            let rbt = expr_bt(&def.body, &params[i], &results);
            if rbt != results[i] {
                results[i] = rbt;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Division { names: defs.iter().map(|d| d.name.clone()).collect(), params, results })
}

/// Independent check that `div` is congruent for `subject` under `split`:
/// entry seeded from the split, every dynamic argument lands in a dynamic
/// parameter, and every result is at least as dynamic as its body.
pub fn check_congruence(subject: &Program, split: &BindingSplit, div: &Division) -> Result<(), String> {
    let defs = subject.defs();
    if div.params.len() != defs.len() || div.results.len() != defs.len() {
        return Err("division does not match the subject's definitions".into());
    }
    for (i, d) in defs.iter().enumerate() {
        if div.params[i].len() != d.params.len() {
            return Err(format!("division has wrong arity for `{}`", d.name));
        }
    }
    for (slot, p) in defs[0].params.iter().enumerate() {
        let wanted = if split.static_args.contains_key(&**p) { BindingTime::Static } else { BindingTime::Dynamic };
        if wanted == BindingTime::Dynamic && div.params[0][slot] == BindingTime::Static {
            return Err(format!("entry parameter `{p}` is dynamic in the split but static in the division"));
        }
    }
    // A fresh, explicitly-stacked walk; deliberately shares nothing with the
    // analysis above.
    for (i, d) in defs.iter().enumerate() {
        let mut dynamic_at: Vec<(&Expr, bool)> = Vec::new();
        let mut stack = vec![&d.body];
        while let Some(e) = stack.pop() {
            dynamic_at.push((e, false));
            match e {
                Expr::If(c, t, f) => stack.extend([&**c, &**t, &**f]),
                Expr::Prim { args, .. } | Expr::Call { args, .. } => stack.extend(args.iter()),
                Expr::Fail(a) => stack.push(a),
                _ => {}
            }
        }
        // Post-order evaluation of binding times.
        let mut memo: std::collections::HashMap<*const Expr, bool> = std::collections::HashMap::new();
        for (e, _) in dynamic_at.iter().rev() {
            let dynamic = match e {
                Expr::Lit(_) => false,
                Expr::Var { slot, .. } => div.params[i][*slot] == BindingTime::Dynamic,
                Expr::If(c, t, f) => [&**c, &**t, &**f].iter().any(|s| memo[&(*s as *const Expr)]),
                Expr::Prim { args, .. } => args.iter().any(|a| memo[&(a as *const Expr)]),
                Expr::Call { target, args, name } => {
                    for (k, a) in args.iter().enumerate() {
                        if memo[&(a as *const Expr)] && div.params[*target][k] == BindingTime::Static {
                            return Err(format!(
                                "in `{}`: dynamic argument {k} flows into static parameter `{}` of `{name}`",
                                d.name, defs[*target].params[k]
                            ));
                        }
                    }
                    div.results[*target] == BindingTime::Dynamic || args.iter().any(|a| memo[&(a as *const Expr)])
                }
                Expr::Fail(_) => true,
            };
            memo.insert(*e as *const Expr, dynamic);
        }
        if memo[&(&d.body as *const Expr)] && div.results[i] == BindingTime::Static {
            return Err(format!("`{}` has a dynamic body but a static result", d.name));
        }
    }
    Ok(())
}
