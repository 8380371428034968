//! Subject programs, splits and run-time inputs shared by the integration
//! tests and the acceptance target.
#![allow(dead_code)]

use futamix::ddsl::{dialog_to_datum, enumerate_paths, parse_dialog, DialogSpec, DEFAULT_PATH_CAP};
use futamix::dinterp::{interp_l0_program, interp_step_l0_program};
use futamix::lcore::{eval, load_program, parse_datum, EvalError, Outcome};
use futamix::mixer::{mix_l0_program, BindingSplit};
use futamix::{Datum, Program};

pub const COFFEE: &str = include_str!("../../../../fixtures/coffee.dlg");
pub const EMPTY: &str = include_str!("../../../../fixtures/empty.dlg");
pub const BRANCHY: &str = include_str!("../../../../fixtures/branchy.dlg");

pub fn fixtures() -> Vec<DialogSpec> {
    [COFFEE, EMPTY, BRANCHY].iter().map(|t| parse_dialog(t).unwrap()).collect()
}

pub fn d(text: &str) -> Datum {
    parse_datum(text).unwrap()
}

pub struct Case {
    pub name: String,
    pub program: Program,
    pub split: BindingSplit,
    /// Values for the dynamic parameters, one vector per run.
    pub inputs: Vec<Vec<Datum>>,
    /// Whether the L0 mix is cheap enough to run on this case in a debug build.
    pub l0_agreement: bool,
}

impl Case {
    fn new(name: &str, program: Program, statics: &[(&str, Datum)], dynamic: &[&str], inputs: Vec<Vec<Datum>>) -> Case {
        Case {
            name: name.to_owned(),
            program,
            split: BindingSplit::new(
                statics.iter().map(|(k, v)| (k.to_string(), v.clone())),
                dynamic.iter().map(|s| s.to_string()),
            ),
            inputs,
            l0_agreement: true,
        }
    }

    fn src(name: &str, text: &str, statics: &[(&str, &str)], dynamic: &[&str], inputs: &[&str]) -> Case {
        let statics: Vec<(&str, Datum)> = statics.iter().map(|(k, v)| (*k, d(v))).collect();
        let inputs = inputs
            .iter()
            .map(|row| d(row).as_list().expect("input row is a list").iter().cloned().collect())
            .collect();
        Case::new(name, load_program(text).unwrap(), &statics, dynamic, inputs)
    }

    /// All entry arguments in parameter order.
    pub fn merged(&self, dynamic: &[Datum]) -> Vec<Datum> {
        let mut dyn_values = dynamic.iter();
        self.program
            .entry()
            .params
            .iter()
            .map(|p| match self.split.static_args.get(&**p) {
                Some(v) => v.clone(),
                None => dyn_values.next().expect("one value per dynamic parameter").clone(),
            })
            .collect()
    }
}

pub fn run(p: &Program, args: &[Datum]) -> Result<Outcome, EvalError> {
    eval(p, args, 50_000_000).map(|r| r.outcome)
}

fn dialog_inputs(spec: &DialogSpec) -> Vec<Vec<Datum>> {
    let mut rows: Vec<Vec<Datum>> = enumerate_paths(spec, DEFAULT_PATH_CAP)
        .unwrap()
        .into_iter()
        .map(|p| vec![p.responses.to_datum()])
        .collect();
    for probe in ["()", "(bogus)", "(small huge no)", "(small dark no more)", "(hot oat)", "(cold crushed skip skip)"] {
        rows.push(vec![d(probe)]);
    }
    rows
}

/// The corpus: small classic subjects, the dialog interpreters on every
/// fixture, and the L0 mix itself as a subject.
pub fn corpus() -> Vec<Case> {
    let mut cases = vec![
        Case::src("identity", "(program (def id (x) x))", &[("x", "a")], &[], &["()"]),
        Case::src(
            "power",
            "(program (def power (n x) (if (eq? n '0) '1 (* x (call power (- n '1) x)))))",
            &[("n", "5")],
            &["x"],
            &["(-2)", "(0)", "(1)", "(3)", "(7)"],
        ),
        Case::src(
            "append",
            "(program (def append (xs ys) (if (null? xs) ys (cons (hd xs) (call append (tl xs) ys)))))",
            &[("xs", "(a b c)")],
            &["ys"],
            &["(())", "((d))", "((1 2 3))"],
        ),
        Case::src(
            "member",
            "(program (def member (x xs) (if (null? xs) 'false (if (eq? x (hd xs)) 'true (call member x (tl xs))))))",
            &[("xs", "(red green blue)")],
            &["x"],
            &["(red)", "(blue)", "(mauve)", "((red))"],
        ),
        Case::src(
            "lookup-or-fail",
            "(program (def lookup (key table) (if (null? table) (fail (list 'missing key))
                 (if (eq? key (hd (hd table))) (hd (tl (hd table))) (call lookup key (tl table))))))",
            &[("table", "((a 1) (b 2) (c 3))")],
            &["key"],
            &["(a)", "(c)", "(z)"],
        ),
        Case::src(
            "ackermann",
            "(program (def ack (m n) (if (eq? m '0) (+ n '1)
                 (if (eq? n '0) (call ack (- m '1) '1) (call ack (- m '1) (call ack m (- n '1)))))))",
            &[("m", "2")],
            &["n"],
            &["(0)", "(1)", "(3)"],
        ),
        Case::src(
            "reverse-static-list",
            "(program (def rev (xs acc) (if (null? xs) acc (call rev (tl xs) (cons (hd xs) acc)))))",
            &[("xs", "(1 2 3 4)")],
            &["acc"],
            &["(())", "((0))"],
        ),
        Case::src(
            "calculator",
            "(program
               (def calc (e env) (if (atom? e) (call var e env)
                 (if (eq? (hd e) 'add) (+ (call calc (hd (tl e)) env) (call calc (hd (tl (tl e))) env))
                 (if (eq? (hd e) 'mul) (* (call calc (hd (tl e)) env) (call calc (hd (tl (tl e))) env))
                 (if (eq? (hd e) 'lit) (hd (tl e))
                   (fail (list 'bad-expression e)))))))
               (def var (x env) (if (null? env) (fail (list 'unbound x))
                 (if (eq? x (hd (hd env))) (hd (tl (hd env))) (call var x (tl env))))))",
            &[("e", "(add (mul x x) (add y (lit 4)))")],
            &["env"],
            &["(((x 3) (y 1)))", "(((y 2) (x -5)))", "(((x 1)))", "(((x 9223372036854775807) (y 0)))"],
        ),
        Case::src(
            "matcher",
            "(program
               (def match (pat text) (if (call prefix pat text) 'true
                 (if (null? text) 'false (call match pat (tl text)))))
               (def prefix (pat text) (if (null? pat) 'true
                 (if (null? text) 'false
                 (if (eq? (hd pat) (hd text)) (call prefix (tl pat) (tl text)) 'false)))))",
            &[("pat", "(a b a)")],
            &["text"],
            &["((a b a))", "((c a b b a b a))", "((a b))", "(())"],
        ),
        Case::src(
            "state-machine",
            "(program
               (def run (delta state input) (if (null? input) state
                 (call run delta (call step delta state (hd input)) (tl input))))
               (def step (delta state sym) (if (null? delta) 'stuck
                 (if (eq? (hd (hd delta)) state)
                   (if (eq? (hd (tl (hd delta))) sym) (hd (tl (tl (hd delta)))) (call step (tl delta) state sym))
                   (call step (tl delta) state sym)))))",
            &[("delta", "((s0 a s1) (s1 b s0) (s1 a s1))")],
            &["state", "input"],
            &["(s0 (a b a a))", "(s1 (b))", "(s0 (b))"],
        ),
        Case::src(
            "nothing-static",
            "(program (def f (x y) (if (< x y) (list x y) (call f (- x '1) (+ y '1)))))",
            &[],
            &["x", "y"],
            &["(1 2)", "(9 0)"],
        ),
    ];
    let interp = interp_l0_program().unwrap();
    let step = interp_step_l0_program().unwrap();
    for spec in fixtures() {
        let g = dialog_to_datum(&spec);
        let inputs = dialog_inputs(&spec);
        cases.push(Case::new(&format!("interp/{}", spec.name), interp.clone(), &[("dialog", g.clone())], &["responses"], inputs.clone()));
        let mut prefixes = inputs;
        prefixes.push(vec![d("(small)")]);
        prefixes.push(vec![d("(hot)")]);
        cases.push(Case::new(&format!("interp-step/{}", spec.name), step.clone(), &[("dialog", g)], &["responses"], prefixes));
    }
    let power = load_program("(program (def power (n x) (if (eq? n '0) '1 (* x (call power (- n '1) x)))))").unwrap();
    let mut mix_on_power = Case::new(
        "mix-on-power",
        mix_l0_program().unwrap(),
        &[("subject", power.to_datum()), ("dynamic-names", d("(x)"))],
        &["static-assoc"],
        vec![vec![d("((n 0))")], vec![d("((n 3))")]],
    );
    mix_on_power.l0_agreement = false;
    cases.push(mix_on_power);
    cases
}
