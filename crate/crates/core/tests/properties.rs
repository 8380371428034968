use proptest::prelude::*;

use futamix::ddsl::{datum_to_dialog, dialog_to_datum, enumerate_paths, DialogSpec, ResultTemplate, Step};
use futamix::dinterp::{fold_step, host_interp, host_step};
use futamix::lcore::{eval, lift_program, parse_datum, print_datum, Datum};
use futamix::mixer::{alpha_normalize, mix_host, BindingSplit};

fn atom_name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9?!*+<>=-]{0,6}"
}

fn datum() -> impl Strategy<Value = Datum> {
    let leaf = prop_oneof![
        atom_name().prop_map(|a| Datum::atom(&a)),
        any::<i64>().prop_map(Datum::Num),
        "[ -~\n\t]{0,8}".prop_map(|s| Datum::string(&s)),
    ];
    leaf.prop_recursive(4, 48, 6, |inner| prop::collection::vec(inner, 0..6).prop_map(Datum::list))
}

/// Small dialogs with branches only on prompts already asked at the same
/// level, which is what validation accepts.
fn dialog() -> impl Strategy<Value = DialogSpec> {
    let prompt_shapes = prop::collection::vec((1usize..4, prop::option::of(0usize..3)), 0..4);
    (prompt_shapes, any::<bool>()).prop_map(|(shapes, echo_all)| {
        let mut steps = Vec::new();
        let mut ids = Vec::new();
        for (i, (n_choices, branch)) in shapes.iter().enumerate() {
            let id = format!("p{i}");
            let choices: Vec<String> = (0..*n_choices).map(|c| format!("c{c}")).collect();
            steps.push(Step::Prompt { id: id.clone(), text: format!("question {i}?"), choices: choices.clone() });
            if let Some(arm) = branch {
                let arm = choices[arm % choices.len()].clone();
                let extra = format!("p{i}x");
                steps.push(Step::Branch {
                    on: id.clone(),
                    arms: vec![(arm, vec![Step::Prompt { id: extra.clone(), text: "more?".into(), choices: vec!["y".into(), "n".into()] }])],
                });
                ids.push(extra);
            }
            ids.push(id);
        }
        let echo = if echo_all { ids } else { ids.into_iter().take(1).collect() };
        DialogSpec { name: "gen".into(), steps, result: ResultTemplate { message: "ok".into(), echo } }
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(d in datum()) {
        prop_assert_eq!(parse_datum(&print_datum(&d)).unwrap(), d);
    }

    #[test]
    fn dialog_datum_round_trip(spec in dialog()) {
        prop_assert_eq!(datum_to_dialog(&dialog_to_datum(&spec)).unwrap(), spec.clone());
        let text = print_datum(&dialog_to_datum(&spec));
        prop_assert_eq!(futamix::ddsl::parse_dialog(&text).unwrap(), spec);
    }

    #[test]
    fn paths_are_done_and_fold_law_holds(spec in dialog()) {
        for path in enumerate_paths(&spec, 10_000).unwrap() {
            let is_done = matches!(host_interp(&spec, &path.responses), futamix::dinterp::StageOutcome::Done { .. });
            prop_assert!(is_done);
            let t = fold_step(|p| Ok::<_, ()>(host_step(&spec, p)), &path.responses).unwrap();
            prop_assert_eq!(&t.terminal, &host_interp(&spec, &path.responses));
            let asked: Vec<String> = t.pairs.iter().map(|(p, _)| p.clone()).collect();
            prop_assert_eq!(asked, path.prompts);
        }
    }

    #[test]
    fn power_residuals_compute_powers(n in 0i64..8, x in -20i64..20) {
        let p = futamix::lcore::load_program(
            "(program (def power (n x) (if (eq? n '0) '1 (* x (call power (- n '1) x)))))").unwrap();
        let r = mix_host(&p, &BindingSplit::new([("n".to_string(), Datum::Num(n))], ["x".to_string()])).unwrap();
        prop_assert_eq!(r.defs().len() as i64, n + 1);
        let got = eval(&r, &[Datum::Num(x)], 10_000).unwrap().outcome;
        let want = eval(&p, &[Datum::Num(n), Datum::Num(x)], 10_000).unwrap().outcome;
        prop_assert_eq!(got, want);
        prop_assert_eq!(alpha_normalize(&alpha_normalize(&r)), alpha_normalize(&r));
    }
}

#[test]
fn program_reflection() {
    for text in [
        futamix::assets::MIX.source,
        futamix::assets::INTERP.source,
        futamix::assets::INTERP_STEP.source,
    ] {
        let p = futamix::lcore::load_program(text).unwrap();
        let d = p.to_datum();
        let q = lift_program(&d).unwrap();
        assert_eq!(q, p);
        assert_eq!(q.to_datum(), d);
    }
}
