mod common;

use common::fixtures;
use futamix::ddsl::{dialog_to_datum, enumerate_paths, DEFAULT_PATH_CAP};
use futamix::dinterp::{dialog_atoms_in, fold_step, host_interp, run_stager, StageOutcome};
use futamix::mixer::{alpha_equivalent, BudgetKind, MixBudget, MixError};
use futamix::projections::*;

fn toolchain() -> Toolchain {
    Toolchain::bundled(MixBudget::default()).unwrap()
}

#[test]
fn compiler_reproduces_projection_one() {
    let tc = toolchain();
    assert_eq!(tc.compiler.entry().params.len(), 1);
    for spec in fixtures() {
        let g = dialog_to_datum(&spec);
        let p1 = project1(&tc.interp, &g).unwrap();
        let p2 = apply_compiler(&tc.compiler, &tc.interp, &g, 10_000_000).unwrap();
        assert!(alpha_equivalent(&p1, &p2), "{}", spec.name);
        for path in enumerate_paths(&spec, DEFAULT_PATH_CAP).unwrap() {
            let out = run_stager(&p2, &[path.responses.to_datum()], 100_000).unwrap().outcome;
            assert_eq!(out, host_interp(&spec, &path.responses));
        }
    }
}

#[test]
fn cogen_reproduces_projection_two() {
    let tc = toolchain();
    assert_eq!(tc.cogen.entry().params.len(), 1);
    let generated = tc.cogen_compiler.as_ref().unwrap();
    assert!(alpha_equivalent(generated, &tc.compiler));
    let specs = fixtures();
    let refs: Vec<_> = specs.iter().collect();
    assert!(dialog_atoms_in(&tc.cogen, &refs).is_empty());
    for word in ["size", "blend", "cream", "coffee", "interp", "run-steps", "lookup-answer", "responses"] {
        assert!(!tc.cogen.to_datum().atoms().iter().any(|a| &**a == word), "cogen mentions {word}");
    }
}

#[test]
fn cogen_also_compiles_the_step_interpreter() {
    let tc = toolchain();
    let step_compiler = apply_cogen(&tc.cogen, &tc.interp_step, 10_000_000).unwrap();
    assert!(alpha_equivalent(&step_compiler, &project2(&tc.mix_l0, &tc.interp_step).unwrap()));
    for spec in fixtures() {
        let g = dialog_to_datum(&spec);
        let stager = apply_compiler(&step_compiler, &tc.interp_step, &g, 10_000_000).unwrap();
        assert!(alpha_equivalent(&stager, &tc.step_stager(&spec).unwrap()));
        for path in enumerate_paths(&spec, DEFAULT_PATH_CAP).unwrap() {
            let t = fold_step(
                |prefix| run_stager(&stager, &[prefix.to_datum()], 100_000).map(|r| r.outcome),
                &path.responses,
            )
            .unwrap();
            assert_eq!(t.terminal, host_interp(&spec, &path.responses));
            let asked: Vec<&str> = t.pairs.iter().map(|(p, _)| p.as_str()).collect();
            assert_eq!(asked, path.prompts);
        }
    }
}

#[test]
fn matrix_is_green_and_stagers_are_faster() {
    let tc = toolchain();
    let staged: Vec<_> = fixtures().iter().map(|s| StagedDialog::build(&tc, s).unwrap()).collect();
    let report = run_equivalence_matrix(&tc, &staged).unwrap();
    assert_eq!(report.first_failure(), None);
    let coffee = &report.fixtures[0];
    assert_eq!(coffee.rows.iter().filter(|r| r.kind == RowKind::Path).count(), 12);
    assert!(coffee.rows.iter().all(|r| r.cells.len() == 6));
    for f in &report.fixtures {
        for row in f.rows.iter().filter(|r| r.kind == RowKind::Path) {
            let (interp, stager) = row.speedup().unwrap();
            assert!(stager < interp, "{} {}", f.dialog, row.responses);
        }
    }
}

#[test]
fn each_corrupted_artifact_is_caught_at_its_cell() {
    let tc = toolchain();
    let specs = fixtures();
    let staged: Vec<_> = specs.iter().map(|s| StagedDialog::build(&tc, s).unwrap()).collect();
    let fail_of = |tc: &Toolchain, staged: &[StagedDialog]| run_equivalence_matrix(tc, staged).unwrap().first_failure().unwrap();

    let mut s = staged.clone();
    s[0].p1 = corrupt_literal(&s[0].p1, "done", "dome").unwrap();
    assert_eq!((fail_of(&tc, &s).fixture.as_str(), fail_of(&tc, &s).column.as_str()), ("coffee", "p1-stager"));

    let mut s = staged.clone();
    s[0].direct = corrupt_literal(&s[0].direct, "invalid", "invalud").unwrap();
    let f = fail_of(&tc, &s);
    assert_eq!((f.fixture.as_str(), f.column.as_str()), ("coffee", "direct-compile"));
    assert!(f.location.starts_with('('));

    let mut s = staged.clone();
    s[2].p3 = Ok(corrupt_literal(s[2].p3.as_ref().unwrap(), "done", "dome").unwrap());
    assert_eq!(fail_of(&tc, &s).column, "p3-stager");

    let mut bad = tc.clone();
    bad.compiler = corrupt_literal(&tc.compiler, "invalid", "invalud").unwrap();
    let s: Vec<_> = specs.iter().map(|sp| StagedDialog::build(&bad, sp).unwrap()).collect();
    assert_eq!(fail_of(&bad, &s).column, "p2-stager");

    let cogen = corrupt_literal(&tc.cogen, "quote", "quoth").unwrap();
    let bad = Toolchain::assemble(
        tc.interp.clone(),
        tc.interp_step.clone(),
        tc.mix_l0.clone(),
        tc.compiler.clone(),
        cogen,
        tc.budget,
        MixEngine::Host,
    );
    let s: Vec<_> = specs.iter().map(|sp| StagedDialog::build(&bad, sp).unwrap()).collect();
    assert_eq!(fail_of(&bad, &s).column, "p3-stager");
}

#[test]
fn tiny_point_budget_stops_projection_two() {
    let tc = toolchain();
    let err = project2_with_budget(&tc.mix_l0, &tc.interp, MixBudget { max_points: 10, max_steps: 10_000_000 }).unwrap_err();
    assert_eq!(err, ProjectionError::Mix(MixError::BudgetExceeded { kind: BudgetKind::Points, limit: 10 }));
    assert!(err.is_budget());
}

#[test]
fn artifacts_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = toolchain();
    let b = toolchain();
    for (name, x, y) in [("compiler.l0", &a.compiler, &b.compiler), ("cogen.l0", &a.cogen, &b.cogen)] {
        let p = write_program(dir.path(), name, x).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), y.to_text());
    }
    let coffee = &fixtures()[0];
    let g = dialog_to_datum(coffee);
    assert_eq!(project1(&a.interp, &g).unwrap().to_text(), project1(&b.interp, &g).unwrap().to_text());
}

#[test]
fn empty_dialog_stager_accepts_only_no_responses() {
    let tc = toolchain();
    let empty = &fixtures()[1];
    let stager = project1(&tc.interp, &dialog_to_datum(empty)).unwrap();
    let ok = run_stager(&stager, &[common::d("()")], 1_000).unwrap().outcome;
    assert_eq!(ok, StageOutcome::Done { message: "done".into(), echoes: vec![] });
    let extra = run_stager(&stager, &[common::d("(x)")], 1_000).unwrap().outcome;
    assert_eq!(extra, StageOutcome::Invalid { prompt: None, response: Some("x".into()) });
}

#[test]
#[ignore = "runs the L0 mix on itself; about a minute in a release build"]
fn self_applied_projections_match_host() {
    let tc = toolchain();
    let p2 = project2_self_applied(&tc.mix_l0, &tc.interp, 1_000_000_000).unwrap();
    assert_eq!(p2.to_text(), tc.compiler.to_text());
    let p3 = project3_self_applied(&tc.mix_l0, 2_000_000_000).unwrap();
    assert_eq!(p3.to_text(), tc.cogen.to_text());
}
