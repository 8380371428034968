mod common;

use common::{corpus, run};
use futamix::mixer::{
    alpha_normalize, analyze, check_congruence, mix_host, mix_l0_program, run_mix_l0, BindingSplit,
};

#[test]
fn corpus_is_large_enough() {
    let cases = corpus();
    assert!(cases.len() >= 10);
    assert!(cases.iter().map(|c| c.inputs.len()).sum::<usize>() >= 60);
}

#[test]
fn residual_programs_agree_with_their_subjects() {
    for case in corpus() {
        let residual = mix_host(&case.program, &case.split).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        assert_eq!(residual.entry().params.len(), case.split.dynamic_params.len(), "{}", case.name);
        for input in &case.inputs {
            let want = run(&case.program, &case.merged(input));
            let got = run(&residual, input);
            assert_eq!(got, want, "{} on {:?}", case.name, input);
        }
    }
}

#[test]
fn divisions_pass_the_independent_checker() {
    for case in corpus() {
        let div = analyze(&case.program, &case.split).unwrap();
        check_congruence(&case.program, &case.split, &div).unwrap_or_else(|e| panic!("{}: {e}", case.name));
    }
}

#[test]
fn host_and_l0_mix_produce_identical_programs() {
    let mix = mix_l0_program().unwrap();
    for case in corpus().into_iter().filter(|c| c.l0_agreement) {
        let host = mix_host(&case.program, &case.split).unwrap();
        let l0 = run_mix_l0(&mix, &case.program, &case.split, 10_000_000).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        assert_eq!(alpha_normalize(&l0.residual).to_text(), alpha_normalize(&host).to_text(), "{}", case.name);
        assert_eq!(l0.residual.to_text(), host.to_text(), "{}: even the raw names agree", case.name);
    }
}

#[test]
fn specializing_nothing_keeps_behavior() {
    for case in corpus().into_iter().filter(|c| c.split.static_args.is_empty() || c.name == "power") {
        let all_dynamic = BindingSplit::new([], case.program.entry().params.iter().map(|p| p.to_string()));
        let residual = mix_host(&case.program, &all_dynamic).unwrap();
        assert_eq!(residual.defs().len(), case.program.defs().len(), "{}", case.name);
        for input in &case.inputs {
            let args = case.merged(input);
            assert_eq!(run(&residual, &args), run(&case.program, &args), "{}", case.name);
        }
    }
}

#[test]
fn specialization_is_deterministic() {
    for case in corpus() {
        let a = mix_host(&case.program, &case.split).unwrap().to_text();
        let b = mix_host(&case.program, &case.split).unwrap().to_text();
        assert_eq!(a, b, "{}", case.name);
    }
}
