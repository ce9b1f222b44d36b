mod common;

use common::oracle;
use pspace::corpus;
use pspace::engine::{
    check_coverage, run_algorithm1, uncovered_lassos_qpa, Coverage, EngineOptions, Justification,
    Verdict,
};
use pspace::logic::parse_ranking;
use pspace::program::{parse_lasso, parse_program};
use pspace::proof_space::{lasso_in_proof_language, Basis};
use pspace::qltl::parse_qltl;
use pspace::qpa::EmptinessConfig;

#[test]
fn decrement_terminates() {
    let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
    let report = run_algorithm1(&p, None, &EngineOptions::default(), &oracle()).unwrap();
    let Verdict::Yes {
        basis,
        justification,
    } = &report.verdict
    else {
        panic!("{report}")
    };
    assert_eq!(
        *justification,
        Justification::Bounded {
            n_max: 2,
            len_max: 8
        }
    );
    assert!(basis.rankings.contains(&parse_ranking("x >= 0").unwrap()));
    // every sampled lasso is covered by the final basis
    for it in &report.iterations {
        assert!(lasso_in_proof_language(basis, &it.lasso), "{}", it.lasso);
    }
    // and the final basis is valid and survives a text round trip
    basis.validate(&oracle()).unwrap();
    assert_eq!(&Basis::parse(&p, &basis.to_text()).unwrap(), basis);
}

#[test]
fn final_basis_passes_the_coverage_check() {
    let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
    let report = run_algorithm1(&p, None, &EngineOptions::default(), &oracle()).unwrap();
    let Verdict::Yes { basis, .. } = report.verdict else {
        panic!()
    };
    let cov = check_coverage(&p, None, &basis, &EmptinessConfig::new(2, 8)).unwrap();
    assert_eq!(
        cov,
        Coverage::EmptyUpTo {
            n_max: 2,
            len_max: 8
        }
    );
}

#[test]
fn coverage_reports_the_first_uncovered_lasso() {
    let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
    let cfg = EmptinessConfig::new(2, 8);
    let full = Basis::parse(&p, corpus::DECREMENT_FULL_BASIS).unwrap();
    assert_eq!(
        check_coverage(&p, None, &full, &cfg).unwrap(),
        Coverage::EmptyUpTo {
            n_max: 2,
            len_max: 8
        }
    );
    let fig4 = Basis::parse(&p, corpus::DECREMENT_FIG4_BASIS).unwrap();
    let Coverage::Counterexample { lasso, universe } =
        check_coverage(&p, None, &fig4, &cfg).unwrap()
    else {
        panic!()
    };
    assert_eq!(universe, 2);
    assert_eq!(lasso, parse_lasso(&p, corpus::INTERFERENCE_LASSO).unwrap());
}

#[test]
fn empty_basis_leaves_every_program_lasso_uncovered() {
    let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
    let cov = check_coverage(&p, None, &Basis::new(), &EmptinessConfig::new(1, 8)).unwrap();
    let Coverage::Counterexample { lasso, .. } = cov else {
        panic!("{cov:?}")
    };
    assert_eq!(lasso, parse_lasso(&p, corpus::FIG3A_LASSO).unwrap());
}

#[test]
fn nonterminating_program_is_refuted() {
    let p = parse_program(corpus::NONTERM_PROGRAM).unwrap();
    let report = run_algorithm1(&p, None, &EngineOptions::default(), &oracle()).unwrap();
    let Verdict::No { lasso, witness } = &report.verdict else {
        panic!("{report}")
    };
    assert_eq!(lasso, &parse_lasso(&p, corpus::NONTERM_LASSO).unwrap());
    assert!(witness.replays(&p, lasso));
}

#[test]
fn iteration_budget_is_respected() {
    let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
    let opts = EngineOptions {
        max_iterations: 1,
        ..EngineOptions::default()
    };
    let report = run_algorithm1(&p, None, &opts, &oracle()).unwrap();
    assert!(
        matches!(report.verdict, Verdict::BoundExhausted { .. }),
        "{report}"
    );
    assert_eq!(report.iterations.len(), 1);
}

#[test]
fn properties_restrict_the_lassos_to_cover() {
    let p = parse_program(corpus::TICKET_PROGRAM).unwrap();
    // a property every trace satisfies leaves nothing to prove
    let phi = parse_qltl("forall i. true").unwrap();
    let report = run_algorithm1(&p, Some(&phi), &EngineOptions::default(), &oracle()).unwrap();
    assert!(matches!(report.verdict, Verdict::Yes { .. }), "{report}");
    assert!(report.iterations.is_empty());
    // a violated-looking property produces work
    let phi = parse_qltl("forall i. G F exec[s++](i)").unwrap();
    let qpa = uncovered_lassos_qpa(&p, Some(&phi), &Basis::new()).unwrap();
    assert!(qpa.validate().is_ok());
    let report = run_algorithm1(&p, Some(&phi), &EngineOptions::default(), &oracle()).unwrap();
    assert!(!report.iterations.is_empty());
}

#[test]
fn rejected_certificate_falls_back_to_the_bounded_answer() {
    let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
    // `false` fails Initialization: the start formula of the automaton is satisfiable
    let opts = EngineOptions {
        certificate: Some("false".into()),
        ..EngineOptions::default()
    };
    let report = run_algorithm1(&p, None, &opts, &oracle()).unwrap();
    let Verdict::Yes { justification, .. } = &report.verdict else {
        panic!("{report}")
    };
    assert_eq!(
        *justification,
        Justification::Bounded {
            n_max: 2,
            len_max: 8
        }
    );
}
