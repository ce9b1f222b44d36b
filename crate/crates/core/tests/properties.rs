//! Randomized checks of the invariants relating the automata, the proof
//! space and the temporal logic to their reference semantics.

mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::{
    indexed_letters, oracle, random_buchi, random_lasso, random_qpa, reference_buchi_lasso, words,
};
use pspace::corpus;
use pspace::engine::{
    check_lasso_feasibility, extract_basis, find_infeasibility_proof, generate_stability_triples,
    FeasibilityConfig, FeasibilityResult, LassoOutcome,
};
use pspace::logic::{parse_assertion, Assertion, ThreadId};
use pspace::program::{
    enumerate_program_lassos, is_program_lasso, parse_program, program_lasso_qpa, Letter,
    ParameterizedProgram,
};
use pspace::proof_space::{derivable_atoms, lasso_in_proof_language, Basis};
use pspace::qltl::{buchi_lasso_dfa, lasso_satisfies, parse_qltl, property_qpa, Qltl};
use pspace::qpa::{
    accepts, accepts_with_universe, complement, intersection, parse_qpa, qpa_to_text, union,
    DEFAULT_FRESH_CAP,
};

fn decrement() -> ParameterizedProgram {
    parse_program(corpus::DECREMENT_PROGRAM).unwrap()
}

fn ticket() -> ParameterizedProgram {
    parse_program(corpus::TICKET_PROGRAM).unwrap()
}

fn basis(p: &ParameterizedProgram, text: &str) -> Basis {
    Basis::parse(p, text).unwrap()
}

fn random_words(rng: &mut StdRng, universe: &[ThreadId], count: usize) -> Vec<Vec<Letter>> {
    use rand::Rng;
    (0..count)
        .map(|_| {
            let len = rng.gen_range(0..=5);
            (0..len)
                .map(|_| {
                    (
                        rng.gen_range(0..2),
                        universe[rng.gen_range(0..universe.len())],
                    )
                })
                .collect()
        })
        .collect()
}

const FORMULAS: [&str; 6] = [
    "forall i. G F exec[s++](i)",
    "exists i. F G !exec[[m<=s]](i)",
    "forall i. G (exec[m=t++](i) -> X exec[[m>s]](i))",
    "exists i. exists j. i != j & G F (exec[s++](i) & X exec[s++](j))",
    "forall i. (exec[[m>s]](i) U exec[[m<=s]](i)) | G !exec[m=t++](i)",
    "exists i. F (exec[m=t++](i) & X G !exec[s++](i))",
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn qpa_boolean_operations_follow_set_laws(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = random_qpa(&mut rng, 3);
        let b = random_qpa(&mut rng, 3);
        let (and, or, not) = (intersection(&a, &b).unwrap(), union(&a, &b).unwrap(), complement(&a));
        let not_not = complement(&not);
        for n in 1..=2 {
            let universe: Vec<ThreadId> = (1..=n).collect();
            for w in random_words(&mut rng, &universe, 40) {
                let acc = |q| accepts_with_universe(q, &w, &universe);
                let (x, y) = (acc(&a), acc(&b));
                prop_assert_eq!(acc(&and), x && y, "intersection on {:?}", w);
                prop_assert_eq!(acc(&or), x || y, "union on {:?}", w);
                prop_assert_eq!(acc(&not), !x, "complement on {:?}", w);
                prop_assert_eq!(acc(&not_not), x, "double complement on {:?}", w);
            }
        }
    }

    #[test]
    fn qpa_text_round_trips(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = random_qpa(&mut rng, 3);
        let b = parse_qpa(&qpa_to_text(&a)).unwrap();
        let universe = [1, 2];
        for w in random_words(&mut rng, &universe, 30) {
            prop_assert_eq!(accepts_with_universe(&a, &w, &universe), accepts_with_universe(&b, &w, &universe));
        }
    }

    #[test]
    fn lasso_dfa_matches_buchi_membership(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let b = random_buchi(&mut rng, 4, 2);
        let dfa = buchi_lasso_dfa(&b);
        let min = dfa.minimize();
        prop_assert!(min.num_states() <= dfa.num_states());
        for u in words(&[0, 1], 0, 2) {
            for v in words(&[0, 1], 1, 3) {
                let want = reference_buchi_lasso(&b, &u, &v);
                prop_assert_eq!(dfa.accepts_lasso(&u, &v), want);
                prop_assert_eq!(min.accepts_lasso(&u, &v), want);
            }
        }
    }

    #[test]
    fn negation_flips_satisfaction(seed in any::<u64>(), k in 0..FORMULAS.len()) {
        let p = ticket();
        let mut rng = StdRng::seed_from_u64(seed);
        let l = random_lasso(&mut rng, &indexed_letters(&p, 2), 3, 3);
        let phi = parse_qltl(FORMULAS[k]).unwrap();
        let not_phi = Qltl::not(phi.clone());
        for n in 2..=3 {
            prop_assert_eq!(lasso_satisfies(&l, &not_phi, n).unwrap(), !lasso_satisfies(&l, &phi, n).unwrap());
        }
    }

    #[test]
    fn property_automata_agree_with_the_evaluator(seed in any::<u64>(), k in 0..FORMULAS.len()) {
        let p = ticket();
        let alphabet = p.alphabet();
        let phi = parse_qltl(FORMULAS[k]).unwrap();
        let qpa = property_qpa(&phi, &alphabet).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        for _ in 0..10 {
            let l = random_lasso(&mut rng, &indexed_letters(&p, 2), 3, 3);
            let w = l.encode(&alphabet).unwrap();
            for n in 2..=3usize {
                let universe: Vec<ThreadId> = (1..=n as ThreadId).collect();
                prop_assert_eq!(accepts_with_universe(&qpa, &w, &universe), lasso_satisfies(&l, &phi, n).unwrap(), "{} with N = {}", l, n);
            }
        }
    }

    #[test]
    fn program_automaton_is_exact_with_three_threads(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        for p in [decrement(), ticket()] {
            let qpa = program_lasso_qpa(&p);
            let alphabet = p.alphabet();
            let letters = indexed_letters(&p, 3);
            for _ in 0..20 {
                let l = random_lasso(&mut rng, &letters, 5, 3);
                prop_assert_eq!(accepts(&qpa, &l.encode(&alphabet).unwrap(), DEFAULT_FRESH_CAP), is_program_lasso(&p, &l), "{}", l);
            }
        }
    }

    #[test]
    fn proof_language_is_closed_under_thread_renaming(seed in any::<u64>()) {
        let p = decrement();
        let b = basis(&p, corpus::DECREMENT_FULL_BASIS);
        let mut rng = StdRng::seed_from_u64(seed);
        let l = random_lasso(&mut rng, &indexed_letters(&p, 2), 4, 3);
        let swapped = l.rename(|t| 3 - t);
        let shifted = l.rename(|t| t + 5);
        let member = lasso_in_proof_language(&b, &l);
        prop_assert_eq!(lasso_in_proof_language(&b, &swapped), member);
        prop_assert_eq!(lasso_in_proof_language(&b, &shifted), member);
    }

    #[test]
    fn proof_language_grows_with_the_basis(seed in any::<u64>()) {
        let p = decrement();
        let small = basis(&p, corpus::DECREMENT_FIG4_BASIS);
        let large = basis(&p, corpus::DECREMENT_COMBINED_BASIS);
        prop_assert!(large.triples.is_superset(&small.triples));
        let mut rng = StdRng::seed_from_u64(seed);
        let l = random_lasso(&mut rng, &indexed_letters(&p, 2), 4, 3);
        prop_assert!(!lasso_in_proof_language(&small, &l) || lasso_in_proof_language(&large, &l));
    }

    #[test]
    fn derived_triples_are_valid(seed in any::<u64>()) {
        let p = decrement();
        let b = basis(&p, corpus::DECREMENT_FULL_BASIS);
        let oracle = oracle();
        let mut rng = StdRng::seed_from_u64(seed);
        let l = random_lasso(&mut rng, &indexed_letters(&p, 2), 3, 3);
        let word: Vec<_> = l.stem.iter().chain(&l.cycle).cloned().collect();
        let olds = parse_assertion("old(x) = x; old(d(1)) = d(1); old(d(2)) = d(2)").unwrap();
        for pre in [Assertion::top(), olds] {
            for atom in derivable_atoms(&b, &pre, &word) {
                prop_assert!(oracle.is_valid(&pre, &word, &Assertion::atom(atom.clone())), "{{{}}} {:?} {{{}}}", pre, word, atom);
            }
        }
    }
}

/// Termination proofs found for the program lassos of `decrement` check,
/// break into a valid basis that round-trips through text, and (with the
/// stability triples) cover the lasso they came from.
#[test]
fn extracted_bases_are_self_certifying() {
    let p = decrement();
    let oracle = oracle();
    let mut proved = 0;
    for l in enumerate_program_lassos(&p, 2, 4, 4).unwrap() {
        let n = l.threads().into_iter().max().unwrap() as usize;
        let LassoOutcome::Proof(proof) =
            find_infeasibility_proof(&p, &l, n, &oracle, &FeasibilityConfig::default())
        else {
            continue;
        };
        assert!(proof.check(&l.stem, &l.cycle, &oracle), "{l}");
        let mut b = extract_basis(&proof, &l, &oracle).unwrap();
        b.validate(&oracle).unwrap();
        assert_eq!(Basis::parse(&p, &b.to_text()).unwrap(), b);
        let stability = generate_stability_triples(&b, &p, &oracle);
        b.extend(&stability);
        assert!(lasso_in_proof_language(&b, &l), "{l}");
        proved += 1;
    }
    assert!(proved >= 50, "only {proved} lassos proved");
}

/// Every nontermination witness replays on the program.
#[test]
fn feasibility_witnesses_replay() {
    let p = parse_program(corpus::NONTERM_PROGRAM).unwrap();
    let mut found = 0;
    for l in enumerate_program_lassos(&p, 2, 3, 3).unwrap() {
        let n = l.threads().into_iter().max().unwrap() as usize;
        if let FeasibilityResult::Feasible(w) =
            check_lasso_feasibility(&p, &l, n, &FeasibilityConfig::default())
        {
            assert!(w.replays(&p, &l), "{l}");
            found += 1;
        }
    }
    assert!(found > 0);
}

/// A lasso whose loop cannot run forever from the stem state has no witness.
#[test]
fn terminating_lassos_have_no_witness() {
    let p = decrement();
    for l in enumerate_program_lassos(&p, 1, 3, 2).unwrap() {
        assert_eq!(
            check_lasso_feasibility(&p, &l, 1, &FeasibilityConfig::default()),
            FeasibilityResult::NoWitnessFound,
            "{l}"
        );
    }
}
