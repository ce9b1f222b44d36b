//! Lasso proofs and the main loop: sample a lasso outside the current proof
//! space, prove it terminating (or find a nonterminating execution), add the
//! proof's basic triples, and repeat until the bounded search comes up empty.

mod extract;
mod feasibility;
mod proof;
mod ranking;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::logic::{Oracle, RankingFormula, ThreadId};
use crate::program::{program_lasso_qpa, IndexedCommand, Lasso, LassoWord, ParameterizedProgram};
use crate::proof_space::{lasso_in_proof_language_over, proof_space_qpa, Basis};
use crate::qltl::{property_qpa, Qltl, QltlError};
use crate::qpa::{
    bounded_emptiness, check_emptiness_certificate, complement, intersection, parse_formula,
    CertificateConfig, CertificateVerdict, EmptinessConfig, EmptinessResult, Qpa, QpaError,
};

pub use extract::{extract_basis, generate_stability_triples, ExtractError};
pub use feasibility::{
    check_lasso_feasibility, FeasibilityConfig, FeasibilityResult, FeasibleWitness,
};
pub use proof::{
    annotate, inductive_subset, old_equalities, prove_lasso, stem_strongest_post, strongest_post,
    LassoProof,
};
pub use ranking::synthesize_linear_ranking;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("property: {0}")]
    Property(#[from] QltlError),
    #[error("automaton: {0}")]
    Automaton(#[from] QpaError),
    #[error("certificate: {0}")]
    Certificate(QpaError),
}

/// Outcome of trying to prove a single lasso.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LassoOutcome {
    Proof(LassoProof),
    Feasible(FeasibleWitness),
    Unknown,
}

/// First look for a concrete nonterminating execution; failing that, look for
/// a ranking function supported by an invariant from the stem.
pub fn find_infeasibility_proof(
    p: &ParameterizedProgram,
    l: &Lasso,
    n_threads: usize,
    oracle: &Oracle,
    feasibility: &FeasibilityConfig,
) -> LassoOutcome {
    if let FeasibilityResult::Feasible(w) = check_lasso_feasibility(p, l, n_threads, feasibility) {
        return LassoOutcome::Feasible(w);
    }
    match prove_lasso(&l.stem, &l.cycle, oracle) {
        Some(proof) => LassoOutcome::Proof(proof),
        None => LassoOutcome::Unknown,
    }
}

/// Split a QPA word at its `$`.
pub fn decode_lasso(p: &ParameterizedProgram, word: &LassoWord) -> Option<Lasso> {
    let alphabet = p.alphabet();
    let mut stem = Vec::new();
    let mut cycle = Vec::new();
    let mut seen_dollar = false;
    for &(a, t) in word {
        let name = alphabet.get(a)?;
        if name == "$" {
            if seen_dollar {
                return None;
            }
            seen_dollar = true;
            continue;
        }
        let ic = IndexedCommand::new(p.command(name)?.clone(), t);
        if seen_dollar {
            cycle.push(ic);
        } else {
            stem.push(ic);
        }
    }
    if !seen_dollar {
        return None;
    }
    Lasso::new(stem, cycle).ok()
}

/// `A(P) ∩ A(¬φ) ∩ ¬A(B)`: program lassos violating the property (or all of
/// them) that the proof space of `B` does not cover.
pub fn uncovered_lassos_qpa(
    p: &ParameterizedProgram,
    property: Option<&Qltl>,
    basis: &Basis,
) -> Result<Qpa, EngineError> {
    let alphabet = p.alphabet();
    let mut a = program_lasso_qpa(p);
    if let Some(phi) = property {
        a = intersection(&a, &property_qpa(&Qltl::not(phi.clone()), &alphabet)?)?;
    }
    Ok(intersection(
        &a,
        &complement(&proof_space_qpa(basis, &alphabet)),
    )?)
}

/// Result of one bounded generalization check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Coverage {
    /// Every lasso within the bounds is covered.
    EmptyUpTo {
        n_max: usize,
        len_max: usize,
    },
    /// The least uncovered lasso and the number of threads it runs with.
    Counterexample {
        lasso: Lasso,
        universe: usize,
    },
    ResourceLimit {
        explored: usize,
    },
}

/// Bounded emptiness of [`uncovered_lassos_qpa`].
pub fn check_coverage(
    p: &ParameterizedProgram,
    property: Option<&Qltl>,
    basis: &Basis,
    cfg: &EmptinessConfig,
) -> Result<Coverage, EngineError> {
    let qpa = uncovered_lassos_qpa(p, property, basis)?;
    Ok(match bounded_emptiness(&qpa, cfg) {
        EmptinessResult::EmptyUpTo { n_max, len_max } => Coverage::EmptyUpTo { n_max, len_max },
        EmptinessResult::Counterexample { word, universe } => {
            let lasso = decode_lasso(p, &word).expect("accepted words are lasso encodings");
            Coverage::Counterexample { lasso, universe }
        }
        EmptinessResult::ResourceLimit { explored } => Coverage::ResourceLimit { explored },
    })
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub n_max: usize,
    pub len_max: usize,
    /// Configuration budget of each emptiness search.
    pub max_configs: usize,
    pub max_iterations: usize,
    pub feasibility: FeasibilityConfig,
    /// Triples and rankings to start from.
    pub initial_basis: Basis,
    /// An emptiness certificate (over the final automaton's predicates) to
    /// turn a bounded answer into an unbounded one.
    pub certificate: Option<String>,
    pub certificate_config: CertificateConfig,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            n_max: 2,
            len_max: 8,
            max_configs: 2_000_000,
            max_iterations: 64,
            feasibility: FeasibilityConfig::default(),
            initial_basis: Basis::new(),
            certificate: None,
            certificate_config: CertificateConfig::default(),
        }
    }
}

/// How a `Yes` answer is justified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Justification {
    /// No uncovered lasso within the bounds.
    Bounded { n_max: usize, len_max: usize },
    /// A validated emptiness certificate for the final automaton.
    Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict")]
pub enum Verdict {
    Yes {
        basis: Basis,
        justification: Justification,
    },
    No {
        lasso: Lasso,
        witness: FeasibleWitness,
    },
    Unknown {
        lasso: Lasso,
        reason: String,
    },
    BoundExhausted {
        basis: Basis,
        reason: String,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Yes { .. } => "Yes",
            Verdict::No { .. } => "No",
            Verdict::Unknown { .. } => "Unknown",
            Verdict::BoundExhausted { .. } => "BoundExhausted",
        }
    }
}

/// One round of the main loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Iteration {
    pub lasso: Lasso,
    pub universe: usize,
    pub ranking: Option<RankingFormula>,
    pub new_triples: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub verdict: Verdict,
    pub iterations: Vec<Iteration>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, it) in self.iterations.iter().enumerate() {
            write!(f, "iteration {}: {} (N = {})", k + 1, it.lasso, it.universe)?;
            if let Some(w) = &it.ranking {
                write!(f, " ranked by {w}, {} new triple(s)", it.new_triples)?;
            }
            writeln!(f)?;
        }
        match &self.verdict {
            Verdict::Yes {
                basis,
                justification,
            } => {
                match justification {
                    Justification::Bounded { n_max, len_max } => {
                        writeln!(f, "verdict: Yes, EmptyUpTo({n_max},{len_max})")?
                    }
                    Justification::Certificate => {
                        writeln!(f, "verdict: Yes, certificate accepted")?
                    }
                }
                write!(f, "basis:\n{}", basis.to_text())
            }
            Verdict::No { lasso, witness } => write!(f, "verdict: No\nlasso: {lasso}\n{witness}"),
            Verdict::Unknown { lasso, reason } => {
                writeln!(f, "verdict: Unknown\nlasso: {lasso}\nreason: {reason}")
            }
            Verdict::BoundExhausted { basis, reason } => {
                write!(
                    f,
                    "verdict: BoundExhausted\nreason: {reason}\nbasis:\n{}",
                    basis.to_text()
                )
            }
        }
    }
}

fn universe(n: usize) -> Vec<ThreadId> {
    (1..=n as ThreadId).collect()
}

/// The incremental algorithm: grow a basis from proofs of sampled lassos until
/// no program lasso (violating the property, if one is given) within the
/// bounds lies outside the proof space.
pub fn run_algorithm1(
    p: &ParameterizedProgram,
    property: Option<&Qltl>,
    opts: &EngineOptions,
    oracle: &Oracle,
) -> Result<Report, EngineError> {
    let mut basis = opts.initial_basis.clone();
    let mut iterations = Vec::new();
    let mut proved: BTreeSet<Lasso> = BTreeSet::new();
    let cfg = EmptinessConfig {
        max_configs: opts.max_configs,
        ..EmptinessConfig::new(opts.n_max, opts.len_max)
    };
    let done = |verdict, iterations| {
        Ok(Report {
            verdict,
            iterations,
        })
    };
    loop {
        if iterations.len() >= opts.max_iterations {
            let reason = format!("no fixed point after {} iterations", opts.max_iterations);
            return done(Verdict::BoundExhausted { basis, reason }, iterations);
        }
        let (lasso, n) = match check_coverage(p, property, &basis, &cfg)? {
            Coverage::EmptyUpTo { n_max, len_max } => {
                let justification = match &opts.certificate {
                    Some(text) if certificate_holds(p, property, &basis, text, opts)? => {
                        Justification::Certificate
                    }
                    _ => Justification::Bounded { n_max, len_max },
                };
                return done(
                    Verdict::Yes {
                        basis,
                        justification,
                    },
                    iterations,
                );
            }
            Coverage::ResourceLimit { explored } => {
                let reason = format!("emptiness search stopped after {explored} configurations");
                return done(Verdict::BoundExhausted { basis, reason }, iterations);
            }
            Coverage::Counterexample { lasso, universe } => (lasso, universe),
        };
        if !proved.insert(lasso.clone()) {
            let reason = "a proved lasso was sampled again".to_string();
            return done(Verdict::Unknown { lasso, reason }, iterations);
        }
        match find_infeasibility_proof(p, &lasso, n, oracle, &opts.feasibility) {
            LassoOutcome::Feasible(witness) => {
                iterations.push(Iteration {
                    lasso: lasso.clone(),
                    universe: n,
                    ranking: None,
                    new_triples: 0,
                });
                return done(Verdict::No { lasso, witness }, iterations);
            }
            LassoOutcome::Unknown => {
                iterations.push(Iteration {
                    lasso: lasso.clone(),
                    universe: n,
                    ranking: None,
                    new_triples: 0,
                });
                let reason =
                    "no nonterminating execution and no linear ranking function found".to_string();
                return done(Verdict::Unknown { lasso, reason }, iterations);
            }
            LassoOutcome::Proof(proof) => {
                let Ok(mut extracted) = extract_basis(&proof, &lasso, oracle) else {
                    let reason =
                        "the lasso proof could not be split into basic triples".to_string();
                    return done(Verdict::Unknown { lasso, reason }, iterations);
                };
                let stability = generate_stability_triples(&extracted, p, oracle);
                extracted.extend(&stability);
                let before = basis.triples.len();
                basis.extend(&extracted);
                iterations.push(Iteration {
                    lasso: lasso.clone(),
                    universe: n,
                    ranking: Some(proof.ranking.clone()),
                    new_triples: basis.triples.len() - before,
                });
                if !lasso_in_proof_language_over(&basis, &lasso, &universe(n)) {
                    let reason = "the extracted basis does not cover the lasso".to_string();
                    return done(Verdict::Unknown { lasso, reason }, iterations);
                }
            }
        }
    }
}

/// Validate a user emptiness certificate for the final automaton.
fn certificate_holds(
    p: &ParameterizedProgram,
    property: Option<&Qltl>,
    basis: &Basis,
    text: &str,
    opts: &EngineOptions,
) -> Result<bool, EngineError> {
    let qpa = uncovered_lassos_qpa(p, property, basis)?;
    let cert = parse_formula(&qpa, text).map_err(EngineError::Certificate)?;
    Ok(
        check_emptiness_certificate(&qpa, &cert, &opts.certificate_config)
            == CertificateVerdict::Accepted,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::logic::parse_ranking;
    use crate::program::{parse_lasso, parse_program};

    #[test]
    fn spinning_program_does_not_terminate() {
        let p = parse_program(corpus::NONTERM_PROGRAM).unwrap();
        let report =
            run_algorithm1(&p, None, &EngineOptions::default(), &Oracle::default()).unwrap();
        let Verdict::No { lasso, witness } = &report.verdict else {
            panic!("{report}")
        };
        assert!(witness.replays(&p, lasso));
    }

    #[test]
    fn loop_free_program_terminates_immediately() {
        let p = parse_program("global int x;\nx = 1;\nx = x + 1;").unwrap();
        let report =
            run_algorithm1(&p, None, &EngineOptions::default(), &Oracle::default()).unwrap();
        assert!(matches!(report.verdict, Verdict::Yes { .. }), "{report}");
        assert!(report.iterations.is_empty());
    }

    #[test]
    fn fig3a_lasso_is_proved() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let l = parse_lasso(&p, corpus::FIG3A_LASSO).unwrap();
        let LassoOutcome::Proof(proof) =
            find_infeasibility_proof(&p, &l, 1, &Oracle::default(), &FeasibilityConfig::default())
        else {
            panic!("expected a proof");
        };
        assert_eq!(proof.ranking, parse_ranking("x >= 0").unwrap());
    }

    #[test]
    fn decode_inverts_encode() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let l = parse_lasso(&p, corpus::INTERFERENCE_LASSO).unwrap();
        assert_eq!(decode_lasso(&p, &l.encode(&p.alphabet()).unwrap()), Some(l));
    }
}
