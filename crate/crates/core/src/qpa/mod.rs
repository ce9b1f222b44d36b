//! Quantified predicate automata: positive formulas, configurations, minimal-model
//! transitions, Boolean closure, symbolic post, emptiness certificates, and
//! bounded emptiness search.

mod automaton;
mod boolean;
mod certificate;
mod emptiness;
mod formula;
mod post;
mod text;

use thiserror::Error;

use crate::lex::SyntaxError;
use crate::logic::ThreadId;

pub use automaton::{
    accepts, accepts_with_universe, candidate_universes, eval_qpa_formula, ground, min_successors,
    minimize, Configuration, Cube, Dnf, Fact, Predicate, Qpa, Runner, DEFAULT_FRESH_CAP, MAX_ARITY,
};
pub use boolean::{complement, compose_boolean, intersection, union, BoolOp};
pub use certificate::{
    check_emptiness_certificate, CertificateConfig, CertificateVerdict, Condition,
};
pub use emptiness::{bounded_emptiness, EmptinessConfig, EmptinessResult};
pub use formula::{Formula, PredId, QVar};
pub use post::symbolic_post;
pub use text::{formula_to_text, parse_formula, parse_qpa, qpa_to_text};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum QpaError {
    #[error("predicate `{0}` used with arity {1}")]
    Arity(String, usize),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("{0} has free variables")]
    NotClosed(String),
    #[error("unbound variable v{0}")]
    UnboundVariable(QVar),
    #[error("thread {0} is not in the universe")]
    ThreadOutsideUniverse(ThreadId),
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("binary operation needs two automata")]
    MissingOperand,
    #[error("automata have different alphabets")]
    AlphabetMismatch,
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
}
