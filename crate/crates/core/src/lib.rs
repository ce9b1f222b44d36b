//! Termination and liveness of parameterized programs via well-founded proof
//! spaces and quantified predicate automata.
//!
//! The crate is organised bottom-up:
//! - [`program`]: programs as control-flow graphs, lassos, and the lasso automaton A(P);
//! - [`logic`]: assertions, ranking formulas, canonical names and Hoare-triple validity;
//! - [`proof_space`]: bases, derivability, the lasso language of a basis and its automaton;
//! - [`qpa`]: quantified predicate automata, Boolean closure, certificates, bounded emptiness;
//! - [`qltl`]: quantified LTL over lassos and its translation to automata;
//! - [`engine`]: lasso proofs, basis extraction and the counterexample-guided main loop.

pub mod corpus;
pub mod engine;
pub mod fm;
pub mod lex;
pub mod linear;
pub mod logic;
pub mod program;
pub mod proof_space;
pub mod qltl;
pub mod qpa;
pub mod simplex;
pub mod smt;
