//! Bundled regression inputs: the decrement and ticket programs, their bases,
//! properties and automata.

/// Every thread subtracts its positive step `d` from a shared counter.
pub const DECREMENT_PROGRAM: &str = include_str!("../corpus/decrement.prog");
/// Ticket mutual exclusion with a busy-waiting service check.
pub const TICKET_PROGRAM: &str = include_str!("../corpus/ticket.prog");
/// A loop that spins forever once entered.
pub const NONTERM_PROGRAM: &str = include_str!("../corpus/nonterm.prog");

/// The single-thread decrement lasso with stem `x=pos() d=pos()` and loop `[x>0] x=x-d`.
pub const FIG3A_LASSO: &str = "x=pos()@1 d=pos()@1 $ [x>0]@1 x=x-d@1";
/// A two-thread decrement lasso in which thread 2 only runs in the stem.
pub const INTERFERENCE_LASSO: &str = "x=pos()@1 d=pos()@1 x=pos()@2 $ [x>0]@1 x=x-d@1";
/// The spinning lasso of [`NONTERM_PROGRAM`].
pub const NONTERM_LASSO: &str = "x=1@1 $ [x>0]@1 skip@1";

/// Basis read off the single-thread decrement proof.
pub const DECREMENT_FIG4_BASIS: &str = include_str!("../corpus/decrement-fig4.basis");
/// [`DECREMENT_FIG4_BASIS`] plus stability triples for other threads and loop iterations.
pub const DECREMENT_COMBINED_BASIS: &str = include_str!("../corpus/decrement-combined.basis");
/// [`DECREMENT_COMBINED_BASIS`] plus persistence of the decrease across the guard.
pub const DECREMENT_FULL_BASIS: &str = include_str!("../corpus/decrement-full.basis");

/// Hand-built automaton for the negated ticket liveness property.
pub const TICKET_HAND_QPA: &str = include_str!("../corpus/ticket-hand.qpa");
/// The negated ticket liveness property in QLTL.
pub const TICKET_NEGATED_PROPERTY: &str = include_str!("../corpus/ticket-negated.qltl");

/// A QPA without accepting predicates, and a certificate for its emptiness.
pub const TOY_QPA: &str = include_str!("../corpus/toy.qpa");
pub const TOY_CERTIFICATE: &str = include_str!("../corpus/toy.cert");
