//! Quantified LTL over indexed commands: syntax, lasso semantics, prenex
//! normalisation, and translation to quantified predicate automata through
//! Büchi automata and deterministic lasso automata.

mod buchi;
mod dfa;
mod lift;
mod normal;
mod parse;
mod semantics;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use buchi::{matrix_to_buchi, BuchiAutomaton};
pub use dfa::{buchi_lasso_dfa, LassoDfa};
pub use lift::{lift_dfa_to_qpa, property_qpa};
pub use normal::{normalize_to_prenex_disjuncts, PrenexDisjunct, Quantifier};
pub use parse::parse_qltl;
pub use semantics::{class_word_satisfies, eval_disjuncts, lasso_satisfies};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QltlError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("quantifier over `{0}` appears underneath a temporal modality")]
    QuantifierUnderTemporal(String),
    #[error("free thread variable `{0}`")]
    FreeVariable(String),
    #[error("lasso mentions thread {max} but only {n} threads are available")]
    TooFewThreads { n: usize, max: usize },
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
}

/// A QLTL formula. `F φ` is `true U φ` and `G φ` is `false R φ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Qltl {
    True,
    False,
    /// Thread `var` executes `command` at the current position.
    Exec {
        command: String,
        var: String,
    },
    Eq(String, String),
    Not(Box<Qltl>),
    And(Box<Qltl>, Box<Qltl>),
    Or(Box<Qltl>, Box<Qltl>),
    Next(Box<Qltl>),
    Until(Box<Qltl>, Box<Qltl>),
    Release(Box<Qltl>, Box<Qltl>),
    Forall(String, Box<Qltl>),
    Exists(String, Box<Qltl>),
}

impl Qltl {
    pub fn exec(command: &str, var: &str) -> Qltl {
        Qltl::Exec {
            command: command.into(),
            var: var.into(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Qltl) -> Qltl {
        Qltl::Not(Box::new(a))
    }

    pub fn and(a: Qltl, b: Qltl) -> Qltl {
        Qltl::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Qltl, b: Qltl) -> Qltl {
        Qltl::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Qltl, b: Qltl) -> Qltl {
        Qltl::or(Qltl::not(a), b)
    }

    pub fn next(a: Qltl) -> Qltl {
        Qltl::Next(Box::new(a))
    }

    pub fn until(a: Qltl, b: Qltl) -> Qltl {
        Qltl::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Qltl, b: Qltl) -> Qltl {
        Qltl::Release(Box::new(a), Box::new(b))
    }

    pub fn eventually(a: Qltl) -> Qltl {
        Qltl::until(Qltl::True, a)
    }

    pub fn always(a: Qltl) -> Qltl {
        Qltl::release(Qltl::False, a)
    }

    pub fn forall(v: &str, body: Qltl) -> Qltl {
        Qltl::Forall(v.into(), Box::new(body))
    }

    pub fn exists(v: &str, body: Qltl) -> Qltl {
        Qltl::Exists(v.into(), Box::new(body))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Qltl::True | Qltl::False | Qltl::Exec { .. } | Qltl::Eq(..) => true,
            Qltl::Forall(..) | Qltl::Exists(..) => false,
            Qltl::Not(a) | Qltl::Next(a) => a.is_quantifier_free(),
            Qltl::And(a, b) | Qltl::Or(a, b) | Qltl::Until(a, b) | Qltl::Release(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
        }
    }

    /// Free thread variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(f: &Qltl, bound: &mut Vec<String>, out: &mut Vec<String>) {
            let mut add = |v: &String, bound: &Vec<String>| {
                if !bound.contains(v) && !out.contains(v) {
                    out.push(v.clone());
                }
            };
            match f {
                Qltl::True | Qltl::False => {}
                Qltl::Exec { var, .. } => add(var, bound),
                Qltl::Eq(a, b) => {
                    add(a, bound);
                    add(b, bound);
                }
                Qltl::Not(a) | Qltl::Next(a) => go(a, bound, out),
                Qltl::And(a, b) | Qltl::Or(a, b) | Qltl::Until(a, b) | Qltl::Release(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Qltl::Forall(v, a) | Qltl::Exists(v, a) => {
                    bound.push(v.clone());
                    go(a, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Command names mentioned by `exec` atoms.
    pub fn commands(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Qltl::Exec { command, .. } = f {
                out.insert(command.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Qltl)) {
        f(self);
        match self {
            Qltl::True | Qltl::False | Qltl::Exec { .. } | Qltl::Eq(..) => {}
            Qltl::Not(a) | Qltl::Next(a) | Qltl::Forall(_, a) | Qltl::Exists(_, a) => a.visit(f),
            Qltl::And(a, b) | Qltl::Or(a, b) | Qltl::Until(a, b) | Qltl::Release(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Replace free occurrences of variable `v` by `w`.
    pub fn rename_var(&self, v: &str, w: &str) -> Qltl {
        let r = |x: &String| if x == v { w.to_string() } else { x.clone() };
        let b = |a: &Qltl| Box::new(a.rename_var(v, w));
        match self {
            Qltl::True => Qltl::True,
            Qltl::False => Qltl::False,
            Qltl::Exec { command, var } => Qltl::Exec {
                command: command.clone(),
                var: r(var),
            },
            Qltl::Eq(a, c) => Qltl::Eq(r(a), r(c)),
            Qltl::Not(a) => Qltl::Not(b(a)),
            Qltl::Next(a) => Qltl::Next(b(a)),
            Qltl::And(a, c) => Qltl::And(b(a), b(c)),
            Qltl::Or(a, c) => Qltl::Or(b(a), b(c)),
            Qltl::Until(a, c) => Qltl::Until(b(a), b(c)),
            Qltl::Release(a, c) => Qltl::Release(b(a), b(c)),
            Qltl::Forall(x, a) if x == v => Qltl::Forall(x.clone(), a.clone()),
            Qltl::Exists(x, a) if x == v => Qltl::Exists(x.clone(), a.clone()),
            Qltl::Forall(x, a) => Qltl::Forall(x.clone(), b(a)),
            Qltl::Exists(x, a) => Qltl::Exists(x.clone(), b(a)),
        }
    }

    /// Reject quantifiers underneath `X`, `U` or `R`.
    pub fn check_quantifier_placement(&self) -> Result<(), QltlError> {
        let temporal = match self {
            Qltl::Next(a) => vec![a],
            Qltl::Until(a, b) | Qltl::Release(a, b) => vec![a, b],
            _ => vec![],
        };
        for t in temporal {
            let mut bad = None;
            t.visit(&mut |f| {
                if let Qltl::Forall(v, _) | Qltl::Exists(v, _) = f {
                    bad.get_or_insert_with(|| v.clone());
                }
            });
            if let Some(v) = bad {
                return Err(QltlError::QuantifierUnderTemporal(v));
            }
        }
        match self {
            Qltl::Not(a) | Qltl::Forall(_, a) | Qltl::Exists(_, a) => {
                a.check_quantifier_placement()
            }
            Qltl::And(a, b) | Qltl::Or(a, b) => {
                a.check_quantifier_placement()?;
                b.check_quantifier_placement()
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Qltl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qltl::True => write!(f, "true"),
            Qltl::False => write!(f, "false"),
            Qltl::Exec { command, var } => write!(f, "exec[{command}]({var})"),
            Qltl::Eq(a, b) => write!(f, "{a} = {b}"),
            Qltl::Not(a) => match a.as_ref() {
                Qltl::Eq(x, y) => write!(f, "{x} != {y}"),
                _ => write!(f, "!{a}"),
            },
            Qltl::And(a, b) => write!(f, "({a} & {b})"),
            Qltl::Or(a, b) => write!(f, "({a} | {b})"),
            Qltl::Next(a) => write!(f, "X {a}"),
            Qltl::Until(a, b) if **a == Qltl::True => write!(f, "F {b}"),
            Qltl::Until(a, b) => write!(f, "({a} U {b})"),
            Qltl::Release(a, b) if **a == Qltl::False => write!(f, "G {b}"),
            Qltl::Release(a, b) => write!(f, "({a} R {b})"),
            Qltl::Forall(v, a) => write!(f, "(forall {v}. {a})"),
            Qltl::Exists(v, a) => write!(f, "(exists {v}. {a})"),
        }
    }
}
