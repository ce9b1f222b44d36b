//! Program assertions: variables, linear atoms, conjunctive assertions, ranking
//! formulas, thread permutations, canonical names and combinatorial entailment.

mod parse;
pub mod vc;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::linear::{write_con, ConKind, LinCon, LinExpr, Normalized, Rel};
use crate::program::ProgramState;

pub use parse::{
    parse_assertion, parse_atom, parse_lin_expr, parse_ranking, parse_rel, parse_var, parse_var_at,
};
pub use vc::{check_hoare_validity, Oracle, OracleConfig, Validity, Witness};

pub type Name = Arc<str>;
pub type ThreadId = u32;

/// Variables of assertions: globals, thread-indexed locals and their old-copies.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Global(Name),
    Local(Name, ThreadId),
    OldGlobal(Name),
    OldLocal(Name, ThreadId),
}

impl Var {
    pub fn global(name: &str) -> Var {
        Var::Global(name.into())
    }

    pub fn local(name: &str, tid: ThreadId) -> Var {
        Var::Local(name.into(), tid)
    }

    pub fn thread(&self) -> Option<ThreadId> {
        match self {
            Var::Local(_, t) | Var::OldLocal(_, t) => Some(*t),
            _ => None,
        }
    }

    pub fn name(&self) -> &Name {
        match self {
            Var::Global(n) | Var::Local(n, _) | Var::OldGlobal(n) | Var::OldLocal(n, _) => n,
        }
    }

    pub fn is_old(&self) -> bool {
        matches!(self, Var::OldGlobal(_) | Var::OldLocal(..))
    }

    /// The old-copy of a current variable (identity on old-copies).
    pub fn old(&self) -> Var {
        match self {
            Var::Global(n) => Var::OldGlobal(n.clone()),
            Var::Local(n, t) => Var::OldLocal(n.clone(), *t),
            v => v.clone(),
        }
    }

    /// The current variable an old-copy refers to (identity on current variables).
    pub fn current(&self) -> Var {
        match self {
            Var::OldGlobal(n) => Var::Global(n.clone()),
            Var::OldLocal(n, t) => Var::Local(n.clone(), *t),
            v => v.clone(),
        }
    }

    pub fn rename(&self, f: impl Fn(ThreadId) -> ThreadId) -> Var {
        match self {
            Var::Local(n, t) => Var::Local(n.clone(), f(*t)),
            Var::OldLocal(n, t) => Var::OldLocal(n.clone(), f(*t)),
            v => v.clone(),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Global(n) => write!(f, "{n}"),
            Var::Local(n, t) => write!(f, "{n}({t})"),
            Var::OldGlobal(n) => write!(f, "old({n})"),
            Var::OldLocal(n, t) => write!(f, "old({n}({t}))"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("thread index {0} is not bound in a state with {1} threads")]
    UnboundThread(ThreadId, usize),
    #[error("assertion mentions old-copies but no old state was supplied")]
    MissingOldState,
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("thread renaming is not injective on the assertion's indices")]
    NonInjective,
}

/// An atomic linear constraint over [`Var`], or the distinguished `false`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    False,
    Lin(LinCon<Var>),
}

impl Atom {
    /// Build `lhs rel rhs`; `None` when it normalizes to `true`.
    pub fn compare(lhs: &LinExpr<Var>, rel: Rel, rhs: &LinExpr<Var>) -> Option<Atom> {
        Atom::from_normalized(LinCon::compare(lhs, rel, rhs))
    }

    pub fn from_normalized(n: Normalized<Var>) -> Option<Atom> {
        match n {
            Normalized::True => None,
            Normalized::False => Some(Atom::False),
            Normalized::Con(c) => Some(Atom::Lin(c)),
        }
    }

    pub fn vars(&self) -> Vec<&Var> {
        match self {
            Atom::False => vec![],
            Atom::Lin(c) => c.vars().collect(),
        }
    }

    pub fn threads(&self) -> BTreeSet<ThreadId> {
        self.vars().into_iter().filter_map(Var::thread).collect()
    }

    pub fn has_old(&self) -> bool {
        self.vars().into_iter().any(Var::is_old)
    }

    /// Rename thread indices; the renaming must be injective on this atom's indices.
    pub fn rename(&self, f: impl Fn(ThreadId) -> ThreadId) -> Atom {
        match self {
            Atom::False => Atom::False,
            Atom::Lin(c) => match c.map_vars(|v| v.rename(&f)) {
                Normalized::Con(c) => Atom::Lin(c),
                // an injective renaming cannot make a non-constant constraint constant
                Normalized::True | Normalized::False => unreachable!("renaming collapsed an atom"),
            },
        }
    }

    pub fn eval(&self, val: impl FnMut(&Var) -> Option<i64>) -> Option<bool> {
        match self {
            Atom::False => Some(false),
            Atom::Lin(c) => c.eval(val),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::False => write!(f, "false"),
            Atom::Lin(c) => {
                // equalities read best with the old-copy on the left
                let leading_old = c
                    .expr
                    .coeffs()
                    .iter()
                    .find(|(v, _)| v.is_old())
                    .map(|(_, &k)| k);
                if c.kind != ConKind::Le && leading_old.is_some_and(|k| k < 0) {
                    let flipped = LinCon {
                        kind: c.kind,
                        expr: c.expr.scale(-1),
                    };
                    write_con(f, &flipped, |f, v| write!(f, "{v}"))
                } else {
                    write_con(f, c, |f, v| write!(f, "{v}"))
                }
            }
        }
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A conjunction of atoms with set semantics; `true` is the empty set.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assertion(BTreeSet<Atom>);

impl Assertion {
    pub fn top() -> Assertion {
        Assertion::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Assertion {
        Assertion(atoms.into_iter().collect())
    }

    pub fn atom(a: Atom) -> Assertion {
        Assertion::from_atoms([a])
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.0
    }

    pub fn into_atoms(self) -> BTreeSet<Atom> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_true(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.0.contains(a)
    }

    pub fn insert(&mut self, a: Atom) {
        self.0.insert(a);
    }

    pub fn conjoin(&self, other: &Assertion) -> Assertion {
        Assertion(self.0.union(&other.0).cloned().collect())
    }

    pub fn threads(&self) -> BTreeSet<ThreadId> {
        self.0.iter().flat_map(Atom::threads).collect()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.0
            .iter()
            .flat_map(|a| a.vars().into_iter().cloned())
            .collect()
    }

    pub fn rename(&self, f: impl Fn(ThreadId) -> ThreadId) -> Assertion {
        Assertion(self.0.iter().map(|a| a.rename(&f)).collect())
    }

    pub fn eval(&self, mut val: impl FnMut(&Var) -> Option<i64>) -> Option<bool> {
        let mut all = true;
        for a in &self.0 {
            all &= a.eval(&mut val)?;
        }
        Some(all)
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "true");
        }
        for (n, a) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl Serialize for Assertion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromIterator<Atom> for Assertion {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Assertion::from_atoms(iter)
    }
}

/// Combinatorial entailment: `φ ⊩ ψ` iff ψ's conjuncts are a subset of φ's.
pub fn comb_entails(phi: &Assertion, psi: &Assertion) -> bool {
    psi.0.is_subset(&phi.0)
}

/// A finite thread renaming; ids outside the map are fixed.
pub type Permutation = BTreeMap<ThreadId, ThreadId>;

/// Substitute thread indices by `π`; fails if the induced renaming of φ's
/// indices is not injective.
pub fn apply_permutation(phi: &Assertion, pi: &Permutation) -> Result<Assertion, LogicError> {
    let threads = phi.threads();
    let image: BTreeSet<ThreadId> = threads.iter().map(|t| *pi.get(t).unwrap_or(t)).collect();
    let mut seen = BTreeSet::new();
    if image.len() != threads.len() || !pi.values().all(|v| seen.insert(*v)) {
        return Err(LogicError::NonInjective);
    }
    Ok(phi.rename(|t| *pi.get(&t).unwrap_or(&t)))
}

/// The decrease-and-bounded ranking template `old(t) > t ∧ old(t) ≥ b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankingFormula {
    pub term: LinExpr<Var>,
    pub bound: i64,
}

impl RankingFormula {
    pub fn new(term: LinExpr<Var>, bound: i64) -> RankingFormula {
        RankingFormula { term, bound }
    }

    pub fn old_term(&self) -> LinExpr<Var> {
        self.term.map_vars(Var::old)
    }

    /// The ranking formula as a conjunction of atoms over old and current variables.
    pub fn to_assertion(&self) -> Assertion {
        let old = self.old_term();
        let mut out = Assertion::top();
        for a in [
            Atom::compare(&old, Rel::Gt, &self.term),
            Atom::compare(&old, Rel::Ge, &LinExpr::constant(self.bound)),
        ]
        .into_iter()
        .flatten()
        {
            out.insert(a);
        }
        out
    }

    pub fn threads(&self) -> BTreeSet<ThreadId> {
        self.term.vars().filter_map(Var::thread).collect()
    }

    pub fn rename(&self, f: impl Fn(ThreadId) -> ThreadId) -> RankingFormula {
        RankingFormula {
            term: self.term.map_vars(|v| v.rename(&f)),
            bound: self.bound,
        }
    }
}

impl fmt::Display for RankingFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, &self.term)?;
        write!(f, " >= {}", self.bound)
    }
}

impl Serialize for RankingFormula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{}", self.to_assertion()))
    }
}

/// Render a linear expression over assertion variables.
pub fn write_expr(f: &mut fmt::Formatter<'_>, e: &LinExpr<Var>) -> fmt::Result {
    let mut first = true;
    for (v, &c) in e.coeffs() {
        let (sign, mag) = if c < 0 { ("-", -c) } else { ("+", c) };
        if first {
            if c < 0 {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        if mag != 1 {
            write!(f, "{mag}*")?;
        }
        write!(f, "{v}")?;
        first = false;
    }
    let k = e.constant_term();
    if first {
        write!(f, "{k}")
    } else if k > 0 {
        write!(f, " + {k}")
    } else if k < 0 {
        write!(f, " - {}", -k)
    } else {
        Ok(())
    }
}

/// An assertion whose thread indices are exactly `1..=arity`, chosen as the
/// least representative of its permutation class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalAssertion {
    pub name: Assertion,
    pub arity: usize,
}

impl CanonicalAssertion {
    /// Printable predicate name, e.g. `[d(1) > 0]`.
    pub fn label(&self) -> String {
        format!("[{}]", self.name)
    }

    /// Instantiate the name with the given thread tuple (`tuple[j-1]` replaces index `j`).
    pub fn instantiate(&self, tuple: &[ThreadId]) -> Assertion {
        self.name.rename(|t| tuple[(t - 1) as usize])
    }
}

/// Canonical name of φ together with the tuple `t̄` such that `name[t̄] = φ`.
pub fn canonicalize(phi: &Assertion) -> (CanonicalAssertion, Vec<ThreadId>) {
    let threads: Vec<ThreadId> = phi.threads().into_iter().collect();
    let k = threads.len();
    let mut best: Option<(Assertion, Vec<ThreadId>)> = None;
    // Every ordering of the occurring ids is a candidate renaming to 1..k; the
    // least resulting assertion is independent of the original labels.
    for order in permutations(&threads) {
        let pos: BTreeMap<ThreadId, ThreadId> = order
            .iter()
            .enumerate()
            .map(|(j, &t)| (t, j as ThreadId + 1))
            .collect();
        let cand = phi.rename(|t| pos[&t]);
        if best.as_ref().is_none_or(|(b, _)| cand < *b) {
            best = Some((cand, order));
        }
    }
    let (name, tuple) = best.unwrap_or_default();
    (CanonicalAssertion { name, arity: k }, tuple)
}

/// All orderings of `items` (lexicographic in input order).
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// All injective maps from `dom` into `codom`, as vectors aligned with `dom`.
pub fn injections<T: Clone + PartialEq>(dom_len: usize, codom: &[T]) -> Vec<Vec<T>> {
    fn go<T: Clone + PartialEq>(k: usize, codom: &[T], cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in codom {
            if !cur.contains(c) {
                cur.push(c.clone());
                go(k, codom, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(dom_len, codom, &mut Vec::with_capacity(dom_len), &mut out);
    out
}

fn state_value(s: &ProgramState, v: &Var) -> Result<i64, LogicError> {
    if let Some(t) = v.thread() {
        if t == 0 || t as usize > s.n_threads {
            return Err(LogicError::UnboundThread(t, s.n_threads));
        }
    }
    s.value(&v.current())
        .ok_or_else(|| LogicError::Unbound(v.to_string()))
}

/// `s ⊨ φ`, reading old-copies from `s_old`.
pub fn eval_assertion(
    s: &ProgramState,
    s_old: Option<&ProgramState>,
    phi: &Assertion,
) -> Result<bool, LogicError> {
    let mut vals: BTreeMap<Var, i64> = BTreeMap::new();
    for v in phi.vars() {
        let x = if v.is_old() {
            state_value(s_old.ok_or(LogicError::MissingOldState)?, &v)?
        } else {
            state_value(s, &v)?
        };
        vals.insert(v, x);
    }
    Ok(phi
        .eval(|v| vals.get(v).copied())
        .expect("all variables bound"))
}

/// `s_old R_w s`: the measure strictly decreases and was bounded below.
pub fn eval_ranking_relation(
    s_old: &ProgramState,
    s: &ProgramState,
    w: &RankingFormula,
) -> Result<bool, LogicError> {
    if s_old.n_threads != s.n_threads {
        return Err(LogicError::UnboundThread(0, s.n_threads));
    }
    eval_assertion(s, Some(s_old), &w.to_assertion())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Assertion {
        parse_assertion(s).unwrap()
    }

    #[test]
    fn display_uses_natural_forms() {
        assert_eq!(a("d(1) > 0").to_string(), "d(1) > 0");
        assert_eq!(a("old(x) > x").to_string(), "old(x) > x");
        assert_eq!(a("old(x) >= 0").to_string(), "old(x) >= 0");
        assert_eq!(a("old(x) = x").to_string(), "old(x) = x");
        assert_eq!(a("x < 0").to_string(), "x < 0");
        assert_eq!(a("m(1) < m(2)").to_string(), "m(2) > m(1)");
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "d(1) > 0",
            "old(x) >= x + 3",
            "2*x != y - 1",
            "x <= 5",
            "x + y = 7; false",
        ] {
            let p = a(s);
            assert_eq!(a(&p.to_string()), p, "{s}");
        }
    }

    #[test]
    fn permutation_examples() {
        let pi: Permutation = [(1, 2), (2, 1)].into_iter().collect();
        assert_eq!(
            apply_permutation(&a("d(1) > 0"), &pi).unwrap(),
            a("d(2) > 0")
        );
        assert_eq!(apply_permutation(&a("x > 0"), &pi).unwrap(), a("x > 0"));
        assert_eq!(
            apply_permutation(&a("m(1) < m(2)"), &pi).unwrap(),
            a("m(2) < m(1)")
        );
        let bad: Permutation = [(1, 2)].into_iter().collect();
        assert_eq!(
            apply_permutation(&a("m(1) < m(2)"), &bad),
            Err(LogicError::NonInjective)
        );
    }

    #[test]
    fn canonical_name_examples() {
        let (c, t) = canonicalize(&a("m(4) < m(2)"));
        assert_eq!(c.name.rename(|i| t[(i - 1) as usize]), a("m(4) < m(2)"));
        assert_eq!(c.arity, 2);
        let (c2, _) = canonicalize(&a("m(2) < m(9)"));
        assert_eq!(c2, c);
        let (c, t) = canonicalize(&a("d(7) > 0"));
        assert_eq!((c.name, t), (a("d(1) > 0"), vec![7]));
        let (c, t) = canonicalize(&a("x > 0"));
        assert_eq!((c.name, c.arity, t), (a("x > 0"), 0, vec![]));
    }

    #[test]
    fn canonical_instantiation_restores_original() {
        let phi = a("m(4) < m(2); d(4) > 0");
        let (c, t) = canonicalize(&phi);
        assert_eq!(c.instantiate(&t), phi);
    }

    #[test]
    fn comb_entails_examples() {
        assert!(comb_entails(&a("x > 0; y > 0"), &a("x > 0")));
        assert!(!comb_entails(&a("x > 0"), &a("x > 0; y > 0")));
        assert!(comb_entails(&a("x > 0"), &Assertion::top()));
    }

    #[test]
    fn ranking_formula_atoms() {
        let w = parse_ranking("x >= 0").unwrap();
        assert_eq!(w.to_assertion(), a("old(x) > x; old(x) >= 0"));
    }

    #[test]
    fn injections_count() {
        assert_eq!(injections(2, &[1, 2, 3]).len(), 6);
        assert_eq!(injections(0, &[1]).len(), 1);
        assert_eq!(injections(2, &[1]).len(), 0);
    }
}
