//! Verification conditions for Hoare triples over finite traces, decided by
//! Fourier–Motzkin refutation, a bounded integer model search, and an optional
//! external prover.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::fm;
use crate::linear::{ConKind, LinCon, LinExpr, Normalized};
use crate::program::{CommandKind, IndexedCommand, DEFAULT_HAVOC_RANGE};
use crate::smt::{symbol, SmtAnswer, SmtSolver};

use super::{Assertion, Atom, Var};

/// A versioned copy of an assertion variable used during symbolic execution;
/// version 0 is the pre-state (old-copies only ever exist at version 0).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym {
    pub var: Var,
    pub version: u32,
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.version == 0 {
            write!(f, "{}", self.var)
        } else {
            write!(f, "{}#{}", self.var, self.version)
        }
    }
}

/// Symbolic execution of a straight-line trace: current variables map to
/// linear terms over symbols; assumptions and havoc bounds are collected.
#[derive(Clone, Debug, Default)]
pub struct SymExec {
    map: BTreeMap<Var, LinExpr<Sym>>,
    versions: BTreeMap<Var, u32>,
    pub constraints: Vec<LinCon<Sym>>,
    /// Cleared once an assumption normalizes to `false`.
    pub feasible: bool,
}

impl SymExec {
    pub fn new() -> SymExec {
        SymExec {
            feasible: true,
            ..Default::default()
        }
    }

    /// The term currently denoted by `v` (old-copies denote their pre-state value).
    pub fn value(&self, v: &Var) -> LinExpr<Sym> {
        if v.is_old() {
            return LinExpr::var(Sym {
                var: v.clone(),
                version: 0,
            });
        }
        self.map.get(v).cloned().unwrap_or_else(|| {
            LinExpr::var(Sym {
                var: v.clone(),
                version: 0,
            })
        })
    }

    fn fresh(&mut self, v: &Var) -> Sym {
        let n = self.versions.entry(v.clone()).or_insert(0);
        *n += 1;
        Sym {
            var: v.clone(),
            version: *n,
        }
    }

    pub fn push(&mut self, n: Normalized<Sym>) {
        match n {
            Normalized::True => {}
            Normalized::False => self.feasible = false,
            Normalized::Con(c) => self.constraints.push(c),
        }
    }

    /// Translate an atom over the current state.
    pub fn atom(&self, a: &Atom) -> Normalized<Sym> {
        match a {
            Atom::False => Normalized::False,
            Atom::Lin(c) => c.substitute(|v| self.value(v)),
        }
    }

    pub fn assume(&mut self, phi: &Assertion) {
        for a in phi.atoms() {
            let n = self.atom(a);
            self.push(n);
        }
    }

    pub fn step(&mut self, ic: &IndexedCommand) {
        let t = ic.thread;
        match &ic.command.kind {
            CommandKind::Skip => {}
            CommandKind::Assume(None) => self.feasible = false,
            CommandKind::Assume(Some(c)) => {
                let n = c.substitute(|v| self.value(&v.instantiate(t)));
                self.push(n);
            }
            CommandKind::Assign(pairs) => {
                let vals: Vec<(Var, LinExpr<Sym>)> = pairs
                    .iter()
                    .map(|(x, e)| {
                        (
                            x.instantiate(t),
                            e.substitute(|v| self.value(&v.instantiate(t))),
                        )
                    })
                    .collect();
                for (x, e) in vals {
                    self.map.insert(x, e);
                }
            }
            CommandKind::Havoc(x, lb) => {
                let x = x.instantiate(t);
                let s = self.fresh(&x);
                if let Some(b) = lb {
                    let n = LinCon::compare(
                        &LinExpr::var(s.clone()),
                        crate::linear::Rel::Ge,
                        &LinExpr::constant(*b),
                    );
                    self.push(n);
                }
                self.map.insert(x, LinExpr::var(s));
            }
        }
    }

    pub fn run(&mut self, word: &[IndexedCommand]) {
        for ic in word {
            self.step(ic);
        }
    }

    /// Current variables written so far.
    pub fn written(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }
}

/// Pre- and post-state values of a counterexample to a triple (unlisted
/// variables are unconstrained; zero works).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub pre: BTreeMap<String, i64>,
    pub post: BTreeMap<String, i64>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |m: &BTreeMap<String, i64>| {
            m.iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        write!(f, "pre [{}] post [{}]", show(&self.pre), show(&self.post))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(Witness),
    Unknown,
}

#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Preferred value range for counterexample search.
    pub havoc_range: (i64, i64),
    pub prover: Option<SmtSolver>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            havoc_range: DEFAULT_HAVOC_RANGE,
            prover: None,
        }
    }
}

const MODEL_BUDGET: usize = 20_000;

fn smt_term(e: &LinExpr<Sym>) -> String {
    let mut parts: Vec<String> = e
        .coeffs()
        .iter()
        .map(|(s, c)| format!("(* {c} {})", symbol(&s.to_string())))
        .collect();
    parts.push(e.constant_term().to_string());
    format!("(+ {})", parts.join(" "))
}

fn smt_con(c: &LinCon<Sym>) -> String {
    let t = smt_term(&c.expr);
    match c.kind {
        ConKind::Le => format!("(<= {t} 0)"),
        ConKind::Eq => format!("(= {t} 0)"),
        ConKind::Ne => format!("(not (= {t} 0))"),
    }
}

fn smt_script(cons: &[LinCon<Sym>]) -> String {
    let mut syms: Vec<&Sym> = cons.iter().flat_map(|c| c.vars()).collect();
    syms.sort();
    syms.dedup();
    let mut s = String::from("(set-logic LIA)\n");
    for x in syms {
        s.push_str(&format!(
            "(declare-fun {} () Int)\n",
            symbol(&x.to_string())
        ));
    }
    for c in cons {
        s.push_str(&format!("(assert {})\n", smt_con(c)));
    }
    s
}

enum Sat {
    Unsat,
    Model(BTreeMap<Sym, i64>),
    Unknown,
}

/// Satisfiability of a conjunction over the integers.
fn decide(cons: &[LinCon<Sym>], cfg: &OracleConfig) -> Sat {
    if fm::refutes(cons) {
        return Sat::Unsat;
    }
    if let Some(m) = fm::integer_model(cons, cfg.havoc_range, MODEL_BUDGET) {
        return Sat::Model(m);
    }
    match cfg.prover.as_ref().map(|p| p.check(&smt_script(cons))) {
        Some(Ok(SmtAnswer::Unsat)) => Sat::Unsat,
        Some(Ok(SmtAnswer::Sat(model))) => {
            let mut m = BTreeMap::new();
            for c in cons {
                for s in c.vars() {
                    m.insert(s.clone(), model.get(&s.to_string()).copied().unwrap_or(0));
                }
            }
            if cons
                .iter()
                .all(|c| c.eval(|s| m.get(s).copied()) == Some(true))
            {
                Sat::Model(m)
            } else {
                Sat::Unknown
            }
        }
        _ => Sat::Unknown,
    }
}

fn witness(
    exec: &SymExec,
    pre: &Assertion,
    post: &Assertion,
    model: &BTreeMap<Sym, i64>,
) -> Witness {
    let val = |s: &Sym| model.get(s).copied().unwrap_or(0);
    let mut w = Witness {
        pre: BTreeMap::new(),
        post: BTreeMap::new(),
    };
    let mut vars: Vec<Var> = pre.vars().into_iter().chain(post.vars()).collect();
    vars.extend(exec.written().cloned());
    for v in vars {
        if v.is_old() {
            w.pre.insert(
                v.to_string(),
                val(&Sym {
                    var: v.clone(),
                    version: 0,
                }),
            );
            continue;
        }
        w.pre.insert(
            v.to_string(),
            val(&Sym {
                var: v.clone(),
                version: 0,
            }),
        );
        let e = exec.value(&v);
        w.post.insert(
            v.to_string(),
            e.eval(|s| Some(val(s))).expect("total model"),
        );
    }
    w
}

/// Decide `{pre} word {post}`: every execution of `word` from a state
/// satisfying `pre` (old-copies read the pre-state) ends in `post`.
pub fn check_hoare_validity(
    pre: &Assertion,
    word: &[IndexedCommand],
    post: &Assertion,
    cfg: &OracleConfig,
) -> Validity {
    let mut exec = SymExec::new();
    exec.assume(pre);
    exec.run(word);
    if !exec.feasible {
        return Validity::Valid;
    }
    let mut unknown = false;
    for a in post.atoms() {
        let cases: Vec<Normalized<Sym>> = match exec.atom(a) {
            Normalized::True => continue,
            Normalized::False => vec![Normalized::True],
            Normalized::Con(c) => c.negate(),
        };
        for case in cases {
            let mut cons = exec.constraints.clone();
            match case {
                Normalized::False => continue,
                Normalized::True => {}
                Normalized::Con(c) => cons.push(c),
            }
            match decide(&cons, cfg) {
                Sat::Unsat => {}
                Sat::Model(m) => return Validity::Invalid(witness(&exec, pre, post, &m)),
                Sat::Unknown => unknown = true,
            }
        }
    }
    if unknown {
        Validity::Unknown
    } else {
        Validity::Valid
    }
}

/// Whether a conjunction of atoms over current and old variables is satisfiable.
pub fn assertion_satisfiable(phi: &Assertion, cfg: &OracleConfig) -> Option<bool> {
    let mut exec = SymExec::new();
    exec.assume(phi);
    if !exec.feasible {
        return Some(false);
    }
    match decide(&exec.constraints, cfg) {
        Sat::Unsat => Some(false),
        Sat::Model(_) => Some(true),
        Sat::Unknown => None,
    }
}

/// Memoizing front end to [`check_hoare_validity`] for a fixed configuration.
#[derive(Debug)]
pub struct Oracle {
    pub config: OracleConfig,
    cache: RefCell<HashMap<(Assertion, Vec<IndexedCommand>, Assertion), Validity>>,
}

impl Oracle {
    pub fn new(config: OracleConfig) -> Oracle {
        Oracle {
            config,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn check(&self, pre: &Assertion, word: &[IndexedCommand], post: &Assertion) -> Validity {
        let key = (pre.clone(), word.to_vec(), post.clone());
        if let Some(v) = self.cache.borrow().get(&key) {
            return v.clone();
        }
        let v = check_hoare_validity(pre, word, post, &self.config);
        self.cache.borrow_mut().insert(key, v.clone());
        v
    }

    pub fn is_valid(&self, pre: &Assertion, word: &[IndexedCommand], post: &Assertion) -> bool {
        self.check(pre, word, post) == Validity::Valid
    }

    /// `pre ⇒ post` as a zero-step triple.
    pub fn entails(&self, pre: &Assertion, post: &Assertion) -> bool {
        self.is_valid(pre, &[], post)
    }
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle::new(OracleConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::logic::parse_assertion;
    use crate::program::{parse_program, ParameterizedProgram};

    fn ic(p: &ParameterizedProgram, name: &str, t: u32) -> IndexedCommand {
        IndexedCommand::new(p.command(name).unwrap().clone(), t)
    }

    fn a(s: &str) -> Assertion {
        parse_assertion(s).unwrap()
    }

    #[test]
    fn decrement_examples() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let cfg = OracleConfig::default();
        assert_eq!(
            check_hoare_validity(&a("true"), &[ic(&p, "d=pos()", 1)], &a("d(1) > 0"), &cfg),
            Validity::Valid
        );
        assert_eq!(
            check_hoare_validity(
                &a("d(1) > 0; old(x) = x"),
                &[ic(&p, "x=x-d", 1)],
                &a("old(x) > x"),
                &cfg
            ),
            Validity::Valid
        );
        match check_hoare_validity(&a("true"), &[ic(&p, "x=pos()", 1)], &a("x < 0"), &cfg) {
            Validity::Invalid(w) => assert!(w.post["x"] >= 1),
            other => panic!("{other:?}"),
        }
        // another thread's step does not disturb d(1)
        assert_eq!(
            check_hoare_validity(
                &a("d(1) > 0"),
                &[ic(&p, "d=pos()", 2)],
                &a("d(1) > 0"),
                &cfg
            ),
            Validity::Valid
        );
        assert!(matches!(
            check_hoare_validity(&a("d(1) > 0"), &[ic(&p, "x=x-d", 2)], &a("x < 5"), &cfg),
            Validity::Invalid(_)
        ));
    }

    #[test]
    fn traces_compose() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let w = [ic(&p, "d=pos()", 1), ic(&p, "[x>0]", 1)];
        assert_eq!(
            check_hoare_validity(
                &a("true"),
                &w,
                &a("d(1) > 0; x >= 1"),
                &OracleConfig::default()
            ),
            Validity::Valid
        );
    }

    #[test]
    fn blocked_traces_are_vacuous() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let w = [ic(&p, "[x>0]", 1)];
        assert_eq!(
            check_hoare_validity(&a("x < 0"), &w, &a("false"), &OracleConfig::default()),
            Validity::Valid
        );
    }
}
