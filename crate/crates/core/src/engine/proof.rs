//! Termination proofs of single lassos: strongest postconditions, inductive
//! invariants, annotations pruned to what the ranking argument needs.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::fm;
use crate::linear::{LinCon, LinExpr, Normalized, Rel};
use crate::logic::vc::{Sym, SymExec};
use crate::logic::{Assertion, Atom, Oracle, RankingFormula, Var};
use crate::program::IndexedCommand;

/// Projection variables: old-copies of the pre-state, current values of the post-state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum SpVar {
    Sym(Sym),
    Post(Var),
}

/// Current variables an assertion or word is about.
fn relevant_vars(pre: &Assertion, word: &[IndexedCommand]) -> BTreeSet<Var> {
    let mut vars: BTreeSet<Var> = pre.vars().into_iter().map(|v| v.current()).collect();
    for ic in word {
        vars.extend(
            ic.command
                .mentions()
                .into_iter()
                .map(|v| v.instantiate(ic.thread)),
        );
    }
    vars
}

/// The conjunctive strongest postcondition of `pre` under `word`: symbolic
/// execution, then Fourier–Motzkin elimination of everything except the
/// post-state and the old-copies. Sound (implied by every reachable state);
/// exact up to the integer relaxation of the projection.
pub fn strongest_post(pre: &Assertion, word: &[IndexedCommand]) -> Assertion {
    let mut exec = SymExec::new();
    exec.assume(pre);
    exec.run(word);
    if !exec.feasible {
        return Assertion::atom(Atom::False);
    }
    let lift = |s: &Sym| SpVar::Sym(s.clone());
    let mut cons: Vec<LinCon<SpVar>> = Vec::new();
    let mut push = |n: Normalized<SpVar>| match n {
        Normalized::Con(c) => {
            cons.push(c);
            true
        }
        Normalized::True => true,
        Normalized::False => false,
    };
    for c in &exec.constraints {
        if !push(c.map_vars(lift)) {
            return Assertion::atom(Atom::False);
        }
    }
    for v in relevant_vars(pre, word) {
        let value = exec.value(&v).map_vars(lift);
        push(LinCon::compare(
            &LinExpr::var(SpVar::Post(v)),
            Rel::Eq,
            &value,
        ));
    }
    let keep = |v: &SpVar| match v {
        SpVar::Post(_) => true,
        SpVar::Sym(s) => s.var.is_old(),
    };
    let Some(projected) = fm::project(&cons, keep) else {
        return Assertion::atom(Atom::False);
    };
    let lower = |v: &SpVar| match v {
        SpVar::Post(x) => x.clone(),
        SpVar::Sym(s) => s.var.clone(),
    };
    projected
        .iter()
        .filter_map(|c| Atom::from_normalized(c.map_vars(lower)))
        .collect()
}

/// `stem_strongest_post`: the strongest conjunctive assertion after the stem.
pub fn stem_strongest_post(stem: &[IndexedCommand]) -> Assertion {
    strongest_post(&Assertion::top(), stem)
}

/// `old(v) = v` for each variable.
pub fn old_equalities(vars: impl IntoIterator<Item = Var>) -> Assertion {
    vars.into_iter()
        .filter_map(|v| Atom::compare(&LinExpr::var(v.old()), Rel::Eq, &LinExpr::var(v)))
        .collect()
}

/// Houdini: the largest subset of `candidates` preserved by one execution of `cycle`.
pub fn inductive_subset(
    candidates: &Assertion,
    cycle: &[IndexedCommand],
    oracle: &Oracle,
) -> Assertion {
    let mut inv = candidates.clone();
    loop {
        let keep: Assertion = inv
            .atoms()
            .iter()
            .filter(|a| oracle.is_valid(&inv, cycle, &Assertion::atom((*a).clone())))
            .cloned()
            .collect();
        if keep == inv {
            return inv;
        }
        inv = keep;
    }
}

/// Variables shared with `α` or touched by the command.
fn shares(a: &Atom, alpha: &Atom, ic: &IndexedCommand) -> bool {
    let cmd: BTreeSet<Var> = ic
        .command
        .mentions()
        .into_iter()
        .map(|v| v.instantiate(ic.thread))
        .collect();
    let target: BTreeSet<Var> = alpha.vars().into_iter().map(Var::current).collect();
    a.vars()
        .into_iter()
        .map(Var::current)
        .any(|v| cmd.contains(&v) || target.contains(&v))
}

/// The least pre-condition for `{pre} ic {α}` drawn from `available`, in this
/// order: `true`; `α` itself (when `carry` allows it); subsets of up to three
/// atoms sharing variables with `α` or the command; all of `available`.
pub(crate) fn choose_pre(
    oracle: &Oracle,
    available: &Assertion,
    carry: bool,
    ic: &IndexedCommand,
    alpha: &Atom,
) -> Option<Assertion> {
    let word = std::slice::from_ref(ic);
    let post = Assertion::atom(alpha.clone());
    if oracle.is_valid(&Assertion::top(), word, &post) {
        return Some(Assertion::top());
    }
    let own = Assertion::atom(alpha.clone());
    if carry && oracle.is_valid(&own, word, &post) {
        return Some(own);
    }
    let near: Vec<Atom> = available
        .atoms()
        .iter()
        .filter(|a| shares(a, alpha, ic))
        .cloned()
        .collect();
    for size in 1..=near.len().min(3) {
        for pick in subsets(&near, size) {
            let pre: Assertion = pick.into_iter().collect();
            if oracle.is_valid(&pre, word, &post) {
                return Some(pre);
            }
        }
    }
    oracle
        .is_valid(available, word, &post)
        .then(|| available.clone())
}

fn subsets<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, items[i].clone());
            out.push(rest);
        }
    }
    out
}

/// Annotations `φ₀ = start ⊇ …, φ_n ⊇ goal` of `word` with each atom of
/// `φ_{k+1}` following from a few atoms of `φ_k`. Computed backwards from the
/// goal over the strongest postconditions; `None` if the goal does not follow.
pub fn annotate(
    oracle: &Oracle,
    start: &Assertion,
    word: &[IndexedCommand],
    goal: &Assertion,
) -> Option<Vec<Assertion>> {
    let n = word.len();
    // candidates: the strongest postcondition plus earlier atoms that still hold
    let mut sp: Vec<Assertion> = vec![start.clone()];
    for k in 1..=n {
        let post = strongest_post(start, &word[..k]);
        let kept: Vec<Atom> = sp[k - 1]
            .atoms()
            .iter()
            .filter(|a| !post.contains(a) && oracle.entails(&post, &Assertion::atom((*a).clone())))
            .cloned()
            .collect();
        sp.push(post.conjoin(&kept.into_iter().collect()));
    }
    let mut needed = vec![Assertion::top(); n + 1];
    needed[n] = goal.clone();
    if n == 0 {
        return goal.atoms().is_subset(start.atoms()).then_some(needed);
    }
    for k in (0..n).rev() {
        let mut pre = Assertion::top();
        for alpha in needed[k + 1].atoms() {
            let carry = if k == 0 {
                start.contains(alpha)
            } else {
                oracle.entails(&sp[k], &Assertion::atom(alpha.clone()))
            };
            let chosen = choose_pre(oracle, &sp[k], carry, &word[k], alpha)?;
            pre = pre.conjoin(&chosen);
        }
        needed[k] = pre;
    }
    Some(needed)
}

/// A termination argument for `τ ρ^ω`: an inductive invariance annotation of
/// stem and loop, and a variance annotation of the loop (starting from the
/// loop invariant and old-copies equal to current values) ending in the
/// ranking formula.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LassoProof {
    /// `|τ| + |ρ| + 1` assertions; position `|τ|` is the loop invariant.
    pub invariance: Vec<Assertion>,
    /// `|ρ| + 1` assertions; the last contains the ranking formula's atoms.
    pub variance: Vec<Assertion>,
    pub ranking: RankingFormula,
}

impl LassoProof {
    /// Every annotation step is a valid Hoare triple, the loop invariant is
    /// re-established, and the variance proof ends in the ranking formula.
    pub fn check(
        &self,
        stem: &[IndexedCommand],
        cycle: &[IndexedCommand],
        oracle: &Oracle,
    ) -> bool {
        let word: Vec<IndexedCommand> = stem.iter().chain(cycle).cloned().collect();
        if self.invariance.len() != word.len() + 1
            || self.variance.len() != cycle.len() + 1
            || !self.invariance[0].is_true()
        {
            return false;
        }
        let steps = |ann: &[Assertion], w: &[IndexedCommand]| {
            w.iter()
                .enumerate()
                .all(|(k, ic)| oracle.is_valid(&ann[k], std::slice::from_ref(ic), &ann[k + 1]))
        };
        let inv = &self.invariance[stem.len()];
        let start = inv.conjoin(&old_equalities(self.ranking.term.vars().cloned()));
        steps(&self.invariance, &word)
            && self.invariance[word.len()].atoms().is_superset(inv.atoms())
            && self.variance[0].atoms().is_subset(start.atoms())
            && steps(&self.variance, cycle)
            && self.variance[cycle.len()]
                .atoms()
                .is_superset(self.ranking.to_assertion().atoms())
    }
}

impl fmt::Display for LassoProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invariance:")?;
        for (k, a) in self.invariance.iter().enumerate() {
            writeln!(f, "  {k:>3}: {{{a}}}")?;
        }
        writeln!(f, "variance:")?;
        for (k, a) in self.variance.iter().enumerate() {
            writeln!(f, "  {k:>3}: {{{a}}}")?;
        }
        write!(f, "ranking: {}", self.ranking.to_assertion())
    }
}

/// Prove `τ ρ^ω` infeasible by a linear ranking function supported by an
/// inductive invariant drawn from the stem's strongest postcondition.
pub fn prove_lasso(
    stem: &[IndexedCommand],
    cycle: &[IndexedCommand],
    oracle: &Oracle,
) -> Option<LassoProof> {
    let sp = stem_strongest_post(stem);
    let loop_vars = relevant_vars(&Assertion::top(), cycle);
    let candidates: Assertion = sp
        .atoms()
        .iter()
        .filter(|a| a.vars().into_iter().all(|v| loop_vars.contains(v)))
        .cloned()
        .collect();
    let inv = inductive_subset(&candidates, cycle, oracle);
    let ranking = synthesize_ranking_checked(cycle, &inv, oracle)?;
    let stem_ann = annotate(oracle, &Assertion::top(), stem, &inv)?;
    let loop_ann = annotate(oracle, &inv, cycle, &inv)?;
    let start = inv.conjoin(&old_equalities(ranking.term.vars().cloned()));
    let variance = annotate(oracle, &start, cycle, &ranking.to_assertion())?;
    let mut invariance = stem_ann;
    invariance.extend(loop_ann.into_iter().skip(1));
    Some(LassoProof {
        invariance,
        variance,
        ranking,
    })
}

/// A synthesized ranking formula, kept only if its variance triple is valid.
fn synthesize_ranking_checked(
    cycle: &[IndexedCommand],
    support: &Assertion,
    oracle: &Oracle,
) -> Option<RankingFormula> {
    let w = super::synthesize_linear_ranking(cycle, support)?;
    let pre = support.conjoin(&old_equalities(w.term.vars().cloned()));
    oracle.is_valid(&pre, cycle, &w.to_assertion()).then_some(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::logic::{parse_assertion, parse_ranking};
    use crate::program::{parse_lasso, parse_program, Lasso};

    fn fig3a() -> Lasso {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        parse_lasso(&p, corpus::FIG3A_LASSO).unwrap()
    }

    fn a(s: &str) -> Assertion {
        parse_assertion(s).unwrap()
    }

    #[test]
    fn stem_post_of_two_positive_choices() {
        let l = fig3a();
        let sp = stem_strongest_post(&l.stem);
        assert!(sp.atoms().is_superset(a("d(1) > 0; x > 0").atoms()), "{sp}");
        assert!(stem_strongest_post(&[]).is_true());
    }

    #[test]
    fn stem_post_after_guarded_decrement() {
        let p = parse_program("global int x;\nwhile (x > 0) { x = x - 1; }").unwrap();
        let l = parse_lasso(&p, "[x>0]@1 x=x-1@1 $ [x>0]@1 x=x-1@1").unwrap();
        let sp = stem_strongest_post(&l.stem);
        assert!(
            sp.contains(a("x >= 0").atoms().iter().next().unwrap()),
            "{sp}"
        );
    }

    #[test]
    fn fig3_proof() {
        let l = fig3a();
        let oracle = Oracle::default();
        let proof = prove_lasso(&l.stem, &l.cycle, &oracle).unwrap();
        assert_eq!(proof.ranking, parse_ranking("x >= 0").unwrap());
        assert_eq!(proof.invariance[2], a("d(1) > 0"));
        assert_eq!(proof.invariance.last().unwrap(), &a("d(1) > 0"));
        assert_eq!(proof.variance[0], a("d(1) > 0; old(x) = x"));
        assert_eq!(proof.variance[1], a("d(1) > 0; old(x) = x; old(x) >= 0"));
        assert_eq!(proof.variance[2], a("old(x) > x; old(x) >= 0"));
        assert!(proof.check(&l.stem, &l.cycle, &oracle));
    }

    #[test]
    fn houdini_drops_non_inductive_atoms() {
        let l = fig3a();
        let oracle = Oracle::default();
        let inv = inductive_subset(&a("d(1) > 0; x > 0"), &l.cycle, &oracle);
        assert_eq!(inv, a("d(1) > 0"));
    }
}
