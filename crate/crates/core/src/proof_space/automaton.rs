//! The quantified predicate automaton recognising the lasso language of a basis.
//!
//! Predicates are canonical names of the atoms occurring in the basis. Reading
//! right to left, a fact `[α](ī)` is replaced by the pre-condition of some
//! basis triple instance proving `α[ī]` for the letter just read; at `$` the
//! old-equalities are discharged, and every remaining fact must be produced
//! by a triple with pre-condition `true` before the word is exhausted.

use std::collections::{BTreeMap, BTreeSet};

use crate::linear::{LinExpr, Rel};
use crate::logic::{canonicalize, permutations, Assertion, Atom, CanonicalAssertion, ThreadId};
use crate::qpa::{Formula, PredId, Predicate, QVar, Qpa};

use super::Basis;

fn atom_name(a: &Atom) -> (CanonicalAssertion, Vec<ThreadId>) {
    canonicalize(&Assertion::atom(a.clone()))
}

/// `old(v) = v` for a single (global or local) variable.
fn is_old_equality(c: &CanonicalAssertion) -> bool {
    let [a] = c.name.atoms().iter().collect::<Vec<_>>()[..] else {
        return false;
    };
    let vars: BTreeSet<_> = a.vars().into_iter().map(|v| v.current()).collect();
    let [v] = vars.iter().collect::<Vec<_>>()[..] else {
        return false;
    };
    Atom::compare(&LinExpr::var(v.old()), Rel::Eq, &LinExpr::var(v.clone())).as_ref() == Some(a)
}

/// Permutations `s` of `1..=n` (as 1-based images) with `c[s] = c`.
fn automorphisms(c: &CanonicalAssertion) -> Vec<Vec<QVar>> {
    let ids: Vec<ThreadId> = (1..=c.arity as ThreadId).collect();
    permutations(&ids)
        .into_iter()
        .filter(|s| c.name.rename(|t| s[(t - 1) as usize]) == c.name)
        .map(|s| s.into_iter().map(|t| t as QVar).collect())
        .collect()
}

/// The automaton accepting exactly the lassos (encoded over `alphabet`) in the
/// lasso language of `b`. Triples whose command is not in `alphabet` are ignored.
pub fn proof_space_qpa(b: &Basis, alphabet: &[String]) -> Qpa {
    let mut names: BTreeSet<CanonicalAssertion> = BTreeSet::new();
    let assertions = b.triples.iter().flat_map(|t| [&t.pre, &t.post]).cloned();
    for phi in assertions.chain(b.rankings.iter().map(|w| w.to_assertion())) {
        for a in phi.atoms() {
            names.insert(atom_name(a).0);
        }
    }
    let names: Vec<CanonicalAssertion> = names.into_iter().collect();
    let index: BTreeMap<&CanonicalAssertion, PredId> =
        names.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let preds = names
        .iter()
        .map(|c| Predicate {
            name: c.label(),
            arity: c.arity,
            accepting: false,
        })
        .collect();
    let mut qpa = Qpa::new(preds, alphabet.to_vec()).expect("canonical names have small arity");
    let pred_of = |a: &Atom, map: &dyn Fn(ThreadId) -> QVar| {
        let (c, tuple) = atom_name(a);
        Formula::pred(index[&c], tuple.into_iter().map(map))
    };

    let disjuncts = b.rankings.iter().map(|w| {
        let threads: Vec<ThreadId> = w.threads().into_iter().collect();
        let vars: Vec<QVar> = (1..=threads.len() as QVar).collect();
        let pos: BTreeMap<ThreadId, QVar> =
            threads.iter().copied().zip(vars.iter().copied()).collect();
        let mut body = vec![Formula::distinct(&vars)];
        body.extend(
            w.to_assertion()
                .atoms()
                .iter()
                .map(|a| pred_of(a, &|t| pos[&t])),
        );
        Formula::exists_many(vars, Formula::and(body))
    });
    qpa.start = Formula::or(disjuncts);

    for (p, c) in names.iter().enumerate() {
        let n = c.arity as QVar;
        let autos = automorphisms(c);
        for (letter, sym) in alphabet.iter().enumerate() {
            if sym == "$" {
                let body = if is_old_equality(c) {
                    Formula::True
                } else {
                    Formula::pred(p, 1..=n)
                };
                qpa.set_delta(p, letter, body);
                continue;
            }
            let mut disjuncts: Vec<Formula> = Vec::new();
            for t in b
                .triples
                .iter()
                .filter(|t| t.word[0].command.name.as_ref() == sym.as_str())
            {
                let Some(post) = t.post.atoms().first() else {
                    continue;
                };
                let (cb, tau) = atom_name(post);
                if cb != *c {
                    continue;
                }
                for s in &autos {
                    // `α[τ] = c[ī∘s]`: the triple's post index τ[q] becomes variable s(q)
                    let mut map: BTreeMap<ThreadId, QVar> =
                        tau.iter().zip(s).map(|(&t, &v)| (t, v)).collect();
                    let mut lits = Vec::new();
                    let j = t.word[0].thread;
                    match map.get(&j) {
                        Some(&v) => lits.push(Formula::eq(0, v)),
                        None => {
                            map.insert(j, 0);
                            lits.extend((1..=n).map(|v| Formula::ne(0, v)));
                        }
                    }
                    let mut fresh = Vec::new();
                    let mut next = n + 1;
                    for id in t.pre.threads() {
                        map.entry(id).or_insert_with(|| {
                            fresh.push(next);
                            next += 1;
                            next - 1
                        });
                    }
                    for (k, &e) in fresh.iter().enumerate() {
                        lits.extend(
                            (0..=n)
                                .chain(fresh[..k].iter().copied())
                                .map(|v| Formula::ne(e, v)),
                        );
                    }
                    lits.extend(t.pre.atoms().iter().map(|a| pred_of(a, &|x| map[&x])));
                    let d = Formula::exists_many(fresh, Formula::and(lits));
                    if !disjuncts.contains(&d) {
                        disjuncts.push(d);
                    }
                }
            }
            qpa.set_delta(p, letter, Formula::or(disjuncts));
        }
    }
    qpa
}
