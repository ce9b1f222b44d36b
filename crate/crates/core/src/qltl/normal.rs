//! Negation normal form at the quantifier level and prenex disjuncts.

use super::Qltl;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// `Q₁ i₁ … Q_k i_k. matrix` with a quantifier-free matrix. When `distinct`
/// holds, each variable ranges over threads different from the earlier ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrenexDisjunct {
    pub prefix: Vec<(Quantifier, String)>,
    pub distinct: bool,
    pub matrix: Qltl,
}

/// Push negations below `∧ ∨ ∀ ∃` down to quantifier-free subformulas.
pub(crate) fn quantifier_nnf(f: &Qltl, positive: bool) -> Qltl {
    if f.is_quantifier_free() {
        return if positive {
            f.clone()
        } else {
            Qltl::not(f.clone())
        };
    }
    match (f, positive) {
        (Qltl::Not(a), _) => quantifier_nnf(a, !positive),
        (Qltl::And(a, b), true) | (Qltl::Or(a, b), false) => {
            Qltl::and(quantifier_nnf(a, positive), quantifier_nnf(b, positive))
        }
        (Qltl::Or(a, b), true) | (Qltl::And(a, b), false) => {
            Qltl::or(quantifier_nnf(a, positive), quantifier_nnf(b, positive))
        }
        (Qltl::Forall(v, a), true) | (Qltl::Exists(v, a), false) => {
            Qltl::forall(v, quantifier_nnf(a, positive))
        }
        (Qltl::Exists(v, a), true) | (Qltl::Forall(v, a), false) => {
            Qltl::exists(v, quantifier_nnf(a, positive))
        }
        _ => unreachable!("temporal operators have quantifier-free operands"),
    }
}

/// Rename bound variables apart so that every binder uses a distinct name.
fn rename_apart(f: &Qltl, used: &mut Vec<String>) -> Qltl {
    match f {
        Qltl::And(a, b) => Qltl::and(rename_apart(a, used), rename_apart(b, used)),
        Qltl::Or(a, b) => Qltl::or(rename_apart(a, used), rename_apart(b, used)),
        Qltl::Forall(v, a) | Qltl::Exists(v, a) => {
            let mut name = v.clone();
            let mut k = 1;
            while used.contains(&name) {
                k += 1;
                name = format!("{v}{k}");
            }
            used.push(name.clone());
            let body = rename_apart(&a.rename_var(v, &name), used);
            if matches!(f, Qltl::Forall(..)) {
                Qltl::forall(&name, body)
            } else {
                Qltl::exists(&name, body)
            }
        }
        _ => f.clone(),
    }
}

/// Pull all quantifiers to the front (binders are already apart).
fn prenex(f: &Qltl) -> (Vec<(Quantifier, String)>, Qltl) {
    match f {
        Qltl::Forall(v, a) | Qltl::Exists(v, a) => {
            let q = if matches!(f, Qltl::Forall(..)) {
                Quantifier::Forall
            } else {
                Quantifier::Exists
            };
            let (mut prefix, m) = prenex(a);
            prefix.insert(0, (q, v.clone()));
            (prefix, m)
        }
        Qltl::And(a, b) | Qltl::Or(a, b) => {
            let (mut pa, ma) = prenex(a);
            let (pb, mb) = prenex(b);
            pa.extend(pb);
            let m = if matches!(f, Qltl::And(..)) {
                Qltl::and(ma, mb)
            } else {
                Qltl::or(ma, mb)
            };
            (pa, m)
        }
        _ => (vec![], f.clone()),
    }
}

/// Split top-level disjunctions, distributing `∃` over `∨`.
fn split(f: &Qltl) -> Vec<Qltl> {
    match f {
        Qltl::Or(a, b) => {
            let mut out = split(a);
            out.extend(split(b));
            out
        }
        Qltl::Exists(v, a) => split(a).into_iter().map(|d| Qltl::exists(v, d)).collect(),
        _ => vec![f.clone()],
    }
}

/// Replace equalities between variables that are known to be distinct (or identical).
fn resolve_equalities(f: &Qltl) -> Qltl {
    match f {
        Qltl::Eq(a, b) => {
            if a == b {
                Qltl::True
            } else {
                Qltl::False
            }
        }
        Qltl::Not(a) => Qltl::not(resolve_equalities(a)),
        Qltl::Next(a) => Qltl::next(resolve_equalities(a)),
        Qltl::And(a, b) => Qltl::and(resolve_equalities(a), resolve_equalities(b)),
        Qltl::Or(a, b) => Qltl::or(resolve_equalities(a), resolve_equalities(b)),
        Qltl::Until(a, b) => Qltl::until(resolve_equalities(a), resolve_equalities(b)),
        Qltl::Release(a, b) => Qltl::release(resolve_equalities(a), resolve_equalities(b)),
        _ => f.clone(),
    }
}

/// Every way to merge each variable into an earlier block or open a new one:
/// pairs of (block representatives, representative of each variable).
pub(crate) fn merge_patterns(vars: &[String]) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out: Vec<(Vec<String>, Vec<String>)> = vec![(vec![], vec![])];
    for v in vars {
        let mut next = Vec::new();
        for (reps, assign) in out {
            for r in &reps {
                let mut a: Vec<String> = assign.clone();
                a.push(r.clone());
                next.push((reps.clone(), a));
            }
            let mut reps2 = reps.clone();
            reps2.push(v.clone());
            let mut a = assign.clone();
            a.push(v.clone());
            next.push((reps2, a));
        }
        out = next;
    }
    out
}

/// A semantically equivalent disjunction of prenex formulas. Purely
/// existential disjuncts are split into cases on which variables coincide, so
/// that their variables range over pairwise distinct threads; disjuncts with
/// a universal quantifier are kept whole (`distinct = false`).
pub fn normalize_to_prenex_disjuncts(phi: &Qltl) -> Vec<PrenexDisjunct> {
    let nnf = quantifier_nnf(phi, true);
    let mut out = Vec::new();
    for d in split(&nnf) {
        let (prefix, matrix) = prenex(&rename_apart(&d, &mut Vec::new()));
        let existential = prefix.iter().all(|(q, _)| *q == Quantifier::Exists);
        if !existential || prefix.len() <= 1 {
            let distinct = existential;
            let matrix = if distinct && prefix.len() <= 1 {
                resolve_equalities(&matrix)
            } else {
                matrix
            };
            out.push(PrenexDisjunct {
                prefix,
                distinct,
                matrix,
            });
            continue;
        }
        let vars: Vec<String> = prefix.iter().map(|(_, v)| v.clone()).collect();
        for (reps, assign) in merge_patterns(&vars) {
            let mut m = matrix.clone();
            for (v, r) in vars.iter().zip(&assign) {
                if v != r {
                    m = m.rename_var(v, r);
                }
            }
            let prefix = reps
                .iter()
                .map(|r| (Quantifier::Exists, r.clone()))
                .collect();
            out.push(PrenexDisjunct {
                prefix,
                distinct: true,
                matrix: resolve_equalities(&m),
            });
        }
    }
    out
}
