//! Exact evaluation of QLTL on ultimately periodic words `τ ρ^ω`.

use std::collections::BTreeMap;

use crate::logic::ThreadId;
use crate::program::Lasso;

use super::normal::{PrenexDisjunct, Quantifier};
use super::{Qltl, QltlError};

/// An ultimately periodic word given by its positions `0..len` and the
/// position `loop_start` that follows the last one.
struct Periodic<'a> {
    letters: Vec<(&'a str, ThreadId)>,
    loop_start: usize,
}

impl Periodic<'_> {
    fn succ(&self, p: usize) -> usize {
        if p + 1 < self.letters.len() {
            p + 1
        } else {
            self.loop_start
        }
    }

    /// Truth of a quantifier-free formula at every position.
    fn positions(&self, f: &Qltl, env: &BTreeMap<String, ThreadId>) -> Vec<bool> {
        let n = self.letters.len();
        let shift = |v: &[bool]| (0..n).map(|p| v[self.succ(p)]).collect::<Vec<bool>>();
        match f {
            Qltl::True => vec![true; n],
            Qltl::False => vec![false; n],
            Qltl::Exec { command, var } => {
                let t = env.get(var).copied();
                self.letters
                    .iter()
                    .map(|&(c, i)| c == command && Some(i) == t)
                    .collect()
            }
            Qltl::Eq(a, b) => vec![env.get(a) == env.get(b); n],
            Qltl::Not(a) => self.positions(a, env).into_iter().map(|x| !x).collect(),
            Qltl::And(a, b) => self
                .positions(a, env)
                .into_iter()
                .zip(self.positions(b, env))
                .map(|(x, y)| x && y)
                .collect(),
            Qltl::Or(a, b) => self
                .positions(a, env)
                .into_iter()
                .zip(self.positions(b, env))
                .map(|(x, y)| x || y)
                .collect(),
            Qltl::Next(a) => shift(&self.positions(a, env)),
            // least fixpoint of v = b ∨ (a ∧ X v)
            Qltl::Until(a, b) => {
                let (va, vb) = (self.positions(a, env), self.positions(b, env));
                let mut v = vec![false; n];
                loop {
                    let nv: Vec<bool> = (0..n)
                        .map(|p| vb[p] || (va[p] && v[self.succ(p)]))
                        .collect();
                    if nv == v {
                        return v;
                    }
                    v = nv;
                }
            }
            // greatest fixpoint of v = b ∧ (a ∨ X v)
            Qltl::Release(a, b) => {
                let (va, vb) = (self.positions(a, env), self.positions(b, env));
                let mut v = vec![true; n];
                loop {
                    let nv: Vec<bool> = (0..n)
                        .map(|p| vb[p] && (va[p] || v[self.succ(p)]))
                        .collect();
                    if nv == v {
                        return v;
                    }
                    v = nv;
                }
            }
            Qltl::Forall(..) | Qltl::Exists(..) => {
                unreachable!("quantifier below a temporal operator")
            }
        }
    }

    fn holds(&self, f: &Qltl, env: &mut BTreeMap<String, ThreadId>, n: ThreadId) -> bool {
        if f.is_quantifier_free() {
            return self.positions(f, env)[0];
        }
        match f {
            Qltl::Not(a) => !self.holds(a, env, n),
            Qltl::And(a, b) => self.holds(a, env, n) && self.holds(b, env, n),
            Qltl::Or(a, b) => self.holds(a, env, n) || self.holds(b, env, n),
            Qltl::Forall(v, a) | Qltl::Exists(v, a) => {
                let saved = env.get(v).copied();
                let want = matches!(f, Qltl::Forall(..));
                let mut result = want;
                for t in 1..=n {
                    env.insert(v.clone(), t);
                    if self.holds(a, env, n) != want {
                        result = !want;
                        break;
                    }
                }
                match saved {
                    Some(t) => env.insert(v.clone(), t),
                    None => env.remove(v),
                };
                result
            }
            _ => unreachable!("quantifier below a temporal operator"),
        }
    }
}

fn periodic(l: &Lasso) -> Periodic<'_> {
    let letters = l
        .stem
        .iter()
        .chain(&l.cycle)
        .map(|ic| (ic.command.name.as_ref(), ic.thread))
        .collect();
    Periodic {
        letters,
        loop_start: l.stem.len(),
    }
}

/// Does `τ ρ^ω` satisfy the sentence `φ` when quantifiers range over threads `1..=n`?
pub fn lasso_satisfies(l: &Lasso, phi: &Qltl, n: usize) -> Result<bool, QltlError> {
    if let Some(v) = phi.free_vars().into_iter().next() {
        return Err(QltlError::FreeVariable(v));
    }
    let max = l.threads().into_iter().max().unwrap_or(0) as usize;
    if n < max {
        return Err(QltlError::TooFewThreads { n, max });
    }
    Ok(periodic(l).holds(phi, &mut BTreeMap::new(), n as ThreadId))
}

/// Satisfaction of a quantifier-free formula on `u v^ω` over letters
/// `(command, class)`, with `vars[j]` denoting class `j + 1`.
pub fn class_word_satisfies(
    matrix: &Qltl,
    vars: &[String],
    u: &[(&str, ThreadId)],
    v: &[(&str, ThreadId)],
) -> bool {
    assert!(!v.is_empty(), "the periodic part must be nonempty");
    let letters = u.iter().chain(v).copied().collect();
    let w = Periodic {
        letters,
        loop_start: u.len(),
    };
    let env = vars
        .iter()
        .enumerate()
        .map(|(j, x)| (x.clone(), j as ThreadId + 1))
        .collect();
    w.positions(matrix, &env)[0]
}

/// Semantics of a list of prenex disjuncts on a lasso over threads `1..=n`.
pub fn eval_disjuncts(ds: &[PrenexDisjunct], l: &Lasso, n: usize) -> bool {
    let w = periodic(l);
    fn go(
        w: &Periodic<'_>,
        d: &PrenexDisjunct,
        k: usize,
        env: &mut BTreeMap<String, ThreadId>,
        n: ThreadId,
    ) -> bool {
        let Some((q, v)) = d.prefix.get(k) else {
            return w.positions(&d.matrix, env)[0];
        };
        let taken: Vec<ThreadId> = d.prefix[..k].iter().map(|(_, x)| env[x]).collect();
        let mut values = (1..=n).filter(|t| !d.distinct || !taken.contains(t));
        let mut check = |t: ThreadId| {
            env.insert(v.clone(), t);
            let r = go(w, d, k + 1, env, n);
            env.remove(v);
            r
        };
        match q {
            Quantifier::Exists => values.any(&mut check),
            Quantifier::Forall => values.all(&mut check),
        }
    }
    ds.iter()
        .any(|d| go(&w, d, 0, &mut BTreeMap::new(), n as ThreadId))
}
