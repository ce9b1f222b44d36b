use crate::qpa::{Formula, Predicate, Qpa};

use super::ParameterizedProgram;

/// `(i = j ∧ a) ∨ (i ≠ j ∧ b)` with `j` the executing thread (variable 0) and `i` variable 1.
fn ite(a: Formula, b: Formula) -> Formula {
    Formula::or([
        Formula::and([Formula::eq(1, 0), a]),
        Formula::and([Formula::ne(1, 0), b]),
    ])
}

/// The program lasso automaton `A(P)`: it accepts exactly the encodings of
/// lassos `τ$ρ` in which every thread's stem projection is a path from the
/// initial location and its loop projection returns to where it started.
///
/// Predicates: `at<ℓ>(i)` (thread `i` is at `ℓ` in the stem), `at<ℓ₁>from<ℓ₂>(i)`
/// (at `ℓ₁` in the loop, which it entered at `ℓ₂`), `same(i)` (standing for
/// "some `⟨ℓ,ℓ⟩`"), `anyloc(i)` (standing for "some `ℓ`") and the nullary
/// `nodollar` that forbids a trailing `$`.
pub fn program_lasso_qpa(p: &ParameterizedProgram) -> Qpa {
    let locs: Vec<usize> = p.locations().collect();
    let n = locs.len();
    let at = |l: usize| l - 1;
    let pair = |l1: usize, l2: usize| n + (l1 - 1) * n + (l2 - 1);
    let same = n + n * n;
    let anyloc = same + 1;
    let nodollar = same + 2;
    let mut preds = Vec::with_capacity(nodollar + 1);
    for &l in &locs {
        preds.push(Predicate {
            name: format!("at{l}"),
            arity: 1,
            accepting: l == p.initial,
        });
    }
    for &l1 in &locs {
        for &l2 in &locs {
            preds.push(Predicate {
                name: format!("at{l1}from{l2}"),
                arity: 1,
                accepting: false,
            });
        }
    }
    preds.push(Predicate {
        name: "same".into(),
        arity: 1,
        accepting: false,
    });
    preds.push(Predicate {
        name: "anyloc".into(),
        arity: 1,
        accepting: true,
    });
    preds.push(Predicate {
        name: "nodollar".into(),
        arity: 0,
        accepting: false,
    });
    let alphabet = p.alphabet();
    let dollar = alphabet.len() - 1;
    let mut a = Qpa::new(preds, alphabet).expect("unary predicates");
    let unary = |q: usize| Formula::pred(q, [1]);
    for (ci, _) in p.commands.iter().enumerate() {
        let (src, tgt) = (p.src[ci], p.tgt[ci]);
        for &l1 in &locs {
            let keep_at = Formula::and([Formula::ne(1, 0), unary(at(l1))]);
            a.set_delta(
                at(l1),
                ci,
                if tgt == l1 {
                    ite(unary(at(src)), unary(at(l1)))
                } else {
                    keep_at
                },
            );
            for &l2 in &locs {
                let q = pair(l1, l2);
                let body = if tgt == l1 {
                    ite(unary(pair(src, l2)), unary(q))
                } else {
                    Formula::and([Formula::ne(1, 0), unary(q)])
                };
                a.set_delta(q, ci, body);
            }
        }
        a.set_delta(same, ci, ite(unary(pair(src, tgt)), unary(same)));
        a.set_delta(anyloc, ci, ite(unary(at(src)), unary(anyloc)));
        a.set_delta(nodollar, ci, Formula::True);
    }
    for &l1 in &locs {
        a.set_delta(pair(l1, l1), dollar, unary(at(l1)));
    }
    a.set_delta(same, dollar, unary(anyloc));
    a.start = Formula::and([Formula::pred(nodollar, []), Formula::forall(1, unary(same))]);
    a
}
