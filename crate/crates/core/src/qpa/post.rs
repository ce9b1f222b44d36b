use super::automaton::Qpa;
use super::formula::{Formula, QVar};

/// `δ̂(φ, σ) = ∃i. φ[q(j̄) ↦ δ(q, σ)[i₀ ↦ i, ī ↦ j̄]]`.
pub fn symbolic_post(qpa: &Qpa, phi: &Formula, letter: usize) -> Formula {
    let mut next: QVar = phi.max_var().map_or(0, |m| m + 1).max(qpa.max_var() + 1);
    let i = next;
    next += 1;
    let body = replace(qpa, phi, letter, i, &mut next);
    Formula::exists(i, body)
}

fn replace(qpa: &Qpa, f: &Formula, letter: usize, i: QVar, next: &mut QVar) -> Formula {
    match f {
        Formula::Pred(p, args) => {
            let args = args.clone();
            qpa.delta(*p, letter).subst(
                &move |v| {
                    if v == 0 {
                        Some(i)
                    } else {
                        args.get(v as usize - 1).copied()
                    }
                },
                next,
            )
        }
        Formula::And(xs) => Formula::and(
            xs.iter()
                .map(|x| replace(qpa, x, letter, i, next))
                .collect::<Vec<_>>(),
        ),
        Formula::Or(xs) => Formula::or(
            xs.iter()
                .map(|x| replace(qpa, x, letter, i, next))
                .collect::<Vec<_>>(),
        ),
        Formula::Forall(v, b) => Formula::forall(*v, replace(qpa, b, letter, i, next)),
        Formula::Exists(v, b) => Formula::exists(*v, replace(qpa, b, letter, i, next)),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpa::automaton::Predicate;

    fn toy() -> Qpa {
        let preds = vec![
            Predicate {
                name: "q".into(),
                arity: 0,
                accepting: false,
            },
            Predicate {
                name: "p".into(),
                arity: 1,
                accepting: false,
            },
        ];
        let mut a = Qpa::new(preds, vec!["a".into()]).unwrap();
        a.set_delta(0, 0, Formula::pred(0, []));
        a.set_delta(
            1,
            0,
            Formula::and([Formula::ne(0, 1), Formula::pred(1, [1])]),
        );
        a
    }

    #[test]
    fn post_of_true_is_trivial() {
        let a = toy();
        assert_eq!(
            symbolic_post(&a, &Formula::True, 0),
            Formula::Exists(2, Box::new(Formula::True))
        );
    }

    #[test]
    fn post_substitutes_arguments() {
        let a = toy();
        // φ = p(5): ∃i. i ≠ 5 ∧ p(5)
        let got = symbolic_post(&a, &Formula::pred(1, [5]), 0);
        assert_eq!(
            got,
            Formula::exists(
                6,
                Formula::And(vec![Formula::Ne(6, 5), Formula::pred(1, [5])])
            )
        );
        let got = symbolic_post(&a, &Formula::pred(0, []), 0);
        assert_eq!(got, Formula::exists(2, Formula::pred(0, [])));
    }
}
