use std::collections::BTreeSet;

/// Variables of QPA formulas. In transition bodies `0` is the executing thread
/// `i₀` and `1..=ar(q)` are the arguments of `q`.
pub type QVar = u32;
pub type PredId = usize;

/// Positive first-order formulas over a relational vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Pred(PredId, Vec<QVar>),
    Eq(QVar, QVar),
    Ne(QVar, QVar),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Forall(QVar, Box<Formula>),
    Exists(QVar, Box<Formula>),
}

impl Formula {
    pub fn pred(p: PredId, args: impl IntoIterator<Item = QVar>) -> Formula {
        Formula::Pred(p, args.into_iter().collect())
    }

    /// Conjunction with flattening and unit simplification.
    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(xs) => out.extend(xs),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with flattening and unit simplification.
    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(xs) => out.extend(xs),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn eq(a: QVar, b: QVar) -> Formula {
        if a == b {
            Formula::True
        } else {
            Formula::Eq(a, b)
        }
    }

    pub fn ne(a: QVar, b: QVar) -> Formula {
        if a == b {
            Formula::False
        } else {
            Formula::Ne(a, b)
        }
    }

    pub fn forall(v: QVar, body: Formula) -> Formula {
        match body {
            Formula::True => Formula::True,
            b => Formula::Forall(v, Box::new(b)),
        }
    }

    pub fn exists(v: QVar, body: Formula) -> Formula {
        match body {
            Formula::False => Formula::False,
            b => Formula::Exists(v, Box::new(b)),
        }
    }

    /// `∃v₁…vₙ. body`
    pub fn exists_many(vs: impl IntoIterator<Item = QVar>, body: Formula) -> Formula {
        let vs: Vec<QVar> = vs.into_iter().collect();
        vs.into_iter()
            .rev()
            .fold(body, |b, v| Formula::exists(v, b))
    }

    pub fn forall_many(vs: impl IntoIterator<Item = QVar>, body: Formula) -> Formula {
        let vs: Vec<QVar> = vs.into_iter().collect();
        vs.into_iter()
            .rev()
            .fold(body, |b, v| Formula::forall(v, b))
    }

    /// Pairwise disequality of the given variables.
    pub fn distinct(vs: &[QVar]) -> Formula {
        let mut out = Vec::new();
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                out.push(Formula::ne(vs[i], vs[j]));
            }
        }
        Formula::and(out)
    }

    pub fn free_vars(&self) -> BTreeSet<QVar> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<QVar>, out: &mut BTreeSet<QVar>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Pred(_, args) => out.extend(args.iter().filter(|v| !bound.contains(v))),
            Formula::Eq(a, b) | Formula::Ne(a, b) => {
                out.extend([a, b].into_iter().filter(|v| !bound.contains(v)))
            }
            Formula::And(xs) | Formula::Or(xs) => {
                xs.iter().for_each(|x| x.collect_free(bound, out))
            }
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                bound.push(*v);
                b.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn max_var(&self) -> Option<QVar> {
        match self {
            Formula::True | Formula::False => None,
            Formula::Pred(_, args) => args.iter().copied().max(),
            Formula::Eq(a, b) | Formula::Ne(a, b) => Some(*a.max(b)),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().filter_map(Formula::max_var).max(),
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                Some(b.max_var().map_or(*v, |m| m.max(*v)))
            }
        }
    }

    pub fn preds(&self) -> BTreeSet<PredId> {
        let mut out = BTreeSet::new();
        self.visit_preds(&mut |p, _| {
            out.insert(p);
        });
        out
    }

    pub fn visit_preds(&self, f: &mut impl FnMut(PredId, &[QVar])) {
        match self {
            Formula::Pred(p, args) => f(*p, args),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.visit_preds(f)),
            Formula::Forall(_, b) | Formula::Exists(_, b) => b.visit_preds(f),
            _ => {}
        }
    }

    /// Rename predicate ids.
    pub fn map_preds(&self, f: &impl Fn(PredId) -> PredId) -> Formula {
        match self {
            Formula::Pred(p, args) => Formula::Pred(f(*p), args.clone()),
            Formula::And(xs) => Formula::And(xs.iter().map(|x| x.map_preds(f)).collect()),
            Formula::Or(xs) => Formula::Or(xs.iter().map(|x| x.map_preds(f)).collect()),
            Formula::Forall(v, b) => Formula::Forall(*v, Box::new(b.map_preds(f))),
            Formula::Exists(v, b) => Formula::Exists(*v, Box::new(b.map_preds(f))),
            other => other.clone(),
        }
    }

    /// De Morgan dual: swaps ∧/∨, ∀/∃, =/≠, true/false; predicates are kept
    /// (they are reinterpreted as their complements by the caller).
    pub fn dual(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Pred(p, a) => Formula::Pred(*p, a.clone()),
            Formula::Eq(a, b) => Formula::Ne(*a, *b),
            Formula::Ne(a, b) => Formula::Eq(*a, *b),
            Formula::And(xs) => Formula::Or(xs.iter().map(Formula::dual).collect()),
            Formula::Or(xs) => Formula::And(xs.iter().map(Formula::dual).collect()),
            Formula::Forall(v, b) => Formula::Exists(*v, Box::new(b.dual())),
            Formula::Exists(v, b) => Formula::Forall(*v, Box::new(b.dual())),
        }
    }

    /// Capture-avoiding substitution of free variables; bound variables are
    /// renamed to fresh ids drawn from `*next`.
    pub fn subst(&self, map: &dyn Fn(QVar) -> Option<QVar>, next: &mut QVar) -> Formula {
        self.subst_in(&mut Vec::new(), map, next)
    }

    fn subst_in(
        &self,
        bound: &mut Vec<(QVar, QVar)>,
        map: &dyn Fn(QVar) -> Option<QVar>,
        next: &mut QVar,
    ) -> Formula {
        let r = |v: QVar, bound: &Vec<(QVar, QVar)>| -> QVar {
            if let Some((_, n)) = bound.iter().rev().find(|(o, _)| *o == v) {
                *n
            } else {
                map(v).unwrap_or(v)
            }
        };
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Pred(p, args) => {
                Formula::Pred(*p, args.iter().map(|&v| r(v, bound)).collect())
            }
            Formula::Eq(a, b) => Formula::Eq(r(*a, bound), r(*b, bound)),
            Formula::Ne(a, b) => Formula::Ne(r(*a, bound), r(*b, bound)),
            Formula::And(xs) => {
                Formula::And(xs.iter().map(|x| x.subst_in(bound, map, next)).collect())
            }
            Formula::Or(xs) => {
                Formula::Or(xs.iter().map(|x| x.subst_in(bound, map, next)).collect())
            }
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                let fresh = *next;
                *next += 1;
                bound.push((*v, fresh));
                let body = b.subst_in(bound, map, next);
                bound.pop();
                if matches!(self, Formula::Forall(..)) {
                    Formula::Forall(fresh, Box::new(body))
                } else {
                    Formula::Exists(fresh, Box::new(body))
                }
            }
        }
    }

    /// Does any `∃` occur in the scope of a `∀`?
    pub fn has_exists_under_forall(&self) -> bool {
        fn go(f: &Formula, under_forall: bool) -> bool {
            match f {
                Formula::Exists(_, b) => under_forall || go(b, under_forall),
                Formula::Forall(_, b) => go(b, true),
                Formula::And(xs) | Formula::Or(xs) => xs.iter().any(|x| go(x, under_forall)),
                _ => false,
            }
        }
        go(self, false)
    }

    /// Does any `∀` occur in the scope of an `∃`?
    pub fn has_forall_under_exists(&self) -> bool {
        self.dual().has_exists_under_forall()
    }

    /// Number of `∃` binders (a bound on the witnesses a model needs when no
    /// `∃` is under a `∀`).
    pub fn count_exists(&self) -> usize {
        match self {
            Formula::Exists(_, b) => 1 + b.count_exists(),
            Formula::Forall(_, b) => b.count_exists(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().map(Formula::count_exists).sum(),
            _ => 0,
        }
    }

    pub fn count_forall(&self) -> usize {
        self.dual().count_exists()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smart_constructors_simplify() {
        assert_eq!(Formula::and([Formula::True, Formula::True]), Formula::True);
        assert_eq!(Formula::or([Formula::False]), Formula::False);
        assert_eq!(
            Formula::and([Formula::pred(0, [1]), Formula::False]),
            Formula::False
        );
        assert_eq!(Formula::eq(3, 3), Formula::True);
    }

    #[test]
    fn substitution_avoids_capture() {
        // ∃1. p(1, 2) with 2 ↦ 1 must not capture
        let f = Formula::exists(1, Formula::pred(0, [1, 2]));
        let mut next = 10;
        let g = f.subst(&|v| if v == 2 { Some(1) } else { None }, &mut next);
        assert_eq!(g, Formula::exists(10, Formula::pred(0, [10, 1])));
        assert_eq!(g.free_vars(), [1].into_iter().collect());
    }

    #[test]
    fn quantifier_alternation_checks() {
        let f = Formula::forall(1, Formula::exists(2, Formula::pred(0, [1, 2])));
        assert!(f.has_exists_under_forall());
        assert!(!f.has_forall_under_exists());
        assert_eq!(
            f.dual(),
            Formula::exists(1, Formula::forall(2, Formula::pred(0, [1, 2])))
        );
    }
}
