//! Linear integer expressions and normalized linear constraints, generic over
//! the variable type so the same machinery serves program commands, assertions
//! and symbolic verification conditions.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;

/// `Σ cᵢ·vᵢ + k` with exact integer coefficients; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr<V: Ord> {
    coeffs: BTreeMap<V, i64>,
    constant: i64,
}

impl<V: Ord + Clone> Default for LinExpr<V> {
    fn default() -> Self {
        Self::constant(0)
    }
}

impl<V: Ord + Clone> LinExpr<V> {
    pub fn constant(k: i64) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn var(v: V) -> Self {
        Self::term(1, v)
    }

    pub fn term(c: i64, v: V) -> Self {
        let mut e = Self::constant(0);
        e.add_term(c, v);
        e
    }

    pub fn from_parts(coeffs: impl IntoIterator<Item = (V, i64)>, constant: i64) -> Self {
        let mut e = Self::constant(constant);
        for (v, c) in coeffs {
            e.add_term(c, v);
        }
        e
    }

    pub fn coeffs(&self) -> &BTreeMap<V, i64> {
        &self.coeffs
    }

    pub fn constant_term(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, v: &V) -> i64 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &V> {
        self.coeffs.keys()
    }

    pub fn add_term(&mut self, c: i64, v: V) {
        if c == 0 {
            return;
        }
        match self.coeffs.entry(v) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
        }
    }

    pub fn add_constant(&mut self, k: i64) {
        self.constant += k;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut e = self.clone();
        for (v, &c) in &other.coeffs {
            e.add_term(c, v.clone());
        }
        e.constant += other.constant;
        e
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: i64) -> Self {
        if k == 0 {
            return Self::constant(0);
        }
        LinExpr {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, &c)| (v.clone(), c * k))
                .collect(),
            constant: self.constant * k,
        }
    }

    /// Replace every variable through `f`, merging coefficients of variables that collide.
    pub fn map_vars<W: Ord + Clone>(&self, mut f: impl FnMut(&V) -> W) -> LinExpr<W> {
        let mut e = LinExpr::constant(self.constant);
        for (v, &c) in &self.coeffs {
            e.add_term(c, f(v));
        }
        e
    }

    /// Substitute each variable by an expression (variables mapped to `None` are kept).
    pub fn substitute<W: Ord + Clone>(&self, mut f: impl FnMut(&V) -> LinExpr<W>) -> LinExpr<W> {
        let mut e = LinExpr::constant(self.constant);
        for (v, &c) in &self.coeffs {
            e = e.add(&f(v).scale(c));
        }
        e
    }

    /// Evaluate under a partial valuation; `None` if some variable is unbound.
    pub fn eval(&self, mut val: impl FnMut(&V) -> Option<i64>) -> Option<i64> {
        let mut acc = self.constant as i128;
        for (v, &c) in &self.coeffs {
            acc += c as i128 * val(v)? as i128;
        }
        i64::try_from(acc).ok()
    }

    fn content(&self) -> i64 {
        self.coeffs.values().fold(0i64, |g, &c| g.gcd(&c))
    }
}

/// Relation of a normalized constraint `e ⋈ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConKind {
    /// `e ≤ 0`
    Le,
    /// `e = 0`
    Eq,
    /// `e ≠ 0`
    Ne,
}

/// Source-level comparison operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Rel {
    pub fn negate(self) -> Rel {
        match self {
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Eq => a == b,
            Rel::Ne => a != b,
            Rel::Ge => a >= b,
            Rel::Gt => a > b,
        }
    }
}

/// A linear constraint `expr ⋈ 0` in normal form: integer-tightened, gcd-reduced,
/// and (for `=`/`≠`) sign-normalized so the first coefficient is positive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinCon<V: Ord> {
    pub kind: ConKind,
    pub expr: LinExpr<V>,
}

/// Result of normalizing a constraint: it may collapse to a constant truth value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Normalized<V: Ord> {
    True,
    False,
    Con(LinCon<V>),
}

impl<V: Ord + Clone> LinCon<V> {
    /// Normalize `lhs rel rhs` over the integers.
    pub fn compare(lhs: &LinExpr<V>, rel: Rel, rhs: &LinExpr<V>) -> Normalized<V> {
        let d = lhs.sub(rhs);
        match rel {
            Rel::Le => Self::normalize(ConKind::Le, d),
            // a < b  ⇔  a - b + 1 ≤ 0
            Rel::Lt => {
                let mut d = d;
                d.add_constant(1);
                Self::normalize(ConKind::Le, d)
            }
            Rel::Ge => Self::normalize(ConKind::Le, d.scale(-1)),
            Rel::Gt => {
                let mut d = d.scale(-1);
                d.add_constant(1);
                Self::normalize(ConKind::Le, d)
            }
            Rel::Eq => Self::normalize(ConKind::Eq, d),
            Rel::Ne => Self::normalize(ConKind::Ne, d),
        }
    }

    pub fn normalize(kind: ConKind, expr: LinExpr<V>) -> Normalized<V> {
        if expr.is_constant() {
            let k = expr.constant;
            let holds = match kind {
                ConKind::Le => k <= 0,
                ConKind::Eq => k == 0,
                ConKind::Ne => k != 0,
            };
            return if holds {
                Normalized::True
            } else {
                Normalized::False
            };
        }
        let g = expr.content().abs();
        let k = expr.constant;
        let mut coeffs: BTreeMap<V, i64> =
            expr.coeffs.into_iter().map(|(v, c)| (v, c / g)).collect();
        let constant = match kind {
            // g·e' + k ≤ 0  ⇔  e' + ⌈k/g⌉ ≤ 0
            ConKind::Le => Integer::div_ceil(&k, &g),
            ConKind::Eq => {
                if k % g != 0 {
                    return Normalized::False;
                }
                k / g
            }
            ConKind::Ne => {
                if k % g != 0 {
                    return Normalized::True;
                }
                k / g
            }
        };
        let mut constant = constant;
        if kind != ConKind::Le {
            let first = *coeffs.values().next().expect("non-constant");
            if first < 0 {
                for c in coeffs.values_mut() {
                    *c = -*c;
                }
                constant = -constant;
            }
        }
        Normalized::Con(LinCon {
            kind,
            expr: LinExpr { coeffs, constant },
        })
    }

    /// Re-normalize after a variable renaming.
    pub fn map_vars<W: Ord + Clone>(&self, f: impl FnMut(&V) -> W) -> Normalized<W> {
        LinCon::normalize(self.kind, self.expr.map_vars(f))
    }

    pub fn substitute<W: Ord + Clone>(&self, f: impl FnMut(&V) -> LinExpr<W>) -> Normalized<W> {
        LinCon::normalize(self.kind, self.expr.substitute(f))
    }

    pub fn eval(&self, val: impl FnMut(&V) -> Option<i64>) -> Option<bool> {
        let v = self.expr.eval(val)?;
        Some(match self.kind {
            ConKind::Le => v <= 0,
            ConKind::Eq => v == 0,
            ConKind::Ne => v != 0,
        })
    }

    /// The constraints whose disjunction is the negation of this one.
    pub fn negate(&self) -> Vec<Normalized<V>> {
        match self.kind {
            // ¬(e ≤ 0) ⇔ -e + 1 ≤ 0
            ConKind::Le => {
                let mut e = self.expr.scale(-1);
                e.add_constant(1);
                vec![LinCon::normalize(ConKind::Le, e)]
            }
            ConKind::Eq => vec![LinCon::normalize(ConKind::Ne, self.expr.clone())],
            ConKind::Ne => vec![LinCon::normalize(ConKind::Eq, self.expr.clone())],
        }
    }

    /// Split `e ≠ 0` into `e ≤ -1` or `e ≥ 1`.
    pub fn split_disequality(&self) -> Option<[Normalized<V>; 2]> {
        if self.kind != ConKind::Ne {
            return None;
        }
        let mut lo = self.expr.clone();
        lo.add_constant(1);
        let mut hi = self.expr.scale(-1);
        hi.add_constant(1);
        Some([
            LinCon::normalize(ConKind::Le, lo),
            LinCon::normalize(ConKind::Le, hi),
        ])
    }

    pub fn vars(&self) -> impl Iterator<Item = &V> {
        self.expr.vars()
    }
}

/// Render `Σ cᵢvᵢ` with the given variable printer (coefficients assumed positive).
pub(crate) fn write_sum<V: Ord>(
    f: &mut fmt::Formatter<'_>,
    terms: &[(&V, i64)],
    mut show: impl FnMut(&mut fmt::Formatter<'_>, &V) -> fmt::Result,
) -> fmt::Result {
    for (n, (v, c)) in terms.iter().enumerate() {
        if n > 0 {
            write!(f, " + ")?;
        }
        if *c != 1 {
            write!(f, "{c}*")?;
        }
        show(f, v)?;
    }
    Ok(())
}

/// Render `P ⋈ N + k` style text for a normalized constraint.
pub(crate) fn write_con<V: Ord>(
    f: &mut fmt::Formatter<'_>,
    con: &LinCon<V>,
    mut show: impl FnMut(&mut fmt::Formatter<'_>, &V) -> fmt::Result,
) -> fmt::Result {
    // Work with `e' ⋈' 0` where for Le we display -e ≥ 0.
    let (sign, rel_pos) = match con.kind {
        ConKind::Le => (-1, ">="),
        ConKind::Eq => (1, "="),
        ConKind::Ne => (1, "!="),
    };
    let pos: Vec<(&V, i64)> = con
        .expr
        .coeffs
        .iter()
        .filter(|(_, &c)| c * sign > 0)
        .map(|(v, &c)| (v, c * sign))
        .collect();
    let neg: Vec<(&V, i64)> = con
        .expr
        .coeffs
        .iter()
        .filter(|(_, &c)| c * sign < 0)
        .map(|(v, &c)| (v, -c * sign))
        .collect();
    // P - N + m ⋈ 0  ⇔  P ⋈ N + K with K = -m
    let k = -(con.expr.constant * sign);
    let write_rhs = |f: &mut fmt::Formatter<'_>,
                     k: i64,
                     show: &mut dyn FnMut(&mut fmt::Formatter<'_>, &V) -> fmt::Result|
     -> fmt::Result {
        if neg.is_empty() {
            write!(f, "{k}")
        } else {
            write_sum(f, &neg, |f, v| show(f, v))?;
            match k.cmp(&0) {
                std::cmp::Ordering::Greater => write!(f, " + {k}"),
                std::cmp::Ordering::Less => write!(f, " - {}", -k),
                std::cmp::Ordering::Equal => Ok(()),
            }
        }
    };
    if !pos.is_empty() {
        write_sum(f, &pos, &mut show)?;
        if con.kind == ConKind::Le && k == 1 {
            write!(f, " > ")?;
            write_rhs(f, 0, &mut show)
        } else {
            write!(f, " {rel_pos} ")?;
            write_rhs(f, k, &mut show)
        }
    } else {
        // 0 ≥ N + K  ⇔  N ≤ -K
        write_sum(f, &neg, &mut show)?;
        if -k == -1 {
            write!(f, " < 0")
        } else {
            write!(f, " <= {}", -k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> LinExpr<&'static str> {
        LinExpr::var("x")
    }

    #[test]
    fn strict_comparisons_tighten() {
        let c = LinCon::compare(&x(), Rel::Gt, &LinExpr::constant(0));
        // x > 0  ⇔  -x + 1 ≤ 0
        assert_eq!(
            c,
            Normalized::Con(LinCon {
                kind: ConKind::Le,
                expr: LinExpr::from_parts([("x", -1)], 1)
            })
        );
    }

    #[test]
    fn gcd_reduction_rounds_inequalities() {
        // 2x ≤ 3  ⇔  x ≤ 1
        let c = LinCon::compare(&x().scale(2), Rel::Le, &LinExpr::constant(3));
        assert_eq!(
            c,
            Normalized::Con(LinCon {
                kind: ConKind::Le,
                expr: LinExpr::from_parts([("x", 1)], -1)
            })
        );
        assert_eq!(
            LinCon::compare(&x().scale(2), Rel::Eq, &LinExpr::constant(3)),
            Normalized::False
        );
        assert_eq!(
            LinCon::compare(&x().scale(2), Rel::Ne, &LinExpr::constant(3)),
            Normalized::True
        );
    }

    #[test]
    fn equalities_are_sign_normalized() {
        let a = LinCon::compare(&x(), Rel::Eq, &LinExpr::var("y"));
        let b = LinCon::compare(&LinExpr::var("y"), Rel::Eq, &x());
        assert_eq!(a, b);
    }

    #[test]
    fn constant_constraints_collapse() {
        assert_eq!(
            LinCon::<&str>::compare(&LinExpr::constant(1), Rel::Lt, &LinExpr::constant(2)),
            Normalized::True
        );
        assert_eq!(
            LinCon::<&str>::compare(&LinExpr::constant(3), Rel::Lt, &LinExpr::constant(2)),
            Normalized::False
        );
    }

    #[test]
    fn add_term_drops_zeros() {
        let mut e = x();
        e.add_term(-1, "x");
        assert!(e.is_constant());
    }
}
