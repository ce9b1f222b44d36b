//! Fourier–Motzkin elimination over the integers with bound tightening.
//!
//! Used for three jobs: refuting conjunctions of linear constraints (the real
//! shadow with integer tightening is a sound refutation procedure), projecting
//! conjunctions onto a subset of variables (an over-approximation of the
//! integer projection), and searching for small integer models by back
//! substitution through the elimination sequence.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linear::{ConKind, LinCon, LinExpr, Normalized};

/// Rows beyond this count abandon an elimination step.
const ROW_CAP: usize = 4000;
/// Disequalities beyond this count are dropped instead of case-split.
const SPLIT_CAP: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Row<V: Ord> {
    coeffs: BTreeMap<V, BigInt>,
    constant: BigInt,
    /// `Σ + k = 0` when set, `Σ + k ≤ 0` otherwise.
    eq: bool,
}

enum Norm<V: Ord> {
    Trivial,
    Infeasible,
    Row(Row<V>),
}

impl<V: Ord + Clone> Row<V> {
    fn from_con(c: &LinCon<V>) -> Option<Row<V>> {
        let eq = match c.kind {
            ConKind::Le => false,
            ConKind::Eq => true,
            ConKind::Ne => return None,
        };
        Some(Row {
            coeffs: c
                .expr
                .coeffs()
                .iter()
                .map(|(v, &k)| (v.clone(), BigInt::from(k)))
                .collect(),
            constant: BigInt::from(c.expr.constant_term()),
            eq,
        })
    }

    fn normalize(mut self) -> Norm<V> {
        self.coeffs.retain(|_, c| !c.is_zero());
        if self.coeffs.is_empty() {
            let ok = if self.eq {
                self.constant.is_zero()
            } else {
                !self.constant.is_positive()
            };
            return if ok { Norm::Trivial } else { Norm::Infeasible };
        }
        let g = self.coeffs.values().fold(BigInt::zero(), |g, c| g.gcd(c));
        if !g.is_one() {
            if self.eq {
                if !(&self.constant % &g).is_zero() {
                    return Norm::Infeasible;
                }
                self.constant /= &g;
            } else {
                self.constant = Integer::div_ceil(&self.constant, &g);
            }
            for c in self.coeffs.values_mut() {
                *c /= &g;
            }
        }
        if self.eq && self.coeffs.values().next().is_some_and(|c| c.is_negative()) {
            for c in self.coeffs.values_mut() {
                *c = -&*c;
            }
            self.constant = -&self.constant;
        }
        Norm::Row(self)
    }

    fn coeff(&self, v: &V) -> BigInt {
        self.coeffs.get(v).cloned().unwrap_or_default()
    }

    /// `a·self + b·other`
    fn combine(&self, a: &BigInt, other: &Row<V>, b: &BigInt, eq: bool) -> Row<V> {
        let mut coeffs = BTreeMap::new();
        for (v, c) in &self.coeffs {
            *coeffs.entry(v.clone()).or_insert_with(BigInt::zero) += a * c;
        }
        for (v, c) in &other.coeffs {
            *coeffs.entry(v.clone()).or_insert_with(BigInt::zero) += b * c;
        }
        Row {
            coeffs,
            constant: a * &self.constant + b * &other.constant,
            eq,
        }
    }

    fn to_con(&self) -> Option<LinCon<V>> {
        let coeffs: Option<Vec<(V, i64)>> = self
            .coeffs
            .iter()
            .map(|(v, c)| c.to_i64().map(|c| (v.clone(), c)))
            .collect();
        let e = LinExpr::from_parts(coeffs?, self.constant.to_i64()?);
        match LinCon::normalize(if self.eq { ConKind::Eq } else { ConKind::Le }, e) {
            Normalized::Con(c) => Some(c),
            _ => None,
        }
    }

    fn eval(&self, val: &BTreeMap<V, BigInt>) -> Option<BigInt> {
        let mut s = self.constant.clone();
        for (v, c) in &self.coeffs {
            s += c * val.get(v)?;
        }
        Some(s)
    }
}

/// A conjunction of `≤`/`=` rows; `None` once proven infeasible.
#[derive(Clone, Debug)]
struct System<V: Ord> {
    rows: Option<BTreeSet<Row<V>>>,
}

impl<V: Ord + Clone> System<V> {
    fn new(rows: impl IntoIterator<Item = Row<V>>) -> System<V> {
        let mut s = System {
            rows: Some(BTreeSet::new()),
        };
        for r in rows {
            s.add(r);
        }
        s.simplify();
        s
    }

    fn add(&mut self, r: Row<V>) {
        let Some(rows) = &mut self.rows else { return };
        match r.normalize() {
            Norm::Trivial => {}
            Norm::Infeasible => self.rows = None,
            Norm::Row(r) => {
                rows.insert(r);
            }
        }
    }

    /// Keep the tightest `≤` row per direction and detect contradictory or
    /// equality-forming opposite pairs.
    fn simplify(&mut self) {
        let Some(rows) = self.rows.take() else { return };
        let mut le: BTreeMap<BTreeMap<V, BigInt>, BigInt> = BTreeMap::new();
        let mut eqs: BTreeSet<Row<V>> = BTreeSet::new();
        for r in rows {
            if r.eq {
                eqs.insert(r);
            } else {
                let e = le.entry(r.coeffs).or_insert_with(|| r.constant.clone());
                if r.constant > *e {
                    *e = r.constant;
                }
            }
        }
        let mut out = BTreeSet::new();
        for (coeffs, k) in &le {
            let neg: BTreeMap<V, BigInt> = coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect();
            if let Some(k2) = le.get(&neg) {
                // e + k ≤ 0 and -e + k2 ≤ 0  ⇒  k2 ≤ e ≤ -k
                if k2 > &-k {
                    self.rows = None;
                    return;
                }
                if *k2 == -k {
                    let r = Row {
                        coeffs: coeffs.clone(),
                        constant: k.clone(),
                        eq: true,
                    };
                    match r.normalize() {
                        Norm::Row(r) => {
                            eqs.insert(r);
                        }
                        Norm::Infeasible => {
                            self.rows = None;
                            return;
                        }
                        Norm::Trivial => {}
                    }
                    continue;
                }
            }
            out.insert(Row {
                coeffs: coeffs.clone(),
                constant: k.clone(),
                eq: false,
            });
        }
        out.extend(eqs);
        self.rows = Some(out);
    }

    fn vars(&self) -> BTreeSet<V> {
        self.rows
            .iter()
            .flatten()
            .flat_map(|r| r.coeffs.keys().cloned())
            .collect()
    }

    /// Eliminate `v`, returning the rows that constrained it (for back
    /// substitution) or `None` when the row cap was hit.
    fn eliminate(&mut self, v: &V) -> Option<Vec<Row<V>>> {
        let Some(rows) = self.rows.take() else {
            return Some(vec![]);
        };
        let (with, without): (Vec<Row<V>>, Vec<Row<V>>) =
            rows.into_iter().partition(|r| r.coeffs.contains_key(v));
        let mut next: Vec<Row<V>> = without;
        // prefer an equality with the smallest coefficient on v
        let pivot = with
            .iter()
            .filter(|r| r.eq)
            .min_by_key(|r| r.coeff(v).abs())
            .cloned();
        if let Some(p) = pivot {
            let a = p.coeff(v);
            for r in with.iter().filter(|r| **r != p) {
                let b = r.coeff(v);
                // |a|·r − sign(a)·b·p removes v and keeps the direction of r
                let sa = if a.is_positive() {
                    BigInt::one()
                } else {
                    -BigInt::one()
                };
                next.push(r.combine(&a.abs(), &p, &(-(sa * b)), r.eq));
            }
        } else {
            let pos: Vec<&Row<V>> = with.iter().filter(|r| r.coeff(v).is_positive()).collect();
            let neg: Vec<&Row<V>> = with.iter().filter(|r| r.coeff(v).is_negative()).collect();
            if next.len() + pos.len() * neg.len() > ROW_CAP {
                self.rows = Some(next.into_iter().collect());
                return None;
            }
            for p in &pos {
                for n in &neg {
                    next.push(p.combine(&-n.coeff(v), n, &p.coeff(v), false));
                }
            }
        }
        *self = System::new(next);
        Some(with)
    }

    /// Cheapest next variable: equality-defined first, then least |P|·|N|.
    fn choose(&self, candidates: &BTreeSet<V>) -> Option<V> {
        let rows = self.rows.as_ref()?;
        candidates
            .iter()
            .min_by_key(|v| {
                let (mut p, mut n, mut e) = (0usize, 0usize, false);
                for r in rows {
                    let c = r.coeff(v);
                    if c.is_zero() {
                        continue;
                    }
                    if r.eq {
                        e = true;
                    } else if c.is_positive() {
                        p += 1;
                    } else {
                        n += 1;
                    }
                }
                if e {
                    (0, 0)
                } else {
                    (1, p * n)
                }
            })
            .cloned()
    }
}

fn split<V: Ord + Clone>(cons: &[LinCon<V>]) -> (Vec<Row<V>>, Vec<&LinCon<V>>) {
    let mut rows = Vec::new();
    let mut nes = Vec::new();
    for c in cons {
        match Row::from_con(c) {
            Some(r) => rows.push(r),
            None => nes.push(c),
        }
    }
    (rows, nes)
}

fn refutes_rows<V: Ord + Clone>(rows: Vec<Row<V>>) -> bool {
    let mut s = System::new(rows);
    loop {
        if s.rows.is_none() {
            return true;
        }
        let vars = s.vars();
        let Some(v) = s.choose(&vars) else {
            return false;
        };
        if s.eliminate(&v).is_none() {
            return false;
        }
    }
}

/// True when the conjunction has no integer solution (sound, incomplete).
/// Disequalities are case-split into `< ` and `>` while few enough.
pub fn refutes<V: Ord + Clone>(cons: &[LinCon<V>]) -> bool {
    let (rows, nes) = split(cons);
    let nes: Vec<&LinCon<V>> = nes.into_iter().take(SPLIT_CAP).collect();
    fn go<V: Ord + Clone>(rows: Vec<Row<V>>, nes: &[&LinCon<V>]) -> bool {
        let Some((ne, rest)) = nes.split_first() else {
            return refutes_rows(rows);
        };
        let Some(halves) = ne.split_disequality() else {
            return go(rows, rest);
        };
        halves.into_iter().all(|h| match h {
            Normalized::False => true,
            Normalized::True => go(rows.clone(), rest),
            Normalized::Con(c) => {
                let mut r = rows.clone();
                r.extend(Row::from_con(&c));
                go(r, rest)
            }
        })
    }
    go(rows, &nes)
}

/// Project onto the variables satisfying `keep`. The result is implied by
/// the input (over the integers); disequalities mentioning an eliminated
/// variable are dropped. Returns `[false]`-style `None` when infeasible.
pub fn project<V: Ord + Clone>(
    cons: &[LinCon<V>],
    keep: impl Fn(&V) -> bool,
) -> Option<Vec<LinCon<V>>> {
    let (rows, nes) = split(cons);
    let mut s = System::new(rows);
    loop {
        s.rows.as_ref()?;
        let gone: BTreeSet<V> = s.vars().into_iter().filter(|v| !keep(v)).collect();
        let Some(v) = s.choose(&gone) else { break };
        if s.eliminate(&v).is_none() {
            // over the cap: drop every row still mentioning v (sound weakening)
            if let Some(rows) = &mut s.rows {
                rows.retain(|r| !r.coeffs.contains_key(&v));
            }
        }
    }
    let mut out: Vec<LinCon<V>> = s.rows.iter().flatten().filter_map(Row::to_con).collect();
    out.extend(nes.into_iter().filter(|c| c.vars().all(&keep)).cloned());
    out.sort();
    out.dedup();
    Some(out)
}

/// Search for an integer model by eliminating all variables and assigning them
/// in reverse, preferring values of small magnitude inside `range` (bounds
/// forced by the constraints are always tried). `budget` caps the search.
pub fn integer_model<V: Ord + Clone>(
    cons: &[LinCon<V>],
    range: (i64, i64),
    budget: usize,
) -> Option<BTreeMap<V, i64>> {
    let (rows, _) = split(cons);
    let all_vars: BTreeSet<V> = cons.iter().flat_map(|c| c.vars().cloned()).collect();
    let mut s = System::new(rows);
    let mut steps: Vec<(V, Vec<Row<V>>)> = Vec::new();
    loop {
        s.rows.as_ref()?;
        let vars = s.vars();
        let Some(v) = s.choose(&vars) else { break };
        let defining = s.eliminate(&v)?;
        steps.push((v, defining));
    }
    // variables that dropped out without being eliminated are assigned first
    let eliminated: BTreeSet<V> = steps.iter().map(|(v, _)| v.clone()).collect();
    let mut order: Vec<(V, Vec<Row<V>>)> = all_vars
        .iter()
        .filter(|v| !eliminated.contains(*v))
        .map(|v| (v.clone(), vec![]))
        .collect();
    order.extend(steps.into_iter().rev());
    let mut val: BTreeMap<V, BigInt> = BTreeMap::new();
    let mut budget = budget;
    if assign(&order, 0, cons, range, &mut val, &mut budget) {
        val.into_iter()
            .map(|(v, x)| x.to_i64().map(|x| (v, x)))
            .collect()
    } else {
        None
    }
}

fn assign<V: Ord + Clone>(
    order: &[(V, Vec<Row<V>>)],
    k: usize,
    cons: &[LinCon<V>],
    range: (i64, i64),
    val: &mut BTreeMap<V, BigInt>,
    budget: &mut usize,
) -> bool {
    if k == order.len() {
        return cons
            .iter()
            .all(|c| c.eval(|v| val.get(v).and_then(|x| x.to_i64())) == Some(true));
    }
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let (v, rows) = &order[k];
    let (mut lo, mut hi): (Option<BigInt>, Option<BigInt>) = (None, None);
    let mut exact: Option<BigInt> = None;
    for r in rows {
        let a = r.coeff(v);
        let mut rest = r.clone();
        rest.coeffs.remove(v);
        let Some(s) = rest.eval(val) else { continue };
        if r.eq {
            // a·v + s = 0
            if !(&s % &a).is_zero() {
                return false;
            }
            let x = -(&s / &a);
            if exact.as_ref().is_some_and(|e| *e != x) {
                return false;
            }
            exact = Some(x);
        } else if a.is_positive() {
            // v ≤ floor(-s / a)
            let b = Integer::div_floor(&-s, &a);
            hi = Some(hi.map_or(b.clone(), |h: BigInt| h.min(b)));
        } else {
            // v ≥ ceil(s / -a)
            let b = Integer::div_ceil(&s, &-a);
            lo = Some(lo.map_or(b.clone(), |l: BigInt| l.max(b)));
        }
    }
    let candidates: Vec<BigInt> = match exact {
        Some(x) => vec![x],
        None => candidates(lo, hi, range),
    };
    for x in candidates {
        val.insert(v.clone(), x);
        let consistent = cons
            .iter()
            .all(|c| c.eval(|w| val.get(w).and_then(|x| x.to_i64())) != Some(false));
        if consistent && assign(order, k + 1, cons, range, val, budget) {
            return true;
        }
        if *budget == 0 {
            break;
        }
    }
    val.remove(v);
    false
}

/// Integers of `[lo, hi]` ordered by magnitude, restricted to `range` but
/// always including the finite bounds themselves.
fn candidates(lo: Option<BigInt>, hi: Option<BigInt>, range: (i64, i64)) -> Vec<BigInt> {
    if let (Some(l), Some(h)) = (&lo, &hi) {
        if l > h {
            return vec![];
        }
    }
    let (r0, r1) = (BigInt::from(range.0), BigInt::from(range.1));
    let from = lo.clone().map_or(r0.clone(), |l| l.max(r0.clone()));
    let to = hi.clone().map_or(r1.clone(), |h| h.min(r1.clone()));
    let mut out: Vec<BigInt> = Vec::new();
    let mut x = from.clone();
    while x <= to {
        out.push(x.clone());
        x += 1;
    }
    out.sort_by_key(|x| x.abs());
    for b in [lo, hi].into_iter().flatten() {
        if !out.contains(&b) {
            out.push(b);
        }
    }
    out
}
