//! Linear ranking functions for lasso loops via Farkas' lemma, solved in
//! exact rational arithmetic.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::linear::{ConKind, LinCon, LinExpr};
use crate::logic::vc::{Sym, SymExec};
use crate::logic::{Assertion, RankingFormula, Var};
use crate::program::IndexedCommand;
use crate::simplex::{Cmp, LinearProgram, LpOutcome};

/// Variables of the loop relation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum RelVar {
    Pre(Var),
    Post(Var),
    Aux(Sym),
}

/// Rows `a·z ≤ b` of the loop relation `support(pre) ∧ ρ(pre, aux, post)`.
struct Relation {
    rows: Vec<(BTreeMap<RelVar, i64>, i64)>,
    pre: Vec<Var>,
}

fn loop_relation(cycle: &[IndexedCommand], support: &Assertion) -> Relation {
    let mut exec = SymExec::new();
    exec.assume(support);
    exec.run(cycle);
    let mut vars: BTreeSet<Var> = support.vars().into_iter().filter(|v| !v.is_old()).collect();
    for ic in cycle {
        vars.extend(
            ic.command
                .mentions()
                .into_iter()
                .map(|v| v.instantiate(ic.thread)),
        );
    }
    let sym = |s: &Sym| {
        if s.version == 0 && !s.var.is_old() {
            RelVar::Pre(s.var.clone())
        } else {
            RelVar::Aux(s.clone())
        }
    };
    let mut cons: Vec<LinCon<RelVar>> = Vec::new();
    let mut push = |n: crate::linear::Normalized<RelVar>| {
        if let crate::linear::Normalized::Con(c) = n {
            cons.push(c);
        }
    };
    if !exec.feasible {
        // the relation is empty: `0 ≤ -1`
        return Relation {
            rows: vec![(BTreeMap::new(), -1)],
            pre: vars.into_iter().collect(),
        };
    }
    for c in &exec.constraints {
        push(c.map_vars(sym));
    }
    for v in &vars {
        let value = exec.value(v).map_vars(sym);
        push(LinCon::normalize(
            ConKind::Eq,
            LinExpr::var(RelVar::Post(v.clone())).sub(&value),
        ));
    }
    let mut rows = Vec::new();
    for c in cons {
        let coeffs: BTreeMap<RelVar, i64> = c.expr.coeffs().clone();
        let rhs = -c.expr.constant_term();
        match c.kind {
            ConKind::Le => rows.push((coeffs, rhs)),
            ConKind::Eq => {
                rows.push((coeffs.clone(), rhs));
                rows.push((coeffs.into_iter().map(|(v, a)| (v, -a)).collect(), -rhs));
            }
            // a disequality only weakens the relation when dropped
            ConKind::Ne => {}
        }
    }
    Relation {
        rows,
        pre: vars.into_iter().collect(),
    }
}

/// A linear ranking function `t` with bound `b` such that every execution of
/// the loop from a state satisfying `support` decreases `t` by at least one
/// and starts with `t ≥ b`; `None` when no linear ranking function exists for
/// the loop relation (the Farkas system is infeasible).
pub fn synthesize_linear_ranking(
    cycle: &[IndexedCommand],
    support: &Assertion,
) -> Option<RankingFormula> {
    let rel = loop_relation(cycle, support);
    let m = rel.pre.len();
    let r = rel.rows.len();
    // columns: r⁺ (m), r⁻ (m), λ (r), μ (r)
    let (rp, rm, lam, mu) = (0, m, 2 * m, 2 * m + r);
    let mut lp = LinearProgram::new(2 * m + 2 * r);
    let mut columns: BTreeSet<RelVar> = rel
        .rows
        .iter()
        .flat_map(|(c, _)| c.keys().cloned())
        .collect();
    for v in &rel.pre {
        columns.insert(RelVar::Pre(v.clone()));
        columns.insert(RelVar::Post(v.clone()));
    }
    let pre_index = |v: &Var| rel.pre.iter().position(|w| w == v);
    for z in &columns {
        // λ·A = (-r on pre, r on post, 0 on aux);  μ·A = (-r on pre, 0 elsewhere)
        let mut dec: Vec<(usize, i64)> = Vec::new();
        let mut bnd: Vec<(usize, i64)> = Vec::new();
        for (i, (coeffs, _)) in rel.rows.iter().enumerate() {
            if let Some(&a) = coeffs.get(z) {
                dec.push((lam + i, a));
                bnd.push((mu + i, a));
            }
        }
        match z {
            RelVar::Pre(v) => {
                let j = pre_index(v).expect("pre variable");
                dec.extend([(rp + j, 1), (rm + j, -1)]);
                bnd.extend([(rp + j, 1), (rm + j, -1)]);
            }
            RelVar::Post(v) => {
                let j = pre_index(v).expect("post variable has a pre copy");
                dec.extend([(rp + j, -1), (rm + j, 1)]);
            }
            RelVar::Aux(_) => {}
        }
        lp.add_row(&dec, Cmp::Eq, 0);
        lp.add_row(&bnd, Cmp::Eq, 0);
    }
    // λ·b ≤ -1
    let lb: Vec<(usize, i64)> = rel
        .rows
        .iter()
        .enumerate()
        .map(|(i, (_, b))| (lam + i, *b))
        .collect();
    lp.add_row(&lb, Cmp::Le, -1);
    // prefer the ranking function of least 1-norm
    for j in 0..2 * m {
        lp.objective[j] = crate::simplex::rat(-1);
    }
    let LpOutcome::Optimal { x, .. } = lp.solve() else {
        return None;
    };
    let coeffs: Vec<BigRational> = (0..m).map(|j| &x[rp + j] - &x[rm + j]).collect();
    // μ·A z ≤ μ·b gives r·pre ≥ -μ·b
    let bound: BigRational = -rel
        .rows
        .iter()
        .enumerate()
        .map(|(i, (_, b))| &x[mu + i] * crate::simplex::rat(*b))
        .fold(BigRational::zero(), |a, b| a + b);
    let scale = coeffs
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, c| acc.lcm(c.denom()));
    let scaled: Vec<num_bigint::BigInt> = coeffs
        .iter()
        .map(|c| (c * BigRational::from_integer(scale.clone())).to_integer())
        .collect();
    let g = scaled
        .iter()
        .fold(num_bigint::BigInt::zero(), |acc, c| acc.gcd(c));
    let g = if g.is_zero() {
        num_bigint::BigInt::from(1)
    } else {
        g
    };
    let factor = BigRational::new(scale, g.clone());
    let term = LinExpr::from_parts(
        rel.pre
            .iter()
            .zip(&scaled)
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| (v.clone(), (c / &g).to_i64().expect("small coefficient"))),
        0,
    );
    let b = (bound * factor).ceil().to_integer();
    let b = if !b.is_negative() { 0 } else { b.to_i64()? };
    Some(RankingFormula::new(term, b))
}
