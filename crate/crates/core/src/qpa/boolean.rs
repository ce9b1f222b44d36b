use super::automaton::{Predicate, Qpa};
use super::formula::Formula;
use super::QpaError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    Intersection,
    Union,
    Complement,
}

/// Boolean combination of QPAs. Binary operations take the disjoint union of
/// vocabularies; complement De Morganizes start and transition bodies and flips
/// the accepting set (each `q` is reinterpreted as `q̄`).
pub fn compose_boolean(op: BoolOp, a: &Qpa, b: Option<&Qpa>) -> Result<Qpa, QpaError> {
    match op {
        BoolOp::Complement => Ok(complement(a)),
        BoolOp::Intersection | BoolOp::Union => {
            let b = b.ok_or(QpaError::MissingOperand)?;
            if a.alphabet != b.alphabet {
                return Err(QpaError::AlphabetMismatch);
            }
            Ok(product(a, b, op == BoolOp::Intersection))
        }
    }
}

pub fn intersection(a: &Qpa, b: &Qpa) -> Result<Qpa, QpaError> {
    compose_boolean(BoolOp::Intersection, a, Some(b))
}

pub fn union(a: &Qpa, b: &Qpa) -> Result<Qpa, QpaError> {
    compose_boolean(BoolOp::Union, a, Some(b))
}

pub fn complement(a: &Qpa) -> Qpa {
    let preds = a
        .preds
        .iter()
        .map(|p| Predicate {
            name: format!("~{}", p.name),
            arity: p.arity,
            accepting: !p.accepting,
        })
        .collect();
    let mut out = Qpa::new(preds, a.alphabet.clone()).expect("same arities");
    for p in 0..a.preds.len() {
        for l in 0..a.alphabet.len() {
            out.set_delta(p, l, a.delta(p, l).dual());
        }
    }
    out.start = a.start.dual();
    out
}

fn product(a: &Qpa, b: &Qpa, conj: bool) -> Qpa {
    let shift = a.preds.len();
    let mut preds = a.preds.clone();
    for p in &b.preds {
        let mut name = p.name.clone();
        while preds.iter().any(|q| q.name == name) {
            name.push('\'');
        }
        preds.push(Predicate { name, ..p.clone() });
    }
    let mut out = Qpa::new(preds, a.alphabet.clone()).expect("arities already checked");
    for l in 0..a.alphabet.len() {
        for p in 0..a.preds.len() {
            out.set_delta(p, l, a.delta(p, l).clone());
        }
        for p in 0..b.preds.len() {
            out.set_delta(p + shift, l, b.delta(p, l).map_preds(&|q| q + shift));
        }
    }
    let bs = b.start.map_preds(&|q| q + shift);
    out.start = if conj {
        Formula::and([a.start.clone(), bs])
    } else {
        Formula::or([a.start.clone(), bs])
    };
    out
}
