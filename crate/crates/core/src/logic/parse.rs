use crate::lex::{Cursor, SyntaxError, Tok};
use crate::linear::{LinExpr, Rel};

use super::{Assertion, Atom, RankingFormula, Var};

/// Parse a linear expression, delegating variable syntax to `var`.
pub fn parse_lin_expr<V: Ord + Clone>(
    cur: &mut Cursor,
    var: &mut dyn FnMut(&mut Cursor) -> Result<V, SyntaxError>,
) -> Result<LinExpr<V>, SyntaxError> {
    let mut e = LinExpr::constant(0);
    let mut sign = if cur.eat_punct("-") { -1 } else { 1 };
    loop {
        let t = parse_factor(cur, var)?;
        e = e.add(&t.scale(sign));
        if cur.eat_punct("+") {
            sign = 1;
        } else if cur.eat_punct("-") {
            sign = -1;
        } else {
            return Ok(e);
        }
    }
}

fn parse_factor<V: Ord + Clone>(
    cur: &mut Cursor,
    var: &mut dyn FnMut(&mut Cursor) -> Result<V, SyntaxError>,
) -> Result<LinExpr<V>, SyntaxError> {
    let base = match cur.peek() {
        Some(Tok::Int(n)) => {
            let n = *n;
            cur.next();
            if cur.eat_punct("*") {
                let rhs = parse_factor(cur, var)?;
                return Ok(rhs.scale(n));
            }
            LinExpr::constant(n)
        }
        Some(Tok::Punct("(")) => {
            cur.next();
            let e = parse_lin_expr(cur, var)?;
            cur.expect_punct(")")?;
            e
        }
        Some(Tok::Punct("-")) => {
            cur.next();
            parse_factor(cur, var)?.scale(-1)
        }
        Some(Tok::Ident(_)) => LinExpr::var(var(cur)?),
        _ => return Err(cur.unexpected("linear term")),
    };
    if cur.eat_punct("*") {
        match cur.next() {
            Some(Tok::Int(n)) => Ok(base.scale(n)),
            _ => {
                if base.is_constant() {
                    let rhs = parse_factor(cur, var)?;
                    Ok(rhs.scale(base.constant_term()))
                } else {
                    Err(cur.error("non-linear product"))
                }
            }
        }
    } else {
        Ok(base)
    }
}

pub fn parse_rel(cur: &mut Cursor) -> Result<Rel, SyntaxError> {
    let rel = match cur.peek() {
        Some(Tok::Punct("<")) => Rel::Lt,
        Some(Tok::Punct("<=")) => Rel::Le,
        Some(Tok::Punct("=")) | Some(Tok::Punct("==")) => Rel::Eq,
        Some(Tok::Punct("!=")) => Rel::Ne,
        Some(Tok::Punct(">=")) => Rel::Ge,
        Some(Tok::Punct(">")) => Rel::Gt,
        _ => return Err(cur.unexpected("comparison operator")),
    };
    cur.next();
    Ok(rel)
}

/// `x`, `d(1)`, `old(x)`, `old(d(1))`.
pub fn parse_var_at(cur: &mut Cursor) -> Result<Var, SyntaxError> {
    let name = cur.expect_ident()?;
    if name == "old" && cur.is_punct("(") {
        cur.next();
        let inner = parse_var_at(cur)?;
        cur.expect_punct(")")?;
        if inner.is_old() {
            return Err(cur.error("nested old(...)"));
        }
        return Ok(inner.old());
    }
    if cur.eat_punct("(") {
        let t = cur.expect_int()?;
        if t < 1 {
            return Err(cur.error("thread indices are positive"));
        }
        cur.expect_punct(")")?;
        return Ok(Var::Local(name.into(), t as u32));
    }
    Ok(Var::Global(name.into()))
}

fn parse_atom_at(cur: &mut Cursor) -> Result<Option<Atom>, SyntaxError> {
    if cur.eat_ident("true") {
        return Ok(None);
    }
    if cur.eat_ident("false") {
        return Ok(Some(Atom::False));
    }
    let lhs = parse_lin_expr(cur, &mut parse_var_at)?;
    let rel = parse_rel(cur)?;
    let rhs = parse_lin_expr(cur, &mut parse_var_at)?;
    Ok(Atom::compare(&lhs, rel, &rhs))
}

fn parse_assertion_at(cur: &mut Cursor) -> Result<Assertion, SyntaxError> {
    let mut out = Assertion::top();
    loop {
        if let Some(a) = parse_atom_at(cur)? {
            out.insert(a);
        }
        if !(cur.eat_punct(";") || cur.eat_punct("&") || cur.eat_punct("&&")) {
            return Ok(out);
        }
    }
}

pub fn parse_var(text: &str) -> Result<Var, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let v = parse_var_at(&mut cur)?;
    cur.expect_end()?;
    Ok(v)
}

/// Parse a single atom (`true` yields `None`).
pub fn parse_atom(text: &str) -> Result<Option<Atom>, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let a = parse_atom_at(&mut cur)?;
    cur.expect_end()?;
    Ok(a)
}

/// Parse `;`-separated atoms (`&` is accepted as well).
pub fn parse_assertion(text: &str) -> Result<Assertion, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    if cur.at_end() {
        return Ok(Assertion::top());
    }
    let a = parse_assertion_at(&mut cur)?;
    cur.expect_end()?;
    Ok(a)
}

/// Parse `<term> >= <int>` denoting `old(t) > t ∧ old(t) ≥ b`.
pub fn parse_ranking(text: &str) -> Result<RankingFormula, SyntaxError> {
    let mut cur = Cursor::new(text)?;
    let term = parse_lin_expr(&mut cur, &mut parse_var_at)?;
    cur.expect_punct(">=")?;
    let b = cur.expect_int()?;
    cur.expect_end()?;
    if term.vars().any(Var::is_old) {
        return Err(SyntaxError {
            line: 1,
            col: 1,
            msg: "ranking terms may not mention old-copies".into(),
        });
    }
    let k = term.constant_term();
    let mut t = term;
    t.add_constant(-k);
    Ok(RankingFormula::new(t, b - k))
}
