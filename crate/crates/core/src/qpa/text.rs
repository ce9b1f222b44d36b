//! QPA interchange format.
//!
//! ```text
//! alphabet a b $
//! pred q/1 accepting
//! start exists i. q(i)
//! delta q(i) a:j := i = j | q(i)
//! delta q(i) * := q(i)          # every letter without its own line
//! ```
//! Predicate names that are not identifiers are written in double quotes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::lex::{Cursor, SyntaxError, Tok};

use super::automaton::{Predicate, Qpa};
use super::formula::{Formula, QVar};
use super::QpaError;

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
        && cs.all(|c| c.is_alphanumeric() || c == '_')
}

fn quote(name: &str) -> String {
    if is_ident(name) && !matches!(name, "forall" | "exists" | "true" | "false") {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> QpaError {
    QpaError::Syntax(SyntaxError {
        line,
        col: 1,
        msg: msg.into(),
    })
}

/// Split a leading predicate application `name(args)` off `s`.
fn split_app(s: &str, line: usize) -> Result<(String, Vec<String>, &str), QpaError> {
    let s = s.trim_start();
    let (name, rest) = if let Some(r) = s.strip_prefix('"') {
        let end = r
            .find('"')
            .ok_or_else(|| syntax(line, "unterminated predicate name"))?;
        (r[..end].to_string(), &r[end + 1..])
    } else {
        let end = s
            .find(|c: char| !(c.is_alphanumeric() || c == '_'))
            .unwrap_or(s.len());
        if end == 0 {
            return Err(syntax(line, "expected predicate name"));
        }
        (s[..end].to_string(), &s[end..])
    };
    if let Some(r) = rest.strip_prefix('(') {
        let end = r
            .find(')')
            .ok_or_else(|| syntax(line, "unclosed argument list"))?;
        let args: Vec<String> = r[..end]
            .split(',')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        Ok((name, args, &r[end + 1..]))
    } else {
        Ok((name, vec![], rest))
    }
}

struct FormulaParser<'a> {
    preds: &'a [Predicate],
    scope: Vec<(String, QVar)>,
    next: QVar,
}

impl FormulaParser<'_> {
    fn var(&self, cur: &Cursor, name: &str) -> Result<QVar, SyntaxError> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| cur.error(format!("unbound variable `{name}`")))
    }

    fn or(&mut self, cur: &mut Cursor) -> Result<Formula, SyntaxError> {
        let mut xs = vec![self.and(cur)?];
        while cur.eat_punct("|") || cur.eat_punct("||") {
            xs.push(self.and(cur)?);
        }
        Ok(if xs.len() == 1 {
            xs.pop().unwrap()
        } else {
            Formula::Or(xs)
        })
    }

    fn and(&mut self, cur: &mut Cursor) -> Result<Formula, SyntaxError> {
        let mut xs = vec![self.unary(cur)?];
        while cur.eat_punct("&") || cur.eat_punct("&&") {
            xs.push(self.unary(cur)?);
        }
        Ok(if xs.len() == 1 {
            xs.pop().unwrap()
        } else {
            Formula::And(xs)
        })
    }

    fn unary(&mut self, cur: &mut Cursor) -> Result<Formula, SyntaxError> {
        for (kw, universal) in [("forall", true), ("exists", false)] {
            if cur.eat_ident(kw) {
                let mut vs = Vec::new();
                loop {
                    let n = cur.expect_ident()?;
                    let v = self.next;
                    self.next += 1;
                    self.scope.push((n, v));
                    vs.push(v);
                    if !cur.eat_punct(",") && !matches!(cur.peek(), Some(Tok::Ident(_))) {
                        break;
                    }
                }
                cur.expect_punct(".")?;
                let body = self.or(cur)?;
                for _ in &vs {
                    self.scope.pop();
                }
                return Ok(vs.into_iter().rev().fold(body, |b, v| {
                    if universal {
                        Formula::Forall(v, Box::new(b))
                    } else {
                        Formula::Exists(v, Box::new(b))
                    }
                }));
            }
        }
        if cur.eat_punct("(") {
            let f = self.or(cur)?;
            cur.expect_punct(")")?;
            return Ok(f);
        }
        if cur.eat_ident("true") {
            return Ok(Formula::True);
        }
        if cur.eat_ident("false") {
            return Ok(Formula::False);
        }
        let name = match cur.next() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => s,
            _ => return Err(cur.unexpected("formula")),
        };
        if cur.is_punct("=") || cur.is_punct("==") || cur.is_punct("!=") {
            let eq = !cur.eat_punct("!=");
            if eq {
                cur.next();
            }
            let other = cur.expect_ident()?;
            let (a, b) = (self.var(cur, &name)?, self.var(cur, &other)?);
            return Ok(if eq {
                Formula::Eq(a, b)
            } else {
                Formula::Ne(a, b)
            });
        }
        let p = self
            .preds
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| cur.error(format!("unknown predicate `{name}`")))?;
        let mut args = Vec::new();
        if cur.eat_punct("(")
            && !cur.eat_punct(")") {
                loop {
                    let a = cur.expect_ident()?;
                    args.push(self.var(cur, &a)?);
                    if cur.eat_punct(")") {
                        break;
                    }
                    cur.expect_punct(",")?;
                }
            }
        if args.len() != self.preds[p].arity {
            return Err(cur.error(format!("`{name}` has arity {}", self.preds[p].arity)));
        }
        Ok(Formula::Pred(p, args))
    }
}

fn parse_formula_with(
    text: &str,
    preds: &[Predicate],
    scope: Vec<(String, QVar)>,
    line: usize,
) -> Result<Formula, QpaError> {
    let relocate = |e: SyntaxError| QpaError::Syntax(SyntaxError { line, ..e });
    let mut cur = Cursor::new(text).map_err(relocate)?;
    let next = scope
        .iter()
        .map(|(_, v)| *v + 1)
        .max()
        .unwrap_or(0)
        .max(MAX_FREE + 1);
    let mut p = FormulaParser { preds, scope, next };
    let f = p.or(&mut cur).map_err(relocate)?;
    cur.expect_end().map_err(relocate)?;
    Ok(f)
}

/// Bound variables are numbered above the transition-body slots.
const MAX_FREE: QVar = 16;

/// Parse a closed formula over the vocabulary of `qpa` (used for certificates).
pub fn parse_formula(qpa: &Qpa, text: &str) -> Result<Formula, QpaError> {
    let f = parse_formula_with(text, &qpa.preds, vec![], 1)?;
    if !f.free_vars().is_empty() {
        return Err(QpaError::NotClosed("formula".into()));
    }
    Ok(f)
}

pub fn parse_qpa(text: &str) -> Result<Qpa, QpaError> {
    let mut alphabet: Option<Vec<String>> = None;
    let mut preds: Vec<Predicate> = Vec::new();
    let mut start: Option<(String, usize)> = None;
    // (pred name, args, letter or None for wildcard, exec var, body, line)
    let mut deltas: Vec<(
        String,
        Vec<String>,
        Option<String>,
        Option<String>,
        String,
        usize,
    )> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let l = strip_comment(raw).trim();
        if l.is_empty() {
            continue;
        }
        let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match kw {
            "alphabet" => alphabet = Some(rest.split_whitespace().map(String::from).collect()),
            "pred" => {
                let (name, args, after) = split_app(rest, line)?;
                if !args.is_empty() {
                    return Err(syntax(line, "declare predicates as name/arity"));
                }
                let after = after.trim();
                let (ar, flag) = after
                    .strip_prefix('/')
                    .map(|r| r.split_once(char::is_whitespace).unwrap_or((r, "")))
                    .ok_or_else(|| syntax(line, "expected /arity"))?;
                let arity: usize = ar.trim().parse().map_err(|_| syntax(line, "bad arity"))?;
                let accepting = match flag.trim() {
                    "" => false,
                    "accepting" => true,
                    other => return Err(syntax(line, format!("unexpected `{other}`"))),
                };
                if preds.iter().any(|p| p.name == name) {
                    return Err(syntax(line, format!("duplicate predicate `{name}`")));
                }
                preds.push(Predicate {
                    name,
                    arity,
                    accepting,
                });
            }
            "start" => start = Some((rest.to_string(), line)),
            "delta" => {
                let (name, args, after) = split_app(rest, line)?;
                let (lhs, body) = after
                    .split_once(":=")
                    .ok_or_else(|| syntax(line, "expected `:=`"))?;
                let letter = lhs.trim();
                if letter.is_empty() || letter.contains(char::is_whitespace) {
                    return Err(syntax(line, "expected a single letter before `:=`"));
                }
                let (letter, exec) = match letter.rsplit_once(':') {
                    Some((l, v)) if is_ident(v) && !l.is_empty() => {
                        (l.to_string(), Some(v.to_string()))
                    }
                    _ => (letter.to_string(), None),
                };
                let letter = if letter == "*" { None } else { Some(letter) };
                deltas.push((name, args, letter, exec, body.to_string(), line));
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    let alphabet = alphabet.unwrap_or_else(|| {
        let mut a: Vec<String> = Vec::new();
        for d in &deltas {
            if let Some(l) = &d.2 {
                if l != "$" && !a.contains(l) {
                    a.push(l.clone());
                }
            }
        }
        a.push("$".into());
        a
    });
    let mut qpa = Qpa::new(preds.clone(), alphabet.clone())?;
    let mut explicit: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut wildcard: Vec<(usize, Formula)> = Vec::new();
    for (name, args, letter, exec, body, line) in deltas {
        let p = qpa
            .pred_index(&name)
            .ok_or_else(|| syntax(line, format!("unknown predicate `{name}`")))?;
        if args.len() != preds[p].arity {
            return Err(syntax(
                line,
                format!("`{name}` has arity {}", preds[p].arity),
            ));
        }
        let mut scope: Vec<(String, QVar)> = Vec::new();
        if let Some(e) = exec {
            scope.push((e, 0));
        }
        for (k, a) in args.iter().enumerate() {
            scope.push((a.clone(), k as QVar + 1));
        }
        let f = parse_formula_with(&body, &preds, scope, line)?;
        match letter {
            Some(l) => {
                let li = qpa
                    .letter(&l)
                    .ok_or_else(|| syntax(line, format!("letter `{l}` is not in the alphabet")))?;
                if explicit.insert((p, li), line).is_some() {
                    return Err(syntax(line, "duplicate transition"));
                }
                qpa.set_delta(p, li, f);
            }
            None => wildcard.push((p, f)),
        }
    }
    for (p, f) in wildcard {
        for li in 0..alphabet.len() {
            if !explicit.contains_key(&(p, li)) {
                qpa.set_delta(p, li, f.clone());
            }
        }
    }
    let (s, line) = start.ok_or_else(|| syntax(1, "missing `start`"))?;
    qpa.start = parse_formula_with(&s, &preds, vec![], line)?;
    qpa.validate()?;
    Ok(qpa)
}

fn strip_comment(l: &str) -> &str {
    // `#` inside a quoted name is not a comment
    let mut in_str = false;
    for (i, c) in l.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '#' if !in_str => return &l[..i],
            _ => {}
        }
    }
    l
}

fn var_name(v: QVar) -> String {
    if v == 0 {
        "i0".into()
    } else if v <= MAX_FREE {
        format!("i{v}")
    } else {
        format!("v{v}")
    }
}

pub fn formula_to_text(qpa: &Qpa, f: &Formula) -> String {
    let mut s = String::new();
    write_formula(&mut s, qpa, f, 0);
    s
}

fn write_formula(out: &mut String, qpa: &Qpa, f: &Formula, prec: u8) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Pred(p, args) => {
            out.push_str(&quote(&qpa.preds[*p].name));
            if !args.is_empty() {
                let a: Vec<String> = args.iter().map(|&v| var_name(v)).collect();
                let _ = write!(out, "({})", a.join(", "));
            }
        }
        Formula::Eq(a, b) => {
            let _ = write!(out, "{} = {}", var_name(*a), var_name(*b));
        }
        Formula::Ne(a, b) => {
            let _ = write!(out, "{} != {}", var_name(*a), var_name(*b));
        }
        Formula::And(xs) | Formula::Or(xs) => {
            let (op, my) = if matches!(f, Formula::And(_)) {
                (" & ", 2)
            } else {
                (" | ", 1)
            };
            if prec > my {
                out.push('(');
            }
            for (n, x) in xs.iter().enumerate() {
                if n > 0 {
                    out.push_str(op);
                }
                write_formula(out, qpa, x, my + 1);
            }
            if prec > my {
                out.push(')');
            }
        }
        Formula::Forall(v, b) | Formula::Exists(v, b) => {
            let kw = if matches!(f, Formula::Forall(..)) {
                "forall"
            } else {
                "exists"
            };
            if prec > 0 {
                out.push('(');
            }
            let _ = write!(out, "{kw} {}. ", var_name(*v));
            write_formula(out, qpa, b, 0);
            if prec > 0 {
                out.push(')');
            }
        }
    }
}

/// Render in the interchange format (transitions that are `false` are omitted).
pub fn qpa_to_text(qpa: &Qpa) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "alphabet {}", qpa.alphabet.join(" "));
    for p in &qpa.preds {
        let _ = writeln!(
            out,
            "pred {}/{}{}",
            quote(&p.name),
            p.arity,
            if p.accepting { " accepting" } else { "" }
        );
    }
    let _ = writeln!(out, "start {}", formula_to_text(qpa, &qpa.start));
    for (pi, p) in qpa.preds.iter().enumerate() {
        for (li, l) in qpa.alphabet.iter().enumerate() {
            let body = qpa.delta(pi, li);
            if *body == Formula::False {
                continue;
            }
            let args: Vec<String> = (1..=p.arity as QVar).map(var_name).collect();
            let app = if args.is_empty() {
                quote(&p.name)
            } else {
                format!("{}({})", quote(&p.name), args.join(", "))
            };
            let _ = writeln!(out, "delta {app} {l}:i0 := {}", formula_to_text(qpa, body));
        }
    }
    out
}
