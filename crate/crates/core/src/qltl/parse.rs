//! Text syntax: `G F X U R ! & | ->`, `forall i.`, `exists i.`, atoms
//! `exec[<command>](i)`, `i = j`, `i != j`, `true`, `false`. `#` and `//`
//! start comments.

use super::{Qltl, QltlError};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    /// The bracketed command name of an `exec[...]` atom.
    Exec(String),
    Punct(&'static str),
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

fn lex(text: &str) -> Result<Lexer, QltlError> {
    let mut toks = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let err = |line, col, msg: &str| QltlError::Syntax {
        line,
        col,
        msg: msg.into(),
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
        } else if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let word: String = chars[start..i].iter().collect();
            if word == "exec" {
                if chars.get(i) != Some(&'[') {
                    return Err(err(line, col, "expected `[` after `exec`"));
                }
                let mut depth = 0;
                let start = i + 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(l0, c0, "unterminated command name")),
                        Some('[') => depth += 1,
                        Some(']') => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        _ => {}
                    }
                    advance(&mut i, &mut line, &mut col, 1);
                }
                let name: String = chars[start..i]
                    .iter()
                    .collect::<String>()
                    .trim()
                    .to_string();
                advance(&mut i, &mut line, &mut col, 1);
                toks.push((Tok::Exec(name), l0, c0));
            } else {
                toks.push((Tok::Ident(word), l0, c0));
            }
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let p = [
                "->", "!=", "&&", "||", "(", ")", ".", "!", "&", "|", "=", "~",
            ]
            .into_iter()
            .find(|p| rest.starts_with(p))
            .ok_or_else(|| err(line, col, &format!("unexpected character `{c}`")))?;
            let len = p.len();
            let p = match p {
                "&&" => "&",
                "||" => "|",
                "~" => "!",
                p => p,
            };
            advance(&mut i, &mut line, &mut col, len);
            toks.push((Tok::Punct(p), l0, c0));
        }
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end: (line, col),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn err(&self, msg: &str) -> QltlError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|t| (t.1, t.2))
            .unwrap_or(self.end);
        QltlError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Punct(q)) if *q == p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(q)) if q == w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), QltlError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{p}`")))
        }
    }

    fn variable(&mut self) -> Result<String, QltlError> {
        match self.peek() {
            Some(Tok::Ident(w)) if !is_keyword(w) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.err("expected a thread variable")),
        }
    }

    fn implication(&mut self) -> Result<Qltl, QltlError> {
        let lhs = self.disjunction()?;
        if self.eat_punct("->") {
            let rhs = self.implication()?;
            return Ok(Qltl::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Qltl, QltlError> {
        let mut f = self.conjunction()?;
        while self.eat_punct("|") {
            f = Qltl::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Qltl, QltlError> {
        let mut f = self.binary_temporal()?;
        while self.eat_punct("&") {
            f = Qltl::and(f, self.binary_temporal()?);
        }
        Ok(f)
    }

    fn binary_temporal(&mut self) -> Result<Qltl, QltlError> {
        let lhs = self.unary()?;
        if self.eat_ident("U") {
            return Ok(Qltl::until(lhs, self.binary_temporal()?));
        }
        if self.eat_ident("R") {
            return Ok(Qltl::release(lhs, self.binary_temporal()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Qltl, QltlError> {
        if self.eat_punct("!") {
            return Ok(Qltl::not(self.unary()?));
        }
        for (kw, make) in [
            ("G", Qltl::always as fn(Qltl) -> Qltl),
            ("F", Qltl::eventually),
            ("X", Qltl::next),
        ] {
            if self.eat_ident(kw) {
                return Ok(make(self.unary()?));
            }
        }
        for (kw, forall) in [("forall", true), ("exists", false)] {
            if self.eat_ident(kw) {
                let v = self.variable()?;
                self.expect_punct(".")?;
                let body = self.implication()?;
                return Ok(if forall {
                    Qltl::forall(&v, body)
                } else {
                    Qltl::exists(&v, body)
                });
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Qltl, QltlError> {
        match self.peek().cloned() {
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                let f = self.implication()?;
                self.expect_punct(")")?;
                Ok(f)
            }
            Some(Tok::Exec(command)) => {
                self.pos += 1;
                self.expect_punct("(")?;
                let var = self.variable()?;
                self.expect_punct(")")?;
                Ok(Qltl::Exec { command, var })
            }
            Some(Tok::Ident(w)) if w == "true" => {
                self.pos += 1;
                Ok(Qltl::True)
            }
            Some(Tok::Ident(w)) if w == "false" => {
                self.pos += 1;
                Ok(Qltl::False)
            }
            Some(Tok::Ident(_)) => {
                let a = self.variable()?;
                if self.eat_punct("=") {
                    Ok(Qltl::Eq(a, self.variable()?))
                } else if self.eat_punct("!=") {
                    Ok(Qltl::not(Qltl::Eq(a, self.variable()?)))
                } else {
                    Err(self.err("expected `=` or `!=` after a thread variable"))
                }
            }
            _ => Err(self.err("expected a formula")),
        }
    }
}

fn is_keyword(w: &str) -> bool {
    matches!(
        w,
        "G" | "F" | "X" | "U" | "R" | "forall" | "exists" | "true" | "false" | "exec"
    )
}

/// Parse a QLTL formula and check that no quantifier sits under a temporal modality.
pub fn parse_qltl(text: &str) -> Result<Qltl, QltlError> {
    let mut lx = lex(text)?;
    let f = lx.implication()?;
    if lx.pos != lx.toks.len() {
        return Err(lx.err("unexpected trailing input"));
    }
    f.check_quantifier_placement()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn parses_bracketed_command_names() {
        let f = parse_qltl("exists i. F G !exec[[m<=s]](i)").unwrap();
        assert_eq!(
            f,
            Qltl::exists(
                "i",
                Qltl::eventually(Qltl::always(Qltl::not(Qltl::exec("[m<=s]", "i"))))
            )
        );
        let f = parse_qltl(corpus::TICKET_NEGATED_PROPERTY).unwrap();
        assert_eq!(f.commands().len(), 4);
        assert!(f.free_vars().is_empty());
    }

    #[test]
    fn precedence_and_display_round_trip() {
        for s in [
            "forall i. G (exec[a](i) -> F exec[b](i))",
            "exists i. exists j. i != j & exec[a](i) U exec[b](j)",
            "X true | !false & (a = b)",
        ] {
            let f = parse_qltl(s).unwrap();
            assert_eq!(parse_qltl(&f.to_string()).unwrap(), f, "{s}");
        }
        let f = parse_qltl("exec[a](i) & exec[b](i) | exec[c](i)").unwrap();
        assert!(matches!(f, Qltl::Or(..)));
    }

    #[test]
    fn rejects_quantifiers_under_temporal_operators() {
        assert_eq!(
            parse_qltl("G exists i. exec[a](i)"),
            Err(QltlError::QuantifierUnderTemporal("i".into()))
        );
        assert!(matches!(
            parse_qltl("exec[a](i) &"),
            Err(QltlError::Syntax { .. })
        ));
        assert!(matches!(
            parse_qltl("exec[a(i)"),
            Err(QltlError::Syntax { .. })
        ));
    }
}
