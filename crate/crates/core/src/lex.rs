//! A small shared tokenizer used by the program, assertion, QPA and QLTL readers.

use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Punct(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// A parse error with a 1-based source position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

const PUNCTS: &[&str] = &[
    "<=", ">=", "==", "!=", "->", ":=", "++", "&&", "||", "<", ">", "=", "+", "-", "*", "(", ")",
    "{", "}", "[", "]", ";", ",", ".", "!", "&", "|", ":", "@", "$", "/", "~",
];

pub fn tokenize(src: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| SyntaxError {
                line: l0,
                col: c0,
                msg: format!("integer literal `{text}` out of range"),
            })?;
            col += i - start;
            out.push(Spanned {
                tok: Tok::Int(n),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\n' {
                    return Err(SyntaxError {
                        line: l0,
                        col: c0,
                        msg: "unterminated string".into(),
                    });
                }
                i += 1;
            }
            if i == chars.len() {
                return Err(SyntaxError {
                    line: l0,
                    col: c0,
                    msg: "unterminated string".into(),
                });
            }
            let s: String = chars[start..i].iter().collect();
            i += 1;
            col += s.chars().count() + 2;
            out.push(Spanned {
                tok: Tok::Str(s),
                line: l0,
                col: c0,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let p = PUNCTS
            .iter()
            .find(|p| rest.starts_with(**p))
            .ok_or_else(|| SyntaxError {
                line: l0,
                col: c0,
                msg: format!("unexpected character `{c}`"),
            })?;
        i += p.len();
        col += p.len();
        out.push(Spanned {
            tok: Tok::Punct(p),
            line: l0,
            col: c0,
        });
    }
    Ok(out)
}

/// Token cursor with error helpers.
pub struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Cursor {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        let toks = tokenize(src)?;
        let lines = src.lines().count().max(1);
        let last_len = src.lines().last().map(|l| l.chars().count()).unwrap_or(0);
        Ok(Cursor {
            toks,
            pos: 0,
            end: (lines, last_len + 1),
        })
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|s| &s.tok)
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    /// Current token index, for use with [`Cursor::text_since`].
    pub fn mark(&self) -> usize {
        self.pos
    }

    /// Source-like text of the tokens consumed since `mark`, without whitespace.
    pub fn text_since(&self, mark: usize) -> String {
        self.toks[mark..self.pos]
            .iter()
            .map(|s| match &s.tok {
                Tok::Ident(x) => x.clone(),
                Tok::Int(n) => n.to_string(),
                Tok::Str(x) => format!("\"{x}\""),
                Tok::Punct(p) => p.to_string(),
            })
            .collect()
    }

    pub fn position(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.end)
    }

    pub fn error(&self, msg: impl Into<String>) -> SyntaxError {
        let (line, col) = self.position();
        SyntaxError {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub fn unexpected(&self, wanted: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(q)) if q == s)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, s: &str) -> bool {
        if self.is_ident(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    pub fn expect_keyword(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat_ident(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn expect_int(&mut self) -> Result<i64, SyntaxError> {
        let neg = self.eat_punct("-");
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    pub fn expect_end(&self) -> Result<(), SyntaxError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_operators_and_positions() {
        let toks = tokenize("x <= 3 // c\n  m = t++;").unwrap();
        assert_eq!(toks[1].tok, Tok::Punct("<="));
        assert_eq!((toks[3].line, toks[3].col), (2, 3));
        assert_eq!(toks[6].tok, Tok::Punct("++"));
    }

    #[test]
    fn rejects_stray_characters() {
        let e = tokenize("x ? y").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
    }
}
