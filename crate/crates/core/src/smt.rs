//! Minimal SMT-LIB v2 client talking to an external solver over stdin/stdout.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("empty prover command")]
    EmptyCommand,
    #[error("failed to run prover `{0}`: {1}")]
    Spawn(String, std::io::Error),
    #[error("prover i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected prover answer: {0}")]
    Answer(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmtAnswer {
    /// Satisfiable, with integer constants read from `(get-model)` when available.
    Sat(BTreeMap<String, i64>),
    Unsat,
    Unknown,
}

/// An external prover command line, e.g. `z3 -in -smt2`. Each query runs in
/// its own process, so a solver value can be shared freely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtSolver {
    program: String,
    args: Vec<String>,
}

impl SmtSolver {
    pub fn new(command_line: &str) -> Result<SmtSolver, SmtError> {
        let mut parts = command_line.split_whitespace().map(String::from);
        let program = parts.next().ok_or(SmtError::EmptyCommand)?;
        Ok(SmtSolver {
            program,
            args: parts.collect(),
        })
    }

    /// `z3 -in -smt2` if a `z3` binary is on the search path.
    pub fn detect_z3() -> Option<SmtSolver> {
        let path = std::env::var_os("PATH")?;
        std::env::split_paths(&path)
            .any(|d| d.join("z3").is_file())
            .then(|| SmtSolver::new("z3 -in -smt2").expect("non-empty"))
    }

    pub fn command_line(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Run `script` (declarations and assertions) followed by `(check-sat)`.
    pub fn check(&self, script: &str) -> Result<SmtAnswer, SmtError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn(self.program.clone(), e))?;
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            stdin.write_all(script.as_bytes())?;
            stdin.write_all(b"\n(check-sat)\n(get-model)\n(exit)\n")?;
        }
        let out = child.wait_with_output()?;
        let text = String::from_utf8_lossy(&out.stdout);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        match lines.next() {
            Some("unsat") => Ok(SmtAnswer::Unsat),
            Some("unknown") | Some("timeout") => Ok(SmtAnswer::Unknown),
            Some("sat") => Ok(SmtAnswer::Sat(parse_model(
                &lines.collect::<Vec<_>>().join(" "),
            ))),
            other => Err(SmtError::Answer(other.unwrap_or("<no output>").to_string())),
        }
    }
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> Vec<Sexp> {
    let mut stack: Vec<Vec<Sexp>> = vec![vec![]];
    let mut atom = String::new();
    let mut quoted = false;
    let flush = |atom: &mut String, stack: &mut Vec<Vec<Sexp>>| {
        if !atom.is_empty() {
            stack
                .last_mut()
                .expect("root")
                .push(Sexp::Atom(std::mem::take(atom)));
        }
    };
    for c in text.chars() {
        if quoted {
            atom.push(c);
            quoted = c != '|';
            continue;
        }
        match c {
            '|' => {
                atom.push(c);
                quoted = true;
            }
            '(' => {
                flush(&mut atom, &mut stack);
                stack.push(vec![]);
            }
            ')' => {
                flush(&mut atom, &mut stack);
                if stack.len() > 1 {
                    let l = stack.pop().expect("open list");
                    stack.last_mut().expect("root").push(Sexp::List(l));
                }
            }
            c if c.is_whitespace() => flush(&mut atom, &mut stack),
            c => atom.push(c),
        }
    }
    flush(&mut atom, &mut stack);
    stack.swap_remove(0)
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(xs) => match xs.as_slice() {
            [Sexp::Atom(m), x] if m == "-" => int_value(x).map(|v| -v),
            _ => None,
        },
    }
}

/// Collect `(define-fun <name> () Int <value>)` entries.
fn parse_model(text: &str) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    fn walk(s: &Sexp, out: &mut BTreeMap<String, i64>) {
        if let Sexp::List(xs) = s {
            if let [Sexp::Atom(d), Sexp::Atom(name), Sexp::List(params), _, v] = xs.as_slice() {
                if d == "define-fun" && params.is_empty() {
                    if let Some(v) = int_value(v) {
                        out.insert(name.trim_matches('|').to_string(), v);
                    }
                    return;
                }
            }
            xs.iter().for_each(|x| walk(x, out));
        }
    }
    parse_sexps(text).iter().for_each(|s| walk(s, &mut out));
    out
}

/// Quote a symbol with `|...|` unless it is a plain SMT-LIB simple symbol.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name.replace(['|', '\\'], "_"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_parsing() {
        let m = parse_model("( (define-fun x () Int 4) (define-fun |d(1)| () Int (- 2)) (define-fun f ((a Int)) Int a) )");
        assert_eq!(m.get("x"), Some(&4));
        assert_eq!(m.get("d(1)"), Some(&-2));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn symbols_are_quoted_when_needed() {
        assert_eq!(symbol("x"), "x");
        assert_eq!(symbol("d(1)"), "|d(1)|");
        assert_eq!(symbol("1x"), "|1x|");
    }

    #[test]
    fn missing_binary_is_an_error() {
        let s = SmtSolver::new("definitely-not-a-prover-binary").unwrap();
        assert!(matches!(s.check("(assert true)"), Err(SmtError::Spawn(..))));
        assert!(SmtSolver::new("  ").is_err());
    }
}
