//! Hoare triples, bases of proof spaces, derivability in the generated proof
//! space, the lasso language of a basis, and its quantified predicate automaton.

mod automaton;
mod derive;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::logic::{
    parse_assertion, parse_ranking, Assertion, Oracle, RankingFormula, ThreadId, Validity,
};
use crate::program::{IndexedCommand, ParameterizedProgram};

pub use automaton::proof_space_qpa;
pub use derive::{
    closure_witness, derivable_atoms, derivable_atoms_over, lasso_in_proof_language,
    lasso_in_proof_language_over, lasso_in_proof_language_with, Derivation, LassoLanguage,
    DEFAULT_FRESH_BUDGET,
};

/// `{pre} word {post}`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HoareTriple {
    pub pre: Assertion,
    pub word: Vec<IndexedCommand>,
    pub post: Assertion,
}

impl HoareTriple {
    pub fn new(pre: Assertion, word: Vec<IndexedCommand>, post: Assertion) -> HoareTriple {
        HoareTriple { pre, word, post }
    }

    /// Thread ids occurring in the pre, post or word.
    pub fn threads(&self) -> BTreeSet<ThreadId> {
        let mut ids = self.pre.threads();
        ids.extend(self.post.threads());
        ids.extend(self.word.iter().map(|ic| ic.thread));
        ids
    }

    pub fn rename(&self, f: impl Fn(ThreadId) -> ThreadId) -> HoareTriple {
        HoareTriple {
            pre: self.pre.rename(&f),
            word: self
                .word
                .iter()
                .map(|ic| IndexedCommand::new(ic.command.clone(), f(ic.thread)))
                .collect(),
            post: self.post.rename(&f),
        }
    }

    /// The line describing a single-command triple in the basis file format.
    pub fn to_basis_line(&self) -> String {
        let ic = &self.word[0];
        format!(
            "triple {{{}}} {} @ {} {{{}}}",
            self.pre, ic.command.name, ic.thread, self.post
        )
    }
}

impl fmt::Display for HoareTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.pre)?;
        for ic in &self.word {
            write!(f, " {ic}")?;
        }
        write!(f, " {{{}}}", self.post)
    }
}

impl Serialize for HoareTriple {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Every thread index of the post either executes a command of the word or
/// indexes a local variable mentioned in the pre.
pub fn check_well_formed(t: &HoareTriple) -> bool {
    let pre = t.pre.threads();
    t.post
        .threads()
        .iter()
        .all(|i| pre.contains(i) || t.word.iter().any(|ic| ic.thread == *i))
}

/// Outcome of [`check_basic`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasicVerdict {
    Basic,
    NotBasic(String),
    /// Shape checks passed but the oracle could not decide validity.
    Unknown,
}

/// A single indexed command, an atomic (or trivially `true`) post, well-formed, and valid.
pub fn check_basic(t: &HoareTriple, oracle: &Oracle) -> BasicVerdict {
    if t.word.len() != 1 {
        return BasicVerdict::NotBasic(format!("word has {} commands, expected one", t.word.len()));
    }
    if t.post.len() > 1 {
        return BasicVerdict::NotBasic("post-condition is not atomic".into());
    }
    if !check_well_formed(t) {
        return BasicVerdict::NotBasic("post-condition mentions an index that neither executes nor occurs in the pre-condition".into());
    }
    match oracle.check(&t.pre, &t.word, &t.post) {
        Validity::Valid => BasicVerdict::Basic,
        Validity::Invalid(w) => BasicVerdict::NotBasic(format!("not valid: {w}")),
        Validity::Unknown => BasicVerdict::Unknown,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BasisError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown command `{name}`")]
    UnknownCommand { line: usize, name: String },
    #[error("triple {triple} is not basic: {reason}")]
    NotBasic { triple: String, reason: String },
    #[error("validity of triple {triple} could not be decided")]
    Undecided { triple: String },
}

/// A finite set of basic triples together with ranking formulas.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Basis {
    pub triples: BTreeSet<HoareTriple>,
    pub rankings: BTreeSet<RankingFormula>,
}

impl Basis {
    pub fn new() -> Basis {
        Basis::default()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty() && self.rankings.is_empty()
    }

    /// Add all triples and rankings of `other`; returns whether anything was new.
    pub fn extend(&mut self, other: &Basis) -> bool {
        let before = (self.triples.len(), self.rankings.len());
        self.triples.extend(other.triples.iter().cloned());
        self.rankings.extend(other.rankings.iter().cloned());
        before != (self.triples.len(), self.rankings.len())
    }

    /// Parse the basis file format without checking validity.
    pub fn parse(p: &ParameterizedProgram, text: &str) -> Result<Basis, BasisError> {
        let mut basis = Basis::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix("rank ") {
                let w = parse_ranking(rest).map_err(|e| BasisError::Syntax { line, msg: e.msg })?;
                basis.rankings.insert(w);
            } else if let Some(rest) = l.strip_prefix("triple ") {
                basis.triples.insert(parse_triple(p, rest.trim(), line)?);
            } else {
                return Err(BasisError::Syntax {
                    line,
                    msg: "expected `triple` or `rank`".into(),
                });
            }
        }
        Ok(basis)
    }

    /// Parse and reject any triple that is not basic.
    pub fn load(
        p: &ParameterizedProgram,
        text: &str,
        oracle: &Oracle,
    ) -> Result<Basis, BasisError> {
        let basis = Basis::parse(p, text)?;
        basis.validate(oracle)?;
        Ok(basis)
    }

    pub fn validate(&self, oracle: &Oracle) -> Result<(), BasisError> {
        for t in &self.triples {
            match check_basic(t, oracle) {
                BasicVerdict::Basic => {}
                BasicVerdict::NotBasic(reason) => {
                    return Err(BasisError::NotBasic {
                        triple: t.to_string(),
                        reason,
                    })
                }
                BasicVerdict::Unknown => {
                    return Err(BasisError::Undecided {
                        triple: t.to_string(),
                    })
                }
            }
        }
        Ok(())
    }

    /// Render in the basis file format (re-parses to an equal basis).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_basis_line());
            out.push('\n');
        }
        for w in &self.rankings {
            out.push_str(&format!("rank {w}\n"));
        }
        out
    }
}

fn parse_triple(
    p: &ParameterizedProgram,
    text: &str,
    line: usize,
) -> Result<HoareTriple, BasisError> {
    let syntax = |msg: &str| BasisError::Syntax {
        line,
        msg: msg.into(),
    };
    let rest = text
        .strip_prefix('{')
        .ok_or_else(|| syntax("expected `{` before the pre-condition"))?;
    let (pre_text, rest) = rest
        .split_once('}')
        .ok_or_else(|| syntax("unterminated pre-condition"))?;
    let open = rest
        .rfind('{')
        .ok_or_else(|| syntax("expected `{` before the post-condition"))?;
    let (middle, post_part) = rest.split_at(open);
    let post_text = post_part[1..]
        .strip_suffix('}')
        .ok_or_else(|| syntax("unterminated post-condition"))?;
    let (name, index) = middle
        .rsplit_once('@')
        .ok_or_else(|| syntax("expected `<command> @ <index>`"))?;
    let name = name.trim();
    let thread: ThreadId = index
        .trim()
        .parse()
        .map_err(|_| syntax("thread index must be a positive integer"))?;
    if thread == 0 {
        return Err(syntax("thread index must be a positive integer"));
    }
    let command = p
        .command(name)
        .ok_or_else(|| BasisError::UnknownCommand {
            line,
            name: name.into(),
        })?
        .clone();
    let assertion = |t: &str| {
        let t = t.trim();
        if t == "true" {
            return Ok(Assertion::top());
        }
        parse_assertion(t).map_err(|e| BasisError::Syntax { line, msg: e.msg })
    };
    Ok(HoareTriple::new(
        assertion(pre_text)?,
        vec![IndexedCommand::new(command, thread)],
        assertion(post_text)?,
    ))
}
