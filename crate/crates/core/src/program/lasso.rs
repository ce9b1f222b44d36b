use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::logic::ThreadId;

use super::{Command, LocId, ParameterizedProgram, ProgramError};

/// `⟨σ : i⟩`
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexedCommand {
    pub command: Arc<Command>,
    pub thread: ThreadId,
}

impl IndexedCommand {
    pub fn new(command: Arc<Command>, thread: ThreadId) -> IndexedCommand {
        assert!(thread >= 1, "thread ids are positive");
        IndexedCommand { command, thread }
    }
}

impl fmt::Display for IndexedCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.command.name, self.thread)
    }
}

/// A QPA input letter: index into an alphabet plus the executing thread.
pub type Letter = (usize, ThreadId);
/// A word over indexed letters, read left to right.
pub type LassoWord = Vec<Letter>;

/// `τ $ ρ` with nonempty `ρ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lasso {
    pub stem: Vec<IndexedCommand>,
    pub cycle: Vec<IndexedCommand>,
}

impl Lasso {
    pub fn new(
        stem: Vec<IndexedCommand>,
        cycle: Vec<IndexedCommand>,
    ) -> Result<Lasso, ProgramError> {
        if cycle.is_empty() {
            return Err(ProgramError::Lasso(
                "the loop of a lasso may not be empty".into(),
            ));
        }
        Ok(Lasso { stem, cycle })
    }

    pub fn threads(&self) -> BTreeSet<ThreadId> {
        self.stem
            .iter()
            .chain(&self.cycle)
            .map(|c| c.thread)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.stem.len() + 1 + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Encode as a QPA word over `alphabet` (command names plus `$`). The `$`
    /// letter carries the least thread id of the lasso so the word mentions no
    /// other ids.
    pub fn encode(&self, alphabet: &[String]) -> Option<LassoWord> {
        let idx = |name: &str| alphabet.iter().position(|a| a == name);
        let dollar = idx("$")?;
        let tid = self.threads().into_iter().next().unwrap_or(1);
        let mut w = Vec::with_capacity(self.len());
        for c in &self.stem {
            w.push((idx(&c.command.name)?, c.thread));
        }
        w.push((dollar, tid));
        for c in &self.cycle {
            w.push((idx(&c.command.name)?, c.thread));
        }
        Some(w)
    }

    /// Apply a thread renaming.
    pub fn rename(&self, f: impl Fn(ThreadId) -> ThreadId) -> Lasso {
        let r = |cs: &[IndexedCommand]| {
            cs.iter()
                .map(|c| IndexedCommand::new(c.command.clone(), f(c.thread)))
                .collect()
        };
        Lasso {
            stem: r(&self.stem),
            cycle: r(&self.cycle),
        }
    }
}

impl fmt::Display for Lasso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.stem {
            write!(f, "{c} ")?;
        }
        write!(f, "$")?;
        for c in &self.cycle {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

impl Serialize for Lasso {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parse `<cmd>@<tid> ... $ <cmd>@<tid> ...` against the commands of `p`.
pub fn parse_lasso(p: &ParameterizedProgram, text: &str) -> Result<Lasso, ProgramError> {
    let mut stem = Vec::new();
    let mut cycle = Vec::new();
    let mut seen_dollar = false;
    for tok in text.split_whitespace() {
        if tok == "$" {
            if seen_dollar {
                return Err(ProgramError::Lasso("more than one `$`".into()));
            }
            seen_dollar = true;
            continue;
        }
        let (name, tid) = tok.rsplit_once('@').ok_or_else(|| {
            ProgramError::Lasso(format!("`{tok}` is not of the form <command>@<thread>"))
        })?;
        let tid: ThreadId = tid
            .parse()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| ProgramError::Lasso(format!("bad thread id in `{tok}`")))?;
        let cmd = p
            .command(name)
            .ok_or_else(|| ProgramError::UnknownCommand(name.into()))?;
        let ic = IndexedCommand::new(cmd.clone(), tid);
        if seen_dollar {
            cycle.push(ic);
        } else {
            stem.push(ic);
        }
    }
    if !seen_dollar {
        return Err(ProgramError::Lasso("missing `$`".into()));
    }
    Lasso::new(stem, cycle)
}

/// The commands executed by thread `i`, in order.
pub fn project_thread(word: &[IndexedCommand], i: ThreadId) -> Vec<Arc<Command>> {
    word.iter()
        .filter(|c| c.thread == i)
        .map(|c| c.command.clone())
        .collect()
}

/// Follow `cmds` from `from`; `None` if some command does not start where the previous ended.
fn walk(p: &ParameterizedProgram, from: LocId, cmds: &[Arc<Command>]) -> Option<LocId> {
    let mut at = from;
    for c in cmds {
        let i = p.command_index(&c.name)?;
        if p.src[i] != at {
            return None;
        }
        at = p.tgt[i];
    }
    Some(at)
}

/// Definitional membership in `$(L(P))`: each thread's stem projection is a
/// path from the initial location and its loop projection a cycle at the
/// location reached.
pub fn is_program_lasso(p: &ParameterizedProgram, l: &Lasso) -> bool {
    if l.cycle.is_empty() {
        return false;
    }
    l.threads().into_iter().all(|t| {
        let Some(at) = walk(p, p.initial, &project_thread(&l.stem, t)) else {
            return false;
        };
        walk(p, at, &project_thread(&l.cycle, t)) == Some(at)
    })
}

/// Program lassos over threads `1..=n`, `|stem| ≤ stem_max`, `1 ≤ |loop| ≤ loop_max`,
/// in length-lexicographic order (letters ordered by command, then thread, `$` last).
pub fn enumerate_program_lassos(
    p: &ParameterizedProgram,
    n: usize,
    stem_max: usize,
    loop_max: usize,
) -> Result<impl Iterator<Item = Lasso> + '_, ProgramError> {
    if loop_max == 0 {
        return Err(ProgramError::Lasso("loop bound must be at least 1".into()));
    }
    Ok((2..=stem_max + 1 + loop_max).flat_map(move |len| {
        let mut out = Vec::new();
        let mut st = Enum {
            p,
            n,
            stem_max,
            loop_max,
            len,
            word: Vec::new(),
            dollar: None,
            locs: vec![p.initial; n],
            loop_start: Vec::new(),
        };
        st.go(&mut out);
        out
    }))
}

struct Enum<'a> {
    p: &'a ParameterizedProgram,
    n: usize,
    stem_max: usize,
    loop_max: usize,
    len: usize,
    word: Vec<IndexedCommand>,
    dollar: Option<usize>,
    locs: Vec<LocId>,
    loop_start: Vec<LocId>,
}

impl Enum<'_> {
    fn go(&mut self, out: &mut Vec<Lasso>) {
        let pos = self.word.len() + usize::from(self.dollar.is_some());
        if pos == self.len {
            if let Some(d) = self.dollar {
                if self.locs == self.loop_start && self.word.len() > d {
                    let (s, c) = self.word.split_at(d);
                    out.push(Lasso {
                        stem: s.to_vec(),
                        cycle: c.to_vec(),
                    });
                }
            }
            return;
        }
        for (ci, cmd) in self.p.commands.iter().enumerate() {
            for t in 1..=self.n {
                if self.locs[t - 1] != self.p.src[ci] {
                    continue;
                }
                match self.dollar {
                    None if self.word.len() >= self.stem_max => continue,
                    Some(d) if self.word.len() - d >= self.loop_max => continue,
                    // leave room for `$` and a nonempty loop
                    None if pos + 2 > self.len => continue,
                    _ => {}
                }
                let saved = self.locs[t - 1];
                self.locs[t - 1] = self.p.tgt[ci];
                self.word
                    .push(IndexedCommand::new(cmd.clone(), t as ThreadId));
                self.go(out);
                self.word.pop();
                self.locs[t - 1] = saved;
            }
        }
        if self.dollar.is_none() && self.len - pos >= 2 && self.len - pos - 1 <= self.loop_max {
            self.dollar = Some(self.word.len());
            self.loop_start = self.locs.clone();
            self.go(out);
            self.dollar = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::program::parse_program;

    fn dec() -> ParameterizedProgram {
        parse_program(corpus::DECREMENT_PROGRAM).unwrap()
    }

    #[test]
    fn projection_examples() {
        let p = parse_program("global int x;\nwhile (true) { x = 1; x = 2; x = 3; }").unwrap();
        let w = parse_lasso(&p, "x=1@1 x=2@2 x=3@1 $ x=1@1").unwrap().stem;
        let names = |v: Vec<Arc<Command>>| v.iter().map(|c| c.name.to_string()).collect::<Vec<_>>();
        assert_eq!(names(project_thread(&w, 1)), vec!["x=1", "x=3"]);
        assert!(project_thread(&w, 3).is_empty());
        let l = parse_lasso(&dec(), corpus::FIG3A_LASSO).unwrap();
        assert_eq!(
            names(project_thread(&l.stem, 1)),
            vec!["x=pos()", "d=pos()"]
        );
    }

    #[test]
    fn program_lasso_examples() {
        let p = dec();
        assert!(is_program_lasso(
            &p,
            &parse_lasso(&p, corpus::FIG3A_LASSO).unwrap()
        ));
        assert!(parse_lasso(&p, "x=pos()@1 d=pos()@1 $").is_err());
        assert!(!is_program_lasso(
            &p,
            &parse_lasso(&p, "x=pos()@1 $ x=pos()@1").unwrap()
        ));
    }

    #[test]
    fn enumeration_contains_expected_lassos() {
        let p = dec();
        let fig = parse_lasso(&p, corpus::FIG3A_LASSO).unwrap();
        assert!(enumerate_program_lassos(&p, 1, 2, 2)
            .unwrap()
            .any(|l| l == fig));
        let two = parse_lasso(
            &p,
            "x=pos()@1 d=pos()@1 x=pos()@2 d=pos()@2 $ [x>0]@1 x=x-d@1",
        )
        .unwrap();
        assert!(enumerate_program_lassos(&p, 2, 4, 2)
            .unwrap()
            .any(|l| l == two));
        assert!(enumerate_program_lassos(&p, 1, 2, 0).is_err());
    }

    #[test]
    fn enumeration_is_sound_complete_and_ordered() {
        let p = dec();
        let got: Vec<Lasso> = enumerate_program_lassos(&p, 2, 3, 2).unwrap().collect();
        assert!(got.iter().all(|l| is_program_lasso(&p, l)));
        let alpha = p.alphabet();
        let keys: Vec<_> = got
            .iter()
            .map(|l| (l.len(), l.encode(&alpha).unwrap()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        // `$` is the last letter of the alphabet, so encoded order is letter order
        assert_eq!(keys, sorted);
        // brute-force completeness over all words at the bound
        let mut count = 0;
        let letters: Vec<IndexedCommand> = p
            .commands
            .iter()
            .flat_map(|c| (1..=2).map(move |t| IndexedCommand::new(c.clone(), t)))
            .collect();
        let mut stems: Vec<Vec<IndexedCommand>> = vec![vec![]];
        for _ in 0..3 {
            let next: Vec<_> = stems
                .iter()
                .filter(|s| s.len() == stems.last().unwrap().len())
                .flat_map(|s| {
                    letters.iter().map(move |c| {
                        let mut s = s.clone();
                        s.push(c.clone());
                        s
                    })
                })
                .collect();
            stems.extend(next);
        }
        for s in &stems {
            for a in &letters {
                for b in std::iter::once(None).chain(letters.iter().map(Some)) {
                    let mut cyc = vec![a.clone()];
                    cyc.extend(b.cloned());
                    let l = Lasso {
                        stem: s.clone(),
                        cycle: cyc,
                    };
                    if is_program_lasso(&p, &l) {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, got.len());
    }
}
