//! Parameterized programs as control-flow graphs, their per-thread semantics,
//! lassos, and the program lasso automaton A(P).

mod lasso;
mod parse;
mod qpa;
mod state;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::lex::SyntaxError;
use crate::linear::{LinCon, LinExpr};
use crate::logic::{Name, ThreadId, Var};

pub use lasso::{
    enumerate_program_lassos, is_program_lasso, parse_lasso, project_thread, IndexedCommand, Lasso,
    LassoWord, Letter,
};
pub use parse::parse_program;
pub use qpa::program_lasso_qpa;
pub use state::{cfg_step, ProgramState, DEFAULT_HAVOC_RANGE};

pub type LocId = usize;

/// A program variable as written in command text: a global, or the executing thread's local.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProgVar {
    Global(Name),
    Local(Name),
}

impl ProgVar {
    pub fn instantiate(&self, tid: ThreadId) -> Var {
        match self {
            ProgVar::Global(n) => Var::Global(n.clone()),
            ProgVar::Local(n) => Var::Local(n.clone(), tid),
        }
    }

    pub fn name(&self) -> &Name {
        match self {
            ProgVar::Global(n) | ProgVar::Local(n) => n,
        }
    }
}

impl fmt::Display for ProgVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CommandKind {
    /// Simultaneous assignment of linear terms (a single pair for ordinary `x = e`).
    Assign(Vec<(ProgVar, LinExpr<ProgVar>)>),
    /// Non-deterministic value, optionally bounded below (`pos()` is `Havoc(x, Some(1))`).
    Havoc(ProgVar, Option<i64>),
    /// Blocks unless the constraint holds; `None` means `false`.
    Assume(Option<LinCon<ProgVar>>),
    Skip,
}

/// A named program command; names are unique within a program.
#[derive(Clone, Debug)]
pub struct Command {
    pub name: Name,
    pub kind: CommandKind,
}

impl PartialEq for Command {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}
impl Eq for Command {}
impl std::hash::Hash for Command {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}
impl PartialOrd for Command {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Command {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name.cmp(&other.name)
    }
}

impl Command {
    /// Variables written by the command.
    pub fn writes(&self) -> Vec<&ProgVar> {
        match &self.kind {
            CommandKind::Assign(ps) => ps.iter().map(|(v, _)| v).collect(),
            CommandKind::Havoc(v, _) => vec![v],
            _ => vec![],
        }
    }

    /// Variables read or written by the command.
    pub fn mentions(&self) -> Vec<&ProgVar> {
        let mut out = self.writes();
        match &self.kind {
            CommandKind::Assign(ps) => out.extend(ps.iter().flat_map(|(_, e)| e.vars())),
            CommandKind::Assume(Some(c)) => out.extend(c.vars()),
            _ => {}
        }
        out
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    pub name: String,
    pub init: Option<i64>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{line}:{col}: undeclared variable `{name}`")]
    Undeclared {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{line}:{col}: duplicate declaration of `{name}`")]
    Duplicate {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("malformed control-flow graph: {0}")]
    Cfg(String),
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("malformed lasso: {0}")]
    Lasso(String),
}

/// `P = ⟨Loc, Σ, ℓ_init, src, tgt⟩` plus variable declarations.
#[derive(Clone, Debug)]
pub struct ParameterizedProgram {
    pub globals: Vec<VarDecl>,
    pub locals: Vec<VarDecl>,
    /// Locations are `1..=num_locations`.
    pub num_locations: usize,
    pub initial: LocId,
    pub commands: Vec<Arc<Command>>,
    pub src: Vec<LocId>,
    pub tgt: Vec<LocId>,
}

impl ParameterizedProgram {
    pub fn locations(&self) -> impl Iterator<Item = LocId> {
        1..=self.num_locations
    }

    pub fn command_index(&self, name: &str) -> Option<usize> {
        self.commands.iter().position(|c| &*c.name == name)
    }

    pub fn command(&self, name: &str) -> Option<&Arc<Command>> {
        self.command_index(name).map(|i| &self.commands[i])
    }

    /// Letters of the lasso alphabet: command names followed by `$`.
    pub fn alphabet(&self) -> Vec<String> {
        let mut out: Vec<String> = self.commands.iter().map(|c| c.name.to_string()).collect();
        out.push("$".into());
        out
    }

    pub fn is_global(&self, name: &str) -> bool {
        self.globals.iter().any(|d| d.name == name)
    }

    pub fn is_local(&self, name: &str) -> bool {
        self.locals.iter().any(|d| d.name == name)
    }

    /// Initial values fixed by declarations.
    pub fn initial_values(&self, n_threads: usize) -> BTreeMap<Var, i64> {
        let mut out = BTreeMap::new();
        for g in &self.globals {
            if let Some(v) = g.init {
                out.insert(Var::global(&g.name), v);
            }
        }
        for l in &self.locals {
            if let Some(v) = l.init {
                for t in 1..=n_threads as ThreadId {
                    out.insert(Var::local(&l.name, t), v);
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.initial == 0 || self.initial > self.num_locations {
            return Err(ProgramError::Cfg(format!(
                "initial location {} is not declared",
                self.initial
            )));
        }
        if self.src.len() != self.commands.len() || self.tgt.len() != self.commands.len() {
            return Err(ProgramError::Cfg("src/tgt arity mismatch".into()));
        }
        for (i, c) in self.commands.iter().enumerate() {
            for l in [self.src[i], self.tgt[i]] {
                if l == 0 || l > self.num_locations {
                    return Err(ProgramError::Cfg(format!(
                        "command `{}` uses undeclared location {l}",
                        c.name
                    )));
                }
            }
            if self.commands[..i].iter().any(|d| d.name == c.name) {
                return Err(ProgramError::Cfg(format!(
                    "duplicate command name `{}`",
                    c.name
                )));
            }
            for v in c.mentions() {
                let ok = match v {
                    ProgVar::Global(n) => self.is_global(n),
                    ProgVar::Local(n) => self.is_local(n),
                };
                if !ok {
                    return Err(ProgramError::Cfg(format!(
                        "command `{}` mentions undeclared `{v}`",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Printable listing of the control-flow graph.
    pub fn to_cfg_text(&self) -> String {
        let mut out = String::new();
        for g in &self.globals {
            match g.init {
                Some(v) => out.push_str(&format!("global int {} = {v};\n", g.name)),
                None => out.push_str(&format!("global int {};\n", g.name)),
            }
        }
        for l in &self.locals {
            match l.init {
                Some(v) => out.push_str(&format!("local int {} = {v};\n", l.name)),
                None => out.push_str(&format!("local int {};\n", l.name)),
            }
        }
        for l in self.locations() {
            out.push_str(&format!("loc {l}\n"));
        }
        out.push_str(&format!("init {}\n", self.initial));
        for (i, c) in self.commands.iter().enumerate() {
            out.push_str(&format!(
                "edge {} {} {}\n",
                self.src[i], self.tgt[i], c.name
            ));
        }
        out
    }
}
