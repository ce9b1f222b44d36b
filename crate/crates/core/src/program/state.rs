use std::collections::BTreeMap;

use crate::logic::{ThreadId, Var};

use super::{CommandKind, IndexedCommand, LocId, ParameterizedProgram};

/// Values tried for `havoc`/`pos()` during concrete execution.
pub const DEFAULT_HAVOC_RANGE: (i64, i64) = (-8, 8);

/// A state of the N-threaded product P(N).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProgramState {
    pub n_threads: usize,
    pub globals: BTreeMap<String, i64>,
    pub locals: BTreeMap<(String, ThreadId), i64>,
    /// `locations[t - 1]` is the location of thread `t`.
    pub locations: Vec<LocId>,
}

impl ProgramState {
    /// All threads at the initial location, variables from declarations or zero.
    pub fn initial(p: &ParameterizedProgram, n_threads: usize) -> ProgramState {
        let globals = p
            .globals
            .iter()
            .map(|d| (d.name.clone(), d.init.unwrap_or(0)))
            .collect();
        let locals = p
            .locals
            .iter()
            .flat_map(|d| {
                (1..=n_threads as ThreadId).map(move |t| ((d.name.clone(), t), d.init.unwrap_or(0)))
            })
            .collect();
        ProgramState {
            n_threads,
            globals,
            locals,
            locations: vec![p.initial; n_threads],
        }
    }

    pub fn value(&self, v: &Var) -> Option<i64> {
        match v {
            Var::Global(n) | Var::OldGlobal(n) => self.globals.get(&**n).copied(),
            Var::Local(n, t) | Var::OldLocal(n, t) => {
                self.locals.get(&(n.to_string(), *t)).copied()
            }
        }
    }

    pub fn set(&mut self, v: &Var, x: i64) {
        match v {
            Var::Global(n) | Var::OldGlobal(n) => {
                self.globals.insert(n.to_string(), x);
            }
            Var::Local(n, t) | Var::OldLocal(n, t) => {
                self.locals.insert((n.to_string(), *t), x);
            }
        }
    }

    pub fn location(&self, t: ThreadId) -> Option<LocId> {
        self.locations.get((t as usize).checked_sub(1)?).copied()
    }
}

/// Successors of `state` under `ic` in P(N); empty when the command blocks.
/// Havoc values are drawn from `range` intersected with the lower bound.
pub fn cfg_step(
    p: &ParameterizedProgram,
    state: &ProgramState,
    ic: &IndexedCommand,
    range: (i64, i64),
) -> Vec<ProgramState> {
    let t = ic.thread;
    let Some(idx) = p.command_index(&ic.command.name) else {
        return vec![];
    };
    if state.location(t) != Some(p.src[idx]) {
        return vec![];
    }
    let val = |s: &ProgramState, v: &super::ProgVar| s.value(&v.instantiate(t));
    let mut out = Vec::new();
    match &ic.command.kind {
        CommandKind::Skip => out.push(state.clone()),
        CommandKind::Assume(c) => {
            if let Some(c) = c {
                if c.eval(|v| val(state, v)) == Some(true) {
                    out.push(state.clone());
                }
            }
        }
        CommandKind::Assign(pairs) => {
            let vals: Option<Vec<i64>> = pairs
                .iter()
                .map(|(_, e)| e.eval(|v| val(state, v)))
                .collect();
            if let Some(vals) = vals {
                let mut s = state.clone();
                for ((x, _), v) in pairs.iter().zip(vals) {
                    s.set(&x.instantiate(t), v);
                }
                out.push(s);
            }
        }
        CommandKind::Havoc(x, lb) => {
            let lo = lb.map_or(range.0, |b| b.max(range.0));
            for v in lo..=range.1 {
                let mut s = state.clone();
                s.set(&x.instantiate(t), v);
                out.push(s);
            }
        }
    }
    for s in &mut out {
        s.locations[t as usize - 1] = p.tgt[idx];
    }
    out
}
