//! Concrete nontermination witnesses: executions of a lasso whose program
//! state recurs exactly at the loop head.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::program::{cfg_step, IndexedCommand, Lasso, ParameterizedProgram, ProgramState};

/// Bounds for the concrete search.
#[derive(Clone, Debug)]
pub struct FeasibilityConfig {
    /// Values tried for `havoc`/`pos()`.
    pub havoc_range: (i64, i64),
    /// Maximal number of loop periods explored.
    pub unroll_bound: usize,
    /// Maximal number of distinct loop-head states explored.
    pub max_states: usize,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        FeasibilityConfig {
            havoc_range: crate::program::DEFAULT_HAVOC_RANGE,
            unroll_bound: 8,
            max_states: 20_000,
        }
    }
}

/// An execution `s₀ → … → s_m` of `τ ρ^k` in `P(N)` with `s_i = s_j` for two
/// loop-head positions `i < j`; repeating `s_i … s_j` runs `τ ρ^ω` forever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeasibleWitness {
    pub n_threads: usize,
    /// One state per position, `states[0]` initial.
    #[serde(serialize_with = "serialize_states")]
    pub states: Vec<ProgramState>,
    pub recurrence: (usize, usize),
}

fn serialize_states<S: serde::Serializer>(
    states: &[ProgramState],
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_seq(states.iter().map(show_state))
}

fn show_state(s: &ProgramState) -> String {
    let mut parts: Vec<String> = s.globals.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.extend(s.locals.iter().map(|((k, t), v)| format!("{k}({t})={v}")));
    parts.extend(
        s.locations
            .iter()
            .enumerate()
            .map(|(t, l)| format!("pc({})={l}", t + 1)),
    );
    parts.join(" ")
}

impl fmt::Display for FeasibleWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = self.recurrence;
        writeln!(
            f,
            "execution with {} thread(s); the state at step {i} recurs at step {j}",
            self.n_threads
        )?;
        for (k, s) in self.states.iter().enumerate() {
            let mark = if k == i || k == j { " *" } else { "" };
            writeln!(f, "  {k:>3}: {}{mark}", show_state(s))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeasibilityResult {
    Feasible(FeasibleWitness),
    NoWitnessFound,
}

/// The word executed by the witness: the stem followed by enough loop periods.
fn word_of(l: &Lasso, len: usize) -> Vec<IndexedCommand> {
    l.stem
        .iter()
        .chain(l.cycle.iter().cycle())
        .take(len)
        .cloned()
        .collect()
}

impl FeasibleWitness {
    /// Re-execute the witness: every step is a transition of `P(N)` on the
    /// lasso's word and the recurrence holds exactly.
    pub fn replays(&self, p: &ParameterizedProgram, l: &Lasso) -> bool {
        let (i, j) = self.recurrence;
        let steps = self.states.len().saturating_sub(1);
        let period = |k: usize| k >= l.stem.len() && (k - l.stem.len()).is_multiple_of(l.cycle.len().max(1));
        if self.states.is_empty() || i >= j || j > steps || !period(i) || !period(j) {
            return false;
        }
        if self.states[0] != ProgramState::initial(p, self.n_threads)
            || self.states[i] != self.states[j]
        {
            return false;
        }
        let word = word_of(l, steps);
        // havoc steps may pick any value, so replay checks membership in the successor set
        word.iter().enumerate().all(|(k, ic)| {
            let range = havoc_span(&self.states[k + 1]);
            cfg_step(p, &self.states[k], ic, range).contains(&self.states[k + 1])
        })
    }
}

/// A havoc range containing every value of `s`.
fn havoc_span(s: &ProgramState) -> (i64, i64) {
    let vals = s.globals.values().chain(s.locals.values());
    let (lo, hi) = vals.fold((0, 0), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (lo, hi)
}

/// States reachable by executing `word` from `s`, with their paths.
fn run_paths(
    p: &ParameterizedProgram,
    s: &ProgramState,
    word: &[IndexedCommand],
    range: (i64, i64),
    cap: usize,
) -> Vec<Vec<ProgramState>> {
    let mut paths = vec![vec![s.clone()]];
    for ic in word {
        let mut next = Vec::new();
        for path in &paths {
            for t in cfg_step(p, path.last().expect("nonempty path"), ic, range) {
                let mut q = path.clone();
                q.push(t);
                next.push(q);
                if next.len() >= cap {
                    break;
                }
            }
        }
        // keep one path per end state
        let mut seen = BTreeSet::new();
        next.retain(|q: &Vec<ProgramState>| seen.insert(q.last().cloned()));
        paths = next;
        if paths.is_empty() {
            break;
        }
    }
    paths
}

/// Search concrete executions of `τ ρ^k` (`k ≤ unroll_bound`) in `P(N)`, with
/// havoc values from the configured range, for an exact recurrence of the
/// full program state at the loop head.
pub fn check_lasso_feasibility(
    p: &ParameterizedProgram,
    l: &Lasso,
    n_threads: usize,
    cfg: &FeasibilityConfig,
) -> FeasibilityResult {
    let max_tid = l.threads().into_iter().max().unwrap_or(0) as usize;
    if l.cycle.is_empty() || cfg.unroll_bound == 0 || n_threads < max_tid {
        return FeasibilityResult::NoWitnessFound;
    }
    let init = ProgramState::initial(p, n_threads);
    // loop-head graph: state → (successor after one period, path)
    let heads = run_paths(p, &init, &l.stem, cfg.havoc_range, cfg.max_states);
    let mut stem_path: BTreeMap<ProgramState, Vec<ProgramState>> = BTreeMap::new();
    for path in heads {
        stem_path
            .entry(path.last().expect("nonempty").clone())
            .or_insert(path);
    }
    let mut edges: BTreeMap<ProgramState, Vec<Vec<ProgramState>>> = BTreeMap::new();
    let mut frontier: Vec<ProgramState> = stem_path.keys().cloned().collect();
    let mut depth = 0;
    while !frontier.is_empty() && depth < cfg.unroll_bound && edges.len() < cfg.max_states {
        let mut next = Vec::new();
        for s in frontier {
            if edges.contains_key(&s) {
                continue;
            }
            let succ = run_paths(p, &s, &l.cycle, cfg.havoc_range, cfg.max_states);
            for path in &succ {
                let t = path.last().expect("nonempty").clone();
                if !edges.contains_key(&t) {
                    next.push(t);
                }
            }
            edges.insert(s, succ);
            if edges.len() >= cfg.max_states {
                break;
            }
        }
        frontier = next;
        depth += 1;
    }
    // a cycle in the explored loop-head graph, reached from a stem end
    for (start, prefix) in &stem_path {
        if let Some(cycle) = find_cycle(start, &edges) {
            return FeasibilityResult::Feasible(assemble(prefix, &cycle, n_threads));
        }
    }
    FeasibilityResult::NoWitnessFound
}

/// Depth-first search for a cycle reachable from `start`; returns the period
/// paths from `start` through the cycle back to its first state.
fn find_cycle(
    start: &ProgramState,
    edges: &BTreeMap<ProgramState, Vec<Vec<ProgramState>>>,
) -> Option<(Vec<Vec<ProgramState>>, usize)> {
    let mut on_stack: Vec<ProgramState> = vec![start.clone()];
    let mut chosen: Vec<Vec<ProgramState>> = Vec::new();
    let mut done: BTreeSet<ProgramState> = BTreeSet::new();
    let mut iters: Vec<usize> = vec![0];
    while let Some(&i) = iters.last() {
        let s = on_stack.last().expect("aligned stacks").clone();
        let succ = edges.get(&s).map(Vec::as_slice).unwrap_or(&[]);
        if i >= succ.len() {
            done.insert(s);
            on_stack.pop();
            iters.pop();
            chosen.pop();
            continue;
        }
        *iters.last_mut().expect("nonempty") += 1;
        let path = &succ[i];
        let t = path.last().expect("nonempty");
        if let Some(pos) = on_stack.iter().position(|x| x == t) {
            chosen.push(path.clone());
            return Some((chosen, pos));
        }
        if !done.contains(t) {
            chosen.push(path.clone());
            on_stack.push(t.clone());
            iters.push(0);
        }
    }
    None
}

fn assemble(
    prefix: &[ProgramState],
    cycle: &(Vec<Vec<ProgramState>>, usize),
    n_threads: usize,
) -> FeasibleWitness {
    let (periods, pos) = cycle;
    let mut states = prefix.to_vec();
    let mut heads = vec![states.len() - 1];
    for path in periods {
        states.extend(path[1..].iter().cloned());
        heads.push(states.len() - 1);
    }
    FeasibleWitness {
        n_threads,
        states,
        recurrence: (heads[*pos], *heads.last().expect("nonempty")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::program::{parse_lasso, parse_program};

    #[test]
    fn spinning_loop_recurs_after_one_period() {
        let p = parse_program(corpus::NONTERM_PROGRAM).unwrap();
        let l = parse_lasso(&p, corpus::NONTERM_LASSO).unwrap();
        let FeasibilityResult::Feasible(w) =
            check_lasso_feasibility(&p, &l, 1, &FeasibilityConfig::default())
        else {
            panic!("expected a witness");
        };
        assert_eq!(w.recurrence, (1, 3));
        assert!(w.replays(&p, &l));
    }

    #[test]
    fn decrementing_loop_has_no_witness() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let l = parse_lasso(&p, corpus::FIG3A_LASSO).unwrap();
        assert_eq!(
            check_lasso_feasibility(&p, &l, 1, &FeasibilityConfig::default()),
            FeasibilityResult::NoWitnessFound
        );
    }

    #[test]
    fn tampered_witness_does_not_replay() {
        let p = parse_program(corpus::NONTERM_PROGRAM).unwrap();
        let l = parse_lasso(&p, corpus::NONTERM_LASSO).unwrap();
        let FeasibilityResult::Feasible(mut w) =
            check_lasso_feasibility(&p, &l, 1, &FeasibilityConfig::default())
        else {
            panic!("expected a witness");
        };
        w.states[2].globals.insert("x".into(), 5);
        assert!(!w.replays(&p, &l));
    }
}
