//! Deterministic automata for the lasso words `u$v` of a Büchi language,
//! built from reachable state sets and transition profiles.

use std::collections::{HashMap, VecDeque};

use super::buchi::BuchiAutomaton;

/// A complete DFA over letters `0..num_letters` plus `$` (= `num_letters`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoDfa {
    pub num_letters: usize,
    /// `delta[state][letter]`, letter `num_letters` being `$`.
    pub delta: Vec<Vec<usize>>,
    pub initial: usize,
    pub accepting: Vec<bool>,
}

impl LassoDfa {
    pub fn dollar(&self) -> usize {
        self.num_letters
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn run(&self, word: &[usize]) -> usize {
        word.iter().fold(self.initial, |q, &a| self.delta[q][a])
    }

    pub fn accepts(&self, word: &[usize]) -> bool {
        self.accepting[self.run(word)]
    }

    /// Does the DFA accept `u $ v`?
    pub fn accepts_lasso(&self, u: &[usize], v: &[usize]) -> bool {
        let mut w = u.to_vec();
        w.push(self.dollar());
        w.extend_from_slice(v);
        self.accepts(&w)
    }

    /// The equivalent DFA with the fewest states (Moore partition refinement),
    /// keeping only states reachable from the initial one.
    pub fn minimize(&self) -> LassoDfa {
        let letters = self.num_letters + 1;
        let mut reach = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        reach[self.initial] = true;
        let mut i = 0;
        while i < order.len() {
            for &t in &self.delta[order[i]] {
                if !reach[t] {
                    reach[t] = true;
                    order.push(t);
                }
            }
            i += 1;
        }
        let mut class: Vec<usize> = (0..self.num_states())
            .map(|q| usize::from(self.accepting[q]))
            .collect();
        loop {
            let mut ids: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let mut next = vec![0; self.num_states()];
            for &q in &order {
                let sig = (
                    class[q],
                    (0..letters).map(|a| class[self.delta[q][a]]).collect(),
                );
                let n = ids.len();
                next[q] = *ids.entry(sig).or_insert(n);
            }
            let stable = order.iter().all(|&p| {
                order
                    .iter()
                    .all(|&q| (class[p] == class[q]) == (next[p] == next[q]))
            });
            class = next;
            if stable {
                break;
            }
        }
        let count = order.iter().map(|&q| class[q]).max().map_or(0, |m| m + 1);
        let mut delta = vec![Vec::new(); count];
        let mut accepting = vec![false; count];
        for &q in &order {
            delta[class[q]] = self.delta[q].iter().map(|&t| class[t]).collect();
            accepting[class[q]] = self.accepting[q];
        }
        LassoDfa {
            num_letters: self.num_letters,
            delta,
            initial: class[self.initial],
            accepting,
        }
    }
}

/// 0 = unreachable, 1 = reachable, 2 = reachable through an accepting state.
type Profile = Vec<u8>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum DState {
    /// Büchi states reachable on the prefix read so far.
    Prefix(Vec<bool>),
    /// After `$`: the prefix set and the profile of the periodic part (none while empty).
    Period(Vec<bool>, Option<Profile>),
    Reject,
}

struct ProfileOps<'a> {
    b: &'a BuchiAutomaton,
    n: usize,
}

impl ProfileOps<'_> {
    fn letter(&self, a: usize) -> Profile {
        let mut p = vec![0; self.n * self.n];
        for q in 0..self.n {
            for &r in &self.b.delta[q][a] {
                p[q * self.n + r] = if self.b.accepting[r] { 2 } else { 1 };
            }
        }
        p
    }

    fn compose(&self, x: &Profile, y: &Profile) -> Profile {
        let n = self.n;
        let mut out = vec![0; n * n];
        for p in 0..n {
            for q in 0..n {
                let a = x[p * n + q];
                if a == 0 {
                    continue;
                }
                for r in 0..n {
                    let b = y[q * n + r];
                    if b != 0 {
                        let c = a.max(b);
                        if c > out[p * n + r] {
                            out[p * n + r] = c;
                        }
                    }
                }
            }
        }
        out
    }

    /// Some state reachable from `s` under `profile*` lies on a profile cycle
    /// through an accepting-flagged edge.
    fn accepting(&self, s: &[bool], profile: &Profile) -> bool {
        let n = self.n;
        let closure = |from: &mut Vec<bool>| {
            let mut stack: Vec<usize> = (0..n).filter(|&q| from[q]).collect();
            while let Some(q) = stack.pop() {
                for r in 0..n {
                    if profile[q * n + r] != 0 && !from[r] {
                        from[r] = true;
                        stack.push(r);
                    }
                }
            }
        };
        let mut reach = s.to_vec();
        closure(&mut reach);
        (0..n).any(|a| {
            reach[a]
                && (0..n).any(|b| {
                    if profile[a * n + b] != 2 {
                        return false;
                    }
                    let mut from = vec![false; n];
                    from[b] = true;
                    closure(&mut from);
                    from[a]
                })
        })
    }

    fn post(&self, s: &[bool], a: usize) -> Vec<bool> {
        let mut out = vec![false; self.n];
        for q in (0..self.n).filter(|&q| s[q]) {
            for &r in &self.b.delta[q][a] {
                out[r] = true;
            }
        }
        out
    }
}

/// A DFA accepting exactly the words `u$v` with nonempty `v` such that `u v^ω`
/// is accepted by `b`.
pub fn buchi_lasso_dfa(b: &BuchiAutomaton) -> LassoDfa {
    let ops = ProfileOps {
        b,
        n: b.num_states(),
    };
    let dollar = b.num_letters;
    let letter_profiles: Vec<Profile> = (0..b.num_letters).map(|a| ops.letter(a)).collect();
    let mut init = vec![false; ops.n];
    for &q in &b.initial {
        init[q] = true;
    }
    let mut index: HashMap<DState, usize> = HashMap::new();
    let mut states: Vec<DState> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |s: DState, states: &mut Vec<DState>, queue: &mut VecDeque<usize>| -> usize {
        *index.entry(s.clone()).or_insert_with(|| {
            states.push(s);
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };
    let initial = intern(DState::Prefix(init), &mut states, &mut queue);
    let mut delta: Vec<Vec<usize>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let mut row = Vec::with_capacity(dollar + 1);
        for a in 0..=dollar {
            let next = match (&states[i], a == dollar) {
                (DState::Prefix(s), false) => DState::Prefix(ops.post(s, a)),
                (DState::Prefix(s), true) => DState::Period(s.clone(), None),
                (DState::Period(s, p), false) => {
                    let q = match p {
                        None => letter_profiles[a].clone(),
                        Some(p) => ops.compose(p, &letter_profiles[a]),
                    };
                    DState::Period(s.clone(), Some(q))
                }
                (DState::Period(..), true) | (DState::Reject, _) => DState::Reject,
            };
            row.push(intern(next, &mut states, &mut queue));
        }
        if delta.len() <= i {
            delta.resize(i + 1, Vec::new());
        }
        delta[i] = row;
    }
    let accepting = states
        .iter()
        .map(|s| match s {
            DState::Period(s, Some(p)) => ops.accepting(s, p),
            _ => false,
        })
        .collect();
    LassoDfa {
        num_letters: dollar,
        delta,
        initial,
        accepting,
    }
}
