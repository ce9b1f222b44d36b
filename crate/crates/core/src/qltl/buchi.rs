//! Büchi automata for quantifier-free matrices over the letters
//! `(command, class)`, built by tableau expansion of obligation sets.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::{Qltl, QltlError};

/// A nondeterministic Büchi automaton with state-based acceptance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuchiAutomaton {
    pub num_letters: usize,
    pub initial: Vec<usize>,
    /// `delta[state][letter]` = successor states.
    pub delta: Vec<Vec<Vec<usize>>>,
    pub accepting: Vec<bool>,
}

impl BuchiAutomaton {
    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    /// Is `u v^ω` accepted? (Direct product with the lasso's position graph.)
    pub fn accepts_lasso(&self, u: &[usize], v: &[usize]) -> bool {
        assert!(!v.is_empty(), "the periodic part must be nonempty");
        let word: Vec<usize> = u.iter().chain(v).copied().collect();
        let len = word.len();
        let succ = |p: usize| if p + 1 < len { p + 1 } else { u.len() };
        let n = self.num_states();
        let id = |q: usize, p: usize| q * len + p;
        let edges = |node: usize| {
            let (q, p) = (node / len, node % len);
            self.delta[q][word[p]].iter().map(move |&r| id(r, succ(p)))
        };
        let mut seen = vec![false; n * len];
        let mut stack: Vec<usize> = self.initial.iter().map(|&q| id(q, 0)).collect();
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(x) = stack.pop() {
            for y in edges(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        // an accepting loop node reachable from the start that reaches itself again
        (0..n * len)
            .filter(|&x| seen[x] && self.accepting[x / len] && x % len >= u.len())
            .any(|x| {
                let mut reach = vec![false; n * len];
                let mut stack: Vec<usize> = edges(x).collect();
                while let Some(y) = stack.pop() {
                    if y == x {
                        return true;
                    }
                    if !reach[y] {
                        reach[y] = true;
                        stack.extend(edges(y));
                    }
                }
                false
            })
    }
}

/// Formula nodes in negation normal form; literals are sets of letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Letters(Vec<bool>),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    ids: HashMap<Node, usize>,
}

impl Arena {
    fn add(&mut self, n: Node) -> usize {
        let n = match n {
            Node::And(a, b) if self.nodes[a] == Node::False || self.nodes[b] == Node::False => {
                Node::False
            }
            Node::And(a, b) if self.nodes[a] == Node::True => return b,
            Node::And(a, b) if self.nodes[b] == Node::True || a == b => return a,
            Node::Or(a, b) if self.nodes[a] == Node::True || self.nodes[b] == Node::True => {
                Node::True
            }
            Node::Or(a, b) if self.nodes[a] == Node::False => return b,
            Node::Or(a, b) if self.nodes[b] == Node::False || a == b => return a,
            Node::Letters(ref m) if m.iter().all(|&x| x) => Node::True,
            Node::Letters(ref m) if m.iter().all(|&x| !x) => Node::False,
            n => n,
        };
        if let Some(&i) = self.ids.get(&n) {
            return i;
        }
        self.nodes.push(n.clone());
        self.ids.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }
}

struct Translation<'a> {
    commands: &'a [String],
    vars: &'a [String],
    arena: Arena,
}

impl Translation<'_> {
    fn num_letters(&self) -> usize {
        self.commands.len() * (self.vars.len() + 1)
    }

    fn class_of(&self, v: &str) -> Result<usize, QltlError> {
        self.vars
            .iter()
            .position(|x| x == v)
            .map(|j| j + 1)
            .ok_or_else(|| QltlError::FreeVariable(v.into()))
    }

    fn nnf(&mut self, f: &Qltl, positive: bool) -> Result<usize, QltlError> {
        let k1 = self.vars.len() + 1;
        let node = match f {
            Qltl::True | Qltl::False => {
                if (*f == Qltl::True) == positive {
                    Node::True
                } else {
                    Node::False
                }
            }
            Qltl::Exec { command, var } => {
                let class = self.class_of(var)?;
                let mut mask = vec![!positive; self.num_letters()];
                if let Some(c) = self.commands.iter().position(|x| x == command) {
                    mask[c * k1 + class - 1] = positive;
                }
                Node::Letters(mask)
            }
            Qltl::Eq(a, b) => {
                let same = self.class_of(a)? == self.class_of(b)?;
                if same == positive {
                    Node::True
                } else {
                    Node::False
                }
            }
            Qltl::Not(a) => return self.nnf(a, !positive),
            Qltl::And(a, b) | Qltl::Or(a, b) => {
                let (x, y) = (self.nnf(a, positive)?, self.nnf(b, positive)?);
                if matches!(f, Qltl::And(..)) == positive {
                    Node::And(x, y)
                } else {
                    Node::Or(x, y)
                }
            }
            Qltl::Next(a) => Node::Next(self.nnf(a, positive)?),
            Qltl::Until(a, b) | Qltl::Release(a, b) => {
                let (x, y) = (self.nnf(a, positive)?, self.nnf(b, positive)?);
                if matches!(f, Qltl::Until(..)) == positive {
                    Node::Until(x, y)
                } else {
                    Node::Release(x, y)
                }
            }
            Qltl::Forall(v, _) | Qltl::Exists(v, _) => {
                return Err(QltlError::QuantifierUnderTemporal(v.clone()))
            }
        };
        Ok(self.arena.add(node))
    }

    /// All ways to discharge `todo` on `letter`: (next obligations, postponed untils).
    fn expand(&self, todo: Vec<usize>, letter: usize) -> Vec<(BTreeSet<usize>, BTreeSet<usize>)> {
        let mut out = Vec::new();
        self.go(
            todo,
            BTreeSet::new(),
            BTreeSet::new(),
            BTreeSet::new(),
            letter,
            &mut out,
        );
        out.sort();
        out.dedup();
        out
    }

    fn go(
        &self,
        mut todo: Vec<usize>,
        mut done: BTreeSet<usize>,
        mut next: BTreeSet<usize>,
        mut postponed: BTreeSet<usize>,
        letter: usize,
        out: &mut Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
    ) {
        while let Some(f) = todo.pop() {
            if !done.insert(f) {
                continue;
            }
            match self.arena.nodes[f] {
                Node::True => {}
                Node::False => return,
                Node::Letters(ref m) => {
                    if !m[letter] {
                        return;
                    }
                }
                Node::And(a, b) => todo.extend([a, b]),
                Node::Next(a) => {
                    next.insert(a);
                }
                Node::Or(a, b) => {
                    let mut t2 = todo.clone();
                    t2.push(b);
                    self.go(
                        t2,
                        done.clone(),
                        next.clone(),
                        postponed.clone(),
                        letter,
                        out,
                    );
                    todo.push(a);
                }
                Node::Until(a, b) => {
                    let mut t2 = todo.clone();
                    t2.push(b);
                    self.go(
                        t2,
                        done.clone(),
                        next.clone(),
                        postponed.clone(),
                        letter,
                        out,
                    );
                    todo.push(a);
                    next.insert(f);
                    postponed.insert(f);
                }
                Node::Release(a, b) => {
                    let mut t2 = todo.clone();
                    t2.extend([a, b]);
                    self.go(
                        t2,
                        done.clone(),
                        next.clone(),
                        postponed.clone(),
                        letter,
                        out,
                    );
                    todo.push(b);
                    next.insert(f);
                }
            }
        }
        out.push((next, postponed));
    }
}

/// A Büchi automaton over letters `c·(k+1) + (class − 1)` (command index `c`
/// in `commands`, class `j ≤ k` for `vars[j−1]`, class `k+1` for every other
/// thread) accepting exactly the words satisfying the quantifier-free `matrix`.
pub fn matrix_to_buchi(
    matrix: &Qltl,
    vars: &[String],
    commands: &[String],
) -> Result<BuchiAutomaton, QltlError> {
    let mut tr = Translation {
        commands,
        vars,
        arena: Arena::default(),
    };
    let root = tr.nnf(matrix, true)?;
    let num_letters = tr.num_letters();
    let untils: Vec<usize> = (0..tr.arena.nodes.len())
        .filter(|&i| matches!(tr.arena.nodes[i], Node::Until(..)))
        .collect();
    let m = untils.len();

    // states are (obligations, degeneralisation counter in 0..=m); counter m is accepting
    let mut index: HashMap<(BTreeSet<usize>, usize), usize> = HashMap::new();
    let mut states: Vec<(BTreeSet<usize>, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern =
        |s: (BTreeSet<usize>, usize), states: &mut Vec<_>, queue: &mut VecDeque<usize>| {
            *index.entry(s.clone()).or_insert_with(|| {
                states.push(s);
                queue.push_back(states.len() - 1);
                states.len() - 1
            })
        };
    let init = intern((BTreeSet::from([root]), 0), &mut states, &mut queue);
    let mut delta: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut expansions: HashMap<(BTreeSet<usize>, usize), Vec<(BTreeSet<usize>, BTreeSet<usize>)>> =
        HashMap::new();
    while let Some(s) = queue.pop_front() {
        let (obl, counter) = states[s].clone();
        let base = if counter == m { 0 } else { counter };
        let mut row = vec![Vec::new(); num_letters];
        for (letter, succs) in row.iter_mut().enumerate() {
            let key = (obl.clone(), letter);
            let exps = expansions
                .entry(key)
                .or_insert_with(|| tr.expand(obl.iter().copied().collect(), letter))
                .clone();
            for (next, postponed) in exps {
                let mut j = base;
                while j < m && !postponed.contains(&untils[j]) {
                    j += 1;
                }
                let t = intern((next, j), &mut states, &mut queue);
                if !succs.contains(&t) {
                    succs.push(t);
                }
            }
        }
        if delta.len() <= s {
            delta.resize(s + 1, Vec::new());
        }
        delta[s] = row;
    }
    delta.resize(states.len(), vec![Vec::new(); num_letters]);
    let accepting = states.iter().map(|(_, c)| *c == m).collect();
    Ok(BuchiAutomaton {
        num_letters,
        initial: vec![init],
        delta,
        accepting,
    })
}
