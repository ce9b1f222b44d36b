//! Enumerators, random generators and independent reference implementations
//! shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;

use pspace::logic::{Oracle, OracleConfig, ThreadId};
use pspace::program::{IndexedCommand, Lasso, Letter, ParameterizedProgram};
use pspace::qltl::BuchiAutomaton;
use pspace::qpa::{candidate_universes, Formula, Predicate, Qpa, Runner, DEFAULT_FRESH_CAP};
use pspace::smt::SmtSolver;

/// The oracle used by the tests: z3 when it is installed, the built-in
/// decision procedures otherwise.
pub fn oracle() -> Oracle {
    Oracle::new(OracleConfig {
        prover: SmtSolver::detect_z3(),
        ..OracleConfig::default()
    })
}

/// Every indexed command of `p` with a thread id in `1..=n`.
pub fn indexed_letters(p: &ParameterizedProgram, n: usize) -> Vec<IndexedCommand> {
    let mut out = Vec::new();
    for c in &p.commands {
        for t in 1..=n as ThreadId {
            out.push(IndexedCommand::new(c.clone(), t));
        }
    }
    out
}

/// All words over `letters` with length in `min..=max`.
pub fn words<T: Clone>(letters: &[T], min: usize, max: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<T>> = vec![vec![]];
    for len in 0..=max {
        if len >= min {
            out.extend(layer.iter().cloned());
        }
        if len == max {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |l| {
                    let mut v = w.clone();
                    v.push(l.clone());
                    v
                })
            })
            .collect();
    }
    out
}

/// All lassos over `letters` with `|stem| ≤ stem_max` and `1 ≤ |loop| ≤ loop_max`.
pub fn all_lassos(letters: &[IndexedCommand], stem_max: usize, loop_max: usize) -> Vec<Lasso> {
    let stems = words(letters, 0, stem_max);
    let loops = words(letters, 1, loop_max);
    let mut out = Vec::with_capacity(stems.len() * loops.len());
    for s in &stems {
        for c in &loops {
            out.push(Lasso::new(s.clone(), c.clone()).expect("nonempty loop"));
        }
    }
    out
}

/// Evaluate `f` on every item using all cores; returns the number of
/// failing items and the first few of them.
pub fn violations<T: Sync + Clone + Send>(
    items: &[T],
    f: impl Fn(&T) -> bool + Sync,
) -> (usize, Vec<T>) {
    violations_with(items, || (), |_, it| f(it))
}

/// Like [`violations`], with per-worker mutable state built by `init`
/// (for memoizing automaton runners, which are not thread-safe).
pub fn violations_with<T: Sync + Clone + Send, S>(
    items: &[T],
    init: impl Fn() -> S + Sync,
    f: impl Fn(&mut S, &T) -> bool + Sync,
) -> (usize, Vec<T>) {
    let threads = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .min(16);
    let next = AtomicUsize::new(0);
    let count = AtomicUsize::new(0);
    let bad = Mutex::new(Vec::new());
    const CHUNK: usize = 256;
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| {
                let mut state = init();
                loop {
                    let start = next.fetch_add(CHUNK, Ordering::Relaxed);
                    if start >= items.len() {
                        break;
                    }
                    for it in &items[start..(start + CHUNK).min(items.len())] {
                        if !f(&mut state, it) {
                            count.fetch_add(1, Ordering::Relaxed);
                            let mut b = bad.lock().unwrap();
                            if b.len() < 5 {
                                b.push(it.clone());
                            }
                        }
                    }
                }
            });
        }
    });
    (count.into_inner(), bad.into_inner().unwrap())
}

/// Memoizing equivalent of [`pspace::qpa::accepts`]: one runner per universe.
pub struct Acceptor<'a> {
    qpa: &'a Qpa,
    runners: HashMap<Vec<ThreadId>, Runner<'a>>,
}

impl<'a> Acceptor<'a> {
    pub fn new(qpa: &'a Qpa) -> Acceptor<'a> {
        Acceptor {
            qpa,
            runners: HashMap::new(),
        }
    }

    pub fn accepts_over(&mut self, word: &[Letter], universe: &[ThreadId]) -> bool {
        let qpa = self.qpa;
        self.runners
            .entry(universe.to_vec())
            .or_insert_with(|| Runner::new(qpa, universe))
            .accepts(word)
    }

    pub fn accepts(&mut self, word: &[Letter]) -> bool {
        candidate_universes(word, DEFAULT_FRESH_CAP)
            .iter()
            .any(|u| self.accepts_over(word, u))
    }
}

/// A random QPA with at most `max_preds` predicates of arity ≤ 1 over the
/// letters `a` and `b`. Transition bodies are small positive formulas over the
/// executing thread (variable 0), the predicate argument (variable 1) and one
/// bound variable (variable 2).
pub fn random_qpa(rng: &mut impl Rng, max_preds: usize) -> Qpa {
    let n = rng.gen_range(1..=max_preds);
    let preds: Vec<Predicate> = (0..n)
        .map(|i| Predicate {
            name: format!("p{i}"),
            arity: rng.gen_range(0..=1),
            accepting: rng.gen_bool(0.4),
        })
        .collect();
    let mut qpa = Qpa::new(preds.clone(), vec!["a".into(), "b".into()]).unwrap();
    for (p, pred) in preds.iter().enumerate() {
        for letter in 0..2 {
            let body = random_body(rng, &preds, pred.arity as u32, 2);
            qpa.set_delta(p, letter, body);
        }
    }
    qpa.start = random_start(rng, &preds);
    qpa.validate().unwrap();
    qpa
}

fn random_atom(rng: &mut impl Rng, preds: &[Predicate], vars: &[u32]) -> Formula {
    match rng.gen_range(0..10) {
        0 => Formula::True,
        1 => Formula::False,
        2 if vars.len() >= 2 => Formula::Eq(vars[0], vars[vars.len() - 1]),
        3 if vars.len() >= 2 => Formula::Ne(vars[0], vars[vars.len() - 1]),
        _ => {
            let q = rng.gen_range(0..preds.len());
            let args: Vec<u32> = (0..preds[q].arity)
                .map(|_| vars[rng.gen_range(0..vars.len())])
                .collect();
            Formula::pred(q, args)
        }
    }
}

fn random_body(rng: &mut impl Rng, preds: &[Predicate], arity: u32, depth: usize) -> Formula {
    let mut vars: Vec<u32> = (0..=arity).collect();
    if depth == 0 {
        return random_atom(rng, preds, &vars);
    }
    match rng.gen_range(0..6) {
        0 => Formula::and([
            random_body(rng, preds, arity, depth - 1),
            random_body(rng, preds, arity, depth - 1),
        ]),
        1 => Formula::or([
            random_body(rng, preds, arity, depth - 1),
            random_body(rng, preds, arity, depth - 1),
        ]),
        2 | 3 => {
            vars.push(2);
            let inner = Formula::or([
                random_atom(rng, preds, &vars),
                random_atom(rng, preds, &vars),
            ]);
            if rng.gen_bool(0.5) {
                Formula::Forall(2, Box::new(inner))
            } else {
                Formula::Exists(2, Box::new(inner))
            }
        }
        _ => random_atom(rng, preds, &vars),
    }
}

fn random_start(rng: &mut impl Rng, preds: &[Predicate]) -> Formula {
    let q = rng.gen_range(0..preds.len());
    let atom = Formula::pred(q, (0..preds[q].arity).map(|_| 1));
    if preds[q].arity == 0 {
        atom
    } else if rng.gen_bool(0.5) {
        Formula::Forall(1, Box::new(atom))
    } else {
        Formula::Exists(1, Box::new(atom))
    }
}

/// A random Büchi automaton over `letters` letters with at most `max_states` states.
pub fn random_buchi(rng: &mut impl Rng, max_states: usize, letters: usize) -> BuchiAutomaton {
    let n = rng.gen_range(1..=max_states);
    let delta = (0..n)
        .map(|_| {
            (0..letters)
                .map(|_| (0..n).filter(|_| rng.gen_bool(0.4)).collect())
                .collect()
        })
        .collect();
    let accepting = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let initial = (0..n).filter(|&q| q == 0 || rng.gen_bool(0.2)).collect();
    BuchiAutomaton {
        num_letters: letters,
        initial,
        delta,
        accepting,
    }
}

/// Reference membership of `u v^ω` in a Büchi automaton: in the graph whose
/// edges are runs over one period `v`, look for a cycle through an accepting
/// visit that is reachable from a state reached after `u`.
pub fn reference_buchi_lasso(b: &BuchiAutomaton, u: &[usize], v: &[usize]) -> bool {
    let n = b.num_states();
    let step = |set: &[bool], a: usize| {
        let mut out = vec![false; n];
        for q in 0..n {
            if set[q] {
                for &r in &b.delta[q][a] {
                    out[r] = true;
                }
            }
        }
        out
    };
    let mut cur = vec![false; n];
    for &q in &b.initial {
        cur[q] = true;
    }
    for &a in u {
        cur = step(&cur, a);
    }
    let heads = cur;
    // from a loop-head state h, can one period-aligned cycle pass through an accepting state?
    // period graph edges: h --v--> h' with flag "visited accepting".
    let period = |h: usize| -> Vec<(usize, bool)> {
        let mut layer: Vec<(usize, bool)> = vec![(h, b.accepting[h])];
        for &a in v {
            let mut next = Vec::new();
            for &(q, acc) in &layer {
                for &r in &b.delta[q][a] {
                    let e = (r, acc || b.accepting[r]);
                    if !next.contains(&e) {
                        next.push(e);
                    }
                }
            }
            layer = next;
        }
        layer
    };
    let edges: Vec<Vec<(usize, bool)>> = (0..n).map(period).collect();
    let reach = |from: usize| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        while let Some(q) = stack.pop() {
            for &(r, _) in &edges[q] {
                if !seen[r] {
                    seen[r] = true;
                    stack.push(r);
                }
            }
        }
        seen
    };
    let reach_all: Vec<Vec<bool>> = (0..n).map(reach).collect();
    (0..n).filter(|&h| heads[h]).any(|h| {
        // an accepting period edge x -> y with x reachable from h and x reachable from y
        (0..n).filter(|&x| x == h || reach_all[h][x]).any(|x| {
            edges[x]
                .iter()
                .any(|&(y, acc)| acc && (y == x || reach_all[y][x]))
        })
    })
}

/// A random lasso over `letters` with `|stem| ≤ stem_max`, `1 ≤ |loop| ≤ loop_max`.
pub fn random_lasso(
    rng: &mut impl Rng,
    letters: &[IndexedCommand],
    stem_max: usize,
    loop_max: usize,
) -> Lasso {
    let pick = |rng: &mut _, len| {
        (0..len)
            .map(|_| letters[Rng::gen_range(rng, 0..letters.len())].clone())
            .collect()
    };
    let stem_len = rng.gen_range(0..=stem_max);
    let loop_len = rng.gen_range(1..=loop_max);
    let stem = pick(rng, stem_len);
    let cycle = pick(rng, loop_len);
    Lasso::new(stem, cycle).unwrap()
}
