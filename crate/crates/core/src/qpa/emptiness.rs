use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::logic::ThreadId;
use crate::program::{LassoWord, Letter};

use super::automaton::{subset, Cube, Qpa, Runner};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmptinessResult {
    /// No accepted word with at most `len_max` letters over at most `n_max` threads.
    EmptyUpTo { n_max: usize, len_max: usize },
    /// The least accepted word in (length, lexicographic, universe size) order.
    Counterexample { word: LassoWord, universe: usize },
    /// The configuration budget ran out before the bounds were covered.
    ResourceLimit { explored: usize },
}

#[derive(Clone, Debug)]
pub struct EmptinessConfig {
    pub n_max: usize,
    pub len_max: usize,
    /// Budget of configurations kept per universe size.
    pub max_configs: usize,
    /// Search universe sizes on separate threads.
    pub parallel: bool,
}

impl EmptinessConfig {
    pub fn new(n_max: usize, len_max: usize) -> EmptinessConfig {
        EmptinessConfig {
            n_max,
            len_max,
            max_configs: 2_000_000,
            parallel: true,
        }
    }
}

enum Outcome {
    Found(LassoWord),
    Empty,
    Limit(usize),
}

/// Breadth-first search over minimal configurations reading words right to
/// left. Each layer keeps, per configuration, the least suffix reaching it; a
/// configuration is dropped when a subset of it is reachable by a suffix that is
/// no larger. Acceptance is monotone under ⊆, so the least accepted word of each
/// length survives the pruning.
fn search_universe(qpa: &Qpa, n: usize, cfg: &EmptinessConfig, best_len: &AtomicUsize) -> Outcome {
    let universe: Vec<ThreadId> = (1..=n as ThreadId).collect();
    let mut runner = Runner::new(qpa, &universe);
    let letters: Vec<Letter> = (0..qpa.alphabet.len())
        .flat_map(|a| universe.iter().map(move |&t| (a, t)))
        .collect();
    let accepting = |c: &Cube| c.iter().all(|f| qpa.preds[f.pred as usize].accepting);
    let mut layer: Vec<(Cube, LassoWord)> = runner
        .frontier(runner.initial())
        .iter()
        .map(|c| (c.clone(), Vec::new()))
        .collect();
    let mut explored = layer.len();
    for depth in 0..=cfg.len_max {
        if depth > best_len.load(Ordering::Relaxed) {
            return Outcome::Empty;
        }
        if depth > 0 {
            if let Some(w) = layer
                .iter()
                .filter(|(c, _)| accepting(c))
                .map(|(_, w)| w)
                .min()
            {
                best_len.fetch_min(depth, Ordering::Relaxed);
                return Outcome::Found(w.clone());
            }
        }
        if depth == cfg.len_max || layer.is_empty() {
            break;
        }
        let mut next: HashMap<Cube, LassoWord> = HashMap::new();
        for (cube, suffix) in &layer {
            for &(a, t) in &letters {
                for succ in runner.successors(cube, a, t) {
                    let mut w = Vec::with_capacity(suffix.len() + 1);
                    w.push((a, t));
                    w.extend_from_slice(suffix);
                    match next.get_mut(&succ) {
                        Some(old) if *old <= w => {}
                        Some(old) => *old = w,
                        None => {
                            next.insert(succ, w);
                        }
                    }
                }
            }
        }
        // prune configurations subsumed by a smaller one with a no-larger suffix
        let mut items: Vec<(Cube, LassoWord)> = next.into_iter().collect();
        items.sort_by(|x, y| {
            x.0.len()
                .cmp(&y.0.len())
                .then_with(|| x.1.cmp(&y.1))
                .then_with(|| x.0.cmp(&y.0))
        });
        let mut kept: Vec<(Cube, LassoWord)> = Vec::new();
        for (c, w) in items {
            if !kept.iter().any(|(k, kw)| *kw <= w && subset(k, &c)) {
                kept.push((c, w));
            }
        }
        explored += kept.len();
        if explored > cfg.max_configs {
            return Outcome::Limit(explored);
        }
        layer = kept;
    }
    Outcome::Empty
}

/// Look for an accepted word of at most `len_max` letters over universes
/// `{1..N}`, `N ≤ n_max`. The reported counterexample is the least in
/// (length, lexicographic, N) order regardless of how work is scheduled.
pub fn bounded_emptiness(qpa: &Qpa, cfg: &EmptinessConfig) -> EmptinessResult {
    let best_len = AtomicUsize::new(usize::MAX);
    let outcomes: Vec<(usize, Outcome)> = if cfg.parallel && cfg.n_max > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = (1..=cfg.n_max)
                .map(|n| {
                    let best_len = &best_len;
                    s.spawn(move || (n, search_universe(qpa, n, cfg, best_len)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("emptiness worker panicked"))
                .collect()
        })
    } else {
        (1..=cfg.n_max)
            .map(|n| (n, search_universe(qpa, n, cfg, &best_len)))
            .collect()
    };
    let mut best: Option<(usize, LassoWord, usize)> = None;
    let mut limit = None;
    for (n, o) in outcomes {
        match o {
            Outcome::Found(w) => {
                let key = (w.len(), w, n);
                if best.as_ref().is_none_or(|b| key < *b) {
                    best = Some(key);
                }
            }
            Outcome::Limit(e) => limit = Some(limit.unwrap_or(0).max(e)),
            Outcome::Empty => {}
        }
    }
    match (best, limit) {
        (Some((_, word, universe)), _) => EmptinessResult::Counterexample { word, universe },
        (None, Some(explored)) => EmptinessResult::ResourceLimit { explored },
        (None, None) => EmptinessResult::EmptyUpTo {
            n_max: cfg.n_max,
            len_max: cfg.len_max,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpa::{accepts_with_universe, parse_qpa, Formula};

    #[test]
    fn false_start_is_empty() {
        let mut a = parse_qpa("alphabet a $\npred q/1\nstart false").unwrap();
        a.start = Formula::False;
        assert_eq!(
            bounded_emptiness(&a, &EmptinessConfig::new(2, 4)),
            EmptinessResult::EmptyUpTo {
                n_max: 2,
                len_max: 4
            }
        );
    }

    #[test]
    fn finds_least_word() {
        // accepts words whose first letter is `b` executed by some thread
        let a = parse_qpa("alphabet a b $\npred q/0\npred done/0 accepting\nstart q\ndelta q a := q\ndelta q b := q | done\ndelta done * := done").unwrap();
        // reading right to left, `done` must be reached; `q` must vanish, which never
        // happens since q → q ∨ done keeps a minimal model `done` only after a `b`
        match bounded_emptiness(&a, &EmptinessConfig::new(2, 3)) {
            EmptinessResult::Counterexample { word, universe } => {
                assert_eq!(word, vec![(1, 1)]);
                assert_eq!(universe, 1);
                assert!(accepts_with_universe(&a, &word, &[1]));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
