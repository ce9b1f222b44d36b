use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::logic::ThreadId;
use crate::program::Letter;

use super::formula::{Formula, PredId, QVar};
use super::QpaError;

/// Largest predicate arity supported by ground facts.
pub const MAX_ARITY: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
    pub accepting: bool,
}

/// A quantified predicate automaton. Words are read right to left.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qpa {
    pub preds: Vec<Predicate>,
    pub alphabet: Vec<String>,
    delta: Vec<Formula>,
    pub start: Formula,
}

impl Qpa {
    /// An automaton with all transitions `false` and start `false`.
    pub fn new(preds: Vec<Predicate>, alphabet: Vec<String>) -> Result<Qpa, QpaError> {
        if let Some(p) = preds.iter().find(|p| p.arity > MAX_ARITY) {
            return Err(QpaError::Arity(p.name.clone(), p.arity));
        }
        let n = preds.len() * alphabet.len();
        Ok(Qpa {
            preds,
            alphabet,
            delta: vec![Formula::False; n],
            start: Formula::False,
        })
    }

    pub fn delta(&self, p: PredId, letter: usize) -> &Formula {
        &self.delta[p * self.alphabet.len() + letter]
    }

    pub fn set_delta(&mut self, p: PredId, letter: usize, body: Formula) {
        let n = self.alphabet.len();
        self.delta[p * n + letter] = body;
    }

    pub fn letter(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    pub fn pred_index(&self, name: &str) -> Option<PredId> {
        self.preds.iter().position(|p| p.name == name)
    }

    /// Largest variable id used anywhere (sizes evaluation environments).
    pub fn max_var(&self) -> QVar {
        let m = self
            .delta
            .iter()
            .chain(std::iter::once(&self.start))
            .filter_map(Formula::max_var)
            .max()
            .unwrap_or(0);
        let a = self
            .preds
            .iter()
            .map(|p| p.arity as QVar)
            .max()
            .unwrap_or(0);
        m.max(a)
    }

    /// Check arities, closedness of `start`, and free variables of bodies.
    pub fn validate(&self) -> Result<(), QpaError> {
        let mut err = None;
        let mut check = |f: &Formula| {
            f.visit_preds(&mut |p, args| {
                if p >= self.preds.len() {
                    err.get_or_insert(QpaError::UnknownPredicate(format!("#{p}")));
                } else if self.preds[p].arity != args.len() {
                    err.get_or_insert(QpaError::Arity(self.preds[p].name.clone(), args.len()));
                }
            })
        };
        check(&self.start);
        for f in &self.delta {
            check(f);
        }
        if let Some(e) = err {
            return Err(e);
        }
        if !self.start.free_vars().is_empty() {
            return Err(QpaError::NotClosed("start".into()));
        }
        for (p, pred) in self.preds.iter().enumerate() {
            for a in 0..self.alphabet.len() {
                if self
                    .delta(p, a)
                    .free_vars()
                    .iter()
                    .any(|&v| v as usize > pred.arity)
                {
                    return Err(QpaError::NotClosed(format!(
                        "delta {}({})",
                        pred.name, self.alphabet[a]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A ground proposition `q(t̄)`; unused argument slots are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub pred: u32,
    pub args: [ThreadId; MAX_ARITY],
}

impl Fact {
    pub fn new(pred: PredId, args: &[ThreadId]) -> Fact {
        let mut a = [0; MAX_ARITY];
        a[..args.len()].copy_from_slice(args);
        Fact {
            pred: pred as u32,
            args: a,
        }
    }

    pub fn args<'a>(&'a self, qpa: &Qpa) -> &'a [ThreadId] {
        &self.args[..qpa.preds[self.pred as usize].arity]
    }
}

/// A finite structure: universe of thread ids plus the true ground facts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub universe: Vec<ThreadId>,
    pub facts: BTreeSet<Fact>,
}

impl Configuration {
    pub fn new(
        universe: impl IntoIterator<Item = ThreadId>,
        facts: impl IntoIterator<Item = Fact>,
    ) -> Configuration {
        let mut u: Vec<ThreadId> = universe.into_iter().collect();
        u.sort_unstable();
        u.dedup();
        Configuration {
            universe: u,
            facts: facts.into_iter().collect(),
        }
    }

    pub fn is_accepting(&self, qpa: &Qpa) -> bool {
        self.facts
            .iter()
            .all(|f| qpa.preds[f.pred as usize].accepting)
    }

    pub fn display<'a>(&'a self, qpa: &'a Qpa) -> impl fmt::Display + 'a {
        DisplayConfig(self, qpa)
    }
}

struct DisplayConfig<'a>(&'a Configuration, &'a Qpa);

impl fmt::Display for DisplayConfig<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u: Vec<String> = self.0.universe.iter().map(|t| t.to_string()).collect();
        write!(f, "universe {{{}}} facts {{", u.join(", "))?;
        for (n, fact) in self.0.facts.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            let p = &self.1.preds[fact.pred as usize];
            write!(f, "{}", p.name)?;
            if p.arity > 0 {
                let a: Vec<String> = fact.args(self.1).iter().map(|t| t.to_string()).collect();
                write!(f, "({})", a.join(", "))?;
            }
        }
        write!(f, "}}")
    }
}

/// Evaluate a formula in a configuration under an environment.
pub fn eval_qpa_formula(
    c: &Configuration,
    env: &BTreeMap<QVar, ThreadId>,
    phi: &Formula,
) -> Result<bool, QpaError> {
    fn go(
        c: &Configuration,
        env: &mut Vec<(QVar, ThreadId)>,
        f: &Formula,
    ) -> Result<bool, QpaError> {
        let look = |env: &Vec<(QVar, ThreadId)>, v: QVar| {
            env.iter()
                .rev()
                .find(|(w, _)| *w == v)
                .map(|(_, t)| *t)
                .ok_or(QpaError::UnboundVariable(v))
        };
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Pred(p, args) => {
                let ts: Result<Vec<ThreadId>, _> = args.iter().map(|&v| look(env, v)).collect();
                c.facts.contains(&Fact::new(*p, &ts?))
            }
            Formula::Eq(a, b) => look(env, *a)? == look(env, *b)?,
            Formula::Ne(a, b) => look(env, *a)? != look(env, *b)?,
            Formula::And(xs) => {
                for x in xs {
                    if !go(c, env, x)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(xs) => {
                for x in xs {
                    if go(c, env, x)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                let all = matches!(f, Formula::Forall(..));
                for &t in &c.universe {
                    env.push((*v, t));
                    let r = go(c, env, b);
                    env.pop();
                    if r? != all {
                        return Ok(!all);
                    }
                }
                all
            }
        })
    }
    let mut e: Vec<(QVar, ThreadId)> = env.iter().map(|(&v, &t)| (v, t)).collect();
    go(c, &mut e, phi)
}

/// An irredundant DNF over ground facts: no cube is a superset of another.
pub type Cube = Vec<Fact>;
pub type Dnf = Vec<Cube>;

pub(super) fn subset(a: &[Fact], b: &[Fact]) -> bool {
    // both sorted
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

/// Drop cubes subsumed by (supersets of) other cubes, and duplicates.
pub fn minimize(mut cubes: Vec<Cube>) -> Vec<Cube> {
    cubes.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    cubes.dedup();
    let mut out: Vec<Cube> = Vec::with_capacity(cubes.len());
    for c in cubes {
        if !out.iter().any(|o| subset(o, &c)) {
            out.push(c);
        }
    }
    out
}

fn merge(a: &[Fact], b: &[Fact]) -> Cube {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Conjunction of two DNFs.
pub fn product(a: &Dnf, b: &Dnf) -> Dnf {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(merge(x, y));
        }
    }
    minimize(out)
}

/// Ground `f` over `universe` under `env` (indexed by variable id) into an irredundant DNF.
pub fn ground(f: &Formula, env: &mut Vec<ThreadId>, universe: &[ThreadId]) -> Dnf {
    match f {
        Formula::True => vec![vec![]],
        Formula::False => vec![],
        Formula::Pred(p, args) => {
            let ts: Vec<ThreadId> = args.iter().map(|&v| env[v as usize]).collect();
            vec![vec![Fact::new(*p, &ts)]]
        }
        Formula::Eq(a, b) => {
            if env[*a as usize] == env[*b as usize] {
                vec![vec![]]
            } else {
                vec![]
            }
        }
        Formula::Ne(a, b) => {
            if env[*a as usize] != env[*b as usize] {
                vec![vec![]]
            } else {
                vec![]
            }
        }
        Formula::And(xs) => {
            let mut acc: Dnf = vec![vec![]];
            for x in xs {
                let d = ground(x, env, universe);
                acc = product(&acc, &d);
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
        Formula::Or(xs) => {
            let mut acc = Vec::new();
            for x in xs {
                let d = ground(x, env, universe);
                if d.iter().any(|c| c.is_empty()) {
                    return vec![vec![]];
                }
                acc.extend(d);
            }
            minimize(acc)
        }
        Formula::Forall(v, b) => {
            let saved = env[*v as usize];
            let mut acc: Dnf = vec![vec![]];
            for &t in universe {
                env[*v as usize] = t;
                let d = ground(b, env, universe);
                acc = product(&acc, &d);
                if acc.is_empty() {
                    break;
                }
            }
            env[*v as usize] = saved;
            acc
        }
        Formula::Exists(v, b) => {
            let saved = env[*v as usize];
            let mut acc = Vec::new();
            for &t in universe {
                env[*v as usize] = t;
                acc.extend(ground(b, env, universe));
            }
            env[*v as usize] = saved;
            minimize(acc)
        }
    }
}

/// ⊆-minimal successor configurations of `c` on `⟨letter : k⟩`.
pub fn min_successors(
    qpa: &Qpa,
    c: &Configuration,
    letter: usize,
    k: ThreadId,
) -> Result<Vec<Configuration>, QpaError> {
    if !c.universe.contains(&k) {
        return Err(QpaError::ThreadOutsideUniverse(k));
    }
    if letter >= qpa.alphabet.len() {
        return Err(QpaError::UnknownLetter(letter.to_string()));
    }
    let mut env = vec![0; qpa.max_var() as usize + 1];
    let mut acc: Dnf = vec![vec![]];
    for fact in &c.facts {
        env[0] = k;
        let ar = qpa.preds[fact.pred as usize].arity;
        env[1..=ar].copy_from_slice(&fact.args[..ar]);
        let d = ground(qpa.delta(fact.pred as usize, letter), &mut env, &c.universe);
        acc = product(&acc, &d);
        if acc.is_empty() {
            break;
        }
    }
    Ok(acc
        .into_iter()
        .map(|cube| Configuration {
            universe: c.universe.clone(),
            facts: cube.into_iter().collect(),
        })
        .collect())
}

/// Memoizing evaluator over a fixed universe: frontiers (antichains of minimal
/// configurations) are interned and letter steps cached, so many words sharing
/// suffixes are cheap to decide.
pub struct Runner<'a> {
    qpa: &'a Qpa,
    universe: Vec<ThreadId>,
    env: Vec<ThreadId>,
    fact_memo: HashMap<(Fact, usize, ThreadId), Rc<Dnf>>,
    frontiers: Vec<Rc<Vec<Cube>>>,
    index: HashMap<Rc<Vec<Cube>>, usize>,
    steps: HashMap<(usize, usize, ThreadId), usize>,
    accepting: Vec<Option<bool>>,
    start: usize,
}

impl<'a> Runner<'a> {
    pub fn new(qpa: &'a Qpa, universe: &[ThreadId]) -> Runner<'a> {
        let mut u = universe.to_vec();
        u.sort_unstable();
        u.dedup();
        let mut env = vec![0; qpa.max_var() as usize + 1];
        let start = ground(&qpa.start, &mut env, &u);
        let mut r = Runner {
            qpa,
            universe: u,
            env,
            fact_memo: HashMap::new(),
            frontiers: Vec::new(),
            index: HashMap::new(),
            steps: HashMap::new(),
            accepting: Vec::new(),
            start: 0,
        };
        r.start = r.intern(start);
        r
    }

    pub fn universe(&self) -> &[ThreadId] {
        &self.universe
    }

    /// Frontier of minimal models of the start formula.
    pub fn initial(&self) -> usize {
        self.start
    }

    fn intern(&mut self, cubes: Vec<Cube>) -> usize {
        if let Some(&i) = self.index.get(&cubes) {
            return i;
        }
        let rc = Rc::new(cubes);
        let i = self.frontiers.len();
        self.frontiers.push(rc.clone());
        self.index.insert(rc, i);
        self.accepting.push(None);
        i
    }

    pub fn frontier(&self, id: usize) -> &[Cube] {
        &self.frontiers[id]
    }

    pub fn is_dead(&self, id: usize) -> bool {
        self.frontiers[id].is_empty()
    }

    fn fact_dnf(&mut self, fact: Fact, letter: usize, k: ThreadId) -> Rc<Dnf> {
        if let Some(d) = self.fact_memo.get(&(fact, letter, k)) {
            return d.clone();
        }
        let ar = self.qpa.preds[fact.pred as usize].arity;
        self.env[0] = k;
        self.env[1..=ar].copy_from_slice(&fact.args[..ar]);
        let d = Rc::new(ground(
            self.qpa.delta(fact.pred as usize, letter),
            &mut self.env,
            &self.universe,
        ));
        self.fact_memo.insert((fact, letter, k), d.clone());
        d
    }

    /// Successors of a single configuration (as a sorted fact cube).
    pub fn successors(&mut self, cube: &[Fact], letter: usize, k: ThreadId) -> Dnf {
        let mut acc: Dnf = vec![vec![]];
        for &fact in cube {
            let d = self.fact_dnf(fact, letter, k);
            acc = product(&acc, &d);
            if acc.is_empty() {
                break;
            }
        }
        acc
    }

    /// Read one letter (right to left) from a frontier.
    pub fn step(&mut self, frontier: usize, letter: usize, k: ThreadId) -> usize {
        if let Some(&n) = self.steps.get(&(frontier, letter, k)) {
            return n;
        }
        let cubes = self.frontiers[frontier].clone();
        let mut out = Vec::new();
        for c in cubes.iter() {
            out.extend(self.successors(c, letter, k));
        }
        let n = self.intern(minimize(out));
        self.steps.insert((frontier, letter, k), n);
        n
    }

    pub fn is_accepting(&mut self, frontier: usize) -> bool {
        if let Some(a) = self.accepting[frontier] {
            return a;
        }
        let qpa = self.qpa;
        let a = self.frontiers[frontier]
            .iter()
            .any(|c| c.iter().all(|f| qpa.preds[f.pred as usize].accepting));
        self.accepting[frontier] = Some(a);
        a
    }

    /// Decide a word over this runner's universe.
    pub fn accepts(&mut self, word: &[Letter]) -> bool {
        let mut f = self.start;
        for &(a, k) in word.iter().rev() {
            f = self.step(f, a, k);
            if self.is_dead(f) {
                return false;
            }
        }
        self.is_accepting(f)
    }
}

/// Acceptance over an explicitly given universe (which must contain the word's ids).
pub fn accepts_with_universe(qpa: &Qpa, word: &[Letter], universe: &[ThreadId]) -> bool {
    Runner::new(qpa, universe).accepts(word)
}

/// The universes tried by [`accepts`]: the word's ids plus `0..=fresh_cap` fresh ids.
pub fn candidate_universes(word: &[Letter], fresh_cap: usize) -> Vec<Vec<ThreadId>> {
    let ids: BTreeSet<ThreadId> = word.iter().map(|&(_, t)| t).collect();
    let top = ids.iter().max().copied().unwrap_or(0);
    (0..=fresh_cap as ThreadId)
        .map(|j| ids.iter().copied().chain(top + 1..=top + j).collect())
        .collect()
}

/// Default number of fresh ids tried beyond those in the word.
pub const DEFAULT_FRESH_CAP: usize = 1;

/// Does the automaton accept `word` over some universe made of the word's ids
/// plus at most `fresh_cap` fresh ids?
pub fn accepts(qpa: &Qpa, word: &[Letter], fresh_cap: usize) -> bool {
    candidate_universes(word, fresh_cap)
        .iter()
        .any(|u| accepts_with_universe(qpa, word, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// δ(p(i₁,i₂), a) = p(i₁,i₂) ∨ (i₀ ≠ i₁ ∧ q(i₂))
    fn sample() -> Qpa {
        let preds = vec![
            Predicate {
                name: "p".into(),
                arity: 2,
                accepting: false,
            },
            Predicate {
                name: "q".into(),
                arity: 1,
                accepting: true,
            },
        ];
        let mut a = Qpa::new(preds, vec!["a".into()]).unwrap();
        a.set_delta(
            0,
            0,
            Formula::or([
                Formula::pred(0, [1, 2]),
                Formula::and([Formula::ne(0, 1), Formula::pred(1, [2])]),
            ]),
        );
        a.set_delta(1, 0, Formula::pred(1, [1]));
        a.start = Formula::exists_many([1, 2], Formula::pred(0, [1, 2]));
        a
    }

    #[test]
    fn eval_examples() {
        let a = sample();
        let c = Configuration::new([1, 3, 4], [Fact::new(0, &[3, 4])]);
        let env: BTreeMap<QVar, ThreadId> = [(0, 1), (1, 3), (2, 4)].into_iter().collect();
        assert!(eval_qpa_formula(&c, &env, a.delta(0, 0)).unwrap());
        let empty = Configuration::new([1, 2], []);
        assert!(eval_qpa_formula(
            &empty,
            &BTreeMap::new(),
            &Formula::forall(1, Formula::Eq(1, 1))
        )
        .unwrap());
        assert!(!eval_qpa_formula(
            &empty,
            &BTreeMap::new(),
            &Formula::exists(1, Formula::pred(1, [1]))
        )
        .unwrap());
        assert_eq!(
            eval_qpa_formula(&empty, &BTreeMap::new(), &Formula::pred(1, [7])),
            Err(QpaError::UnboundVariable(7))
        );
    }

    #[test]
    fn min_successor_examples() {
        let a = sample();
        let c = Configuration::new([1, 3, 4], [Fact::new(0, &[3, 4])]);
        let succ = min_successors(&a, &c, 0, 1).unwrap();
        let facts: Vec<Vec<Fact>> = succ
            .iter()
            .map(|c| c.facts.iter().copied().collect())
            .collect();
        assert_eq!(facts.len(), 2);
        assert!(facts.contains(&vec![Fact::new(0, &[3, 4])]));
        assert!(facts.contains(&vec![Fact::new(1, &[4])]));
        let empty = Configuration::new([1], []);
        assert_eq!(
            min_successors(&a, &empty, 0, 1).unwrap(),
            vec![empty.clone()]
        );
        assert!(min_successors(&a, &c, 0, 9).is_err());
        // body false → no successors
        let mut b = a.clone();
        b.set_delta(0, 0, Formula::False);
        assert!(min_successors(&b, &c, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn runner_matches_direct_successors() {
        let a = sample();
        // p(i,j) needs some i ≠ executing thread to reach the accepting q
        assert!(accepts(&a, &[(0, 1)], 1));
        assert!(!accepts(&a, &[], 0));
        assert!(accepts_with_universe(&a, &[(0, 1)], &[1, 2]));
        assert!(!accepts_with_universe(&a, &[(0, 1)], &[1]));
    }

    #[test]
    fn minimize_is_irredundant() {
        let f = |p| Fact::new(p, &[]);
        let m = minimize(vec![vec![f(0), f(1)], vec![f(0)], vec![f(2)], vec![f(0)]]);
        assert_eq!(m, vec![vec![f(0)], vec![f(2)]]);
    }
}
