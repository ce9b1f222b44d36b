//! Forward derivability in the proof space generated by a basis, lasso-language
//! membership, and derivation trees.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::linear::{LinExpr, Rel};
use crate::logic::{injections, Assertion, Atom, Permutation, ThreadId, Var};
use crate::program::{IndexedCommand, Lasso};

use super::{Basis, HoareTriple};

/// Fresh thread ids available to triple instances beyond those of the word and pre.
pub const DEFAULT_FRESH_BUDGET: usize = 1;

/// A basis triple split into the executing thread and its remaining indices.
struct Prepared<'a> {
    triple: &'a HoareTriple,
    thread: ThreadId,
    others: Vec<ThreadId>,
}

fn prepare(b: &Basis) -> Vec<Prepared<'_>> {
    b.triples
        .iter()
        .map(|t| {
            let thread = t.word[0].thread;
            let others = t.threads().into_iter().filter(|&i| i != thread).collect();
            Prepared {
                triple: t,
                thread,
                others,
            }
        })
        .collect()
}

/// How an atom was obtained at some step: basis triple, renaming, and the
/// renamed pre-condition that was available at the previous step.
#[derive(Clone)]
struct Provenance<'a> {
    triple: &'a HoareTriple,
    renaming: Permutation,
    pre: Assertion,
}

/// Apply every instance of every basis triple for `ic` to the facts `s`.
fn step<'a>(
    prepared: &[Prepared<'a>],
    s: &BTreeSet<Atom>,
    ic: &IndexedCommand,
    universe: &[ThreadId],
) -> BTreeMap<Atom, Provenance<'a>> {
    let mut out: BTreeMap<Atom, Provenance<'a>> = BTreeMap::new();
    let rest: Vec<ThreadId> = universe
        .iter()
        .copied()
        .filter(|&u| u != ic.thread)
        .collect();
    for pt in prepared
        .iter()
        .filter(|pt| pt.triple.word[0].command.name == ic.command.name)
    {
        for image in injections(pt.others.len(), &rest) {
            let mut pi: Permutation = pt.others.iter().copied().zip(image).collect();
            pi.insert(pt.thread, ic.thread);
            let f = |t: ThreadId| pi[&t];
            if !pt
                .triple
                .pre
                .atoms()
                .iter()
                .all(|a| s.contains(&a.rename(f)))
            {
                continue;
            }
            for a in pt.triple.post.atoms() {
                let a = a.rename(f);
                out.entry(a).or_insert_with(|| Provenance {
                    triple: pt.triple,
                    renaming: pi.clone(),
                    pre: pt.triple.pre.rename(f),
                });
            }
        }
    }
    out
}

/// The word's and pre's thread ids plus `fresh` ids above them.
fn default_universe(pre: &Assertion, word: &[IndexedCommand], fresh: usize) -> Vec<ThreadId> {
    let mut ids = pre.threads();
    ids.extend(word.iter().map(|ic| ic.thread));
    let top = ids.iter().max().copied().unwrap_or(0);
    ids.extend(top + 1..=top + fresh as ThreadId);
    ids.into_iter().collect()
}

/// All atoms α such that `{pre} word {α}` is in the proof space generated by
/// `b`, instantiating triples with one fresh thread id beyond the word's.
pub fn derivable_atoms(b: &Basis, pre: &Assertion, word: &[IndexedCommand]) -> BTreeSet<Atom> {
    derivable_atoms_over(
        b,
        pre,
        word,
        &default_universe(pre, word, DEFAULT_FRESH_BUDGET),
    )
}

/// [`derivable_atoms`] with triple instances ranging over an explicit universe of ids.
pub fn derivable_atoms_over(
    b: &Basis,
    pre: &Assertion,
    word: &[IndexedCommand],
    universe: &[ThreadId],
) -> BTreeSet<Atom> {
    Deriver::new(b).run(pre.atoms().clone(), word, universe)
}

/// Renamed `(pre, post)` atoms of one basis triple instance.
type Instance = (Vec<Atom>, Vec<Atom>);

/// Forward derivation with triple instances cached per indexed command and universe.
struct Deriver<'a> {
    prepared: Vec<Prepared<'a>>,
    instances: HashMap<(IndexedCommand, Vec<ThreadId>), Rc<Vec<Instance>>>,
}

impl<'a> Deriver<'a> {
    fn new(b: &'a Basis) -> Deriver<'a> {
        Deriver {
            prepared: prepare(b),
            instances: HashMap::new(),
        }
    }

    fn instances(&mut self, ic: &IndexedCommand, universe: &[ThreadId]) -> Rc<Vec<Instance>> {
        let key = (ic.clone(), universe.to_vec());
        if let Some(v) = self.instances.get(&key) {
            return v.clone();
        }
        let rest: Vec<ThreadId> = universe
            .iter()
            .copied()
            .filter(|&u| u != ic.thread)
            .collect();
        let mut out = Vec::new();
        for pt in self
            .prepared
            .iter()
            .filter(|pt| pt.triple.word[0].command.name == ic.command.name)
        {
            for image in injections(pt.others.len(), &rest) {
                let mut pi: Permutation = pt.others.iter().copied().zip(image).collect();
                pi.insert(pt.thread, ic.thread);
                let f = |t: ThreadId| pi[&t];
                let pre = pt.triple.pre.atoms().iter().map(|a| a.rename(f)).collect();
                let post = pt.triple.post.atoms().iter().map(|a| a.rename(f)).collect();
                out.push((pre, post));
            }
        }
        let v = Rc::new(out);
        self.instances.insert(key, v.clone());
        v
    }

    fn run(
        &mut self,
        mut s: BTreeSet<Atom>,
        word: &[IndexedCommand],
        universe: &[ThreadId],
    ) -> BTreeSet<Atom> {
        for ic in word {
            let mut next = BTreeSet::new();
            for (pre, post) in self.instances(ic, universe).iter() {
                if pre.iter().all(|a| s.contains(a)) {
                    next.extend(post.iter().cloned());
                }
            }
            s = next;
        }
        s
    }
}

/// Memoizing membership in the lasso language of a fixed basis, for checking
/// many lassos: caches triple instances, the atoms derived for each stem, and
/// the verdict for each (stem atoms, loop) pair.
pub struct LassoLanguage<'a> {
    basis: &'a Basis,
    fresh_cap: usize,
    deriver: Deriver<'a>,
    stems: HashMap<(Vec<IndexedCommand>, Vec<ThreadId>), usize>,
    stem_ids: HashMap<BTreeSet<Atom>, usize>,
    stem_sets: Vec<BTreeSet<Atom>>,
    verdicts: HashMap<(usize, Vec<IndexedCommand>, Vec<ThreadId>), bool>,
}

impl<'a> LassoLanguage<'a> {
    pub fn new(b: &'a Basis) -> LassoLanguage<'a> {
        LassoLanguage::with_fresh_cap(b, DEFAULT_FRESH_BUDGET)
    }

    pub fn with_fresh_cap(b: &'a Basis, fresh_cap: usize) -> LassoLanguage<'a> {
        LassoLanguage {
            basis: b,
            fresh_cap,
            deriver: Deriver::new(b),
            stems: HashMap::new(),
            stem_ids: HashMap::new(),
            stem_sets: Vec::new(),
            verdicts: HashMap::new(),
        }
    }

    /// Same answer as [`lasso_in_proof_language_with`] for this basis and cap.
    pub fn contains(&mut self, l: &Lasso) -> bool {
        let ids = l.threads();
        let top = ids.iter().max().copied().unwrap_or(0);
        (0..=self.fresh_cap as ThreadId).any(|j| {
            let universe: Vec<ThreadId> = ids.iter().copied().chain(top + 1..=top + j).collect();
            self.contains_over(l, &universe)
        })
    }

    /// Same answer as [`lasso_in_proof_language_over`].
    pub fn contains_over(&mut self, l: &Lasso, universe: &[ThreadId]) -> bool {
        if self.basis.rankings.is_empty() {
            return false;
        }
        let stem_key = (l.stem.clone(), universe.to_vec());
        let stem_id = match self.stems.get(&stem_key) {
            Some(&id) => id,
            None => {
                let atoms = self.deriver.run(BTreeSet::new(), &l.stem, universe);
                let id = match self.stem_ids.get(&atoms) {
                    Some(&id) => id,
                    None => {
                        self.stem_sets.push(atoms.clone());
                        self.stem_ids.insert(atoms, self.stem_sets.len() - 1);
                        self.stem_sets.len() - 1
                    }
                };
                self.stems.insert(stem_key, id);
                id
            }
        };
        let key = (stem_id, l.cycle.clone(), universe.to_vec());
        if let Some(&v) = self.verdicts.get(&key) {
            return v;
        }
        let stem = self.stem_sets[stem_id].clone();
        let v = self.loop_ranked(stem, &l.cycle, universe);
        self.verdicts.insert(key, v);
        v
    }

    fn loop_ranked(
        &mut self,
        stem: BTreeSet<Atom>,
        cycle: &[IndexedCommand],
        universe: &[ThreadId],
    ) -> bool {
        let mut start = stem;
        start.extend(old_equalities(self.basis, universe));
        let reached = self.deriver.run(start, cycle, universe);
        ranking_reached(self.basis, &reached, universe)
    }
}

/// Is some instance of a ranking formula of `b` among the `reached` atoms?
fn ranking_reached(b: &Basis, reached: &BTreeSet<Atom>, universe: &[ThreadId]) -> bool {
    b.rankings.iter().any(|w| {
        let threads: Vec<ThreadId> = w.threads().into_iter().collect();
        let atoms = w.to_assertion();
        injections(threads.len(), universe)
            .into_iter()
            .any(|image| {
                let pi: BTreeMap<ThreadId, ThreadId> = threads.iter().copied().zip(image).collect();
                atoms
                    .atoms()
                    .iter()
                    .all(|a| reached.contains(&a.rename(|t| pi[&t])))
            })
    })
}

/// `old(v) = v` for every variable of the basis, locals instantiated over `universe`.
fn old_equalities(b: &Basis, universe: &[ThreadId]) -> BTreeSet<Atom> {
    let mut names: BTreeSet<Var> = BTreeSet::new();
    let assertions = b.triples.iter().flat_map(|t| [&t.pre, &t.post]).cloned();
    let rankings = b.rankings.iter().map(|w| w.to_assertion());
    for phi in assertions.chain(rankings) {
        for v in phi.vars() {
            names.insert(v.current().rename(|_| 1));
        }
    }
    let mut out = BTreeSet::new();
    for v in names {
        let instances: Vec<Var> = match v.thread() {
            None => vec![v.clone()],
            Some(_) => universe.iter().map(|&u| v.rename(|_| u)).collect(),
        };
        for x in instances {
            if let Some(a) = Atom::compare(&LinExpr::var(x.old()), Rel::Eq, &LinExpr::var(x)) {
                out.insert(a);
            }
        }
    }
    out
}

/// Membership of a lasso in the lasso language of `b` over one fixed universe.
pub fn lasso_in_proof_language_over(b: &Basis, l: &Lasso, universe: &[ThreadId]) -> bool {
    LassoLanguage::new(b).contains_over(l, universe)
}

/// Membership in the lasso language, trying the lasso's ids plus up to `fresh_cap` fresh ids.
pub fn lasso_in_proof_language_with(b: &Basis, l: &Lasso, fresh_cap: usize) -> bool {
    LassoLanguage::with_fresh_cap(b, fresh_cap).contains(l)
}

/// Is there a ranking formula proved for the loop from the strongest stem
/// assertion (plus old-equalities) in the proof space generated by `b`?
pub fn lasso_in_proof_language(b: &Basis, l: &Lasso) -> bool {
    lasso_in_proof_language_with(b, l, DEFAULT_FRESH_BUDGET)
}

/// A derivation in the proof space: leaves are basis triples, internal nodes
/// are the Symmetry, Sequencing and Conjunction rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    Basis(HoareTriple),
    Symmetry {
        renaming: Permutation,
        premise: Box<Derivation>,
        conclusion: HoareTriple,
    },
    Sequencing {
        first: Box<Derivation>,
        second: Box<Derivation>,
        conclusion: HoareTriple,
    },
    /// With no parts this concludes `{true} τ {true}`.
    Conjunction {
        parts: Vec<Derivation>,
        conclusion: HoareTriple,
    },
}

impl Derivation {
    pub fn conclusion(&self) -> &HoareTriple {
        match self {
            Derivation::Basis(t) => t,
            Derivation::Symmetry { conclusion, .. }
            | Derivation::Sequencing { conclusion, .. }
            | Derivation::Conjunction { conclusion, .. } => conclusion,
        }
    }

    pub fn rule(&self) -> &'static str {
        match self {
            Derivation::Basis(_) => "Basis",
            Derivation::Symmetry { .. } => "Symmetry",
            Derivation::Sequencing { .. } => "Sequencing",
            Derivation::Conjunction { .. } => "Conjunction",
        }
    }

    pub fn children(&self) -> Vec<&Derivation> {
        match self {
            Derivation::Basis(_) => vec![],
            Derivation::Symmetry { premise, .. } => vec![premise],
            Derivation::Sequencing { first, second, .. } => vec![first, second],
            Derivation::Conjunction { parts, .. } => parts.iter().collect(),
        }
    }

    /// Basis triples at the leaves, left to right.
    pub fn leaves(&self) -> Vec<&HoareTriple> {
        match self {
            Derivation::Basis(t) => vec![t],
            _ => self
                .children()
                .into_iter()
                .flat_map(Derivation::leaves)
                .collect(),
        }
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(
            f,
            "{:indent$}{}: {}",
            "",
            self.rule(),
            self.conclusion(),
            indent = 2 * depth
        )?;
        for c in self.children() {
            c.write_indented(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

struct WitnessBuilder<'a> {
    word: &'a [IndexedCommand],
    /// `levels[k]` explains the atoms holding after `k + 1` commands.
    levels: Vec<BTreeMap<Atom, Provenance<'a>>>,
}

impl WitnessBuilder<'_> {
    /// Derivation of `{φ} word[..n] {atoms}` for atoms available after `n ≥ 1` steps.
    fn conjunction(&self, atoms: &Assertion, n: usize) -> Derivation {
        let mut parts: Vec<Derivation> = atoms.atoms().iter().map(|a| self.atom(a, n)).collect();
        if parts.len() == 1 {
            return parts.pop().unwrap();
        }
        let pre = parts
            .iter()
            .fold(Assertion::top(), |acc, d| acc.conjoin(&d.conclusion().pre));
        Derivation::Conjunction {
            parts,
            conclusion: HoareTriple::new(pre, self.word[..n].to_vec(), atoms.clone()),
        }
    }

    fn atom(&self, a: &Atom, n: usize) -> Derivation {
        let prov = &self.levels[n - 1][a];
        let leaf = Derivation::Basis(prov.triple.clone());
        let identity = prov.renaming.iter().all(|(k, v)| k == v);
        let instance = if identity {
            leaf
        } else {
            let f = |t: ThreadId| prov.renaming[&t];
            Derivation::Symmetry {
                renaming: prov.renaming.clone(),
                premise: Box::new(leaf),
                conclusion: prov.triple.rename(f),
            }
        };
        if n == 1 {
            return instance;
        }
        let first = self.conjunction(&prov.pre, n - 1);
        let conclusion = HoareTriple::new(
            first.conclusion().pre.clone(),
            self.word[..n].to_vec(),
            Assertion::atom(a.clone()),
        );
        Derivation::Sequencing {
            first: Box::new(first),
            second: Box::new(instance),
            conclusion,
        }
    }
}

/// A derivation of `{φ} t.word {t.post}` from the basis with `t.pre ⊩ φ`, or
/// `None` when some post atom is not derivable (or the word is empty).
pub fn closure_witness(b: &Basis, t: &HoareTriple) -> Option<Derivation> {
    if t.word.is_empty() {
        return None;
    }
    let prepared = prepare(b);
    let universe = default_universe(&t.pre, &t.word, DEFAULT_FRESH_BUDGET);
    let mut s: BTreeSet<Atom> = t.pre.atoms().clone();
    let mut levels = Vec::with_capacity(t.word.len());
    for ic in &t.word {
        let next = step(&prepared, &s, ic, &universe);
        s = next.keys().cloned().collect();
        levels.push(next);
    }
    if !t.post.atoms().iter().all(|a| s.contains(a)) {
        return None;
    }
    let builder = WitnessBuilder {
        word: &t.word,
        levels,
    };
    Some(builder.conjunction(&t.post, t.word.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::logic::{parse_assertion, Oracle};
    use crate::program::{parse_lasso, parse_program, ParameterizedProgram};

    fn setup(basis: &str) -> (ParameterizedProgram, Basis) {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let b = Basis::load(&p, basis, &Oracle::default()).unwrap();
        (p, b)
    }

    fn word(p: &ParameterizedProgram, text: &str) -> Vec<IndexedCommand> {
        parse_lasso(p, &format!("{text} $ [x>0]@1")).unwrap().stem
    }

    #[test]
    fn invariance_of_the_step() {
        let (p, b) = setup(corpus::DECREMENT_FIG4_BASIS);
        let d1 = parse_assertion("d(1) > 0").unwrap();
        let got = derivable_atoms(&b, &Assertion::top(), &word(&p, "x=pos()@1 d=pos()@1"));
        assert!(d1.atoms().iter().all(|a| got.contains(a)));
        let got = derivable_atoms(&b, &Assertion::top(), &word(&p, "x=pos()@2 d=pos()@2"));
        assert!(got.contains(
            parse_assertion("d(2) > 0")
                .unwrap()
                .atoms()
                .first()
                .unwrap()
        ));
        assert!(derivable_atoms(&b, &d1, &[]) == *d1.atoms());
    }

    #[test]
    fn fig3a_lasso_is_in_the_language() {
        let (p, b) = setup(corpus::DECREMENT_FIG4_BASIS);
        let l = parse_lasso(&p, corpus::FIG3A_LASSO).unwrap();
        assert!(lasso_in_proof_language(&b, &l));
        let l = parse_lasso(&p, corpus::INTERFERENCE_LASSO).unwrap();
        assert!(!lasso_in_proof_language(&b, &l));
        let (_, combined) = setup(corpus::DECREMENT_COMBINED_BASIS);
        assert!(lasso_in_proof_language(&combined, &l));
        assert!(!lasso_in_proof_language(&Basis::new(), &l));
    }

    #[test]
    fn sequencing_and_conjunction_witnesses() {
        let (p, b) = setup(corpus::DECREMENT_FIG4_BASIS);
        let t = HoareTriple::new(
            Assertion::top(),
            word(&p, "d=pos()@1 [x>0]@1"),
            parse_assertion("d(1) > 0").unwrap(),
        );
        let d = closure_witness(&b, &t).unwrap();
        assert_eq!(d.rule(), "Sequencing");
        assert_eq!(d.leaves().len(), 2);
        let t = HoareTriple::new(
            parse_assertion("d(1) > 0; old(x) = x").unwrap(),
            word(&p, "[x>0]@1"),
            parse_assertion("d(1) > 0; old(x) = x; old(x) >= 0").unwrap(),
        );
        let d = closure_witness(&b, &t).unwrap();
        assert_eq!(d.rule(), "Conjunction");
        assert_eq!(d.leaves().len(), 3);
        let t = HoareTriple::new(
            Assertion::top(),
            word(&p, "[x>0]@1"),
            parse_assertion("x > 5").unwrap(),
        );
        assert!(closure_witness(&b, &t).is_none());
    }

    #[test]
    fn symmetric_instances_use_the_symmetry_rule() {
        let (p, b) = setup(corpus::DECREMENT_FIG4_BASIS);
        let t = HoareTriple::new(
            Assertion::top(),
            word(&p, "d=pos()@3"),
            parse_assertion("d(3) > 0").unwrap(),
        );
        let d = closure_witness(&b, &t).unwrap();
        assert_eq!(d.rule(), "Symmetry");
        assert_eq!(d.conclusion(), &t);
    }

    #[test]
    fn cached_membership_agrees_with_fresh_checks() {
        let (p, b) = setup(corpus::DECREMENT_COMBINED_BASIS);
        let letters: Vec<String> = [
            "x=pos()@1",
            "d=pos()@1",
            "[x>0]@1",
            "x=x-d@1",
            "x=pos()@2",
            "d=pos()@2",
        ]
        .map(String::from)
        .into();
        let mut lang = LassoLanguage::new(&b);
        let mut members = 0;
        for i in 0..letters.len().pow(4) {
            let digits: Vec<&str> = (0..4)
                .map(|k| letters[(i / letters.len().pow(k)) % letters.len()].as_str())
                .collect();
            let l = parse_lasso(
                &p,
                &format!("{} {} $ {} {}", digits[0], digits[1], digits[2], digits[3]),
            )
            .unwrap();
            let fresh = lasso_in_proof_language(&b, &l);
            assert_eq!(lang.contains(&l), fresh, "{l}");
            members += fresh as usize;
        }
        assert!(members > 0);
    }
}
