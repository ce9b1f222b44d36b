//! Lifting lasso DFAs of quantifier-free matrices to quantified predicate
//! automata, and the automaton of a whole QLTL sentence.

use std::collections::BTreeMap;

use crate::qpa::{Formula, PredId, Predicate, QVar, Qpa};

use super::buchi::matrix_to_buchi;
use super::dfa::{buchi_lasso_dfa, LassoDfa};
use super::normal::{merge_patterns, quantifier_nnf, Quantifier};
use super::{Qltl, QltlError};

/// Commands of a QPA alphabet (every symbol except `$`), and the position of `$`.
fn split_alphabet(alphabet: &[String]) -> (Vec<String>, Vec<Option<usize>>) {
    let commands: Vec<String> = alphabet.iter().filter(|a| *a != "$").cloned().collect();
    let map = alphabet
        .iter()
        .map(|a| commands.iter().position(|c| c == a))
        .collect();
    (commands, map)
}

/// A DFA whose states become arity-`k` predicates.
struct Group {
    dfa: LassoDfa,
    k: usize,
    /// DFA state → predicate id, for states both reachable and co-reachable.
    preds: BTreeMap<usize, PredId>,
}

impl Group {
    fn new(dfa: LassoDfa, k: usize, tag: &str, preds: &mut Vec<Predicate>) -> Group {
        let n = dfa.num_states();
        // co-reachability of accepting states (reachability holds after minimisation)
        let mut live: Vec<bool> = dfa.accepting.clone();
        loop {
            let mut changed = false;
            for q in 0..n {
                if !live[q] && dfa.delta[q].iter().any(|&t| live[t]) {
                    live[q] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut ids = BTreeMap::new();
        for q in (0..n).filter(|&q| live[q]) {
            ids.insert(q, preds.len());
            preds.push(Predicate {
                name: format!("{tag}q{q}"),
                arity: k,
                accepting: q == dfa.initial,
            });
        }
        Group { dfa, k, preds: ids }
    }

    /// `⋁ q(args)` over accepting DFA states.
    fn final_formula(&self, args: &[QVar]) -> Formula {
        Formula::or(
            self.preds
                .iter()
                .filter(|(&q, _)| self.dfa.accepting[q])
                .map(|(_, &p)| Formula::pred(p, args.iter().copied())),
        )
    }

    /// Reverse simulation: `q(ī)` on `⟨σ:i₀⟩` becomes a predecessor `q'(ī)`
    /// under the letter class determined by which `i_j` equals `i₀`.
    fn install(&self, qpa: &mut Qpa, letter_map: &[Option<usize>]) {
        let k = self.k as QVar;
        let args = || 1..=k;
        let preds_into = |q: usize, letter: usize| {
            Formula::or(
                self.preds
                    .iter()
                    .filter(|(&p, _)| self.dfa.delta[p][letter] == q)
                    .map(|(_, &id)| Formula::pred(id, args())),
            )
        };
        for (&q, &id) in &self.preds {
            for (a, cmd) in letter_map.iter().enumerate() {
                let body = match cmd {
                    None => preds_into(q, self.dfa.dollar()),
                    Some(c) => {
                        let base = c * (self.k + 1);
                        let mut cases: Vec<Formula> = (1..=k)
                            .map(|j| {
                                Formula::and([
                                    Formula::eq(0, j),
                                    preds_into(q, base + j as usize - 1),
                                ])
                            })
                            .collect();
                        let others = (1..=k)
                            .map(|j| Formula::ne(0, j))
                            .chain([preds_into(q, base + self.k)]);
                        cases.push(Formula::and(others));
                        Formula::or(cases)
                    }
                };
                qpa.set_delta(id, a, body);
            }
        }
    }
}

fn matrix_dfa(matrix: &Qltl, vars: &[String], commands: &[String]) -> Result<LassoDfa, QltlError> {
    Ok(buchi_lasso_dfa(&matrix_to_buchi(matrix, vars, commands)?).minimize())
}

/// `Q₁ i₁ … Q_k i_k` over pairwise distinct threads, applied to `body(i₁..i_k)`.
fn distinct_prefix(prefix: &[Quantifier], first_var: QVar, body: Formula) -> Formula {
    let vars: Vec<QVar> = (first_var..first_var + prefix.len() as QVar).collect();
    let mut f = body;
    for (j, q) in prefix.iter().enumerate().rev() {
        let v = vars[j];
        f = match q {
            Quantifier::Exists => Formula::exists(
                v,
                Formula::and(vars[..j].iter().map(|&u| Formula::ne(v, u)).chain([f])),
            ),
            Quantifier::Forall => Formula::forall(
                v,
                Formula::or(vars[..j].iter().map(|&u| Formula::eq(v, u)).chain([f])),
            ),
        };
    }
    f
}

/// The QPA for a lasso DFA over letters `(command, class)` of a matrix with
/// `k` variables, closed by `prefix` over pairwise distinct threads.
/// `alphabet` lists the QPA's symbols; command `c` of the DFA is the `c`-th
/// non-`$` symbol.
pub fn lift_dfa_to_qpa(dfa: &LassoDfa, prefix: &[Quantifier], alphabet: &[String]) -> Qpa {
    let (commands, letter_map) = split_alphabet(alphabet);
    let k = prefix.len();
    assert_eq!(
        dfa.num_letters,
        commands.len() * (k + 1),
        "DFA letters do not match the alphabet and arity"
    );
    let mut preds = Vec::new();
    let group = Group::new(dfa.clone(), k, "", &mut preds);
    let mut qpa = Qpa::new(preds, alphabet.to_vec()).expect("arity within bounds");
    group.install(&mut qpa, &letter_map);
    let args: Vec<QVar> = (1..=k as QVar).collect();
    qpa.start = distinct_prefix(prefix, 1, group.final_formula(&args));
    qpa
}

struct Builder {
    commands: Vec<String>,
    groups: Vec<Group>,
    preds: Vec<Predicate>,
    cache: BTreeMap<(Qltl, usize), usize>,
    next_var: QVar,
}

impl Builder {
    fn group_for(&mut self, matrix: &Qltl, vars: &[String]) -> Result<usize, QltlError> {
        let key = (matrix.clone(), vars.len());
        if let Some(&g) = self.cache.get(&key) {
            return Ok(g);
        }
        let dfa = matrix_dfa(matrix, vars, &self.commands)?;
        let tag = format!("m{}.", self.groups.len());
        self.groups
            .push(Group::new(dfa, vars.len(), &tag, &mut self.preds));
        self.cache.insert(key, self.groups.len() - 1);
        Ok(self.groups.len() - 1)
    }

    /// Start formula for a formula whose quantifiers sit above quantifier-free leaves.
    fn translate(&mut self, f: &Qltl, env: &mut Vec<(String, QVar)>) -> Result<Formula, QltlError> {
        if f.is_quantifier_free() {
            return self.leaf(f, env);
        }
        match f {
            Qltl::And(a, b) => Ok(Formula::and([
                self.translate(a, env)?,
                self.translate(b, env)?,
            ])),
            Qltl::Or(a, b) => Ok(Formula::or([
                self.translate(a, env)?,
                self.translate(b, env)?,
            ])),
            Qltl::Forall(v, a) | Qltl::Exists(v, a) => {
                let x = self.next_var;
                self.next_var += 1;
                env.push((v.clone(), x));
                let body = self.translate(a, env)?;
                env.pop();
                Ok(if matches!(f, Qltl::Forall(..)) {
                    Formula::forall(x, body)
                } else {
                    Formula::exists(x, body)
                })
            }
            _ => unreachable!("negations are pushed to quantifier-free subformulas"),
        }
    }

    /// A quantifier-free leaf: case split on which of its variables coincide,
    /// one lifted DFA per case with variables renamed to canonical names.
    fn leaf(&mut self, f: &Qltl, env: &[(String, QVar)]) -> Result<Formula, QltlError> {
        let free = f.free_vars();
        let lookup = |v: &String| {
            env.iter()
                .rev()
                .find(|(w, _)| w == v)
                .map(|&(_, x)| x)
                .ok_or_else(|| QltlError::FreeVariable(v.clone()))
        };
        let qvars: Vec<QVar> = free.iter().map(lookup).collect::<Result<_, _>>()?;
        let mut cases = Vec::new();
        for (reps, assign) in merge_patterns(&free) {
            // canonical names #1..#m for the representatives, in order
            let canon: BTreeMap<&String, String> = reps
                .iter()
                .enumerate()
                .map(|(j, r)| (r, format!("#{}", j + 1)))
                .collect();
            let mut m = f.clone();
            for (v, r) in free.iter().zip(&assign) {
                m = m.rename_var(v, &canon[r]);
            }
            let names: Vec<String> = (1..=reps.len()).map(|j| format!("#{j}")).collect();
            let g = self.group_for(&m, &names)?;
            let pos = |v: &String| free.iter().position(|w| w == v).expect("free variable");
            let mut lits = Vec::new();
            for (j, (v, r)) in free.iter().zip(&assign).enumerate() {
                if v == r {
                    lits.extend(
                        reps.iter()
                            .take_while(|x| *x != v)
                            .map(|x| Formula::ne(qvars[j], qvars[pos(x)])),
                    );
                } else {
                    lits.push(Formula::eq(qvars[j], qvars[pos(r)]));
                }
            }
            let args: Vec<QVar> = reps.iter().map(|r| qvars[pos(r)]).collect();
            lits.push(self.groups[g].final_formula(&args));
            cases.push(Formula::and(lits));
        }
        Ok(Formula::or(cases))
    }
}

/// A QPA over `alphabet` accepting exactly the one-`$` lasso words `τ$ρ`
/// with `τρ^ω ⊨ φ` (quantifiers ranging over the run's universe).
pub fn property_qpa(phi: &Qltl, alphabet: &[String]) -> Result<Qpa, QltlError> {
    if let Some(v) = phi.free_vars().into_iter().next() {
        return Err(QltlError::FreeVariable(v));
    }
    phi.check_quantifier_placement()?;
    let (commands, letter_map) = split_alphabet(alphabet);
    if let Some(c) = phi.commands().into_iter().find(|c| !commands.contains(c)) {
        return Err(QltlError::UnknownCommand(c));
    }
    let mut b = Builder {
        commands,
        groups: Vec::new(),
        preds: Vec::new(),
        cache: BTreeMap::new(),
        next_var: 1,
    };
    let start = b.translate(&quantifier_nnf(phi, true), &mut Vec::new())?;
    let mut qpa = Qpa::new(b.preds, alphabet.to_vec()).expect("arity within bounds");
    for g in &b.groups {
        g.install(&mut qpa, &letter_map);
    }
    qpa.start = start;
    Ok(qpa)
}
