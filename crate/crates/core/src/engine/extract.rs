//! Breaking lasso proofs into basic Hoare triples, and stability triples
//! that let the proof tolerate other threads.

use std::collections::BTreeSet;

use crate::logic::{Assertion, Atom, Oracle, ThreadId};
use crate::program::{IndexedCommand, Lasso, ParameterizedProgram};
use crate::proof_space::{check_well_formed, Basis, HoareTriple};

use super::proof::{choose_pre, LassoProof};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("annotation step {step} cannot establish `{atom}` after {command}")]
pub struct ExtractError {
    pub step: usize,
    pub atom: String,
    pub command: String,
}

fn steps(
    ann: &[Assertion],
    word: &[IndexedCommand],
    oracle: &Oracle,
    out: &mut Basis,
) -> Result<(), ExtractError> {
    for (k, ic) in word.iter().enumerate() {
        for alpha in ann[k + 1].atoms() {
            let pre = choose_pre(oracle, &ann[k], ann[k].contains(alpha), ic, alpha).ok_or_else(
                || ExtractError {
                    step: k,
                    atom: alpha.to_string(),
                    command: ic.to_string(),
                },
            )?;
            out.triples.insert(HoareTriple::new(
                pre,
                vec![ic.clone()],
                Assertion::atom(alpha.clone()),
            ));
        }
    }
    Ok(())
}

/// One basic triple `{pre} ⟨σ:i⟩ {α}` per atom `α` of each annotation, with
/// `pre` a small part of the preceding annotation, plus the ranking formula.
pub fn extract_basis(
    proof: &LassoProof,
    l: &Lasso,
    oracle: &Oracle,
) -> Result<Basis, ExtractError> {
    let word: Vec<IndexedCommand> = l.stem.iter().chain(&l.cycle).cloned().collect();
    let mut out = Basis::new();
    steps(&proof.invariance, &word, oracle, &mut out)?;
    steps(&proof.variance, &l.cycle, oracle, &mut out)?;
    out.rankings.insert(proof.ranking.clone());
    Ok(out)
}

/// Atoms occurring in the basis (pre, post, rankings).
fn basis_atoms(b: &Basis) -> BTreeSet<Atom> {
    let mut atoms: BTreeSet<Atom> = BTreeSet::new();
    for t in &b.triples {
        atoms.extend(t.pre.atoms().iter().cloned());
        atoms.extend(t.post.atoms().iter().cloned());
    }
    for w in &b.rankings {
        atoms.extend(w.to_assertion().atoms().iter().cloned());
    }
    atoms
}

/// Valid triples `{α} ⟨σ:i⟩ {α}` for every atom `α` of the basis, every
/// command `σ` of the program, and `i` ranging over `α`'s indices and one
/// fresh index.
pub fn generate_stability_triples(b: &Basis, p: &ParameterizedProgram, oracle: &Oracle) -> Basis {
    let mut out = Basis::new();
    for alpha in basis_atoms(b) {
        if alpha == Atom::False {
            continue;
        }
        let ids = alpha.threads();
        let fresh: ThreadId = ids.iter().max().map_or(1, |m| m + 1);
        let phi = Assertion::atom(alpha.clone());
        for cmd in &p.commands {
            for &i in ids.iter().chain([&fresh]) {
                let t = HoareTriple::new(
                    phi.clone(),
                    vec![IndexedCommand::new(cmd.clone(), i)],
                    phi.clone(),
                );
                if !b.triples.contains(&t)
                    && check_well_formed(&t)
                    && oracle.is_valid(&t.pre, &t.word, &t.post)
                {
                    out.triples.insert(t);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::engine::prove_lasso;
    use crate::program::{parse_lasso, parse_program};
    use crate::proof_space::lasso_in_proof_language;

    #[test]
    fn fig3_proof_yields_the_fig4_triples() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let l = parse_lasso(&p, corpus::FIG3A_LASSO).unwrap();
        let oracle = Oracle::default();
        let proof = prove_lasso(&l.stem, &l.cycle, &oracle).unwrap();
        let b = extract_basis(&proof, &l, &oracle).unwrap();
        let fig4 = Basis::parse(&p, corpus::DECREMENT_FIG4_BASIS).unwrap();
        let nontrivial: BTreeSet<HoareTriple> = fig4
            .triples
            .iter()
            .filter(|t| !t.post.is_true())
            .cloned()
            .collect();
        assert_eq!(b.triples, nontrivial, "extracted:\n{}", b.to_text());
        assert_eq!(b.rankings, fig4.rankings);
        b.validate(&oracle).unwrap();
        assert!(lasso_in_proof_language(&b, &l));
    }

    #[test]
    fn stability_triples_on_decrement() {
        let p = parse_program(corpus::DECREMENT_PROGRAM).unwrap();
        let oracle = Oracle::default();
        let fig4 = Basis::parse(&p, corpus::DECREMENT_FIG4_BASIS).unwrap();
        let s = generate_stability_triples(&fig4, &p, &oracle);
        let want = Basis::parse(
            &p,
            "triple {d(1) > 0} x=pos() @ 2 {d(1) > 0}\n\
             triple {d(1) > 0} d=pos() @ 2 {d(1) > 0}\n\
             triple {d(1) > 0} [x>0] @ 2 {d(1) > 0}\n\
             triple {d(1) > 0} x=x-d @ 2 {d(1) > 0}\n\
             triple {old(x) >= 0} [x>0] @ 1 {old(x) >= 0}\n",
        )
        .unwrap();
        assert!(s.triples.is_superset(&want.triples), "{}", s.to_text());
        assert!(generate_stability_triples(&Basis::new(), &p, &oracle).is_empty());
    }
}
