use std::fmt;

use serde::Serialize;

use crate::logic::ThreadId;
use crate::smt::{symbol, SmtAnswer, SmtSolver};

use super::automaton::{eval_qpa_formula, ground, Configuration, Qpa};
use super::formula::Formula;
use super::post::symbolic_post;

/// The three obligations of an emptiness certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Condition {
    Initialization,
    Consecution(String),
    Rejection,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Initialization => write!(f, "Initialization"),
            Condition::Consecution(l) => write!(f, "Consecution on `{l}`"),
            Condition::Rejection => write!(f, "Rejection"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateVerdict {
    /// All three entailments are valid.
    Accepted,
    /// A structure satisfying the premise but not the conclusion of `condition`.
    Rejected {
        condition: Condition,
        witness: Configuration,
    },
    /// No counter-model with at most `k` threads, but validity is not established.
    BoundedOnly { k: usize },
}

#[derive(Clone, Debug)]
pub struct CertificateConfig {
    /// Largest universe searched for counter-models.
    pub k: usize,
    /// Bail out (to `BoundedOnly`) when a premise grounds to more minimal models than this.
    pub max_models: usize,
    pub prover: Option<SmtSolver>,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig {
            k: 3,
            max_models: 200_000,
            prover: None,
        }
    }
}

enum Entailment {
    Valid,
    Counter(Configuration),
    Bounded,
}

/// Decide `premise ⊢ conclusion` for positive closed formulas.
///
/// Both sides are monotone, so a counter-model exists over a universe iff some
/// minimal model of the premise falsifies the conclusion; those are the cubes of
/// the grounded premise. When `premise ∧ ¬conclusion` is an ∃*∀* sentence the
/// search is complete once the universe reaches the number of its existential
/// quantifiers (small-model property); otherwise the optional prover is asked.
fn entails(
    qpa: &Qpa,
    premise: &Formula,
    conclusion: &Formula,
    cfg: &CertificateConfig,
) -> Entailment {
    let epr = !premise.has_exists_under_forall() && !conclusion.has_forall_under_exists();
    let needed = (premise.count_exists() + conclusion.count_forall()).max(1);
    let width = premise
        .max_var()
        .max(conclusion.max_var())
        .map_or(1, |m| m as usize + 1);
    let mut complete = true;
    let mut env = vec![0; width];
    for n in 1..=cfg.k.max(if epr { needed } else { 0 }) {
        let universe: Vec<ThreadId> = (1..=n as ThreadId).collect();
        let models = ground(premise, &mut env, &universe);
        if models.len() > cfg.max_models {
            complete = false;
            break;
        }
        for cube in models {
            let c = Configuration::new(universe.clone(), cube);
            if !eval_qpa_formula(&c, &Default::default(), conclusion).unwrap_or(false) {
                return Entailment::Counter(c);
            }
        }
    }
    if epr && complete {
        return Entailment::Valid;
    }
    match &cfg.prover {
        Some(p) => match p.check(&smt_query(qpa, premise, conclusion)) {
            Ok(SmtAnswer::Unsat) => Entailment::Valid,
            _ => Entailment::Bounded,
        },
        None => Entailment::Bounded,
    }
}

fn smt_formula(qpa: &Qpa, f: &Formula) -> String {
    let v = |x: u32| format!("v{x}");
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Pred(p, args) => {
            let name = symbol(&format!("q_{}", qpa.preds[*p].name));
            if args.is_empty() {
                name
            } else {
                format!(
                    "({name} {})",
                    args.iter().map(|&a| v(a)).collect::<Vec<_>>().join(" ")
                )
            }
        }
        Formula::Eq(a, b) => format!("(= {} {})", v(*a), v(*b)),
        Formula::Ne(a, b) => format!("(not (= {} {}))", v(*a), v(*b)),
        Formula::And(xs) => format!(
            "(and true {})",
            xs.iter()
                .map(|x| smt_formula(qpa, x))
                .collect::<Vec<_>>()
                .join(" ")
        ),
        Formula::Or(xs) => format!(
            "(or false {})",
            xs.iter()
                .map(|x| smt_formula(qpa, x))
                .collect::<Vec<_>>()
                .join(" ")
        ),
        Formula::Forall(x, b) => format!("(forall (({} T)) {})", v(*x), smt_formula(qpa, b)),
        Formula::Exists(x, b) => format!("(exists (({} T)) {})", v(*x), smt_formula(qpa, b)),
    }
}

/// Uninterpreted-sort encoding of `premise ∧ ¬conclusion`.
fn smt_query(qpa: &Qpa, premise: &Formula, conclusion: &Formula) -> String {
    let mut s = String::from("(declare-sort T 0)\n");
    for p in &qpa.preds {
        let args = vec!["T"; p.arity].join(" ");
        s.push_str(&format!(
            "(declare-fun {} ({args}) Bool)\n",
            symbol(&format!("q_{}", p.name))
        ));
    }
    s.push_str(&format!("(assert {})\n", smt_formula(qpa, premise)));
    s.push_str(&format!(
        "(assert (not {}))\n",
        smt_formula(qpa, conclusion)
    ));
    s
}

/// `⋁_{q ∉ F} ∃ī. q(ī)`: some non-accepting predicate is inhabited.
fn rejection_formula(qpa: &Qpa) -> Formula {
    Formula::or(
        qpa.preds
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.accepting)
            .map(|(i, p)| {
                let vs: Vec<u32> = (1..=p.arity as u32).collect();
                Formula::exists_many(vs.clone(), Formula::pred(i, vs))
            }),
    )
}

/// Check Initialization, Consecution (per letter) and Rejection in that order.
pub fn check_emptiness_certificate(
    qpa: &Qpa,
    cert: &Formula,
    cfg: &CertificateConfig,
) -> CertificateVerdict {
    let mut obligations = vec![(Condition::Initialization, qpa.start.clone(), cert.clone())];
    for (li, l) in qpa.alphabet.iter().enumerate() {
        obligations.push((
            Condition::Consecution(l.clone()),
            symbolic_post(qpa, cert, li),
            cert.clone(),
        ));
    }
    obligations.push((Condition::Rejection, cert.clone(), rejection_formula(qpa)));
    let mut all_valid = true;
    for (condition, premise, conclusion) in obligations {
        match entails(qpa, &premise, &conclusion, cfg) {
            Entailment::Valid => {}
            Entailment::Counter(witness) => {
                return CertificateVerdict::Rejected { condition, witness }
            }
            Entailment::Bounded => all_valid = false,
        }
    }
    if all_valid {
        CertificateVerdict::Accepted
    } else {
        CertificateVerdict::BoundedOnly { k: cfg.k }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::qpa::{parse_formula, parse_qpa};

    #[test]
    fn toy_certificates() {
        let a = parse_qpa(corpus::TOY_QPA).unwrap();
        let check = |c: &str| {
            check_emptiness_certificate(
                &a,
                &parse_formula(&a, c).unwrap(),
                &CertificateConfig::default(),
            )
        };
        assert_eq!(check(corpus::TOY_CERTIFICATE), CertificateVerdict::Accepted);
        assert!(matches!(
            check("r"),
            CertificateVerdict::Rejected {
                condition: Condition::Initialization,
                ..
            }
        ));
        assert!(
            matches!(check("q"), CertificateVerdict::Rejected { condition: Condition::Consecution(ref l), .. } if l == "b")
        );
        assert!(matches!(
            check("true"),
            CertificateVerdict::Rejected {
                condition: Condition::Rejection,
                ..
            }
        ));
    }

    #[test]
    fn accepting_predicate_defeats_rejection() {
        let a = parse_qpa("alphabet a $\npred q/0 accepting\nstart q\ndelta q * := q").unwrap();
        let v = check_emptiness_certificate(
            &a,
            &parse_formula(&a, "q").unwrap(),
            &CertificateConfig::default(),
        );
        assert!(matches!(
            v,
            CertificateVerdict::Rejected {
                condition: Condition::Rejection,
                ..
            }
        ));
    }

    #[test]
    fn non_epr_certificate_is_bounded_without_prover() {
        // ∀∃ shape: outside the fragment with the small-model property
        let a = parse_qpa("alphabet a $\npred e/2\npred u/1\nstart forall i. exists j. e(i, j)\ndelta e(i, j) * := e(i, j)\ndelta u(i) * := u(i)").unwrap();
        let cert = parse_formula(&a, "forall i. exists j. e(i, j)").unwrap();
        let v = check_emptiness_certificate(&a, &cert, &CertificateConfig::default());
        assert_eq!(v, CertificateVerdict::BoundedOnly { k: 3 });
    }
}
