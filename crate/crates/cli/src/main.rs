use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pspace::engine::{
    check_coverage, find_infeasibility_proof, run_algorithm1, uncovered_lassos_qpa, Coverage,
    EngineOptions, FeasibilityConfig, Justification, LassoOutcome, Verdict,
};
use pspace::logic::{Oracle, OracleConfig};
use pspace::program::{
    enumerate_program_lassos, is_program_lasso, parse_lasso, parse_program, ParameterizedProgram,
};
use pspace::proof_space::{lasso_in_proof_language, Basis, BasisError};
use pspace::qltl::{parse_qltl, Qltl};
use pspace::qpa::{
    check_emptiness_certificate, parse_formula, parse_qpa, CertificateConfig, CertificateVerdict,
    EmptinessConfig, Qpa,
};
use pspace::smt::SmtSolver;

/// Termination and liveness of parameterized programs via well-founded proof spaces.
#[derive(Parser, Debug)]
#[command(name = "pspace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prove termination (or a liveness property) of a parameterized program.
    Check(CheckArgs),
    /// Validate an emptiness certificate.
    Certificate(CertificateArgs),
    /// Work with a single lasso.
    Lasso(LassoArgs),
    /// List the program's lassos within bounds.
    Lassos(LassosArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Program source file.
    #[arg(long)]
    program: PathBuf,
    /// Values tried for nondeterministic choices, `LO..HI`.
    #[arg(long, value_parser = parse_range, default_value = "-8..8")]
    havoc_range: (i64, i64),
    /// External SMT solver command line (`auto` looks for z3 on the PATH).
    #[arg(long)]
    prover: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct Bounds {
    /// Largest number of threads searched.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    n_max: u64,
    /// Longest lasso word searched (including `$`).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    len_max: u64,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    bounds: Bounds,
    /// QLTL property file; without one, termination is checked.
    #[arg(long)]
    property: Option<PathBuf>,
    /// Basis file: check it alone instead of running the incremental algorithm.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Emptiness certificate for the final automaton.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Write the final basis to this file.
    #[arg(long)]
    dump_basis: Option<PathBuf>,
    /// Maximal number of sampled lassos.
    #[arg(long, default_value_t = 64)]
    max_iterations: usize,
}

#[derive(Args, Debug)]
struct CertificateArgs {
    /// Certificate file: a closed positive formula over the automaton's predicates.
    #[arg(long)]
    certificate: PathBuf,
    /// Check against this automaton file instead of a program.
    #[arg(long, conflicts_with_all = ["program", "basis", "property"])]
    qpa: Option<PathBuf>,
    #[arg(long, required_unless_present = "qpa")]
    program: Option<PathBuf>,
    #[arg(long)]
    basis: Option<PathBuf>,
    #[arg(long)]
    property: Option<PathBuf>,
    /// Largest universe searched for counter-models.
    #[arg(long, default_value_t = 3)]
    n_max: usize,
    #[arg(long)]
    prover: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct LassoArgs {
    #[command(subcommand)]
    action: LassoAction,
}

#[derive(Subcommand, Debug)]
enum LassoAction {
    /// Look for a nonterminating execution or a termination proof.
    Prove(LassoCommon),
    /// Membership in the lasso language of a basis.
    Member {
        #[command(flatten)]
        lasso: LassoCommon,
        #[arg(long)]
        basis: PathBuf,
    },
    /// Is the lasso a lasso of the program?
    Program(LassoCommon),
}

#[derive(Args, Debug)]
struct LassoCommon {
    #[command(flatten)]
    common: Common,
    /// `<cmd>@<tid> ... $ <cmd>@<tid> ...`
    lasso: String,
    /// Number of threads of the concrete execution (default: the largest id).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct LassosArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long, default_value_t = 2)]
    n_max: usize,
    #[arg(long, default_value_t = 4)]
    stem_max: usize,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    loop_max: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..")
        .or_else(|| s.split_once(','))
        .ok_or("expected LO..HI")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo > hi {
        return Err("empty range".into());
    }
    Ok((lo, hi))
}

/// Verdict-determined exit statuses.
const EXIT_YES: u8 = 0;
const EXIT_COUNTEREXAMPLE: u8 = 1;
const EXIT_UNDECIDED: u8 = 2;
const EXIT_USAGE: u8 = 3;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_program(path: &Path) -> Result<ParameterizedProgram> {
    parse_program(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_property(path: &Path) -> Result<Qltl> {
    parse_qltl(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn prover(spec: Option<&str>) -> Result<Option<SmtSolver>> {
    match spec {
        None => Ok(None),
        Some("auto") => Ok(SmtSolver::detect_z3()),
        Some(cmd) => Ok(Some(
            SmtSolver::new(cmd).context("cannot start the prover")?,
        )),
    }
}

fn oracle(common: &Common) -> Result<Oracle> {
    Ok(Oracle::new(OracleConfig {
        havoc_range: common.havoc_range,
        prover: prover(common.prover.as_deref())?,
    }))
}

/// Parse a basis and check that its triples are basic; triples the oracle
/// cannot decide are accepted with a warning.
fn load_basis(p: &ParameterizedProgram, path: &Path, oracle: &Oracle) -> Result<Basis> {
    let basis = Basis::parse(p, &read(path)?).with_context(|| format!("in {}", path.display()))?;
    match basis.validate(oracle) {
        Ok(()) => Ok(basis),
        Err(BasisError::Undecided { triple }) => {
            eprintln!("warning: validity of {triple} is undecided without a prover");
            Ok(basis)
        }
        Err(e) => Err(anyhow!(e).context(format!("in {}", path.display()))),
    }
}

/// Write to stdout, ignoring a closed pipe.
fn out(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(format: Format, text: &str, value: serde_json::Value) {
    match format {
        Format::Text => out(text),
        Format::Json => out(&format!(
            "{}\n",
            serde_json::to_string_pretty(&value).expect("serializable report")
        )),
    }
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let p = load_program(&args.common.program)?;
    let oracle = oracle(&args.common)?;
    let property = args.property.as_deref().map(load_property).transpose()?;
    let n_max = args.bounds.n_max as usize;
    let len_max = args.bounds.len_max as usize;
    if let Some(path) = &args.basis {
        let basis = load_basis(&p, path, &oracle)?;
        let coverage = check_coverage(
            &p,
            property.as_ref(),
            &basis,
            &EmptinessConfig::new(n_max, len_max),
        )?;
        let (text, code) = match &coverage {
            Coverage::EmptyUpTo { n_max, len_max } => {
                (format!("EmptyUpTo({n_max},{len_max})\n"), EXIT_YES)
            }
            Coverage::Counterexample { lasso, universe } => (
                format!("counterexample (N = {universe}): {lasso}\n"),
                EXIT_COUNTEREXAMPLE,
            ),
            Coverage::ResourceLimit { explored } => (
                format!("resource limit after {explored} configurations\n"),
                EXIT_UNDECIDED,
            ),
        };
        dump(args.dump_basis.as_deref(), &basis)?;
        emit(
            args.common.format,
            &text,
            json!({ "coverage": coverage, "basis": basis }),
        );
        return Ok(code);
    }
    let opts = EngineOptions {
        n_max,
        len_max,
        max_iterations: args.max_iterations,
        feasibility: FeasibilityConfig {
            havoc_range: args.common.havoc_range,
            ..FeasibilityConfig::default()
        },
        certificate: args.certificate.as_deref().map(read).transpose()?,
        certificate_config: CertificateConfig {
            prover: prover(args.common.prover.as_deref())?,
            ..CertificateConfig::default()
        },
        ..EngineOptions::default()
    };
    let report = run_algorithm1(&p, property.as_ref(), &opts, &oracle)?;
    let code = match &report.verdict {
        Verdict::Yes {
            basis,
            justification,
        } => {
            dump(args.dump_basis.as_deref(), basis)?;
            if args.certificate.is_some() && *justification != Justification::Certificate {
                eprintln!("warning: the certificate was not accepted; the answer holds up to the bounds only");
            }
            EXIT_YES
        }
        Verdict::No { .. } => EXIT_COUNTEREXAMPLE,
        Verdict::Unknown { .. } => EXIT_UNDECIDED,
        Verdict::BoundExhausted { basis, .. } => {
            dump(args.dump_basis.as_deref(), basis)?;
            EXIT_UNDECIDED
        }
    };
    emit(
        args.common.format,
        &report.to_string(),
        serde_json::to_value(&report)?,
    );
    Ok(code)
}

fn dump(path: Option<&Path>, basis: &Basis) -> Result<()> {
    if let Some(path) = path {
        fs::write(path, basis.to_text())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_certificate(args: &CertificateArgs) -> Result<u8> {
    let qpa: Qpa = match (&args.qpa, &args.program) {
        (Some(path), _) => {
            parse_qpa(&read(path)?).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(path)) => {
            let p = load_program(path)?;
            let oracle = Oracle::new(OracleConfig {
                prover: prover(args.prover.as_deref())?,
                ..OracleConfig::default()
            });
            let basis = args
                .basis
                .as_deref()
                .map(|b| load_basis(&p, b, &oracle))
                .transpose()?
                .unwrap_or_default();
            let property = args.property.as_deref().map(load_property).transpose()?;
            uncovered_lassos_qpa(&p, property.as_ref(), &basis)?
        }
        (None, None) => bail!("either --qpa or --program is required"),
    };
    let cert = parse_formula(&qpa, &read(&args.certificate)?)
        .with_context(|| format!("in {}", args.certificate.display()))?;
    let cfg = CertificateConfig {
        k: args.n_max,
        prover: prover(args.prover.as_deref())?,
        ..CertificateConfig::default()
    };
    let verdict = check_emptiness_certificate(&qpa, &cert, &cfg);
    let (text, value, code) = match &verdict {
        CertificateVerdict::Accepted => (
            "Accepted\n".to_string(),
            json!({ "verdict": "Accepted" }),
            EXIT_YES,
        ),
        CertificateVerdict::BoundedOnly { k } => (
            format!("BoundedOnly({k})\n"),
            json!({ "verdict": "BoundedOnly", "k": k }),
            EXIT_UNDECIDED,
        ),
        CertificateVerdict::Rejected { condition, witness } => {
            let structure = witness.display(&qpa).to_string();
            (
                format!("Rejected: {condition}\nwitness: {structure}\n"),
                json!({ "verdict": "Rejected", "condition": condition.to_string(), "witness": structure }),
                EXIT_COUNTEREXAMPLE,
            )
        }
    };
    emit(args.format, &text, value);
    Ok(code)
}

fn cmd_lasso(args: &LassoArgs) -> Result<u8> {
    match &args.action {
        LassoAction::Prove(a) => {
            let p = load_program(&a.common.program)?;
            let l = parse_lasso(&p, &a.lasso)?;
            let oracle = oracle(&a.common)?;
            let n = a
                .threads
                .unwrap_or_else(|| l.threads().into_iter().max().unwrap_or(1) as usize);
            let feas = FeasibilityConfig {
                havoc_range: a.common.havoc_range,
                ..FeasibilityConfig::default()
            };
            let (text, value, code) = match find_infeasibility_proof(&p, &l, n, &oracle, &feas) {
                LassoOutcome::Proof(proof) => (
                    format!("terminating\n{proof}\n"),
                    json!({ "result": "proof", "proof": proof }),
                    EXIT_YES,
                ),
                LassoOutcome::Feasible(w) => (
                    format!("nonterminating\n{w}"),
                    json!({ "result": "feasible", "witness": w }),
                    EXIT_COUNTEREXAMPLE,
                ),
                LassoOutcome::Unknown => (
                    "unknown\n".to_string(),
                    json!({ "result": "unknown" }),
                    EXIT_UNDECIDED,
                ),
            };
            emit(a.common.format, &text, value);
            Ok(code)
        }
        LassoAction::Member { lasso: a, basis } => {
            let p = load_program(&a.common.program)?;
            let l = parse_lasso(&p, &a.lasso)?;
            let basis = load_basis(&p, basis, &oracle(&a.common)?)?;
            let member = lasso_in_proof_language(&basis, &l);
            emit(
                a.common.format,
                &format!("{member}\n"),
                json!({ "lasso": l, "member": member }),
            );
            Ok(if member {
                EXIT_YES
            } else {
                EXIT_COUNTEREXAMPLE
            })
        }
        LassoAction::Program(a) => {
            let p = load_program(&a.common.program)?;
            let l = parse_lasso(&p, &a.lasso)?;
            let ok = is_program_lasso(&p, &l);
            emit(
                a.common.format,
                &format!("{ok}\n"),
                json!({ "lasso": l, "program_lasso": ok }),
            );
            Ok(if ok { EXIT_YES } else { EXIT_COUNTEREXAMPLE })
        }
    }
}

fn cmd_lassos(args: &LassosArgs) -> Result<u8> {
    let p = load_program(&args.program)?;
    for l in enumerate_program_lassos(&p, args.n_max, args.stem_max, args.loop_max as usize)? {
        out(&format!("{l}\n"));
    }
    Ok(EXIT_YES)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Certificate(a) => cmd_certificate(a),
        Command::Lasso(a) => cmd_lasso(a),
        Command::Lassos(a) => cmd_lassos(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
