use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(name)
}

fn pspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pspace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_basis_covers_decrement() {
    let o = pspace(&[
        "check",
        "--program",
        path(&corpus("decrement.prog")),
        "--basis",
        path(&corpus("decrement-full.basis")),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o).trim(), "EmptyUpTo(2,8)");
}

#[test]
fn fig4_basis_misses_the_interference_lasso() {
    let o = pspace(&[
        "check",
        "--program",
        path(&corpus("decrement.prog")),
        "--basis",
        path(&corpus("decrement-fig4.basis")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("counterexample (N = 2)"), "{text}");
    assert!(text.contains("@2"), "{text}");
}

#[test]
fn incremental_check_proves_decrement_and_dumps_a_reloadable_basis() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("out.basis");
    let prog = corpus("decrement.prog");
    let o = pspace(&[
        "check",
        "--program",
        path(&prog),
        "--dump-basis",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict: Yes, EmptyUpTo(2,8)"));
    let again = pspace(&[
        "check",
        "--program",
        path(&prog),
        "--basis",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(
        again.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
}

#[test]
fn nonterminating_program_reports_no_in_json() {
    let o = pspace(&[
        "check",
        "--program",
        path(&corpus("nonterm.prog")),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"]["verdict"], "No");
    assert_eq!(
        v["verdict"]["witness"]["recurrence"],
        serde_json::json!([1, 3])
    );
}

#[test]
fn usage_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.prog");
    assert_eq!(
        pspace(&["check", "--program", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(pspace(&["check", "--no-such-flag"]).status.code(), Some(3));
    let bad = dir.path().join("bad.prog");
    std::fs::write(&bad, "this is not a program").unwrap();
    assert_eq!(
        pspace(&["check", "--program", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(pspace(&["--help"]).status.code(), Some(0));
}

#[test]
fn toy_certificate_is_accepted_and_a_broken_one_rejected() {
    let o = pspace(&[
        "certificate",
        "--qpa",
        path(&corpus("toy.qpa")),
        "--certificate",
        path(&corpus("toy.cert")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "Accepted");
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("false.cert");
    std::fs::write(&cert, "false").unwrap();
    let o = pspace(&[
        "certificate",
        "--qpa",
        path(&corpus("toy.qpa")),
        "--certificate",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).starts_with("Rejected: Initialization"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn lasso_subcommands() {
    let prog = corpus("decrement.prog");
    let fig3a = "x=pos()@1 d=pos()@1 $ [x>0]@1 x=x-d@1";
    let o = pspace(&["lasso", "prove", "--program", path(&prog), fig3a]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("ranking: old(x) > x; old(x) >= 0"),
        "{}",
        stdout(&o)
    );

    let o = pspace(&[
        "lasso",
        "member",
        "--program",
        path(&prog),
        "--basis",
        path(&corpus("decrement-combined.basis")),
        fig3a,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = pspace(&[
        "lasso",
        "member",
        "--program",
        path(&prog),
        "--basis",
        path(&corpus("decrement-fig4.basis")),
        "x=pos()@1 d=pos()@1 x=pos()@2 $ [x>0]@1 x=x-d@1",
    ]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(
        pspace(&["lasso", "program", "--program", path(&prog), fig3a])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        pspace(&[
            "lasso",
            "program",
            "--program",
            path(&prog),
            "x=pos()@1 $ [x>0]@1"
        ])
        .status
        .code(),
        Some(1)
    );

    let nonterm = corpus("nonterm.prog");
    let o = pspace(&[
        "lasso",
        "prove",
        "--program",
        path(&nonterm),
        "x=1@1 $ [x>0]@1 skip@1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("nonterminating"));
}

#[test]
fn lassos_lists_program_lassos() {
    let o = pspace(&[
        "lassos",
        "--program",
        path(&corpus("nonterm.prog")),
        "--n-max",
        "1",
        "--stem-max",
        "1",
        "--loop-max",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).lines().any(|l| l == "x=1@1 $ [x>0]@1 skip@1"),
        "{}",
        stdout(&o)
    );
}
