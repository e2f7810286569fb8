//! The command-line binary against the shipped golden files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn golden(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden").join(rel)
}

fn cqac(args: &[&str]) -> (i32, String, String) {
    cqac_env(args, None)
}

fn cqac_env(args: &[&str], bound: Option<&str>) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cqac"));
    cmd.args(args).env_remove("CQAC_SCALE_BOUND");
    if let Some(b) = bound {
        cmd.env("CQAC_SCALE_BOUND", b);
    }
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn p(rel: &str) -> String {
    golden(rel).to_str().unwrap().to_string()
}

fn assert_golden(rel: &str, actual: &str, regenerate: &str) {
    let expected = std::fs::read_to_string(golden(rel)).unwrap();
    assert_eq!(actual, expected, "golden {rel} differs; regenerate with `{regenerate} --emit-golden golden/{rel}`");
}

#[test]
fn transform_golden() {
    let (code, out, _) = cqac(&["transform", &p("transform/containing.cq"), "--relevant", &p("transform/contained.cq")]);
    assert_eq!(code, 0);
    assert_golden("transform/program.txt", &out, "cqac transform containing.cq --relevant contained.cq");
    assert!(out.contains("i_le_8(X) :- u_le_7(X).  # link rule"));
    assert!(out.contains("i_ge_5(X) :- u_ge_6(X).  # link rule"));
}

#[test]
fn mcr_golden() {
    let (code, out, _) = cqac(&["mcr", &p("mcr/query.cq"), "--views", &p("mcr/views.cq")]);
    assert_eq!(code, 0);
    assert_golden("mcr/program.txt", &out, "cqac mcr query.cq --views views.cq");
    let body: String = out.lines().skip_while(|l| !l.starts_with('@')).map(|l| format!("{}\n", l.split("  #").next().unwrap())).collect();
    let reparsed = cqac::datalog::DatalogProgram::parse(&body).unwrap();
    assert_eq!(reparsed.rules.len(), 39);
}

#[test]
fn certain_golden_and_oracle() {
    let args = ["certain", &p("mcr/query.cq"), "--views", &p("mcr/views.cq"), "--instance", &p("mcr/instance.facts")];
    let (code, out, _) = cqac(&args);
    assert_eq!(code, 0);
    assert_golden("mcr/certain.txt", &out, "cqac certain query.cq --views views.cq --instance instance.facts");
    let mut with_oracle = args.to_vec();
    with_oracle.push("--oracle");
    let (code, _, err) = cqac(&with_oracle);
    assert_eq!(code, 3, "{err}");
    assert!(err.starts_with("error[scale-bound]"));
    let (code, out, _) = cqac_env(&with_oracle, Some("40"));
    assert_eq!(code, 0);
    assert!(out.starts_with("AGREE\n"));
}

#[test]
fn gen_hard_golden() {
    let (code, out, _) = cqac(&["gen-hard", &p("gen-hard/formula.qbf")]);
    assert_eq!(code, 0);
    assert_golden("gen-hard/pairs.txt", &out, "cqac gen-hard formula.qbf");
    let (code, out, _) = cqac_env(&["contains", "--strategy", "oracle", "--json", &p("mcr/query.cq"), &p("mcr/query.cq")], Some("16"));
    assert_eq!(code, 0, "{out}");
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("cqac-bin-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.cq");
    std::fs::write(&bad, "q() :- e(X,Y), X <= .").unwrap();
    let (code, _, err) = cqac(&["contains", bad.to_str().unwrap(), &p("transform/containing.cq")]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error[parse]"), "{err}");
    let (code, out, _) = cqac(&["contains", &p("transform/containing.cq"), &p("transform/contained.cq")]);
    assert_eq!(code, 0);
    assert!(out.starts_with("CONTAINED\n"));
    let (code, out, _) = cqac(&["contains", &p("transform/contained.cq"), &p("transform/containing.cq")]);
    assert_eq!(code, 1);
    assert!(out.starts_with("NOT CONTAINED\n"));
    let (code, _, _) = cqac(&["contains", "--strategy", "bogus", &p("transform/containing.cq"), &p("transform/contained.cq")]);
    assert_eq!(code, 2);
    let (code, out, _) = cqac(&["transform", &p("mcr/views.cq")]);
    assert_eq!(code, 0, "{out}");
    let general = dir.join("general.cq");
    std::fs::write(&general, "q() :- e(X,Y), X < Y.").unwrap();
    let (code, _, err) = cqac(&["transform", general.to_str().unwrap(), "--relevant", &p("mcr/query.cq")]);
    assert_eq!(code, 2, "{err}");
    assert!(err.starts_with("error[fragment]"), "{err}");
}

#[test]
fn selftest_reports_seed_and_passes() {
    let (code, a, _) = cqac(&["selftest", "--corpus-size", "60", "--seed", "3", "--json"]);
    let (_, b, _) = cqac(&["selftest", "--corpus-size", "60", "--seed", "3", "--json"]);
    assert_eq!(code, 0, "{a}");
    assert_eq!(a, b);
    let r: cqac::cli::Report = serde_json::from_str(&a).unwrap();
    assert_eq!(r.fields["seed"], "3");
    assert_eq!(r.verdict.as_deref(), Some("PASS"));
    assert_eq!(r.to_json(), a);
}
