use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

const ONE_UNARY: &str = r#"{"domain": ["0","1"], "free_value": "0", "variables": ["x","y"],
 "relations": {"R": {"arity": 1, "tuples": [["1"]]}},
 "constraints": [{"relation": "R", "vars": ["x"]}], "k": 1}"#;

const IMPLICATION: &str = r#"{"domain": ["0","1"], "free_value": "0", "variables": ["x","y","z"],
 "relations": {"Imp": {"arity": 2, "tuples": [["0","0"],["0","1"],["1","1"]]}},
 "constraints": [{"relation": "Imp", "vars": ["x","z"]}], "k": 2}"#;

const WEIGHTED: &str = r#"{"domain": ["0","1"], "free_value": "0", "variables": ["a","b","c"],
 "relations": {"N": {"arity": 2, "tuples": [["0","0"],["0","1"],["1","0"]]}},
 "constraints": [{"relation": "N", "vars": ["a","b"]}], "k": 2,
 "weights": {"a": "4", "b": "3", "c": "5"}, "target": "9"}"#;

const FAMILY: &str = r#"{"ground": ["p","q","r"], "hypergraphs": [
 {"vertices": ["p","q"], "edges": [["q"]]},
 {"vertices": ["q","r"], "edges": [["q","r"]]}], "k": 2}"#;

fn w1() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_w1"));
    cmd.env_remove("W1_JOBS")
        .env_remove("W1_MAX_CANDIDATES")
        .env_remove("W1_NRAM_BUDGET");
    cmd
}

fn exec(cmd: &mut Command) -> (i32, String, String) {
    let out: Output = cmd.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn with_stdin(cmd: &mut Command, input: &str) -> (i32, String) {
    let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_prints_witness() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "imp.json", IMPLICATION);
    let (code, out, _) = exec(w1().arg("solve").arg(&f));
    assert_eq!(code, 0);
    assert_eq!(out, "x=1,z=1\n");
    let (code, out, _) = exec(w1().arg("solve").arg(&f).args(["--deterministic", "--stats"]));
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x=1,z=1");
    assert!(lines[1].starts_with("d=") && lines[1].contains(" l=") && lines[1].contains(" nodes="));
}

#[test]
fn unsatisfiable_exits_one() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "u.json", &ONE_UNARY.replace(r#""k": 1"#, r#""k": 0"#));
    let (code, out, _) = exec(w1().arg("solve").arg(&f));
    assert_eq!((code, out.as_str()), (1, "unsatisfiable\n"));
    let (code, _, _) = exec(w1().arg("oracle").arg(&f));
    assert_eq!(code, 1);
}

#[test]
fn empty_frontier_patch_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "r.json", ONE_UNARY);
    let verify = |extra: &[&str], cert: &str| exec(w1().arg("verify").arg(&f).arg(cert).args(extra)).0;
    assert_eq!(verify(&[], "y=1"), 1);
    assert_eq!(verify(&[], "x=1"), 0);
    assert_eq!(verify(&["--no-patch"], "y=1"), 0);
    let (code, out, _) = exec(w1().arg("solve").arg(&f).args(["--mode", "verify", "--certificate", "x=1"]));
    assert_eq!((code, out.as_str()), (0, "accepted\n"));
    let (code, _, err) = exec(w1().arg("verify").arg(&f).arg("x=1,y=1"));
    assert_eq!(code, 2, "{err}");
}

#[test]
fn generated_instances_solve_identically() {
    let gen = || exec(w1().args(["gen", "--seed", "7", "--vars", "6", "--constraints", "4"])).1;
    let doc = gen();
    assert_eq!(doc, gen());
    let first = with_stdin(w1().args(["solve", "-"]), &doc);
    let second = with_stdin(w1().args(["solve", "-"]), &doc);
    assert_eq!(first, second);
    assert!(first.0 == 0 || first.0 == 1);
    let oracle = with_stdin(w1().args(["oracle", "-"]), &doc);
    assert_eq!(oracle.0, first.0);
}

#[test]
fn errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let (code, _, err) = exec(w1().arg("frobnicate"));
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
    let bad = file(&dir, "bad.json", r#"{"domain": ["0"], "free_value": "0"}"#);
    let (code, _, err) = exec(w1().arg("solve").arg(&bad));
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
    let (code, _, _) = exec(w1().args(["solve", "/nonexistent/instance.json"]));
    assert_eq!(code, 2);
}

#[test]
fn candidate_cap_from_environment() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "imp.json", IMPLICATION);
    let (code, _, err) = exec(w1().arg("solve").arg(&f).env("W1_MAX_CANDIDATES", "1"));
    assert_eq!(code, 2);
    assert!(err.contains("cap"), "{err}");
}

#[test]
fn tables_dump_is_stable() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "r.json", ONE_UNARY);
    let (code, out, _) = exec(w1().args(["tables", "--dump"]).arg(&f));
    assert_eq!(code, 0);
    assert_eq!(out, "d {} 1\nl {} | x=1 1\n");
    let (_, literal, _) = exec(w1().args(["tables", "--dump", "--no-patch"]).arg(&f));
    assert_eq!(literal, "");
    let (_, satsets, _) = exec(w1().args(["tables", "--dump-satsets"]).arg(&f));
    assert!(satsets.contains("\"C[x]\""));
}

#[test]
fn subset_sum_is_one_based() {
    let (code, out, _) = exec(w1().args(["subset-sum", "--n", "4", "--k", "2", "--values", "5,3,9,6", "--target", "11"]));
    assert_eq!((code, out.as_str()), (0, "1,4\n"));
    let (code, _, _) = exec(w1().args(["subset-sum", "--n", "4", "--k", "2", "--values", "5,3,9,6", "--target", "2"]));
    assert_eq!(code, 1);
    let (code, _, err) = exec(w1().args(["subset-sum", "--n", "3", "--k", "2", "--values", "5,3,9,6", "--target", "2"]));
    assert_eq!(code, 2, "{err}");
}

#[test]
fn wcsp_and_hitting_set() {
    let dir = TempDir::new().unwrap();
    let f = file(&dir, "w.json", WEIGHTED);
    let (code, out, _) = exec(w1().arg("wcsp").arg(&f).arg("--stats"));
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("a=1,c=1"));
    let h = file(&dir, "h.json", FAMILY);
    let (code, out, _) = exec(w1().arg("hitting-set").arg(&h));
    assert_eq!((code, out.as_str()), (0, "q,r\n"));
}

#[test]
fn nram_run_and_audit() {
    let dir = TempDir::new().unwrap();
    let prog = file(&dir, "p.asm", "LOADI 5\nGUESS\nSTORE 1\nLOAD 1\nSUB 2\nJZERO yes\nREJECT\nyes: ACCEPT\n");
    let (code, out, _) = exec(w1().args(["nram", "run"]).arg(&prog).args(["--init", "r2=3", "--guess", "tape:2"]));
    assert_eq!(code, 0);
    assert!(out.starts_with("outcome accept\n"));
    assert!(out.contains("nondet=1"));
    let (code, out, _) = exec(w1().args(["nram", "run"]).arg(&prog).args(["--init", "r2=3", "--guess", "tape:4"]));
    assert_eq!((code, out.lines().next()), (1, Some("outcome reject")));
    let (code, out, _) = exec(
        w1().args(["nram", "audit"])
            .arg(&prog)
            .args(["--init", "r2=3", "--bounds", "steps=8,nondet=1,reg=2,value=5,tail=7"]),
    );
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("CHECK tail PASS observed=6 bound=7"));
    let (code, out, _) = exec(
        w1().args(["nram", "audit"])
            .arg(&prog)
            .args(["--init", "r2=3", "--bounds", "steps=8,nondet=1,reg=2,value=5,tail=3"]),
    );
    assert_eq!(code, 1);
    assert!(out.contains("CHECK tail FAIL"));
    let (code, out, _) = exec(w1().args(["nram", "run"]).arg(&prog).env("W1_NRAM_BUDGET", "2").args(["--guess", "tape:0"]));
    assert_eq!((code, out.lines().next()), (1, Some("outcome out-of-budget")));
}

#[test]
fn bundled_program_round_trip() {
    let dir = TempDir::new().unwrap();
    let (_, asm, _) = exec(w1().args(["nram", "program"]));
    let prog = file(&dir, "p.asm", &asm);
    let input = ["--values", "5,3,9,6", "--target", "11", "--k", "2"];
    let (_, preload, _) = exec(w1().args(["nram", "preload"]).args(input));
    let init = preload.lines().find_map(|l| l.strip_prefix("init ")).unwrap().to_string();
    let bounds = preload.lines().find_map(|l| l.strip_prefix("bounds ")).unwrap().to_string();
    let (code, out, _) = exec(w1().args(["nram", "audit"]).arg(&prog).args(["--init", &init, "--bounds", &bounds]));
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("outcome accept\n"));
    let (code, _, _) = exec(w1().args(["nram", "subset-sum"]).args(input));
    assert_eq!(code, 0);
    let (code, out, _) = exec(w1().args(["nram", "subset-sum", "--values", "5,3,9,6", "--target", "2", "--k", "2"]));
    assert_eq!(code, 1);
    assert!(out.ends_with("outcome reject\n"));
}

#[test]
fn selftest_and_bench() {
    let (code, out, _) = exec(w1().args(["selftest", "--scale", "0.01"]));
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().all(|l| l.starts_with("PASS") || l.starts_with("selftest:")));
    let (code, out, _) = exec(w1().args(["bench", "--n", "10,50", "--k", "2"]));
    assert_eq!(code, 0);
    assert!(out.ends_with("per-candidate lookups independent of n: yes\n"));
}
