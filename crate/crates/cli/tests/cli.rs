use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use uncover::exec::parse_trace;
use uncover::terms::oracle_feasible;

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uncover"))
        .args(args)
        .env_remove("UNCOVER_MAX_STATES")
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn report(args: &[&str]) -> (i32, Value) {
    let mut args = args.to_vec();
    args.push("--json");
    let out = run(&args);
    let text = String::from_utf8(out.stdout).unwrap();
    (
        out.status.code().unwrap(),
        serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}")),
    )
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("uncover-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, contents: &str) -> String {
        let path = self.0.join(name);
        std::fs::write(&path, contents).unwrap();
        path.to_str().unwrap().to_string()
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

#[test]
fn check_exit_codes() {
    assert_eq!(code(&["check", &corpus("p1.up"), "--coherence"]), 0);
    assert_eq!(code(&["check", &corpus("p2.up")]), 1);
    assert_eq!(code(&["check", &corpus("p2.up"), "--k", "1"]), 0);
    assert_eq!(code(&["check", &corpus("p2.up"), "--k", "0"]), 1);
}

#[test]
fn least_ghost_count_is_reported() {
    let (c, r) = report(&["check", &corpus("p2.up"), "--k-max", "3"]);
    assert_eq!(
        (c, r["verdict"].as_str(), r["k"].as_u64()),
        (0, Some("k-coherent"), Some(1))
    );
}

#[test]
fn reports_are_versioned() {
    let (_, r) = report(&["check", &corpus("p1.up")]);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"]["name"], "check");
    assert!(r["stats"]["states_explored"].as_u64().unwrap() > 0);
    assert!(r["stats"]["time_ms"].is_u64());
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&["verify", &corpus("p3_post.up")]), 0);
    assert_eq!(code(&["verify", &corpus("p3_wrong.up")]), 1);
    assert_eq!(code(&["verify", &corpus("p2_post.up")]), 4);
    assert_eq!(code(&["verify", &corpus("p2_post.up"), "--k", "0"]), 4);
    assert_eq!(code(&["verify", &corpus("p2_post.up"), "--k", "1"]), 0);
    assert_eq!(code(&["verify", &corpus("across_call.up")]), 0);
    assert_eq!(code(&["verify", &corpus("across_call.up"), "--post", "w = x"]), 1);
}

#[test]
fn skip_violates_false_with_the_empty_execution() {
    let s = Scratch::new("skip");
    let f = s.file("skip.up", "vars x;\nprogram { skip }\n");
    let (c, r) = report(&["verify", &f]);
    assert_eq!(c, 1);
    assert_eq!(r["verdict"], "violated");
    assert_eq!(r["witness"], Value::Array(vec![]));
}

#[test]
fn counterexample_file_round_trips() {
    let s = Scratch::new("cex");
    let out = s.0.join("cex.trace");
    let (c, r) = report(&[
        "verify",
        &corpus("p3_wrong.up"),
        "--counterexample",
        out.to_str().unwrap(),
    ]);
    assert_eq!(c, 1);
    let t = parse_trace(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let letters: Vec<String> = t.letters.iter().map(|l| l.display(&t.sig).to_string()).collect();
    assert_eq!(Value::from(letters), r["witness"]);
    assert!(oracle_feasible(&t.sig, &t).unwrap());
}

#[test]
fn ghost_witness_is_reported() {
    let (c, r) = report(&["verify", &corpus("p2_post.up"), "--k", "1", "--post", "z = x"]);
    assert_eq!(c, 1);
    let ghost = r["ghost_witness"].as_array().unwrap();
    assert!(ghost.len() > r["witness"].as_array().unwrap().len());
}

#[test]
fn trace_examples() {
    let (c, r) = report(&["trace", &corpus("rho1.trace"), "--feasible"]);
    assert_eq!(
        (c, &r["feasible"]["oracle"], &r["feasible"]["automaton"]),
        (0, &Value::Bool(true), &Value::Bool(true))
    );
    let (c, r) = report(&["trace", &corpus("pi_prime.trace"), "--coherent"]);
    assert_eq!(c, 1);
    assert_eq!(r["coherent"]["oracle"], false);
    assert_eq!(r["coherent"]["kind"], "memoizing");
    let (c, r) = report(&["trace", &corpus("contradiction.trace"), "--feasible"]);
    assert_eq!((c, &r["feasible"]["oracle"]), (1, &Value::Bool(false)));
}

#[test]
fn run_scc_shows_every_state() {
    let (c, r) = report(&["trace", &corpus("rho1.trace"), "--run-scc"]);
    assert_eq!(c, 0);
    assert_eq!(
        r["run_scc"]["states"].as_array().unwrap().len(),
        r["letters"].as_u64().unwrap() as usize + 1
    );
}

#[test]
fn corpus_traces_never_disagree() {
    for entry in std::fs::read_dir(corpus("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("trace") {
            let c = code(&["trace", path.to_str().unwrap(), "--run-scc", "--feasible", "--coherent"]);
            assert!(c == 0 || c == 1, "{}: exit {c}", path.display());
        }
    }
}

#[test]
fn recursive_traces_use_the_pushdown_automaton() {
    let s = Scratch::new("rec");
    let f = s.file(
        "across.trace",
        "vars x, y, z, w; funs n/1; methods m(out y);\nz := n(x)\ncall m\ny := n(x)\n<w> := return\nassume(w != z)\n",
    );
    let (c, r) = report(&["trace", &f]);
    assert_eq!(c, 1);
    assert_eq!(r["feasible"]["automaton"], false);
    assert_eq!(r["feasible"]["reject_at"], 4);
    assert_eq!(r["coherent"]["automaton"], Value::Null);
}

#[test]
fn parse_errors_carry_positions() {
    let s = Scratch::new("parse");
    let f = s.file("bad.up", "vars x;\nprogram {\n  x := ;\n}\n");
    let out = run(&["check", &f]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with(&format!("{f}:3:8: ")), "{err}");
    let out = run(&["verify", &corpus("p3_post.up"), "--post", "z = q"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("--post:1:5: "));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["check", &corpus("p1.up"), "--k", "1", "--k-max", "2"]), 2);
    assert_eq!(code(&["check", "/nonexistent/file.up"]), 2);
    assert_eq!(code(&["check", &corpus("across_call.up"), "--k", "1"]), 2);
}

#[test]
fn budgets_exit_3() {
    assert_eq!(code(&["verify", &corpus("p3_post.up"), "--max-states", "3"]), 3);
    assert_eq!(
        code(&["check", &corpus("p1.up"), "--k", "1", "--max-subset-states", "2"]),
        3
    );
    let out = Command::new(env!("CARGO_BIN_EXE_uncover"))
        .args(["verify", &corpus("p3_post.up")])
        .env("UNCOVER_MAX_STATES", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dot_output() {
    let out = run(&["check", &corpus("p1.up"), "--dot"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));
    let out = run(&["check", &corpus("across_call.up"), "--dot"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("digraph"));
}

#[test]
fn human_output_lists_the_witness() {
    let out = run(&["check", &corpus("p2.up")]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("not coherent: memoizing violation\n"));
    assert!(text.contains("\n  x := n(x)\n"));
}
