use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use uncover::coherence::{first_violation, program_is_coherent};
use uncover::exec::{exec_nfa, parse_trace, print_trace, Letter, Mode, Trace};
use uncover::ghost::{is_k_coherent, verify_k};
use uncover::recvpa::{
    bounded_incoherence, exec_vpa, rfeas_run, verify_recursive, COHERENCE_CHECK_DEPTH, COHERENCE_CHECK_LEN,
};
use uncover::scc::{self, render_state};
use uncover::syntax::{parse_postcondition, parse_program, Program};
use uncover::terms::{oracle_coherent, oracle_feasible, ViolationKind};
use uncover::verifier::{postcondition, verify, Report, Verdict};
use uncover::{AnalysisError, Limits};

const HOLDS: u8 = 0;
const FAILS: u8 = 1;
const USAGE: u8 = 2;
const BUDGET: u8 = 3;
const NOT_COHERENT: u8 = 4;
const DISAGREEMENT: u8 = 5;

/// Verifier for programs over uninterpreted functions.
///
/// Exit codes: 0 property holds or program verified, 1 property fails or
/// postcondition violated, 2 usage or parse error, 3 search budget
/// exceeded, 4 program not coherent (or not k-coherent), 5 automaton and
/// term model disagree on a coherent trace.
#[derive(Parser)]
#[command(name = "uncover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide coherence or k-coherence of a program.
    Check(CheckArgs),
    /// Verify a program against its postcondition.
    Verify(VerifyArgs),
    /// Analyse a single execution.
    Trace(TraceArgs),
}

#[derive(Args)]
struct Common {
    /// Print a JSON report instead of text.
    #[arg(long)]
    json: bool,
    /// Worker threads for breadth-first searches.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,
    /// Budget on product states explored.
    #[arg(long, env = "UNCOVER_MAX_STATES", default_value_t = 1_000_000)]
    max_states: usize,
    /// Budget on subset-construction states.
    #[arg(long, default_value_t = 100_000)]
    max_subset_states: usize,
}

impl Common {
    fn limits(&self) -> Limits {
        Limits {
            max_states: self.max_states,
            max_subset_states: self.max_subset_states,
            threads: self.threads as usize,
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Program file.
    file: PathBuf,
    /// Check coherence (the default).
    #[arg(long, conflicts_with_all = ["k", "k_max"])]
    coherence: bool,
    /// Check k-coherence with this many ghost variables.
    #[arg(long, conflicts_with = "k_max")]
    k: Option<usize>,
    /// Find the least k up to this bound for which the program is k-coherent.
    #[arg(long)]
    k_max: Option<usize>,
    /// Print the execution automaton in DOT format instead.
    #[arg(long)]
    dot: bool,
    /// Write the witness execution, if any, to this trace file.
    #[arg(long, value_name = "PATH")]
    counterexample: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// Program file.
    file: PathBuf,
    /// Verify with this many ghost variables.
    #[arg(long, conflicts_with = "k_max")]
    k: Option<usize>,
    /// Try 0, 1, ... ghost variables up to this bound.
    #[arg(long)]
    k_max: Option<usize>,
    /// Postcondition to check instead of the one in the file.
    #[arg(long, value_name = "FORMULA")]
    post: Option<String>,
    /// Write the counterexample or witness execution, if any, to this trace file.
    #[arg(long, value_name = "PATH")]
    counterexample: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TraceArgs {
    /// Trace file.
    file: PathBuf,
    /// Decide feasibility with the term model and the automaton.
    #[arg(long)]
    feasible: bool,
    /// Decide coherence with the term model and the automaton.
    #[arg(long)]
    coherent: bool,
    /// Show the feasibility automaton's state after every letter.
    #[arg(long)]
    run_scc: bool,
    #[command(flatten)]
    common: Common,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }

    fn analysis(file: &Path, e: AnalysisError) -> Self {
        let code = match e {
            AnalysisError::StateBudget { .. } | AnalysisError::SubsetBudget { .. } => BUDGET,
            _ => USAGE,
        };
        Failure {
            code,
            message: format!("{}: {e}", file.display()),
        }
    }
}

struct Outcome {
    code: u8,
    report: Map<String, Value>,
    text: String,
    explored: usize,
    witness: Option<Trace>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (name, file, common, counterexample) = match &cli.command {
        Command::Check(a) => ("check", &a.file, &a.common, a.counterexample.as_ref()),
        Command::Verify(a) => ("verify", &a.file, &a.common, a.counterexample.as_ref()),
        Command::Trace(a) => ("trace", &a.file, &a.common, None),
    };
    let result = match &cli.command {
        Command::Check(a) => check(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Trace(a) => trace(a),
    };
    let out = match result {
        Ok(out) => out,
        Err(f) => {
            eprintln!("{}", f.message);
            return ExitCode::from(f.code);
        }
    };
    if let (Some(path), Some(w)) = (counterexample, &out.witness) {
        if let Err(e) = std::fs::write(path, print_trace(w)) {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(USAGE);
        }
    }
    if common.json {
        let mut report = Map::new();
        report.insert("schema".into(), json!(1));
        report.insert(
            "command".into(),
            json!({"name": name, "file": file.display().to_string()}),
        );
        report.extend(out.report);
        report.insert(
            "stats".into(),
            json!({"states_explored": out.explored, "time_ms": start.elapsed().as_millis() as u64}),
        );
        println!("{}", Value::Object(report));
    } else {
        print!("{}", out.text);
    }
    ExitCode::from(out.code)
}

fn read(file: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(file).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))
}

fn load_program(file: &Path) -> Result<Program, Failure> {
    let src = read(file)?;
    parse_program(&src).map_err(|e| Failure::usage(e.render(&file.display().to_string())))
}

fn letters(t: &Trace) -> Value {
    Value::Array(t.letters.iter().map(|l| json!(l.display(&t.sig).to_string())).collect())
}

fn indented(t: &Trace) -> String {
    if t.is_empty() {
        return "  (empty execution)\n".into();
    }
    t.letters.iter().map(|l| format!("  {}\n", l.display(&t.sig))).collect()
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("report fragments are objects"),
    }
}

fn check(a: &CheckArgs) -> Result<Outcome, Failure> {
    let p = load_program(&a.file)?;
    let limits = a.common.limits();
    let fail = |e| Failure::analysis(&a.file, e);
    if a.dot {
        let dot = if p.is_recursive() {
            exec_vpa(&p, Mode::Complete).to_dot()
        } else {
            exec_nfa(&p, Mode::Complete)
                .map_err(|e| Failure::usage(format!("{}: {e}", a.file.display())))?
                .to_dot(&p.sig)
        };
        return Ok(Outcome {
            code: HOLDS,
            report: object(json!({"dot": dot})),
            text: dot,
            explored: 0,
            witness: None,
        });
    }
    if a.k.is_some() || a.k_max.is_some() {
        if p.is_recursive() {
            return Err(Failure::usage(format!(
                "{}: k-coherence is only decided for programs without methods",
                a.file.display()
            )));
        }
        let ks = match (a.k, a.k_max) {
            (Some(k), _) => k..=k,
            (None, Some(m)) => 0..=m,
            (None, None) => unreachable!(),
        };
        let mut explored = 0;
        let mut last = None;
        for k in ks {
            let r = is_k_coherent(&p, k, &limits).map_err(fail)?;
            explored += r.explored;
            let done = r.k_coherent();
            last = Some((k, r.witness));
            if done {
                break;
            }
        }
        let (k, witness) = last.expect("at least one k is tried");
        return Ok(match witness {
            None => Outcome {
                code: HOLDS,
                report: object(json!({"verdict": "k-coherent", "k": k})),
                text: format!("{k}-coherent\n"),
                explored,
                witness: None,
            },
            Some(w) => Outcome {
                code: FAILS,
                report: object(json!({"verdict": "not-k-coherent", "k": k, "witness": letters(&w)})),
                text: format!(
                    "not {k}-coherent: no placement of {k} ghost variables makes this execution coherent\n{}",
                    indented(&w)
                ),
                explored,
                witness: Some(w),
            },
        });
    }
    let (witness, explored, bounded) = if p.is_recursive() {
        let vpa = exec_vpa(&p, Mode::Partial);
        (
            bounded_incoherence(&vpa, COHERENCE_CHECK_LEN, COHERENCE_CHECK_DEPTH),
            0,
            true,
        )
    } else {
        let r = program_is_coherent(&p, &limits).map_err(fail)?;
        (r.witness, r.explored, false)
    };
    let mut report = Map::new();
    if bounded {
        report.insert(
            "bounds".into(),
            json!({"max_len": COHERENCE_CHECK_LEN, "max_depth": COHERENCE_CHECK_DEPTH}),
        );
    }
    let scope = if bounded {
        format!(" (runs of up to {COHERENCE_CHECK_LEN} letters, call depth {COHERENCE_CHECK_DEPTH})")
    } else {
        String::new()
    };
    Ok(match witness {
        None => {
            report.insert("verdict".into(), json!("coherent"));
            Outcome {
                code: HOLDS,
                report,
                text: format!("coherent{scope}\n"),
                explored,
                witness: None,
            }
        }
        Some((w, kind)) => {
            report.insert("verdict".into(), json!("not-coherent"));
            report.insert("kind".into(), json!(kind.as_str()));
            report.insert("witness".into(), letters(&w));
            Outcome {
                code: FAILS,
                report,
                text: format!("not coherent{scope}: {} violation\n{}", kind.as_str(), indented(&w)),
                explored,
                witness: Some(w),
            }
        }
    })
}

fn verify_cmd(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let p = load_program(&a.file)?;
    let limits = a.common.limits();
    let fail = |e| Failure::analysis(&a.file, e);
    let post = match &a.post {
        Some(src) => parse_postcondition(&p.sig, src).map_err(|e| Failure::usage(e.render("--post")))?,
        None => postcondition(&p),
    };
    let (report, k): (Report, Option<usize>) = if p.is_recursive() {
        if a.k.is_some() || a.k_max.is_some() {
            return Err(Failure::usage(format!(
                "{}: ghost variables are only supported for programs without methods",
                a.file.display()
            )));
        }
        (verify_recursive(&p, &post, &limits).map_err(fail)?, None)
    } else if let Some(k) = a.k {
        (verify_k(&p, &post, k, &limits).map_err(fail)?, Some(k))
    } else if let Some(max) = a.k_max {
        let mut explored = 0;
        let mut last = None;
        for k in 0..=max {
            let r = verify_k(&p, &post, k, &limits).map_err(fail)?;
            explored += r.explored;
            let done = !matches!(r.verdict, Verdict::NotKCoherent { .. });
            last = Some((r.verdict, k));
            if done {
                break;
            }
        }
        let (verdict, k) = last.expect("at least one k is tried");
        (Report { verdict, explored }, Some(k))
    } else {
        (verify(&p, &post, &limits).map_err(fail)?, None)
    };

    let mut out = Map::new();
    out.insert("verdict".into(), json!(report.verdict.name()));
    if let Some(k) = k {
        out.insert("k".into(), json!(k));
    }
    let mut text = String::new();
    let (code, witness) = match report.verdict {
        Verdict::Verified => {
            text.push_str("verified\n");
            (HOLDS, None)
        }
        Verdict::Violated {
            counterexample,
            final_state,
            ghost_witness,
        } => {
            out.insert("witness".into(), letters(&counterexample));
            let sig = ghost_witness.as_ref().map_or(&counterexample.sig, |g| &g.sig);
            let state = render_state(sig, &final_state);
            out.insert("final_state".into(), json!(state));
            let _ = write!(text, "violated by\n{}final state: {state}\n", indented(&counterexample));
            if let Some(g) = &ghost_witness {
                out.insert("ghost_witness".into(), letters(g));
                let _ = write!(text, "coherent with ghost assignments\n{}", indented(g));
            }
            (FAILS, Some(counterexample))
        }
        Verdict::NotCoherent { witness, kind, detail } => {
            out.insert("kind".into(), json!(kind.as_str()));
            out.insert("detail".into(), json!(detail));
            out.insert("witness".into(), letters(&witness));
            let _ = write!(
                text,
                "not coherent: {} violation ({detail})\n{}",
                kind.as_str(),
                indented(&witness)
            );
            (NOT_COHERENT, Some(witness))
        }
        Verdict::NotKCoherent { k, witness } => {
            out.insert("witness".into(), letters(&witness));
            let _ = write!(text, "not {k}-coherent\n{}", indented(&witness));
            (NOT_COHERENT, Some(witness))
        }
    };
    Ok(Outcome {
        code,
        report: out,
        text,
        explored: report.explored,
        witness,
    })
}

fn trace(a: &TraceArgs) -> Result<Outcome, Failure> {
    let src = read(&a.file)?;
    let name = a.file.display().to_string();
    let t = parse_trace(&src).map_err(|e| Failure::usage(e.render(&name)))?;
    let exec_err = |e: &dyn std::fmt::Display| Failure::usage(format!("{name}: {e}"));
    let all = !(a.feasible || a.coherent || a.run_scc);
    let recursive = t
        .letters
        .iter()
        .any(|l| matches!(l, Letter::Call(_) | Letter::Return(_)));
    let violation = oracle_coherent(&t.sig, &t).map_err(|e| exec_err(&e))?;
    let coherent = violation.is_none();

    let mut report = Map::new();
    let mut text = String::new();
    let mut holds = true;
    let mut disagree = false;
    let describe = |v: Option<(usize, ViolationKind)>| match v {
        None => "coherent".to_string(),
        Some((i, k)) => format!("{} violation at letter {}", k.as_str(), i + 1),
    };

    if all || a.feasible {
        let oracle = oracle_feasible(&t.sig, &t).map_err(|e| exec_err(&e))?;
        let reject_at = if recursive {
            rfeas_run(&t).map_err(|e| exec_err(&e))?.reject_at
        } else {
            scc::run(&t, false).map_err(|e| exec_err(&e))?.reject_at
        };
        let automaton = reject_at.is_none();
        holds &= oracle;
        disagree |= coherent && oracle != automaton;
        report.insert(
            "feasible".into(),
            json!({"oracle": oracle, "automaton": automaton, "reject_at": reject_at}),
        );
        let _ = writeln!(text, "feasible: {oracle} (term model), {automaton} (automaton)");
    }
    if all || a.coherent {
        let oracle = violation.map(|v| (v.position, v.kind));
        let mut entry = json!({
            "oracle": coherent,
            "position": oracle.map(|v| v.0),
            "kind": oracle.map(|v| v.1.as_str()),
        });
        holds &= coherent;
        let _ = write!(text, "coherent: {coherent} (term model: {})", describe(oracle));
        if recursive {
            entry["automaton"] = Value::Null;
            text.push('\n');
        } else {
            let automaton = first_violation(&t);
            disagree |= automaton.is_none() != coherent;
            entry["automaton"] = json!(automaton.is_none());
            let _ = writeln!(text, ", {} (automaton: {})", automaton.is_none(), describe(automaton));
        }
        report.insert("coherent".into(), entry);
    }
    if all || a.run_scc {
        let (accepted, reject_at, states) = if recursive {
            let r = rfeas_run(&t).map_err(|e| exec_err(&e))?;
            let sig = t.sig.clone();
            let last = r
                .final_state
                .as_ref()
                .map(|q| render_state(&sig, &scc::SccState::Live(uncover::recvpa::RFeas::new(&sig).visible(q))));
            (r.accepted(), r.reject_at, last.into_iter().collect::<Vec<_>>())
        } else {
            let r = scc::run(&t, true).map_err(|e| exec_err(&e))?;
            let states = r.states.as_ref().expect("states were kept");
            (
                r.accepted(),
                r.reject_at,
                states.iter().map(|q| render_state(&t.sig, q)).collect(),
            )
        };
        holds &= accepted;
        report.insert(
            "run_scc".into(),
            json!({"accepted": accepted, "reject_at": reject_at, "states": states}),
        );
        if recursive {
            let _ = writeln!(text, "automaton {}", if accepted { "accepts" } else { "rejects" });
            if let Some(s) = states.first() {
                let _ = writeln!(text, "  final state: {s}");
            }
        } else {
            let _ = writeln!(text, "automaton run:");
            let _ = writeln!(text, "  {}", states[0]);
            for (l, s) in t.letters.iter().zip(&states[1..]) {
                let _ = writeln!(text, "  {}  =>  {s}", l.display(&t.sig));
            }
        }
    }
    let (code, verdict) = if disagree {
        text.push_str("DISAGREEMENT between the automaton and the term model\n");
        (DISAGREEMENT, "disagreement")
    } else if holds {
        (HOLDS, "holds")
    } else {
        (FAILS, "fails")
    };
    report.insert("verdict".into(), json!(verdict));
    report.insert("letters".into(), json!(t.len()));
    Ok(Outcome {
        code,
        report,
        text,
        explored: 0,
        witness: None,
    })
}
