use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use guarantee_core::cache::Cache;
use guarantee_core::compose::{canonical, enumerate_canonical, prefix_simplex, CanonicalSequence};
use guarantee_core::duality::dual;
use guarantee_core::feasibility::{is_feasible_with, FeasibilityOptions};
use guarantee_core::maximality::{is_maximal_with, search_combinations, MaximalityOptions};
use guarantee_core::protocols::{worst_case_guarantee_with, EvalOptions, EvalStatus, ProtocolSpec};
use guarantee_core::suites::{run_suite, SuiteOptions, SUITES};
use guarantee_core::{Error, RankLottery};
use serde_json::{json, Value};

const PASS: u8 = 0;
const FAIL: u8 = 1;
const UNDECIDED: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "guarantees", version, about = "Exact worst-case guarantees for lotteries over outcomes")]
struct Cli {
    /// Worker threads for profile enumeration (0 = all cores).
    #[arg(long, global = true, env = "GUARANTEES_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Directory for cached feasibility and maximality reports.
    #[arg(long, global = true, env = "GUARANTEES_CACHE")]
    cache: Option<PathBuf>,
    /// Stop enumeration after this many profiles and report undecided.
    #[arg(long, global = true, env = "GUARANTEES_LIMIT_PROFILES")]
    limit_profiles: Option<u64>,
    #[arg(long, global = true, env = "GUARANTEES_SEED", default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Is the lottery a feasible guarantee for n agents?
    Feasible {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        lottery: String,
    },
    /// Is the lottery a maximal guarantee for n agents?
    Maximal {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        lottery: String,
    },
    /// Dual of a guarantee.
    Dual {
        #[arg(long, allow_hyphen_values = true)]
        lottery: String,
    },
    /// Canonical guarantee named by a word such as "RD,VT".
    Compose {
        #[arg(long)]
        word: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
    /// Every canonical guarantee for (n, p).
    Canonical {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
    /// Vertices of the simplex spanned by a full-length word's prefixes and UNI.
    Simplex {
        #[arg(long)]
        word: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
    /// Worst-case guarantee of a protocol such as "veto(1); uniform".
    ProtocolEval {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
    /// Run a named verification suite ("list" prints the names).
    Verify {
        #[arg(long)]
        suite: String,
    },
    /// Look for maximal midpoints of canonical guarantees outside every simplex.
    SearchCombinations {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
    },
}

struct Output {
    value: Value,
    text: String,
    code: u8,
}

fn feasibility_opts(cli: &Cli) -> FeasibilityOptions {
    FeasibilityOptions {
        jobs: cli.jobs,
        limit_profiles: cli.limit_profiles,
        ..FeasibilityOptions::default()
    }
}

fn maximality_opts(cli: &Cli) -> MaximalityOptions {
    MaximalityOptions {
        feasibility: feasibility_opts(cli),
        ..MaximalityOptions::default()
    }
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// Looks the report up in the cache, computing and storing it on a miss.
fn cached(
    cli: &Cli,
    kind: &str,
    lottery: &RankLottery,
    n: usize,
    compute: impl FnOnce() -> guarantee_core::Result<Value>,
) -> guarantee_core::Result<Value> {
    let Some(dir) = &cli.cache else {
        return compute();
    };
    let cache = Cache::new(dir)?;
    let key = Cache::key(kind, &lottery.to_string(), &[n as u64, cli.limit_profiles.unwrap_or(0)]);
    if let Some(v) = cache.get(&key)? {
        return Ok(v);
    }
    let v = compute()?;
    // Undecided answers depend on limits and are not worth keeping.
    if v["verdict"] != "undecided" {
        cache.put(&key, &v)?;
    }
    Ok(v)
}

fn verdict_code(verdict: &Value) -> u8 {
    if verdict == "undecided" {
        UNDECIDED
    } else {
        PASS
    }
}

fn run(cli: &Cli) -> guarantee_core::Result<Output> {
    Ok(match &cli.command {
        Command::Feasible { n, lottery } => {
            let l = RankLottery::parse(lottery)?;
            let v = cached(cli, "feasible", &l, *n, || Ok(to_json(&is_feasible_with(&l, *n, &feasibility_opts(cli))?)))?;
            let mut text = format!("{}", v["verdict"].as_str().unwrap_or("?"));
            if let Some(q) = v["witness_profile"].as_str() {
                text.push_str(&format!("\nblocking profile: {q}"));
            }
            Output { code: verdict_code(&v["verdict"]), text, value: v }
        }
        Command::Maximal { n, lottery } => {
            let l = RankLottery::parse(lottery)?;
            let v = cached(cli, "maximal", &l, *n, || Ok(to_json(&is_maximal_with(&l, *n, &maximality_opts(cli))?)))?;
            let mut text = format!("{}", v["verdict"].as_str().unwrap_or("?"));
            if let Some(mu) = v["improver"].as_str() {
                text.push_str(&format!("\nimprover: {mu}"));
            }
            Output { code: verdict_code(&v["verdict"]), text, value: v }
        }
        Command::Dual { lottery } => {
            let d = dual(&RankLottery::parse(lottery)?);
            Output { text: d.to_string(), value: json!({ "dual": d }), code: PASS }
        }
        Command::Compose { word, n, p } => {
            let l = canonical(&CanonicalSequence::parse(word, *n, *p)?)?;
            Output { text: l.to_string(), value: json!({ "word": word, "n": n, "p": p, "lottery": l }), code: PASS }
        }
        Command::Canonical { n, p } => {
            let all = enumerate_canonical(*n, *p)?;
            let text = all.iter().map(|(s, l)| format!("{}: {l}", s.word_text())).collect::<Vec<_>>().join("\n");
            let value = Value::Array(all.iter().map(|(s, l)| json!({ "word": s.word_text(), "lottery": l })).collect());
            Output { text, value, code: PASS }
        }
        Command::Simplex { word, n, p } => {
            let vertices = prefix_simplex(&CanonicalSequence::parse(word, *n, *p)?)?;
            let text = vertices.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("\n");
            Output { text, value: json!({ "word": word, "vertices": vertices }), code: PASS }
        }
        Command::ProtocolEval { spec, n, p } => {
            let protocol = ProtocolSpec::parse(spec)?;
            let r = worst_case_guarantee_with(&protocol, *n, *p, &EvalOptions::neutral())?;
            let (text, code) = match (&r.status, &r.achieved) {
                (EvalStatus::Complete, Some(a)) => (a.to_string(), PASS),
                _ => ("undecided".to_string(), UNDECIDED),
            };
            Output { text, value: to_json(&r), code }
        }
        Command::Verify { suite } if suite == "list" => {
            let text = SUITES.iter().map(|(id, about)| format!("{id}  {about}")).collect::<Vec<_>>().join("\n");
            let value = Value::Array(SUITES.iter().map(|(id, about)| json!({ "suite": id, "about": about })).collect());
            Output { text, value, code: PASS }
        }
        Command::Verify { suite } => {
            let opts = SuiteOptions { seed: cli.seed, feasibility: feasibility_opts(cli) };
            let r = run_suite(suite, &opts)?;
            let mut lines: Vec<String> = r
                .checks
                .iter()
                .map(|c| {
                    let tag = if c.pass { "PASS" } else if c.undecided { "UNDECIDED" } else { "FAIL" };
                    if c.pass {
                        format!("{tag} {}: {}", c.description, c.computed)
                    } else {
                        format!("{tag} {}: expected {}, computed {}", c.description, c.expected, c.computed)
                    }
                })
                .collect();
            let passed = r.checks.iter().filter(|c| c.pass).count();
            lines.push(format!("{}: {passed}/{} checks pass in {} ms", r.suite, r.checks.len(), r.runtime_ms));
            let code = if r.passed() { PASS } else if r.undecided() { UNDECIDED } else { FAIL };
            Output { text: lines.join("\n"), value: to_json(&r), code }
        }
        Command::SearchCombinations { n, p } => {
            let found = search_combinations(*n, *p, &maximality_opts(cli))?;
            let text = found
                .iter()
                .map(|c| {
                    let mark = if c.new_maximal { "  <- maximal, outside every simplex" } else { "" };
                    format!("{} + {}: {} {}{mark}", c.first, c.second, c.lottery, to_json(&c.verdict).as_str().unwrap_or("?"))
                })
                .collect::<Vec<_>>()
                .join("\n");
            let undecided = found.iter().any(|c| to_json(&c.verdict) == "undecided");
            Output { text, value: to_json(&found), code: if undecided { UNDECIDED } else { PASS } }
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    match run(&cli) {
        Ok(out) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&out.value).expect("json"));
            } else {
                println!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Limit(_) => UNDECIDED,
                Error::Internal(_) => FAIL,
                _ => USAGE,
            })
        }
    }
}
