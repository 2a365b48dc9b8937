//! Acceptance run: ten criteria, one line each. Runs without the libtest
//! harness so the summary lines always reach the terminal.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use guarantee_core::suites::{run_suite, SuiteOptions};

struct Criterion {
    title: &'static str,
    suites: &'static [&'static str],
    budget: Option<Duration>,
}

const fn minutes(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

const CRITERIA: [Criterion; 10] = [
    Criterion {
        title: "n=3, p=6: UNI, VT, RD maximal; two feasible points dominated with improvers; half-half mix below UNI",
        suites: &["example-n3-p6"],
        budget: minutes(5),
    },
    Criterion {
        title: "two agents, p=5 and p=6: vertices and symmetric lotteries maximal, asymmetric ones dominated",
        suites: &["two-agents-p5", "two-agents-p6"],
        budget: minutes(1),
    },
    Criterion {
        title: "n >= p: nothing improves UNI and every feasible lottery lies below it",
        suites: &["many-agents"],
        budget: minutes(1),
    },
    Criterion {
        title: "duality swaps VT and RD, is an involution, and maps (1/2,0,0,1/2,0) to (1/3,0,1/3,1/3,0)",
        suites: &["duality"],
        budget: None,
    },
    Criterion {
        title: "canonical guarantees, their count, and both dictator compositions agree",
        suites: &["canonical-table"],
        budget: None,
    },
    Criterion {
        title: "n=3, p=6: interval midpoints maximal, off-interval points dominated",
        suites: &["intervals-n3-p6"],
        budget: minutes(15),
    },
    Criterion {
        title: "n=3, p=7: simplex vertices and centroids maximal, extra dual pair maximal",
        suites: &["simplices-n3-p7"],
        budget: minutes(60),
    },
    Criterion {
        title: "n=3, p=5: four boundary guarantees and their midpoints maximal; covers exist at every profile",
        suites: &["boundary-n3-p5"],
        budget: None,
    },
    Criterion {
        title: "veto and dictator protocols reproduce their guarantees exactly",
        suites: &["protocols-n3-p6"],
        budget: None,
    },
    Criterion {
        title: "certificates re-verify, LP is deterministic, families balanced, dominance a partial order",
        suites: &["infrastructure"],
        budget: None,
    },
];

fn main() -> ExitCode {
    let opts = SuiteOptions { seed: 20_260_101, ..SuiteOptions::default() };
    let mut failures = 0;
    for (i, c) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let mut problems = Vec::new();
        let mut checks = 0;
        for id in c.suites {
            match run_suite(id, &opts) {
                Ok(r) => {
                    checks += r.checks.len();
                    for check in r.checks.iter().filter(|x| !x.pass) {
                        problems.push(format!(
                            "{id}: {}: expected {}, computed {}",
                            check.description, check.expected, check.computed
                        ));
                    }
                }
                Err(e) => problems.push(format!("{id}: {e}")),
            }
        }
        let elapsed = start.elapsed();
        if let Some(b) = c.budget {
            if elapsed > b {
                problems.push(format!("took {:.1} s, budget {} s", elapsed.as_secs_f64(), b.as_secs()));
            }
        }
        let verdict = if problems.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} ({checks} checks, {:.1} s): {}",
            i + 1,
            elapsed.as_secs_f64(),
            c.title
        );
        for p in &problems {
            println!("    {p}");
        }
        if !problems.is_empty() {
            failures += 1;
        }
    }
    println!("{} of {} criteria pass", CRITERIA.len() - failures, CRITERIA.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
