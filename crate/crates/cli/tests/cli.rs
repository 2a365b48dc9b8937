use assert_cmd::Command;
use serde_json::Value;

fn cli() -> Command {
    Command::cargo_bin("guarantees").unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = cli().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn dual_of_veto() {
    assert_eq!(stdout(&["dual", "--lottery", "0,1/3,1/3,1/3,0,0"]).trim(), "1/3,1/3,0,0,0,1/3");
}

#[test]
fn compose_word() {
    assert_eq!(stdout(&["compose", "--word", "RD,VT", "--n", "3", "--p", "7"]).trim(), "1/4,1/4,0,1/4,0,0,1/4");
}

#[test]
fn two_agent_suite_passes() {
    let text = stdout(&["verify", "--suite", "two-agents-p5", "--seed", "7"]);
    assert!(text.lines().last().unwrap().contains("43/43"), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn parse_errors_report_position_and_exit_3() {
    let out = cli().args(["dual", "--lottery", "1/2,1/x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position 6"));
    cli().args(["frobnicate"]).assert().code(3);
}

#[test]
fn unknown_suite_is_a_usage_error() {
    cli().args(["verify", "--suite", "nope"]).assert().code(3);
}

#[test]
fn profile_limit_gives_undecided_exit() {
    let out = cli()
        .args(["feasible", "--n", "3", "--lottery", "2/3,0,0,0,0,1/3", "--limit-profiles", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("undecided"));
}

#[test]
fn json_lotteries_parse_back() {
    let v: Value = serde_json::from_str(&stdout(&["canonical", "--n", "3", "--p", "7", "--json"])).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 6);
    for e in entries {
        let text = e["lottery"].as_str().unwrap();
        let again = stdout(&["compose", "--word", e["word"].as_str().unwrap(), "--n", "3", "--p", "7"]);
        assert_eq!(again.trim(), text);
        let parsed = guarantee_core::RankLottery::parse(text).unwrap();
        assert_eq!(parsed.to_string(), text);
    }
}

#[test]
fn cached_and_fresh_verdicts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    for lottery in ["0,1/3,1/3,1/3,0,0", "0,1,0,0,0,0"] {
        let fresh: Value =
            serde_json::from_str(&stdout(&["maximal", "--n", "3", "--lottery", lottery, "--json"])).unwrap();
        let first: Value =
            serde_json::from_str(&stdout(&["maximal", "--n", "3", "--lottery", lottery, "--json", "--cache", cache]))
                .unwrap();
        let second: Value =
            serde_json::from_str(&stdout(&["maximal", "--n", "3", "--lottery", lottery, "--json", "--cache", cache]))
                .unwrap();
        assert_eq!(fresh["verdict"], first["verdict"]);
        assert_eq!(first, second);
    }
    assert!(dir.path().join("maximal").read_dir().unwrap().count() == 2);
}

#[test]
fn protocol_eval_random_dictator() {
    assert_eq!(stdout(&["protocol-eval", "--spec", "rd(pad)", "--n", "3", "--p", "6"]).trim(), "1/3,1/3,0,0,0,1/3");
}
