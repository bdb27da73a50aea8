use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compactness")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn enumerate_two_stable_matchings() {
    let out = run(&["match", &fixture("two_stable.json"), "--enumerate"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    assert_eq!(j["count"], 2);
    assert_eq!(j["complete"], true);
}

#[test]
fn man_optimal_agrees_with_deferred_acceptance() {
    let out = run(&["match-optimal", &fixture("two_stable.json")]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    assert_eq!(j["agrees_with_deferred_acceptance"], true);
    assert_eq!(j["unique"], true);
}

#[test]
fn no_profitable_misreport() {
    let out = run(&["manipulate", &fixture("two_stable.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["profitable"].as_array().unwrap().len(), 0);
}

#[test]
fn garp_violation_reports_witness() {
    let out = run(&["garp", &fixture("violating_pair.json")]);
    assert_eq!(out.status.code(), Some(1));
    let j = json_of(&out);
    assert_eq!(j["satisfied"], false);
    assert_eq!(j["witness"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_demand_needs_columns() {
    assert_eq!(run(&["garp", &fixture("demand.csv")]).status.code(), Some(2));
    let out = run(&["rationalize", &fixture("demand.csv"), "--price-cols", "p1,p2", "--bundle-cols", "x1,x2", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    assert_eq!(j["rationalizable"], true);
    assert_eq!(j["fragment"]["verified"], true);
}

#[test]
fn couples_stable_at_original_capacities() {
    let out = run(&["couples", &fixture("couples.json"), "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    assert_eq!(j["stable"], true);
    assert_eq!(j["hospitals"]["h1"]["kstar"], 1);
    assert_eq!(j["oracle"]["total_deviation"], 0);
}

#[test]
fn couples_without_projections_rejected() {
    let out = run(&["couples", &fixture("couples_bad.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("downward closed"));
}

#[test]
fn float_probabilities_need_flag() {
    assert_eq!(run(&["arsp", &fixture("stoch_float.json")]).status.code(), Some(2));
    assert_eq!(run(&["arsp", &fixture("stoch_float.json"), "--allow-float"]).status.code(), Some(0));
}

#[test]
fn cyclic_stochastic_data_violates_arsp() {
    let out = run(&["arsp", &fixture("stoch_cyclic.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["lhs"], "21/10");
    assert_eq!(run(&["stoch-rationalize", &fixture("stoch_cyclic.json")]).status.code(), Some(1));
}

#[test]
fn uniform_stochastic_data_rationalized() {
    let out = run(&["stoch-rationalize", &fixture("stoch_uniform.json"), "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    assert_eq!(j["fragment"]["sat"], true);
    assert!(!j["distribution"].as_array().unwrap().is_empty());
}

#[test]
fn eps_nash_of_matching_pennies() {
    let out = run(&["nash", &fixture("matching_pennies.json"), "--eps", "1/10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verified"], true);
    assert_eq!(run(&["nash", &fixture("matching_pennies.json"), "--eps", "abc"]).status.code(), Some(2));
}

#[test]
fn walrasian_approximate_and_exact() {
    let out = run(&["walrasian", &fixture("trade.json"), "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verified"], true);
    let out = run(&["walrasian", &fixture("trade.json"), "--n", "8", "--exact"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verified"], true);
}

#[test]
fn szpilrajn_counts_linear_extensions() {
    let out = run(&["szpilrajn", &fixture("order.json"), "--enumerate"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["count"], 3);
}

#[test]
fn dynamic_window_and_family_presence() {
    let out = run(&["dynamic", &fixture("dyn.json"), "--window", "0", "3", "--enumerate"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["count"], 1);
    let out = run(&["dynamic", "--family", "parity_line", "--window", "-2", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["dynamic", "--family", "no_finite_presence", "--window", "-2", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ladder_exit_codes() {
    let out = run(&["ladder", "--family", "contradictory", "--kmax", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["first_unsat"], 4);
    let out = run(&["ladder", "--family", "szpilrajn", "--kmax", "6", "--step", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["monotone"], true);
    assert_eq!(run(&["ladder", "--family", "nope", "--kmax", "3"]).status.code(), Some(2));
}

#[test]
fn prefix_limit_survives_on_satisfiable_family() {
    let out = run(&["prefix-limit", "--family", "szpilrajn", "--prefix", "3", "--kmax", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["prefixes"].as_array().unwrap().len(), 1);
    let out = run(&["prefix-limit", "--family", "contradictory", "--prefix", "2", "--kmax", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn export_cnf_header_matches_body() {
    let dir = std::env::temp_dir().join(format!("compactness-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("stab.cnf");
    let out = run(&["export-cnf", "--domain", "matching", &fixture("two_stable.json"), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().find(|l| l.starts_with("p cnf")).unwrap();
    let nums: Vec<usize> = header.split_whitespace().skip(2).map(|x| x.parse().unwrap()).collect();
    let clauses: Vec<&str> = text.lines().filter(|l| !l.starts_with('c') && !l.starts_with('p') && !l.is_empty()).collect();
    assert_eq!(nums[1], clauses.len());
    let max_var = clauses
        .iter()
        .flat_map(|l| l.split_whitespace().map(|x| x.parse::<i64>().unwrap().unsigned_abs() as usize))
        .max()
        .unwrap();
    assert!(max_var <= nums[0]);
    assert!(clauses.iter().all(|l| l.ends_with(" 0")));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_file_is_usage_error() {
    assert_eq!(run(&["match", "/nonexistent/market.json"]).status.code(), Some(2));
}
