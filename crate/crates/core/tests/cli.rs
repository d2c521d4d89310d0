use std::path::Path;
use std::process::Command;

use epsgames::cli::run;
use epsgames::dist::DistributionSpec;
use epsgames::eq::analyze;
use epsgames::game::{Game, GameShape};
use epsgames::generate::{gen_iid, SeedSpec};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("epsgames").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const MATCHING_PENNIES: &str = r#"{"actions":[2,2],"utilities":[[1,-1,-1,1],[-1,1,1,-1]]}"#;

#[test]
fn analyze_matching_pennies() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("mp.json");
    std::fs::write(&f, MATCHING_PENNIES).unwrap();
    let (code, out, _) = call(&["analyze", "--game", path_str(&f), "--epsilon", "1.9"]);
    assert_eq!(code, 0);
    assert_eq!(out, "{\"epsilon\":1.9,\"nash\":0,\"eps\":0,\"eps_star\":0}\n");
    // One agent at gain 2, the other at -2, in every profile.
    let (code, out, _) = call(&["analyze", "--game", path_str(&f), "--epsilon", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out, "{\"epsilon\":2,\"nash\":0,\"eps\":4,\"eps_star\":4}\n");
    let (_, out, _) = call(&["analyze", "--game", path_str(&f), "--epsilon", "2", "--list"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["eps_profiles"], serde_json::json!([[0, 0], [1, 0], [0, 1], [1, 1]]));
    assert_eq!(v["nash_profiles"], serde_json::json!([]));
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for f in [&a, &b] {
        let (code, _, _) = call(&["gen", "--shape", "2,3,2", "--dist", "gaussian(0,1)", "--seed", "7", "--out", path_str(f)]);
        assert_eq!(code, 0);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let stored = Game::from_json(&text).unwrap();
    let shape = GameShape::new(vec![2, 3, 2]).unwrap();
    let direct = gen_iid(&shape, &"gaussian(0,1)".parse::<DistributionSpec>().unwrap(), SeedSpec::new(7), 0);
    assert_eq!(stored.utilities(), direct.utilities());

    let (code, out, _) = call(&["analyze", "--game", path_str(&a), "--epsilon", "0.25"]);
    assert_eq!(code, 0);
    let r = analyze(&direct, 0.25).unwrap();
    assert_eq!(
        out,
        format!("{{\"epsilon\":0.25,\"nash\":{},\"eps\":{},\"eps_star\":{}}}\n", r.count_nash, r.count_eps, r.count_eps_star)
    );

    let (_, stdout_game, _) = call(&["gen", "--shape", "2,3,2", "--dist", "gaussian(0,1)", "--seed", "7"]);
    assert_eq!(stdout_game, text);
    let (_, other, _) = call(&["gen", "--shape", "2,3,2", "--dist", "gaussian(0,1)", "--seed", "7", "--index", "1"]);
    assert_ne!(other, text);
}

#[test]
fn gen_measures() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("k3.txt");
    std::fs::write(&g, "n 3\n0 1\n1 2\n0 2\n").unwrap();
    let (_, iid, _) = call(&["gen", "--shape", "2,2,2", "--seed", "3"]);
    let (_, net, _) = call(&["gen", "--shape", "2,2,2", "--seed", "3", "--graph", path_str(&g)]);
    let (_, cop, _) = call(&["gen", "--shape", "2,2,2", "--seed", "3", "--rho", "0"]);
    assert_eq!(iid, net);
    assert_eq!(iid, cop);
    let (code, _, err) = call(&["gen", "--shape", "2,2", "--seed", "3", "--graph", path_str(&g)]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
    let (code, _, _) = call(&["gen", "--shape", "2,2", "--rho", "0.1", "--graph", path_str(&g)]);
    assert_eq!(code, 1);
}

#[test]
fn expander_command() {
    let dir = tempfile::tempdir().unwrap();
    let k8 = dir.path().join("k8.txt");
    let mut text = String::from("n 8\n");
    for i in 0..8 {
        for j in i + 1..8 {
            text.push_str(&format!("{i} {j}\n"));
        }
    }
    std::fs::write(&k8, text).unwrap();
    assert_eq!(call(&["expander", "--graph", path_str(&k8), "--alpha", "4"]).1, "true\n");
    let c8 = dir.path().join("c8.txt");
    std::fs::write(&c8, (0..8).map(|i| format!("{i} {}\n", (i + 1) % 8)).fold("n 8\n".to_string(), |a, l| a + &l)).unwrap();
    assert_eq!(call(&["expander", "--graph", path_str(&c8), "--alpha", "4"]).1, "false\n");
    assert_eq!(call(&["expander", "--graph", path_str(&c8), "--c", "1"]).1, "false\n");
    assert_eq!(call(&["expander", "--graph", path_str(&k8)]).0, 1);
}

#[test]
fn bounds_and_lemma3() {
    let (code, out, _) = call(&["bounds", "--shape", "2,2", "--dist", "uniform(0,1)", "--epsilon", "0.05"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["lambda_t"].as_f64().unwrap() - 1.2045).abs() < 1e-4);
    assert_eq!(v["predicted_limit"]["kind"], "one");
    // Theory is available beyond the enumeration cap.
    let thirty = vec!["2"; 30].join(",");
    let (code, out, _) = call(&["bounds", "--shape", &thirty, "--epsilon", "0.1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["bound_s"].as_f64().unwrap() - 0.10863).abs() < 1e-5);

    let (code, out, _) = call(&["lemma3", "--dist", "exponential(1)", "--epsilon", "0.1", "--kmax", "1e4", "--right"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,lhs,rhs,ratio,rhs_right");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("10000,"));
    let (code, _, err) = call(&["lemma3", "--dist", "uniform(0,1)", "--epsilon", "0.5", "--kmax", "100"]);
    assert_eq!(code, 2);
    assert!(err.contains("hazard"));
}

#[test]
fn share_and_fig1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"agents":[2,3],"actions":[2],"epsilons":[0.05],"targets":["nash","eps"],"replications":200,"master_seed":1}"#,
    )
    .unwrap();
    let (code, out, _) = call(&["share", "--config", path_str(&cfg)]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 5);
    assert!(out.starts_with("shape,agents,epsilon,target,successes,replications,share,ci_low,ci_high\n2x2,2,0,nash,"));
    let (_, threaded, _) = call(&["--threads", "3", "share", "--config", path_str(&cfg)]);
    assert_eq!(out, threaded);
    let (_, reseeded, _) = call(&["share", "--config", path_str(&cfg), "--seed", "2"]);
    assert_ne!(out, reseeded);
    let (_, full, _) = call(&["share", "--config", path_str(&cfg), "--full-counts"]);
    assert!(full.lines().next().unwrap().ends_with(",mean_count,at_least_1,at_least_2,at_least_3"));

    let (code, _, err) = call(&["share", "--config", path_str(&cfg), "--check", "--replications", "2000"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(err.lines().count(), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"shapes":[[2,2]],"unknown":true}"#).unwrap();
    assert_eq!(call(&["share", "--config", path_str(&bad)]).0, 2);
    assert_eq!(call(&["share", "--config", path_str(&dir.path().join("missing.json"))]).0, 2);

    let out_csv = dir.path().join("fig1.csv");
    let (code, _, _) = call(&["fig1", "--seed", "7", "--replications", "10", "--out", path_str(&out_csv)]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    assert!(csv.starts_with("panel,actions,agents,share,ci_low,ci_high\n"));
    assert_eq!(csv.lines().count(), 65);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(call(&[]).0, 1);
    assert_eq!(call(&["frobnicate"]).0, 1);
    assert_eq!(call(&["analyze", "--game", "x.json", "--bogus"]).0, 1);
    assert_eq!(call(&["gen", "--shape", "2,x"]).0, 1);
    assert_eq!(call(&["gen", "--shape", "2,2", "--dist", "weibull(1)"]).0, 1);
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("analyze"));
    let (code, out, _) = call(&["--version"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), format!("epsgames {}", env!("CARGO_PKG_VERSION")));
    // Runtime errors: invalid shape, negative ε, missing file.
    assert_eq!(call(&["gen", "--shape", "1,2"]).0, 2);
    assert_eq!(call(&["analyze", "--game", "/nonexistent/game.json"]).0, 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_epsgames");
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("mp.json");
    std::fs::write(&f, MATCHING_PENNIES).unwrap();
    let ok = Command::new(bin).args(["analyze", "--game", path_str(&f), "--epsilon", "3"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "{\"epsilon\":3,\"nash\":0,\"eps\":4,\"eps_star\":4}\n");
    let neg = Command::new(bin).args(["analyze", "--game", path_str(&f), "--epsilon=-1"]).output().unwrap();
    assert_eq!(neg.status.code(), Some(2));
    assert!(neg.stdout.is_empty());
    let usage = Command::new(bin).arg("--nope").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
}
