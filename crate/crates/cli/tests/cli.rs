use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_colloid-expansion"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn partition_check_tally() {
    let o = run(&["graphs", "partition-check", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["report"]["interval_tally"], 38);
    assert_eq!(v["report"]["passed"], true);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = run(&[
        "convergence",
        "sweep",
        "--zr",
        "0:0.1:11",
        "--criteria",
        "easy,kp",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("zr,R,r,zhat_easy,zR_easy,zR_kp,ratio"));
    let ratios: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 11);
    assert!(ratios.iter().all(|r| *r >= 1.0));
    assert!(ratios.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn bad_input_exits_one() {
    assert_eq!(run(&["geometry", "lens", "--radius", "-1", "--dist", "1"]).status.code(), Some(1));
    assert_eq!(run(&["graphs", "count", "--n", "9"]).status.code(), Some(1));
    let o = run(&["graphs", "partition-check", "--n", "4", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("n,trees,connected"));
    assert_eq!(run(&["effective", "zhat", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("desk.cfg");
    std::fs::write(&cfg, "# desk\nzr = 0.1\nzR = 0.001\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&run(&["effective", "zhat", "--config", c]));
    assert!((v["zhat"]["value"].as_f64().unwrap() - 0.000_572_622_9).abs() < 1e-9);
    let v = json(&run(&["effective", "zhat", "--config", c, "--zr", "0"]));
    assert_eq!(v["zhat"]["value"].as_f64().unwrap(), 0.001);
    std::fs::write(&cfg, "zr 0.1\n").unwrap();
    assert_eq!(run(&["effective", "zhat", "--config", c]).status.code(), Some(1));
}

#[test]
fn convergence_exit_codes() {
    let ok = run(&["convergence", "check", "--criterion", "easy", "--zR", "0.01", "--zr", "0.1"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&["convergence", "check", "--criterion", "easy", "--zR", "0.02", "--zr", "0.1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(json(&bad)["witness"]["satisfied"], false);
}

#[test]
fn series_outside_region_warns() {
    let args = [
        "pressure", "--zR", "0.05", "--zr", "0.05", "--order", "2", "--samples", "5000",
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["warnings"][0]["kind"], "criterion_violated");
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(1));
}

#[test]
fn reproducible_across_runs_and_threads() {
    let args = ["coeff", "bm", "--m", "2", "--zr", "0.1", "--samples", "20000", "--seed", "9"];
    let a = run(&args);
    let mut more = args.to_vec();
    more.extend(["--threads", "3"]);
    let b = run(&more);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let mut other = args.to_vec();
    other[args.len() - 1] = "10";
    assert_ne!(a.stdout, run(&other).stdout);
}

#[test]
fn validate_subset() {
    let o = run(&["validate", "all", "--quick", "--only", "2,3,9,10,11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 5);
}
