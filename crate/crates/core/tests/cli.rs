use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_theonlab"));
    c.env_remove("THEONLAB_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("theonlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const CYCLE: &str = "n=3|E: (1,2);(2,3);(3,1)";

#[test]
fn list_names_the_catalog() {
    let out = run(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "qr-tournamon",
        "skew-graphon",
        "dev-not-uinduce",
        "sep-uinduce-ucouple",
    ] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
    let v = json(&run(&["list", "--json"]));
    assert!(v["experiments"].as_array().unwrap().len() >= 7);
}

#[test]
fn density_report_schema() {
    let out = run(&[
        "density",
        "--theon",
        "qr-tournamon:k=2",
        "--model-text",
        CYCLE,
        "--samples",
        "20000",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "density");
    assert_eq!(v["seed"], 5);
    assert_eq!(v["n_samples"], 20000);
    assert_eq!(v["decision"], "pass");
    for key in ["params", "estimates", "oracle", "statistic", "p_value"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let labeled = v["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == "labeled")
        .unwrap();
    assert!(labeled["stderr"].as_f64().unwrap() > 0.0);
    // Every labeled tournament on three vertices has probability 1/8.
    let oracle = v["oracle"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["name"] == "labeled")
        .unwrap();
    assert_eq!(oracle["exact"], "1/8");
}

#[test]
fn seed_falls_back_to_environment() {
    let args = [
        "sample",
        "--theon",
        "qr-graphon:p=1/2",
        "--n",
        "6",
        "--json",
    ];
    let from_env = json(
        &bin()
            .args(args)
            .env("THEONLAB_SEED", "77")
            .output()
            .unwrap(),
    );
    let explicit = json(&run(&[&args[..], &["--seed", "77"]].concat()));
    assert_eq!(from_env["seed"], 77);
    assert_eq!(from_env, explicit);
    assert_eq!(json(&run(&args))["seed"], 0);
}

#[test]
fn thread_count_does_not_change_results() {
    let base = [
        "density",
        "--theon",
        "skew-graphon:p=0.3",
        "--model-text",
        "n=2|E: (1,2);(2,1)",
        "--samples",
        "150000",
        "--json",
    ];
    let one = run(&[&base[..], &["--threads", "1"]].concat());
    let three = run(&[&base[..], &["--threads", "3"]].concat());
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn replay_reproduces_a_stored_report() {
    let path = scratch("report.json");
    let p = path.to_str().unwrap();
    let out = run(&[
        "test",
        "--property",
        "independence",
        "--theon",
        "qr-graphon:p=0.3",
        "--level",
        "1",
        "--samples",
        "5000",
        "--seed",
        "3",
        "--out",
        p,
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let again = run(&["replay", p, "--threads", "2"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(json(&again)["identical"], true);

    // A tampered estimate must be detected.
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["statistic"] = Value::from(0.5);
    let tampered = scratch("tampered.json");
    std::fs::write(&tampered, v.to_string()).unwrap();
    let diff = run(&["replay", tampered.to_str().unwrap()]);
    assert_eq!(diff.status.code(), Some(1));
    assert_eq!(json(&diff)["identical"], false);
}

#[test]
fn rejection_exits_one() {
    let out = run(&[
        "test",
        "--property",
        "independence",
        "--theon",
        "skew-graphon:p=0.3",
        "--level",
        "1",
        "--samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["decision"], "reject");
    assert!(v["subtests"].is_null() || v["subtests"].is_array());
}

#[test]
fn usage_errors_exit_two() {
    let cases: [&[&str]; 5] = [
        &["sample", "--theon", "no-such-theon", "--n", "3"],
        &[
            "density",
            "--theon",
            "qr-tournamon:k=2",
            "--model-text",
            "n=x",
            "--samples",
            "10",
        ],
        &[
            "density",
            "--theon",
            "qr-tournamon:k=2",
            "--model-text",
            CYCLE,
            "--samples",
            "0",
        ],
        &["run", "no-such-experiment"],
        &[
            "test",
            "--property",
            "wobble",
            "--theon",
            "qr-graphon:p=1/2",
        ],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(
            String::from_utf8_lossy(&out.stderr).starts_with("error:"),
            "{args:?}"
        );
    }
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn theon_files_are_embedded() {
    let list = json(&run(&[
        "sample",
        "--theon",
        "qr-graphon:p=1",
        "--n",
        "3",
        "--json",
    ]));
    assert!(list["output"]["model"].as_str().unwrap().contains("(1,2)"));
    let path = scratch("bad-theon.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = run(&["sample", "--theon", path.to_str().unwrap(), "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alternating_census_experiment() {
    let out = run(&["run", "alternating-census", "--k", "3", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["decision"], "pass");
    assert_eq!(v["n_samples"], 0);
}
