use std::f64::consts::LOG2_E;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn blowfish(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowfish"))
        .args(args)
        .current_dir(dir)
        .env_remove("BLOWFISH_MAX_DATABASES")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = blowfish(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
}

fn num(report: &str, key: &str) -> f64 {
    value(report, key).parse().unwrap()
}

fn path_policy(dir: &Path, theta: &str, n: &str, name: &str) -> PathBuf {
    ok(
        dir,
        &[
            "policy",
            "build",
            "--kind",
            "distance-threshold",
            "--values",
            "1,2,3,4",
            "--theta",
            theta,
            "--n",
            n,
            "--out",
            name,
        ],
    );
    dir.join(name)
}

#[test]
fn build_validate_and_bound() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let p = path_policy(d, "1", "2", "p.json");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(doc["secret_edges"].as_array().unwrap().len(), 3);

    let summary = ok(d, &["policy", "validate", "p.json"]);
    assert_eq!(value(&summary, "valid"), "true");
    assert_eq!(value(&summary, "databases"), "16");

    let report = ok(d, &["bound", "compute", "p.json", "--epsilon", "0.1"]);
    assert_eq!(value(&report, "components"), "1");
    assert_eq!(value(&report, "max_diameter"), "6");
    assert!((num(&report, "leakage_upper_bits") - 0.86562).abs() < 1e-5);
    assert!((num(&report, "leakage_upper_bits") - 0.6 * LOG2_E).abs() < 1e-12);
}

#[test]
fn bound_slopes_round_trip() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let eps = 0.1;
    for n in 1..=4 {
        let mut nats = Vec::new();
        for (theta, diameter) in [("1", 3.0), ("2", 2.0), ("3", 1.0)] {
            let name = format!("p{theta}_{n}.json");
            path_policy(d, theta, &n.to_string(), &name);
            let graph = format!("g{theta}_{n}.json");
            ok(d, &["adjacency", "induce", &name, "--out", &graph]);
            let doc: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(d.join(&graph)).unwrap()).unwrap();
            assert_eq!(
                doc["vertices"].as_array().unwrap().len(),
                4usize.pow(n as u32)
            );

            let report = ok(d, &["bound", "compute", &name, "--epsilon", "0.1"]);
            let slope = diameter * n as f64 * eps;
            assert!(
                (num(&report, "leakage_upper_nats") - slope).abs() < 1e-12,
                "{report}"
            );
            nats.push(num(&report, "leakage_upper_nats"));
        }
        assert!(nats[0] > nats[1] && nats[1] > nats[2]);
    }
}

#[test]
fn tightness_sweep_rows() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "tightness",
            "sweep",
            "--n",
            "2,4,8",
            "--delta",
            "1,0.1,0.01,0.001",
            "--out",
            "sweep.csv",
        ],
    );
    let text = fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,delta,epsilon,bound_bits,leakage_bits,ratio,closed_form_gap"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for group in rows.chunks(4) {
        assert!(group
            .windows(2)
            .all(|w| w[1][5] < w[0][5] && w[0][0] == w[1][0]));
        assert!(group[3][5] > 1.0 && group[3][5] - 1.0 < 1e-3);
        assert!(group.iter().all(|r| r[6] <= 1e-12));
    }
}

#[test]
fn channel_audit_pipeline() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    path_policy(d, "1", "2", "p.json");
    ok(
        d,
        &[
            "channel",
            "generate",
            "--policy",
            "p.json",
            "--epsilon",
            "0.1",
            "--out",
            "k.csv",
        ],
    );

    let verify = ok(
        d,
        &[
            "channel",
            "verify",
            "k.csv",
            "--policy",
            "p.json",
            "--epsilon",
            "0.1",
        ],
    );
    assert_eq!(value(&verify, "status"), "pass");
    assert!(num(&verify, "minimal_epsilon") <= 0.1);

    let audited = ok(
        d,
        &[
            "bound",
            "compute",
            "p.json",
            "--epsilon",
            "0.1",
            "--channel",
            "k.csv",
        ],
    );
    assert_eq!(value(&audited, "status"), "pass");
    assert!(num(&audited, "margin_bits") > 0.0);

    let leak = ok(d, &["channel", "leakage", "k.csv"]);
    assert!((num(&leak, "leakage_bits") - num(&audited, "leakage_bits")).abs() < 1e-15);
    fs::write(
        d.join("prior.csv"),
        format!("0.5{}\n", ",0.03333333333333333".repeat(15)),
    )
    .unwrap();
    let skewed = ok(d, &["channel", "leakage", "k.csv", "--prior", "prior.csv"]);
    assert!(num(&skewed, "leakage_bits") <= num(&leak, "leakage_bits") + 1e-9);

    // a target below the channel's level fails but still writes the report
    let out = blowfish(
        d,
        &[
            "bound",
            "compute",
            "p.json",
            "--epsilon",
            "0.01",
            "--channel",
            "k.csv",
            "--out",
            "r.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let report = fs::read_to_string(d.join("r.txt")).unwrap();
    assert_eq!(value(&report, "private_at_target"), "false");
    assert_eq!(value(&report, "status"), "fail");
}

#[test]
fn symmetrise_outputs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    path_policy(d, "1", "2", "p.json");
    ok(
        d,
        &[
            "channel",
            "generate",
            "--policy",
            "p.json",
            "--epsilon",
            "0.5",
            "--mechanism",
            "random",
            "--seed",
            "3",
            "--out",
            "k.csv",
        ],
    );
    ok(
        d,
        &[
            "symmetrise",
            "run",
            "k.csv",
            "--policy",
            "p.json",
            "--merged",
            "k1.csv",
            "--averaged",
            "k2.csv",
            "--out",
            "s.txt",
        ],
    );
    let report = fs::read_to_string(d.join("s.txt")).unwrap();
    assert_eq!(value(&report, "all_passed"), "true");
    assert_eq!(value(&report, "group_source"), "full");
    assert_eq!(value(&report, "group_order"), "8");
    let k2 = fs::read_to_string(d.join("k2.csv")).unwrap();
    assert_eq!(k2.lines().count(), 17);

    let leak_k = ok(d, &["channel", "leakage", "k.csv"]);
    let leak_k2 = ok(d, &["channel", "leakage", "k2.csv"]);
    assert!((num(&leak_k, "leakage_bits") - num(&leak_k2, "leakage_bits")).abs() < 1e-9);
}

#[test]
fn outputs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    path_policy(d, "1", "2", "p.json");
    let runs: Vec<[Vec<u8>; 3]> = (0..2)
        .map(|_| {
            ok(
                d,
                &[
                    "channel",
                    "generate",
                    "--policy",
                    "p.json",
                    "--epsilon",
                    "0.3",
                    "--mechanism",
                    "random",
                    "--seed",
                    "11",
                    "--out",
                    "k.csv",
                ],
            );
            ok(
                d,
                &[
                    "figure",
                    "bound-sweep",
                    "--n",
                    "1,2,3",
                    "--family",
                    "cycle:6",
                    "--out",
                    "fig.csv",
                ],
            );
            ok(
                d,
                &[
                    "symmetrise",
                    "run",
                    "k.csv",
                    "--policy",
                    "p.json",
                    "--averaged",
                    "k2.csv",
                    "--out",
                    "s.txt",
                ],
            );
            ["k.csv", "fig.csv", "k2.csv"].map(|f| fs::read(d.join(f)).unwrap())
        })
        .collect();
    assert_eq!(runs[0], runs[1]);

    let other = blowfish(
        d,
        &[
            "channel",
            "generate",
            "--policy",
            "p.json",
            "--epsilon",
            "0.3",
            "--mechanism",
            "random",
            "--seed",
            "12",
        ],
    );
    assert_ne!(other.stdout, runs[0][0]);

    let fig = String::from_utf8(runs[0][1].clone()).unwrap();
    let lines: Vec<&str> = fig.lines().collect();
    assert_eq!(
        lines[0],
        "n,theta_or_kind,epsilon,q,max_diameter,bound_bits,leakage_bits,margin_bits"
    );
    assert_eq!(lines.len(), 1 + 4 * 3);
    assert!(lines.iter().any(|l| l.starts_with("2,cycle:6,0.1,1,6,")));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(blowfish(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        blowfish(d, &["policy", "build", "--bogus"]).status.code(),
        Some(2)
    );

    path_policy(d, "1", "3", "p.json");
    let out = blowfish(
        d,
        &[
            "--max-databases",
            "63",
            "adjacency",
            "induce",
            "p.json",
            "--out",
            "g.json",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(!d.join("g.json").exists());

    let out = Command::new(env!("CARGO_BIN_EXE_blowfish"))
        .args(["adjacency", "induce", "p.json", "--out", "g.json"])
        .current_dir(d)
        .env("BLOWFISH_MAX_DATABASES", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!d.join("g.json").exists());
    ok(
        d,
        &[
            "--max-databases",
            "64",
            "adjacency",
            "induce",
            "p.json",
            "--out",
            "g.json",
        ],
    );

    fs::write(
        d.join("bad.json"),
        r#"{"tuples":["a"],"secret_edges":[["a","a"]],"n":1,"permissible":"all"}"#,
    )
    .unwrap();
    let out = blowfish(d, &["policy", "validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        value(&String::from_utf8(out.stdout).unwrap(), "valid"),
        "false"
    );

    fs::write(d.join("k.csv"), "0.5,0.6\n0.5,0.5\n").unwrap();
    assert_eq!(
        blowfish(d, &["channel", "leakage", "k.csv"]).status.code(),
        Some(2)
    );
    assert_eq!(
        blowfish(d, &["channel", "leakage", "missing.csv"])
            .status
            .code(),
        Some(2)
    );
    let nothing: Vec<_> = fs::read_dir(d)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(nothing.is_empty());
}
