use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwise"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn verify_passes_and_reports_every_line() {
    let out = kwise(&["verify"]);
    let stdout = text(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("H n=16 covariance=identity: PASS"));
    assert_eq!(stdout.lines().filter(|l| l.contains(": PASS")).count(), 34);
    assert!(stdout.ends_with("34 checks, 0 failed\n"));
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn verify_detects_a_flipped_g_entry() {
    let out = kwise(&["verify", "--mutate", "gtable-sign"]);
    let stdout = text(&out.stdout);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stdout.contains("H n=16 covariance=identity: FAIL"),
        "{stdout}"
    );
}

#[test]
fn verify_json_summary() {
    let out = kwise(&["verify", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["wall_time_s"].as_f64().unwrap() >= 0.0);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn empty_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "empty.toml", "");
    let out = kwise(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("usage"), "{}", text(&out.stderr));
}

#[test]
fn unknown_kind_and_bad_parameters_fail() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "a.toml", "kind = \"plotting\"\n");
    assert_eq!(kwise(&["run", p.to_str().unwrap()]).status.code(), Some(2));
    let p = write_config(
        dir.path(),
        "b.toml",
        "kind = \"family-verify\"\nns = [32]\n",
    );
    let out = kwise(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out.stderr).contains("power of 4"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn family_verify_h16() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "f.toml",
        "kind = \"family-verify\"\nns = [16]\nseed = 3\n",
    );
    let out = kwise(&["run", p.to_str().unwrap()]);
    assert!(out.status.success());
    let stderr = text(&out.stderr);
    assert!(stderr.contains("covariance=identity: PASS"), "{stderr}");
    let csv = text(&out.stdout);
    assert!(csv.starts_with("n,family,check,value,trials,seed\n"));
    assert!(csv.contains("16,H,covariance=identity,0,0,3\n"));
    assert!(csv.contains("# seed=3\n"));
}

#[test]
fn matrix_check_n8() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "m.toml",
        "kind = \"matrix-check\"\nns = [8]\ntrials = 100\n",
    );
    let out = kwise(&["run", p.to_str().unwrap(), "--json"]);
    assert!(out.status.success());
    let rows = text(&out.stdout);
    let row = data_rows(&rows)[1];
    assert!(row.starts_with("8,3,24,24,"), "{row}");
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    let names: Vec<&str> = summary["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"n=8 reference matrix"));
    assert_eq!(summary["pass"], true);
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "w.toml",
        "kind = \"walk-scaling\"\nns = [16, 64, 256]\ntrials = 200\n[assert]\nmax_spread = 0.5\n",
    );
    let out = kwise(&["run", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("FAIL"));
}

#[test]
fn csv_is_identical_across_worker_counts_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let body = "kind = \"stream-track\"\nms = [64, 256]\nstreams = [\"uniform-random\", \"dyadic-bursts\"]\norder = 4\ntrials = 300\nseed = 21\n[family]\nkind = \"polynomial-kwise\"\nk = 4\n";
    let p = write_config(dir.path(), "s.toml", body);
    let mut outputs = Vec::new();
    for (workers, name) in [("1", "a.csv"), ("4", "b.csv"), ("4", "c.csv")] {
        let dest = dir.path().join(name);
        let out = kwise(&[
            "run",
            p.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            dest.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", text(&out.stderr));
        outputs.push(std::fs::read(dest).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let csv = text(&outputs[0]);
    for row in data_rows(&csv).iter().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 12);
        assert_eq!(cols[10], "300");
        assert_eq!(cols[11], "21");
    }
}

#[test]
fn flags_override_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "w.toml",
        "kind = \"walk-scaling\"\nns = [16]\ntrials = 100\nseed = 1\n",
    );
    let out = kwise(&["run", p.to_str().unwrap(), "--trials", "150", "--seed", "8"]);
    assert!(out.status.success());
    let csv = text(&out.stdout);
    let row = data_rows(&csv)[1];
    assert!(row.ends_with(",150,8"), "{row}");
    assert!(csv.contains("# seed=8"));
}

#[test]
fn dump_matrix() {
    let out = kwise(&["dump-matrix", "--n", "8"]);
    assert!(out.status.success());
    let csv = text(&out.stdout);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "i,j,value");
    assert_eq!(lines.len(), 65);
    assert!(lines.contains(&"1,1,3") && lines.contains(&"1,2,2") && lines.contains(&"4,5,0"));
    assert_eq!(kwise(&["dump-matrix", "--n", "128"]).status.code(), Some(2));
    assert_eq!(kwise(&["dump-matrix", "--n", "6"]).status.code(), Some(2));
}

#[test]
fn dump_net_from_generator_and_file() {
    let out = kwise(&["dump-net", "--stream", "identity", "--m", "16"]);
    assert!(out.status.success());
    let generated = text(&out.stdout);
    assert!(
        generated.starts_with("r,s,time,parent_s\n0,0,0,\n1,0,0,0\n1,1,9,0\n"),
        "{generated}"
    );

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("stream.txt");
    std::fs::write(
        &file,
        (1..=16).map(|i| format!("{i}\n")).collect::<String>(),
    )
    .unwrap();
    let out = kwise(&["dump-net", "--stream", file.to_str().unwrap(), "--n", "16"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout), generated);

    assert_eq!(
        kwise(&["dump-net", "--stream", "no-such-stream"])
            .status
            .code(),
        Some(2)
    );
}
