use std::fs;
use std::path::Path;
use std::process::Command;

fn lvlb(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lvlb")).args(args).env("LVLB_THREADS", "2").output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn free_decay_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "free.json", "{\n  \"scenario\": \"free-decay\",\n  \"output_dir\": \"out\"\n}\n");
    let out = lvlb(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let art = dir.path().join("out");
    let csv = fs::read_to_string(art.join("free-decay.csv")).unwrap();
    assert!(csv.starts_with("time,value,norm_id"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(art.join("free-decay.json")).unwrap()).unwrap();
    let slope = report["checks"][0]["measured"].as_f64().unwrap();
    assert!((slope + 1.5).abs() <= 0.15, "slope {slope}");
    // The embedded effective config reruns as is.
    assert_eq!(report["config"]["grid"]["x_dims"], 3);

    let rep = lvlb(&["report", art.to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(0));
    let text = String::from_utf8(rep.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("L²_xL¹_v slope |")).unwrap();
    assert!(row.contains("| target −1.5 | tol ±0.15 | PASS"), "{row}");
    assert!(text.contains("maxwellian-residual"));
    assert!(fs::read_dir(&art).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "dat")));
    assert!(art.join("summary.txt").exists());
}

#[test]
fn delta_outside_range_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        "{\n  \"scenario\": \"near-vacuum-run\",\n  \"weights\": { \"d0\": 1.0,\n    \"delta\": 0.2 }\n}\n",
    );
    for cmd in ["run", "validate"] {
        let out = lvlb(&[cmd, &cfg]);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains("line 4") && err.contains("delta"), "{err}");
    }
    let out = lvlb(&["run", &write_config(dir.path(), "syntax.json", "{\"scenario\": \"free-decay\",,}")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inequality_suite_json_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let body = |out: &str| {
        format!("{{\"scenario\": \"inequality-suite\", \"seed\": 11, \"families\": 2, \"null_samples\": 20000, \"output_dir\": \"{out}\"}}")
    };
    let a = write_config(dir.path(), "a.json", &body("a"));
    let b = write_config(dir.path(), "b.json", &body("b"));
    assert!(lvlb(&["run", &a]).status.code().is_some());
    let b_out = Command::new(env!("CARGO_BIN_EXE_lvlb"))
        .args(["run", &b])
        .env("LVLB_THREADS", "1")
        .output()
        .unwrap();
    assert!(b_out.status.code().is_some());
    let read = |d: &str| fs::read(dir.path().join(d).join("inequality-suite.json")).unwrap();
    let (ja, jb) = (read("a"), read("b"));
    // Only the output directory differs between the two configs.
    let strip = |bytes: Vec<u8>| String::from_utf8(bytes).unwrap().replace("\"output_dir\": \"a\"", "\"output_dir\": \"b\"");
    assert_eq!(strip(ja), String::from_utf8(jb).unwrap());
}

#[test]
fn report_on_empty_dir_skips_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = lvlb(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.contains(" | ")).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|l| l.ends_with("SKIPPED")));
}

#[test]
fn corrupted_checkpoint_is_named() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("state.lvlb"), b"NOTLVLB and then some bytes").unwrap();
    let out = lvlb(&["report", dir.path().to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("integrity error") && text.contains("state.lvlb") && text.contains("bad magic"), "{text}");
}
