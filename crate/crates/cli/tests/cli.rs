use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cdpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdpp")).args(args).output().expect("spawn cdpp")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, experiment: &str, config: &str, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", experiment, "--config", config, "--out", out];
    args.extend_from_slice(extra);
    cdpp(&args)
}

#[test]
fn list_presets_is_alphabetical_and_complete() {
    let o = cdpp(&["list-presets"]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    let ids =
        ["bergman-decay", "clt-check", "mobius-identities", "mt-check", "sampler-agreement", "szego-table", "tail-check", "variance-table"];
    let mut last = 0;
    for id in ids {
        let at = s.find(&format!("  {id} ")).unwrap_or_else(|| panic!("{id} missing"));
        assert!(at > last);
        last = at;
    }
    assert!(s.contains("cos-theta"));
    assert!(s.contains("harmonic:L,SEED"));
}

#[test]
fn identical_config_and_seed_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "clt.conf", "phi = cos-theta\nn = 6\nreplicas = 300\nmgf_ts = 0.5, 1\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = run_in(d, "clt-check", &cfg, &["--seed", "42"]);
        assert!(o.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["clt-check.csv", "clt-check-mgf.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = tmp.path().join("c");
    run_in(&c, "clt-check", &cfg, &["--seed", "43"]);
    assert_ne!(fs::read(a.join("clt-check.csv")).unwrap(), fs::read(c.join("clt-check.csv")).unwrap());
}

#[test]
fn replicas_override_reaches_the_sampler() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.conf", "n = 4\nz3_samples = 1000\nz3_tolerance = 0.5\n");
    let o = run_in(tmp.path(), "sampler-agreement", &cfg, &["--replicas", "50"]);
    assert!(o.status.code().is_some_and(|c| c <= 1));
    let csv = fs::read_to_string(tmp.path().join("sampler-agreement.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 50);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("sampler-agreement.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["replicas"], "50");
}

#[test]
fn mt_check_on_zero_function_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "mt.conf", "phi = zero\nns = 2, 4\namplitudes = 1, 3\n");
    let o = run_in(tmp.path(), "mt-check", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(tmp.path().join("mt-check.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# canonical-dpp mt-check schema v1"));
    assert_eq!(lines.next(), Some("n,phi,amplitude,log_mgf,bound,gap,shift_defect"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn szego_table_rows_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sz.conf", "experiment = szego-table\nns = 4, 16\ntolerance = 0.05\n");
    let o = run_in(tmp.path(), "szego-table", &cfg, &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("szego-table.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(3).unwrap().split(',').collect();
    assert_eq!(row[0], "16");
    // 17 significant digits
    assert_eq!(row[2], "3.3333333333333331e-1");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("szego-table.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["config"]["phi"], "cos-theta");
}

#[test]
fn failing_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sz.conf", "ns = 4, 8\ntolerance = 1e-6\n");
    let o = run_in(tmp.path(), "szego-table", &cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn numerical_failure_exits_three_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sz.conf", "ns = 16\nresolution = 3\n");
    let o = run_in(tmp.path(), "szego-table", &cfg, &[]);
    assert_eq!(o.status.code(), Some(3));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("szego-table.json")).unwrap()).unwrap();
    assert!(json["error"].as_str().unwrap().contains("resolution"));
    assert_eq!(json["passed"], false);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let typo = write_config(tmp.path(), "t.conf", "nss = 4\n");
    assert_eq!(run_in(tmp.path(), "szego-table", &typo, &[]).status.code(), Some(2));
    let ok = write_config(tmp.path(), "ok.conf", "ns = 4\n");
    assert_eq!(run_in(tmp.path(), "no-such-experiment", &ok, &[]).status.code(), Some(2));
    assert_eq!(run_in(tmp.path(), "szego-table", &ok, &["--replicas", "10"]).status.code(), Some(2));
    let wrong = write_config(tmp.path(), "w.conf", "experiment = tail-check\n");
    assert_eq!(run_in(tmp.path(), "szego-table", &wrong, &[]).status.code(), Some(2));
    let bad = write_config(tmp.path(), "b.conf", "phi = no-such-preset\n");
    assert_eq!(run_in(tmp.path(), "szego-table", &bad, &[]).status.code(), Some(2));
    let empty = write_config(tmp.path(), "e.conf", "ns =\n");
    assert_eq!(run_in(tmp.path(), "szego-table", &empty, &[]).status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let text = fs::read_to_string(&p).unwrap();
        let id = p.file_stem().unwrap().to_str().unwrap();
        assert!(text.contains(&format!("experiment = {id}")), "{}", p.display());
        n += 1;
    }
    assert_eq!(n, 8);
}
