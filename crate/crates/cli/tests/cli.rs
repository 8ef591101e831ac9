use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cvb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_GMM: &str = "experiment = \"gmm\"
[seeds]
count = 3
base = 42
[gmm]
k = 4
n = 30
radii = [2.0, 4.0]
cvb_anchor_subsample = 5
[output]
traces = true
";

#[test]
fn bivariate_run_writes_forty_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = cvb(&["--experiment", "bivariate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("runs.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# cvb runs v1 experiment=bivariate"));
    assert_eq!(
        lines[1],
        "label,rho_init,kl_init,kl_final,iterations,converged,truncated,var1_final,var2_final,rho_final"
    );
    assert_eq!(lines.len(), 2 + 40);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "bivariate");
    assert_eq!(summary["results"]["cvb_points"], 39);
}

#[test]
fn gmm_output_is_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_GMM);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let o = cvb(&["--config", &cfg, "--out", dir.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n.to_string_lossy().starts_with("trace_")));
    for n in &names {
        assert!(
            fs::read(a.join(n)).unwrap() == fs::read(b.join(n)).unwrap(),
            "{n:?} differs"
        );
    }
    let csv = fs::read_to_string(a.join("runs.csv")).unwrap();
    // 2 radii × 3 seeds × 7 algorithms.
    assert_eq!(csv.lines().count(), 2 + 42);
    let first: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(&first[..3], &["0", "2", "kmeans"]);
}

#[test]
fn gmm_with_zero_seeds_is_rejected_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "experiment = \"gmm\"\n[seeds]\ncount = 0\n");
    let o = cvb(&["--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seeds.count"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn malformed_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[stopping]\nepsilon = \"small\"\n");
    let o = cvb(&["--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
}

#[test]
fn unwritable_output_is_diagnosed() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = cvb(&[
        "--experiment",
        "bivariate",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("output directory"));
}

#[test]
fn oracle_check_reports_every_algorithm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "experiment = \"oracle-check\"\n[seeds]\ncount = 4\n");
    let out = tmp.path().join("o");
    let o = cvb(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let groups = summary["results"].as_array().unwrap();
    assert_eq!(groups.len(), 7);
    assert!(groups.iter().all(|g| g["instances"] == 4));
}
