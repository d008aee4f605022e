use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cosserat-mfe"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("{body}\noutput_dir = {:?}\n", dir.join("out"))).unwrap();
    path
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (i, body) in [
        "experiment = \"degenerate\"\nfamilies = [\"SC-RT\"]",
        "experiment = \"degenerate\"\nmesh_levels = [4, 8]",
        "experiment = \"convergence\"\nfamilies = [\"SC-BDM\"]\nell = 0.0",
        "experiment = \"convergence\"\ndim = 5",
        "not toml at all [",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("bad{i}.toml"), body);
        let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = bin().args(["run", "--config", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_and_rates_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let body = "experiment = \"convergence\"\nfamilies = [\"WC-RT\", \"SC-BDM\"]\nell = 1.0\nmesh_levels = [2, 4, 8]\nrecord_timings = false\njobs = 1";
    let cfg = write_config(dir.path(), "run.toml", body);
    let csv = dir.path().join("out").join("convergence_d2_k0.csv");
    let mut tables = Vec::new();
    for _ in 0..2 {
        let out = bin().args(["run", "--config"]).arg(&cfg).env("RUST_LOG", "warn").output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        tables.push(fs::read(&csv).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    let text = String::from_utf8(tables[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3);
    assert!(text.lines().next().unwrap().ends_with("err_composite,err_improved,solver_iters,solve_seconds"));
    assert!(dir.path().join("out").join("convergence_d2_k0.svg").exists());

    let out = bin().args(["rates", "--csv"]).arg(&csv).output().unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s.lines().count(), 2);
    assert!(s.contains("WC-RT") && s.contains("SC-BDM"));
}

#[test]
fn parallel_jobs_keep_row_order() {
    let dir = tempfile::tempdir().unwrap();
    let body = "experiment = \"incompressible\"\nfamilies = [\"WC-BDM\"]\nmesh_levels = [2, 4]\nrecord_timings = false";
    let cfg = write_config(dir.path(), "par.toml", body);
    let csv = dir.path().join("out").join("incompressible_d2_k0.csv");
    let run = |jobs: &str| {
        let out = bin().args(["run", "--jobs", jobs, "--config"]).arg(&cfg).env("RUST_LOG", "warn").output().unwrap();
        assert!(out.status.success());
        fs::read_to_string(&csv).unwrap()
    };
    let serial = run("1");
    let parallel = run("3");
    let key = |s: &str| s.lines().map(|l| l.split(',').take(9).collect::<Vec<_>>().join(",")).collect::<Vec<_>>();
    assert_eq!(key(&serial), key(&parallel));
}

#[test]
fn missing_csv_is_reported() {
    let out = bin().args(["rates", "--csv", "/nonexistent/table.csv"]).output().unwrap();
    assert!(!out.status.success());
}
