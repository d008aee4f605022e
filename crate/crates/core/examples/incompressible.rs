//! Divergence-free solution with growing `λ_σ`: errors stay put.
use cosserat_mfe::experiments::{group_series, run_experiment, ExperimentConfig};

fn main() {
    let dir = std::env::temp_dir().join("cosserat-mfe-incompressible");
    let cfg = format!(
        "experiment = \"incompressible\"\nmesh_levels = [4, 8, 16]\nlambda_sigma = [1.0, 1e2, 1e4]\noutput_dir = {:?}",
        dir
    );
    let exp = ExperimentConfig::from_toml(&cfg).and_then(|c| c.validate()).expect("valid config");
    let report = run_experiment(&exp).expect("all solves succeed");
    for (key, rows) in group_series(&report.rows) {
        let errs: Vec<String> = rows.iter().map(|r| format!("{:.4e}", r.err_composite)).collect();
        println!("{} lambda_sigma={:>6}: composite {}", key.family, key.lambda_sigma, errs.join(" "));
    }
}
