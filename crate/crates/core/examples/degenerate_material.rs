//! A composite material whose length scale vanishes on the corner block
//! `max_i x_i ≤ 1/3`. Only the weakly coupled families apply.
use cosserat_mfe::experiments::{format_rates, run_experiment, series_rates, ExperimentConfig};

fn main() {
    let dir = std::env::temp_dir().join("cosserat-mfe-degenerate");
    let cfg = format!("experiment = \"degenerate\"\nmesh_levels = [6, 12, 24]\noutput_dir = {:?}", dir);
    let exp = ExperimentConfig::from_toml(&cfg).and_then(|c| c.validate()).expect("valid config");
    let report = run_experiment(&exp).expect("all solves succeed");
    print!("{}", format_rates(&series_rates(&report.rows)));
    for (key, chk) in &report.elastic_checks {
        println!(
            "{} n={:2}: max |omega~_h| on the elastic block {:.2e} of global {:.2e}",
            key.family, chk.n, chk.elastic_max, chk.global_max
        );
    }
}
