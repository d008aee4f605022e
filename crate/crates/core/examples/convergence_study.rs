//! Convergence of the four families on the smooth 2D solution for a sweep
//! of constant length scales. Pass `1` as the first argument for k = 1.
use cosserat_mfe::experiments::{format_rates, run_experiment, ExperimentConfig};

fn main() {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let dir = std::env::temp_dir().join("cosserat-mfe-convergence");
    let cfg = format!(
        "experiment = \"convergence\"\nk = {k}\nmesh_levels = [4, 8, 16, 32]\nell = [1.0, 1e-2, 1e-4]\nfamilies = [\"SC-BDM\", \"WC-RT\", \"WC-BDM\"]\noutput_dir = {:?}",
        dir
    );
    let exp = ExperimentConfig::from_toml(&cfg).and_then(|c| c.validate()).expect("valid config");
    let report = run_experiment(&exp).expect("all solves succeed");
    for r in &report.rows {
        println!(
            "{:7} ell={:<7} n={:3} dofs={:7} composite {:.3e} improved {:.3e}",
            r.family, r.ell, r.n, r.n_dofs, r.err_composite, r.err_improved
        );
    }
    print!("{}", format_rates(&cosserat_mfe::experiments::series_rates(&report.rows)));
    println!("table: {}\nplot: {}", report.csv_path.display(), report.plot_path.display());
}
