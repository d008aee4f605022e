//! 3D runs with MINRES on the smooth solution. The default ladder is
//! `n ∈ {2, 4}`; pass `8` as an argument to add the finest level (a few
//! GB of memory and about two minutes per family).
use cosserat_mfe::experiments::{format_rates, run_experiment, series_rates, ExperimentConfig};

fn main() {
    let mut levels = vec![2, 4];
    levels.extend(std::env::args().skip(1).filter_map(|s| s.parse::<usize>().ok()));
    let dir = std::env::temp_dir().join("cosserat-mfe-3d");
    let cfg = format!(
        "experiment = \"convergence\"\ndim = 3\nell = 1.0\nfamilies = [\"SC-BDM\", \"WC-BDM\"]\nmesh_levels = {levels:?}\noutput_dir = {dir:?}"
    );
    let exp = ExperimentConfig::from_toml(&cfg).and_then(|c| c.validate()).expect("valid config");
    let report = run_experiment(&exp).expect("all solves succeed");
    for r in &report.rows {
        println!(
            "{:7} n={} dofs={:8} composite {:.3e} MINRES {} its {:.1}s",
            r.family, r.n, r.n_dofs, r.err_composite, r.solver_iters, r.solve_seconds
        );
    }
    print!("{}", format_rates(&series_rates(&report.rows)));
}
