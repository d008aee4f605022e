//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not turned into a failing exit status;
//! the process only fails if a criterion cannot be evaluated at all.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use cosserat_mfe::analysis::{rate, Rate};
use cosserat_mfe::assembly::{DiscreteProblem, Family, Method};
use cosserat_mfe::cosserat_core::{LengthField, MaterialModel};
use cosserat_mfe::experiments::{group_series, run_experiment, CsvRow, ExperimentConfig, ExperimentReport};
use cosserat_mfe::manufactured::{ManufacturedSolution, SolutionCase};
use cosserat_mfe::mesh::Mesh;
use cosserat_mfe::properties::{self, relative_distance, Outcome};
use cosserat_mfe::solver::{solve_direct, solve_minres, BlockPreconditioner, SolverKind, SolverOptions};

struct Tally {
    passed: usize,
    failed: Vec<usize>,
}

impl Tally {
    fn report(&mut self, id: usize, title: &str, ok: bool, detail: &str, started: Instant) {
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id);
        }
        println!(
            "{} criterion {id:2} {title} ({:.0}s): {detail}",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }

    fn property(&mut self, id: usize, title: &str, run: fn() -> Outcome) {
        let t = Instant::now();
        let o = run();
        self.report(id, title, o.passed, &o.detail, t);
    }
}

fn out_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn study(body: &str) -> ExperimentReport {
    let text = format!("{body}\nrecord_timings = true\noutput_dir = {:?}", out_dir());
    let exp = ExperimentConfig::from_toml(&text).and_then(|c| c.validate()).expect("acceptance config is valid");
    run_experiment(&exp).unwrap_or_else(|e| panic!("acceptance study failed: {e}"))
}

/// Rate between the two finest levels of a derived error.
fn final_rate(rows: &[CsvRow], err: impl Fn(&CsvRow) -> f64) -> Rate {
    let [a, b] = &rows[rows.len() - 2..] else { unreachable!("at least two levels") };
    rate(err(a), err(b), a.h, b.h)
}

fn fmt_rate(r: Rate) -> String {
    r.to_string()
}

/// Series of one study matching `family` and, if given, `ell`.
fn series<'a>(rows: &'a [Vec<CsvRow>], family: &str, ell: Option<&str>) -> Vec<&'a Vec<CsvRow>> {
    rows.iter().filter(|s| s[0].family == family && ell.is_none_or(|l| s[0].ell == l)).collect()
}

fn main() {
    let mut tally = Tally { passed: 0, failed: Vec::new() };
    let total = Instant::now();

    tally.property(1, "operator identities", properties::operator_identities);
    tally.property(2, "material round trip", properties::material_roundtrip);
    tally.property(3, "strong-coupling inclusion", properties::strong_coupling_inclusion);
    tally.property(4, "commuting diagram", properties::commuting_diagram);
    tally.property(5, "rigid-motion factorization", properties::phi_factorization);
    tally.property(6, "weighted inverse-estimate constants", properties::weighted_inverse_constants);
    tally.property(7, "discrete inf-sup robustness", properties::infsup_robustness);

    // criteria 8 to 10 share one sweep per k
    let t = Instant::now();
    let ells = ["1", "0.01", "0.0001"];
    let conv: Vec<(usize, Vec<Vec<CsvRow>>)> = (0..2)
        .map(|k| {
            let rep = study(&format!("experiment = \"convergence\"\nk = {k}\nell = [1.0, 1e-2, 1e-4]"));
            (k, group_series(&rep.rows).into_values().collect())
        })
        .collect();
    let sweep_time = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, rows) in &conv {
        for m in Method::ALL {
            for s in series(rows, m.name(), Some("1")) {
                let r = final_rate(s, |r| r.err_composite);
                ok &= r.at_least(*k as f64 + 0.9);
                detail.push(format!("k={k} {m} {}", fmt_rate(r)));
            }
        }
    }
    tally.report(8, "a priori rates at ell = 1", ok, &format!("composite rates {} (sweep {sweep_time:.0}s)", detail.join(", ")), t);

    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut inflation = Vec::new();
    for (k, rows) in &conv {
        for m in Method::ALL {
            for ell in ells {
                let Some(s) = series(rows, m.name(), Some(ell)).pop() else { continue };
                let r = final_rate(s, |r| r.err_composite);
                let enforced = m != Method::SC_RT || ell == "1";
                if enforced {
                    ok &= r.at_least(*k as f64 + 0.9);
                }
                detail.push(format!("k={k} {m} ell={ell} {}{}", fmt_rate(r), if enforced { "" } else { " (reported)" }));
            }
            if m == Method::SC_RT {
                let coarse = |ell: &str| series(rows, m.name(), Some(ell)).pop().map(|s| s[0].err_composite);
                if let (Some(a), Some(b)) = (coarse("1"), coarse("0.0001")) {
                    inflation.push(format!("k={k} coarsest-level SC-RT error x{:.1} at ell=1e-4", b / a));
                }
            }
        }
    }
    tally.report(9, "robustness in ell", ok, &format!("{}; {}", detail.join(", "), inflation.join(", ")), t);

    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    let mut soft = Vec::new();
    for (k, rows) in &conv {
        let target = *k as f64 + 1.7;
        for ell in ells {
            for m in [Method::SC_BDM, Method::WC_RT, Method::WC_BDM] {
                if let Some(s) = series(rows, m.name(), Some(ell)).pop() {
                    let r = final_rate(s, |r| r.err_improved);
                    ok &= r.at_least(target);
                    detail.push(format!("k={k} {m} ell={ell} {}", fmt_rate(r)));
                }
            }
        }
        if let Some(s) = series(rows, "SC-RT", Some("1")).pop() {
            // the couple-stress part of this norm has no proof behind it
            let proved = final_rate(s, |r| r.err_r_l2 + r.err_u_proj);
            let omega = final_rate(s, |r| r.err_omega_l2);
            ok &= proved.at_least(target);
            detail.push(format!("k={k} SC-RT ell=1 r+u {} omega {}", fmt_rate(proved), fmt_rate(omega)));
            if !omega.at_least(target) {
                soft.push(format!("soft-fail: k={k} SC-RT omega rate {}", fmt_rate(omega)));
            }
        }
    }
    let soft = if soft.is_empty() { String::new() } else { format!("; {}", soft.join(", ")) };
    tally.report(10, "improved rates", ok, &format!("{}{soft}", detail.join(", ")), t);

    let t = Instant::now();
    let mut ok = true;
    let mut spread_detail = Vec::new();
    let mut rate_detail = Vec::new();
    for k in 0..2 {
        let rep = study(&format!("experiment = \"incompressible\"\nk = {k}\nlambda_sigma = [1.0, 1e2, 1e4]"));
        let all: Vec<Vec<CsvRow>> = group_series(&rep.rows).into_values().collect();
        for m in Method::ALL {
            let fam: Vec<&Vec<CsvRow>> = series(&all, m.name(), None);
            let mut worst: f64 = 0.0;
            for level in 0..fam[0].len() {
                let e: Vec<f64> = fam.iter().map(|s| s[level].err_composite).collect();
                let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = e.iter().copied().fold(0.0, f64::max);
                worst = worst.max((hi - lo) / lo);
            }
            ok &= worst <= 0.1;
            spread_detail.push(format!("k={k} {m} {:.1}%", 100.0 * worst));
            for s in fam {
                let r = final_rate(s, |r| r.err_composite);
                ok &= r.at_least(k as f64 + 0.9);
                rate_detail.push(format!("k={k} {m} lambda={} {}", s[0].lambda_sigma, fmt_rate(r)));
            }
        }
    }
    tally.report(
        11,
        "incompressibility robustness",
        ok,
        &format!("largest spread across lambda_sigma {}; rates {}", spread_detail.join(", "), rate_detail.join(", ")),
        t,
    );

    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in 0..2 {
        let rep = study(&format!("experiment = \"degenerate\"\nk = {k}"));
        for s in group_series(&rep.rows).values() {
            let r = final_rate(s, |r| r.err_composite);
            ok &= r.at_least(k as f64 + 0.9);
            detail.push(format!("k={k} {} rate {}", s[0].family, fmt_rate(r)));
        }
        for (key, chk) in &rep.elastic_checks {
            ok &= chk.elastic_max <= 1e-10 * chk.global_max;
            if chk.n == 48 {
                detail.push(format!("k={k} {} n=48 max|omega~_h| elastic/global {:.2e}", key.family, chk.ratio()));
            }
        }
    }
    tally.report(12, "degenerate composite material", ok, &detail.join(", "), t);

    let t = Instant::now();
    let rep = study("experiment = \"convergence\"\ndim = 3\nk = 0\nell = 1.0\nfamilies = [\"SC-BDM\", \"WC-BDM\"]\nmesh_levels = [2, 4, 8]\nsolver = \"minres\"");
    let mut ok = true;
    let mut detail = Vec::new();
    for s in group_series(&rep.rows).values() {
        let r = final_rate(s, |r| r.err_composite);
        ok &= r.at_least(0.8);
        let its: Vec<String> = s.iter().map(|r| r.solver_iters.to_string()).collect();
        detail.push(format!("{} rate {} (MINRES iterations {})", s[0].family, fmt_rate(r), its.join("/")));
    }
    tally.report(13, "3D sanity tier", ok, &detail.join(", "), t);

    tally.property(14, "local momentum balance", properties::momentum_balance);

    let t = Instant::now();
    let (ok, detail) = solver_agreement();
    tally.report(15, "solver agreement", ok, &detail, t);

    println!(
        "{} passed, {} failed {:?} in {:.0}s; tables in {}",
        tally.passed,
        tally.failed.len(),
        tally.failed,
        total.elapsed().as_secs_f64(),
        out_dir().display()
    );
}

/// MINRES against the direct solver on the k = 0 sweep of criterion 9, and
/// the spread of iteration counts per family over `(n, ℓ)`; counts are
/// listed ℓ-major, `n ∈ {4, 8, 16}`.
fn solver_agreement() -> (bool, String) {
    let mut ok = true;
    let mut worst_dist: f64 = 0.0;
    let mut worst_at = String::new();
    let mut detail = Vec::new();
    for m in Method::ALL {
        let mut its = Vec::new();
        for ell in [1.0, 1e-2, 1e-4] {
            for n in [4, 8, 16] {
                let material = MaterialModel::with(1.0, LengthField::Constant(ell));
                let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, material.clone());
                let mesh = Arc::new(Mesh::structured(2, n).expect("valid mesh"));
                let p = DiscreteProblem::new(mesh, m, 0, material).expect("valid spaces");
                let (sys, pp) = p.assemble_with_preconditioner(&|x| sol.load(x));
                let direct = solve_direct(&sys, &SolverOptions::default());
                let iterative = BlockPreconditioner::new(pp).and_then(|pc| {
                    solve_minres(&sys, &pc, &SolverOptions { kind: SolverKind::Minres, ..Default::default() })
                });
                match (direct, iterative) {
                    (Ok(d), Ok(i)) => {
                        let dist = relative_distance(&i, &d);
                        if dist > worst_dist {
                            worst_dist = dist;
                            worst_at = format!("{m} ell={ell} n={n}");
                        }
                        ok &= dist <= 1e-8;
                        its.push(i.report.iterations);
                    }
                    (d, i) => {
                        ok = false;
                        detail.push(format!("{m} ell={ell} n={n} failed: {:?} / {:?}", d.err(), i.err()));
                    }
                }
            }
        }
        if let (Some(lo), Some(hi)) = (its.iter().min(), its.iter().max()) {
            // the strongly coupled preconditioner carries ℓ⁻² and is not
            // expected to be robust; its counts are reported
            let enforced = m.family == Family::WC;
            if enforced {
                ok &= *hi as f64 <= 2.0 * *lo as f64;
            }
            let counts: Vec<String> = its.iter().map(|i| i.to_string()).collect();
            detail.push(format!(
                "{m} iterations {lo}..{hi} [{}]{}",
                counts.join(" "),
                if enforced { "" } else { " (reported)" }
            ));
        }
    }
    (ok, format!("max relative distance {worst_dist:.1e} ({worst_at}); {}", detail.join(", ")))
}
