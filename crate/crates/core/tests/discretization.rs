use std::sync::Arc;

use cosserat_mfe::analysis::{error_norms, infsup_constant, momentum_balance_defect, ErrorTable};
use cosserat_mfe::assembly::{DiscreteProblem, Method};
use cosserat_mfe::cosserat_core::{LengthField, MaterialModel};
use cosserat_mfe::manufactured::{ManufacturedSolution, SolutionCase};
use cosserat_mfe::mesh::Mesh;
use cosserat_mfe::oracles;
use cosserat_mfe::properties::relative_distance;
use cosserat_mfe::solver::{solve_direct, solve_minres, BlockPreconditioner, SolverKind, SolverOptions};
use proptest::prelude::*;

fn mesh(dim: usize, n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::structured(dim, n).unwrap())
}

#[test]
fn composite_error_converges_at_first_order() {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    for m in Method::ALL {
        let mut t = ErrorTable::default();
        for n in [4, 8, 16] {
            let p = DiscreteProblem::new(mesh(2, n), m, 0, mat.clone()).unwrap();
            let s = solve_direct(&p.assemble(&|x| sol.load(x)), &SolverOptions::default()).unwrap();
            t.push(n, p.mesh.h(), p.n_dofs(), &error_norms(&p, &s.p, &s.u, &|x| sol.eval(x), false));
        }
        assert!(t.final_rate("err_composite").unwrap().at_least(0.9), "{m}");
    }
}

#[test]
fn sc_momentum_balance_holds_elementwise() {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    let p = DiscreteProblem::new(mesh(2, 4), Method::SC_BDM, 0, mat).unwrap();
    let s = solve_direct(&p.assemble(&|x| sol.load(x)), &SolverOptions::default()).unwrap();
    let pf = p.u.l2_project(&|x| sol.load(x).0.into(), 10);
    assert!(momentum_balance_defect(&p, &s.p, &pf) <= 1e-8);
}

#[test]
fn dense_oracle_matches_sparse_direct() {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    for m in Method::ALL {
        let p = DiscreteProblem::new(mesh(2, 2), m, 0, mat.clone()).unwrap();
        let sys = p.assemble(&|x| sol.load(x));
        let (dp, du) = oracles::dense_small_system(&sys).unwrap();
        let s = solve_direct(&sys, &SolverOptions::default()).unwrap();
        let num: f64 = dp.iter().chain(&du).zip(s.p.iter().chain(&s.u)).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = dp.iter().chain(&du).map(|a| a * a).sum();
        assert!((num / den).sqrt() <= 1e-10, "{m}");
    }
}

#[test]
fn infsup_routes_agree() {
    for m in [Method::WC_RT, Method::WC_BDM] {
        for ell in [1.0, 0.0] {
            let p = DiscreteProblem::new(mesh(2, 2), m, 0, MaterialModel::with(1.0, LengthField::Constant(ell))).unwrap();
            let a = infsup_constant(&p).unwrap();
            let b = oracles::dense_infsup(&p).unwrap();
            assert!((a - b).abs() <= 1e-8, "{m} ell={ell}: {a} vs {b}");
        }
    }
}

#[test]
fn minres_agrees_with_direct_in_3d() {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(3, SolutionCase::Smooth, mat.clone());
    let p = DiscreteProblem::new(mesh(3, 2), Method::WC_BDM, 0, mat).unwrap();
    let (sys, pp) = p.assemble_with_preconditioner(&|x| sol.load(x));
    let pc = BlockPreconditioner::new(pp).unwrap();
    let it = solve_minres(&sys, &pc, &SolverOptions { kind: SolverKind::Minres, ..Default::default() }).unwrap();
    let direct = solve_direct(&sys, &SolverOptions::default()).unwrap();
    assert!(relative_distance(&it, &direct) <= 1e-8);
    assert!(it.report.final_relative_residual <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solution_is_linear_in_the_load(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let mat = MaterialModel::default();
        let s1 = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
        let s2 = ManufacturedSolution::new(2, SolutionCase::DivFree, mat.clone());
        let p = DiscreteProblem::new(mesh(2, 2), Method::WC_RT, 0, mat).unwrap();
        let solve = |f: &(dyn Fn(&[f64; 3]) -> _ + Sync)| solve_direct(&p.assemble(f), &SolverOptions::default()).unwrap();
        let x1 = solve(&|x| s1.load(x));
        let x2 = solve(&|x| s2.load(x));
        let xc = solve(&|x| {
            let (u1, r1) = s1.load(x);
            let (u2, r2) = s2.load(x);
            (u1 * a + u2 * b, r1 * a + r2 * b)
        });
        let scale = 1.0 + xc.p.iter().chain(&xc.u).map(|v| v.abs()).fold(0.0, f64::max);
        let worst = xc.p.iter().chain(&xc.u)
            .zip(x1.p.iter().chain(&x1.u).zip(x2.p.iter().chain(&x2.u)))
            .map(|(c, (v1, v2))| (c - a * v1 - b * v2).abs())
            .fold(0.0, f64::max);
        prop_assert!(worst <= 1e-9 * scale);
    }

    #[test]
    fn fd_oracle_agrees_at_random_points(x in prop::array::uniform3(0.05..0.95f64)) {
        let sol = ManufacturedSolution::new(3, SolutionCase::Smooth, MaterialModel::default());
        prop_assert!(oracles::fd_discrepancy(&sol, &x, 1e-4).unwrap() <= 1e-6);
    }
}
