//! Independent oracles: finite differences of the exact fields and dense
//! linear algebra on tiny meshes.
use std::sync::Arc;

use cosserat_mfe::assembly::{DiscreteProblem, Method};
use cosserat_mfe::cosserat_core::MaterialModel;
use cosserat_mfe::manufactured::{ManufacturedSolution, SolutionCase};
use cosserat_mfe::mesh::Mesh;
use cosserat_mfe::oracles;
use cosserat_mfe::solver::{solve_direct, SolverOptions};

fn main() {
    let material = MaterialModel::default();
    let sol = ManufacturedSolution::new(3, SolutionCase::Smooth, material.clone());
    for step in [4e-4, 2e-4, 1e-4] {
        let d = oracles::fd_discrepancy(&sol, &[0.3, 0.55, 0.7], step).expect("step in range");
        println!("finite differences at step {step:.0e}: max discrepancy {d:.2e}");
    }
    let sol2 = ManufacturedSolution::new(2, SolutionCase::Smooth, material.clone());
    let mesh = Arc::new(Mesh::structured(2, 2).expect("valid mesh"));
    for m in Method::ALL {
        let p = DiscreteProblem::new(mesh.clone(), m, 0, material.clone()).expect("valid spaces");
        let sys = p.assemble(&|x| sol2.load(x));
        let (dp, du) = oracles::dense_small_system(&sys).expect("nonsingular");
        let s = solve_direct(&sys, &SolverOptions::default()).expect("direct solve");
        let diff = dp.iter().chain(&du).zip(s.p.iter().chain(&s.u)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let beta = oracles::dense_infsup(&p).expect("small problem");
        let (plain, _) = oracles::dense_kernel_coercivity(&p).expect("small problem");
        println!("{m:7} dense vs sparse {diff:.1e}, beta_h {beta:.4}, kernel coercivity {plain:.4}");
    }
}
