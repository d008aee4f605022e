//! MINRES with the block-diagonal preconditioner against the direct solver,
//! and iteration counts across meshes and length scales.
use std::sync::Arc;

use cosserat_mfe::assembly::{DiscreteProblem, Method};
use cosserat_mfe::cosserat_core::{LengthField, MaterialModel};
use cosserat_mfe::manufactured::{ManufacturedSolution, SolutionCase};
use cosserat_mfe::mesh::Mesh;
use cosserat_mfe::properties::relative_distance;
use cosserat_mfe::solver::{solve_direct, solve_minres, BlockPreconditioner, SolverKind, SolverOptions};

fn main() {
    for m in [Method::WC_RT, Method::WC_BDM, Method::SC_BDM] {
        for ell in [1.0, 1e-2, 1e-4] {
            let mut line = format!("{m:7} ell={ell:<7}");
            for n in [4, 8, 16] {
                let material = MaterialModel::with(1.0, LengthField::Constant(ell));
                let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, material.clone());
                let mesh = Arc::new(Mesh::structured(2, n).expect("valid mesh"));
                let p = DiscreteProblem::new(mesh, m, 0, material).expect("valid spaces");
                let (sys, pp) = p.assemble_with_preconditioner(&|x| sol.load(x));
                let pc = BlockPreconditioner::new(pp).expect("preconditioner is SPD");
                let it = solve_minres(&sys, &pc, &SolverOptions { kind: SolverKind::Minres, ..Default::default() })
                    .expect("MINRES converges");
                let direct = solve_direct(&sys, &SolverOptions::default()).expect("direct solve");
                line += &format!("  n={n}: {:3} its, distance {:.1e}", it.report.iterations, relative_distance(&it, &direct));
            }
            println!("{line}");
        }
    }
}
