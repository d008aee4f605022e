//! Evaluate the manufactured solutions and the load computed from them.
use cosserat_mfe::cosserat_core::{strong_residual, MaterialModel};
use cosserat_mfe::manufactured::{ManufacturedSolution, SolutionCase};

fn main() {
    let material = MaterialModel::default();
    for dim in [2, 3] {
        for case in [SolutionCase::Smooth, SolutionCase::DivFree] {
            let sol = ManufacturedSolution::new(dim, case, material.clone());
            let f = sol.eval(&[0.5, 0.5, 0.5]);
            let res = strong_residual(&material, &f, dim);
            let (fu, fr) = sol.load(&[0.3, 0.6, 0.2]);
            println!("{dim}D {case:?}");
            println!("  u(1/2) = {:?}, r(1/2) = {:?}", f.u.as_slice(), f.r.as_slice());
            println!("  div u = {:.2e}", f.grad_u.trace());
            println!(
                "  constitutive residuals {:.1e}, {:.1e}",
                res.r_a.amax(),
                res.r_b.amax()
            );
            println!("  load at (0.3, 0.6, 0.2): f_u = {:?}, f_r = {:?}", fu.as_slice(), fr.as_slice());
        }
    }
}
