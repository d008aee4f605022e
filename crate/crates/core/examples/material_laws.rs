//! The asymmetry operator, the compliance laws and the rigid-motion map.
use cosserat_mfe::cosserat_core::{asym, asym_adjoint, LengthField, MaterialModel};
use cosserat_mfe::properties::phi_factorization_defect;
use nalgebra::{Matrix3, Vector3};

fn main() {
    let tau = Matrix3::new(1.0, 0.2, -0.3, 0.5, 2.0, 0.1, 0.4, -0.6, 0.7);
    let v = Vector3::new(0.3, -1.2, 0.8);
    println!("S S* v - 2v = {:.1e}", (asym(&asym_adjoint(&v, 3), 3) - 2.0 * v).amax());
    let s_star_s = asym_adjoint(&asym(&tau, 3), 3);
    println!("S*S tau - (tau - tau^T) = {:.1e}", (s_star_s - (tau - tau.transpose())).amax());
    for lambda in [0.0, 1.0, 1e4] {
        let m = MaterialModel::with(lambda, LengthField::Constant(1.0));
        let back = m.apply_a_sigma(&m.apply_a_sigma_inv(&tau, 3), 3);
        let (lo, hi) = m.a_sigma_bounds(3);
        println!("lambda_sigma = {lambda:>7}: round trip {:.1e}, spectrum of A_sigma in [{lo:.3e}, {hi:.3e}]", (back - tau).amax());
    }
    let kinked = MaterialModel::with(1.0, LengthField::Kinked);
    for x in [[0.2, 0.2, 0.2], [0.4, 0.1, 0.1], [0.9, 0.5, 0.5]] {
        println!("ell{x:?} = {:.3}", kinked.ell.eval(&x));
    }
    println!("pointwise Phi factorization defect: {:.1e}", phi_factorization_defect(200, 3));
}
