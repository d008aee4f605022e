use approx::assert_abs_diff_eq;
use cosserat_mfe::cosserat_core::{asym, asym_adjoint, LengthField, MaterialModel};
use cosserat_mfe::properties::phi_factorization_defect;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn mat3() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform9(-10.0..10.0f64).prop_map(|a| Matrix3::from_row_slice(&a))
}

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-10.0..10.0f64).prop_map(Vector3::from)
}

fn planar(m: Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| if i < 2 && j < 2 { m[(i, j)] } else { 0.0 })
}

proptest! {
    #[test]
    fn s_s_star_is_twice_identity(v in vec3()) {
        let back = asym(&asym_adjoint(&v, 3), 3);
        prop_assert!((back - 2.0 * v).amax() <= 1e-13);
    }

    #[test]
    fn s_star_s_is_twice_skew_part(t in mat3()) {
        let lhs = asym_adjoint(&asym(&t, 3), 3);
        prop_assert!((lhs - (t - t.transpose())).amax() <= 1e-13);
    }

    #[test]
    fn s_adjoint_pairing(t in mat3(), v in vec3()) {
        for dim in [2, 3] {
            let lhs = asym(&t, dim).dot(&v);
            let rhs = t.component_mul(&asym_adjoint(&v, dim)).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn compliance_roundtrip_and_symmetry(t in mat3(), s in mat3(), lambda in 0.0..100.0f64) {
        let m = MaterialModel::with(lambda, LengthField::Constant(1.0));
        for dim in [2, 3] {
            let (t, s) = if dim == 2 { (planar(t), planar(s)) } else { (t, s) };
            let back = m.apply_a_sigma(&m.apply_a_sigma_inv(&t, dim), dim);
            prop_assert!((back - t).amax() <= 1e-12 * (1.0 + lambda) * t.amax().max(1.0));
            let a = m.apply_a_sigma(&t, dim).component_mul(&s).sum();
            let b = m.apply_a_sigma(&s, dim).component_mul(&t).sum();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn compliance_is_bounded_by_its_spectrum(t in mat3(), lambda in 0.0..1e4f64) {
        let m = MaterialModel::with(lambda, LengthField::Constant(1.0));
        let (lo, hi) = m.a_sigma_bounds(3);
        let q = m.apply_a_sigma(&t, 3).component_mul(&t).sum();
        let n2 = t.norm_squared();
        prop_assert!(q >= lo * n2 * (1.0 - 1e-10) - 1e-12);
        prop_assert!(q <= hi * n2 * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn kinked_field_is_admissible(x in prop::array::uniform3(0.0..1.0f64)) {
        let l = LengthField::Kinked.eval(&x);
        prop_assert!((0.0..=1.0).contains(&l));
        if x.iter().all(|&xi| xi <= 1.0 / 3.0) {
            prop_assert_eq!(l, 0.0);
        }
        if x.iter().any(|&xi| xi >= 2.0 / 3.0) {
            prop_assert_eq!(l, 1.0);
        }
    }

    #[test]
    fn phi_factorization_holds_for_random_polynomials(seed in 0u64..1000) {
        prop_assert!(phi_factorization_defect(20, seed) <= 1e-10);
    }
}

#[test]
fn coupled_law_limits() {
    let m = MaterialModel::with(0.0, LengthField::Constant(1.0));
    let id = Matrix3::identity();
    // pure shear-free dilation with λ = 0: A_σ I = I / (2μ)
    assert_abs_diff_eq!(m.apply_a_sigma(&id, 3), id / (2.0 * m.mu), epsilon = 1e-15);
    let skew = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    assert_abs_diff_eq!(m.apply_a_sigma(&skew, 3), skew / (2.0 * m.mu_c_sigma), epsilon = 1e-15);
}
