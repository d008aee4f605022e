//! Brute-force reference computations for cross-checking the main code paths.
//!
//! Everything here works on dense matrices or finite differences and avoids
//! the sparse factorizations and eigen routines used by [`crate::solver`] and
//! [`crate::analysis`].

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3, SVD};
use thiserror::Error;

use crate::assembly::{BlockSystem, DiscreteProblem};
use crate::cosserat_core::{asym, asym_adjoint, strong_residual, ExactFields, MaterialModel, StrongResidual};
use crate::manufactured::ManufacturedSolution;

/// Largest system the dense oracles accept.
pub const DENSE_ORACLE_LIMIT: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("system has {0} unknowns, above the dense oracle limit")]
    TooLarge(usize),
    #[error("dense matrix is singular (discrete inf-sup violated)")]
    Singular,
    #[error("finite-difference step {0} outside (1e-6, 1e-3)")]
    Step(f64),
}

fn fd_gradient(f: &dyn Fn(&[f64; 3]) -> Vector3<f64>, x: &[f64; 3], dim: usize, h: f64) -> Matrix3<f64> {
    let mut g = Matrix3::zeros();
    for j in 0..dim {
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        let d = (f(&xp) - f(&xm)) / (2.0 * h);
        for i in 0..3 {
            g[(i, j)] = d[i];
        }
    }
    g
}

fn fd_divergence(f: &dyn Fn(&[f64; 3]) -> Matrix3<f64>, x: &[f64; 3], dim: usize, h: f64) -> Vector3<f64> {
    let mut d = Vector3::zeros();
    for j in 0..dim {
        let (mut xp, mut xm) = (*x, *x);
        xp[j] += h;
        xm[j] -= h;
        let diff = (f(&xp) - f(&xm)) / (2.0 * h);
        for i in 0..3 {
            d[i] += diff[(i, j)];
        }
    }
    d
}

/// Strong-form residual with every derivative replaced by a central
/// difference of the closed-form values. For a consistent field bundle the
/// constitutive residuals vanish and `(r_c, r_d)` reproduce the load, up to
/// `O(step²)`.
pub fn fd_strong_residual(
    material: &MaterialModel,
    dim: usize,
    fields: &dyn Fn(&[f64; 3]) -> ExactFields,
    x: &[f64; 3],
    step: f64,
) -> Result<StrongResidual, OracleError> {
    if !(step > 1e-6 && step < 1e-3) {
        return Err(OracleError::Step(step));
    }
    let f = fields(x);
    let grad_u = fd_gradient(&|y| fields(y).u, x, dim, step);
    let grad_r = fd_gradient(&|y| fields(y).r, x, dim, step);
    let div_sigma = fd_divergence(&|y| fields(y).sigma, x, dim, step);
    let div_omega = fd_divergence(&|y| fields(y).omega, x, dim, step);
    Ok(StrongResidual {
        r_a: material.apply_a_sigma(&f.sigma, dim) - grad_u - asym_adjoint(&f.r, dim),
        r_b: material.apply_a_omega_tilde(&f.omega, dim) - grad_r * (f.ell * f.ell),
        r_c: -div_sigma,
        r_d: -div_omega + asym(&f.sigma, dim),
    })
}

/// Largest discrepancy between the finite-difference residual and the
/// closed-form one of a manufactured solution at `x`.
pub fn fd_discrepancy(sol: &ManufacturedSolution, x: &[f64; 3], step: f64) -> Result<f64, OracleError> {
    let fd = fd_strong_residual(&sol.material, sol.dim, &|y| sol.eval(y), x, step)?;
    let exact = strong_residual(&sol.material, &sol.eval(x), sol.dim);
    Ok([
        (fd.r_a - exact.r_a).amax(),
        (fd.r_b - exact.r_b).amax(),
        (fd.r_c - exact.r_c).amax(),
        (fd.r_d - exact.r_d).amax(),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

/// Solve the full (unsymmetrised) block system with dense LU.
pub fn dense_small_system(system: &BlockSystem) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    let n = system.n_p + system.n_u;
    if n > DENSE_ORACLE_LIMIT {
        return Err(OracleError::TooLarge(n));
    }
    let k = system.full_matrix().to_dense();
    let b = DVector::from_vec(system.rhs());
    let lu = k.lu();
    let z = lu.solve(&b).ok_or(OracleError::Singular)?;
    // LU pivots can be tiny but nonzero when the pairing is unstable
    let pivmin = (0..n).map(|i| lu.u()[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    let pivmax = (0..n).map(|i| lu.u()[(i, i)].abs()).fold(0.0, f64::max);
    if pivmin <= 1e-13 * pivmax {
        return Err(OracleError::Singular);
    }
    let z: Vec<f64> = z.iter().copied().collect();
    Ok((z[..system.n_p].to_vec(), z[system.n_p..].to_vec()))
}

fn check_size(problem: &DiscreteProblem) -> Result<(), OracleError> {
    if problem.n_dofs() > DENSE_ORACLE_LIMIT {
        Err(OracleError::TooLarge(problem.n_dofs()))
    } else {
        Ok(())
    }
}

/// Inverse of the lower Cholesky factor of a dense SPD matrix.
fn inv_cholesky_factor(m: DMatrix<f64>) -> Result<DMatrix<f64>, OracleError> {
    let l = m.cholesky().ok_or(OracleError::Singular)?.l();
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n)).ok_or(OracleError::Singular)
}

/// `β_h` as the smallest singular value of `L_u⁻¹ B L_p⁻ᵀ`, with `L_p`, `L_u`
/// the Cholesky factors of the `H_ℓ` norm on `X^p` and the mass on `X^u`.
pub fn dense_infsup(problem: &DiscreteProblem) -> Result<f64, OracleError> {
    check_size(problem)?;
    let b = problem.assemble_coupling().to_dense();
    let lp = inv_cholesky_factor(problem.assemble_hl_norm().to_dense())?;
    let lu = inv_cholesky_factor(problem.assemble_u_mass().to_dense())?;
    let c = lu * b * lp.transpose();
    let sv = SVD::new(c, false, false).singular_values;
    Ok(sv.min())
}

/// Orthonormal basis of the null space of `B`, from the SVD of `B` padded
/// to a square matrix.
fn null_space(b: &DMatrix<f64>) -> DMatrix<f64> {
    let (nu, np) = b.shape();
    let mut sq = DMatrix::zeros(np.max(nu), np);
    sq.view_mut((0, 0), (nu, np)).copy_from(b);
    let svd = SVD::new(sq, false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max().max(1.0);
    let cols: Vec<usize> = (0..np).filter(|&i| svd.singular_values[i] <= 1e-10 * smax).collect();
    DMatrix::from_fn(np, cols.len(), |r, c| vt[(cols[c], r)])
}

/// `(λ_min(M_A|ker B), λ_min(M_A, N_p)|ker B)`: the smallest eigenvalue of the
/// mass form on the discrete kernel, in the Euclidean and in the `H_ℓ` metric.
pub fn dense_kernel_coercivity(problem: &DiscreteProblem) -> Result<(f64, f64), OracleError> {
    check_size(problem)?;
    let b = problem.assemble_coupling().to_dense();
    let z = null_space(&b);
    if z.ncols() == 0 {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let m = problem.assemble_mass().to_dense();
    let np = problem.assemble_hl_norm().to_dense();
    let mz = z.transpose() * &m * &z;
    let plain = SymmetricEigen::new((&mz + mz.transpose()) * 0.5).eigenvalues.min();
    // N-orthonormalise the kernel basis through N_z^{-1/2}
    let nz = z.transpose() * &np * &z;
    let eig = SymmetricEigen::new((&nz + nz.transpose()) * 0.5);
    if eig.eigenvalues.min() <= 0.0 {
        return Err(OracleError::Singular);
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let inv_sqrt = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    let w = &inv_sqrt * mz * &inv_sqrt;
    let weighted = SymmetricEigen::new((&w + w.transpose()) * 0.5).eigenvalues.min();
    Ok((plain, weighted))
}

/// Relative change of the load vector between degree-10 and degree-12 rules.
pub fn rhs_quadrature_refinement(
    problem: &DiscreteProblem,
    load: &(dyn Fn(&[f64; 3]) -> (Vector3<f64>, Vector3<f64>) + Sync),
) -> f64 {
    let a = problem.assemble_rhs(load, 10);
    let b = problem.assemble_rhs(load, 12);
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / nb.max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Method;
    use crate::cosserat_core::LengthField;
    use crate::manufactured::SolutionCase;
    use crate::mesh::Mesh;
    use crate::solver::{solve_direct, SolverOptions};
    use std::sync::Arc;

    /// Quadratic `u`, `r` with `ℓ = 1`; stresses are affine and the
    /// divergences are written out by hand.
    fn quadratic_bundle(m: &MaterialModel) -> impl Fn(&[f64; 3]) -> ExactFields + '_ {
        // u_i = x_i x_{i+1} + 0.3 x_i², r_i = 0.5 x_{i+2}² - x_i
        move |x: &[f64; 3]| {
            let mut f = ExactFields { ell: 1.0, ..Default::default() };
            let mut du: [Matrix3<f64>; 3] = [Matrix3::zeros(); 3];
            let mut dr = [Vector3::<f64>::zeros(); 3];
            for i in 0..3 {
                let (n, p) = ((i + 1) % 3, (i + 2) % 3);
                f.u[i] = x[i] * x[n] + 0.3 * x[i] * x[i];
                f.r[i] = 0.5 * x[p] * x[p] - x[i];
                f.grad_u[(i, i)] += x[n] + 0.6 * x[i];
                f.grad_u[(i, n)] += x[i];
                f.grad_r[(i, p)] += x[p];
                f.grad_r[(i, i)] -= 1.0;
                // ∂_j of ∇u and of r
                du[i][(i, i)] += 0.6;
                du[n][(i, i)] += 1.0;
                du[i][(i, n)] += 1.0;
            }
            // ∂_j r_i = δ_{j,i+2} x_{i+2} - δ_{ij}
            for j in 0..3 {
                for i in 0..3 {
                    dr[j][i] = f.grad_r[(i, j)];
                }
            }
            f.sigma = m.apply_a_sigma_inv(&(f.grad_u + asym_adjoint(&f.r, 3)), 3);
            f.omega = m.apply_a_omega_tilde_inv(&f.grad_r, 3);
            for j in 0..3 {
                let ds = m.apply_a_sigma_inv(&(du[j] + asym_adjoint(&dr[j], 3)), 3);
                // ∂_j ∇r: only (i, i+2) entries with i+2 = j are nonzero
                let mut dgr = Matrix3::zeros();
                dgr[((j + 1) % 3, j)] = 1.0;
                let dom = m.apply_a_omega_tilde_inv(&dgr, 3);
                for i in 0..3 {
                    f.div_sigma[i] += ds[(i, j)];
                    f.div_omega[i] += dom[(i, j)];
                }
            }
            f
        }
    }

    #[test]
    fn fd_matches_closed_form_on_smooth_data() {
        for dim in [2, 3] {
            let sol = ManufacturedSolution::new(dim, SolutionCase::Smooth, MaterialModel::default());
            let d = fd_discrepancy(&sol, &[0.31, 0.57, 0.42], 1e-4).unwrap();
            assert!(d <= 1e-6, "dim {dim}: {d:e}");
        }
    }

    #[test]
    fn fd_is_exact_on_quadratic_data() {
        let m = MaterialModel::with(1.0, LengthField::Constant(1.0));
        let bundle = quadratic_bundle(&m);
        let x = [0.2, 0.7, 0.4];
        let exact = strong_residual(&m, &bundle(&x), 3);
        for step in [1e-5, 1e-4, 5e-4] {
            let fd = fd_strong_residual(&m, 3, &bundle, &x, step).unwrap();
            assert!((fd.r_a - &exact.r_a).amax() < 1e-9);
            assert!((fd.r_c - exact.r_c).amax() < 1e-9, "{step}");
            assert!((fd.r_d - exact.r_d).amax() < 1e-9, "{step}");
        }
    }

    #[test]
    fn fd_error_is_second_order() {
        let sol = ManufacturedSolution::new(3, SolutionCase::Smooth, MaterialModel::default());
        let x = [0.31, 0.57, 0.42];
        let a = fd_discrepancy(&sol, &x, 4e-4).unwrap();
        let b = fd_discrepancy(&sol, &x, 2e-4).unwrap();
        let ratio = a / b;
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn fd_rejects_bad_step() {
        let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, MaterialModel::default());
        assert_eq!(fd_discrepancy(&sol, &[0.5; 3], 1e-2), Err(OracleError::Step(1e-2)));
    }

    #[test]
    fn dense_and_sparse_direct_agree() {
        let mesh = Arc::new(Mesh::structured(2, 2).unwrap());
        let mat = MaterialModel::default();
        let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
        for m in Method::ALL {
            let pr = DiscreteProblem::new(mesh.clone(), m, 0, mat.clone()).unwrap();
            let sys = pr.assemble(&|x| sol.load(x));
            let (p, u) = dense_small_system(&sys).unwrap();
            let s = solve_direct(&sys, &SolverOptions::default()).unwrap();
            let z: Vec<f64> = p.iter().chain(&u).copied().collect();
            let d: f64 = s.p.iter().chain(&s.u).zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let nz: f64 = z.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(d <= 1e-10 * nz, "{m}: {:e}", d / nz);
        }
    }

    #[test]
    fn dense_infsup_matches_schur_route() {
        let mesh = Arc::new(Mesh::structured(2, 2).unwrap());
        for m in Method::ALL {
            let pr = DiscreteProblem::new(mesh.clone(), m, 0, MaterialModel::default()).unwrap();
            let a = dense_infsup(&pr).unwrap();
            let b = crate::analysis::infsup_constant(&pr).unwrap();
            assert!((a - b).abs() <= 1e-8, "{m}: {a} vs {b}");
        }
    }

    #[test]
    fn kernel_coercivity_positive_and_consistent() {
        let mesh = Arc::new(Mesh::structured(2, 1).unwrap());
        for m in Method::ALL {
            let pr = DiscreteProblem::new(mesh.clone(), m, 0, MaterialModel::default()).unwrap();
            let (plain, weighted) = dense_kernel_coercivity(&pr).unwrap();
            assert!(plain > 0.0 && weighted > 0.0, "{m}");
            let other = crate::analysis::kernel_coercivity(&pr).unwrap();
            assert!((weighted - other).abs() <= 1e-8 * other.max(1.0), "{m}: {weighted} vs {other}");
        }
    }

    #[test]
    fn rhs_quadrature_converged() {
        let sol = ManufacturedSolution::new(3, SolutionCase::Smooth, MaterialModel::default());
        // a single coarse cube under-resolves the sines; from n = 2 on the
        // rules agree
        for n in [2, 4] {
            let mesh = Arc::new(Mesh::structured(3, n).unwrap());
            let pr = DiscreteProblem::new(mesh, Method::WC_BDM, 0, MaterialModel::default()).unwrap();
            let d = rhs_quadrature_refinement(&pr, &|x| sol.load(x));
            assert!(d <= 1e-9, "n={n}: {d:e}");
        }
    }
}
