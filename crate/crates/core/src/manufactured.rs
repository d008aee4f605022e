//! Manufactured solutions on the unit square and cube.
//!
//! Displacement and rotation are written with [`Jet`]s so that stresses, their
//! divergences and the loads follow exactly from the strong equations:
//! `σ = A_σ⁻¹(∇u + S*r)`, `ω = ℓ² Ã_ω⁻¹ ∇r`, `f_u = -∇·σ`,
//! `f_r = -∇·ω + Sσ`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::cosserat_core::{asym, asym_adjoint, ExactFields, MaterialModel};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionCase {
    /// Product of sines and bubbles in every component.
    Smooth,
    /// Divergence-free displacement (curl of a stream function).
    DivFree,
}

#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub dim: usize,
    pub case: SolutionCase,
    pub material: MaterialModel,
}

fn sin_pi(x: &[f64; 3], i: usize) -> Jet {
    let (s, c) = (PI * x[i]).sin_cos();
    Jet::univariate(i, s, PI * c, -PI * PI * s)
}

/// `x_i (1 - x_i)`.
fn bubble(x: &[f64; 3], i: usize) -> Jet {
    let t = x[i];
    Jet::univariate(i, t - t * t, 1.0 - 2.0 * t, -2.0)
}

/// `sin²(π x_i)`.
fn sin2_pi(x: &[f64; 3], i: usize) -> Jet {
    let s = (PI * x[i]).sin();
    let (s2, c2) = (2.0 * PI * x[i]).sin_cos();
    Jet::univariate(i, s * s, PI * s2, 2.0 * PI * PI * c2)
}

/// `d/dx sin²(π x_i)`.
fn dsin2_pi(x: &[f64; 3], i: usize) -> Jet {
    let (s2, c2) = (2.0 * PI * x[i]).sin_cos();
    Jet::univariate(i, PI * s2, 2.0 * PI * PI * c2, -4.0 * PI * PI * PI * s2)
}

impl ManufacturedSolution {
    pub fn new(dim: usize, case: SolutionCase, material: MaterialModel) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        Self { dim, case, material }
    }

    /// Displacement and rotation jets at `x`.
    pub fn jets(&self, x: &[f64; 3]) -> ([Jet; 3], [Jet; 3]) {
        let zero = Jet::constant(0.0);
        let mut u = [zero; 3];
        let mut r = [zero; 3];
        if self.dim == 3 {
            for i in 0..3 {
                let (n, p) = ((i + 1) % 3, (i + 2) % 3);
                r[i] = bubble(x, i) * sin_pi(x, n) * sin_pi(x, p);
            }
            match self.case {
                SolutionCase::Smooth => {
                    for i in 0..3 {
                        let (n, p) = ((i + 1) % 3, (i + 2) % 3);
                        u[i] = sin_pi(x, i) * bubble(x, n) * bubble(x, p);
                    }
                }
                SolutionCase::DivFree => {
                    // ∇×((e_2 + e_3)ψ) = (∂_2ψ - ∂_3ψ, -∂_1ψ, ∂_1ψ)
                    let s = [sin2_pi(x, 0), sin2_pi(x, 1), sin2_pi(x, 2)];
                    let d = [dsin2_pi(x, 0), dsin2_pi(x, 1), dsin2_pi(x, 2)];
                    let d0 = d[0] * s[1] * s[2];
                    let d1 = s[0] * d[1] * s[2];
                    let d2 = s[0] * s[1] * d[2];
                    u = [d1 - d2, -d0, d0];
                }
            }
        } else {
            r[2] = bubble(x, 0) * sin_pi(x, 1);
            match self.case {
                SolutionCase::Smooth => {
                    u[0] = sin_pi(x, 0) * bubble(x, 1);
                    u[1] = sin_pi(x, 1) * bubble(x, 0);
                }
                SolutionCase::DivFree => {
                    let d0 = dsin2_pi(x, 0) * sin2_pi(x, 1);
                    let d1 = sin2_pi(x, 0) * dsin2_pi(x, 1);
                    u = [d1, -d0, zero];
                }
            }
        }
        (u, r)
    }

    pub fn eval(&self, x: &[f64; 3]) -> ExactFields {
        let dim = self.dim;
        let m = &self.material;
        let (uj, rj) = self.jets(x);
        let u = Vector3::from_fn(|i, _| uj[i].v);
        let r = Vector3::from_fn(|i, _| rj[i].v);
        let grad_u = Matrix3::from_fn(|i, j| uj[i].g[j]);
        let grad_r = Matrix3::from_fn(|i, j| rj[i].g[j]);
        let sigma = m.apply_a_sigma_inv(&(grad_u + asym_adjoint(&r, dim)), dim);
        let mut div_sigma = Vector3::zeros();
        let g = m.apply_a_omega_tilde_inv(&grad_r, dim);
        let mut div_g = Vector3::zeros();
        for j in 0..dim {
            let dgu = Matrix3::from_fn(|i, a| uj[i].h[a][j]);
            let dr = Vector3::from_fn(|i, _| rj[i].g[j]);
            let ds = m.apply_a_sigma_inv(&(dgu + asym_adjoint(&dr, dim)), dim);
            let dgr = Matrix3::from_fn(|i, a| rj[i].h[a][j]);
            let dg = m.apply_a_omega_tilde_inv(&dgr, dim);
            for i in 0..3 {
                div_sigma[i] += ds[(i, j)];
                div_g[i] += dg[(i, j)];
            }
        }
        let ell = m.ell.eval(x);
        let grad_ell = m.ell.gradient(x);
        let omega = g * (ell * ell);
        let div_omega = div_g * (ell * ell) + g * grad_ell * (2.0 * ell);
        ExactFields {
            u,
            r,
            grad_u,
            grad_r,
            sigma,
            omega,
            omega_tilde: g * ell,
            div_sigma,
            div_omega,
            ell,
        }
    }

    /// `(f_u, f_r)` at `x`.
    pub fn load(&self, x: &[f64; 3]) -> (Vector3<f64>, Vector3<f64>) {
        let f = self.eval(x);
        (-f.div_sigma, -f.div_omega + asym(&f.sigma, self.dim))
    }
}
