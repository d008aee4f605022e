//! Pointwise Cosserat algebra: the asymmetry operator and its adjoint, the
//! cross-product lift `U` and the automorphism `Φ`, isotropic material laws,
//! the characteristic-length field and the strong-form residual.
//!
//! Two-dimensional quantities live inside 3×3 matrices and 3-vectors: `u` and
//! `σ` use the leading components, the scalar rotation is component 2 of `r`
//! and the couple stress is row 2 of `ω` (columns 0 and 1).

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::mesh::Mesh;

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("elastic tensor bounds violated: need min(mu, mu_c_sigma) > 0 and 2 mu + {t} lambda_sigma > 0")]
    ElasticBounds { t: usize },
    #[error("couple-stress tensor bounds violated: need min(mu, mu_c_omega) > 0 and 2 mu + {t} lambda_omega > 0")]
    CoupleBounds { t: usize },
    #[error("characteristic length is zero at {0:?}; A_omega is unbounded there")]
    DegenerateLength([f64; 3]),
    #[error("invalid length field: {0}")]
    InvalidLength(String),
}

/// `(Sσ)_i = σ_{i-1,i+1} - σ_{i+1,i-1}`; in 2D only component 2 survives.
pub fn asym(sigma: &Matrix3<f64>, dim: usize) -> Vector3<f64> {
    let c = |i: usize| sigma[((i + 2) % 3, (i + 1) % 3)] - sigma[((i + 1) % 3, (i + 2) % 3)];
    if dim == 2 {
        Vector3::new(0.0, 0.0, c(2))
    } else {
        Vector3::new(c(0), c(1), c(2))
    }
}

/// Adjoint of [`asym`]: the skew matrix with `σ : S*r = Sσ · r`.
pub fn asym_adjoint(r: &Vector3<f64>, dim: usize) -> Matrix3<f64> {
    if dim == 2 {
        Matrix3::new(0.0, -r[2], 0.0, r[2], 0.0, 0.0, 0.0, 0.0, 0.0)
    } else {
        Matrix3::new(0.0, -r[2], r[1], r[2], 0.0, -r[0], -r[1], r[0], 0.0)
    }
}

/// `(Uv)_i = x_{i+1} v_{i-1} - x_{i-1} v_{i+1}`.
pub fn lift_u(v: &Vector3<f64>, x: &Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|i, _| x[(i + 1) % 3] * v[(i + 2) % 3] - x[(i + 2) % 3] * v[(i + 1) % 3])
}

/// `U` applied to the first index of a matrix (column by column).
pub fn lift_u_matrix(m: &Matrix3<f64>, x: &Vector3<f64>) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for j in 0..3 {
        let col = lift_u(&m.column(j).into_owned(), x);
        out.set_column(j, &col);
    }
    out
}

/// `Φ(a, b) = (a, Ua + b)` on matrix pairs.
pub fn apply_phi(pair: &(Matrix3<f64>, Matrix3<f64>), x: &Vector3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    (pair.0, lift_u_matrix(&pair.0, x) + pair.1)
}

pub fn apply_phi_inv(pair: &(Matrix3<f64>, Matrix3<f64>), x: &Vector3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    (pair.0, pair.1 - lift_u_matrix(&pair.0, x))
}

/// `Φ` on vector pairs `(u, r)`.
pub fn apply_phi_vec(pair: &(Vector3<f64>, Vector3<f64>), x: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (pair.0, lift_u(&pair.0, x) + pair.1)
}

pub fn apply_phi_vec_inv(pair: &(Vector3<f64>, Vector3<f64>), x: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (pair.0, pair.1 - lift_u(&pair.0, x))
}

/// Characteristic length `ℓ(x) ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum LengthField {
    Constant(f64),
    /// `min(1, max(0, max_i(3x_i - 1)))`.
    Kinked,
    /// Continuous piecewise-linear field given by nodal values on the Kuhn
    /// (or diagonal-split) grid with `n` cells per axis.
    PiecewiseLinear { dim: usize, n: usize, values: Vec<f64> },
}

impl LengthField {
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match self {
            LengthField::Constant(c) => *c,
            LengthField::Kinked => {
                let m = x.iter().map(|&xi| 3.0 * xi - 1.0).fold(f64::NEG_INFINITY, f64::max);
                m.clamp(0.0, 1.0)
            }
            LengthField::PiecewiseLinear { dim, n, values } => pl_eval(*dim, *n, values, x),
        }
    }

    /// Gradient of the active linear piece at `x` (zero on flat pieces).
    pub fn gradient(&self, x: &[f64; 3]) -> Vector3<f64> {
        match self {
            LengthField::Constant(_) => Vector3::zeros(),
            LengthField::Kinked => {
                let mut best = 0;
                for i in 1..3 {
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                let m = 3.0 * x[best] - 1.0;
                let mut g = Vector3::zeros();
                if m > 0.0 && m < 1.0 {
                    g[best] = 3.0;
                }
                g
            }
            LengthField::PiecewiseLinear { dim, n, values } => pl_gradient(*dim, *n, values, x),
        }
    }

    /// Upper bound on `|∇ℓ|`.
    pub fn gradient_bound(&self) -> f64 {
        match self {
            LengthField::Constant(_) => 0.0,
            LengthField::Kinked => 3.0,
            LengthField::PiecewiseLinear { dim, n, .. } => {
                let mesh = Mesh::structured(*dim, *n).expect("valid grid");
                (0..mesh.num_cells())
                    .map(|c| {
                        let g = affine_gradient(&mesh, c, &|x| self.eval(x));
                        g.norm()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, LengthField::Constant(_))
    }

    /// Minimum over the vertices of `mesh`. Exact on resolving meshes.
    pub fn min_on(&self, mesh: &Mesh) -> f64 {
        mesh.vertices().iter().map(|x| self.eval(x)).fold(f64::INFINITY, f64::min)
    }

    /// Build a piecewise-linear field from a nodal function on a grid.
    pub fn from_nodal(dim: usize, n: usize, f: impl Fn(&[f64; 3]) -> f64) -> Result<Self, MaterialError> {
        let mesh = Mesh::structured(dim, n).map_err(|e| MaterialError::InvalidLength(e.to_string()))?;
        let values: Vec<f64> = mesh.vertices().iter().map(&f).collect();
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(MaterialError::InvalidLength("nodal values must lie in [0, 1]".into()));
        }
        Ok(LengthField::PiecewiseLinear { dim, n, values })
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        match self {
            LengthField::Constant(c) if !(0.0..=1.0).contains(c) => {
                Err(MaterialError::InvalidLength(format!("constant {c} outside [0, 1]")))
            }
            LengthField::PiecewiseLinear { dim, n, values } => {
                let np = (n + 1).pow(*dim as u32);
                if values.len() != np {
                    return Err(MaterialError::InvalidLength(format!(
                        "expected {np} nodal values, got {}",
                        values.len()
                    )));
                }
                if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(MaterialError::InvalidLength("nodal values must lie in [0, 1]".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Kuhn-simplex barycentric interpolation of grid values.
fn pl_eval(dim: usize, n: usize, values: &[f64], x: &[f64; 3]) -> f64 {
    let np = n + 1;
    let (base, loc, order) = pl_locate(dim, n, x);
    let idx = |c: &[usize; 3]| c[0] + np * (c[1] + np * c[2]);
    let mut corner = base;
    let mut val = (1.0 - loc[order[0]]) * values[idx(&corner)];
    for s in 0..dim {
        corner[order[s]] += 1;
        let next = if s + 1 < dim { loc[order[s + 1]] } else { 0.0 };
        val += (loc[order[s]] - next) * values[idx(&corner)];
    }
    val
}

fn pl_locate(dim: usize, n: usize, x: &[f64; 3]) -> ([usize; 3], [f64; 3], Vec<usize>) {
    let mut base = [0usize; 3];
    let mut loc = [0.0; 3];
    for r in 0..dim {
        let t = (x[r] * n as f64).clamp(0.0, n as f64);
        let i = (t.floor() as usize).min(n - 1);
        base[r] = i;
        loc[r] = t - i as f64;
    }
    let mut order: Vec<usize> = (0..dim).collect();
    // descending local coordinate; ties broken by axis index
    order.sort_by(|&a, &b| loc[b].total_cmp(&loc[a]).then(a.cmp(&b)));
    (base, loc, order)
}

fn pl_gradient(dim: usize, n: usize, values: &[f64], x: &[f64; 3]) -> Vector3<f64> {
    let np = n + 1;
    let (mut corner, _, order) = pl_locate(dim, n, x);
    let idx = |c: &[usize; 3]| c[0] + np * (c[1] + np * c[2]);
    let mut g = Vector3::zeros();
    for &axis in &order {
        let prev = values[idx(&corner)];
        corner[axis] += 1;
        g[axis] = (values[idx(&corner)] - prev) * n as f64;
    }
    g
}

/// Gradient of the affine interpolant of `f` on a cell.
pub fn affine_gradient(mesh: &Mesh, c: usize, f: &dyn Fn(&[f64; 3]) -> f64) -> Vector3<f64> {
    let map = mesh.affine_map(c);
    let dim = mesh.dim();
    let v = mesh.cell(c);
    let f0 = f(&mesh.vertex(v[0]));
    let mut dv = Vector3::zeros();
    for i in 0..dim {
        dv[i] = f(&mesh.vertex(v[i + 1])) - f0;
    }
    // ℓ(x) = f0 + g·(x - x0), with J^T g = dv
    let jt = map.jacobian.transpose();
    let g = jt.try_inverse().expect("nondegenerate cell") * dv;
    if dim == 2 {
        Vector3::new(g[0], g[1], 0.0)
    } else {
        g
    }
}

/// Isotropic Cosserat material with a characteristic-length field.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub mu: f64,
    pub lambda_sigma: f64,
    pub mu_c_sigma: f64,
    pub lambda_omega: f64,
    pub mu_c_omega: f64,
    pub ell: LengthField,
}

impl Default for MaterialModel {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda_sigma: 1.0,
            mu_c_sigma: 0.1,
            lambda_omega: 1.0,
            mu_c_omega: 0.1,
            ell: LengthField::Constant(1.0),
        }
    }
}

fn identity(dim: usize) -> Matrix3<f64> {
    let mut i = Matrix3::zeros();
    for r in 0..dim {
        i[(r, r)] = 1.0;
    }
    i
}

fn forward_law(mu: f64, lambda: f64, mu_c: f64, tau: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
    // (τ - λ/(2μ + tλ) tr τ I)/(2μ) split into deviatoric and spherical parts,
    // which avoids cancelling the large spherical part when λ ≫ μ
    let t = dim as f64;
    let mean = tau.trace() / t;
    let sym = (tau + tau.transpose()) * 0.5;
    let skew = (tau - tau.transpose()) * 0.5;
    let dev = sym - identity(dim) * mean;
    dev / (2.0 * mu) + identity(dim) * (mean / (2.0 * mu + t * lambda)) + skew / (2.0 * mu_c)
}

fn inverse_law(mu: f64, lambda: f64, mu_c: f64, tau: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
    let t = dim as f64;
    let mean = tau.trace() / t;
    let sym = (tau + tau.transpose()) * 0.5;
    let skew = (tau - tau.transpose()) * 0.5;
    let dev = sym - identity(dim) * mean;
    dev * (2.0 * mu) + skew * (2.0 * mu_c) + identity(dim) * ((2.0 * mu + t * lambda) * mean)
}

impl MaterialModel {
    /// Material with the default moduli and the given `λ_σ` and `ℓ`.
    pub fn with(lambda_sigma: f64, ell: LengthField) -> Self {
        Self { lambda_sigma, ell, ..Self::default() }
    }

    pub fn check(&self, dim: usize) -> Result<(), MaterialError> {
        let t = dim as f64;
        if !(self.mu.min(self.mu_c_sigma) > 0.0 && 2.0 * self.mu + t * self.lambda_sigma > 0.0) {
            return Err(MaterialError::ElasticBounds { t: dim });
        }
        if !(self.mu.min(self.mu_c_omega) > 0.0 && 2.0 * self.mu + t * self.lambda_omega > 0.0) {
            return Err(MaterialError::CoupleBounds { t: dim });
        }
        self.ell.validate()
    }

    pub fn apply_a_sigma(&self, tau: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
        forward_law(self.mu, self.lambda_sigma, self.mu_c_sigma, tau, dim)
    }

    pub fn apply_a_sigma_inv(&self, tau: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
        inverse_law(self.mu, self.lambda_sigma, self.mu_c_sigma, tau, dim)
    }

    /// Eigenvalue range of `A_σ`: it acts as `1/(2μ)` on symmetric
    /// traceless, `1/(2μ_c)` on skew and `1/(2μ + tλ)` on spherical tensors.
    pub fn a_sigma_bounds(&self, dim: usize) -> (f64, f64) {
        let vals = [
            1.0 / (2.0 * self.mu),
            1.0 / (2.0 * self.mu_c_sigma),
            1.0 / (2.0 * self.mu + dim as f64 * self.lambda_sigma),
        ];
        (
            vals.iter().cloned().fold(f64::INFINITY, f64::min),
            vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// `Ã_ω`. In 2D the couple stress is the single row 2 and the law is the
    /// reduction `ρ / (μ + μ_c^ω)` obtained by eliminating the out-of-plane
    /// components of the 3D law.
    pub fn apply_a_omega_tilde(&self, rho: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
        if dim == 2 {
            rho / (self.mu + self.mu_c_omega)
        } else {
            forward_law(self.mu, self.lambda_omega, self.mu_c_omega, rho, dim)
        }
    }

    pub fn apply_a_omega_tilde_inv(&self, rho: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
        if dim == 2 {
            rho * (self.mu + self.mu_c_omega)
        } else {
            inverse_law(self.mu, self.lambda_omega, self.mu_c_omega, rho, dim)
        }
    }

    /// `A_ω = ℓ⁻² Ã_ω` at `x`.
    pub fn apply_a_omega(&self, rho: &Matrix3<f64>, x: &[f64; 3], dim: usize) -> Result<Matrix3<f64>, MaterialError> {
        let l = self.ell.eval(x);
        if l <= 0.0 {
            return Err(MaterialError::DegenerateLength(*x));
        }
        Ok(self.apply_a_omega_tilde(rho, dim) / (l * l))
    }
}

/// Values and first derivatives of a solution at a point.
#[derive(Debug, Clone, Default)]
pub struct ExactFields {
    pub u: Vector3<f64>,
    pub r: Vector3<f64>,
    /// `(∇u)_{ij} = ∂_j u_i`.
    pub grad_u: Matrix3<f64>,
    pub grad_r: Matrix3<f64>,
    pub sigma: Matrix3<f64>,
    pub omega: Matrix3<f64>,
    /// `ℓ⁻¹ ω` (zero where `ℓ = 0`).
    pub omega_tilde: Matrix3<f64>,
    pub div_sigma: Vector3<f64>,
    pub div_omega: Vector3<f64>,
    pub ell: f64,
}

/// Residuals of the four strong equations.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongResidual {
    /// `A_σσ - ∇u - S*r`.
    pub r_a: Matrix3<f64>,
    /// `Ã_ω ω - ℓ²∇r`, the couple-stress law multiplied through by `ℓ²`.
    pub r_b: Matrix3<f64>,
    /// `-∇·σ`, equal to `f_u`.
    pub r_c: Vector3<f64>,
    /// `-∇·ω + Sσ`, equal to `f_r`.
    pub r_d: Vector3<f64>,
}

pub fn strong_residual(material: &MaterialModel, f: &ExactFields, dim: usize) -> StrongResidual {
    StrongResidual {
        r_a: material.apply_a_sigma(&f.sigma, dim) - f.grad_u - asym_adjoint(&f.r, dim),
        r_b: material.apply_a_omega_tilde(&f.omega, dim) - f.grad_r * (f.ell * f.ell),
        r_c: -f.div_sigma,
        r_d: -f.div_omega + asym(&f.sigma, dim),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn asym_examples() {
        assert_eq!(asym(&Matrix3::identity(), 3), Vector3::zeros());
        let v = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(asym(&asym_adjoint(&v, 3), 3), Vector3::new(2.0, 0.0, 0.0));
        let s = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(asym(&s, 2)[2], 2.0);
        let m = asym_adjoint(&Vector3::new(0.0, 0.0, 1.0), 3);
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], 1.0);
        assert_eq!(m.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn adjoint_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2, 3] {
            for _ in 0..100 {
                let s = rand_mat(&mut rng);
                let r = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                let lhs = asym(&s, dim).dot(&r);
                let rhs = s.component_mul(&asym_adjoint(&r, dim)).sum();
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn material_special_cases() {
        let mut m = MaterialModel::default();
        m.mu_c_sigma = m.mu;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = rand_mat(&mut rng);
        let expect = t * (2.0 * m.mu) + Matrix3::identity() * (m.lambda_sigma * t.trace());
        assert!((m.apply_a_sigma_inv(&t, 3) - expect).norm() < 1e-14);
        let m = MaterialModel { lambda_sigma: 0.0, ..MaterialModel::default() };
        assert!((m.apply_a_sigma_inv(&Matrix3::identity(), 3) - Matrix3::identity() * 2.0).norm() < 1e-15);
    }

    #[test]
    fn omega_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = rand_mat(&mut rng);
        let m = MaterialModel::with(1.0, LengthField::Constant(1.0));
        let a = m.apply_a_omega(&rho, &[0.2, 0.3, 0.4], 3).unwrap();
        assert!((a - m.apply_a_omega_tilde(&rho, 3)).norm() < 1e-15);
        let m = MaterialModel::with(1.0, LengthField::Constant(1e-2));
        let a = m.apply_a_omega(&rho, &[0.2, 0.3, 0.4], 3).unwrap();
        assert!((a - m.apply_a_omega_tilde(&rho, 3) * 1e4).norm() < 1e-10 * a.norm());
        let m = MaterialModel::with(1.0, LengthField::Kinked);
        assert!(matches!(
            m.apply_a_omega(&rho, &[0.1, 0.1, 0.1], 3),
            Err(MaterialError::DegenerateLength(_))
        ));
    }

    #[test]
    fn bounds_checked() {
        let bad = MaterialModel { mu_c_sigma: 0.0, ..MaterialModel::default() };
        assert_eq!(bad.check(3), Err(MaterialError::ElasticBounds { t: 3 }));
        let bad = MaterialModel { lambda_omega: -1.0, ..MaterialModel::default() };
        assert_eq!(bad.check(3), Err(MaterialError::CoupleBounds { t: 3 }));
        assert!(MaterialModel::default().check(2).is_ok());
    }

    #[test]
    fn two_dimensional_couple_law_is_reduced_3d_law() {
        // eliminate out-of-plane entries of the 3D law for ω = ℓ²Ã⁻¹∇r with
        // ∇r in row 2: the in-plane part of Ã⁻¹ row 2 is (μ + μ_c)∇r
        let m = MaterialModel::default();
        let mut g = Matrix3::zeros();
        g[(2, 0)] = 0.7;
        g[(2, 1)] = -0.3;
        let full = m.apply_a_omega_tilde_inv(&g, 3);
        let red = m.apply_a_omega_tilde_inv(&g, 2);
        assert!((full[(2, 0)] - red[(2, 0)]).abs() < 1e-15);
        assert!((full[(2, 1)] - red[(2, 1)]).abs() < 1e-15);
    }

    #[test]
    fn kinked_field_values() {
        let l = LengthField::Kinked;
        assert_eq!(l.eval(&[0.1, 0.2, 0.3]), 0.0);
        assert_eq!(l.eval(&[0.9, 0.2, 0.3]), 1.0);
        assert!((l.eval(&[0.5, 0.2, 0.1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kinked_field_is_nodal_interpolant_on_three_grid() {
        for dim in [2, 3] {
            let pl = LengthField::from_nodal(dim, 3, |x| LengthField::Kinked.eval(x)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..2000 {
                let mut x = [0.0; 3];
                for xi in x.iter_mut().take(dim) {
                    *xi = rng.random_range(0.0..1.0);
                }
                assert!((pl.eval(&x) - LengthField::Kinked.eval(&x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affine_per_cell_on_resolving_meshes() {
        for dim in [2, 3] {
            let mesh = Mesh::structured(dim, 6).unwrap();
            let l = LengthField::Kinked;
            for c in 0..mesh.num_cells() {
                let v = mesh.cell(c);
                let avg: f64 = v.iter().map(|&i| l.eval(&mesh.vertex(i))).sum::<f64>() / v.len() as f64;
                assert!((l.eval(&mesh.cell_centroid(c)) - avg).abs() < 1e-12);
                // edge midpoints too
                let a = mesh.vertex(v[0]);
                let b = mesh.vertex(v[dim]);
                let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
                let m = 0.5 * (l.eval(&a) + l.eval(&b));
                assert!((l.eval(&mid) - m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_bound_of_kinked_field() {
        let pl = LengthField::from_nodal(2, 3, |x| LengthField::Kinked.eval(x)).unwrap();
        assert!((pl.gradient_bound() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn phi_roundtrip_and_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = rand_mat(&mut rng);
        let b = rand_mat(&mut rng);
        let x = Vector3::new(0.3, -0.2, 0.9);
        let (p, q) = apply_phi(&apply_phi_inv(&(a, b), &x), &x);
        assert!((p - a).norm() + (q - b).norm() < 1e-14);
        let (p, q) = apply_phi(&(a, b), &Vector3::zeros());
        assert_eq!((p, q), (a, b));
    }
}
