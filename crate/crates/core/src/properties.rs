//! Named invariant checks across the library, each returning a pass/fail
//! outcome with a one-line summary of the measured quantities.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    discrete_stability_norm, error_norms, infsup_constant, kernel_coercivity, weighted_inverse_ratio, momentum_balance_defect,
};
use crate::assembly::{DiscreteProblem, Method, SpaceLayout};
use crate::cosserat_core::{apply_phi_inv, apply_phi_vec, asym, asym_adjoint, LengthField, MaterialModel};
use crate::fe_spaces::{cell_quadrature, ElementKind, FiniteElementSpace};
use crate::jet::Jet;
use crate::manufactured::{ManufacturedSolution, SolutionCase};
use crate::mesh::Mesh;
use crate::oracles;
use crate::polynomial::homogeneous_exponents;
use crate::quadrature::QuadratureRule;
use crate::solver::{minres, solve_direct, solve_minres, BlockPreconditioner, SolverKind, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

pub struct Property {
    pub module: &'static str,
    pub name: &'static str,
    pub run: fn() -> Outcome,
}

/// The full suite, grouped by module.
pub fn all() -> Vec<Property> {
    macro_rules! p {
        ($m:expr, $f:ident) => {
            Property { module: $m, name: stringify!($f), run: $f }
        };
    }
    vec![
        p!("mesh", mesh_invariants),
        p!("fe_spaces", commuting_diagram),
        p!("fe_spaces", interpolant_reproduces_space),
        p!("fe_spaces", interpolation_rate),
        p!("cosserat_core", operator_identities),
        p!("cosserat_core", material_roundtrip),
        p!("cosserat_core", phi_factorization),
        p!("cosserat_core", manufactured_solutions),
        p!("assembly", strong_coupling_inclusion),
        p!("assembly", kernel_coercivity_is_mesh_independent),
        p!("assembly", momentum_balance),
        p!("solver", minres_matches_direct),
        p!("solver", minres_stopping_is_monotone),
        p!("solver", sc_stability),
        p!("analysis", weighted_inverse_constants),
        p!("analysis", infsup_robustness),
        p!("analysis", quasi_optimality),
        p!("oracles", fd_strong_residual),
        p!("oracles", dense_solver_agreement),
        p!("oracles", dense_eigen_agreement),
        p!("oracles", rhs_quadrature),
    ]
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_mat(r: &mut ChaCha8Rng) -> Matrix3<f64> {
    Matrix3::from_fn(|_, _| r.random_range(-1.0..1.0))
}

fn rand_vec(r: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| r.random_range(-1.0..1.0))
}

fn mesh(dim: usize, n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::structured(dim, n).expect("valid mesh"))
}

/// Random polynomial with exact derivatives through [`Jet`]s.
struct Poly {
    terms: Vec<([u8; 3], f64)>,
}

impl Poly {
    fn random(r: &mut ChaCha8Rng, dim: usize, degree: usize) -> Self {
        let terms = (0..=degree)
            .flat_map(|t| homogeneous_exponents(dim, t))
            .map(|e| (e, r.random_range(-1.0..1.0)))
            .collect();
        Self { terms }
    }

    fn jet(&self, x: &[f64; 3]) -> Jet {
        let vars = [Jet::var(x, 0), Jet::var(x, 1), Jet::var(x, 2)];
        self.terms.iter().fold(Jet::constant(0.0), |acc, (e, c)| {
            let mut m = Jet::constant(*c);
            for i in 0..3 {
                for _ in 0..e[i] {
                    m = m * vars[i];
                }
            }
            acc + m
        })
    }
}

pub fn mesh_invariants() -> Outcome {
    let mut worst_vol: f64 = 0.0;
    let mut ok = true;
    for (dim, n) in [(2, 1), (2, 4), (2, 6), (3, 1), (3, 3)] {
        let m = Mesh::structured(dim, n).expect("valid");
        let vol: f64 = (0..m.num_cells()).map(|c| m.cell_volume(c)).sum();
        worst_vol = worst_vol.max((vol - 1.0).abs());
        ok &= (0..m.num_cells()).all(|c| m.affine_map(c).det > 0.0);
        for f in 0..m.num_facets() {
            let [a, b] = m.facet_cells(f);
            ok &= a != usize::MAX && m.is_boundary_facet(f) == (b == usize::MAX);
        }
    }
    // kinks of the degenerate length field lie on facets for n divisible by 3
    let m = Mesh::structured(2, 6).expect("valid");
    let kinked = LengthField::Kinked;
    let mut affine_defect: f64 = 0.0;
    for c in 0..m.num_cells() {
        let vs = m.cell(c);
        let avg = vs.iter().map(|&v| kinked.eval(&m.vertex(v))).sum::<f64>() / vs.len() as f64;
        affine_defect = affine_defect.max((kinked.eval(&m.cell_centroid(c)) - avg).abs());
    }
    Outcome::new(
        ok && worst_vol <= 1e-12 && affine_defect <= 1e-12,
        format!("volume defect {worst_vol:.1e}, kinked length scale affine per cell to {affine_defect:.1e}"),
    )
}

/// `‖div Πσ - ϖ div σ‖` for a random polynomial field of degree beyond the
/// element's.
pub fn commuting_defect(dim: usize, n: usize, kind: ElementKind, seed: u64) -> f64 {
    let m = mesh(dim, n);
    let w = FiniteElementSpace::new(m.clone(), kind, 1).expect("supported");
    let target = ElementKind::p_disc(kind.div_degree().expect("H(div) kind"));
    let p = FiniteElementSpace::new(m.clone(), target, 1).expect("supported");
    let mut r = rng(seed);
    let deg = kind.poly_degree() + 2;
    let comps: Vec<Poly> = (0..dim).map(|_| Poly::random(&mut r, dim, deg)).collect();
    let field = |x: &[f64; 3]| {
        let mut v = [[0.0; 3]; 3];
        for (i, c) in comps.iter().enumerate() {
            v[0][i] = c.jet(x).v;
        }
        v
    };
    let div = |x: &[f64; 3]| [comps.iter().enumerate().map(|(i, c)| c.jet(x).g[i]).sum(), 0.0, 0.0];
    let coeffs = w.interpolate(&field, 12);
    let proj = p.l2_project(&div, 12);
    let rule = QuadratureRule::simplex(dim, 10);
    let mut s = 0.0;
    for c in 0..m.num_cells() {
        let (pts, wts) = cell_quadrature(&m, c, &rule);
        let a = w.evaluate(&coeffs, 0, c, &pts);
        let b = p.evaluate(&proj, 0, c, &pts);
        for q in 0..pts.len() {
            s += wts[q] * (a[q].1[0] - b[q].0[0]).powi(2);
        }
    }
    s.sqrt()
}

fn w_kinds(k: usize) -> [ElementKind; 2] {
    [ElementKind::rt(k), ElementKind::bdm(k + 1)]
}

pub fn commuting_diagram() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut seed = 10;
    for (dim, n) in [(2, 1), (3, 1), (2, 2), (2, 3)] {
        for k in 0..2 {
            for kind in w_kinds(k) {
                seed += 1;
                worst = worst.max(commuting_defect(dim, n, kind, seed));
            }
        }
    }
    Outcome::new(worst <= 1e-10, format!("max defect {worst:.2e} over RT_k, BDM_k+1, k = 0, 1, 2D n = 1..3, 3D n = 1"))
}

pub fn interpolant_reproduces_space() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut r = rng(20);
    for dim in [2, 3] {
        let m = mesh(dim, 2);
        for k in 0..2 {
            for kind in w_kinds(k) {
                // global polynomials of the full degree lie in BDM; RT_k contains P_k
                let deg = if kind.family == crate::fe_spaces::ElementFamily::RT { k } else { k + 1 };
                let comps: Vec<Poly> = (0..dim).map(|_| Poly::random(&mut r, dim, deg)).collect();
                let w = FiniteElementSpace::new(m.clone(), kind, 1).expect("supported");
                let coeffs = w.interpolate(
                    &|x| {
                        let mut v = [[0.0; 3]; 3];
                        for (i, c) in comps.iter().enumerate() {
                            v[0][i] = c.jet(x).v;
                        }
                        v
                    },
                    10,
                );
                let rule = QuadratureRule::simplex(dim, 8);
                let mut s = 0.0;
                for c in 0..m.num_cells() {
                    let (pts, wts) = cell_quadrature(&m, c, &rule);
                    let vals = w.evaluate(&coeffs, 0, c, &pts);
                    for q in 0..pts.len() {
                        for i in 0..dim {
                            s += wts[q] * (vals[q].0[i] - comps[i].jet(&pts[q]).v).powi(2);
                        }
                    }
                }
                worst = worst.max(s.sqrt());
            }
        }
    }
    Outcome::new(worst <= 1e-10, format!("max L2 reproduction error {worst:.2e}"))
}

pub fn interpolation_rate() -> Outcome {
    use std::f64::consts::PI;
    let field = |x: &[f64; 3]| {
        let mut v = [[0.0; 3]; 3];
        v[0][0] = (PI * x[0]).sin() * (PI * x[1]).cos();
        v[0][1] = (2.0 * x[0] + x[1]).exp();
        v
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for k in 0..2 {
        for kind in w_kinds(k) {
            let mut errs = Vec::new();
            for n in [4, 8, 16] {
                let m = mesh(2, n);
                let w = FiniteElementSpace::new(m.clone(), kind, 1).expect("supported");
                let coeffs = w.interpolate(&field, 10);
                let rule = QuadratureRule::simplex(2, 10);
                let mut s = 0.0;
                for c in 0..m.num_cells() {
                    let (pts, wts) = cell_quadrature(&m, c, &rule);
                    let vals = w.evaluate(&coeffs, 0, c, &pts);
                    for q in 0..pts.len() {
                        let f = field(&pts[q]);
                        s += wts[q] * ((vals[q].0[0] - f[0][0]).powi(2) + (vals[q].0[1] - f[0][1]).powi(2));
                    }
                }
                errs.push(s.sqrt());
            }
            let rate = (errs[1] / errs[2]).log2();
            let want = kind.poly_degree().min(k + 1) as f64 - 0.1;
            ok &= rate >= want;
            detail.push(format!("{} {rate:.2}", kind.name()));
        }
    }
    Outcome::new(ok, format!("L2 interpolation rates: {}", detail.join(", ")))
}

pub fn operator_identities() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let v = rand_vec(&mut r);
        let s = rand_mat(&mut r);
        worst = worst.max((asym(&asym_adjoint(&v, 3), 3) - 2.0 * v).amax());
        worst = worst.max((asym_adjoint(&asym(&s, 3), 3) - (s - s.transpose())).amax());
        // planar: only the out-of-plane rotation and the leading 2×2 block
        let v2 = Vector3::new(0.0, 0.0, v[2]);
        worst = worst.max((asym(&asym_adjoint(&v2, 2), 2) - 2.0 * v2).amax());
        let s2 = Matrix3::from_fn(|i, j| if i < 2 && j < 2 { s[(i, j)] } else { 0.0 });
        worst = worst.max((asym_adjoint(&asym(&s2, 2), 2) - (s2 - s2.transpose())).amax());
    }
    Outcome::new(worst <= 1e-14, format!("max deviation {worst:.1e} over 10^4 samples"))
}

pub fn material_roundtrip() -> Outcome {
    let mut r = rng(2);
    let mut per_lambda = Vec::new();
    let mut asym_worst: f64 = 0.0;
    for lambda in [1.0, 0.0, 1e4] {
        let m = MaterialModel::with(lambda, LengthField::Constant(1.0));
        let mut worst: f64 = 0.0;
        for dim in [2, 3] {
            for _ in 0..1000 {
                let mut t = rand_mat(&mut r);
                if dim == 2 {
                    t = Matrix3::from_fn(|i, j| if i < 2 && j < 2 { t[(i, j)] } else { 0.0 });
                }
                let back = m.apply_a_sigma(&m.apply_a_sigma_inv(&t, dim), dim);
                worst = worst.max((back - t).amax());
                let mut s = rand_mat(&mut r);
                if dim == 2 {
                    s = Matrix3::from_fn(|i, j| if i < 2 && j < 2 { s[(i, j)] } else { 0.0 });
                }
                let lhs = m.apply_a_sigma(&t, dim).component_mul(&s).sum();
                let rhs = m.apply_a_sigma(&s, dim).component_mul(&t).sum();
                asym_worst = asym_worst.max((lhs - rhs).abs());
            }
        }
        per_lambda.push((lambda, worst));
    }
    let ok = per_lambda.iter().all(|&(_, w)| w <= 1e-12) && asym_worst <= 1e-13;
    let rt: Vec<String> = per_lambda.iter().map(|(l, w)| format!("{w:.1e} at lambda_sigma={l}")).collect();
    Outcome::new(ok, format!("round-trip {}; symmetry {asym_worst:.1e}", rt.join(", ")))
}

/// Pointwise comparison of `S_block(σ, ω) = (-div σ, Sσ - div ω)` with
/// `Φ diag(-div, -div) Φ⁻¹ (σ, ω)` for random quadratic matrix fields.
pub fn phi_factorization_defect(samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let sig: Vec<Poly> = (0..9).map(|_| Poly::random(&mut r, 3, 2)).collect();
    let om: Vec<Poly> = (0..9).map(|_| Poly::random(&mut r, 3, 2)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = [r.random_range(0.0..1.0), r.random_range(0.0..1.0), r.random_range(0.0..1.0)];
        let xv = Vector3::from(x);
        let sj: Vec<Jet> = sig.iter().map(|p| p.jet(&x)).collect();
        let oj: Vec<Jet> = om.iter().map(|p| p.jet(&x)).collect();
        let e = |v: &[Jet], i: usize, j: usize| v[3 * i + j];
        let smat = Matrix3::from_fn(|i, j| e(&sj, i, j).v);
        let omat = Matrix3::from_fn(|i, j| e(&oj, i, j).v);
        let div = |v: &[Jet]| Vector3::from_fn(|i, _| (0..3).map(|j| e(v, i, j).g[j]).sum::<f64>());
        let lhs = (-div(&sj), asym(&smat, 3) - div(&oj));
        // Φ⁻¹(σ, ω) = (σ, ω - Uσ) with U acting on the first index
        let xs = [Jet::var(&x, 0), Jet::var(&x, 1), Jet::var(&x, 2)];
        let mut shifted = Vec::with_capacity(9);
        for i in 0..3 {
            let (n, p) = ((i + 1) % 3, (i + 2) % 3);
            for j in 0..3 {
                shifted.push(e(&oj, i, j) - (xs[n] * e(&sj, p, j) - xs[p] * e(&sj, n, j)));
            }
        }
        let check = apply_phi_inv(&(smat, omat), &xv).1 - Matrix3::from_fn(|i, j| e(&shifted, i, j).v);
        worst = worst.max(check.amax());
        let rhs = apply_phi_vec(&(-div(&sj), -div(&shifted)), &xv);
        worst = worst.max((lhs.0 - rhs.0).amax()).max((lhs.1 - rhs.1).amax());
    }
    worst
}

pub fn phi_factorization() -> Outcome {
    let worst = (0..10).map(|s| phi_factorization_defect(100, 30 + s)).fold(0.0, f64::max);
    Outcome::new(worst <= 1e-10, format!("max pointwise defect {worst:.1e} over 10 random fields x 100 points"))
}

pub fn manufactured_solutions() -> Outcome {
    let mut r = rng(3);
    let m = MaterialModel::default();
    let s3 = ManufacturedSolution::new(3, SolutionCase::Smooth, m.clone());
    let centre = s3.eval(&[0.5; 3]).u;
    let centre_err = (centre - Vector3::repeat(1.0 / 16.0)).amax();
    let mut boundary: f64 = 0.0;
    let mut div: f64 = 0.0;
    for dim in [2, 3] {
        for case in [SolutionCase::Smooth, SolutionCase::DivFree] {
            let s = ManufacturedSolution::new(dim, case, m.clone());
            for _ in 0..1000 {
                let mut x = [r.random_range(0.0..1.0), r.random_range(0.0..1.0), 0.0];
                if dim == 3 {
                    x[2] = r.random_range(0.0..1.0);
                }
                let f = s.eval(&x);
                if case == SolutionCase::DivFree {
                    div = div.max(f.grad_u.trace().abs());
                }
                let face = r.random_range(0..dim);
                x[face] = if r.random_bool(0.5) { 0.0 } else { 1.0 };
                let f = s.eval(&x);
                boundary = boundary.max(f.u.amax()).max(f.r.amax());
            }
        }
    }
    Outcome::new(
        centre_err <= 1e-15 && boundary <= 1e-14 && div <= 1e-12,
        format!("u(1/2) defect {centre_err:.1e}, boundary trace {boundary:.1e}, div u {div:.1e}"),
    )
}

pub fn strong_coupling_inclusion() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [1, 2] {
        for k in 0..2 {
            for m in [Method::SC_RT, Method::SC_BDM] {
                let p = DiscreteProblem::new(mesh(2, n), m, k, MaterialModel::default()).expect("valid");
                worst = worst.max(p.strong_coupling_residual());
            }
        }
    }
    let control = DiscreteProblem::new(mesh(2, 2), Method::WC_BDM, 0, MaterialModel::default())
        .expect("valid")
        .strong_coupling_residual();
    Outcome::new(
        worst <= 1e-10 && control > 1e-3,
        format!("SC max projection residual {worst:.1e}; WC-BDM control {control:.2e}"),
    )
}

pub fn kernel_coercivity_is_mesh_independent() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for m in Method::ALL {
        let vals: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&n| {
                let p = DiscreteProblem::new(mesh(2, n), m, 0, MaterialModel::default()).expect("valid");
                kernel_coercivity(&p).unwrap_or(f64::NAN)
            })
            .collect();
        ok &= vals.iter().all(|v| *v > 0.0) && vals[2] >= 0.5 * vals[0];
        detail.push(format!("{m} {:.3}/{:.3}/{:.3}", vals[0], vals[1], vals[2]));
    }
    Outcome::new(ok, format!("kernel coercivity n=2/4/8: {}", detail.join(", ")))
}

/// `max |∇·σ_h + ϖ f_u|` of strongly coupled solutions, 2D `n = 4`.
pub fn momentum_balance() -> Outcome {
    let mut worst: f64 = 0.0;
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    for k in 0..2 {
        for m in [Method::SC_RT, Method::SC_BDM] {
            let p = DiscreteProblem::new(mesh(2, 4), m, k, mat.clone()).expect("valid");
            // (f, u') = (ϖf, u') for test functions in X^u, so the load vector
            // is already that of the projected data
            let sys = p.assemble(&|x| sol.load(x));
            let s = match solve_direct(&sys, &SolverOptions::default()) {
                Ok(s) => s,
                Err(e) => return Outcome::new(false, e.to_string()),
            };
            let pf = p.u.l2_project(&|x| sol.load(x).0.into(), 10);
            worst = worst.max(momentum_balance_defect(&p, &s.p, &pf));
        }
    }
    Outcome::new(worst <= 1e-8, format!("max |div sigma_h + proj f_u| = {worst:.1e} (SC, k = 0, 1)"))
}

fn minres_solve(p: &DiscreteProblem, load: &(dyn Fn(&[f64; 3]) -> (Vector3<f64>, Vector3<f64>) + Sync), tol: f64) -> Result<crate::solver::Solution, String> {
    let (sys, pp) = p.assemble_with_preconditioner(load);
    let pc = BlockPreconditioner::new(pp).map_err(|e| e.to_string())?;
    let opts = SolverOptions { kind: SolverKind::Minres, tolerance: tol, ..Default::default() };
    solve_minres(&sys, &pc, &opts).map_err(|e| e.to_string())
}

pub fn minres_matches_direct() -> Outcome {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    let mut worst: f64 = 0.0;
    for m in Method::ALL {
        let p = DiscreteProblem::new(mesh(2, 4), m, 0, mat.clone()).expect("valid");
        let sys = p.assemble(&|x| sol.load(x));
        let d = match solve_direct(&sys, &SolverOptions::default()) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, e.to_string()),
        };
        let it = match minres_solve(&p, &|x| sol.load(x), 1e-10) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, e),
        };
        worst = worst.max(relative_distance(&d, &it));
    }
    Outcome::new(worst <= 1e-8, format!("max relative distance {worst:.1e}, 2D n = 4, k = 0"))
}

pub fn relative_distance(a: &crate::solver::Solution, b: &crate::solver::Solution) -> f64 {
    let za: Vec<f64> = a.p.iter().chain(&a.u).copied().collect();
    let zb: Vec<f64> = b.p.iter().chain(&b.u).copied().collect();
    let d: f64 = za.iter().zip(&zb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / za.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
}

pub fn minres_stopping_is_monotone() -> Outcome {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    let p = DiscreteProblem::new(mesh(2, 8), Method::WC_RT, 0, mat).expect("valid");
    let (sys, pp) = p.assemble_with_preconditioner(&|x| sol.load(x));
    let pc = match BlockPreconditioner::new(pp) {
        Ok(pc) => pc,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let b = sys.symmetric_rhs();
    let k = sys.symmetric_matrix();
    let apply = |v: &[f64]| k.mul_vec(v);
    let prec = |v: &[f64]| pc.apply(v);
    let (_, loose) = minres(&apply, &prec, &b, 1e-1, 1000);
    let (_, tight) = minres(&apply, &prec, &b, 1e-10, 1000);
    Outcome::new(loose < tight, format!("iterations: {loose} at 1e-1, {tight} at 1e-10"))
}

pub fn sc_stability() -> Outcome {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    let mut ok = true;
    let mut detail = Vec::new();
    for m in [Method::SC_RT, Method::SC_BDM] {
        let mut vals = Vec::new();
        for n in [4, 8, 16, 32] {
            let p = DiscreteProblem::new(mesh(2, n), m, 0, mat.clone()).expect("valid");
            let sys = p.assemble(&|x| sol.load(x));
            match solve_direct(&sys, &SolverOptions::default()) {
                Ok(s) => vals.push(discrete_stability_norm(&sys.m_a, &sys.b, &s.p, &s.u)),
                Err(e) => return Outcome::new(false, e.to_string()),
            }
        }
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        ok &= hi <= 1.5 * lo;
        detail.push(format!("{m} {}", vals.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join("/")));
    }
    Outcome::new(ok, format!("stability norm n=4..32: {}", detail.join(", ")))
}

/// Worst weighted inverse-estimate ratios `(k = 0, k = 1, constant ℓ)` over the
/// degenerate field on `n ∈ {6, 12}` (2D and 3D) and 100 random nonnegative
/// piecewise-linear fields.
pub fn weighted_inverse_study() -> (f64, f64, f64) {
    let mut worst = [0.0f64; 2];
    let mut fields: Vec<(Mesh, LengthField)> = Vec::new();
    for (dim, n) in [(2, 6), (2, 12), (3, 6)] {
        fields.push((Mesh::structured(dim, n).expect("valid"), LengthField::Kinked));
    }
    let mut r = rng(47);
    for i in 0..100 {
        let (dim, n) = if i % 4 == 3 { (3, 3) } else { (2, 6) };
        let values_mesh = Mesh::structured(dim, n).expect("valid");
        let values: Vec<f64> = values_mesh
            .vertices()
            .iter()
            .map(|_| if r.random_bool(0.3) { 0.0 } else { r.random_range(0.0..1.0) })
            .collect();
        fields.push((values_mesh, LengthField::PiecewiseLinear { dim, n, values }));
    }
    for (m, ell) in &fields {
        for k in 0..2 {
            worst[k] = worst[k].max(weighted_inverse_ratio(m, ell, k));
        }
    }
    let mut constant: f64 = 0.0;
    for c in [1.0, 0.3, 1e-4] {
        for k in 0..2 {
            let v = weighted_inverse_ratio(&Mesh::structured(2, 4).expect("valid"), &LengthField::Constant(c), k);
            constant = constant.max((v - 1.0).abs());
        }
    }
    (worst[0], worst[1], constant)
}

pub fn weighted_inverse_constants() -> Outcome {
    let (r0, r1, c) = weighted_inverse_study();
    Outcome::new(
        r0 <= 2.0 && r1 <= 5f64.sqrt() && c <= 1e-12,
        format!("max ratio k=0 {r0:.4} (bound 2), k=1 {r1:.4} (bound {:.4}); constant-ell defect {c:.1e}", 5f64.sqrt()),
    )
}

/// `β_h` for the weakly coupled pairings on 2D `n ∈ {2, 4, 8}` and
/// `ℓ ∈ {1, 10⁻², 0}`, rows indexed `[method][ell][n]`, plus the mismatched
/// control (`RT_0` stress rows against `P_1` rotations).
pub struct InfSupStudy {
    pub levels: [usize; 3],
    pub ells: [f64; 3],
    pub beta: Vec<(Method, [[f64; 3]; 3])>,
    pub control: [f64; 3],
}

pub fn infsup_study() -> InfSupStudy {
    let levels = [2, 4, 8];
    let ells = [1.0, 1e-2, 0.0];
    let mut beta = Vec::new();
    for m in [Method::WC_RT, Method::WC_BDM] {
        let mut t = [[0.0; 3]; 3];
        for (i, &l) in ells.iter().enumerate() {
            for (j, &n) in levels.iter().enumerate() {
                let p = DiscreteProblem::new(mesh(2, n), m, 0, MaterialModel::with(1.0, LengthField::Constant(l)))
                    .expect("valid");
                t[i][j] = infsup_constant(&p).unwrap_or(f64::NAN);
            }
        }
        beta.push((m, t));
    }
    let mut control = [0.0; 3];
    for (j, &n) in levels.iter().enumerate() {
        let layout = SpaceLayout { sigma: ElementKind::rt(0), r: ElementKind::p_disc(1), ..SpaceLayout::for_method(Method::WC_BDM, 0) };
        let p = DiscreteProblem::with_layout(mesh(2, n), Method::WC_BDM, 0, layout, MaterialModel::default()).expect("valid");
        control[j] = infsup_constant(&p).unwrap_or(f64::NAN);
    }
    InfSupStudy { levels, ells, beta, control }
}

impl InfSupStudy {
    /// `β(n=8) ≥ β(n=2)/2` for every pairing and `ℓ`.
    pub fn no_decay(&self) -> bool {
        self.beta.iter().all(|(_, t)| t.iter().all(|row| row[2] >= 0.5 * row[0]))
    }

    /// Largest relative spread of `β` across `ℓ` at fixed `n`.
    pub fn ell_spread(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (_, t) in &self.beta {
            for j in 0..3 {
                let col = [t[0][j], t[1][j], t[2][j]];
                let hi = col.iter().cloned().fold(0.0, f64::max);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                worst = worst.max((hi - lo) / hi);
            }
        }
        worst
    }

    /// The mismatched pairing loses inf-sup stability: either `β_h` halves
    /// over the ladder or it is zero to round-off from the start.
    pub fn control_decays(&self) -> bool {
        self.control[2] * 2.0 < self.control[0] || self.control[2] <= 1e-8
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (m, t) in &self.beta {
            s.push_str(&format!("{m}:"));
            for (i, row) in t.iter().enumerate() {
                s.push_str(&format!(" l={} [{:.4} {:.4} {:.4}]", self.ells[i], row[0], row[1], row[2]));
            }
            s.push_str("; ");
        }
        s.push_str(&format!(
            "spread {:.3}; control [{:.3e} {:.3e} {:.3e}]",
            self.ell_spread(),
            self.control[0],
            self.control[1],
            self.control[2]
        ));
        s
    }
}

pub fn infsup_robustness() -> Outcome {
    let st = infsup_study();
    Outcome::new(st.no_decay() && st.ell_spread() <= 0.1 && st.control_decays(), st.summary())
}

/// Ratio of the discrete composite error to the composite error of the
/// canonical interpolant, SC families, 2D `n ∈ {4, 8, 16}`.
pub fn quasi_optimality() -> Outcome {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    let exact = |x: &[f64; 3]| sol.eval(x);
    let mut ok = true;
    let mut detail = Vec::new();
    for m in [Method::SC_RT, Method::SC_BDM] {
        let mut ratios = Vec::new();
        for n in [4, 8, 16] {
            let p = DiscreteProblem::new(mesh(2, n), m, 0, mat.clone()).expect("valid");
            let sys = p.assemble(&|x| sol.load(x));
            let s = match solve_direct(&sys, &SolverOptions::default()) {
                Ok(s) => s,
                Err(e) => return Outcome::new(false, e.to_string()),
            };
            let e_h = error_norms(&p, &s.p, &s.u, &exact, false).composite;
            let pi = p.interpolate_p(&exact, 12);
            let ui = p.project_u(&exact, 12);
            let e_i = error_norms(&p, &pi, &ui, &exact, false).composite;
            ratios.push(e_h / e_i);
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        ok &= hi <= 2.0 * lo;
        detail.push(format!("{m} {:.3}/{:.3}/{:.3}", ratios[0], ratios[1], ratios[2]));
    }
    Outcome::new(ok, format!("discrete/interpolant error ratio n=4/8/16: {}", detail.join(", ")))
}

pub fn fd_strong_residual() -> Outcome {
    let mut r = rng(5);
    let mut detail = Vec::new();
    let mut ok = true;
    for dim in [2, 3] {
        for case in [SolutionCase::Smooth, SolutionCase::DivFree] {
            let s = ManufacturedSolution::new(dim, case, MaterialModel::default());
            let mut worst: f64 = 0.0;
            let mut order = f64::INFINITY;
            for _ in 0..20 {
                let x = [r.random_range(0.05..0.95), r.random_range(0.05..0.95), r.random_range(0.05..0.95)];
                let a = oracles::fd_discrepancy(&s, &x, 2e-4);
                let b = oracles::fd_discrepancy(&s, &x, 1e-4);
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        worst = worst.max(b);
                        order = order.min((a / b).log2());
                    }
                    (Err(e), _) | (_, Err(e)) => return Outcome::new(false, e.to_string()),
                }
            }
            // the smooth bundle meets an absolute bound; the divergence-free
            // one has larger third derivatives and is checked for order 2
            ok &= order >= 1.9 && (case == SolutionCase::DivFree || worst <= 1e-6);
            detail.push(format!("{dim}D {case:?} {worst:.1e} (order {order:.2})"));
        }
    }
    Outcome::new(ok, format!("closed-form vs central differences at step 1e-4: {}", detail.join(", ")))
}

pub fn dense_solver_agreement() -> Outcome {
    let mat = MaterialModel::default();
    let sol = ManufacturedSolution::new(2, SolutionCase::Smooth, mat.clone());
    let mut worst: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for m in Method::ALL {
        let p = DiscreteProblem::new(mesh(2, 2), m, 0, mat.clone()).expect("valid");
        let sys = p.assemble(&|x| sol.load(x));
        let (dp, du) = match oracles::dense_small_system(&sys) {
            Ok(z) => z,
            Err(e) => return Outcome::new(false, format!("{m}: {e}")),
        };
        let s = match solve_direct(&sys, &SolverOptions::default()) {
            Ok(s) => s,
            Err(e) => return Outcome::new(false, e.to_string()),
        };
        residual = residual.max(s.report.final_relative_residual);
        let dense = crate::solver::Solution { p: dp, u: du, report: s.report.clone() };
        worst = worst.max(relative_distance(&dense, &s));
    }
    Outcome::new(
        worst <= 1e-10 && residual <= 1e-10,
        format!("sparse vs dense relative distance {worst:.1e}, residual {residual:.1e}"),
    )
}

pub fn dense_eigen_agreement() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut kmin = f64::INFINITY;
    for m in Method::ALL {
        let p = DiscreteProblem::new(mesh(2, 2), m, 0, MaterialModel::default()).expect("valid");
        match (oracles::dense_infsup(&p), infsup_constant(&p)) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            _ => return Outcome::new(false, format!("{m}: eigen-solve failed")),
        }
        let p1 = DiscreteProblem::new(mesh(2, 1), m, 0, MaterialModel::default()).expect("valid");
        match oracles::dense_kernel_coercivity(&p1) {
            Ok((plain, _)) => kmin = kmin.min(plain),
            Err(e) => return Outcome::new(false, e.to_string()),
        }
    }
    Outcome::new(
        worst <= 1e-8 && kmin > 0.0,
        format!("beta_h SVD vs Schur route {worst:.1e}; min kernel eigenvalue of M_A on n=1 {kmin:.3e}"),
    )
}

pub fn rhs_quadrature() -> Outcome {
    let sol = ManufacturedSolution::new(3, SolutionCase::Smooth, MaterialModel::default());
    let p = DiscreteProblem::new(mesh(3, 2), Method::WC_BDM, 0, MaterialModel::default()).expect("valid");
    let d = oracles::rhs_quadrature_refinement(&p, &|x| sol.load(x));
    Outcome::new(d <= 1e-9, format!("degree 10 vs 12 load vectors differ by {d:.1e} (3D n = 2)"))
}
