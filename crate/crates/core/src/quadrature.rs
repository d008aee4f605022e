//! Quadrature on the unit reference simplex.
//!
//! Rules are conical (collapsed) products of one-dimensional Gauss-Jacobi
//! rules, so any polynomial degree is available in dimensions 0 through 3.
//! The reference simplex is `{ξ ≥ 0, Σξ ≤ 1}` and the weights of a rule sum
//! to its volume `1/d!`.

use nalgebra::{DMatrix, SymmetricEigen};

/// Points and weights on the reference simplex of dimension `dim`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Rule exact for polynomials of total degree `degree` on the `dim`-simplex.
    pub fn simplex(dim: usize, degree: usize) -> Self {
        let n = degree / 2 + 1;
        let (points, weights) = match dim {
            0 => (vec![[0.0; 3]], vec![1.0]),
            1 => {
                let (t, w) = gauss_jacobi_unit(n, 0);
                (t.iter().map(|&a| [a, 0.0, 0.0]).collect(), w)
            }
            2 => {
                let (ta, wa) = gauss_jacobi_unit(n, 1);
                let (tb, wb) = gauss_jacobi_unit(n, 0);
                let mut pts = Vec::with_capacity(n * n);
                let mut wts = Vec::with_capacity(n * n);
                for (a, wa) in ta.iter().zip(&wa) {
                    for (b, wb) in tb.iter().zip(&wb) {
                        pts.push([*a, b * (1.0 - a), 0.0]);
                        wts.push(wa * wb);
                    }
                }
                (pts, wts)
            }
            3 => {
                let (ta, wa) = gauss_jacobi_unit(n, 2);
                let (tb, wb) = gauss_jacobi_unit(n, 1);
                let (tc, wc) = gauss_jacobi_unit(n, 0);
                let mut pts = Vec::with_capacity(n * n * n);
                let mut wts = Vec::with_capacity(n * n * n);
                for (a, wa) in ta.iter().zip(&wa) {
                    for (b, wb) in tb.iter().zip(&wb) {
                        for (c, wc) in tc.iter().zip(&wc) {
                            pts.push([*a, b * (1.0 - a), c * (1.0 - a) * (1.0 - b)]);
                            wts.push(wa * wb * wc);
                        }
                    }
                }
                (pts, wts)
            }
            _ => panic!("no simplex quadrature in dimension {dim}"),
        };
        Self {
            dim,
            degree,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Jacobi rule with `n` points for `∫_0^1 (1-t)^alpha f(t) dt`.
pub fn gauss_jacobi_unit(n: usize, alpha: u32) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(n, alpha as f64);
    let scale = 0.5f64.powi(alpha as i32 + 1);
    let t = x.iter().map(|x| 0.5 * (1.0 + x)).collect();
    let w = w.iter().map(|w| w * scale).collect();
    (t, w)
}

/// Golub-Welsch for the weight `(1-x)^alpha` on `[-1, 1]`.
fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let diag = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        jac[(i, i)] = diag;
        if i + 1 < n {
            let m = k + 1.0;
            let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
            let den = (2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0);
            let off = (num / den).sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    // μ0 = ∫(1-x)^α dx = 2^(α+1)/(α+1) for β = 0
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    /// ∫ ξ^α over the unit simplex is α! / (|α| + d)!.
    fn exact_monomial(exps: &[usize]) -> f64 {
        let d = exps.len();
        let total: usize = exps.iter().sum();
        exps.iter().map(|&a| factorial(a)).product::<f64>() / factorial(total + d)
    }

    #[test]
    fn weights_sum_to_volume() {
        for dim in 1..=3 {
            for degree in 0..=12 {
                let q = QuadratureRule::simplex(dim, degree);
                let s: f64 = q.weights.iter().sum();
                assert!((s - 1.0 / factorial(dim)).abs() < 1e-14, "dim {dim} deg {degree}");
            }
        }
    }

    #[test]
    fn exact_on_monomials_up_to_degree() {
        for dim in 1..=3usize {
            for degree in [2usize, 5, 8, 12] {
                let q = QuadratureRule::simplex(dim, degree);
                let mut exps = vec![0usize; dim];
                loop {
                    let total: usize = exps.iter().sum();
                    if total <= degree {
                        let approx: f64 = q
                            .points
                            .iter()
                            .zip(&q.weights)
                            .map(|(p, w)| {
                                w * exps
                                    .iter()
                                    .enumerate()
                                    .map(|(i, &a)| p[i].powi(a as i32))
                                    .product::<f64>()
                            })
                            .sum();
                        let exact = exact_monomial(&exps);
                        assert!(
                            (approx - exact).abs() <= 1e-13 * exact.max(1e-3),
                            "dim {dim} degree {degree} exps {exps:?}: {approx} vs {exact}"
                        );
                    }
                    // odometer over exponents 0..=degree
                    let mut i = 0;
                    loop {
                        if i == dim {
                            break;
                        }
                        exps[i] += 1;
                        if exps[i] <= degree {
                            break;
                        }
                        exps[i] = 0;
                        i += 1;
                    }
                    if i == dim {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn points_inside_simplex() {
        let q = QuadratureRule::simplex(3, 10);
        for p in &q.points {
            assert!(p.iter().all(|&c| c > 0.0));
            assert!(p.iter().sum::<f64>() < 1.0);
        }
    }
}
