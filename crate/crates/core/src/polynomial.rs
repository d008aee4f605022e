//! Monomial bases in local cell coordinates.

/// Monomials `ξ^α` with `|α| ≤ degree` in `dim` variables, ordered by total
/// degree and then lexicographically.
#[derive(Debug, Clone)]
pub struct Monomials {
    pub dim: usize,
    pub degree: usize,
    pub exps: Vec<[u8; 3]>,
}

impl Monomials {
    pub fn new(dim: usize, degree: usize) -> Self {
        let mut exps = Vec::new();
        for total in 0..=degree {
            exps.extend(homogeneous_exponents(dim, total));
        }
        Self { dim, degree, exps }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Index of the monomial with exponents `e`, if present.
    pub fn index_of(&self, e: [u8; 3]) -> Option<usize> {
        self.exps.iter().position(|&x| x == e)
    }

    /// Values of every monomial at `xi`.
    pub fn eval(&self, xi: &[f64; 3], out: &mut [f64]) {
        let pw = powers(xi, self.degree);
        for (o, e) in out.iter_mut().zip(&self.exps) {
            *o = pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize];
        }
    }

    /// Gradients of every monomial at `xi` (with respect to `xi`).
    pub fn eval_grad(&self, xi: &[f64; 3], out: &mut [[f64; 3]]) {
        let pw = powers(xi, self.degree);
        for (o, e) in out.iter_mut().zip(&self.exps) {
            for c in 0..3 {
                if c >= self.dim || e[c] == 0 {
                    o[c] = 0.0;
                    continue;
                }
                let mut v = e[c] as f64;
                for j in 0..3 {
                    let p = if j == c { e[j] - 1 } else { e[j] };
                    v *= pw[j][p as usize];
                }
                o[c] = v;
            }
        }
    }
}

/// Exponent tuples of total degree exactly `total` in `dim` variables.
pub fn homogeneous_exponents(dim: usize, total: usize) -> Vec<[u8; 3]> {
    let t = total as u8;
    let mut out = Vec::new();
    match dim {
        0 => {
            if total == 0 {
                out.push([0, 0, 0]);
            }
        }
        1 => out.push([t, 0, 0]),
        2 => {
            for a in (0..=t).rev() {
                out.push([a, t - a, 0]);
            }
        }
        3 => {
            for a in (0..=t).rev() {
                for b in (0..=t - a).rev() {
                    out.push([a, b, t - a - b]);
                }
            }
        }
        _ => panic!("unsupported dimension {dim}"),
    }
    out
}

fn powers(xi: &[f64; 3], degree: usize) -> [[f64; 8]; 3] {
    debug_assert!(degree < 8);
    let mut pw = [[1.0; 8]; 3];
    for c in 0..3 {
        for p in 1..=degree {
            pw[c][p] = pw[c][p - 1] * xi[c];
        }
    }
    pw
}

/// Number of monomials of degree at most `degree` in `dim` variables.
pub fn count(dim: usize, degree: usize) -> usize {
    match dim {
        0 => 1,
        1 => degree + 1,
        2 => (degree + 1) * (degree + 2) / 2,
        3 => (degree + 1) * (degree + 2) * (degree + 3) / 6,
        _ => panic!("unsupported dimension {dim}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_closed_form() {
        for dim in 1..=3 {
            for deg in 0..=4 {
                assert_eq!(Monomials::new(dim, deg).len(), count(dim, deg));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let m = Monomials::new(3, 4);
        let x = [0.3, -0.7, 0.45];
        let mut g = vec![[0.0; 3]; m.len()];
        m.eval_grad(&x, &mut g);
        let h = 1e-6;
        for c in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let mut vp = vec![0.0; m.len()];
            let mut vm = vec![0.0; m.len()];
            m.eval(&xp, &mut vp);
            m.eval(&xm, &mut vm);
            for i in 0..m.len() {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!((fd - g[i][c]).abs() < 1e-8);
            }
        }
    }
}
