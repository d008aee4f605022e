//! Second-order forward-mode jets: value, gradient and Hessian in three
//! variables. Used to differentiate manufactured solutions exactly.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, ..Self::default() }
    }

    /// The coordinate function `x_i`.
    pub fn var(x: &[f64; 3], i: usize) -> Self {
        let mut j = Self::constant(x[i]);
        j.g[i] = 1.0;
        j
    }

    /// `f(x_i)` given `f`, `f'` and `f''` at `x_i`.
    pub fn univariate(i: usize, f: f64, df: f64, d2f: f64) -> Self {
        let mut j = Self::constant(f);
        j.g[i] = df;
        j.h[i][i] = d2f;
        j
    }

    /// Chain rule for a scalar function with derivatives `(f, f', f'')` at `self.v`.
    fn compose(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(f);
        for a in 0..3 {
            out.g[a] = df * self.g[a];
            for b in 0..3 {
                out.h[a][b] = df * self.h[a][b] + d2f * self.g[a] * self.g[b];
            }
        }
        out
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn scale(self, a: f64) -> Self {
        let mut out = self;
        out.v *= a;
        for i in 0..3 {
            out.g[i] *= a;
            for k in 0..3 {
                out.h[i][k] *= a;
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut out = self;
        out.v += o.v;
        for i in 0..3 {
            out.g[i] += o.g[i];
            for k in 0..3 {
                out.h[i][k] += o.h[i][k];
            }
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..3 {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for k in 0..3 {
                out.h[i][k] = self.h[i][k] * o.v
                    + self.g[i] * o.g[k]
                    + self.g[k] * o.g[i]
                    + self.v * o.h[i][k];
            }
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, a: f64) -> Jet {
        self.scale(a)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, a: f64) -> Jet {
        let mut out = self;
        out.v += a;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: &[f64; 3]) -> Jet {
        let a = Jet::var(x, 0);
        let b = Jet::var(x, 1);
        let c = Jet::var(x, 2);
        (a * b).sin() * c + (b * 2.0).cos() * a * a - c
    }

    #[test]
    fn matches_finite_differences() {
        let x = [0.3, 0.7, -0.4];
        let j = f(&x);
        let h = 1e-4;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let (p, m) = (f(&xp), f(&xm));
            assert!(((p.v - m.v) / (2.0 * h) - j.g[i]).abs() < 1e-7);
            for k in 0..3 {
                let fd = (p.g[k] - m.g[k]) / (2.0 * h);
                assert!((fd - j.h[i][k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn hessian_symmetric() {
        let j = f(&[0.1, 0.2, 0.3]);
        for i in 0..3 {
            for k in 0..3 {
                assert!((j.h[i][k] - j.h[k][i]).abs() < 1e-14);
            }
        }
    }
}
