use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::linalg::DofVector;

/// `Σ_p c_p (log r)^p / p!` with angular coefficient vectors `c_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPolynomial {
    pub coeffs: Vec<DofVector>,
}

impl LogPolynomial {
    pub fn new(coeffs: Vec<DofVector>) -> Self {
        assert!(!coeffs.is_empty(), "log-polynomial needs a coefficient");
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Derivative with respect to `log r`.
    pub fn derivative(&self) -> Option<LogPolynomial> {
        (self.coeffs.len() > 1).then(|| Self::new(self.coeffs[1..].to_vec()))
    }

    pub fn conj(&self) -> LogPolynomial {
        Self::new(self.coeffs.iter().map(|c| crate::linalg::conj(c)).collect())
    }

    /// Coefficient vector at `t = log r`.
    pub fn eval(&self, t: f64) -> DofVector {
        let n = self.coeffs[0].len();
        let mut out = vec![c64::new(0.0, 0.0); n];
        let mut power = 1.0;
        for (p, c) in self.coeffs.iter().enumerate() {
            if p > 0 {
                power *= t / p as f64;
            }
            crate::linalg::axpy(c64::new(power, 0.0), c, &mut out);
        }
        out
    }
}

/// Scalar polynomial in `t` in the divided-power basis `t^p / p!`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ScalarLogPoly(pub Vec<c64>);

impl ScalarLogPoly {
    /// `pair(P, R)` expanded as a polynomial: `(t^a/a!)(t^b/b!) = C(a+b, a) t^(a+b)/(a+b)!`.
    pub fn product<F>(p: &LogPolynomial, r: &LogPolynomial, mut pair: F) -> Self
    where
        F: FnMut(&[c64], &[c64]) -> c64,
    {
        let mut out = vec![c64::new(0.0, 0.0); p.coeffs.len() + r.coeffs.len() - 1];
        for (a, pa) in p.coeffs.iter().enumerate() {
            for (b, rb) in r.coeffs.iter().enumerate() {
                out[a + b] += binomial(a + b, a) * pair(pa, rb);
            }
        }
        Self(out)
    }

    pub fn add_scaled(&mut self, alpha: c64, other: &ScalarLogPoly) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), c64::new(0.0, 0.0));
        }
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            *s += alpha * o;
        }
    }

    pub fn constant(&self) -> c64 {
        self.0.first().copied().unwrap_or_default()
    }

    #[cfg(test)]
    pub fn eval(&self, t: f64) -> c64 {
        let mut power = 1.0;
        let mut s = c64::new(0.0, 0.0);
        for (p, c) in self.0.iter().enumerate() {
            if p > 0 {
                power *= t / p as f64;
            }
            s += c * power;
        }
        s
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: &[f64]) -> LogPolynomial {
        LogPolynomial::new(v.iter().map(|&x| vec![c64::new(x, 0.0)]).collect())
    }

    #[test]
    fn product_matches_pointwise_multiplication() {
        let p = scalar(&[1.0, -2.0, 0.5]);
        let r = scalar(&[0.3, 4.0]);
        let prod = ScalarLogPoly::product(&p, &r, |a, b| a[0] * b[0]);
        for t in [-3.0, -0.5, 0.0, 1.7] {
            let direct = p.eval(t)[0] * r.eval(t)[0];
            assert!((prod.eval(t) - direct).norm() < 1e-12 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn derivative_in_divided_basis() {
        let p = scalar(&[1.0, 2.0, 3.0]);
        let d = p.derivative().unwrap();
        let h = 1e-6;
        for t in [-1.0, 0.5] {
            let fd = (p.eval(t + h)[0] - p.eval(t - h)[0]) / (2.0 * h);
            assert!((d.eval(t)[0] - fd).norm() < 1e-7);
        }
        assert!(scalar(&[1.0]).derivative().is_none());
    }
}
