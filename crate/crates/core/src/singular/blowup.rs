use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use super::Hypersingularity;
use crate::error::{Error, Result};
use crate::linalg;

/// `∫_a^b r^p dr` for `0 ≤ a < b`.
pub fn power_integral(p: f64, a: f64, b: f64) -> f64 {
    if p == -1.0 {
        (b / a).ln()
    } else {
        (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
    }
}

/// `∫_δ^1 |∂_r r^λ|² r² dr`; equals `(1/4 + η²)|ln δ|` on the energy line.
pub fn truncated_radial_energy(lambda: c64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(lambda.norm_sqr() * power_integral(2.0 * lambda.re, delta, 1.0))
}

/// Real polynomial in `r`, ascending coefficients.
#[derive(Debug, Clone)]
struct Poly(Vec<f64>);

impl Poly {
    fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// `∫_a^b poly(r) r^p dr`.
    fn integrate_against_power(&self, p: f64, a: f64, b: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| c * power_integral(p + k as f64, a, b))
            .sum()
    }
}

/// The cutoff on `[ρ/2, ρ]`: `1 - 3x² + 2x³` with `x = 2r/ρ - 1`.
fn cutoff_ramp(rho: f64) -> Poly {
    let x = Poly(vec![-1.0, 2.0 / rho]);
    let x2 = x.mul(&x);
    let x3 = x2.mul(&x);
    let mut c = vec![0.0; 4];
    c[0] = 1.0;
    for (k, v) in x2.0.iter().enumerate() {
        c[k] -= 3.0 * v;
    }
    for (k, v) in x3.0.iter().enumerate() {
        c[k] += 2.0 * v;
    }
    Poly(c)
}

/// `‖∇(χ r^{1/n} s)‖²` over the ball of radius `ρ` for a simple member
/// `s = r^λ φ Θ`.
///
/// With `a = λ + 1/n` the radial integrals are exact power integrals; the
/// angular factors are `∫|φΘ|²` and `∫|∇_S(φΘ)|²` from the unit-coefficient
/// mass and stiffness matrices.
pub fn singular_sequence_norm(s: &Hypersingularity, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("sequence index n must be at least 1".into()));
    }
    if s.poly.degree() != 0 {
        return Err(Error::InvalidArgument(
            "blow-up sequence needs a simple singularity (chain level 0)".into(),
        ));
    }
    let phi = &s.poly.coeffs[0];
    let az = s.azimuth.measure();
    let n0 = az * linalg::sesquilinear(phi, s.pencil.unit_mass().as_ref(), phi).re;
    let n1 = az * linalg::sesquilinear(phi, s.pencil.unit_stiffness().as_ref(), phi).re;

    let a = s.lambda + 1.0 / n as f64;
    let q = 2.0 * a.re;
    let rho = s.cutoff_rho;
    let half = rho / 2.0;
    let chi = cutoff_ramp(rho);
    let dchi = chi.derivative();

    // Core r ≤ ρ/2 where χ = 1.
    let core = power_integral(q, 0.0, half);
    let radial_grad = a.norm_sqr() * core
        + dchi.mul(&dchi).integrate_against_power(q + 2.0, half, rho)
        + 2.0 * a.re * chi.mul(&dchi).integrate_against_power(q + 1.0, half, rho)
        + a.norm_sqr() * chi.mul(&chi).integrate_against_power(q, half, rho);
    let angular_grad = core + chi.mul(&chi).integrate_against_power(q, half, rho);
    Ok(n0 * radial_grad + n1 * angular_grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub n: Vec<u32>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(n, ‖∇(χ r^{1/n} s)‖²)`.
pub fn blowup_rate(s: &Hypersingularity, n_list: &[u32]) -> Result<BlowupFit> {
    if n_list.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 points, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateFit("n values must be strictly increasing".into()));
    }
    let norms = n_list
        .iter()
        .map(|&n| singular_sequence_norm(s, n))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = norms.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&norms).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = norms.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(BlowupFit {
        n: n_list.to_vec(),
        norms,
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::super::{build_singularity, tests::line_evs};
    use super::*;
    use crate::cap::GaussRule;

    #[test]
    fn pure_power_energy_is_logarithmic() {
        for eta in [0.3, 1.0, 2.5] {
            for delta in [1e-2, 1e-5, 1e-9] {
                let v = truncated_radial_energy(c64::new(-0.5, eta), delta).unwrap();
                let expected = (0.25 + eta * eta) * delta.ln().abs();
                assert!((v - expected).abs() < 1e-10 * expected);
            }
        }
    }

    #[test]
    fn ramp_is_a_c1_cutoff() {
        let rho = 0.8;
        let c = cutoff_ramp(rho);
        let d = c.derivative();
        let ev = |p: &Poly, r: f64| p.0.iter().rev().fold(0.0, |acc, k| acc * r + k);
        assert!((ev(&c, rho / 2.0) - 1.0).abs() < 1e-14);
        assert!(ev(&c, rho).abs() < 1e-14);
        assert!(ev(&d, rho / 2.0).abs() < 1e-13);
        assert!(ev(&d, rho).abs() < 1e-13);
    }

    #[test]
    fn norm_matches_numerical_quadrature_on_the_ramp() {
        let les = line_evs(FRAC_PI_4, -2.0, &[0]);
        let s = build_singularity(&les[0], 0, 0, 1.0, false).unwrap();
        let phi = &s.poly.coeffs[0];
        let az = s.azimuth.measure();
        let n0 = az * linalg::sesquilinear(phi, s.pencil.unit_mass().as_ref(), phi).re;
        let n1 = az * linalg::sesquilinear(phi, s.pencil.unit_stiffness().as_ref(), phi).re;
        for n in [1u32, 7, 40] {
            let a = s.lambda + 1.0 / n as f64;
            let q = 2.0 * a.re;
            // Core analytically, the ramp by Gauss-Legendre on the smooth integrand.
            let mut total = (a.norm_sqr() * n0 + n1) * 0.5f64.powf(q + 1.0) / (q + 1.0);
            let rule = GaussRule::legendre(16);
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let r = 0.75 + 0.25 * xi;
                let x = 2.0 * r - 1.0;
                let chi = 1.0 - 3.0 * x * x + 2.0 * x * x * x;
                let dchi = (-6.0 * x + 6.0 * x * x) * 2.0;
                let ra = (a * r.ln()).exp();
                let dr = dchi * ra + chi * a * ra / r;
                let f = n0 * dr.norm_sqr() * r * r + n1 * chi * chi * ra.norm_sqr();
                total += 0.25 * w * f;
            }
            let v = singular_sequence_norm(&s, n).unwrap();
            assert!((v - total).abs() < 1e-10 * total, "n={n}: {v} vs {total}");
        }
    }

    #[test]
    fn growth_homogeneity_and_fit() {
        let les = line_evs(FRAC_PI_4, -2.0, &[0]);
        let s = build_singularity(&les[0], 0, 0, 1.0, false).unwrap();
        let v10 = singular_sequence_norm(&s, 10).unwrap();
        let v100 = singular_sequence_norm(&s, 100).unwrap();
        assert!(v100 > 5.0 * v10);
        let doubled = s.clone().scaled(c64::new(2.0, 0.0));
        assert!((singular_sequence_norm(&doubled, 10).unwrap() - 4.0 * v10).abs() < 1e-12 * v10);
        let fit = blowup_rate(&s, &[20, 40, 60, 80]).unwrap();
        assert!(fit.r_squared > 0.999 && fit.slope > 0.0);
        let wide = blowup_rate(&s, &[40, 80, 120, 160]).unwrap();
        assert!((wide.slope - fit.slope).abs() < 0.05 * fit.slope);
        assert!(matches!(blowup_rate(&s, &[20, 40, 60]), Err(Error::DegenerateFit(_))));
        assert!(matches!(blowup_rate(&s, &[20, 40, 40, 80]), Err(Error::DegenerateFit(_))));
    }
}
