use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logpoly::{LogPolynomial, ScalarLogPoly};
use super::{Hypersingularity, SingularSpace};
use crate::cap::GaussRule;
use crate::error::{Error, Result};
use crate::linalg;

/// Relative size below which log coefficients of the flux integrand count
/// as zero.
const LIMIT_TOL: f64 = 1e-9;
const ORACLE_GAUSS: usize = 8;
const ORACLE_AZIMUTH: usize = 64;

fn same_provenance(u: &Hypersingularity, v: &Hypersingularity) -> Result<()> {
    let (cu, cv) = (&u.pencil.cap, &v.pencil.cap);
    if cu.geometry != cv.geometry || cu.material != cv.material || cu.mesh.nodes != cv.mesh.nodes {
        return Err(Error::ProvenanceMismatch(
            "singularities were built on different caps, materials or meshes".into(),
        ));
    }
    Ok(())
}

/// `Σ_p ‖c_p‖` in the `|σ|`-weighted norm.
fn poly_size(p: &LogPolynomial, abs_mass: faer::MatRef<'_, f64>) -> f64 {
    p.coeffs
        .iter()
        .map(|c| linalg::sesquilinear(c, abs_mass, c).re.max(0.0).sqrt())
        .sum()
}

/// `q_σ(u, v) = lim_{r→0} ∫_{|x|=r} σ (∂_r u v̄ - u ∂_r v̄) dS`, evaluated
/// exactly.
///
/// On `r ≤ ρ/2` the integrand is `r^{λ+μ̄+1}` times a polynomial in `log r`
/// whose coefficients are angular σ-Grams. The limit exists only if every
/// coefficient that would grow with `|log r|` (or oscillate with `r^{iτ}`)
/// vanishes; the limit is then the constant term.
pub fn flux_pairing(u: &Hypersingularity, v: &Hypersingularity) -> Result<c64> {
    same_provenance(u, v)?;
    if u.mode != v.mode || u.azimuth != v.azimuth {
        return Ok(c64::new(0.0, 0.0));
    }
    let p = &u.pencil;
    let b0 = p.sigma_mass();
    let m = &p.cap.material;
    let abs_mass = p.mass.weighted(m.sigma_minus.abs(), m.sigma_plus.abs());
    let az = u.azimuth.measure();
    let pair = |x: &[c64], y: &[c64]| linalg::sesquilinear(x, b0.as_ref(), y) * az;

    let (lu, lv) = (u.lambda, v.lambda);
    let mut e = ScalarLogPoly::product(&u.poly, &v.poly, pair);
    let scale_lambda = lu - lv.conj();
    for c in &mut e.0 {
        *c *= scale_lambda;
    }
    if let Some(du) = u.poly.derivative() {
        e.add_scaled(c64::new(1.0, 0.0), &ScalarLogPoly::product(&du, &v.poly, pair));
    }
    if let Some(dv) = v.poly.derivative() {
        e.add_scaled(c64::new(-1.0, 0.0), &ScalarLogPoly::product(&u.poly, &dv, pair));
    }

    let scale = az
        * (1.0 + lu.norm() + lv.norm())
        * poly_size(&u.poly, abs_mass.as_ref())
        * poly_size(&v.poly, abs_mass.as_ref());
    let tol = LIMIT_TOL * scale.max(f64::MIN_POSITIVE);
    let exponent = lu + lv.conj() + 1.0;
    let matched = exponent.norm() <= 1e-12 * (1.0 + lu.norm() + lv.norm());
    let first_checked = usize::from(matched);
    for (degree, c) in e.0.iter().enumerate().skip(first_checked) {
        if c.norm() > tol {
            return Err(Error::FluxLimitNonexistent {
                degree,
                magnitude: c.norm(),
            });
        }
    }
    Ok(if matched { e.constant() } else { c64::new(0.0, 0.0) })
}

/// Direct surface quadrature of the flux integrand at a finite radius.
///
/// Latitude integrals use 8-point Gauss rules per element on the finite
/// element functions themselves, the azimuth a 64-point trapezoid rule.
/// Radial derivatives are exact. Requires `0 < radius ≤ ρ/2` so that the
/// cutoff is identically one.
pub fn flux_quadrature_oracle(u: &Hypersingularity, v: &Hypersingularity, radius: f64) -> Result<c64> {
    same_provenance(u, v)?;
    let rho = u.cutoff_rho.min(v.cutoff_rho);
    if !(radius > 0.0 && radius <= rho / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "oracle radius {radius} outside (0, {}]",
            rho / 2.0
        )));
    }
    let h = 2.0 * PI / ORACLE_AZIMUTH as f64;
    let azimuthal: f64 = (0..ORACLE_AZIMUTH)
        .map(|i| {
            let th = i as f64 * h;
            u.azimuth.eval(u.mode, th) * v.azimuth.eval(v.mode, th)
        })
        .sum::<f64>()
        * h;

    let t = radius.ln();
    let rule = GaussRule::legendre(ORACLE_GAUSS);
    let cap_u = &u.pencil.cap;
    let cap_v = &v.pencil.cap;
    let du = u.poly.derivative();
    let dv = v.poly.derivative();
    // Angular parts of u, ∂_r u etc. at log-radius t.
    let pu = u.poly.eval(t);
    let pdu = du.map(|d| d.eval(t));
    let pv = v.poly.eval(t);
    let pdv = dv.map(|d| d.eval(t));
    let ru = c64::new(t, 0.0) * u.lambda;
    let rv = c64::new(t, 0.0) * v.lambda;
    let (r_u, r_v) = (ru.exp(), rv.exp());

    let mut total = c64::new(0.0, 0.0);
    for e in 0..cap_u.mesh.elements() {
        let (a, b) = cap_u.mesh.element_bounds(e);
        let jac = (b - a) / 2.0;
        let sigma = cap_u.material.sigma(cap_u.mesh.region(e));
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let lat = a + (xi + 1.0) * jac;
            let fu = cap_u.evaluate_in(&pu, e, lat);
            let fdu = pdu.as_ref().map_or(c64::new(0.0, 0.0), |d| cap_u.evaluate_in(d, e, lat));
            let fv = cap_v.evaluate_in(&pv, e, lat);
            let fdv = pdv.as_ref().map_or(c64::new(0.0, 0.0), |d| cap_v.evaluate_in(d, e, lat));
            let uu = r_u * fu;
            let vv = r_v * fv;
            let dr_u = r_u / radius * (u.lambda * fu + fdu);
            let dr_v = r_v / radius * (v.lambda * fv + fdv);
            let integrand = sigma * (dr_u * vv.conj() - uu * dr_v.conj()) * radius * radius * lat.cos();
            total += integrand * (w * jac);
        }
    }
    Ok(total * azimuthal)
}

/// `Q_ab = q_σ(s_a, s_b)` on a singular space, with its structural checks.
#[derive(Debug, Clone)]
pub struct FluxMatrix {
    pub q: Mat<c64>,
    pub space: SingularSpace,
    /// `‖Q + Q*‖ / ‖Q‖`.
    pub anti_hermitian_error: f64,
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    /// Eigenvalues of the Hermitian matrix `-iQᵀ`, ascending.
    pub hermitian_eigenvalues: Vec<f64>,
    pub positive: usize,
    pub negative: usize,
}

impl FluxMatrix {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `q(u, v)` for `u = Σ x_a s_a`, `v = Σ y_b s_b`.
    pub fn form(&self, x: &[c64], y: &[c64]) -> c64 {
        let n = self.dim();
        let mut s = c64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                s += x[a] * self.q[(a, b)] * y[b].conj();
            }
        }
        s
    }

    /// Spectral norm of `Q`.
    pub fn scale(&self) -> f64 {
        self.largest_singular_value
    }
}

/// Assembles every pairing of the space and checks that `Q` is
/// anti-Hermitian, non-degenerate and of signature `(N, N)`.
pub fn flux_matrix(space: &SingularSpace) -> Result<FluxMatrix> {
    let n = space.dim;
    let entries: Vec<c64> = (0..n * n)
        .into_par_iter()
        .map(|idx| flux_pairing(&space.members[idx / n], &space.members[idx % n]))
        .collect::<Result<_>>()?;
    let q = Mat::from_fn(n, n, |a, b| entries[a * n + b]);
    let norm = q.norm_l2();
    let sym = Mat::from_fn(n, n, |a, b| q[(a, b)] + q[(b, a)].conj());
    let anti_hermitian_error = if norm > 0.0 { sym.norm_l2() / norm } else { 0.0 };
    if !(anti_hermitian_error < 1e-10) {
        return Err(Error::FluxDegenerate(format!(
            "flux matrix is not anti-Hermitian (relative defect {anti_hermitian_error:e})"
        )));
    }
    let sv = q
        .singular_values()
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let largest = sv.iter().copied().fold(0.0, f64::max);
    let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if n == 0 || !(smallest > 1e-8 * largest) {
        return Err(Error::FluxDegenerate(format!(
            "smallest singular value {smallest:e} vs largest {largest:e}"
        )));
    }
    let h = hermitian_part(&q);
    let eig = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let positive = eig.iter().filter(|&&x| x > 0.0).count();
    let negative = eig.iter().filter(|&&x| x < 0.0).count();
    if positive != n / 2 || negative != n / 2 {
        return Err(Error::SignatureMismatch { positive, negative });
    }
    Ok(FluxMatrix {
        q,
        space: space.clone(),
        anti_hermitian_error,
        smallest_singular_value: smallest,
        largest_singular_value: largest,
        hermitian_eigenvalues: eig,
        positive,
        negative,
    })
}

/// `H = -iQᵀ`, symmetrized, so that `cᴴ H c = Im q(u, u)`.
fn hermitian_part(q: &Mat<c64>) -> Mat<c64> {
    let n = q.nrows();
    let mi = c64::new(0.0, -1.0);
    Mat::from_fn(n, n, |a, b| {
        let x = mi * q[(b, a)];
        let y = (mi * q[(a, b)]).conj();
        0.5 * (x + y)
    })
}

/// Outgoing and incoming bases of a singular space, in member coordinates.
#[derive(Debug, Clone)]
pub struct MandelstamBasis {
    /// `s⁺_j`, flux `+i`.
    pub s_plus: Vec<Vec<c64>>,
    /// `s⁻_j = conj(s⁺_j)`, flux `-i`.
    pub s_minus: Vec<Vec<c64>>,
    /// Positive eigenvalues of `-iQᵀ` used for the scaling, descending.
    pub scales: Vec<f64>,
    /// Largest deviation from the orthogonality conditions.
    pub residual: f64,
    /// Largest coefficient defect of `s⁺_j = conj(s⁻_j)` as fields.
    pub conjugation_error: f64,
    /// Smallest eigenvalue of `-iQᵀ` restricted to `span(s⁺)`.
    pub plus_block_min_eigenvalue: f64,
    pub q: Mat<c64>,
}

impl MandelstamBasis {
    pub fn half_dim(&self) -> usize {
        self.s_plus.len()
    }

    pub fn form(&self, x: &[c64], y: &[c64]) -> c64 {
        let n = self.q.nrows();
        let mut s = c64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                s += x[a] * self.q[(a, b)] * y[b].conj();
            }
        }
        s
    }

    /// Member coordinates of `Σ_j plus_j s⁺_j + minus_j s⁻_j`.
    pub fn combine(&self, plus: &[c64], minus: &[c64]) -> Result<Vec<c64>> {
        let n = self.half_dim();
        for len in [plus.len(), minus.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        let mut out = vec![c64::new(0.0, 0.0); 2 * n];
        for j in 0..n {
            linalg::axpy(plus[j], &self.s_plus[j], &mut out);
            linalg::axpy(minus[j], &self.s_minus[j], &mut out);
        }
        Ok(out)
    }
}

/// Splits the space into outgoing and incoming halves.
///
/// The positive eigenvectors of `-iQᵀ` (descending eigenvalue, scaled to
/// unit flux) give `s⁺`; `s⁻` are their conjugate fields. Conjugation maps
/// the `+iη` member `a` to member `N + a`, so in coordinates
/// `s⁻ = P conj(s⁺)` with `P` the swap of the halves.
pub fn mandelstam_basis(fm: &FluxMatrix) -> Result<MandelstamBasis> {
    let n = fm.dim();
    let half = n / 2;
    if fm.positive != half || fm.negative != half {
        return Err(Error::SignatureMismatch {
            positive: fm.positive,
            negative: fm.negative,
        });
    }
    let h = hermitian_part(&fm.q);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut s_plus = Vec::with_capacity(half);
    let mut scales = Vec::with_capacity(half);
    for j in (n - half..n).rev() {
        let d = s[j].re;
        let mut v: Vec<c64> = (0..n).map(|i| u[(i, j)] / d.sqrt()).collect();
        linalg::fix_phase(&mut v);
        s_plus.push(v);
        scales.push(d);
    }
    let space = &fm.space;
    let s_minus: Vec<Vec<c64>> = s_plus
        .iter()
        .map(|v| (0..n).map(|a| v[space.conjugate_index(a)].conj()).collect())
        .collect();

    let i = c64::new(0.0, 1.0);
    let mut residual = 0.0f64;
    for j in 0..half {
        for k in 0..half {
            let delta = if j == k { 1.0 } else { 0.0 };
            residual = residual
                .max((fm.form(&s_plus[j], &s_plus[k]) - i * delta).norm())
                .max((fm.form(&s_minus[j], &s_minus[k]) + i * delta).norm())
                .max(fm.form(&s_plus[j], &s_minus[k]).norm())
                .max(fm.form(&s_minus[j], &s_plus[k]).norm());
        }
    }

    let mut conjugation_error = 0.0f64;
    for a in 0..n {
        let (x, y) = (&space.members[a], &space.members[space.conjugate_index(a)]);
        conjugation_error = conjugation_error.max((x.lambda - y.lambda.conj()).norm());
        for (cx, cy) in x.poly.coeffs.iter().zip(&y.poly.coeffs) {
            for (p, q) in cx.iter().zip(cy) {
                conjugation_error = conjugation_error.max((p - q.conj()).norm());
            }
        }
    }

    let block = Mat::from_fn(half, half, |j, k| {
        let x = &s_plus[j];
        let y = &s_plus[k];
        // Hermitian form cᴴ H c' with H = -iQᵀ.
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| x[a].conj() * h[(a, b)] * y[b])
            .sum::<c64>()
    });
    let plus_block_min_eigenvalue = if half == 0 {
        0.0
    } else {
        block
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::EigenSolver(format!("{e:?}")))?[0]
    };

    Ok(MandelstamBasis {
        s_plus,
        s_minus,
        scales,
        residual,
        conjugation_error,
        plus_block_min_eigenvalue,
        q: fm.q.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveKind {
    Outgoing,
    Incoming,
    Unclassified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveClass {
    pub kind: WaveKind,
    /// `q(u, u)`, purely imaginary up to rounding.
    pub flux: c64,
}

/// Sign of `Im q(u, u)` with a dead band of `1e-10` relative to `‖c‖²‖Q‖`.
pub fn classify_wave(fm: &FluxMatrix, coeffs: &[c64]) -> Result<WaveClass> {
    if coeffs.len() != fm.dim() {
        return Err(Error::DimensionMismatch {
            expected: fm.dim(),
            found: coeffs.len(),
        });
    }
    let flux = fm.form(coeffs, coeffs);
    let size: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let band = 1e-10 * size * fm.scale();
    let kind = if flux.im > band {
        WaveKind::Outgoing
    } else if flux.im < -band {
        WaveKind::Incoming
    } else {
        WaveKind::Unclassified
    };
    Ok(WaveClass { kind, flux })
}

/// Coefficients of a field on the outgoing and incoming halves of a basis.
#[derive(Debug, Clone, Copy)]
pub struct BasisCoefficients<'a> {
    pub basis: &'a MandelstamBasis,
    pub plus: &'a [c64],
    pub minus: &'a [c64],
}

impl BasisCoefficients<'_> {
    fn flux(&self) -> Result<c64> {
        let c = self.basis.combine(self.plus, self.minus)?;
        Ok(self.basis.form(&c, &c))
    }
}

/// `Im[q_μ(s_μ, s_μ) + ω² q_ε(s_ε, s_ε)]`, the energy trapped at the tip.
pub fn trapped_energy(eps: BasisCoefficients<'_>, mu: BasisCoefficients<'_>, omega: f64) -> Result<f64> {
    Ok((mu.flux()? + eps.flux()? * (omega * omega)).im)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::super::{singular_space, tests::line_evs};
    use super::*;

    #[test]
    fn simple_flux_closed_form() {
        let les = line_evs(FRAC_PI_4, -2.0, &[0]);
        let le = &les[0];
        let space = singular_space(&les[..1], 1.0).unwrap();
        let fm = flux_matrix(&space).unwrap();
        let g = le.gram[0][0].re;
        let expected = c64::new(0.0, 2.0 * le.eta * g * 2.0 * PI);
        assert!((fm.q[(0, 0)] - expected).norm() < 1e-12 * expected.norm());
        assert!((fm.q[(1, 1)] + expected).norm() < 1e-12 * expected.norm());
        assert!(fm.q[(0, 1)].norm() < 1e-12 * expected.norm());
        for r in [1e-2, 1e-3, 1e-4] {
            let o = flux_quadrature_oracle(&space.members[0], &space.members[0], r).unwrap();
            assert!((o - expected).norm() < 1e-8 * expected.norm().max(1.0), "{o} vs {expected}");
            assert!(o.re.abs() < 1e-12);
        }
        assert!(flux_quadrature_oracle(&space.members[0], &space.members[0], 0.6).is_err());
    }

    #[test]
    fn basis_satisfies_orthogonality_conditions() {
        let les = line_evs(FRAC_PI_4, -2.0, &[0, 1, 2]);
        let space = singular_space(&les, 1.0).unwrap();
        let fm = flux_matrix(&space).unwrap();
        let basis = mandelstam_basis(&fm).unwrap();
        assert!(basis.residual < 1e-10, "{}", basis.residual);
        assert_eq!(basis.conjugation_error, 0.0);
        assert!(basis.plus_block_min_eigenvalue > 0.0);
        for j in 0..basis.half_dim() {
            let out = classify_wave(&fm, &basis.s_plus[j]).unwrap();
            assert_eq!(out.kind, WaveKind::Outgoing);
            assert!((out.flux - c64::new(0.0, 1.0)).norm() < 1e-10);
            assert_eq!(classify_wave(&fm, &basis.s_minus[j]).unwrap().kind, WaveKind::Incoming);
            let mixed: Vec<c64> = basis.s_plus[j].iter().zip(&basis.s_minus[j]).map(|(a, b)| a + b).collect();
            assert_eq!(classify_wave(&fm, &mixed).unwrap().kind, WaveKind::Unclassified);
        }
    }

    #[test]
    fn trapped_energy_examples() {
        let les = line_evs(FRAC_PI_4, -2.0, &[0]);
        let fm = flux_matrix(&singular_space(&les, 1.0).unwrap()).unwrap();
        let b = mandelstam_basis(&fm).unwrap();
        let n = b.half_dim();
        let zero = vec![c64::new(0.0, 0.0); n];
        let mut unit = zero.clone();
        unit[0] = c64::new(1.0, 0.0);
        let none = BasisCoefficients { basis: &b, plus: &zero, minus: &zero };
        assert_eq!(trapped_energy(none, none, 1.0).unwrap(), 0.0);
        let out = BasisCoefficients { basis: &b, plus: &unit, minus: &zero };
        assert!((trapped_energy(none, out, 1.0).unwrap() - 1.0).abs() < 1e-10);
        let both = BasisCoefficients { basis: &b, plus: &unit, minus: &unit };
        assert!(trapped_energy(none, both, 1.0).unwrap().abs() < 1e-10);
        let bad = BasisCoefficients { basis: &b, plus: &[], minus: &zero };
        assert!(matches!(trapped_energy(none, bad, 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn jordan_chain_flux_matches_oracle() {
        use crate::cap::CapGeometry;
        use crate::spectrum::locate_jordan_contrast;

        let geo = CapGeometry::internal(FRAC_PI_4).unwrap();
        let jc = locate_jordan_contrast(geo, 1, (-1.35, -1.2), 64, 2).unwrap();
        let space = singular_space(std::slice::from_ref(&jc.line), 1.0).unwrap();
        assert!(space.members.iter().any(|m| m.poly.degree() == 1));
        let fm = flux_matrix(&space).unwrap();
        for a in 0..space.dim {
            for b in 0..space.dim {
                let q = fm.q[(a, b)];
                for r in [1e-2, 1e-3, 1e-4] {
                    let o = flux_quadrature_oracle(&space.members[a], &space.members[b], r).unwrap();
                    assert!((o - q).norm() < 1e-8 * q.norm().max(1.0), "({a},{b}) r={r}: {o} vs {q}");
                }
            }
        }
        let basis = mandelstam_basis(&fm).unwrap();
        assert!(basis.residual < 1e-10);
    }
}
