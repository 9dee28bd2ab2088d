//! Spectrum of the symbol pencil `A - Λ B` and the exponent map
//! `λ(λ+1) = Λ`.
//!
//! Eigenvalues `Λ < -1/4` correspond to the exponents `λ = -1/2 ± iη` on the
//! energy line; those are extracted by [`line_eigenvalues`].

mod jordan;
mod line;
mod dense;
mod weights;

use std::cmp::Ordering;
use std::sync::Arc;

use num_complex::Complex64 as c64;

use crate::cap::PencilMatrices;
use crate::error::{Error, Result};
use crate::linalg::{self, DofVector};

pub use jordan::{
    gram_smallest_singular_value, jordan_chains, jordan_threshold, locate_jordan_contrast, JordanContrast,
    JORDAN_RELATIVE_THRESHOLD,
};
pub use line::{classify_value, line_eigenvalues, LineEigenvalue, ValueClass, DEFAULT_LINE_TOL, ETA_MIN};
pub(crate) use line::on_line;
pub use weights::{beta_star, spectral_weights, SpectralWeights, NEUMANN_CAP};

/// Residual bound every accepted eigenpair must meet.
pub const RESIDUAL_BOUND: f64 = 1e-8;
/// Largest tolerated condition estimate of the mass matrix.
pub const MASS_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// `Λ`.
    pub value: c64,
    /// Unit weight-One norm, largest entry real and positive.
    pub vector: DofVector,
    /// `‖(A - ΛB)v‖ / ((‖A‖ + |Λ|‖B‖)‖v‖)`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Sorted by `(Re Λ, Im Λ)`.
    pub pairs: Vec<EigenPair>,
    pub mode: u32,
    pub pencil: Arc<PencilMatrices>,
    /// `(λ⁺, λ⁻)` for each pair, same order.
    pub exponents: Vec<(c64, c64)>,
    pub condition_estimate: f64,
}

impl SpectrumResult {
    pub fn values(&self) -> Vec<c64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// `λ± = -1/2 ± √(Λ + 1/4)` with the principal square root.
pub fn exponents_from_pencil_value(value: c64) -> (c64, c64) {
    let root = (value + 0.25).sqrt();
    (c64::new(-0.5, 0.0) + root, c64::new(-0.5, 0.0) - root)
}

fn by_real_then_imag(a: &c64, b: &c64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check_mass(p: &PencilMatrices) -> Result<f64> {
    let cond = linalg::condition_estimate(p.b().as_ref());
    if !(cond <= MASS_CONDITION_LIMIT) {
        return Err(Error::MassMatrixSingular { condition: cond });
    }
    Ok(cond)
}

/// Eigenvalues only, sorted by `(Re Λ, Im Λ)`. Much cheaper than
/// [`solve_pencil`]; used by contrast sweeps.
pub fn pencil_eigenvalues(p: &PencilMatrices) -> Result<Vec<c64>> {
    check_mass(p)?;
    let dec = if p.is_dissipative() {
        dense::complex(p.a().as_ref(), p.b().as_ref(), false)?
    } else {
        dense::real(p.sigma_stiffness().as_ref(), p.sigma_mass().as_ref(), false)?
    };
    let mut values = dec.values;
    values.sort_by(by_real_then_imag);
    Ok(values)
}

/// Full residual-certified eigendecomposition of the pencil.
pub fn solve_pencil(p: Arc<PencilMatrices>) -> Result<SpectrumResult> {
    let condition_estimate = check_mass(&p)?;
    let a = p.a();
    let b = p.b();
    let dec = if p.is_dissipative() {
        dense::complex(a.as_ref(), b.as_ref(), true)?
    } else {
        dense::real(p.sigma_stiffness().as_ref(), p.sigma_mass().as_ref(), true)?
    };
    let vectors = dec.vectors.expect("eigenvectors requested");
    let unit_mass = p.unit_mass();
    let norm_a = linalg::frobenius(a.as_ref());
    let norm_b = linalg::frobenius(b.as_ref());

    let mut pairs: Vec<EigenPair> = dec
        .values
        .iter()
        .enumerate()
        .map(|(j, &value)| {
            let mut v: DofVector = (0..vectors.nrows()).map(|i| vectors[(i, j)]).collect();
            linalg::normalize(&mut v, unit_mass.as_ref());
            let residual = pair_residual(&a, &b, value, &v, norm_a, norm_b);
            EigenPair { value, vector: v, residual }
        })
        .collect();
    pairs.sort_by(|x, y| by_real_then_imag(&x.value, &y.value));
    if let Some((index, pair)) = pairs.iter().enumerate().find(|(_, q)| !(q.residual < RESIDUAL_BOUND)) {
        return Err(Error::ResidualCertification {
            index,
            residual: pair.residual,
        });
    }
    let exponents = pairs.iter().map(|q| exponents_from_pencil_value(q.value)).collect();
    Ok(SpectrumResult {
        pairs,
        mode: p.mode(),
        pencil: p,
        exponents,
        condition_estimate,
    })
}

fn pair_residual(a: &faer::Mat<c64>, b: &faer::Mat<c64>, value: c64, v: &[c64], norm_a: f64, norm_b: f64) -> f64 {
    let av = linalg::mat_vec(a.as_ref(), v);
    let bv = linalg::mat_vec(b.as_ref(), v);
    let r: DofVector = av.iter().zip(&bv).map(|(x, y)| x - value * y).collect();
    linalg::norm2(&r) / ((norm_a + value.norm() * norm_b) * linalg::norm2(v))
}

/// Hausdorff distance between the `Λ` multiset and its complex conjugate.
pub fn conjugate_pairing_check(spec: &SpectrumResult) -> Result<f64> {
    if spec.pencil.is_dissipative() {
        return Err(Error::NotApplicableDissipative);
    }
    Ok(conjugate_distance(&spec.values()))
}

pub(crate) fn conjugate_distance(values: &[c64]) -> f64 {
    values
        .iter()
        .map(|z| {
            values
                .iter()
                .map(|w| (z - w.conj()).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::cap::{assemble_dissipative_pencil, assemble_pencil, build_cap, CapGeometry, MaterialSpec};

    fn pencil(kappa: f64, mode: u32, elements: usize) -> Arc<PencilMatrices> {
        let cap = build_cap(
            CapGeometry::internal(FRAC_PI_4).unwrap(),
            MaterialSpec::from_contrast(kappa).unwrap(),
            mode,
            elements,
            2,
        )
        .unwrap();
        Arc::new(assemble_pencil(&cap).unwrap())
    }

    #[test]
    fn exponent_map_examples() {
        let (p, m) = exponents_from_pencil_value(c64::new(0.0, 0.0));
        assert_eq!((p, m), (c64::new(0.0, 0.0), c64::new(-1.0, 0.0)));
        let (p, m) = exponents_from_pencil_value(c64::new(-0.25, 0.0));
        assert_eq!((p, m), (c64::new(-0.5, 0.0), c64::new(-0.5, 0.0)));
        let (p, m) = exponents_from_pencil_value(c64::new(-0.25 - 4.0, 0.0));
        assert!((p - c64::new(-0.5, 2.0)).norm() < 1e-15);
        assert!((m - c64::new(-0.5, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn homogeneous_sphere_reproduces_legendre_values() {
        for (mode, first) in [(0u32, 0usize), (1, 1), (2, 2)] {
            let spec = solve_pencil(pencil(1.0, mode, 128)).unwrap();
            for (k, pair) in spec.pairs.iter().take(5).enumerate() {
                let l = (first + k) as f64;
                let exact = l * (l + 1.0);
                let err = (pair.value - exact).norm() / exact.max(1.0);
                assert!(err < 1e-4, "m={mode} l={l}: {}", pair.value);
            }
            assert!(spec.max_residual() < RESIDUAL_BOUND);
            assert_eq!(conjugate_pairing_check(&spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn real_pencil_spectrum_is_conjugation_symmetric() {
        let spec = solve_pencil(pencil(-0.5, 0, 64)).unwrap();
        assert!(conjugate_pairing_check(&spec).unwrap() < 1e-8);
        for (pair, (lp, lm)) in spec.pairs.iter().zip(&spec.exponents) {
            assert!((lp + lm + 1.0).norm() <= 1e-15);
            assert!((lp * (lp + 1.0) - pair.value).norm() <= 1e-14 * pair.value.norm().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_only_path_matches_full_solve() {
        let p = pencil(-2.0, 1, 48);
        let full = solve_pencil(p.clone()).unwrap().values();
        let fast = pencil_eigenvalues(&p).unwrap();
        assert_eq!(full.len(), fast.len());
        for (x, y) in full.iter().zip(&fast) {
            assert!((x - y).norm() <= 1e-9 * x.norm().max(1.0));
        }
    }

    #[test]
    fn dissipative_pencil_check_is_rejected() {
        let base = pencil(-2.0, 0, 32);
        let lossy = Arc::new(assemble_dissipative_pencil(&base.cap, 1e-3).unwrap());
        let spec = solve_pencil(lossy).unwrap();
        assert_eq!(conjugate_pairing_check(&spec), Err(Error::NotApplicableDissipative));
        assert!(spec.max_residual() < RESIDUAL_BOUND);
    }

    #[test]
    fn eigenvectors_are_normalized_and_phase_fixed() {
        let spec = solve_pencil(pencil(-0.5, 2, 32)).unwrap();
        let m = spec.pencil.unit_mass();
        for pair in &spec.pairs {
            let n = linalg::sesquilinear(&pair.vector, m.as_ref(), &pair.vector);
            assert!((n.re - 1.0).abs() < 1e-12);
            let pivot = pair
                .vector
                .iter()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap();
            assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
        }
    }
}
