use serde::{Deserialize, Serialize};

use super::SpectrumResult;
use crate::cap::BoundaryCondition;
use crate::error::{Error, Result};

/// Upper bound applied to Neumann weights.
pub const NEUMANN_CAP: f64 = 2.5;
const RIGHT_OF_LINE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralWeights {
    /// Distance from `Re λ = -1/2` to the nearest exponent strictly right of it.
    pub beta: f64,
    pub bc_kind: BoundaryCondition,
    /// Mode and exponent attaining the minimum.
    pub attained_mode: u32,
    pub attained_re_lambda: f64,
}

/// Weight from the union of the given per-mode spectra.
///
/// Only exponents with `Re λ + 1/2 > 1e-6` count, so line eigenvalues are
/// ignored and the result measures the off-line spectrum.
pub fn spectral_weights(specs: &[SpectrumResult], bc_kind: BoundaryCondition) -> Result<SpectralWeights> {
    let mut best: Option<(f64, u32, f64)> = None;
    for spec in specs {
        for (plus, _) in &spec.exponents {
            let distance = plus.re + 0.5;
            if distance > RIGHT_OF_LINE && best.map_or(true, |(b, _, _)| distance < b) {
                best = Some((distance, spec.mode, plus.re));
            }
        }
    }
    let (mut beta, attained_mode, attained_re_lambda) = best.ok_or(Error::EmptySpectrum)?;
    if bc_kind == BoundaryCondition::Neumann {
        beta = beta.min(NEUMANN_CAP);
    }
    Ok(SpectralWeights {
        beta,
        bc_kind,
        attained_mode,
        attained_re_lambda,
    })
}

/// `min{β_D, β_N, 1/2}`.
pub fn beta_star(beta_d: f64, beta_n: f64) -> f64 {
    beta_d.min(beta_n).min(0.5)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    use std::sync::Arc;

    use super::*;
    use crate::cap::{assemble_pencil, build_cap, CapGeometry, MaterialSpec};
    use crate::spectrum::solve_pencil;

    fn specs(geometry: CapGeometry) -> Vec<SpectrumResult> {
        (0..3)
            .map(|m| {
                let cap = build_cap(geometry, MaterialSpec::from_contrast(1.0).unwrap(), m, 64, 2).unwrap();
                solve_pencil(Arc::new(assemble_pencil(&cap).unwrap())).unwrap()
            })
            .collect()
    }

    #[test]
    fn homogeneous_weights() {
        let internal = specs(CapGeometry::internal(FRAC_PI_4).unwrap());
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let w = spectral_weights(&internal, bc).unwrap();
            assert!((w.beta - 0.5).abs() < 1e-3, "{}", w.beta);
        }
        let d = specs(CapGeometry::boundary(FRAC_PI_4, FRAC_PI_2, BoundaryCondition::Dirichlet).unwrap());
        let w = spectral_weights(&d, BoundaryCondition::Dirichlet).unwrap();
        assert!((w.beta - 1.5).abs() < 1e-3, "{}", w.beta);
        let n = specs(CapGeometry::boundary(FRAC_PI_4, FRAC_PI_2, BoundaryCondition::Neumann).unwrap());
        let w = spectral_weights(&n, BoundaryCondition::Neumann).unwrap();
        assert!((w.beta - 0.5).abs() < 1e-3, "{}", w.beta);
        assert_eq!(beta_star(1.5, 0.5), 0.5);
        assert_eq!(beta_star(0.3, 0.7), 0.3);
    }

    #[test]
    fn no_spectrum_is_an_error() {
        assert_eq!(
            spectral_weights(&[], BoundaryCondition::Neumann),
            Err(Error::EmptySpectrum)
        );
    }
}
