use std::sync::Arc;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use super::SpectrumResult;
use crate::cap::PencilMatrices;
use crate::error::{Error, Result};
use crate::linalg::{self, DofVector};

/// Default relative tolerance on `Im Λ` for membership of the energy line.
pub const DEFAULT_LINE_TOL: f64 = 1e-6;
/// Exponents with `η` below this are too close to the double root `Λ = -1/4`.
pub const ETA_MIN: f64 = 1e-4;

/// An eigenvalue `Λ < -1/4` of an undamped pencil, i.e. the exponent pair
/// `λ = -1/2 ± iη`.
#[derive(Debug, Clone)]
pub struct LineEigenvalue {
    /// Position among the line eigenvalues of this mode, ordered by `Λ`.
    pub index: usize,
    pub mode: u32,
    /// `Λ = -1/4 - η²`.
    pub value: f64,
    pub eta: f64,
    /// Real kernel basis, orthonormal in the weight-One inner product.
    pub eigenvectors: Vec<DofVector>,
    /// `chains[k]` holds `φ_{k,1}, φ_{k,2}, …` (empty for semisimple vectors).
    pub chains: Vec<Vec<DofVector>>,
    /// `gram[j][k] = ∫ σ φ_j φ_k cos φ dφ` (the vectors are real).
    pub gram: Vec<Vec<c64>>,
    pub pencil: Arc<PencilMatrices>,
}

impl LineEigenvalue {
    /// `λ = -1/2 + iη`.
    pub fn exponent(&self) -> c64 {
        c64::new(-0.5, self.eta)
    }

    pub fn multiplicity(&self) -> usize {
        self.eigenvectors.len()
    }

    /// Partial multiplicity of the `k`-th eigenvector.
    pub fn chain_length(&self, k: usize) -> usize {
        1 + self.chains.get(k).map_or(0, Vec::len)
    }

    /// `φ_{k,l}`, with `l = 0` the eigenvector itself.
    pub fn chain_vector(&self, k: usize, l: usize) -> Result<&DofVector> {
        let available = self.chain_length(k);
        if k >= self.eigenvectors.len() || l >= available {
            return Err(Error::ChainLevel { level: l, available });
        }
        Ok(if l == 0 {
            &self.eigenvectors[k]
        } else {
            &self.chains[k][l - 1]
        })
    }

    pub(crate) fn from_vectors(
        index: usize,
        value: f64,
        vectors: Vec<DofVector>,
        pencil: Arc<PencilMatrices>,
    ) -> Self {
        let eta = (-value - 0.25).max(0.0).sqrt();
        let b0 = pencil.sigma_mass();
        let gram = vectors
            .iter()
            .map(|x| vectors.iter().map(|y| linalg::bilinear(x, b0.as_ref(), y)).collect())
            .collect();
        let chains = vec![Vec::new(); vectors.len()];
        Self {
            index,
            mode: pencil.mode(),
            value,
            eta,
            eigenvectors: vectors,
            chains,
            gram,
            pencil,
        }
    }
}

pub(crate) fn on_line(value: c64, tol: f64) -> bool {
    value.im.abs() <= tol * value.norm().max(1.0) && value.re < -0.25 - ETA_MIN * ETA_MIN
}

pub(crate) fn near_quarter(value: c64, tol: f64) -> bool {
    value.im.abs() <= tol * value.norm().max(1.0) && (value.re + 0.25).abs() < tol
}

/// Where a pencil eigenvalue `Λ` puts its exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueClass {
    /// `Λ < -1/4`: exponents on the energy line.
    EnergyLine,
    /// `Λ ≈ -1/4`: the double root `λ = -1/2`.
    NearQuarter,
    /// Real `Λ > -1/4`: real exponents.
    Real,
    Complex,
}

impl ValueClass {
    pub fn label(self) -> &'static str {
        match self {
            ValueClass::EnergyLine => "energy-line",
            ValueClass::NearQuarter => "near-quarter",
            ValueClass::Real => "real",
            ValueClass::Complex => "complex",
        }
    }
}

pub fn classify_value(value: c64, tol: f64) -> ValueClass {
    if near_quarter(value, tol) {
        ValueClass::NearQuarter
    } else if on_line(value, tol) {
        ValueClass::EnergyLine
    } else if value.im.abs() <= tol * value.norm().max(1.0) {
        ValueClass::Real
    } else {
        ValueClass::Complex
    }
}

/// Counts line eigenvalues in a bare list of `Λ`; `None` when one sits at
/// the double root.
pub(crate) fn count_on_line(values: &[c64], tol: f64) -> Option<usize> {
    if values.iter().any(|&v| near_quarter(v, tol)) {
        return None;
    }
    Some(values.iter().filter(|&&v| on_line(v, tol)).count())
}

/// Extracts the eigenvalues on the energy line.
///
/// Eigenvalues within `tol` of each other (relative) are clustered; the
/// cluster's vectors are made real, re-orthonormalized in the weight-One
/// inner product, and the surviving rank is the geometric multiplicity.
pub fn line_eigenvalues(spec: &SpectrumResult, tol: f64) -> Result<Vec<LineEigenvalue>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("line tolerance {tol} must be positive")));
    }
    if let Some(p) = spec.pairs.iter().find(|p| near_quarter(p.value, tol)) {
        return Err(Error::NearQuarterDegenerate { value: p.value.re });
    }
    let hits: Vec<_> = spec.pairs.iter().filter(|p| on_line(p.value, tol)).collect();
    let mut clusters: Vec<Vec<&super::EigenPair>> = Vec::new();
    for pair in hits {
        match clusters.last_mut() {
            Some(c) if (pair.value.re - c[0].value.re).abs() <= tol * pair.value.norm().max(1.0) => c.push(pair),
            _ => clusters.push(vec![pair]),
        }
    }

    let unit_mass = spec.pencil.unit_mass();
    let dissipative = spec.pencil.is_dissipative();
    let mut out = Vec::with_capacity(clusters.len());
    for (index, cluster) in clusters.into_iter().enumerate() {
        let value = cluster.iter().map(|p| p.value.re).sum::<f64>() / cluster.len() as f64;
        let candidates: Vec<DofVector> = if dissipative {
            cluster.iter().map(|p| p.vector.clone()).collect()
        } else {
            // The kernel of a real matrix has a real basis.
            cluster
                .iter()
                .flat_map(|p| {
                    let re: DofVector = p.vector.iter().map(|z| c64::new(z.re, 0.0)).collect();
                    let im: DofVector = p.vector.iter().map(|z| c64::new(z.im, 0.0)).collect();
                    [re, im]
                })
                .collect()
        };
        let mut basis = linalg::m_orthonormalize(&candidates, unit_mass.as_ref(), 1e-6);
        basis.truncate(cluster.len());
        for v in basis.iter_mut() {
            linalg::fix_phase(v);
        }
        out.push(LineEigenvalue::from_vectors(index, value, basis, spec.pencil.clone()));
    }
    Ok(out)
}
