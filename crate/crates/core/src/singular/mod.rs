//! Propagating singularities `r^λ Σ_p φ_{k,l-p} (log r)^p/p!` attached to
//! line eigenvalues, their energy-flux form and the outgoing/incoming split.

mod blowup;
mod flux;
mod logpoly;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::cap::{BoundaryCondition, PencilMatrices};
use crate::error::{Error, Result};
use crate::spectrum::{LineEigenvalue, ETA_MIN};

pub use blowup::{blowup_rate, power_integral, singular_sequence_norm, truncated_radial_energy, BlowupFit};
pub use flux::{
    classify_wave, flux_matrix, flux_pairing, flux_quadrature_oracle, mandelstam_basis, trapped_energy, FluxMatrix,
    BasisCoefficients, MandelstamBasis, WaveClass, WaveKind,
};
pub use logpoly::LogPolynomial;

/// Which exponent of the pair `-1/2 ± iη` a member carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// Azimuthal factor of a member: `1`, `cos mθ` or `sin mθ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Azimuth {
    Axisymmetric,
    Cosine,
    Sine,
}

impl Azimuth {
    /// `∫₀^{2π} Θ² dθ`.
    pub fn measure(self) -> f64 {
        match self {
            Azimuth::Axisymmetric => 2.0 * PI,
            _ => PI,
        }
    }

    pub fn eval(self, mode: u32, theta: f64) -> f64 {
        match self {
            Azimuth::Axisymmetric => 1.0,
            Azimuth::Cosine => (mode as f64 * theta).cos(),
            Azimuth::Sine => (mode as f64 * theta).sin(),
        }
    }

    pub fn for_mode(mode: u32) -> &'static [Azimuth] {
        if mode == 0 {
            &[Azimuth::Axisymmetric]
        } else {
            &[Azimuth::Cosine, Azimuth::Sine]
        }
    }
}

/// `χ(r) r^λ Σ_p c_p (log r)^p / p!` times an azimuthal factor.
#[derive(Debug, Clone)]
pub struct Hypersingularity {
    pub lambda: c64,
    pub poly: LogPolynomial,
    pub cutoff_rho: f64,
    /// `(j, k, l)`: line eigenvalue, eigenvector and chain level.
    pub indices: (usize, usize, usize),
    pub mode: u32,
    pub azimuth: Azimuth,
    pub branch: Branch,
    pub pencil: Arc<PencilMatrices>,
}

impl Hypersingularity {
    pub fn eta(&self) -> f64 {
        self.lambda.im.abs()
    }

    /// The complex conjugate field.
    pub fn conj(&self) -> Hypersingularity {
        Hypersingularity {
            lambda: self.lambda.conj(),
            poly: self.poly.conj(),
            branch: match self.branch {
                Branch::Plus => Branch::Minus,
                Branch::Minus => Branch::Plus,
            },
            ..self.clone()
        }
    }

    pub fn with_azimuth(mut self, azimuth: Azimuth) -> Result<Self> {
        if (azimuth == Azimuth::Axisymmetric) != (self.mode == 0) {
            return Err(Error::InvalidArgument(format!(
                "azimuth {azimuth:?} does not fit mode {}",
                self.mode
            )));
        }
        self.azimuth = azimuth;
        Ok(self)
    }

    pub fn with_cutoff(mut self, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        self.cutoff_rho = rho;
        Ok(self)
    }

    /// Multiplies every angular coefficient by `factor`.
    pub fn scaled(mut self, factor: c64) -> Self {
        for c in &mut self.poly.coeffs {
            *c = crate::linalg::scale(factor, c);
        }
        self
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("cutoff radius {rho} must be positive")));
    }
    Ok(())
}

/// `s_{j,k,l}` of line eigenvalue `le`: `c_p = φ_{k,l-p}` for `p = 0..=l`.
///
/// With `conjugate` the exponent is `-1/2 - iη` and the coefficients are
/// conjugated.
pub fn build_singularity(le: &LineEigenvalue, k: usize, l: usize, rho: f64, conjugate: bool) -> Result<Hypersingularity> {
    check_rho(rho)?;
    if le.eta < ETA_MIN {
        return Err(Error::NearQuarterDegenerate { value: le.value });
    }
    le.chain_vector(k, l)?;
    let coeffs = (0..=l)
        .map(|p| le.chain_vector(k, l - p).cloned())
        .collect::<Result<Vec<_>>>()?;
    let s = Hypersingularity {
        lambda: le.exponent(),
        poly: LogPolynomial::new(coeffs),
        cutoff_rho: rho,
        indices: (le.index, k, l),
        mode: le.mode,
        azimuth: Azimuth::for_mode(le.mode)[0],
        branch: Branch::Plus,
        pencil: le.pencil.clone(),
    };
    Ok(if conjugate { s.conj() } else { s })
}

/// Span of all hypersingularities of a set of line eigenvalues.
///
/// The first `N` members carry `-1/2 + iη`; member `N + a` is the conjugate
/// of member `a`.
#[derive(Debug, Clone)]
pub struct SingularSpace {
    pub members: Vec<Hypersingularity>,
    pub dim: usize,
    pub rho: f64,
    /// Outer boundary condition of the cap, if any.
    pub outer_bc: Option<BoundaryCondition>,
}

impl SingularSpace {
    /// `N`, half the dimension.
    pub fn half_dim(&self) -> usize {
        self.dim / 2
    }

    /// Index of the conjugate of member `a`.
    pub fn conjugate_index(&self, a: usize) -> usize {
        let n = self.half_dim();
        if a < n {
            a + n
        } else {
            a - n
        }
    }

    /// The same space with cutoff radius `rho`.
    pub fn with_cutoff(&self, rho: f64) -> Result<SingularSpace> {
        check_rho(rho)?;
        Ok(SingularSpace {
            members: self
                .members
                .iter()
                .map(|m| m.clone().with_cutoff(rho))
                .collect::<Result<_>>()?,
            rho,
            ..self.clone()
        })
    }
}

/// Collects both branches, both azimuthal parities and every chain level.
pub fn singular_space(line_evs: &[LineEigenvalue], rho: f64) -> Result<SingularSpace> {
    check_rho(rho)?;
    let mut sorted: Vec<&LineEigenvalue> = line_evs.iter().collect();
    sorted.sort_by(|a, b| a.mode.cmp(&b.mode).then(a.index.cmp(&b.index)));
    if let Some(first) = sorted.first() {
        let (g, m) = (first.pencil.cap.geometry, first.pencil.cap.material);
        if sorted.iter().any(|le| le.pencil.cap.geometry != g || le.pencil.cap.material != m) {
            return Err(Error::ProvenanceMismatch(
                "line eigenvalues come from different caps or materials".into(),
            ));
        }
        if m.delta != 0.0 {
            return Err(Error::NotApplicableDissipative);
        }
    }
    let mut plus = Vec::new();
    for le in sorted {
        for &azimuth in Azimuth::for_mode(le.mode) {
            for k in 0..le.multiplicity() {
                for l in 0..le.chain_length(k) {
                    plus.push(build_singularity(le, k, l, rho, false)?.with_azimuth(azimuth)?);
                }
            }
        }
    }
    let minus: Vec<_> = plus.iter().map(Hypersingularity::conj).collect();
    let members: Vec<_> = plus.into_iter().chain(minus).collect();
    let dim = members.len();
    if dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    let outer_bc = line_evs.first().and_then(|le| le.pencil.cap.geometry.outer_bc());
    Ok(SingularSpace {
        members,
        dim,
        rho,
        outer_bc,
    })
}
