use faer::Mat;
use num_complex::Complex64 as c64;

use super::{DiscreteCap, Region};
use crate::error::{Error, Result};

/// A matrix assembled separately on the two sides of the interface with
/// unit coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPair {
    pub minus: Mat<f64>,
    pub plus: Mat<f64>,
}

impl RegionPair {
    fn zeros(n: usize) -> Self {
        Self {
            minus: Mat::zeros(n, n),
            plus: Mat::zeros(n, n),
        }
    }

    fn part_mut(&mut self, region: Region) -> &mut Mat<f64> {
        match region {
            Region::Minus => &mut self.minus,
            Region::Plus => &mut self.plus,
        }
    }

    /// `sigma_minus · minus + sigma_plus · plus`.
    pub fn weighted(&self, sigma_minus: f64, sigma_plus: f64) -> Mat<f64> {
        let n = self.minus.nrows();
        Mat::from_fn(n, n, |i, j| sigma_minus * self.minus[(i, j)] + sigma_plus * self.plus[(i, j)])
    }

    /// The unit-coefficient matrix on the whole cap.
    pub fn unit(&self) -> Mat<f64> {
        self.weighted(1.0, 1.0)
    }
}

/// The discretized symbol `A - Λ B` of one azimuthal mode.
///
/// `A` is the σ-weighted stiffness matrix and `B` the σ-weighted mass matrix,
/// with σ replaced by `σ + iδ` when the material carries dissipation. Both are
/// complex symmetric (never conjugated). The per-region unit-coefficient
/// parts are kept so that the undamped pencil `(A₀, B₀)`, the dissipation
/// parts `(A₁, B₁)` and contrast derivatives can be rebuilt exactly.
#[derive(Debug, Clone)]
pub struct PencilMatrices {
    pub cap: DiscreteCap,
    pub stiffness: RegionPair,
    pub mass: RegionPair,
    pub delta: f64,
}

impl PencilMatrices {
    pub fn mode(&self) -> u32 {
        self.cap.mode
    }

    pub fn n_dofs(&self) -> usize {
        self.cap.n_dofs
    }

    pub fn is_dissipative(&self) -> bool {
        self.delta > 0.0
    }

    /// `A₀`, the real σ-weighted stiffness matrix.
    pub fn sigma_stiffness(&self) -> Mat<f64> {
        let m = &self.cap.material;
        self.stiffness.weighted(m.sigma_minus, m.sigma_plus)
    }

    /// `B₀`, the real σ-weighted mass matrix.
    pub fn sigma_mass(&self) -> Mat<f64> {
        let m = &self.cap.material;
        self.mass.weighted(m.sigma_minus, m.sigma_plus)
    }

    /// `A₁`, the unit-coefficient stiffness matrix.
    pub fn unit_stiffness(&self) -> Mat<f64> {
        self.stiffness.unit()
    }

    /// `B₁`, the unit-coefficient (weight-One) mass matrix.
    pub fn unit_mass(&self) -> Mat<f64> {
        self.mass.unit()
    }

    /// `(A₁, B₁)` such that `A(δ) = A₀ + iδA₁`, `B(δ) = B₀ + iδB₁`.
    pub fn dissipation_parts(&self) -> (Mat<f64>, Mat<f64>) {
        (self.unit_stiffness(), self.unit_mass())
    }

    pub fn a(&self) -> Mat<c64> {
        combine(&self.sigma_stiffness(), &self.unit_stiffness(), self.delta)
    }

    pub fn b(&self) -> Mat<c64> {
        combine(&self.sigma_mass(), &self.unit_mass(), self.delta)
    }

    /// The same cap without dissipation.
    pub fn undamped(&self) -> PencilMatrices {
        let mut p = self.clone();
        p.delta = 0.0;
        p.cap.material.delta = 0.0;
        p
    }
}

fn combine(real: &Mat<f64>, imag: &Mat<f64>, delta: f64) -> Mat<c64> {
    Mat::from_fn(real.nrows(), real.ncols(), |i, j| {
        c64::new(real[(i, j)], delta * imag[(i, j)])
    })
}

/// Assembles the symbol pencil of `cap` (dissipative when the material has
/// `delta > 0`).
pub fn assemble_pencil(cap: &DiscreteCap) -> Result<PencilMatrices> {
    cap.geometry.validate()?;
    cap.material.validate()?;
    let n = cap.n_dofs;
    let mut stiffness = RegionPair::zeros(n);
    let mut mass = RegionPair::zeros(n);
    let m2 = (cap.mode as f64).powi(2);
    let order = cap.mesh.order;
    let npe = order.nodes_per_element();

    for e in 0..cap.mesh.elements() {
        let (a, b) = cap.mesh.element_bounds(e);
        let h = b - a;
        let jac = h / 2.0;
        let mut k_loc = [[0.0; 3]; 3];
        let mut m_loc = [[0.0; 3]; 3];
        for (xi, w) in cap.quadrature.points.iter().zip(&cap.quadrature.weights) {
            let lat = a + (xi + 1.0) * jac;
            let c = lat.cos();
            let (shape, dref) = order.shape(*xi);
            let wj = w * jac;
            for i in 0..npe {
                let di = dref[i] / jac;
                for j in i..npe {
                    let dj = dref[j] / jac;
                    let nn = shape[i] * shape[j];
                    k_loc[i][j] += wj * (di * dj * c + m2 * nn / c);
                    m_loc[i][j] += wj * nn * c;
                }
            }
        }
        // Mirror so the element matrices are bitwise symmetric.
        for i in 0..npe {
            for j in 0..i {
                k_loc[i][j] = k_loc[j][i];
                m_loc[i][j] = m_loc[j][i];
            }
        }
        let region = cap.mesh.region(e);
        let dofs: Vec<Option<usize>> = cap.element_dofs(e).collect();
        let ks = stiffness.part_mut(region);
        for i in 0..npe {
            let Some(gi) = dofs[i] else { continue };
            for j in 0..npe {
                let Some(gj) = dofs[j] else { continue };
                ks[(gi, gj)] += k_loc[i][j];
            }
        }
        let ms = mass.part_mut(region);
        for i in 0..npe {
            let Some(gi) = dofs[i] else { continue };
            for j in 0..npe {
                let Some(gj) = dofs[j] else { continue };
                ms[(gi, gj)] += m_loc[i][j];
            }
        }
    }

    Ok(PencilMatrices {
        cap: cap.clone(),
        stiffness,
        mass,
        delta: cap.material.delta,
    })
}

/// Assembles the pencil with coefficient `σ + iδ` on the whole cap.
pub fn assemble_dissipative_pencil(cap: &DiscreteCap, delta: f64) -> Result<PencilMatrices> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dissipation delta = {delta} must be positive"
        )));
    }
    let mut cap = cap.clone();
    cap.material.delta = delta;
    assemble_pencil(&cap)
}
