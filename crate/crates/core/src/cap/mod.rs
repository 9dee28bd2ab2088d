//! Circular spherical caps, piecewise-constant coefficients and their
//! azimuthal-mode finite-element discretization.
//!
//! Points of the unit sphere are written `(cos θ cos φ, sin θ cos φ, sin φ)`
//! with latitude `φ ∈ [-π/2, π/2]`. The negative material occupies the polar
//! cap `φ < -π/2 + α` around the south pole. For a separated angular
//! function `f(φ) e^{imθ}` the Laplace-Beltrami weak form reduces to
//!
//! ```text
//! ∫ σ (f' g' cos φ + m² f g / cos φ) dφ = Λ ∫ σ f g cos φ dφ
//! ```
//!
//! where `Λ = λ(λ+1)` is the pencil eigenvalue.

mod assembly;
mod element;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assembly::{assemble_dissipative_pencil, assemble_pencil, PencilMatrices, RegionPair};
pub use element::{ElementOrder, GaussRule};

/// Gauss points per element used for assembly and angular Grams.
pub const QUADRATURE_POINTS: usize = 4;

/// Boundary condition on the outer edge of the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Cross-section of the conical tip on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CapGeometry {
    /// The tip lies inside the domain: the cap is the whole sphere.
    Internal { alpha: f64 },
    /// The tip lies on the boundary: the cap is `φ < -π/2 + alpha_outer`.
    Boundary {
        alpha: f64,
        alpha_outer: f64,
        outer_bc: BoundaryCondition,
    },
}

impl CapGeometry {
    pub fn internal(alpha: f64) -> Result<Self> {
        let g = Self::Internal { alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn boundary(alpha: f64, alpha_outer: f64, outer_bc: BoundaryCondition) -> Result<Self> {
        let g = Self::Boundary {
            alpha,
            alpha_outer,
            outer_bc,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.alpha();
        if !(alpha > 0.0 && alpha < PI) {
            return Err(Error::InvalidGeometry(format!(
                "alpha = {alpha} must lie in (0, pi)"
            )));
        }
        if let Self::Boundary { alpha_outer, .. } = *self {
            if !(alpha_outer > alpha && alpha_outer <= PI) {
                return Err(Error::InvalidGeometry(format!(
                    "alpha_outer = {alpha_outer} must satisfy alpha < alpha_outer <= pi"
                )));
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Internal { alpha } | Self::Boundary { alpha, .. } => alpha,
        }
    }

    pub fn interface_latitude(&self) -> f64 {
        -FRAC_PI_2 + self.alpha()
    }

    /// Upper latitude of the cap.
    pub fn max_latitude(&self) -> f64 {
        match *self {
            Self::Internal { .. } => FRAC_PI_2,
            Self::Boundary { alpha_outer, .. } if alpha_outer >= PI => FRAC_PI_2,
            Self::Boundary { alpha_outer, .. } => -FRAC_PI_2 + alpha_outer,
        }
    }

    /// True when the cap reaches the north pole (no outer edge).
    pub fn closes_at_north_pole(&self) -> bool {
        self.max_latitude() == FRAC_PI_2
    }

    pub fn outer_bc(&self) -> Option<BoundaryCondition> {
        match *self {
            Self::Internal { .. } => None,
            Self::Boundary { outer_bc, .. } => Some(outer_bc),
        }
    }
}

/// Piecewise-constant coefficient: `sigma_minus` on the cap around the
/// south pole, `sigma_plus` elsewhere, both shifted by `i·delta`.
///
/// `sigma_minus` is negative in the critical setting; positive values are
/// accepted for reference computations (e.g. the homogeneous case κ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub sigma_plus: f64,
    pub sigma_minus: f64,
    pub delta: f64,
}

const KAPPA_EXCLUSION: f64 = 1e-12;

impl MaterialSpec {
    pub fn new(sigma_plus: f64, sigma_minus: f64) -> Result<Self> {
        let m = Self {
            sigma_plus,
            sigma_minus,
            delta: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    /// `sigma_plus = 1`, `sigma_minus = kappa`.
    pub fn from_contrast(kappa: f64) -> Result<Self> {
        Self::new(1.0, kappa)
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    /// The same contrast with both coefficients multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let m = Self {
            sigma_plus: c * self.sigma_plus,
            sigma_minus: c * self.sigma_minus,
            delta: c * self.delta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn kappa(&self) -> f64 {
        self.sigma_minus / self.sigma_plus
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_plus > 0.0 && self.sigma_plus.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "sigma_plus = {} must be positive",
                self.sigma_plus
            )));
        }
        if self.sigma_minus == 0.0 || !self.sigma_minus.is_finite() {
            return Err(Error::InvalidMaterial(format!(
                "sigma_minus = {} must be nonzero",
                self.sigma_minus
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "delta = {} must be nonnegative",
                self.delta
            )));
        }
        if (self.kappa() + 1.0).abs() <= KAPPA_EXCLUSION {
            return Err(Error::CriticalContrastExcluded);
        }
        Ok(())
    }

    pub fn sigma(&self, region: Region) -> f64 {
        match region {
            Region::Minus => self.sigma_minus,
            Region::Plus => self.sigma_plus,
        }
    }

    /// `max(|σ₊|, |σ₋|)`, the natural scale of σ-weighted Grams.
    pub fn scale(&self) -> f64 {
        self.sigma_plus.abs().max(self.sigma_minus.abs())
    }
}

/// Side of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Minus,
    Plus,
}

/// Interface-aligned 1D mesh in latitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    /// Element vertices, strictly increasing.
    pub nodes: Vec<f64>,
    pub order: ElementOrder,
    /// Index into `nodes` of the interface vertex.
    pub interface_index: usize,
}

impl Mesh1D {
    /// Uniform spacing on each side of the interface, element counts
    /// proportional to the side lengths.
    pub fn interface_aligned(
        start: f64,
        interface: f64,
        end: f64,
        elements: usize,
        order: ElementOrder,
    ) -> Result<Self> {
        if elements < 4 {
            return Err(Error::InvalidMesh(format!(
                "at least 4 elements required, got {elements}"
            )));
        }
        if !(start < interface && interface < end) {
            return Err(Error::InvalidMesh(
                "interface must lie strictly inside the latitude range".into(),
            ));
        }
        let fraction = (interface - start) / (end - start);
        let below = ((elements as f64 * fraction).round() as usize).clamp(1, elements - 1);
        let above = elements - below;
        let mut nodes = Vec::with_capacity(elements + 1);
        for k in 0..below {
            nodes.push(start + (interface - start) * k as f64 / below as f64);
        }
        nodes.push(interface);
        for k in 1..above {
            nodes.push(interface + (end - interface) * k as f64 / above as f64);
        }
        nodes.push(end);
        Ok(Self {
            nodes,
            order,
            interface_index: below,
        })
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Number of Lagrange nodes including element interiors.
    pub fn node_count(&self) -> usize {
        self.elements() * self.order.degree() + 1
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn region(&self, e: usize) -> Region {
        if e < self.interface_index {
            Region::Minus
        } else {
            Region::Plus
        }
    }

    /// Latitudes of all Lagrange nodes.
    pub fn node_latitudes(&self) -> Vec<f64> {
        let p = self.order.degree();
        let mut out = Vec::with_capacity(self.node_count());
        for e in 0..self.elements() {
            let (a, b) = self.element_bounds(e);
            for i in 0..p {
                out.push(a + (b - a) * i as f64 / p as f64);
            }
        }
        out.push(*self.nodes.last().unwrap());
        out
    }
}

/// Element count and order of a latitude mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshParams {
    pub elements: usize,
    pub order: u32,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            elements: 64,
            order: 2,
        }
    }
}

/// Which inner product an angular Gram uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Sigma,
    One,
}

/// A discretized cap for one azimuthal mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCap {
    pub geometry: CapGeometry,
    pub material: MaterialSpec,
    pub mode: u32,
    pub mesh: Mesh1D,
    /// Lagrange node -> degree of freedom; `None` for eliminated nodes.
    pub dof_map: Vec<Option<usize>>,
    pub n_dofs: usize,
    pub quadrature: GaussRule,
}

/// Builds and assembles the undamped or dissipative pencil of one mode.
pub fn mode_pencil(
    geometry: CapGeometry,
    material: MaterialSpec,
    mode: u32,
    mesh: MeshParams,
) -> Result<PencilMatrices> {
    assemble_pencil(&build_cap(geometry, material, mode, mesh.elements, mesh.order)?)
}

/// Discretizes `geometry` for azimuthal mode `mode`.
pub fn build_cap(
    geometry: CapGeometry,
    material: MaterialSpec,
    mode: u32,
    elements: usize,
    order: u32,
) -> Result<DiscreteCap> {
    geometry.validate()?;
    material.validate()?;
    let order = ElementOrder::from_degree(order)
        .ok_or_else(|| Error::InvalidMesh(format!("element order must be 1 or 2, got {order}")))?;
    let mesh = Mesh1D::interface_aligned(
        -FRAC_PI_2,
        geometry.interface_latitude(),
        geometry.max_latitude(),
        elements,
        order,
    )?;

    let nodes = mesh.node_count();
    let mut eliminated = vec![false; nodes];
    if mode >= 1 {
        eliminated[0] = true;
    }
    if geometry.closes_at_north_pole() {
        if mode >= 1 {
            eliminated[nodes - 1] = true;
        }
    } else if geometry.outer_bc() == Some(BoundaryCondition::Dirichlet) {
        eliminated[nodes - 1] = true;
    }
    let mut next = 0;
    let dof_map = eliminated
        .iter()
        .map(|&gone| {
            (!gone).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();

    Ok(DiscreteCap {
        geometry,
        material,
        mode,
        mesh,
        dof_map,
        n_dofs: next,
        quadrature: GaussRule::legendre(QUADRATURE_POINTS),
    })
}

impl DiscreteCap {
    pub fn latitude_range(&self) -> (f64, f64) {
        (self.mesh.nodes[0], *self.mesh.nodes.last().unwrap())
    }

    pub fn eliminated_count(&self) -> usize {
        self.dof_map.iter().filter(|d| d.is_none()).count()
    }

    /// Degrees of freedom of element `e`, one per local node.
    pub fn element_dofs(&self, e: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        let p = self.mesh.order.degree();
        (0..=p).map(move |i| self.dof_map[e * p + i])
    }

    /// Complex coefficient `σ + iδ` on an element region.
    pub fn sigma_on(&self, region: Region) -> c64 {
        c64::new(self.material.sigma(region), self.material.delta)
    }

    /// Vector with every retained degree of freedom set to `value`.
    pub fn constant_vector(&self, value: f64) -> Vec<c64> {
        vec![c64::new(value, 0.0); self.n_dofs]
    }

    /// Index of the element containing `latitude` (the lower one at a vertex).
    pub fn locate(&self, latitude: f64) -> Result<usize> {
        let (lo, hi) = self.latitude_range();
        let slack = 1e-14 * (1.0 + hi.abs());
        if !(latitude >= lo - slack && latitude <= hi + slack) {
            return Err(Error::OutOfRange {
                latitude,
                min: lo,
                max: hi,
            });
        }
        let nodes = &self.mesh.nodes;
        let idx = nodes.partition_point(|&x| x < latitude);
        Ok(idx.saturating_sub(1).min(self.mesh.elements() - 1))
    }

    /// Value of the finite-element function with coefficients `f` at a
    /// latitude inside element `e`.
    pub fn evaluate_in(&self, f: &[c64], e: usize, latitude: f64) -> c64 {
        let (a, b) = self.mesh.element_bounds(e);
        let xi = 2.0 * (latitude - a) / (b - a) - 1.0;
        let (n, _) = self.mesh.order.shape(xi);
        self.element_dofs(e)
            .zip(n)
            .filter_map(|(dof, s)| dof.map(|d| f[d] * s))
            .sum()
    }

    pub fn evaluate(&self, f: &[c64], latitude: f64) -> Result<c64> {
        self.check_len(f)?;
        let e = self.locate(latitude)?;
        Ok(self.evaluate_in(f, e, latitude))
    }

    pub(crate) fn check_len(&self, f: &[c64]) -> Result<()> {
        if f.len() != self.n_dofs {
            return Err(Error::DimensionMismatch {
                expected: self.n_dofs,
                found: f.len(),
            });
        }
        Ok(())
    }
}

/// Coefficient at `latitude`.
///
/// Exactly at the interface the value of `side` is returned, or `σ₊` when
/// no side is given.
pub fn sigma_at(cap: &DiscreteCap, latitude: f64, side: Option<Region>) -> Result<c64> {
    let (lo, hi) = cap.latitude_range();
    if !(latitude >= lo && latitude <= hi) {
        return Err(Error::OutOfRange {
            latitude,
            min: lo,
            max: hi,
        });
    }
    let interface = cap.geometry.interface_latitude();
    let region = if latitude < interface {
        Region::Minus
    } else if latitude > interface {
        Region::Plus
    } else {
        side.unwrap_or(Region::Plus)
    };
    Ok(cap.sigma_on(region))
}

/// `∫ w(φ) f ḡ cos φ dφ` by element-wise Gauss quadrature.
pub fn angular_gram(cap: &DiscreteCap, f: &[c64], g: &[c64], weight: Weight) -> Result<c64> {
    cap.check_len(f)?;
    cap.check_len(g)?;
    let mut total = c64::new(0.0, 0.0);
    for e in 0..cap.mesh.elements() {
        let (a, b) = cap.mesh.element_bounds(e);
        let jac = (b - a) / 2.0;
        let w_elem = match weight {
            Weight::Sigma => cap.sigma_on(cap.mesh.region(e)),
            Weight::One => c64::new(1.0, 0.0),
        };
        let mut elem = c64::new(0.0, 0.0);
        for (xi, wq) in cap.quadrature.points.iter().zip(&cap.quadrature.weights) {
            let lat = a + (xi + 1.0) * jac;
            let fv = cap.evaluate_in(f, e, lat);
            let gv = cap.evaluate_in(g, e, lat);
            elem += fv * gv.conj() * (wq * jac * lat.cos());
        }
        total += w_elem * elem;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn material(kappa: f64) -> MaterialSpec {
        MaterialSpec::from_contrast(kappa).unwrap()
    }

    #[test]
    fn internal_axisymmetric_cap_keeps_every_node() {
        let cap = build_cap(CapGeometry::internal(FRAC_PI_4).unwrap(), material(-0.5), 0, 32, 2).unwrap();
        assert_eq!(cap.eliminated_count(), 0);
        assert_eq!(cap.n_dofs, 65);
        let node = cap.mesh.nodes[cap.mesh.interface_index];
        assert_eq!(node, -FRAC_PI_4);
    }

    #[test]
    fn nonzero_mode_eliminates_both_poles() {
        let cap = build_cap(CapGeometry::internal(FRAC_PI_4).unwrap(), material(-0.5), 1, 32, 2).unwrap();
        assert_eq!(cap.eliminated_count(), 2);
        assert!(cap.dof_map[0].is_none());
        assert!(cap.dof_map.last().unwrap().is_none());
    }

    #[test]
    fn dirichlet_boundary_eliminates_outer_node() {
        let geo = CapGeometry::boundary(FRAC_PI_4, FRAC_PI_2, BoundaryCondition::Dirichlet).unwrap();
        let cap = build_cap(geo, material(-0.5), 0, 16, 2).unwrap();
        assert_eq!(cap.eliminated_count(), 1);
        assert!(cap.dof_map.last().unwrap().is_none());
        assert_eq!(cap.latitude_range(), (-FRAC_PI_2, 0.0));

        let geo = CapGeometry::boundary(FRAC_PI_4, FRAC_PI_2, BoundaryCondition::Neumann).unwrap();
        let cap = build_cap(geo, material(-0.5), 0, 16, 2).unwrap();
        assert_eq!(cap.eliminated_count(), 0);
    }

    #[test]
    fn rejects_excluded_contrast_and_bad_apertures() {
        assert_eq!(MaterialSpec::from_contrast(-1.0), Err(Error::CriticalContrastExcluded));
        assert_eq!(MaterialSpec::new(2.0, -2.0), Err(Error::CriticalContrastExcluded));
        assert!(matches!(CapGeometry::internal(0.0), Err(Error::InvalidGeometry(_))));
        assert!(matches!(CapGeometry::internal(PI), Err(Error::InvalidGeometry(_))));
        assert!(matches!(
            CapGeometry::boundary(1.0, 0.5, BoundaryCondition::Neumann),
            Err(Error::InvalidGeometry(_))
        ));
        let geo = CapGeometry::internal(1.0).unwrap();
        assert!(matches!(build_cap(geo, material(-0.5), 0, 3, 2), Err(Error::InvalidMesh(_))));
        assert!(matches!(build_cap(geo, material(-0.5), 0, 8, 3), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn sigma_lookup() {
        let geo = CapGeometry::internal(FRAC_PI_4).unwrap();
        let cap = build_cap(geo, material(-0.5), 0, 16, 2).unwrap();
        assert_eq!(sigma_at(&cap, -FRAC_PI_2 + FRAC_PI_4 / 2.0, None).unwrap(), c64::new(-0.5, 0.0));
        assert_eq!(sigma_at(&cap, 0.0, None).unwrap(), c64::new(1.0, 0.0));
        assert_eq!(sigma_at(&cap, -FRAC_PI_4, None).unwrap(), c64::new(1.0, 0.0));
        assert_eq!(sigma_at(&cap, -FRAC_PI_4, Some(Region::Minus)).unwrap(), c64::new(-0.5, 0.0));
        assert!(matches!(sigma_at(&cap, 2.0, None), Err(Error::OutOfRange { .. })));

        let lossy = build_cap(geo, material(-0.5).with_delta(0.01).unwrap(), 0, 16, 2).unwrap();
        assert_eq!(sigma_at(&lossy, 0.0, None).unwrap(), c64::new(1.0, 0.01));
    }

    #[test]
    fn gram_of_constants() {
        let cap = build_cap(CapGeometry::internal(FRAC_PI_4).unwrap(), material(-0.5), 0, 32, 2).unwrap();
        let one = cap.constant_vector(1.0);
        let g = angular_gram(&cap, &one, &one, Weight::One).unwrap();
        assert!((g - c64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gram_with_equal_and_opposite_hemispheres() {
        // kappa = -1 is excluded from pencils, so build the cap with an
        // admissible material and evaluate the Sigma weight by hand.
        let geo = CapGeometry::internal(FRAC_PI_2).unwrap();
        let mut cap = build_cap(geo, material(-0.5), 0, 32, 2).unwrap();
        cap.material.sigma_minus = -1.0;
        let one = cap.constant_vector(1.0);
        let g = angular_gram(&cap, &one, &one, Weight::Sigma).unwrap();
        assert!(g.norm() < 1e-14, "{g}");
    }

    #[test]
    fn gram_rejects_wrong_length() {
        let cap = build_cap(CapGeometry::internal(1.0).unwrap(), material(-0.5), 0, 8, 2).unwrap();
        let f = vec![c64::new(1.0, 0.0); 3];
        assert!(matches!(
            angular_gram(&cap, &f, &f, Weight::One),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadrature_exact_on_quartic_times_cosine_interpolant() {
        // Degree-4 integrand in the element variable times the quadratic
        // interpolant of cos φ is a degree-6 polynomial: the 4-point rule
        // must reproduce the monomial integral exactly.
        let cap = build_cap(CapGeometry::internal(1.0).unwrap(), material(2.0), 0, 8, 2).unwrap();
        let rule = &cap.quadrature;
        for e in 0..cap.mesh.elements() {
            let (a, b) = cap.mesh.element_bounds(e);
            let (ca, cm, cb) = (a.cos(), ((a + b) / 2.0).cos(), b.cos());
            let cos_interp = |xi: f64| {
                let (n, _) = ElementOrder::Quadratic.shape(xi);
                n[0] * ca + n[1] * cm + n[2] * cb
            };
            let poly = |xi: f64| 1.0 + 2.0 * xi - xi.powi(2) + 0.5 * xi.powi(3) + 3.0 * xi.powi(4);
            let numeric: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(&x, w)| w * poly(x) * cos_interp(x))
                .sum();
            // Exact: expand both factors as monomials and integrate on [-1, 1].
            let p = [1.0, 2.0, -1.0, 0.5, 3.0];
            let q = [cm, (cb - ca) / 2.0, (ca + cb) / 2.0 - cm];
            let mut exact = 0.0;
            for (i, pi) in p.iter().enumerate() {
                for (j, qj) in q.iter().enumerate() {
                    let k = i + j;
                    if k % 2 == 0 {
                        exact += pi * qj * 2.0 / (k as f64 + 1.0);
                    }
                }
            }
            assert!((numeric - exact).abs() < 1e-12, "element {e}: {numeric} vs {exact}");
        }
    }

    #[test]
    fn gram_of_quartic_matches_analytic_integral() {
        let cap = build_cap(CapGeometry::internal(1.0).unwrap(), material(2.0), 0, 64, 2).unwrap();
        let f: Vec<c64> = cap.mesh.node_latitudes().iter().map(|x| c64::new(x * x, 0.0)).collect();
        let g = angular_gram(&cap, &f, &f, Weight::One).unwrap();
        // ∫ φ⁴ cos φ over [-π/2, π/2] by repeated integration by parts.
        let h = FRAC_PI_2;
        let exact = 2.0 * (h.powi(4) - 12.0 * h * h + 24.0);
        assert!((g.re - exact).abs() < 1e-12 * exact.abs(), "{} vs {}", g.re, exact);
    }
}
