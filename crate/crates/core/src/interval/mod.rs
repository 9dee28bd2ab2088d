//! Contrast ranges in which the cone tip carries propagating singularities.
//!
//! For a fixed aperture the set of contrasts `κ < 0` with at least one
//! exponent on the energy line is an interval touching `κ = -1`. This module
//! locates its far endpoint numerically and compares it with the closed form
//! built from hypergeometric series.

mod hyp2f1;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cap::{mode_pencil, CapGeometry, MaterialSpec, MeshParams};
use crate::error::{Error, Result};
use crate::spectrum::{self, DEFAULT_LINE_TOL};

pub use hyp2f1::{hyp2f1, SERIES_RADIUS};

/// Grid points with `|κ + 1| ≤ KAPPA_GUARD` are skipped.
pub const KAPPA_GUARD: f64 = 0.02;

/// Aperture range on which both series arguments stay within
/// [`SERIES_RADIUS`].
pub fn aleph_domain() -> (f64, f64) {
    let min = (2.0 * SERIES_RADIUS - 1.0).acos();
    (min, std::f64::consts::PI - min)
}

/// `ℵ_α = F(½,½;1;c) F(3/2,3/2;2;s) / (F(½,½;1;s) F(3/2,3/2;2;c))` with
/// `c = cos²(α/2)`, `s = sin²(α/2)`.
pub fn aleph(alpha: f64) -> Result<f64> {
    let (min, max) = aleph_domain();
    // cos(π/2) is 6e-17 in floating point; snap so that ℵ_{π/2} = 1 exactly.
    let mut d = alpha.cos() / 2.0;
    if d.abs() < 1e-16 {
        d = 0.0;
    }
    let c = 0.5 + d;
    let s = 0.5 - d;
    if !(c <= SERIES_RADIUS && s <= SERIES_RADIUS) {
        return Err(Error::AlephDomain { alpha, min, max });
    }
    let num = hyp2f1(0.5, 0.5, 1.0, c)? * hyp2f1(1.5, 1.5, 2.0, s)?;
    let den = hyp2f1(0.5, 0.5, 1.0, s)? * hyp2f1(1.5, 1.5, 2.0, c)?;
    Ok(num / den)
}

/// One mode with exponents on the energy line at a given contrast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeWitness {
    pub mode: u32,
    pub kappa: f64,
    /// `η > 0` of each line exponent `-1/2 ± iη`, ascending.
    pub etas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackholeReport {
    pub kappa: f64,
    pub present: bool,
    pub witnesses: Vec<ModeWitness>,
}

fn check_contrast(kappa: f64) -> Result<()> {
    if !(kappa < 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "contrast sweeps need kappa < 0, got {kappa}"
        )));
    }
    if kappa == -1.0 {
        return Err(Error::CriticalContrastExcluded);
    }
    Ok(())
}

/// `η` values of the line eigenvalues of one mode (eigenvalues only).
fn mode_etas(geometry: CapGeometry, kappa: f64, mode: u32, mesh: MeshParams) -> Result<Vec<f64>> {
    let p = mode_pencil(geometry, MaterialSpec::from_contrast(kappa)?, mode, mesh)?;
    let values = spectrum::pencil_eigenvalues(&p)?;
    let mut etas: Vec<f64> = values
        .iter()
        .filter(|v| spectrum::on_line(**v, DEFAULT_LINE_TOL) && v.im >= 0.0)
        .map(|v| (-(v.re + 0.25)).sqrt())
        .collect();
    etas.sort_by(f64::total_cmp);
    Ok(etas)
}

/// Whether any of `modes` has an exponent on the energy line at contrast
/// `kappa`, with one witness per such mode.
pub fn has_blackhole(geometry: CapGeometry, kappa: f64, modes: &[u32], mesh: MeshParams) -> Result<BlackholeReport> {
    check_contrast(kappa)?;
    let mut witnesses = Vec::new();
    for &mode in modes {
        let etas = mode_etas(geometry, kappa, mode, mesh)?;
        if !etas.is_empty() {
            witnesses.push(ModeWitness { mode, kappa, etas });
        }
    }
    Ok(BlackholeReport {
        kappa,
        present: !witnesses.is_empty(),
        witnesses,
    })
}

/// Short-circuiting variant: stops at the first mode with a line exponent.
fn first_witness(geometry: CapGeometry, kappa: f64, modes: &[u32], mesh: MeshParams) -> Result<Option<ModeWitness>> {
    for &mode in modes {
        let etas = mode_etas(geometry, kappa, mode, mesh)?;
        if !etas.is_empty() {
            return Ok(Some(ModeWitness { mode, kappa, etas }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub grid: usize,
    /// Absolute width at which bisection stops.
    pub bisect_tol: f64,
    pub modes: Vec<u32>,
    pub mesh: MeshParams,
}

impl ScanSettings {
    fn validate(&self) -> Result<()> {
        if !(self.kappa_min < self.kappa_max && self.kappa_max < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "scan range [{}, {}] must be increasing and negative",
                self.kappa_min, self.kappa_max
            )));
        }
        if self.grid < 2 {
            return Err(Error::InvalidArgument("scan grid needs at least 2 points".into()));
        }
        if !(self.bisect_tol > 0.0) {
            return Err(Error::InvalidArgument("bisect_tol must be positive".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidArgument("no azimuthal modes to scan".into()));
        }
        Ok(())
    }

    fn points(&self) -> Vec<f64> {
        let n = self.grid - 1;
        (0..=n)
            .map(|i| self.kappa_min + (self.kappa_max - self.kappa_min) * i as f64 / n as f64)
            .filter(|k| (k + 1.0).abs() > KAPPA_GUARD)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub kappa: f64,
    pub blackhole: bool,
    /// First mode found with a line exponent.
    pub mode: Option<u32>,
}

/// A bracketed change of `has_blackhole`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub kappa: f64,
    pub lower: f64,
    pub upper: f64,
    /// Modes whose status differs across the bracket.
    pub modes: Vec<u32>,
    /// `has_blackhole` just above `upper`'s side (toward larger κ).
    pub blackhole_above: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalInterval {
    pub alpha: f64,
    /// The endpoint shared by every such interval.
    pub endpoint_inner: f64,
    pub endpoint_detected: f64,
    /// `-1/ℵ_α`, when `α` is inside the series domain.
    pub endpoint_closed_form: Option<f64>,
    /// `-ℵ_α`, the reciprocal orientation.
    pub endpoint_closed_form_reciprocal: Option<f64>,
    pub attaining_modes: Vec<u32>,
    /// Witnesses gathered while scanning, keyed by mode.
    pub per_mode: BTreeMap<u32, Vec<ModeWitness>>,
    pub grid: Vec<GridPoint>,
    pub transitions: Vec<Transition>,
    /// False when more than one transition was found on one side of `-1`.
    pub monotone: bool,
    pub settings: ScanSettings,
}

impl CriticalInterval {
    pub fn relative_error(&self) -> Option<f64> {
        self.endpoint_closed_form
            .map(|c| (self.endpoint_detected - c).abs() / c.abs())
    }
}

/// Scans `κ` over the settings' range, brackets every change of
/// `has_blackhole` and refines it by bisection.
///
/// Grid points are evaluated in parallel. Bisection only re-solves the modes
/// that change status inside the bracket. The detected endpoint is the
/// transition farthest from `-1`; additional transitions mark the result as
/// non-monotone.
pub fn scan_interval(geometry: CapGeometry, settings: &ScanSettings) -> Result<CriticalInterval> {
    geometry.validate()?;
    settings.validate()?;
    let mesh = settings.mesh;
    let modes = &settings.modes;
    let points = settings.points();
    let status: Vec<Option<ModeWitness>> = points
        .par_iter()
        .map(|&k| first_witness(geometry, k, modes, mesh))
        .collect::<Result<_>>()?;

    let mut per_mode: BTreeMap<u32, Vec<ModeWitness>> = BTreeMap::new();
    let grid: Vec<GridPoint> = points
        .iter()
        .zip(&status)
        .map(|(&kappa, w)| GridPoint {
            kappa,
            blackhole: w.is_some(),
            mode: w.as_ref().map(|w| w.mode),
        })
        .collect();
    for w in status.iter().flatten() {
        per_mode.entry(w.mode).or_default().push(w.clone());
    }

    let mut transitions = Vec::new();
    for i in 0..grid.len().saturating_sub(1) {
        let (lo, hi) = (&grid[i], &grid[i + 1]);
        if lo.blackhole == hi.blackhole || (lo.kappa + 1.0) * (hi.kappa + 1.0) < 0.0 {
            continue;
        }
        let below = has_blackhole(geometry, lo.kappa, modes, mesh)?;
        let above = has_blackhole(geometry, hi.kappa, modes, mesh)?;
        let active = |r: &BlackholeReport| r.witnesses.iter().map(|w| w.mode).collect::<Vec<_>>();
        let (ma, mb) = (active(&below), active(&above));
        let flipping: Vec<u32> = modes
            .iter()
            .copied()
            .filter(|m| ma.contains(m) != mb.contains(m))
            .collect();
        for w in below.witnesses.into_iter().chain(above.witnesses) {
            let list = per_mode.entry(w.mode).or_default();
            if !list.iter().any(|x| x.kappa == w.kappa) {
                list.push(w);
            }
        }
        let (mut a, mut b) = (lo.kappa, hi.kappa);
        let low_state = flipping.iter().any(|m| ma.contains(m));
        while b - a > settings.bisect_tol {
            let mid = 0.5 * (a + b);
            let w = first_witness(geometry, mid, &flipping, mesh)?;
            let state = w.is_some();
            if let Some(w) = w {
                per_mode.entry(w.mode).or_default().push(w);
            }
            if state == low_state {
                a = mid;
            } else {
                b = mid;
            }
        }
        transitions.push(Transition {
            kappa: 0.5 * (a + b),
            lower: a,
            upper: b,
            modes: flipping,
            blackhole_above: hi.blackhole,
        });
    }
    for list in per_mode.values_mut() {
        list.sort_by(|x, y| x.kappa.total_cmp(&y.kappa));
    }

    let Some(main) = transitions
        .iter()
        .max_by(|x, y| (x.kappa + 1.0).abs().total_cmp(&(y.kappa + 1.0).abs()))
        .cloned()
    else {
        let value = grid.first().map(|g| g.blackhole).unwrap_or(false);
        return Err(Error::NoTransition { value });
    };
    let side = |k: f64| k < -1.0;
    let monotone = transitions.iter().filter(|t| side(t.kappa) == side(main.kappa)).count() == 1;
    let alpha = geometry.alpha();
    let closed = aleph(alpha).ok();

    Ok(CriticalInterval {
        alpha,
        endpoint_inner: -1.0,
        endpoint_detected: main.kappa,
        endpoint_closed_form: closed.map(|a| -1.0 / a),
        endpoint_closed_form_reciprocal: closed.map(|a| -a),
        attaining_modes: main.modes.clone(),
        per_mode,
        grid,
        transitions,
        monotone,
        settings: settings.clone(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use super::*;

    #[test]
    fn aleph_at_right_angle_is_one() {
        assert_eq!(aleph(FRAC_PI_2).unwrap(), 1.0);
    }

    #[test]
    fn aleph_reflection() {
        for alpha in [0.4, FRAC_PI_4, 1.2] {
            let a = aleph(alpha).unwrap();
            let b = aleph(PI - alpha).unwrap();
            assert!((a * b - 1.0).abs() < 1e-12, "alpha={alpha}");
            assert!(a < 1.0);
        }
    }

    #[test]
    fn aleph_domain_guard() {
        let (min, max) = aleph_domain();
        assert!((min - 0.98f64.acos()).abs() < 1e-15);
        assert!(aleph(min + 1e-9).is_ok());
        assert!(aleph(max - 1e-9).is_ok());
        assert!(matches!(aleph(0.1), Err(Error::AlephDomain { .. })));
        assert!(matches!(aleph(PI - 0.1), Err(Error::AlephDomain { .. })));
    }

    #[test]
    fn blackhole_rejects_nonnegative_and_critical_contrast() {
        let g = CapGeometry::internal(FRAC_PI_4).unwrap();
        let mesh = MeshParams { elements: 16, order: 2 };
        assert!(matches!(has_blackhole(g, 0.5, &[0], mesh), Err(Error::InvalidMaterial(_))));
        assert_eq!(has_blackhole(g, -1.0, &[0], mesh), Err(Error::CriticalContrastExcluded));
    }

    #[test]
    fn blackhole_inside_and_outside_interval() {
        let g = CapGeometry::internal(FRAC_PI_4).unwrap();
        let mesh = MeshParams { elements: 48, order: 2 };
        let inside = has_blackhole(g, -2.0, &[0, 1, 2], mesh).unwrap();
        assert!(inside.present);
        assert!(inside.witnesses.iter().all(|w| w.etas.iter().all(|&e| e > 0.0)));
        let outside = has_blackhole(g, -8.0, &[0, 1, 2], mesh).unwrap();
        assert!(!outside.present);
        let outside = has_blackhole(g, -0.5, &[0, 1, 2], mesh).unwrap();
        assert!(!outside.present);
    }

    #[test]
    fn scan_rejects_bad_settings() {
        let g = CapGeometry::internal(FRAC_PI_4).unwrap();
        let base = ScanSettings {
            kappa_min: -6.0,
            kappa_max: -1.1,
            grid: 8,
            bisect_tol: 1e-3,
            modes: vec![0],
            mesh: MeshParams { elements: 16, order: 2 },
        };
        for bad in [
            ScanSettings { kappa_max: 0.5, ..base.clone() },
            ScanSettings { grid: 1, ..base.clone() },
            ScanSettings { bisect_tol: 0.0, ..base.clone() },
            ScanSettings { modes: vec![], ..base.clone() },
        ] {
            assert!(matches!(scan_interval(g, &bad), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn scan_finds_endpoint_near_closed_form() {
        let g = CapGeometry::internal(FRAC_PI_4).unwrap();
        let settings = ScanSettings {
            kappa_min: -6.0,
            kappa_max: -1.05,
            grid: 12,
            bisect_tol: 1e-3,
            modes: vec![0, 1, 2],
            mesh: MeshParams { elements: 64, order: 2 },
        };
        let r = scan_interval(g, &settings).unwrap();
        let closed = r.endpoint_closed_form.unwrap();
        assert!(r.relative_error().unwrap() < 2e-2, "{} vs {}", r.endpoint_detected, closed);
        assert!(r.monotone);
        assert_eq!(r.attaining_modes, vec![0]);
        assert!(r.per_mode.contains_key(&0));
    }

    #[test]
    fn scan_without_transition_reports_constant_status() {
        let g = CapGeometry::internal(FRAC_PI_4).unwrap();
        let settings = ScanSettings {
            kappa_min: -0.9,
            kappa_max: -0.1,
            grid: 4,
            bisect_tol: 1e-3,
            modes: vec![0, 1],
            mesh: MeshParams { elements: 24, order: 2 },
        };
        assert_eq!(scan_interval(g, &settings).unwrap_err(), Error::NoTransition { value: false });
    }
}
