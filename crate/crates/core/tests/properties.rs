use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use conetip_core::cap::{mode_pencil, CapGeometry, MaterialSpec, MeshParams};
use conetip_core::interval::{aleph, aleph_domain, hyp2f1, scan_interval, ScanSettings, SERIES_RADIUS};
use conetip_core::singular::{flux_matrix, mandelstam_basis, singular_space};
use conetip_core::spectrum::{
    exponents_from_pencil_value, jordan_chains, line_eigenvalues, pencil_eigenvalues, solve_pencil, LineEigenvalue,
    DEFAULT_LINE_TOL,
};
use num_complex::Complex64 as c64;
use proptest::prelude::*;

fn mesh(elements: usize) -> MeshParams {
    MeshParams { elements, order: 2 }
}

fn line_evs(alpha: f64, kappa: f64, modes: &[u32], elements: usize) -> Vec<LineEigenvalue> {
    let geometry = CapGeometry::internal(alpha).unwrap();
    let material = MaterialSpec::from_contrast(kappa).unwrap();
    let mut out = Vec::new();
    for &m in modes {
        let p = Arc::new(mode_pencil(geometry, material, m, mesh(elements)).unwrap());
        let spec = solve_pencil(p.clone()).unwrap();
        for le in line_eigenvalues(&spec, DEFAULT_LINE_TOL).unwrap() {
            out.push(jordan_chains(&p, le).unwrap());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponent_map_inverts_the_pencil_value(re in -50.0f64..50.0, im in -50.0f64..50.0) {
        let value = c64::new(re, im);
        let (plus, minus) = exponents_from_pencil_value(value);
        let scale = 1.0 + value.norm();
        prop_assert!((plus * (plus + 1.0) - value).norm() < 1e-12 * scale);
        prop_assert!((minus * (minus + 1.0) - value).norm() < 1e-12 * scale);
        prop_assert!((plus + minus + 1.0).norm() < 1e-12 * scale.sqrt());
        // Reflection λ ↦ -1-λ swaps the pair.
        let (p2, m2) = exponents_from_pencil_value((-1.0 - plus) * (-plus));
        prop_assert!((p2 - plus).norm() < 1e-10 * scale && (m2 - minus).norm() < 1e-10 * scale
            || (p2 - minus).norm() < 1e-10 * scale && (m2 - plus).norm() < 1e-10 * scale);
    }

    #[test]
    fn aleph_reflection(alpha in 0.21f64..(PI - 0.21)) {
        let a = aleph(alpha).unwrap();
        let b = aleph(PI - alpha).unwrap();
        prop_assert!((a * b - 1.0).abs() < 1e-10);
        prop_assert!(a > 0.0);
    }

    #[test]
    fn hypergeometric_symmetry_and_euler(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.3f64..3.0, z in -0.9f64..0.9) {
        let f = hyp2f1(a, b, c, z).unwrap();
        let g = hyp2f1(b, a, c, z).unwrap();
        prop_assert!((f - g).abs() <= 1e-12 * f.abs().max(1.0));
        // Euler: F(a,b;c;z) = (1-z)^{c-a-b} F(c-a,c-b;c;z).
        let e = (1.0 - z).powf(c - a - b) * hyp2f1(c - a, c - b, c, z).unwrap();
        prop_assert!((f - e).abs() <= 1e-9 * f.abs().max(1.0), "{f} vs {e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn spectrum_ignores_a_common_coefficient_scale(kappa in -4.0f64..-0.3, mode in 0u32..3) {
        prop_assume!((kappa + 1.0).abs() > 0.05);
        let geometry = CapGeometry::internal(FRAC_PI_4).unwrap();
        let base = pencil_eigenvalues(&mode_pencil(geometry, MaterialSpec::from_contrast(kappa).unwrap(), mode, mesh(24)).unwrap()).unwrap();
        for c in [2.0, 10.0] {
            let scaled = MaterialSpec::new(c, c * kappa).unwrap();
            let values = pencil_eigenvalues(&mode_pencil(geometry, scaled, mode, mesh(24)).unwrap()).unwrap();
            prop_assert_eq!(values.len(), base.len());
            for (x, y) in base.iter().zip(&values) {
                prop_assert!((x - y).norm() < 1e-10 * x.norm().max(1.0), "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn flux_form_is_anti_hermitian_and_balanced(kappa in -4.4f64..-1.1) {
        let les = line_evs(FRAC_PI_4, kappa, &[0, 1, 2], 32);
        prop_assume!(!les.is_empty());
        let space = singular_space(&les, 1.0).unwrap();
        let fm = flux_matrix(&space).unwrap();
        prop_assert!(fm.anti_hermitian_error < 1e-10);
        prop_assert_eq!(space.dim % 2, 0);
        prop_assert_eq!(fm.positive, fm.negative);
        prop_assert_eq!(fm.positive + fm.negative, space.dim);
        let basis = mandelstam_basis(&fm).unwrap();
        prop_assert!(basis.residual < 1e-10);
    }
}

#[test]
fn aleph_is_one_at_the_right_angle_and_monotone() {
    assert_eq!(aleph(FRAC_PI_2).unwrap(), 1.0);
    let (lo, hi) = aleph_domain();
    let mut prev = 0.0;
    for i in 0..=40 {
        let alpha = lo + (hi - lo) * i as f64 / 40.0;
        let a = aleph(alpha).unwrap();
        assert!(a > prev, "ℵ must increase with the aperture");
        prev = a;
    }
    assert!(aleph(lo - 1e-3).is_err());
    assert!(hyp2f1(0.5, 0.5, 1.0, SERIES_RADIUS + 1e-3).is_err());
}

#[test]
fn tighter_line_tolerance_never_finds_more_line_values() {
    let geometry = CapGeometry::internal(FRAC_PI_4).unwrap();
    for kappa in [-1.5, -2.5, -4.0] {
        let material = MaterialSpec::from_contrast(kappa).unwrap();
        let spec = solve_pencil(Arc::new(mode_pencil(geometry, material, 0, mesh(48)).unwrap())).unwrap();
        let mut prev = usize::MAX;
        for tol in [1e-3, 1e-5, 1e-7, 1e-9] {
            let n = line_eigenvalues(&spec, tol).unwrap().len();
            assert!(n <= prev, "κ={kappa}: {n} line values at tol {tol}, {prev} before");
            prev = n;
        }
        assert!(prev >= 1, "κ={kappa} lies inside the critical interval");
    }
}

#[test]
fn scanned_endpoint_improves_under_refinement() {
    let geometry = CapGeometry::internal(FRAC_PI_4).unwrap();
    let err = |elements| {
        let settings = ScanSettings {
            kappa_min: -5.0,
            kappa_max: -4.0,
            grid: 6,
            bisect_tol: 1e-9,
            modes: vec![0],
            mesh: mesh(elements),
        };
        scan_interval(geometry, &settings).unwrap().relative_error().unwrap()
    };
    let (coarse, fine) = (err(16), err(64));
    assert!(fine < coarse, "coarse {coarse:e}, fine {fine:e}");
    assert!(fine < 1e-4);
}
