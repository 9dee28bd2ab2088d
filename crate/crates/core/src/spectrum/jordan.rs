//! Jordan chains of line eigenvalues and the contrasts where they appear.
//!
//! With `L = A - ΛB` and `λ = -1/2 + iη` the chain equations read
//!
//! ```text
//! L φ₁ = 2iη B φ₀
//! L φ₂ = 2iη B φ₁ + B φ₀
//! ```
//!
//! The first is solvable iff `φ₀ᵀ B φ₀ = 0`, so a chain exists exactly when
//! the σ-Gram of the eigenspace is singular.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64 as c64;

use super::line::{count_on_line, LineEigenvalue, DEFAULT_LINE_TOL, ETA_MIN};
use super::{pencil_eigenvalues, solve_pencil};
use crate::cap::{assemble_pencil, build_cap, CapGeometry, MaterialSpec, PencilMatrices};
use crate::error::{Error, Result};
use crate::linalg::{self, DofVector};

/// Gram singular values below this multiple of `max|σ|` count as zero.
pub const JORDAN_RELATIVE_THRESHOLD: f64 = 1e-10;
const MAX_CHAIN: usize = 4;
const CHAIN_RESIDUAL: f64 = 1e-8;

pub fn jordan_threshold(material: &MaterialSpec) -> f64 {
    JORDAN_RELATIVE_THRESHOLD * material.scale()
}

fn gram_matrix(le: &LineEigenvalue) -> Mat<f64> {
    let n = le.gram.len();
    Mat::from_fn(n, n, |i, j| le.gram[i][j].re)
}

pub fn gram_smallest_singular_value(le: &LineEigenvalue) -> f64 {
    if le.gram.is_empty() {
        return 0.0;
    }
    gram_matrix(le)
        .self_adjoint_eigenvalues(Side::Lower)
        .map(|ev| ev.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min))
        .unwrap_or(0.0)
}

/// Fills in the Jordan chains of `le`.
///
/// The eigenbasis is rotated to diagonalize the (real symmetric) σ-Gram.
/// Directions whose Gram value is below the threshold get chains; values
/// within a factor 10 of it are reported as ambiguous.
pub fn jordan_chains(p: &PencilMatrices, le: LineEigenvalue) -> Result<LineEigenvalue> {
    if p.is_dissipative() {
        return Err(Error::NotApplicableDissipative);
    }
    if le.eta <= ETA_MIN {
        return Err(Error::NearQuarterDegenerate { value: le.value });
    }
    if le.eigenvectors.first().is_some_and(|v| v.len() != p.n_dofs()) {
        return Err(Error::DimensionMismatch {
            expected: p.n_dofs(),
            found: le.eigenvectors[0].len(),
        });
    }
    let threshold = jordan_threshold(&p.cap.material);
    let eig = gram_matrix(&le)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let q = eig.U();
    let d = eig.S();
    let count = le.eigenvectors.len();
    let rotated: Vec<DofVector> = (0..count)
        .map(|k| {
            let mut v = vec![c64::new(0.0, 0.0); p.n_dofs()];
            for j in 0..count {
                linalg::axpy(c64::new(q[(j, k)], 0.0), &le.eigenvectors[j], &mut v);
            }
            v
        })
        .collect();

    let b0 = p.sigma_mass();
    let a0 = p.sigma_stiffness();
    let n = p.n_dofs();
    let lhs = Mat::<f64>::from_fn(n, n, |i, j| a0[(i, j)] - le.value * b0[(i, j)]);

    let mut chains = Vec::with_capacity(count);
    for (k, phi0) in rotated.iter().enumerate() {
        let g = d[k].abs();
        if g > 10.0 * threshold {
            chains.push(Vec::new());
            continue;
        }
        if g >= threshold / 10.0 {
            return Err(Error::JordanThresholdAmbiguous { smallest: g, threshold });
        }
        chains.push(solve_chain(&lhs, &b0, phi0, le.eta, threshold)?);
    }

    let mut out = LineEigenvalue::from_vectors(le.index, le.value, rotated, le.pencil.clone());
    out.chains = chains;
    Ok(out)
}

fn solve_chain(lhs: &Mat<f64>, b0: &Mat<f64>, phi0: &[c64], eta: f64, threshold: f64) -> Result<Vec<DofVector>> {
    let n = phi0.len();
    // Bordered system [[L, φ₀], [φ₀ᵀ, 0]]: nonsingular when the kernel of L
    // is spanned by φ₀, and its solution satisfies φ₀ᵀ x = 0.
    let mut bordered = Mat::<c64>::from_fn(n + 1, n + 1, |i, j| {
        if i < n && j < n {
            c64::new(lhs[(i, j)], 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    for i in 0..n {
        bordered[(i, n)] = phi0[i];
        bordered[(n, i)] = phi0[i];
    }
    let lu = bordered.partial_piv_lu();
    let two_i_eta = c64::new(0.0, 2.0 * eta);
    let b_phi0 = linalg::mat_vec_real(b0.as_ref(), phi0);
    let scale = linalg::norm2(&b_phi0);

    let mut levels: Vec<DofVector> = vec![phi0.to_vec()];
    for level in 1..MAX_CHAIN {
        let mut rhs = linalg::scale(two_i_eta, &linalg::mat_vec_real(b0.as_ref(), &levels[level - 1]));
        if level >= 2 {
            linalg::axpy(c64::new(1.0, 0.0), &linalg::mat_vec_real(b0.as_ref(), &levels[level - 2]), &mut rhs);
        }
        // The first level is solvable by the Gram test; later ones are
        // checked here and end the chain when they fail.
        if level >= 2 && linalg::dot(phi0, &rhs).norm() > threshold * (2.0 * eta).max(1.0) {
            break;
        }
        let mut col = Mat::<c64>::zeros(n + 1, 1);
        for i in 0..n {
            col[(i, 0)] = rhs[i];
        }
        let x = lu.solve(&col);
        let phi: DofVector = (0..n).map(|i| x[(i, 0)]).collect();
        let lphi = linalg::mat_vec_real(lhs.as_ref(), &phi);
        let res: DofVector = lphi.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let residual = linalg::norm2(&res) / scale;
        if !(residual < CHAIN_RESIDUAL) {
            return Err(Error::ResidualCertification { index: level, residual });
        }
        levels.push(phi);
    }
    levels.remove(0);
    Ok(levels)
}

/// A contrast at which two line eigenvalues of one mode merge into a
/// Jordan block before leaving the line.
#[derive(Debug, Clone)]
pub struct JordanContrast {
    pub kappa: f64,
    /// The merged eigenvalue at `kappa`, chains populated.
    pub line: LineEigenvalue,
    pub gram_singular_value: f64,
    pub newton_steps: usize,
}

fn line_count(geometry: CapGeometry, mode: u32, kappa: f64, elements: usize, order: u32) -> Result<usize> {
    let cap = build_cap(geometry, MaterialSpec::from_contrast(kappa)?, mode, elements, order)?;
    let values = pencil_eigenvalues(&assemble_pencil(&cap)?)?;
    count_on_line(&values, DEFAULT_LINE_TOL).ok_or(Error::NearQuarterDegenerate { value: -0.25 })
}

/// Locates a Jordan contrast inside `bracket`, whose ends must differ by two
/// in the number of line eigenvalues of `mode`.
///
/// Bisection brackets the merge point; the eigenvector Gram vanishes there
/// only like the square root of the distance, so the point is then refined
/// by Newton's method on the augmented system
///
/// ```text
/// (A(κ) - Λ B(κ)) φ = 0,   φᵀ B(κ) φ = 0,   φᵀ M φ = 1
/// ```
///
/// in the unknowns `(φ, Λ, κ)`, with `σ₊ = 1` and `σ₋ = κ`.
pub fn locate_jordan_contrast(
    geometry: CapGeometry,
    mode: u32,
    bracket: (f64, f64),
    elements: usize,
    order: u32,
) -> Result<JordanContrast> {
    let (mut lo, mut hi) = bracket;
    let (c_lo, c_hi) = (
        line_count(geometry, mode, lo, elements, order)?,
        line_count(geometry, mode, hi, elements, order)?,
    );
    if c_lo.abs_diff(c_hi) != 2 {
        return Err(Error::InvalidArgument(format!(
            "bracket [{lo}, {hi}] has line counts {c_lo} and {c_hi}; a merge changes the count by two"
        )));
    }
    for _ in 0..60 {
        if (hi - lo).abs() < 1e-9 * lo.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if line_count(geometry, mode, mid, elements, order)? == c_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (kappa0, _) = if c_lo > c_hi { (lo, hi) } else { (hi, lo) };

    // Initial guess: the closest adjacent pair of line eigenvalues.
    let cap = build_cap(geometry, MaterialSpec::from_contrast(kappa0)?, mode, elements, order)?;
    let pencil = Arc::new(assemble_pencil(&cap)?);
    let spec = solve_pencil(pencil.clone())?;
    let lines = super::line_eigenvalues(&spec, DEFAULT_LINE_TOL)?;
    let (index, _) = lines
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, (w[1].value - w[0].value).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidArgument("fewer than two line eigenvalues near the merge".into()))?;
    let value0 = 0.5 * (lines[index].value + lines[index + 1].value);
    let phi0: Vec<f64> = lines[index].eigenvectors[0].iter().map(|z| z.re).collect();

    let (phi, value, kappa, newton_steps) = newton_merge(&pencil, phi0, value0, kappa0)?;

    let cap = build_cap(geometry, MaterialSpec::from_contrast(kappa)?, mode, elements, order)?;
    let pencil = Arc::new(assemble_pencil(&cap)?);
    let mut vector: DofVector = phi.iter().map(|&x| c64::new(x, 0.0)).collect();
    linalg::normalize(&mut vector, pencil.unit_mass().as_ref());
    let le = LineEigenvalue::from_vectors(index, value, vec![vector], pencil.clone());
    let gram_singular_value = gram_smallest_singular_value(&le);
    let line = jordan_chains(&pencil, le)?;
    Ok(JordanContrast {
        kappa,
        line,
        gram_singular_value,
        newton_steps,
    })
}

fn newton_merge(p: &PencilMatrices, mut phi: Vec<f64>, mut value: f64, mut kappa: f64) -> Result<(Vec<f64>, f64, f64, usize)> {
    let n = phi.len();
    let (km, kp) = (&p.stiffness.minus, &p.stiffness.plus);
    let (mm, mp) = (&p.mass.minus, &p.mass.plus);
    let unit = p.unit_mass();
    let mv = |m: &Mat<f64>, x: &[f64]| -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum()).collect()
    };
    let dotr = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };

    let mut steps = 0;
    let mut converged = 0;
    for _ in 0..50 {
        steps += 1;
        let a = Mat::<f64>::from_fn(n, n, |i, j| kappa * km[(i, j)] + kp[(i, j)]);
        let b = Mat::<f64>::from_fn(n, n, |i, j| kappa * mm[(i, j)] + mp[(i, j)]);
        let bphi = mv(&b, &phi);
        let mphi = mv(&unit, &phi);
        let aphi = mv(&a, &phi);
        let dphi_k: Vec<f64> = {
            let x = mv(km, &phi);
            let y = mv(mm, &phi);
            x.iter().zip(&y).map(|(u, v)| u - value * v).collect()
        };
        let mut f = Mat::<f64>::zeros(n + 2, 1);
        for i in 0..n {
            f[(i, 0)] = -(aphi[i] - value * bphi[i]);
        }
        f[(n, 0)] = -dotr(&phi, &bphi);
        f[(n + 1, 0)] = -(dotr(&phi, &mphi) - 1.0);

        let mut jac = Mat::<f64>::zeros(n + 2, n + 2);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = a[(i, j)] - value * b[(i, j)];
            }
            jac[(i, n)] = -bphi[i];
            jac[(i, n + 1)] = dphi_k[i];
            jac[(n, i)] = 2.0 * bphi[i];
            jac[(n + 1, i)] = 2.0 * mphi[i];
        }
        jac[(n, n + 1)] = dotr(&phi, &mv(mm, &phi));
        let dx = jac.partial_piv_lu().solve(&f);
        for i in 0..n {
            phi[i] += dx[(i, 0)];
        }
        value += dx[(n, 0)];
        kappa += dx[(n + 1, 0)];
        let step = (0..n + 2).map(|i| dx[(i, 0)].abs()).fold(0.0, f64::max);
        if !step.is_finite() {
            return Err(Error::EigenSolver("Newton refinement of the merge point diverged".into()));
        }
        if step < 1e-13 * (1.0 + value.abs()) {
            converged += 1;
            if converged == 2 {
                return Ok((phi, value, kappa, steps));
            }
        }
    }
    Err(Error::EigenSolver("Newton refinement of the merge point did not converge".into()))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::spectrum::line_eigenvalues;

    fn undamped(kappa: f64, mode: u32) -> Arc<PencilMatrices> {
        let cap = build_cap(
            CapGeometry::internal(FRAC_PI_4).unwrap(),
            MaterialSpec::from_contrast(kappa).unwrap(),
            mode,
            64,
            2,
        )
        .unwrap();
        Arc::new(assemble_pencil(&cap).unwrap())
    }

    #[test]
    fn generic_contrast_has_no_chains() {
        let p = undamped(-2.0, 0);
        let lines = line_eigenvalues(&solve_pencil(p.clone()).unwrap(), DEFAULT_LINE_TOL).unwrap();
        assert!(!lines.is_empty());
        for le in lines {
            let s = gram_smallest_singular_value(&le);
            assert!(s > 10.0 * jordan_threshold(&p.cap.material), "{s}");
            let le = jordan_chains(&p, le).unwrap();
            assert!(le.chains.iter().all(Vec::is_empty));
            assert_eq!(le.chain_length(0), 1);
        }
    }

    #[test]
    fn merge_point_carries_a_chain() {
        let geo = CapGeometry::internal(FRAC_PI_4).unwrap();
        let jc = locate_jordan_contrast(geo, 1, (-1.35, -1.2), 64, 2).unwrap();
        assert!(jc.kappa > -1.35 && jc.kappa < -1.2, "{}", jc.kappa);
        assert!(jc.gram_singular_value < jordan_threshold(&jc.line.pencil.cap.material));
        assert_eq!(jc.line.chain_length(0), 2);
        let p = &jc.line.pencil;
        let phi0 = jc.line.chain_vector(0, 0).unwrap();
        let phi1 = jc.line.chain_vector(0, 1).unwrap();
        let b0 = p.sigma_mass();
        let a0 = p.sigma_stiffness();
        let lphi1: DofVector = linalg::mat_vec_real(a0.as_ref(), phi1)
            .iter()
            .zip(linalg::mat_vec_real(b0.as_ref(), phi1))
            .map(|(x, y)| x - jc.line.value * y)
            .collect();
        let bphi0 = linalg::mat_vec_real(b0.as_ref(), phi0);
        let rhs = linalg::scale(c64::new(0.0, 2.0 * jc.line.eta), &bphi0);
        let diff: DofVector = lphi1.iter().zip(&rhs).map(|(x, y)| x - y).collect();
        assert!(linalg::norm2(&diff) / linalg::norm2(&bphi0) < 1e-8);
        assert!(matches!(jc.line.chain_vector(0, 2), Err(Error::ChainLevel { .. })));
    }

    #[test]
    fn bracket_without_merge_is_rejected() {
        let geo = CapGeometry::internal(FRAC_PI_4).unwrap();
        assert!(matches!(
            locate_jordan_contrast(geo, 1, (-4.0, -3.5), 32, 2),
            Err(Error::InvalidArgument(_))
        ));
    }
}
