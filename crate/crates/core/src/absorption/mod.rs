//! Line eigenvalues under the dissipative coefficient `σ + iδ`.
//!
//! The branch of `-1/2 ± iη` that moves to `Re λ > -1/2` for small `δ > 0`
//! is the one selected by limiting absorption. It is found both from the
//! first-order slope and from continuation along a decreasing `δ` grid, and
//! compared with the outgoing half of the flux basis.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::cap::assemble_dissipative_pencil;
use crate::error::{Error, Result};
use crate::linalg::{self, DofVector};
use crate::singular::{Branch, MandelstamBasis, SingularSpace};
use crate::spectrum::{exponents_from_pencil_value, solve_pencil, LineEigenvalue};

/// Slopes with `|Re dλ/dδ|` below this are flagged ambiguous.
pub const AMBIGUITY_TOL: f64 = 1e-10;
/// Continuation gives up when no eigenvector overlaps the previous one by
/// more than this.
pub const MIN_OVERLAP: f64 = 0.9;
/// Principal angles below this count as agreement.
pub const ANGLE_TOL: f64 = 1e-6;

/// First-order motion of one eigenvector direction of a line eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationSlope {
    pub mode: u32,
    pub line_index: usize,
    pub eta: f64,
    /// Undamped `Λ`.
    pub value: f64,
    /// Combination of the eigenvectors of `le` that diagonalizes the
    /// perturbation.
    pub weights: Vec<c64>,
    pub direction: DofVector,
    /// `dΛ/dδ`.
    pub d_value: c64,
    /// `dλ/dδ` on the `-1/2 + iη` branch.
    pub d_lambda_plus: c64,
    /// `dλ/dδ` on the `-1/2 - iη` branch.
    pub d_lambda_minus: c64,
}

/// `dΛ/dδ = i φᵀ(A₁ - ΛB₁)φ / φᵀB₀φ` and `dλ/dδ = (dΛ/dδ)/(2λ + 1)`.
///
/// For a cluster of dimension `k` the `k × k` projected problem
/// `W y = μ G y` with `G = ΦᵀB₀Φ`, `W = Φᵀ(A₁ - ΛB₁)Φ` is diagonalized first.
pub fn perturbation_slope(le: &LineEigenvalue) -> Result<Vec<PerturbationSlope>> {
    let p = &le.pencil;
    if p.is_dissipative() {
        return Err(Error::NotApplicableDissipative);
    }
    if le.chains.iter().any(|c| !c.is_empty()) {
        return Err(Error::PerturbationDegenerate {
            value: crate::spectrum::gram_smallest_singular_value(le),
        });
    }
    let b0 = p.sigma_mass();
    let (a1, b1) = p.dissipation_parts();
    let m = &p.cap.material;
    let abs_mass = p.mass.weighted(m.sigma_minus.abs(), m.sigma_plus.abs());
    let lam = le.value;
    let w_mat = Mat::from_fn(a1.nrows(), a1.ncols(), |i, j| a1[(i, j)] - lam * b1[(i, j)]);
    let phis = &le.eigenvectors;
    let k = phis.len();
    let g = Mat::from_fn(k, k, |i, j| linalg::bilinear(&phis[i], b0.as_ref(), &phis[j]).re);
    let w = Mat::from_fn(k, k, |i, j| linalg::bilinear(&phis[i], w_mat.as_ref(), &phis[j]).re);

    let size = (0..k)
        .map(|i| linalg::sesquilinear(&phis[i], abs_mass.as_ref(), &phis[i]).re)
        .fold(0.0, f64::max);
    let g_sv = g
        .singular_values()
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let g_min = g_sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(g_min > 1e-8 * size) {
        return Err(Error::PerturbationDegenerate { value: g_min });
    }

    // Eigenpairs of G⁻¹W (k is tiny).
    let (mus, ys) = small_generalized_eigen(&w, &g)?;
    let eta = le.eta;
    let lambda_plus = le.exponent();
    let mut out = Vec::with_capacity(k);
    for (mu, y) in mus.into_iter().zip(ys) {
        let d_value = c64::new(0.0, 1.0) * mu;
        let mut direction = vec![c64::new(0.0, 0.0); phis[0].len()];
        for (yi, phi) in y.iter().zip(phis) {
            linalg::axpy(*yi, phi, &mut direction);
        }
        out.push(PerturbationSlope {
            mode: le.mode,
            line_index: le.index,
            eta,
            value: lam,
            weights: y,
            direction,
            d_value,
            d_lambda_plus: d_value / (2.0 * lambda_plus + 1.0),
            d_lambda_minus: d_value / (2.0 * lambda_plus.conj() + 1.0),
        });
    }
    Ok(out)
}

/// Eigenvalues and `G`-normalized eigenvectors of `W y = μ G y`, sorted by
/// real part of `μ`.
fn small_generalized_eigen(w: &Mat<f64>, g: &Mat<f64>) -> Result<(Vec<c64>, Vec<Vec<c64>>)> {
    use faer::linalg::solvers::Solve;
    let k = w.nrows();
    let c = g.partial_piv_lu().solve(w);
    let evd = c.eigen().map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut pairs: Vec<(c64, Vec<c64>)> = (0..k)
        .map(|j| {
            let mut y: Vec<c64> = (0..k).map(|i| u[(i, j)]).collect();
            let n = linalg::norm2(&y);
            for v in &mut y {
                *v /= n;
            }
            linalg::fix_phase(&mut y);
            (s[j], y)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    Ok(pairs.into_iter().unzip())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub delta: f64,
    /// `Λ(δ)`.
    pub value: c64,
    /// `λ(δ)` continued from the chosen branch.
    pub lambda: c64,
    #[serde(skip)]
    pub vector: DofVector,
    /// Overlap with the previous point's eigenvector.
    pub overlap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub mode: u32,
    pub line_index: usize,
    pub branch: Branch,
    /// Starts with the undamped point `δ = 0`.
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    /// `(Λ(δ) - Λ(0))/δ` at the point with dissipation `delta`.
    pub fn finite_difference(&self, delta: f64) -> Option<c64> {
        let p = self.points.iter().find(|p| p.delta == delta)?;
        Some((p.value - self.points[0].value) / delta)
    }

    /// Linear extrapolation of `Λ` to `δ = 0` from the two smallest `δ`.
    pub fn extrapolated_limit(&self) -> Option<c64> {
        let n = self.points.len();
        if n < 3 {
            return None;
        }
        let (a, b) = (&self.points[n - 2], &self.points[n - 1]);
        Some(b.value - (a.value - b.value) / (a.delta - b.delta) * b.delta)
    }
}

fn check_grid(delta_grid: &[f64]) -> Result<()> {
    if delta_grid.is_empty() {
        return Err(Error::InvalidArgument("empty delta grid".into()));
    }
    if delta_grid.iter().any(|&d| !(d > 0.0 && d.is_finite())) || delta_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument(
            "delta grid must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Follows `Λ(δ)` of the undamped line eigenvalue along `delta_grid` by
/// eigenvector continuation, starting from `start` (a direction returned by
/// [`perturbation_slope`], or an eigenvector of `le`).
///
/// At each `δ` the dissipative eigenpair with the largest weight-One
/// overlap with the previous vector is taken; `λ` follows whichever root of
/// `λ(λ+1) = Λ` is nearest its previous value.
pub fn trajectory(le: &LineEigenvalue, start: &[c64], branch: Branch, delta_grid: &[f64]) -> Result<Trajectory> {
    check_grid(delta_grid)?;
    let base = &le.pencil;
    if base.is_dissipative() {
        return Err(Error::NotApplicableDissipative);
    }
    base.cap.check_len(start)?;
    let unit_mass = base.unit_mass();
    let mut prev = start.to_vec();
    linalg::normalize(&mut prev, unit_mass.as_ref());
    let lambda0 = match branch {
        Branch::Plus => le.exponent(),
        Branch::Minus => le.exponent().conj(),
    };
    let mut points = vec![TrajectoryPoint {
        delta: 0.0,
        value: c64::new(le.value, 0.0),
        lambda: lambda0,
        vector: prev.clone(),
        overlap: 1.0,
    }];
    for &delta in delta_grid {
        let p = Arc::new(assemble_dissipative_pencil(&base.cap, delta)?);
        let spec = solve_pencil(p)?;
        let (best, overlap) = spec
            .pairs
            .iter()
            .map(|pair| {
                let o = linalg::sesquilinear(&pair.vector, unit_mass.as_ref(), &prev).norm();
                (pair, o)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::EmptySpectrum)?;
        if !(overlap >= MIN_OVERLAP) {
            return Err(Error::TrajectoryLost { delta, overlap });
        }
        let last = points.last().unwrap().lambda;
        let (lp, lm) = exponents_from_pencil_value(best.value);
        let lambda = if (lp - last).norm() <= (lm - last).norm() { lp } else { lm };
        prev = best.vector.clone();
        points.push(TrajectoryPoint {
            delta,
            value: best.value,
            lambda,
            vector: best.vector.clone(),
            overlap,
        });
    }
    Ok(Trajectory {
        mode: le.mode,
        line_index: le.index,
        branch,
        points,
    })
}

/// Which exponent of a conjugate pair becomes admissible under dissipation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Selection {
    SelectsPlusBranch,
    SelectsMinusBranch,
    Ambiguous,
}

impl Selection {
    fn from_real_part(re: f64, tol: f64) -> Self {
        if re > tol {
            Selection::SelectsPlusBranch
        } else if re < -tol {
            Selection::SelectsMinusBranch
        } else {
            Selection::Ambiguous
        }
    }

    pub fn branch(self) -> Option<Branch> {
        match self {
            Selection::SelectsPlusBranch => Some(Branch::Plus),
            Selection::SelectsMinusBranch => Some(Branch::Minus),
            Selection::Ambiguous => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub mode: u32,
    pub line_index: usize,
    pub eta: f64,
    pub weights: Vec<c64>,
    /// `Re dλ/dδ` on the `+iη` branch (the other branch has the opposite sign).
    pub plus_slope: f64,
    pub selection: Selection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbsorptionSelection {
    pub entries: Vec<SelectionEntry>,
}

/// Picks, per slope, the branch with `Re dλ/dδ > 0`.
pub fn select_outgoing_by_absorption(slopes: &[PerturbationSlope]) -> AbsorptionSelection {
    let entries = slopes
        .iter()
        .map(|s| SelectionEntry {
            mode: s.mode,
            line_index: s.line_index,
            eta: s.eta,
            weights: s.weights.clone(),
            plus_slope: s.d_lambda_plus.re,
            selection: Selection::from_real_part(s.d_lambda_plus.re, AMBIGUITY_TOL),
        })
        .collect();
    AbsorptionSelection { entries }
}

/// Selection read off a trajectory: the sign of `Re λ(δ) + 1/2` at the
/// smallest `δ`, relative to the branch that was followed.
pub fn selection_from_trajectory(t: &Trajectory) -> Selection {
    let last = t.points.last().expect("trajectory has its start point");
    let moved = last.lambda.re + 0.5;
    let tol = AMBIGUITY_TOL * last.delta;
    match (t.branch, Selection::from_real_part(moved, tol)) {
        (_, Selection::Ambiguous) => Selection::Ambiguous,
        (Branch::Plus, s) => s,
        (Branch::Minus, Selection::SelectsPlusBranch) => Selection::SelectsMinusBranch,
        (Branch::Minus, _) => Selection::SelectsPlusBranch,
    }
}

/// Principal angles between the spans of two vector sets (Euclidean inner
/// product on coordinates). Extra dimensions of the larger span count as
/// `π/2`.
pub fn principal_angles(a: &[Vec<c64>], b: &[Vec<c64>]) -> Vec<f64> {
    let qa = orthonormal(a);
    let qb = orthonormal(b);
    let (ka, kb) = (qa.len(), qb.len());
    let mut angles = vec![std::f64::consts::FRAC_PI_2; ka.max(kb)];
    if ka == 0 || kb == 0 {
        return angles;
    }
    let m = Mat::from_fn(ka, kb, |i, j| {
        qa[i].iter().zip(&qb[j]).map(|(x, y)| x.conj() * y).sum::<c64>()
    });
    let sv = m.singular_values().expect("tiny SVD");
    for (angle, s) in angles.iter_mut().zip(sv) {
        *angle = s.clamp(0.0, 1.0).acos();
    }
    angles.sort_by(f64::total_cmp);
    angles
}

fn orthonormal(vs: &[Vec<c64>]) -> Vec<Vec<c64>> {
    let mut basis: Vec<Vec<c64>> = Vec::new();
    for v in vs {
        let original = linalg::norm2(v);
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c: c64 = q.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                linalg::axpy(-c, q, &mut w);
            }
        }
        let n = linalg::norm2(&w);
        if original > 0.0 && n > 1e-8 * original {
            basis.push(w.iter().map(|x| x / n).collect());
        }
    }
    basis
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyDetail {
    pub mode: u32,
    pub line_index: usize,
    pub eta: f64,
    pub angles: Vec<f64>,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyVerdict {
    pub agree: bool,
    pub details: Vec<ConsistencyDetail>,
}

/// Compares, per line eigenvalue, the absorption-selected members with the
/// part of `span(s⁺)` living on that eigenvalue's members.
pub fn consistency_report(
    space: &SingularSpace,
    basis: &MandelstamBasis,
    sel: &AbsorptionSelection,
) -> Result<ConsistencyVerdict> {
    if basis.q.nrows() != space.dim {
        return Err(Error::DimensionMismatch {
            expected: space.dim,
            found: basis.q.nrows(),
        });
    }
    let mut groups: Vec<(u32, usize, f64)> = sel.entries.iter().map(|e| (e.mode, e.line_index, e.eta)).collect();
    groups.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let mut details = Vec::with_capacity(groups.len());
    for (mode, line_index, eta) in groups {
        let in_group = |a: usize| {
            let m = &space.members[a];
            m.mode == mode && m.indices.0 == line_index
        };
        let coords: Vec<usize> = (0..space.dim).filter(|&a| in_group(a)).collect();
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        // Absorption-selected directions, one per azimuth.
        let mut selected = Vec::new();
        for e in sel.entries.iter().filter(|e| e.mode == mode && e.line_index == line_index) {
            let Some(branch) = e.selection.branch() else { continue };
            let azimuths: Vec<_> = coords.iter().map(|&a| space.members[a].azimuth).collect();
            let mut seen = Vec::new();
            for az in azimuths {
                if seen.contains(&az) {
                    continue;
                }
                seen.push(az);
                let mut v = vec![c64::new(0.0, 0.0); space.dim];
                for &a in &coords {
                    let m = &space.members[a];
                    if m.branch == branch && m.azimuth == az && m.indices.2 == 0 {
                        v[a] = e.weights[m.indices.1];
                    }
                }
                selected.push(v);
            }
        }
        // Outgoing directions restricted to the group.
        let outgoing: Vec<Vec<c64>> = basis
            .s_plus
            .iter()
            .map(|s| {
                let total = linalg::norm2(s);
                let v: Vec<c64> = (0..space.dim)
                    .map(|a| if in_group(a) { s[a] } else { c64::new(0.0, 0.0) })
                    .collect();
                (linalg::norm2(&v) > 0.5 * total).then_some(v)
            })
            .flatten()
            .collect();
        let angles = principal_angles(&outgoing, &selected);
        let agree = !angles.is_empty() && angles.iter().all(|&t| t < ANGLE_TOL);
        details.push(ConsistencyDetail {
            mode,
            line_index,
            eta,
            angles,
            agree,
        });
    }
    Ok(ConsistencyVerdict {
        agree: details.iter().all(|d| d.agree),
        details,
    })
}
