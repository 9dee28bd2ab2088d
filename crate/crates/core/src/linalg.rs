//! Small dense helpers on top of `faer` shared by the spectral and flux code.
//!
//! Degree-of-freedom vectors are plain `Vec<c64>`; matrices are `faer::Mat`.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};
use num_complex::Complex64 as c64;

pub type DofVector = Vec<c64>;

pub fn to_complex(m: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

pub fn real_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub fn is_real(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

pub fn mat_vec(m: MatRef<'_, c64>, x: &[c64]) -> DofVector {
    assert_eq!(m.ncols(), x.len());
    let mut out = vec![c64::new(0.0, 0.0); m.nrows()];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == c64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * xj;
        }
    }
    out
}

pub fn mat_vec_real(m: MatRef<'_, f64>, x: &[c64]) -> DofVector {
    assert_eq!(m.ncols(), x.len());
    let mut out = vec![c64::new(0.0, 0.0); m.nrows()];
    for j in 0..m.ncols() {
        let xj = x[j];
        for (i, o) in out.iter_mut().enumerate() {
            *o += xj * m[(i, j)];
        }
    }
    out
}

/// `xᵀ M y` (no conjugation).
pub fn bilinear(x: &[c64], m: MatRef<'_, f64>, y: &[c64]) -> c64 {
    let my = mat_vec_real(m, y);
    x.iter().zip(&my).map(|(a, b)| a * b).sum()
}

/// `xᵀ M ȳ`, linear in the first slot.
pub fn sesquilinear(x: &[c64], m: MatRef<'_, f64>, y: &[c64]) -> c64 {
    let my = mat_vec_real(m, y);
    x.iter().zip(&my).map(|(a, b)| a * b.conj()).sum()
}

pub fn dot(x: &[c64], y: &[c64]) -> c64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: c64, x: &[c64], y: &mut [c64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: c64, x: &[c64]) -> DofVector {
    x.iter().map(|v| alpha * v).collect()
}

pub fn conj(x: &[c64]) -> DofVector {
    x.iter().map(|v| v.conj()).collect()
}

/// Rotates `v` so its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut [c64]) {
    let Some(pivot) = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
    else {
        return;
    };
    if pivot.norm() == 0.0 {
        return;
    }
    let rot = pivot.conj() / pivot.norm();
    for x in v.iter_mut() {
        *x *= rot;
    }
}

/// Scales `v` to unit `M`-norm (`v^H M v = 1`) and fixes its phase.
pub fn normalize(v: &mut [c64], mass: MatRef<'_, f64>) {
    let n = sesquilinear(v, mass, v).re.max(0.0).sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    fix_phase(v);
}

/// Modified Gram-Schmidt in the `M` inner product.
///
/// Vectors whose remaining norm falls below `rank_tol` times their original
/// norm are dropped, so the output length is the numerical rank.
pub fn m_orthonormalize(vectors: &[DofVector], mass: MatRef<'_, f64>, rank_tol: f64) -> Vec<DofVector> {
    let mut basis: Vec<DofVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let original = sesquilinear(v, mass, v).re.max(0.0).sqrt();
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = sesquilinear(&w, mass, q);
                axpy(-c, q, &mut w);
            }
        }
        let remaining = sesquilinear(&w, mass, &w).re.max(0.0).sqrt();
        if original > 0.0 && remaining > rank_tol * original {
            for x in w.iter_mut() {
                *x /= remaining;
            }
            basis.push(w);
        }
    }
    basis
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

pub fn one_norm(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Estimates the 1-norm condition number of `m` (Hager's method on an LU).
pub fn condition_estimate(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let lu = m.partial_piv_lu();
    let adjoint = m.adjoint().to_owned();
    let lu_adj = adjoint.partial_piv_lu();
    let mut x = Mat::<c64>::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
    let mut estimate = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x);
        let y_norm: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
        if !y_norm.is_finite() {
            return f64::INFINITY;
        }
        if y_norm <= estimate {
            break;
        }
        estimate = y_norm;
        let xi = Mat::<c64>::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            if v.norm() > 0.0 {
                v / v.norm()
            } else {
                c64::new(1.0, 0.0)
            }
        });
        let z = lu_adj.solve(&xi);
        let (jmax, zmax) = (0..n)
            .map(|i| (i, z[(i, 0)].norm()))
            .fold((0, -1.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
        if zmax <= ztx {
            break;
        }
        x = Mat::<c64>::zeros(n, 1);
        x[(jmax, 0)] = c64::new(1.0, 0.0);
    }
    estimate * one_norm(m)
}
