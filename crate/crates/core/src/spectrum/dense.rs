//! Dense eigensolver for `A φ = Λ B φ` with nonsingular `B`.
//!
//! The pencil is reduced to the standard problem `B⁻¹A` (partial-pivoting
//! LU) and handed to the Hessenberg-Schur eigensolver of `faer`. Callers
//! guard the reduction with a condition estimate of `B` and certify every
//! pair against the original pencil. Real pencils use the real Schur form,
//! so real eigenvalues have an exactly zero imaginary part and complex ones
//! come in exact conjugate pairs. Runs sequentially: sweeps parallelize over
//! pencils instead.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Par};
use num_complex::Complex64 as c64;

use crate::error::{Error, Result};

pub(crate) struct Decomposition {
    pub values: Vec<c64>,
    /// Right eigenvectors as columns, when requested.
    pub vectors: Option<Mat<c64>>,
}

fn wanted(flag: bool) -> ComputeEigenvectors {
    if flag {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    }
}

fn failed<E: std::fmt::Debug>(e: E) -> Error {
    Error::EigenSolver(format!("{e:?}"))
}

pub(crate) fn real(a: MatRef<'_, f64>, b: MatRef<'_, f64>, vectors: bool) -> Result<Decomposition> {
    let n = a.nrows();
    let c = b.partial_piv_lu().solve(a);
    let mut s_re = Diag::<f64>::zeros(n);
    let mut s_im = Diag::<f64>::zeros(n);
    let mut u = vectors.then(|| Mat::<f64>::zeros(n, n));
    let req = evd::evd_scratch::<f64>(n, ComputeEigenvectors::No, wanted(vectors), Par::Seq, Default::default());
    let mut buf = MemBuffer::new(req);
    evd::evd_real(
        c.as_ref(),
        s_re.as_mut(),
        s_im.as_mut(),
        None,
        u.as_mut().map(|u| u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(failed)?;

    let mut values = Vec::with_capacity(n);
    let mut out = vectors.then(|| Mat::<c64>::zeros(n, n));
    let mut j = 0;
    while j < n {
        if s_im[j] == 0.0 || j + 1 == n {
            values.push(c64::new(s_re[j], 0.0));
            if let (Some(o), Some(u)) = (out.as_mut(), u.as_ref()) {
                for i in 0..n {
                    o[(i, j)] = c64::new(u[(i, j)], 0.0);
                }
            }
            j += 1;
        } else {
            let v = c64::new(s_re[j], s_im[j]);
            values.push(v);
            values.push(v.conj());
            if let (Some(o), Some(u)) = (out.as_mut(), u.as_ref()) {
                for i in 0..n {
                    o[(i, j)] = c64::new(u[(i, j)], u[(i, j + 1)]);
                    o[(i, j + 1)] = c64::new(u[(i, j)], -u[(i, j + 1)]);
                }
            }
            j += 2;
        }
    }
    Ok(Decomposition { values, vectors: out })
}

pub(crate) fn complex(a: MatRef<'_, c64>, b: MatRef<'_, c64>, vectors: bool) -> Result<Decomposition> {
    let n = a.nrows();
    let c = b.partial_piv_lu().solve(a);
    let mut s = Diag::<c64>::zeros(n);
    let mut u = vectors.then(|| Mat::<c64>::zeros(n, n));
    let req = evd::evd_scratch::<c64>(n, ComputeEigenvectors::No, wanted(vectors), Par::Seq, Default::default());
    let mut buf = MemBuffer::new(req);
    evd::evd_cplx(
        c.as_ref(),
        s.as_mut(),
        None,
        u.as_mut().map(|u| u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(failed)?;
    let values = (0..n).map(|j| s[j]).collect();
    Ok(Decomposition { values, vectors: u })
}
