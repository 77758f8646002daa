//! Small dense linear-algebra helpers shared by the samplers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a covariance direction is treated
/// as exactly degenerate.
pub(crate) const PSD_RTOL: f64 = 1e-11;

pub(crate) fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| {
        let diag_min = m.diagonal().min();
        let diag_max = m.diagonal().max();
        Error::Numeric(format!(
            "{what} is not positive definite (dim {}, diagonal range [{diag_min:.3e}, {diag_max:.3e}])",
            m.nrows()
        ))
    })
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn is_spd(m: &DMatrix<f64>) -> bool {
    m.is_square() && Cholesky::new(m.clone()).is_some()
}

/// Factor `F` with `F Fᵀ = m` for a symmetric positive semi-definite `m`.
/// Directions with eigenvalue below `PSD_RTOL · λ_max` are dropped.
#[cfg(test)]
pub(crate) fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    psd_factor_floor(m, 0.0)
}

/// As [`psd_factor`], additionally dropping eigenvalues below the absolute
/// level `floor`. Conditional covariances that should vanish exactly are
/// tested against the scale of the matrix they were derived from.
pub(crate) fn psd_factor_floor(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        // keep the fast path only when it is well conditioned
        let l = c.l();
        let d = l.diagonal();
        let (lo, hi) = (d.min(), d.max());
        if lo > 0.0 && lo * lo > 1e3 * PSD_RTOL * hi * hi && lo * lo > 1e3 * floor {
            return l;
        }
    }
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.max().max(0.0);
    let floor = (PSD_RTOL * lmax).max(floor);
    let mut f = eig.eigenvectors;
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let s = if *lam > floor { lam.sqrt() } else { 0.0 };
        f.column_mut(k).scale_mut(s);
    }
    f
}

/// Moore–Penrose inverse of a symmetric PSD matrix with the same floor.
pub(crate) fn pinv_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let floor = PSD_RTOL * lmax;
    let mut out = DMatrix::zeros(n, n);
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        if *lam > floor {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / *lam;
        }
    }
    out
}

/// Gaussian conditioning `x_U | x_K = v` for `x ~ N(mean, cov)`, with a
/// pseudo-inverse so that exactly constrained directions are honoured.
pub(crate) fn condition_gaussian(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    known: &[usize],
    values: &DVector<f64>,
    unknown: &[usize],
) -> (DVector<f64>, DMatrix<f64>) {
    let pick_v = |idx: &[usize]| DVector::from_iterator(idx.len(), idx.iter().map(|&i| mean[i]));
    let pick_m = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| cov[(r[i], c[j])]);
    let m_u = pick_v(unknown);
    let p_uu = pick_m(unknown, unknown);
    if known.is_empty() {
        return (m_u, p_uu);
    }
    let m_k = pick_v(known);
    let p_kk = pick_m(known, known);
    let p_uk = pick_m(unknown, known);
    let gain = &p_uk * pinv_psd(&p_kk);
    let mu = m_u + &gain * (values - m_k);
    let mut c = p_uu - &gain * p_uk.transpose();
    symmetrize(&mut c);
    (mu, c)
}

pub(crate) fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != 0.0 {
                out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * aij));
            }
        }
    }
    out
}

/// Companion matrix of a VAR with coefficients `Π = (Π_1, …, Π_p)` (n × np).
pub fn companion(pi: &DMatrix<f64>) -> DMatrix<f64> {
    let n = pi.nrows();
    let np = pi.ncols();
    let mut c = DMatrix::zeros(np, np);
    c.view_mut((0, 0), (n, np)).copy_from(pi);
    for i in n..np {
        c[(i, i - n)] = 1.0;
    }
    c
}

/// Largest eigenvalue modulus of the VAR companion matrix.
pub fn spectral_radius(pi: &DMatrix<f64>) -> f64 {
    let c = companion(pi);
    if c.nrows() == 0 {
        return 0.0;
    }
    c.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Solves `P = A P Aᵀ + Q` by doubling; `None` if the iteration does not
/// settle (non-stationary `A`).
pub(crate) fn stationary_covariance(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut ak = a.clone();
    let mut p = q.clone();
    for _ in 0..60 {
        let next = &p + &ak * &p * ak.transpose();
        ak = &ak * &ak;
        let delta = (&next - &p).amax();
        p = next;
        if !p.iter().all(|v| v.is_finite()) {
            return None;
        }
        if ak.amax() < 1e-14 && delta <= 1e-14 * p.amax().max(1.0) {
            let mut p = p;
            symmetrize(&mut p);
            return Some(p);
        }
    }
    None
}

/// Lower-triangular Cholesky factor of a symmetric tridiagonal matrix
/// given by its diagonal and sub-diagonal. Returns `(diag, sub)` of `L`.
pub(crate) fn tridiag_cholesky(diag: &[f64], sub: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut ld = vec![0.0; n];
    let mut ls = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let mut d = diag[i];
        if i > 0 {
            ls[i - 1] = sub[i - 1] / ld[i - 1];
            d -= ls[i - 1] * ls[i - 1];
        }
        if !(d > 0.0) {
            return Err(Error::Numeric(format!(
                "tridiagonal precision not positive definite at index {i}"
            )));
        }
        ld[i] = d.sqrt();
    }
    Ok((ld, ls))
}

/// Solves `L x = b` for the bidiagonal factor from [`tridiag_cholesky`].
pub(crate) fn bidiag_forward(ld: &[f64], ls: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    for i in 0..b.len() {
        let mut v = b[i];
        if i > 0 {
            v -= ls[i - 1] * x[i - 1];
        }
        x[i] = v / ld[i];
    }
    x
}

/// Solves `Lᵀ x = b`.
pub(crate) fn bidiag_backward(ld: &[f64], ls: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = b[i];
        if i + 1 < n {
            v -= ls[i] * x[i + 1];
        }
        x[i] = v / ld[i];
    }
    x
}
