//! Conditional posterior of `(Π, Σ)` for the volatility-standardized VAR.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, symmetrize};
use crate::priors::NiwPrior;
use crate::stats::{sample_inverse_wishart, sample_pi_matrix};

/// Stacked regression `Y = X B + E` over periods `p..T`, with every row of
/// `X` and `Y` divided by `√f_t` of its own period. Columns of `X` are
/// lag-major (`z_{t−1}, …, z_{t−p}`) followed by `1/√f_t` when an intercept
/// is included.
pub fn regression_data(
    z: &DMatrix<f64>,
    f: &[f64],
    p: usize,
    intercept: bool,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (t_len, n) = z.shape();
    let rows = t_len.saturating_sub(p);
    let k = n * p + usize::from(intercept);
    let mut x = DMatrix::zeros(rows, k);
    let mut y = DMatrix::zeros(rows, n);
    for r in 0..rows {
        let t = r + p;
        let s = 1.0 / f[t].sqrt();
        for j in 0..n {
            y[(r, j)] = z[(t, j)] * s;
        }
        for l in 1..=p {
            for j in 0..n {
                x[(r, (l - 1) * n + j)] = z[(t - l, j)] * s;
            }
        }
        if intercept {
            x[(r, n * p)] = s;
        }
    }
    (x, y)
}

/// Normal inverse Wishart posterior `Σ ~ IW(S̄, ν̄)`,
/// `vec(B) | Σ ~ N(vec(B̄), Σ ⊗ Ω̄)` with `B = Π'`.
#[derive(Debug, Clone)]
pub struct NiwPosterior {
    pub omega_bar_inv: DMatrix<f64>,
    /// `Ω̲⁻¹ B̲ + X'Y`; the centre is `Ω̄` times this.
    pub precursor: DMatrix<f64>,
    pub b_bar: DMatrix<f64>,
    pub s_bar: DMatrix<f64>,
    pub dof: f64,
}

pub fn niw_posterior(x: &DMatrix<f64>, y: &DMatrix<f64>, prior: &NiwPrior) -> Result<NiwPosterior> {
    let k = prior.omega_diag.len();
    if x.ncols() != k || y.ncols() != prior.scale.nrows() || x.nrows() != y.nrows() {
        return Err(Error::Validation(format!(
            "regression shapes X {:?}, Y {:?} do not match a prior with {k} regressors",
            x.shape(),
            y.shape()
        )));
    }
    let omega_inv = DVector::from_iterator(k, prior.omega_diag.iter().map(|w| 1.0 / w));
    let mut omega_bar_inv = x.transpose() * x;
    for i in 0..k {
        omega_bar_inv[(i, i)] += omega_inv[i];
    }
    symmetrize(&mut omega_bar_inv);
    let prior_term = DMatrix::from_fn(k, y.ncols(), |i, j| omega_inv[i] * prior.mean[(i, j)]);
    let precursor = prior_term + x.transpose() * y;
    let chol = cholesky(&omega_bar_inv, "posterior coefficient precision")?;
    let b_bar = chol.solve(&precursor);
    let resid = y - x * &b_bar;
    let dev = &b_bar - &prior.mean;
    let weighted = DMatrix::from_fn(k, dev.ncols(), |i, j| omega_inv[i] * dev[(i, j)]);
    let mut s_bar = &prior.scale + resid.transpose() * resid + dev.transpose() * weighted;
    symmetrize(&mut s_bar);
    Ok(NiwPosterior {
        omega_bar_inv,
        precursor,
        b_bar,
        s_bar,
        dof: prior.dof + x.nrows() as f64,
    })
}

/// Draws `Σ` from its marginal posterior and then `B = Π'` given `Σ`.
pub fn draw_niw<R: Rng + ?Sized>(
    post: &NiwPosterior,
    rng: &mut R,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let sigma = sample_inverse_wishart(&post.s_bar, post.dof, rng)?;
    let b = sample_pi_matrix(&post.precursor, &post.omega_bar_inv, &sigma, rng)?;
    Ok((b, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sample_returns_prior() {
        let prior = NiwPrior {
            scale: DMatrix::identity(2, 2) * 3.0,
            dof: 5.0,
            omega_diag: DVector::from_vec(vec![0.5, 0.25]),
            mean: DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.4]),
        };
        let post = niw_posterior(&DMatrix::zeros(0, 2), &DMatrix::zeros(0, 2), &prior).unwrap();
        assert!((post.b_bar - &prior.mean).amax() < 1e-14);
        assert!((post.s_bar - &prior.scale).amax() < 1e-14);
        assert_eq!(post.dof, 5.0);
        assert!((post.omega_bar_inv[(1, 1)] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn scaling_volatility_equals_scaling_data() {
        let z = DMatrix::from_fn(30, 2, |t, j| ((t * 7 + j * 3) % 11) as f64 - 5.0);
        let f2 = vec![2.0; 30];
        let (x1, y1) = regression_data(&z, &f2, 2, false);
        let scaled = &z / 2f64.sqrt();
        let (x2, y2) = regression_data(&scaled, &vec![1.0; 30], 2, false);
        assert!((x1 - x2).amax() < 1e-14);
        assert!((y1 - y2).amax() < 1e-14);
    }
}
