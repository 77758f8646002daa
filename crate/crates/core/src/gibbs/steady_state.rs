//! Steady-state coefficients and their normal-gamma hierarchy.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, kron, symmetrize};
use crate::stats::{sample_gamma, sample_gig, standard_normal, standard_normal_vector};

/// Gaussian conditional posterior of `ψ = vec(Ψ)`.
#[derive(Debug, Clone)]
pub struct PsiPosterior {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
}

/// Posterior of `ψ` given the unadjusted series `z` (`T × n`), the
/// deterministic terms `d` (`T × m`), `Π` (`n × np`), `Σ`, `f` and the
/// prior `N(μ, diag(ω))`. Uses periods `p..T`.
pub fn psi_posterior(
    z: &DMatrix<f64>,
    d: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    f: &[f64],
    prior_mean: &DVector<f64>,
    prior_var: &DVector<f64>,
) -> Result<PsiPosterior> {
    let (t_len, n) = z.shape();
    let m = d.ncols();
    let p = pi.ncols() / n;
    let nm = n * m;
    if prior_mean.len() != nm || prior_var.len() != nm || d.nrows() != t_len {
        return Err(Error::Validation(format!(
            "steady-state prior has {} means and {} variances for n·m = {nm}",
            prior_mean.len(),
            prior_var.len()
        )));
    }
    let k = m * (p + 1);
    let mut dd = DMatrix::zeros(k, k);
    let mut zd = DMatrix::zeros(n, k);
    for t in p..t_len {
        let s = 1.0 / f[t].sqrt();
        let mut dch = DVector::zeros(k);
        for l in 0..=p {
            let sign = if l == 0 { 1.0 } else { -1.0 };
            for i in 0..m {
                dch[l * m + i] = sign * d[(t - l, i)] * s;
            }
        }
        let mut zch = z.row(t).transpose();
        for l in 1..=p {
            zch -= pi.columns((l - 1) * n, n) * z.row(t - l).transpose();
        }
        zch *= s;
        dd += &dch * dch.transpose();
        zd += &zch * dch.transpose();
    }
    let mut u = DMatrix::zeros(k * n, nm);
    u.view_mut((0, 0), (nm, nm)).fill_with_identity();
    let eye_m = DMatrix::<f64>::identity(m, m);
    for l in 1..=p {
        let block = kron(&eye_m, &pi.columns((l - 1) * n, n).into_owned());
        u.view_mut((l * nm, 0), (nm, nm)).copy_from(&block);
    }
    let sigma_inv = cholesky(sigma, "error covariance")?.inverse();
    let mut precision = u.transpose() * kron(&dd, &sigma_inv) * &u;
    for j in 0..nm {
        precision[(j, j)] += 1.0 / prior_var[j];
    }
    symmetrize(&mut precision);
    let sz = &sigma_inv * zd;
    let vec_sz = DVector::from_column_slice(sz.as_slice());
    let rhs = u.transpose() * vec_sz
        + DVector::from_fn(nm, |j, _| prior_mean[j] / prior_var[j]);
    let mean = cholesky(&precision, "steady-state posterior precision")?.solve(&rhs);
    Ok(PsiPosterior { mean, precision })
}

pub fn draw_psi<R: Rng + ?Sized>(post: &PsiPosterior, rng: &mut R) -> Result<DVector<f64>> {
    let l = cholesky(&post.precision, "steady-state posterior precision")?.l();
    let e = standard_normal_vector(post.mean.len(), rng);
    let dev = l
        .transpose()
        .solve_upper_triangular(&e)
        .ok_or_else(|| Error::Numeric("singular steady-state precision factor".into()))?;
    Ok(&post.mean + dev)
}

/// Hyperparameters of the normal-gamma steady-state prior.
#[derive(Debug, Clone, PartialEq)]
pub struct NgState {
    pub omega: DVector<f64>,
    pub phi: f64,
    pub lambda: f64,
    /// Random-walk scale on `log φ_ψ`.
    pub scale: f64,
}

/// Shape and rate of the conditional gamma posterior of `λ_ψ`.
pub fn lambda_posterior_params(phi: f64, omega: &DVector<f64>, c0: f64, c1: f64) -> (f64, f64) {
    let nm = omega.len() as f64;
    (nm * phi + c0, 0.5 * phi * omega.sum() + c1)
}

/// `log g(φ_ψ | ω, λ)` including the `Exp(1)` prior.
pub fn phi_psi_log_target(phi: f64, omega: &DVector<f64>, lambda: f64) -> f64 {
    if !(phi > 0.0) {
        return f64::NEG_INFINITY;
    }
    let nm = omega.len() as f64;
    let sum_log: f64 = omega.iter().map(|w| w.ln()).sum();
    nm * (phi * (0.5 * lambda * phi).ln() - ln_gamma(phi)) + (phi - 1.0) * sum_log
        - 0.5 * lambda * phi * omega.sum()
        - phi
}

/// Log acceptance ratio for the log-scale random walk, including the
/// `φ*/φ` Jacobian term.
pub fn phi_psi_log_ratio(proposal: f64, current: f64, omega: &DVector<f64>, lambda: f64) -> f64 {
    phi_psi_log_target(proposal, omega, lambda) - phi_psi_log_target(current, omega, lambda)
        + proposal.ln()
        - current.ln()
}

/// Updates `λ_ψ`, then `φ_ψ` (one Metropolis–Hastings step), then every
/// `ω_{ψ,j}`. Returns whether the `φ_ψ` proposal was accepted.
pub fn step_ng_hierarchy<R: Rng + ?Sized>(
    ng: &mut NgState,
    psi: &DVector<f64>,
    mu: &DVector<f64>,
    c0: f64,
    c1: f64,
    rng: &mut R,
) -> Result<bool> {
    let (shape, rate) = lambda_posterior_params(ng.phi, &ng.omega, c0, c1);
    ng.lambda = sample_gamma(shape, rate, rng)?;

    let proposal = (ng.phi.ln() + ng.scale * standard_normal(rng)).exp();
    let log_r = phi_psi_log_ratio(proposal, ng.phi, &ng.omega, ng.lambda);
    let accepted = log_r >= 0.0 || rng.random::<f64>().ln() < log_r;
    if accepted {
        ng.phi = proposal;
    }

    for j in 0..ng.omega.len() {
        let dev = psi[j] - mu[j];
        // guard the GIG's third argument against exact zeros when φ_ψ ≤ 0.5
        let c = if ng.phi > 0.5 { dev * dev } else { (dev * dev).max(1e-300) };
        ng.omega[j] = sample_gig(ng.phi - 0.5, ng.lambda * ng.phi, c, rng)?.max(1e-300);
    }
    Ok(accepted)
}
