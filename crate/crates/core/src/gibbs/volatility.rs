//! Common stochastic volatility: `h_t = φ h_{t−1} + ν_t`, `f_t = exp(h_t)`,
//! sampled through the ten-component normal mixture approximation of
//! `log χ²₁`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bidiag_backward, bidiag_forward, tridiag_cholesky};
use crate::priors::CsvPrior;
use crate::stats::{sample_chi_squared, sample_truncated_normal, standard_normal};

/// Component probabilities of the ten-state mixture for `log χ²₁`.
pub const MIXTURE_PROB: [f64; 10] = [
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
];
/// Component means.
pub const MIXTURE_MEAN: [f64; 10] = [
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000,
];
/// Component variances.
pub const MIXTURE_VAR: [f64; 10] = [
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
];

/// Offset guarding `log(z̈²)` against exact zeros.
pub const LOG_SQUARE_OFFSET: f64 = 1e-10;

/// Density of the mixture at `x`.
pub fn mixture_density(x: f64) -> f64 {
    (0..10)
        .map(|k| {
            let v = MIXTURE_VAR[k];
            let e = x - MIXTURE_MEAN[k];
            MIXTURE_PROB[k] * (-0.5 * e * e / v).exp() / (2.0 * PI * v).sqrt()
        })
        .sum()
}

/// Exact density of `log χ²₁` at `x`.
pub fn log_chi2_density(x: f64) -> f64 {
    (0.5 * x - 0.5 * x.exp()).exp() / (2.0 * PI).sqrt()
}

/// Volatility parameters and latent path over the estimation periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityState {
    pub phi: f64,
    pub sigma2: f64,
    /// `h_1, …, h_T`, with `h_0 = 0` fixed.
    pub h: Vec<f64>,
    /// Mixture indicator per period and variable (row-major `T × n`).
    pub indicators: Vec<u8>,
}

impl VolatilityState {
    pub fn new(prior: &CsvPrior, periods: usize, n: usize) -> Self {
        Self {
            phi: prior.mu_phi.clamp(-0.99, 0.99),
            sigma2: prior.sigma2,
            h: vec![0.0; periods],
            indicators: vec![4; periods * n],
        }
    }
}

/// `log(z̈² + offset)` for standardized residuals `z̈` (`T × n`).
pub fn log_squares(zdd: &DMatrix<f64>) -> DMatrix<f64> {
    zdd.map(|v| (v * v + LOG_SQUARE_OFFSET).ln())
}

/// Draws `φ` then `σ²` given `h`. `fixed_sigma2` skips the `σ²` draw.
pub fn step_volatility_params<R: Rng + ?Sized>(
    state: &mut VolatilityState,
    prior: &CsvPrior,
    fixed_sigma2: Option<f64>,
    rng: &mut R,
) -> Result<()> {
    let h = &state.h;
    let t_len = h.len();
    let lag = |t: usize| if t == 0 { 0.0 } else { h[t - 1] };
    let (mut s_lag2, mut s_cross) = (0.0, 0.0);
    for t in 0..t_len {
        s_lag2 += lag(t) * lag(t);
        s_cross += lag(t) * h[t];
    }
    let prec = 1.0 / prior.omega_phi + s_lag2 / state.sigma2;
    let mean = (s_cross / state.sigma2 + prior.mu_phi / prior.omega_phi) / prec;
    state.phi = sample_truncated_normal(mean, 1.0 / prec, -1.0, 1.0, rng)?;
    match fixed_sigma2 {
        Some(v) => state.sigma2 = v,
        None => {
            let ss: f64 = (0..t_len).map(|t| (h[t] - state.phi * lag(t)).powi(2)).sum();
            let scale = ss + prior.dof * prior.sigma2;
            state.sigma2 = scale / sample_chi_squared(prior.dof + t_len as f64, rng)?;
        }
    }
    Ok(())
}

/// Draws each mixture indicator from its ten-point conditional.
pub fn step_indicators<R: Rng + ?Sized>(
    state: &mut VolatilityState,
    ystar: &DMatrix<f64>,
    rng: &mut R,
) {
    let (t_len, n) = ystar.shape();
    let mut w = [0.0; 10];
    for t in 0..t_len {
        for i in 0..n {
            let e = ystar[(t, i)] - state.h[t];
            let mut best = f64::NEG_INFINITY;
            for k in 0..10 {
                let d = e - MIXTURE_MEAN[k];
                w[k] = MIXTURE_PROB[k].ln() - 0.5 * MIXTURE_VAR[k].ln() - 0.5 * d * d / MIXTURE_VAR[k];
                best = best.max(w[k]);
            }
            let mut total = 0.0;
            for v in w.iter_mut() {
                *v = (*v - best).exp();
                total += *v;
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = 9;
            for (k, v) in w.iter().enumerate() {
                if u < *v {
                    pick = k;
                    break;
                }
                u -= v;
            }
            state.indicators[t * n + i] = pick as u8;
        }
    }
}

/// Draws the whole path `h` from its Gaussian conditional given the
/// indicators, using the tridiagonal posterior precision.
pub fn step_log_volatility<R: Rng + ?Sized>(
    state: &mut VolatilityState,
    ystar: &DMatrix<f64>,
    rng: &mut R,
) -> Result<()> {
    let (t_len, n) = ystar.shape();
    if t_len == 0 {
        return Ok(());
    }
    let phi = state.phi;
    let s2 = state.sigma2;
    let mut diag = vec![(1.0 + phi * phi) / s2; t_len];
    diag[t_len - 1] = 1.0 / s2;
    let sub = vec![-phi / s2; t_len - 1];
    let mut b = vec![0.0; t_len];
    for t in 0..t_len {
        for i in 0..n {
            let k = state.indicators[t * n + i] as usize;
            diag[t] += 1.0 / MIXTURE_VAR[k];
            b[t] += (ystar[(t, i)] - MIXTURE_MEAN[k]) / MIXTURE_VAR[k];
        }
    }
    let (ld, ls) = tridiag_cholesky(&diag, &sub)
        .map_err(|e| Error::Numeric(format!("log-volatility precision: {e}")))?;
    let mean = bidiag_backward(&ld, &ls, &bidiag_forward(&ld, &ls, &b));
    let eps: Vec<f64> = (0..t_len).map(|_| standard_normal(rng)).collect();
    let dev = bidiag_backward(&ld, &ls, &eps);
    for t in 0..t_len {
        state.h[t] = mean[t] + dev[t];
    }
    Ok(())
}

/// One full update in the order `(φ, σ²)`, indicators, `h`.
pub fn step_volatility<R: Rng + ?Sized>(
    state: &mut VolatilityState,
    zdd: &DMatrix<f64>,
    prior: &CsvPrior,
    fixed_sigma2: Option<f64>,
    rng: &mut R,
) -> Result<()> {
    if zdd.nrows() != state.h.len() {
        return Err(Error::Validation(format!(
            "{} residual rows for {} volatility periods",
            zdd.nrows(),
            state.h.len()
        )));
    }
    let ystar = log_squares(zdd);
    step_volatility_params(state, prior, fixed_sigma2, rng)?;
    step_indicators(state, &ystar, rng);
    step_log_volatility(state, &ystar, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_probabilities_sum_to_one() {
        let s: f64 = MIXTURE_PROB.iter().sum();
        assert!((s - 1.0).abs() < 1e-4);
    }

    #[test]
    fn mixture_tracks_log_chi_squared() {
        let mut gap = 0.0f64;
        let mut x = -15.0;
        while x <= 5.0 {
            gap = gap.max((mixture_density(x) - log_chi2_density(x)).abs());
            x += 0.001;
        }
        assert!(gap < 0.01, "sup gap {gap}");
    }
}
