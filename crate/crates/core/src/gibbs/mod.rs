//! Gibbs sampler for the mixed-frequency VAR.
//!
//! Each iteration updates, in order: the latent monthly series, `(Π, Σ)`,
//! the steady-state block `(λ_ψ, φ_ψ, ω_ψ, ψ)` and the volatility block
//! `(φ, σ², r, h)`. Blocks absent from a model configuration are skipped.

pub mod regression;
pub mod steady_state;
pub mod volatility;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregationScheme;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, spectral_radius};
use crate::priors::{MeanModel, PriorSpec, SteadyStateVariant};
use crate::ssm::{mean_adjust, simulation_smoother, AdjustedData, CompactStateSpace, SsmParams};
use crate::stats::RngStream;
use crate::tsdata::MixedPanel;

use regression::{draw_niw, niw_posterior, regression_data};
use steady_state::{draw_psi, psi_posterior, step_ng_hierarchy, NgState};
use volatility::{step_volatility, VolatilityState};

/// Iteration counts and Metropolis–Hastings tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Total iterations, including burn-in.
    pub draws: usize,
    pub burnin: usize,
    /// Iterations per adaptation batch.
    pub batch: usize,
    pub seed: u64,
    /// Holds `σ²` at this value instead of sampling it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_sigma2: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            draws: 15000,
            burnin: 5000,
            batch: 100,
            seed: 0,
            fixed_sigma2: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws <= self.burnin {
            return Err(Error::Config(format!(
                "draws ({}) must exceed burnin ({})",
                self.draws, self.burnin
            )));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be positive".into()));
        }
        if self.fixed_sigma2.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::Config("fixed_sigma2 must be positive".into()));
        }
        Ok(())
    }
}

/// Acceptance fraction the scale adaptation aims for.
pub const MH_TARGET: f64 = 0.44;

/// Moves `log s` up by `δ(k) = min(0.01, k^{−1/2})` when the batch
/// acceptance fraction exceeds the target and down otherwise (ties
/// included). `k` counts batches from 1.
pub fn adapt_mh_scale(fraction: f64, k: usize, s: f64) -> f64 {
    let delta = 0.01f64.min((k.max(1) as f64).powf(-0.5));
    if fraction > MH_TARGET {
        (s.ln() + delta).exp()
    } else {
        (s.ln() - delta).exp()
    }
}

/// One kept configuration of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    /// `(Π_1, …, Π_p)`, `n × np`.
    pub pi: DMatrix<f64>,
    /// Intercept of the Minnesota configuration.
    pub intercept: Option<DVector<f64>>,
    pub sigma: DMatrix<f64>,
    /// Steady state `ψ = vec(Ψ)`.
    pub psi: Option<DVector<f64>>,
    /// Prior variances of `ψ` (fixed or sampled).
    pub omega_psi: Option<DVector<f64>>,
    pub phi_psi: Option<f64>,
    pub lambda_psi: Option<f64>,
    pub volatility: Option<VolatilityState>,
    /// The last `max(p, 5)` months of the latent series in levels of the
    /// data (observed values where available).
    pub z_tail: DMatrix<f64>,
    /// Companion spectral radius of `Π` is at least one.
    pub explosive: bool,
}

impl ChainState {
    pub fn n(&self) -> usize {
        self.pi.nrows()
    }

    pub fn p(&self) -> usize {
        self.pi.ncols() / self.pi.nrows()
    }

    /// `A⁻¹`, the lower Cholesky factor of `Σ`.
    pub fn a_inv(&self) -> Result<DMatrix<f64>> {
        Ok(cholesky(&self.sigma, "error covariance")?.l())
    }

    /// Log-volatility in the final estimation period (0 without CSV).
    pub fn h_last(&self) -> f64 {
        self.volatility
            .as_ref()
            .and_then(|v| v.h.last().copied())
            .unwrap_or(0.0)
    }

    /// Unconditional mean: `ψ`, or `(I − ΣΠ_l)⁻¹ c` for the intercept form.
    pub fn steady_state(&self) -> Option<DVector<f64>> {
        if let Some(psi) = &self.psi {
            return Some(psi.clone());
        }
        let c = self.intercept.as_ref()?;
        let n = self.n();
        let mut lhs = DMatrix::identity(n, n);
        for l in 0..self.p() {
            lhs -= self.pi.columns(l * n, n);
        }
        lhs.lu().solve(c)
    }
}

/// Run-level diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Acceptance fraction of each burn-in batch of the `φ_ψ` step.
    pub burnin_batch_acceptance: Vec<f64>,
    /// Acceptance rate of the `φ_ψ` step after burn-in.
    pub mh_acceptance: Option<f64>,
    /// Random-walk scale after adaptation.
    pub mh_scale: Option<f64>,
    /// Kept draws with an explosive `Π`.
    pub explosive_draws: usize,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub states: Vec<ChainState>,
    pub diagnostics: ChainDiagnostics,
}

struct Working {
    pi: DMatrix<f64>,
    intercept: Option<DVector<f64>>,
    sigma: DMatrix<f64>,
    psi: Option<DVector<f64>>,
    ng: Option<NgState>,
    vol: Option<VolatilityState>,
    /// Latent series net of the mean (`z̃`); in levels for the intercept form.
    z_adj: DMatrix<f64>,
    z: DMatrix<f64>,
}

/// Runs the sampler and returns the `draws − burnin` post burn-in states.
pub fn run_chain(
    panel: &MixedPanel,
    prior: &PriorSpec,
    config: &SamplerConfig,
    stream: RngStream,
) -> Result<ChainOutput> {
    config.validate()?;
    if panel.n_m() != prior.n_m || panel.n_q() != prior.n_q {
        return Err(Error::Validation(format!(
            "prior built for n_m = {}, n_q = {} but panel has {} and {}",
            prior.n_m,
            prior.n_q,
            panel.n_m(),
            panel.n_q()
        )));
    }
    let mut rng = stream.rng();
    let n = panel.n();
    let p = prior.p;
    let t_len = panel.len();
    if t_len <= p + 1 {
        return Err(Error::Validation(format!("{t_len} periods are too few for {p} lags")));
    }
    let scheme = AggregationScheme::default();
    let d = DMatrix::from_element(t_len, 1, 1.0);
    let periods = t_len - p;

    let (psi, ng, omega_fixed, mu_psi, c01) = match &prior.mean {
        MeanModel::Intercept { .. } => (None, None, None, None, None),
        MeanModel::SteadyState(ss) => {
            let mu = DVector::from_vec(ss.mean.clone());
            match &ss.variant {
                SteadyStateVariant::Fixed { variances } => (
                    Some(mu.clone()),
                    None,
                    Some(DVector::from_vec(variances.clone())),
                    Some(mu),
                    None,
                ),
                SteadyStateVariant::NormalGamma { c0, c1 } => (
                    Some(mu.clone()),
                    Some(NgState {
                        omega: DVector::from_element(n, 1.0),
                        phi: 1.0,
                        lambda: 1.0,
                        scale: 1.0,
                    }),
                    None,
                    Some(mu),
                    Some((*c0, *c1)),
                ),
            }
        }
    };
    let intercept = prior.has_intercept().then(|| {
        DVector::from_fn(n, |j, _| {
            let obs: Vec<f64> = (0..t_len).filter_map(|t| panel.value(t, j)).collect();
            obs.iter().sum::<f64>() / obs.len().max(1) as f64
        })
    });
    let mut w = Working {
        pi: DMatrix::zeros(n, n * p),
        intercept,
        sigma: prior.niw.scale.clone(),
        psi,
        ng,
        vol: prior.volatility.as_ref().map(|v| VolatilityState::new(v, periods, n)),
        z_adj: DMatrix::zeros(t_len, n),
        z: DMatrix::zeros(t_len, n),
    };

    let tail = p.max(scheme.window()).min(t_len);
    let mut states = Vec::with_capacity(config.draws - config.burnin);
    let mut diag = ChainDiagnostics::default();
    let (mut batch_acc, mut kept_acc) = (0usize, 0usize);

    for it in 0..config.draws {
        let f = volatility_path(&w.vol, t_len, p);

        // latent series
        let adjusted = match &w.psi {
            Some(psi) => {
                let psi_m = DMatrix::from_column_slice(n, 1, psi.as_slice());
                mean_adjust(panel, &psi_m, &d, &scheme)
            }
            None => Ok(AdjustedData::from_panel(panel)),
        }
        .map_err(|e| e.in_block(it, "latent"))?;
        let params = SsmParams {
            pi: &w.pi,
            sigma: &w.sigma,
            intercept: w.intercept.as_ref(),
            f: &f,
            scheme,
        };
        let draw = CompactStateSpace::new(&adjusted, params)
            .and_then(|css| simulation_smoother(&css, &mut rng))
            .map_err(|e| e.in_block(it, "latent"))?;
        w.z_adj = draw.z;
        w.z = match &w.psi {
            Some(psi) => {
                let mut z = w.z_adj.clone();
                for mut row in z.row_iter_mut() {
                    row += psi.transpose();
                }
                z
            }
            None => w.z_adj.clone(),
        };

        // (Π, Σ)
        let (x, y) = regression_data(&w.z_adj, &f, p, w.intercept.is_some());
        let (b, sigma) = niw_posterior(&x, &y, &prior.niw)
            .and_then(|post| draw_niw(&post, &mut rng))
            .map_err(|e| e.in_block(it, "pi_sigma"))?;
        w.pi = b.rows(0, n * p).transpose();
        if let Some(c) = w.intercept.as_mut() {
            *c = b.row(n * p).transpose();
        }
        w.sigma = sigma;

        // steady state and its hierarchy
        if let (Some(psi), Some(mu)) = (w.psi.as_mut(), mu_psi.as_ref()) {
            if let (Some(ng), Some((c0, c1))) = (w.ng.as_mut(), c01) {
                let accepted = step_ng_hierarchy(ng, psi, mu, c0, c1, &mut rng)
                    .map_err(|e| e.in_block(it, "steady_state"))?;
                if it < config.burnin {
                    batch_acc += usize::from(accepted);
                    if (it + 1) % config.batch == 0 {
                        let frac = batch_acc as f64 / config.batch as f64;
                        diag.burnin_batch_acceptance.push(frac);
                        let k = (it + 1) / config.batch;
                        ng.scale = adapt_mh_scale(frac, k, ng.scale);
                        batch_acc = 0;
                    }
                } else {
                    kept_acc += usize::from(accepted);
                }
            }
            let omega = match (&w.ng, &omega_fixed) {
                (Some(ng), _) => ng.omega.clone(),
                (None, Some(o)) => o.clone(),
                (None, None) => unreachable!("steady-state prior without variances"),
            };
            let post = psi_posterior(&w.z, &d, &w.pi, &w.sigma, &f, mu, &omega)
                .map_err(|e| e.in_block(it, "steady_state"))?;
            *psi = draw_psi(&post, &mut rng).map_err(|e| e.in_block(it, "steady_state"))?;
            w.z_adj = w.z.clone();
            for mut row in w.z_adj.row_iter_mut() {
                row -= psi.transpose();
            }
        }

        // volatility
        if let (Some(vol), Some(csv)) = (w.vol.as_mut(), prior.volatility.as_ref()) {
            let zdd = standardized_residuals(&w.z_adj, &w.pi, w.intercept.as_ref(), &w.sigma, p)
                .map_err(|e| e.in_block(it, "volatility"))?;
            step_volatility(vol, &zdd, csv, config.fixed_sigma2, &mut rng)
                .map_err(|e| e.in_block(it, "volatility"))?;
        }

        if it >= config.burnin {
            let explosive = spectral_radius(&w.pi) >= 1.0;
            diag.explosive_draws += usize::from(explosive);
            states.push(ChainState {
                pi: w.pi.clone(),
                intercept: w.intercept.clone(),
                sigma: w.sigma.clone(),
                psi: w.psi.clone(),
                omega_psi: w.ng.as_ref().map(|g| g.omega.clone()).or_else(|| omega_fixed.clone()),
                phi_psi: w.ng.as_ref().map(|g| g.phi),
                lambda_psi: w.ng.as_ref().map(|g| g.lambda),
                volatility: w.vol.clone(),
                z_tail: w.z.rows(t_len - tail, tail).into_owned(),
                explosive,
            });
        }
    }
    if let Some(ng) = &w.ng {
        diag.mh_scale = Some(ng.scale);
        diag.mh_acceptance = Some(kept_acc as f64 / (config.draws - config.burnin) as f64);
    }
    if diag.explosive_draws > 0 {
        log::warn!(
            "{} of {} kept draws have an explosive coefficient matrix",
            diag.explosive_draws,
            states.len()
        );
    }
    Ok(ChainOutput {
        states,
        diagnostics: diag,
    })
}

/// `f_t` for every period; presample periods use `f = 1`.
fn volatility_path(vol: &Option<VolatilityState>, t_len: usize, p: usize) -> Vec<f64> {
    let mut f = vec![1.0; t_len];
    if let Some(v) = vol {
        for (t, h) in v.h.iter().enumerate() {
            f[t + p] = h.exp();
        }
    }
    f
}

/// `z̈_t = A (z̃_t − c − Σ Π_l z̃_{t−l})` for periods `p..T` (rows).
pub fn standardized_residuals(
    z_adj: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    intercept: Option<&DVector<f64>>,
    sigma: &DMatrix<f64>,
    p: usize,
) -> Result<DMatrix<f64>> {
    let (t_len, n) = z_adj.shape();
    let l = cholesky(sigma, "error covariance")?.l();
    let mut u = DMatrix::zeros(n, t_len - p);
    for t in p..t_len {
        let mut e = z_adj.row(t).transpose();
        if let Some(c) = intercept {
            e -= c;
        }
        for lag in 1..=p {
            e -= pi.columns((lag - 1) * n, n) * z_adj.row(t - lag).transpose();
        }
        u.set_column(t - p, &e);
    }
    let zdd = l
        .solve_lower_triangular(&u)
        .ok_or_else(|| Error::Numeric("singular covariance factor".into()))?;
    Ok(zdd.transpose())
}

/// Runs independent chains in parallel, one stream per chain.
pub fn run_chains(
    panel: &MixedPanel,
    prior: &PriorSpec,
    config: &SamplerConfig,
    chains: usize,
) -> Result<Vec<ChainOutput>> {
    use rayon::prelude::*;
    (0..chains)
        .into_par_iter()
        .map(|k| run_chain(panel, prior, config, RngStream::new(config.seed, k as u64)))
        .collect()
}

/// Writes kept states as JSON lines, one state per line.
pub fn write_draws<W: std::io::Write>(states: &[ChainState], mut writer: W) -> Result<()> {
    for s in states {
        serde_json::to_writer(&mut writer, s)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_draws<R: std::io::BufRead>(reader: R) -> Result<Vec<ChainState>> {
    reader
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.as_ref().is_ok_and(|l| l.trim().is_empty()))
        .map(|(i, line)| {
            serde_json::from_str(&line?).map_err(|e| Error::Parse {
                location: format!("draw {}", i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptation_rule() {
        let s = adapt_mh_scale(0.5, 1, 1.0);
        assert!((s.ln() - 0.01).abs() < 1e-15);
        let s = adapt_mh_scale(0.1, 40000, 1.0);
        assert!((s.ln() + 0.005).abs() < 1e-15);
        let s = adapt_mh_scale(0.44, 3, 2.0);
        assert!(s < 2.0);
    }

    #[test]
    fn config_validation() {
        let mut c = SamplerConfig::default();
        assert!(c.validate().is_ok());
        c.burnin = c.draws;
        assert!(c.validate().is_err());
    }
}
