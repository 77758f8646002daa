//! Posterior predictive simulation and its summaries.
//!
//! Paths are simulated on the panel's own clock. Each path starts from the
//! tail of the latent series drawn by the smoother, so months at the ragged
//! edge are conditioned on what has been published.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::aggregation::AggregationScheme;
use crate::error::{Error, Result};
use crate::gibbs::ChainState;
use crate::linalg::cholesky;
use crate::stats::{standard_normal, standard_normal_vector, RngStream};
use crate::tsdata::{Frequency, MixedPanel, Month, VariableInfo};

/// One simulated future: `steps × n` values and the volatility factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictivePath {
    pub z: DMatrix<f64>,
    pub f: Vec<f64>,
}

/// Simulates `steps` periods ahead of the estimation sample:
/// `h_{T+j} = φ h_{T+j−1} + ν`, `z_{T+j} = μ + Σ Π_i (z_{T+j−i} − μ) + √f A⁻¹ e`.
pub fn simulate_path<R: Rng + ?Sized>(
    state: &ChainState,
    steps: usize,
    rng: &mut R,
) -> Result<PredictivePath> {
    if steps < 1 {
        return Err(Error::Validation("forecast horizon must be at least 1".into()));
    }
    let n = state.n();
    let p = state.p();
    let tail = state.z_tail.nrows();
    if tail < p {
        return Err(Error::Validation(format!(
            "state carries {tail} initial periods, {p} lags needed"
        )));
    }
    let a_inv = state.a_inv()?;
    let (level, intercept) = match (&state.psi, &state.intercept) {
        (Some(psi), _) => (psi.clone(), DVector::zeros(n)),
        (None, Some(c)) => (DVector::zeros(n), c.clone()),
        (None, None) => (DVector::zeros(n), DVector::zeros(n)),
    };
    // history of deviations from the level, most recent last
    let mut hist: Vec<DVector<f64>> = (tail - p..tail)
        .map(|t| state.z_tail.row(t).transpose() - &level)
        .collect();
    let mut z = DMatrix::zeros(steps, n);
    let mut f = Vec::with_capacity(steps);
    let mut h = state.h_last();
    for s in 0..steps {
        let ft = match &state.volatility {
            Some(v) => {
                h = v.phi * h + v.sigma2.sqrt() * standard_normal(rng);
                h.exp()
            }
            None => 1.0,
        };
        let mut next = intercept.clone();
        for l in 1..=p {
            next += state.pi.columns((l - 1) * n, n) * &hist[hist.len() - l];
        }
        next += &a_inv * standard_normal_vector(n, rng) * ft.sqrt();
        z.set_row(s, &(&next + &level).transpose());
        hist.remove(0);
        hist.push(next);
        f.push(ft);
    }
    Ok(PredictivePath { z, f })
}

/// Largest horizons requested, in months for monthly variables and in
/// quarters for quarterly ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizons {
    pub monthly: usize,
    pub quarterly: usize,
}

/// Predictive draws, one path per kept chain state.
///
/// Horizons are relative to the forecast date `origin` (the month in which
/// the forecast is made): a monthly variable at horizon `h` targets month
/// `origin − 1 + h`; a quarterly variable at horizon `h` targets the quarter
/// `h` quarters after the one containing `origin`, so `h = 0` is the nowcast.
#[derive(Debug, Clone)]
pub struct PredictiveDraws {
    pub variables: Vec<VariableInfo>,
    pub n_m: usize,
    pub clock: Frequency,
    pub origin: Month,
    pub panel_end: Month,
    /// Leading rows of every path taken from the estimation sample.
    pub tail: usize,
    /// `(tail + steps) × n` per draw.
    pub paths: Vec<DMatrix<f64>>,
    /// Volatility factors over the simulated steps, per draw.
    pub volatility: Vec<Vec<f64>>,
    /// First reported horizon per variable.
    pub first_horizon: Vec<usize>,
    pub horizons: Horizons,
    pub scheme: AggregationScheme,
}

/// Number of simulated periods needed to cover `horizons` from `origin`.
pub fn required_steps(panel: &MixedPanel, origin: Month, horizons: Horizons) -> usize {
    let end = panel.end();
    let last_m = origin.add_months(horizons.monthly as i64 - 1);
    let last_q = origin.to_quarter_end().add_months(3 * horizons.quarterly as i64);
    let reach = match panel.clock() {
        Frequency::Monthly => last_m.max(last_q).months_since(end),
        Frequency::Quarterly => last_q.months_since(end).div_euclid(3),
    };
    reach.max(1) as usize
}

/// Simulates one predictive path per state, in parallel. Draw `i` uses
/// the child stream `i` of `stream`.
pub fn forecast(
    states: &[ChainState],
    panel: &MixedPanel,
    origin: Month,
    horizons: Horizons,
    stream: RngStream,
) -> Result<PredictiveDraws> {
    if states.is_empty() {
        return Err(Error::Validation("no chain states to forecast from".into()));
    }
    let steps = required_steps(panel, origin, horizons);
    let sims: Vec<(DMatrix<f64>, Vec<f64>)> = states
        .par_iter()
        .enumerate()
        .map(|(i, st)| {
            let mut rng = stream.child(i as u64).rng();
            let path = simulate_path(st, steps, &mut rng)?;
            let tail = st.z_tail.nrows();
            let mut full = DMatrix::zeros(tail + steps, st.n());
            full.rows_mut(0, tail).copy_from(&st.z_tail);
            full.rows_mut(tail, steps).copy_from(&path.z);
            Ok((full, path.f))
        })
        .collect::<Result<_>>()?;
    let tail = states[0].z_tail.nrows();
    let prev = origin.add_months(-1);
    let first_horizon = panel
        .variables()
        .iter()
        .enumerate()
        .map(|(j, v)| match v.frequency {
            Frequency::Quarterly => 0,
            Frequency::Monthly => {
                let seen = panel.index_of(prev).and_then(|t| panel.value(t, j)).is_some();
                usize::from(seen)
            }
        })
        .collect();
    let (paths, volatility) = sims.into_iter().unzip();
    Ok(PredictiveDraws {
        variables: panel.variables().to_vec(),
        n_m: panel.n_m(),
        clock: panel.clock(),
        origin,
        panel_end: panel.end(),
        tail,
        paths,
        volatility,
        first_horizon,
        horizons,
        scheme: AggregationScheme::default(),
    })
}

impl PredictiveDraws {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.id == id)
    }

    /// Month targeted by variable `j` at horizon `h`.
    pub fn target_month(&self, j: usize, h: usize) -> Month {
        match self.variables[j].frequency {
            Frequency::Quarterly => self.origin.to_quarter_end().add_months(3 * h as i64),
            Frequency::Monthly => self.origin.add_months(h as i64 - 1),
        }
    }

    /// Largest horizon reported for variable `j`.
    pub fn last_horizon(&self, j: usize) -> usize {
        match self.variables[j].frequency {
            Frequency::Quarterly => self.horizons.quarterly,
            Frequency::Monthly => self.horizons.monthly,
        }
    }

    fn row_of(&self, month: Month) -> Result<usize> {
        let k = month.months_since(self.panel_end);
        let step = self.clock.step();
        let rows = self.paths[0].nrows() as i64;
        let idx = self.tail as i64 - 1 + k.div_euclid(step);
        if k.rem_euclid(step) != 0 || idx < 0 || idx >= rows {
            return Err(Error::Validation(format!(
                "month {month} is not covered by the predictive paths"
            )));
        }
        Ok(idx as usize)
    }

    /// Value of variable `j` in draw `d` for `month`. Quarterly variables
    /// on a monthly clock are aggregated from the monthly latent path.
    pub fn value(&self, d: usize, j: usize, month: Month) -> Result<f64> {
        let r = self.row_of(month)?;
        let path = &self.paths[d];
        if self.clock == Frequency::Monthly && j >= self.n_m {
            let w = self.scheme.window();
            if r + 1 < w {
                return Err(Error::Validation(format!(
                    "month {month} lacks the {w} months needed for aggregation"
                )));
            }
            let window: Vec<f64> = (0..w).map(|k| path[(r - k, j)]).collect();
            Ok(self.scheme.apply(&window))
        } else {
            Ok(path[(r, j)])
        }
    }

    /// `draws × vars.len()` matrix of values at horizon `h`.
    pub fn samples(&self, vars: &[usize], h: usize) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.len(), vars.len());
        for (c, &j) in vars.iter().enumerate() {
            let month = self.target_month(j, h);
            for d in 0..self.len() {
                out[(d, c)] = self.value(d, j, month)?;
            }
        }
        Ok(out)
    }

    /// CSV with one row per variable and horizon:
    /// `variable,horizon,mean,sd,q05,q50,q95`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variable", "horizon", "mean", "sd", "q05", "q50", "q95"])?;
        for j in 0..self.n() {
            for h in self.first_horizon[j]..=self.last_horizon(j) {
                let s = summarize(&self.samples(&[j], h)?)?;
                w.write_record([
                    self.variables[j].id.clone(),
                    h.to_string(),
                    fmt(s.mean[0]),
                    fmt(s.cov[(0, 0)].sqrt()),
                    fmt(s.q05[0]),
                    fmt(s.q50[0]),
                    fmt(s.q95[0]),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Raw draws: `draw,variable,horizon,value`.
    pub fn write_draws_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["draw", "variable", "horizon", "value"])?;
        for j in 0..self.n() {
            for h in self.first_horizon[j]..=self.last_horizon(j) {
                let month = self.target_month(j, h);
                for d in 0..self.len() {
                    w.write_record([
                        d.to_string(),
                        self.variables[j].id.clone(),
                        h.to_string(),
                        fmt(self.value(d, j, month)?),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.10e}")
}

/// Normal fit and empirical quantiles of a set of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: DVector<f64>,
    /// Unbiased sample covariance.
    pub cov: DMatrix<f64>,
    pub q05: DVector<f64>,
    pub q50: DVector<f64>,
    pub q95: DVector<f64>,
    /// The covariance is numerically singular.
    pub singular: bool,
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Summarizes `draws × k` samples.
pub fn summarize(samples: &DMatrix<f64>) -> Result<Summary> {
    let (n_draws, k) = samples.shape();
    if n_draws < 2 {
        return Err(Error::Validation(format!(
            "at least two draws are needed, got {n_draws}"
        )));
    }
    let mean = DVector::from_fn(k, |j, _| samples.column(j).mean());
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n_draws - 1) as f64;
    let mut qs = [DVector::zeros(k), DVector::zeros(k), DVector::zeros(k)];
    for j in 0..k {
        let mut col: Vec<f64> = samples.column(j).iter().copied().collect();
        col.sort_by(f64::total_cmp);
        for (q, level) in qs.iter_mut().zip([0.05, 0.5, 0.95]) {
            q[j] = quantile(&col, level);
        }
    }
    let singular = is_singular(&cov);
    let [q05, q50, q95] = qs;
    Ok(Summary {
        mean,
        cov,
        q05,
        q50,
        q95,
        singular,
    })
}

fn is_singular(cov: &DMatrix<f64>) -> bool {
    if cov.nrows() == 0 {
        return true;
    }
    if cholesky(cov, "predictive covariance").is_err() {
        return true;
    }
    let eig = cov.clone().symmetric_eigenvalues();
    let max = eig.max();
    !(max > 0.0) || eig.min() <= 1e-12 * max
}
