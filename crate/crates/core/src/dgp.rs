//! Synthetic data from a known mixed-frequency VAR with common stochastic
//! volatility.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregationScheme;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, spectral_radius};
use crate::stats::{standard_normal, standard_normal_vector};
use crate::tsdata::{Frequency, MixedPanel, Month, TemporalAggregation, VariableInfo};

/// Parameters of the data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub ids: Vec<String>,
    pub n_m: usize,
    /// `(Π_1, …, Π_p)` stored row-major, `n × np`.
    pub pi: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    /// Steady state `Ψ` (constant deterministic term).
    pub psi: Vec<f64>,
    /// Log-volatility AR coefficient; ignored when `sigma2_h` is 0.
    pub phi: f64,
    /// Log-volatility innovation variance; 0 gives constant volatility.
    pub sigma2_h: f64,
    /// Periods simulated and discarded before the sample starts.
    pub burn: usize,
}

impl DgpSpec {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn pi_matrix(&self) -> Result<DMatrix<f64>> {
        to_matrix(&self.pi, "pi")
    }

    pub fn sigma_matrix(&self) -> Result<DMatrix<f64>> {
        to_matrix(&self.sigma, "sigma")
    }

    pub fn lags(&self) -> usize {
        self.pi.first().map_or(0, |r| r.len()) / self.n().max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.n_m > n {
            return Err(Error::Config(format!("dgp: n_m = {} with {n} variables", self.n_m)));
        }
        let pi = self.pi_matrix()?;
        if pi.nrows() != n || pi.ncols() == 0 || pi.ncols() % n != 0 {
            return Err(Error::Config(format!("dgp: pi is {:?}, expected {n} x np", pi.shape())));
        }
        let sigma = self.sigma_matrix()?;
        if sigma.shape() != (n, n) {
            return Err(Error::Config(format!("dgp: sigma is {:?}, expected {n}x{n}", sigma.shape())));
        }
        cholesky(&sigma, "dgp sigma")?;
        if self.psi.len() != n {
            return Err(Error::Config(format!("dgp: psi has {} entries, expected {n}", self.psi.len())));
        }
        if self.sigma2_h < 0.0 || (self.sigma2_h > 0.0 && self.phi.abs() >= 1.0) {
            return Err(Error::Config("dgp: need sigma2_h >= 0 and |phi| < 1".into()));
        }
        Ok(())
    }

    /// Largest companion eigenvalue modulus of `Π`.
    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(spectral_radius(&self.pi_matrix()?))
    }
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("dgp: ragged rows in {what}")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Simulated sample: the monthly truth, its observable counterpart and the
/// log-volatility path.
#[derive(Debug, Clone)]
pub struct DgpOutput {
    /// `T × n` monthly values of every variable.
    pub truth: DMatrix<f64>,
    /// `h_t = ln f_t`.
    pub h: Vec<f64>,
    /// Monthly variables observed every month, quarterly variables as
    /// aggregated values at quarter-end months.
    pub panel: MixedPanel,
}

/// Simulates `t_len` months starting at `start`. Quarterly releases need a
/// full aggregation window, so none appear in the first four months.
pub fn simulate_dgp<R: Rng + ?Sized>(
    spec: &DgpSpec,
    t_len: usize,
    start: Month,
    scheme: &AggregationScheme,
    rng: &mut R,
) -> Result<DgpOutput> {
    spec.validate()?;
    let n = spec.n();
    let p = spec.lags();
    let pi = spec.pi_matrix()?;
    let chol = cholesky(&spec.sigma_matrix()?, "dgp sigma")?.l();
    let psi = DVector::from_vec(spec.psi.clone());
    let total = spec.burn + t_len;
    let mut dev: Vec<DVector<f64>> = vec![DVector::zeros(n); p];
    let mut hs = Vec::with_capacity(total);
    let mut h = 0.0;
    for _ in 0..total {
        if spec.sigma2_h > 0.0 {
            h = spec.phi * h + spec.sigma2_h.sqrt() * standard_normal(rng);
        }
        let mut x = (0.5 * h).exp() * (&chol * standard_normal_vector(n, rng));
        for l in 1..=p {
            x += pi.columns((l - 1) * n, n) * &dev[dev.len() - l];
        }
        dev.push(x);
        hs.push(h);
    }
    let dev = &dev[p + spec.burn..];
    let truth = DMatrix::from_fn(t_len, n, |t, j| dev[t][j] + psi[j]);
    let mut data = vec![vec![None; n]; t_len];
    for (t, row) in data.iter_mut().enumerate() {
        let quarter_end = start.add_months(t as i64).is_quarter_end();
        for (j, v) in row.iter_mut().enumerate() {
            if j < spec.n_m {
                *v = Some(truth[(t, j)]);
            } else if quarter_end && t + 1 >= scheme.window() {
                let window: Vec<f64> = (0..scheme.window()).map(|k| truth[(t - k, j)]).collect();
                *v = Some(scheme.apply(&window));
            }
        }
    }
    let variables = spec
        .ids
        .iter()
        .enumerate()
        .map(|(j, id)| VariableInfo {
            id: id.clone(),
            frequency: if j < spec.n_m {
                Frequency::Monthly
            } else {
                Frequency::Quarterly
            },
            aggregation: TemporalAggregation::Triangular,
        })
        .collect();
    let panel = MixedPanel::new(start, Frequency::Monthly, variables, spec.n_m, data)?;
    Ok(DgpOutput {
        truth,
        h: hs[spec.burn..].to_vec(),
        panel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{aggregate_path, triangular_weights};
    use crate::stats::RngStream;

    fn spec() -> DgpSpec {
        DgpSpec {
            ids: vec!["a".into(), "b".into(), "q".into()],
            n_m: 2,
            pi: vec![
                vec![0.5, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.1, 0.0, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            ],
            sigma: vec![vec![1.0, 0.2, 0.0], vec![0.2, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            psi: vec![2.0, -1.0, 3.0],
            phi: 0.9,
            sigma2_h: 0.05,
            burn: 50,
        }
    }

    #[test]
    fn quarterly_values_aggregate_the_truth() {
        let s = spec();
        let start = Month::new(2000, 1).unwrap();
        let out = simulate_dgp(&s, 60, start, &triangular_weights(), &mut RngStream::new(5, 0).rng()).unwrap();
        let q: Vec<f64> = out.truth.column(2).iter().copied().collect();
        let agg = aggregate_path(&q, start, &triangular_weights()).unwrap();
        for (m, v) in agg {
            let t = out.panel.index_of(m).unwrap();
            assert!((out.panel.value(t, 2).unwrap() - v).abs() < 1e-12);
        }
        assert_eq!(out.panel.balanced_through(), Some(59));
        assert_eq!(s.lags(), 4);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = spec();
        let start = Month::new(2000, 1).unwrap();
        let a = simulate_dgp(&s, 30, start, &triangular_weights(), &mut RngStream::new(9, 1).rng()).unwrap();
        let b = simulate_dgp(&s, 30, start, &triangular_weights(), &mut RngStream::new(9, 1).rng()).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.h, b.h);
    }
}
