//! Prior specifications and their validation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::is_spd;
use crate::tsdata::{Frequency, MixedPanel, TransformSpec};

/// Minnesota-style prior variances for the lag coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinnesotaSpec {
    /// Overall tightness.
    pub lambda1: f64,
    /// Lag decay.
    pub lambda2: f64,
    /// Per-variable scale adjustments `s_r`.
    pub scales: Vec<f64>,
}

impl MinnesotaSpec {
    pub fn new(scales: Vec<f64>) -> Self {
        Self {
            lambda1: 0.2,
            lambda2: 1.0,
            scales,
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if !(self.lambda1 > 0.0) {
            return Err(Error::Config(format!("lambda1 must be > 0, got {}", self.lambda1)));
        }
        if !(self.lambda2 >= 0.0) {
            return Err(Error::Config(format!("lambda2 must be >= 0, got {}", self.lambda2)));
        }
        if self.scales.len() != n {
            return Err(Error::Config(format!(
                "scales: expected {n} entries, got {}",
                self.scales.len()
            )));
        }
        if let Some(s) = self.scales.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::Config(format!("scales must be > 0, got {s}")));
        }
        Ok(())
    }
}

/// Prior variance for each regressor, ordered lag-major: entry
/// `(l − 1)·n + r` belongs to lag `l` of variable `r` and equals
/// `λ1² / (l^λ2 · s_r)²`.
pub fn minnesota_diagonal(spec: &MinnesotaSpec, p: usize, n: usize) -> Result<DVector<f64>> {
    spec.check(n)?;
    let mut d = DVector::zeros(n * p);
    for l in 1..=p {
        let decay = (l as f64).powf(spec.lambda2);
        for (r, s) in spec.scales.iter().enumerate() {
            let denom = decay * s;
            d[(l - 1) * n + r] = spec.lambda1 * spec.lambda1 / (denom * denom);
        }
    }
    Ok(d)
}

/// Residual standard deviation of an OLS AR(`lags`) fit with intercept.
pub fn ar_residual_scale(values: &[f64], lags: usize) -> Result<f64> {
    let t = values.len();
    let k = lags + 1;
    if t <= lags + k {
        return Err(Error::Validation(format!(
            "AR({lags}) scale needs more than {} observations, got {t}",
            lags + k
        )));
    }
    let rows = t - lags;
    let x = DMatrix::from_fn(rows, k, |i, j| if j == 0 { 1.0 } else { values[lags + i - j] });
    let y = DVector::from_fn(rows, |i, _| values[lags + i]);
    let xtx = x.transpose() * &x;
    let beta = xtx
        .clone()
        .cholesky()
        .map(|c| c.solve(&(x.transpose() * &y)))
        .or_else(|| {
            xtx.pseudo_inverse(1e-12)
                .ok()
                .map(|inv| inv * (x.transpose() * &y))
        })
        .ok_or_else(|| Error::Numeric("AR scale regression failed".into()))?;
    let resid = y - x * beta;
    let dof = (rows - k) as f64;
    let s = (resid.norm_squared() / dof).sqrt();
    Ok(if s > 0.0 { s } else { 1.0 })
}

/// `s_r` for every panel variable: residual SD of an AR(4) on its observed
/// values (quarterly variables at their own frequency). Falls back to the
/// sample standard deviation for very short series.
pub fn residual_scales(panel: &MixedPanel) -> Vec<f64> {
    (0..panel.n())
        .map(|j| {
            let obs: Vec<f64> = (0..panel.len()).filter_map(|t| panel.value(t, j)).collect();
            ar_residual_scale(&obs, 4).unwrap_or_else(|_| {
                let n = obs.len() as f64;
                if n < 2.0 {
                    return 1.0;
                }
                let mean = obs.iter().sum::<f64>() / n;
                let var = obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
        })
        .collect()
}

/// Normal inverse Wishart prior for `(Π, Σ)`:
/// `Σ ~ IW(S̲, ν̲)`, `vec(Π') | Σ ~ N(vec(Π̲'), Σ ⊗ Ω̲_Π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPrior {
    pub scale: DMatrix<f64>,
    pub dof: f64,
    /// Diagonal of `Ω̲_Π`, one entry per regressor.
    pub omega_diag: DVector<f64>,
    /// `Π̲'` (regressors × n).
    pub mean: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SteadyStateVariant {
    /// `ψ_j ~ N(μ_j, ω_j)` with fixed `ω_j`.
    Fixed { variances: Vec<f64> },
    /// Normal-gamma hierarchy with `φ_ψ ~ Exp(1)`, `λ_ψ ~ G(c0, c1)`.
    NormalGamma { c0: f64, c1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStatePrior {
    /// `μ_ψ`, length `n·m`.
    pub mean: Vec<f64>,
    pub variant: SteadyStateVariant,
}

impl SteadyStatePrior {
    pub fn fixed(mean: Vec<f64>, sds: &[f64]) -> Self {
        Self {
            mean,
            variant: SteadyStateVariant::Fixed {
                variances: sds.iter().map(|s| s * s).collect(),
            },
        }
    }

    pub fn normal_gamma(mean: Vec<f64>) -> Self {
        Self {
            mean,
            variant: SteadyStateVariant::NormalGamma { c0: 0.01, c1: 0.01 },
        }
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self.variant, SteadyStateVariant::NormalGamma { .. })
    }
}

/// Priors for the log-volatility AR(1): `φ ~ N(μ_φ, Ω_φ; |φ| < 1)` and
/// `σ²` scaled inverse-χ² with `d` degrees of freedom and scale `σ̲²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvPrior {
    pub mu_phi: f64,
    pub omega_phi: f64,
    pub sigma2: f64,
    pub dof: f64,
}

impl Default for CsvPrior {
    fn default() -> Self {
        Self {
            mu_phi: 0.9,
            omega_phi: 0.01,
            sigma2: 0.01,
            dof: 4.0,
        }
    }
}

impl CsvPrior {
    fn check(&self) -> Result<()> {
        if !(self.omega_phi > 0.0) {
            return Err(Error::Config(format!("omega_phi must be > 0, got {}", self.omega_phi)));
        }
        if !(self.sigma2 > 0.0) {
            return Err(Error::Config(format!("sigma2_mean must be > 0, got {}", self.sigma2)));
        }
        if !(self.dof > 0.0) {
            return Err(Error::Config(format!("d must be > 0, got {}", self.dof)));
        }
        Ok(())
    }
}

/// How the unconditional mean enters the model.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanModel {
    /// Conventional VAR with an intercept in the regression block; the
    /// intercept's prior variance is `Σ_ii · intercept_variance`.
    Intercept { intercept_variance: f64 },
    /// Mean-adjusted VAR with a prior directly on the steady state.
    SteadyState(SteadyStatePrior),
}

/// Unvalidated prior configuration. `None` entries take their defaults.
#[derive(Debug, Clone)]
pub struct PriorInputs {
    pub minnesota: MinnesotaSpec,
    /// `S̲`; defaults to `diag(s_r²)`.
    pub niw_scale: Option<DMatrix<f64>>,
    /// `ν̲`; defaults to `n + 2`.
    pub niw_dof: Option<f64>,
    pub mean: MeanModel,
    /// `None` for a constant error covariance.
    pub volatility: Option<CsvPrior>,
}

/// A complete, validated prior bundle for a panel with `n_m + n_q`
/// variables, `p` lags and a constant deterministic term (`m = 1`).
#[derive(Debug, Clone)]
pub struct PriorSpec {
    pub n_m: usize,
    pub n_q: usize,
    pub p: usize,
    pub minnesota: MinnesotaSpec,
    pub niw: NiwPrior,
    pub mean: MeanModel,
    pub volatility: Option<CsvPrior>,
}

impl PriorSpec {
    pub fn n(&self) -> usize {
        self.n_m + self.n_q
    }

    /// Number of deterministic terms per variable.
    pub fn m(&self) -> usize {
        1
    }

    pub fn has_intercept(&self) -> bool {
        matches!(self.mean, MeanModel::Intercept { .. })
    }

    pub fn steady_state(&self) -> Option<&SteadyStatePrior> {
        match &self.mean {
            MeanModel::SteadyState(s) => Some(s),
            MeanModel::Intercept { .. } => None,
        }
    }

    /// Regressors per equation: `n·p` lags plus the intercept if present.
    pub fn regressors(&self) -> usize {
        self.n() * self.p + usize::from(self.has_intercept())
    }
}

/// Checks every invariant and dimension and fills in defaults.
pub fn validate(inputs: PriorInputs, n_m: usize, n_q: usize, p: usize) -> Result<PriorSpec> {
    let n = n_m + n_q;
    if n == 0 {
        return Err(Error::Config("model needs at least one variable".into()));
    }
    if p == 0 {
        return Err(Error::Config("lag order p must be >= 1".into()));
    }
    if n_q > 0 && p < 4 {
        return Err(Error::Config(format!(
            "lag order p = {p} cannot hold the five-month aggregation window (need p >= 4)"
        )));
    }
    let lag_diag = minnesota_diagonal(&inputs.minnesota, p, n)?;

    let scale = match inputs.niw_scale {
        Some(s) => s,
        None => DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            inputs.minnesota.scales.iter().map(|s| s * s),
        )),
    };
    if scale.shape() != (n, n) {
        return Err(Error::Config(format!(
            "niw_scale: expected {n}x{n}, got {:?}",
            scale.shape()
        )));
    }
    if (&scale - scale.transpose()).amax() > 1e-10 * scale.amax().max(1.0) || !is_spd(&scale) {
        return Err(Error::Config("niw_scale must be symmetric positive definite".into()));
    }
    let dof = inputs.niw_dof.unwrap_or(n as f64 + 2.0);
    if !(dof > n as f64 - 1.0) {
        return Err(Error::Config(format!("niw_dof must exceed n - 1 = {}, got {dof}", n - 1)));
    }

    let mut omega_diag = lag_diag;
    match &inputs.mean {
        MeanModel::Intercept { intercept_variance } => {
            if !(*intercept_variance > 0.0) {
                return Err(Error::Config(format!(
                    "intercept_variance must be > 0, got {intercept_variance}"
                )));
            }
            omega_diag = omega_diag.push(*intercept_variance);
        }
        MeanModel::SteadyState(ss) => {
            let nm = n; // m = 1
            if ss.mean.len() != nm {
                return Err(Error::Config(format!(
                    "mu_psi: expected {nm} entries, got {}",
                    ss.mean.len()
                )));
            }
            match &ss.variant {
                SteadyStateVariant::Fixed { variances } => {
                    if variances.len() != nm {
                        return Err(Error::Config(format!(
                            "omega_psi: expected {nm} entries, got {}",
                            variances.len()
                        )));
                    }
                    if let Some(v) = variances.iter().find(|v| !(**v > 0.0)) {
                        return Err(Error::Config(format!("omega_psi entries must be > 0, got {v}")));
                    }
                }
                SteadyStateVariant::NormalGamma { c0, c1 } => {
                    if !(*c0 > 0.0 && *c1 > 0.0) {
                        return Err(Error::Config(format!(
                            "c0 and c1 must be > 0, got ({c0}, {c1})"
                        )));
                    }
                }
            }
        }
    }
    if let Some(csv) = &inputs.volatility {
        csv.check()?;
    }
    let k = omega_diag.len();
    Ok(PriorSpec {
        n_m,
        n_q,
        p,
        minnesota: inputs.minnesota,
        niw: NiwPrior {
            scale,
            dof,
            omega_diag,
            mean: DMatrix::zeros(k, n),
        },
        mean: inputs.mean,
        volatility: inputs.volatility,
    })
}

/// Treatment of the unconditional mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    /// Intercept with a loose prior (`Minn`).
    Minnesota,
    /// Steady-state prior with fixed variances (`SS`).
    SteadyState,
    /// Normal-gamma steady-state hierarchy (`SSNG`).
    SteadyStateNg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilityKind {
    /// Constant error covariance (`IW`).
    Constant,
    /// Common stochastic volatility (`CSV`).
    Common,
}

/// One of the six model configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mean: MeanKind,
    pub volatility: VolatilityKind,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 6] = [
        ModelSpec::new(MeanKind::Minnesota, VolatilityKind::Constant),
        ModelSpec::new(MeanKind::SteadyState, VolatilityKind::Constant),
        ModelSpec::new(MeanKind::SteadyStateNg, VolatilityKind::Constant),
        ModelSpec::new(MeanKind::Minnesota, VolatilityKind::Common),
        ModelSpec::new(MeanKind::SteadyState, VolatilityKind::Common),
        ModelSpec::new(MeanKind::SteadyStateNg, VolatilityKind::Common),
    ];

    pub const fn new(mean: MeanKind, volatility: VolatilityKind) -> Self {
        Self { mean, volatility }
    }

    pub fn name(&self) -> &'static str {
        match (self.mean, self.volatility) {
            (MeanKind::Minnesota, VolatilityKind::Constant) => "Minn-IW",
            (MeanKind::SteadyState, VolatilityKind::Constant) => "SS-IW",
            (MeanKind::SteadyStateNg, VolatilityKind::Constant) => "SSNG-IW",
            (MeanKind::Minnesota, VolatilityKind::Common) => "Minn-CSV",
            (MeanKind::SteadyState, VolatilityKind::Common) => "SS-CSV",
            (MeanKind::SteadyStateNg, VolatilityKind::Common) => "SSNG-CSV",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("unknown model `{name}`")))
    }
}

/// Hyperparameter settings shared by all model configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSettings {
    pub p: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `s_r`; estimated from the panel when absent.
    pub scales: Option<Vec<f64>>,
    pub niw_dof: Option<f64>,
    /// Steady-state prior means, one per variable.
    pub ss_mean: Vec<f64>,
    /// Steady-state prior standard deviations (fixed variant).
    pub ss_sd: Vec<f64>,
    pub c0: f64,
    pub c1: f64,
    pub csv: CsvPrior,
    /// Prior variance factor of the intercept in the Minnesota model.
    pub intercept_variance: f64,
}

impl PriorSettings {
    /// Defaults for a panel with the given steady-state prior moments.
    pub fn new(p: usize, ss_mean: Vec<f64>, ss_sd: Vec<f64>) -> Self {
        Self {
            p,
            lambda1: 0.2,
            lambda2: 1.0,
            scales: None,
            niw_dof: None,
            ss_mean,
            ss_sd,
            c0: 0.01,
            c1: 0.01,
            csv: CsvPrior::default(),
            intercept_variance: 1e6,
        }
    }
}

/// Validated prior for `model` on `panel`.
pub fn model_prior(model: ModelSpec, panel: &MixedPanel, settings: &PriorSettings) -> Result<PriorSpec> {
    let scales = match &settings.scales {
        Some(s) => s.clone(),
        None => residual_scales(panel),
    };
    let mean = match model.mean {
        MeanKind::Minnesota => MeanModel::Intercept {
            intercept_variance: settings.intercept_variance,
        },
        MeanKind::SteadyState => {
            if settings.ss_sd.len() != settings.ss_mean.len() {
                return Err(Error::Config(format!(
                    "ss_sd has {} entries, ss_mean {}",
                    settings.ss_sd.len(),
                    settings.ss_mean.len()
                )));
            }
            MeanModel::SteadyState(SteadyStatePrior::fixed(settings.ss_mean.clone(), &settings.ss_sd))
        }
        MeanKind::SteadyStateNg => MeanModel::SteadyState(SteadyStatePrior {
            mean: settings.ss_mean.clone(),
            variant: SteadyStateVariant::NormalGamma {
                c0: settings.c0,
                c1: settings.c1,
            },
        }),
    };
    let inputs = PriorInputs {
        minnesota: MinnesotaSpec {
            lambda1: settings.lambda1,
            lambda2: settings.lambda2,
            scales,
        },
        niw_scale: None,
        niw_dof: settings.niw_dof,
        mean,
        volatility: match model.volatility {
            VolatilityKind::Constant => None,
            VolatilityKind::Common => Some(settings.csv),
        },
    };
    validate(inputs, panel.n_m(), panel.n_q(), settings.p)
}

/// One row of the thirteen-variable US data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Us13Entry {
    pub name: &'static str,
    pub id: &'static str,
    pub frequency: Frequency,
    /// `None` for series used in levels.
    pub growth_scale: Option<f64>,
    pub prior_mean: f64,
    pub prior_sd: f64,
    /// Publication delay in months on the forecast date.
    pub delay: u32,
}

impl Us13Entry {
    pub fn transform(&self) -> TransformSpec {
        match self.growth_scale {
            Some(s) => TransformSpec {
                kind: crate::tsdata::TransformKind::LogDiff,
                scale: s,
            },
            None => TransformSpec::none(),
        }
    }
}

const fn entry(
    name: &'static str,
    id: &'static str,
    frequency: Frequency,
    growth_scale: Option<f64>,
    prior_mean: f64,
    prior_sd: f64,
    delay: u32,
) -> Us13Entry {
    Us13Entry {
        name,
        id,
        frequency,
        growth_scale,
        prior_mean,
        prior_sd,
        delay,
    }
}

/// Transformations, steady-state prior moments and publication delays of
/// the thirteen-variable US application, monthly variables first.
pub const US13: [Us13Entry; 13] = [
    entry("Nonfarm payrolls", "PAYEMS", Frequency::Monthly, Some(1200.0), 3.0, 0.5, 0),
    entry("Hours", "CEU0500000034", Frequency::Monthly, Some(1200.0), 3.0, 0.5, 0),
    entry("Unemployment rate", "UNRATE", Frequency::Monthly, None, 6.0, 1.0, 0),
    entry("Federal funds rate", "FEDFUNDS", Frequency::Monthly, None, 5.0, 0.7, 0),
    entry("Bond spread", "T10YFF", Frequency::Monthly, None, 1.0, 1.0, 0),
    entry("Stock market index", "SP500", Frequency::Monthly, Some(1200.0), 0.0, 2.0, 0),
    entry("Personal consumption", "PCE", Frequency::Monthly, Some(1200.0), 3.0, 0.7, 1),
    entry("Industrial production", "INDPRO", Frequency::Monthly, Some(1200.0), 3.0, 0.7, 1),
    entry("Capacity utilization", "TCU", Frequency::Monthly, None, 80.0, 0.7, 1),
    entry("CPI inflation", "CPIAUCSL", Frequency::Monthly, Some(1200.0), 2.0, 0.5, 1),
    entry("Nonresidential inv.", "PNFI", Frequency::Quarterly, Some(400.0), 3.0, 1.5, 1),
    entry("Residential inv.", "PRFI", Frequency::Quarterly, Some(400.0), 3.0, 1.5, 1),
    entry("GDP growth", "GDPC1", Frequency::Quarterly, Some(400.0), 2.0, 0.5, 1),
];

/// Steady-state prior (fixed variances) of the US application.
pub fn default_us13_prior() -> SteadyStatePrior {
    let means: Vec<f64> = US13.iter().map(|e| e.prior_mean).collect();
    let sds: Vec<f64> = US13.iter().map(|e| e.prior_sd).collect();
    SteadyStatePrior::fixed(means, &sds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(scales: Vec<f64>) -> MinnesotaSpec {
        MinnesotaSpec::new(scales)
    }

    #[test]
    fn minnesota_hand_values() {
        let d = minnesota_diagonal(&spec(vec![1.0, 2.0]), 2, 2).unwrap();
        assert!((d[0] - 0.04).abs() < 1e-15); // lag 1, s = 1
        assert!((d[1] - 0.01).abs() < 1e-15); // lag 1, s = 2
        assert!((d[2] - 0.01).abs() < 1e-15); // lag 2, s = 1
        assert_eq!(d.len(), 4);
    }

    #[test]
    fn minnesota_decreasing_in_lag_and_permutation_invariant() {
        let scales = vec![0.5, 1.5, 3.0];
        let d = minnesota_diagonal(&spec(scales.clone()), 6, 3).unwrap();
        for l in 1..6 {
            for r in 0..3 {
                assert!(d[l * 3 + r] < d[(l - 1) * 3 + r]);
            }
        }
        let perm = [2usize, 0, 1];
        let permuted: Vec<f64> = perm.iter().map(|&i| scales[i]).collect();
        let dp = minnesota_diagonal(&spec(permuted), 6, 3).unwrap();
        for l in 0..6 {
            for (r, &src) in perm.iter().enumerate() {
                assert_eq!(dp[l * 3 + r], d[l * 3 + src]);
            }
        }
    }

    #[test]
    fn table_values() {
        let prior = default_us13_prior();
        let SteadyStateVariant::Fixed { variances } = &prior.variant else {
            panic!("expected fixed variant")
        };
        let at = |id: &str| US13.iter().position(|e| e.id == id).unwrap();
        let gdp = at("GDPC1");
        assert_eq!(prior.mean[gdp], 2.0);
        assert!((variances[gdp].sqrt() - 0.5).abs() < 1e-15);
        let tcu = at("TCU");
        assert_eq!(prior.mean[tcu], 80.0);
        assert!((variances[tcu].sqrt() - 0.7).abs() < 1e-15);
        let sp = at("SP500");
        assert_eq!(prior.mean[sp], 0.0);
        assert!((variances[sp].sqrt() - 2.0).abs() < 1e-15);
        assert_eq!(US13.iter().filter(|e| e.frequency == Frequency::Quarterly).count(), 3);
    }

    fn inputs(n: usize) -> PriorInputs {
        PriorInputs {
            minnesota: spec(vec![1.0; n]),
            niw_scale: None,
            niw_dof: None,
            mean: MeanModel::SteadyState(SteadyStatePrior::fixed(vec![0.0; n], &vec![1.0; n])),
            volatility: Some(CsvPrior::default()),
        }
    }

    #[test]
    fn validation_errors_name_the_field() {
        let mut bad = inputs(3);
        bad.mean = MeanModel::SteadyState(SteadyStatePrior {
            mean: vec![0.0; 3],
            variant: SteadyStateVariant::Fixed { variances: vec![1.0; 2] },
        });
        let err = validate(bad, 2, 1, 4).unwrap_err();
        assert!(err.to_string().contains("omega_psi"), "{err}");

        let mut bad = inputs(2);
        bad.niw_scale = Some(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(validate(bad, 2, 0, 4).unwrap_err().to_string().contains("niw_scale"));

        let ok = validate(inputs(3), 2, 1, 4).unwrap();
        assert_eq!(ok.niw.dof, 5.0);
        assert_eq!(ok.niw.omega_diag.len(), 12);
        assert!(validate(inputs(3), 2, 1, 3).is_err());
    }

    #[test]
    fn ar_scale_of_white_noise_like_series() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37 % 17) as f64 - 8.0) / 4.0).collect();
        let s = ar_residual_scale(&x, 4).unwrap();
        assert!(s > 0.0 && s.is_finite());
        assert!(ar_residual_scale(&x[..8], 4).is_err());
    }
}
