//! TOML run configuration. Every section is optional; subcommands check
//! for the sections they need.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mfbvar::dgp::DgpSpec;
use mfbvar::eval::{EvaluationVintage, LpdsForm};
use mfbvar::gibbs::SamplerConfig;
use mfbvar::priors::{CsvPrior, PriorSettings};
use mfbvar::tsdata::{Frequency, Month, PublicationPattern, TransformKind};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub data: Option<DataConfig>,
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub forecast: ForecastConfig,
    pub evaluate: Option<EvaluateConfig>,
}

/// Either a wide panel file or one `[[data.series]]` entry per series.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Wide monthly CSV (`date,<id>,…`).
    pub panel: Option<PathBuf>,
    /// Columns of `panel` holding quarterly values.
    #[serde(default)]
    pub quarterly: Vec<String>,
    /// Publication delay in months per series.
    #[serde(default)]
    pub delays: BTreeMap<String, u32>,
    #[serde(default)]
    pub series: Vec<SeriesConfig>,
}

/// A two-column `date,value` file; dates `YYYY-MM` or `YYYYQn`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub id: String,
    pub path: PathBuf,
    /// Inferred from the date format when absent.
    pub frequency: Option<Frequency>,
    #[serde(default = "no_transform")]
    pub transform: TransformKind,
    #[serde(default = "unit")]
    pub scale: f64,
    #[serde(default)]
    pub delay_months: u32,
}

fn no_transform() -> TransformKind {
    TransformKind::None
}
fn unit() -> f64 {
    1.0
}

impl DataConfig {
    /// Delays from `delays`, overridden by per-series `delay_months`.
    pub fn pattern(&self) -> PublicationPattern {
        let mut d = self.delays.clone();
        for s in &self.series {
            d.insert(s.id.clone(), s.delay_months);
        }
        pattern(&d)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Months to simulate.
    pub t: usize,
    /// First month, `YYYY-MM`.
    pub start: String,
    /// Simulate even when the coefficient matrix is explosive.
    #[serde(default)]
    pub allow_explosive: bool,
    /// Publication delays used for the ragged-edge panel.
    #[serde(default)]
    pub delays: BTreeMap<String, u32>,
    pub dgp: DgpSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorConfig {
    /// One of Minn-IW, SS-IW, SSNG-IW, Minn-CSV, SS-CSV, SSNG-CSV.
    pub model: String,
    pub p: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub scales: Option<Vec<f64>>,
    pub niw_dof: Option<f64>,
    pub ss_mean: Option<Vec<f64>>,
    pub ss_sd: Option<Vec<f64>>,
    pub c0: f64,
    pub c1: f64,
    pub csv: CsvPrior,
    pub intercept_variance: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        let s = PriorSettings::new(12, Vec::new(), Vec::new());
        Self {
            model: "SS-CSV".into(),
            p: s.p,
            lambda1: s.lambda1,
            lambda2: s.lambda2,
            scales: None,
            niw_dof: None,
            ss_mean: None,
            ss_sd: None,
            c0: s.c0,
            c1: s.c1,
            csv: s.csv,
            intercept_variance: s.intercept_variance,
        }
    }
}

impl PriorConfig {
    pub fn settings(&self) -> PriorSettings {
        PriorSettings {
            p: self.p,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            scales: self.scales.clone(),
            niw_dof: self.niw_dof,
            ss_mean: self.ss_mean.clone().unwrap_or_default(),
            ss_sd: self.ss_sd.clone().unwrap_or_default(),
            c0: self.c0,
            c1: self.c1,
            csv: self.csv,
            intercept_variance: self.intercept_variance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub draws: usize,
    pub burnin: usize,
    pub batch: usize,
    pub fixed_sigma2: Option<f64>,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerConfig::default();
        Self {
            draws: s.draws,
            burnin: s.burnin,
            batch: s.batch,
            fixed_sigma2: None,
        }
    }
}

impl SamplerSection {
    pub fn config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            draws: self.draws,
            burnin: self.burnin,
            batch: self.batch,
            seed,
            fixed_sigma2: self.fixed_sigma2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastConfig {
    /// Last horizon for monthly variables, in months.
    pub monthly_horizon: usize,
    /// Last horizon for quarterly variables, in quarters.
    pub quarterly_horizon: usize,
    /// Forecast date; defaults to the month after the panel ends.
    pub origin: Option<String>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            monthly_horizon: 8,
            quarterly_horizon: 8,
            origin: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// First and last forecast dates, `YYYY-MM`.
    pub start: String,
    pub end: String,
    /// Months between consecutive origins.
    #[serde(default = "one")]
    pub step: usize,
    /// Models to estimate; the six mixed-frequency models and both
    /// benchmarks when absent. Benchmarks are named `VAR-Q` and `VAR-M`.
    pub models: Option<Vec<String>>,
    #[serde(default = "four")]
    pub quarterly_lags: usize,
    #[serde(default = "twelve")]
    pub monthly_lags: usize,
    /// Overrides the model quarterly scores are compared with.
    pub quarterly_benchmark: Option<String>,
    pub monthly_benchmark: Option<String>,
    /// `0` scores against the latest vintage, `k ≥ 1` against the k-th release.
    #[serde(default)]
    pub release: usize,
    #[serde(default)]
    pub textbook_lpds: bool,
}

fn one() -> usize {
    1
}
fn four() -> usize {
    4
}
fn twelve() -> usize {
    12
}

impl EvaluateConfig {
    pub fn origins(&self) -> Result<Vec<Month>> {
        let start: Month = self.start.parse().context("evaluate.start")?;
        let end: Month = self.end.parse().context("evaluate.end")?;
        if end < start || self.step == 0 {
            bail!("evaluate: need start <= end and step >= 1");
        }
        let mut out = Vec::new();
        let mut m = start;
        while m <= end {
            out.push(m);
            m = m.add_months(self.step as i64);
        }
        Ok(out)
    }

    pub fn vintage(&self) -> EvaluationVintage {
        match self.release {
            0 => EvaluationVintage::Latest,
            k => EvaluationVintage::Release(k),
        }
    }

    pub fn lpds_form(&self) -> LpdsForm {
        if self.textbook_lpds {
            LpdsForm::Textbook
        } else {
            LpdsForm::Printed
        }
    }
}

pub fn pattern(delays: &BTreeMap<String, u32>) -> PublicationPattern {
    delays
        .iter()
        .fold(PublicationPattern::new(), |p, (id, d)| p.with_delay(id.clone(), *d))
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = cfg.data.as_mut() {
            if let Some(p) = d.panel.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
            for s in d.series.iter_mut().filter(|s| s.path.is_relative()) {
                s.path = base.join(&s.path);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_empirical_setup() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg.prior.p, 12);
        assert_eq!(cfg.prior.lambda1, 0.2);
        assert_eq!(cfg.prior.lambda2, 1.0);
        assert_eq!(cfg.sampler.draws, 15000);
        assert_eq!(cfg.sampler.burnin, 5000);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[prior]\nlamda1 = 0.1\n").is_err());
    }

    #[test]
    fn series_manifest_parses() {
        let cfg: RunConfig = toml::from_str(
            "[data]\ndelays = { gdp = 2 }\n[[data.series]]\nid = \"gdp\"\npath = \"gdp.csv\"\ntransform = \"log_diff\"\nscale = 400\ndelay_months = 1\n",
        )
        .unwrap();
        let d = cfg.data.unwrap();
        assert_eq!(d.series[0].transform, TransformKind::LogDiff);
        assert_eq!(d.pattern().delay("gdp"), 1);
    }

    #[test]
    fn origins_step_monthly() {
        let e: EvaluateConfig = toml::from_str("start = \"2005-11\"\nend = \"2006-02\"\n").unwrap();
        let o = e.origins().unwrap();
        assert_eq!(o.len(), 4);
        assert_eq!(o[3].to_string(), "2006-02");
    }
}
