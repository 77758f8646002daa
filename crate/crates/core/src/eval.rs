//! Point and density forecast evaluation and the recursive real-time
//! evaluation driver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::aggregation::AggregationScheme;
use crate::error::{Error, Result};
use crate::forecast::{forecast, summarize, Horizons, PredictiveDraws};
use crate::gibbs::{run_chain, SamplerConfig};
use crate::priors::{model_prior, MeanKind, ModelSpec, PriorSettings, VolatilityKind};
use crate::stats::RngStream;
use crate::tsdata::{truncate_to_vintage, Frequency, MixedPanel, Month, PublicationPattern};

/// `n_s ln 2π + ln|V| + (y − ȳ)' V⁻¹ (y − ȳ)`. Lower is better.
pub fn lpds(y: &DVector<f64>, ybar: &DVector<f64>, v: &DMatrix<f64>) -> Result<f64> {
    let k = y.len();
    if ybar.len() != k || v.shape() != (k, k) {
        return Err(Error::Validation(format!(
            "LPDS inputs disagree: y has {k} entries, mean {}, covariance {:?}",
            ybar.len(),
            v.shape()
        )));
    }
    let chol = v.clone().cholesky().ok_or_else(|| {
        let eig = v.clone().symmetric_eigenvalues();
        Error::Numeric(format!(
            "predictive covariance is singular (condition number {:.3e})",
            eig.max().abs() / eig.min().abs()
        ))
    })?;
    let e = y - ybar;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let quad = e.dot(&chol.solve(&e));
    Ok(k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
}

/// Which scale the log score is reported on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpdsForm {
    /// `n_s ln 2π + ln|V| + quadratic form`.
    #[default]
    Printed,
    /// The Gaussian log density, `−½` times the printed form.
    Textbook,
}

impl LpdsForm {
    pub fn score(self, y: &DVector<f64>, ybar: &DVector<f64>, v: &DMatrix<f64>) -> Result<f64> {
        let s = lpds(y, ybar, v)?;
        Ok(match self {
            LpdsForm::Printed => s,
            LpdsForm::Textbook => -0.5 * s,
        })
    }
}

pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Validation("RMSE over an empty window".into()));
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

/// RMSE of `model` over RMSE of `benchmark` on the same window.
pub fn relative_rmse(model: &[f64], benchmark: &[f64]) -> Result<f64> {
    if model.len() != benchmark.len() {
        return Err(Error::Validation(format!(
            "windows differ: {} model errors, {} benchmark errors",
            model.len(),
            benchmark.len()
        )));
    }
    let b = rmse(benchmark)?;
    if b == 0.0 {
        return Err(Error::Domain("benchmark RMSE is zero; ratio undefined".into()));
    }
    Ok(rmse(model)? / b)
}

/// Small-sample correction `√((T + 1 − 2h + h(h − 1)/T) / T)`.
pub fn harvey_factor(t_e: usize, h: usize) -> f64 {
    let (t, h) = (t_e as f64, h as f64);
    ((t + 1.0 - 2.0 * h + h * (h - 1.0) / t) / t).sqrt()
}

/// Outcome of a Diebold–Mariano test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    /// Corrected statistic; `None` when the loss differential has no variance.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub reject_10: bool,
    pub reject_01: bool,
}

impl DmResult {
    fn undefined() -> Self {
        Self {
            statistic: None,
            p_value: None,
            reject_10: false,
            reject_01: false,
        }
    }

    pub fn stars(&self) -> &'static str {
        if self.reject_01 {
            "**"
        } else if self.reject_10 {
            "*"
        } else {
            ""
        }
    }
}

/// Harvey-corrected Diebold–Mariano test on the loss differential `d` at
/// horizon `h ≥ 1`. The long-run variance uses a Bartlett kernel with
/// `h − 1` lags; the reference is Student-t with `T − 1` degrees of freedom.
pub fn dm_test(d: &[f64], h: usize) -> Result<DmResult> {
    let t_e = d.len();
    let h = h.max(1);
    if t_e <= h {
        return Err(Error::Validation(format!(
            "DM test needs more than {h} observations, got {t_e}"
        )));
    }
    let n = t_e as f64;
    let mean = d.iter().sum::<f64>() / n;
    let gamma = |k: usize| -> f64 {
        (k..t_e).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / n
    };
    let mut lrv = gamma(0);
    for k in 1..h {
        lrv += 2.0 * (1.0 - k as f64 / h as f64) * gamma(k);
    }
    let scale = d.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if !(lrv > 1e-24 * scale * scale) {
        return Ok(DmResult::undefined());
    }
    let stat = mean / (lrv / n).sqrt() * harvey_factor(t_e, h);
    let dist = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::Numeric(format!("Student-t reference: {e}")))?;
    let p = 2.0 * (1.0 - dist.cdf(stat.abs()));
    Ok(DmResult {
        statistic: Some(stat),
        p_value: Some(p),
        reject_10: p < 0.10,
        reject_01: p < 0.01,
    })
}

/// Which release of the data scores the forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationVintage {
    /// The most recent vintage.
    #[default]
    Latest,
    /// The `k`-th vintage in which the value appears (1 = first release).
    Release(usize),
}

/// Data vintages keyed by the forecast date on which they were current.
#[derive(Debug, Clone)]
pub struct VintageSet {
    pub vintages: BTreeMap<Month, MixedPanel>,
    pub latest: MixedPanel,
}

impl VintageSet {
    /// Vintages obtained by truncating one final panel with a publication
    /// pattern, as happens when data are never revised.
    pub fn from_truncation(
        latest: &MixedPanel,
        pattern: &PublicationPattern,
        dates: &[Month],
    ) -> Result<Self> {
        let vintages = dates
            .iter()
            .map(|&d| Ok((d, truncate_to_vintage(latest, d, pattern)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            vintages,
            latest: latest.clone(),
        })
    }

    pub fn at(&self, origin: Month) -> Result<&MixedPanel> {
        self.vintages
            .get(&origin)
            .ok_or_else(|| Error::Validation(format!("no vintage for {origin}")))
    }

    /// Outcome for variable `id` in `month` under the chosen vintage rule.
    pub fn realized(&self, id: &str, month: Month, rule: EvaluationVintage) -> Option<f64> {
        let lookup = |p: &MixedPanel| {
            let j = p.position(id)?;
            p.value(p.index_of(month)?, j)
        };
        match rule {
            EvaluationVintage::Latest => lookup(&self.latest),
            EvaluationVintage::Release(k) => self
                .vintages
                .values()
                .filter_map(lookup)
                .chain(lookup(&self.latest))
                .nth(k.max(1) - 1),
        }
    }
}

/// Estimation setup evaluated at each origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalModelKind {
    /// Mixed-frequency model on the ragged-edge monthly panel.
    Mixed { spec: ModelSpec },
    /// Steady-state VAR with constant volatility on all variables aggregated
    /// to the quarterly frequency.
    QuarterlyBenchmark,
    /// Steady-state VAR with constant volatility on the monthly variables.
    MonthlyBenchmark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalModel {
    pub name: String,
    pub kind: EvalModelKind,
    pub p: usize,
}

impl EvalModel {
    pub fn mixed(spec: ModelSpec, p: usize) -> Self {
        Self {
            name: spec.name().to_string(),
            kind: EvalModelKind::Mixed { spec },
            p,
        }
    }

    pub fn quarterly_benchmark(p: usize) -> Self {
        Self {
            name: format!("VAR({p})-Q"),
            kind: EvalModelKind::QuarterlyBenchmark,
            p,
        }
    }

    pub fn monthly_benchmark(p: usize) -> Self {
        Self {
            name: format!("VAR({p})-M"),
            kind: EvalModelKind::MonthlyBenchmark,
            p,
        }
    }

    /// The six mixed-frequency models followed by both benchmarks.
    pub fn standard_set(p: usize, quarterly_p: usize, monthly_p: usize) -> Vec<Self> {
        ModelSpec::ALL
            .iter()
            .map(|&s| Self::mixed(s, p))
            .chain([Self::quarterly_benchmark(quarterly_p), Self::monthly_benchmark(monthly_p)])
            .collect()
    }

    fn scores_quarterly(&self) -> bool {
        !matches!(self.kind, EvalModelKind::MonthlyBenchmark)
    }

    fn scores_monthly(&self) -> bool {
        !matches!(self.kind, EvalModelKind::QuarterlyBenchmark)
    }
}

/// Settings of a recursive evaluation.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub horizons: Horizons,
    pub sampler: SamplerConfig,
    /// Prior settings for the full panel; benchmarks use the matching subset.
    pub prior: PriorSettings,
    pub vintage: EvaluationVintage,
    pub lpds_form: LpdsForm,
    /// Name of the model quarterly scores are compared with.
    pub quarterly_benchmark: String,
    pub monthly_benchmark: String,
}

/// Joint set of one frequency, or a single variable.
pub const QUARTERLY_SET: &str = "quarterly";
pub const MONTHLY_SET: &str = "monthly";

/// Score of one model for one set, horizon and origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub model: String,
    pub set: String,
    pub frequency: Frequency,
    pub horizon: usize,
    pub origin: Month,
    pub lpds: Option<f64>,
    /// Forecast error of the predictive mean (single variables only).
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationFailure {
    pub model: String,
    pub origin: Month,
    pub message: String,
}

/// One aggregated cell of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub model: String,
    pub set: String,
    pub horizon: usize,
    pub benchmark: String,
    pub origins: usize,
    pub lpds: Option<f64>,
    pub rmse: Option<f64>,
    /// Mean LPDS minus the benchmark's, on common origins.
    pub rel_lpds: Option<f64>,
    /// RMSE over the benchmark's RMSE, on common origins.
    pub rel_rmse: Option<f64>,
    pub dm_lpds: Option<DmResult>,
    pub dm_rmse: Option<DmResult>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub models: Vec<String>,
    pub origins: Vec<Month>,
    pub records: Vec<ScoreRecord>,
    pub failures: Vec<EstimationFailure>,
    pub cells: Vec<EvalCell>,
}

/// Balanced sub-panel: periods from the first to the last one at which
/// every variable is observed.
pub fn balanced(panel: &MixedPanel) -> Result<MixedPanel> {
    let full = |t: usize| panel.row(t).iter().all(Option::is_some);
    let first = (0..panel.len()).find(|&t| full(t));
    let last = (0..panel.len()).rev().find(|&t| full(t));
    match (first, last) {
        (Some(a), Some(b)) => Ok(panel.slice(a, b + 1)),
        _ => Err(Error::Validation("no fully observed period".into())),
    }
}

/// Estimation panel and prior settings for `model` given a vintage.
pub fn estimation_setup(
    model: &EvalModel,
    vintage: &MixedPanel,
    prior: &PriorSettings,
) -> Result<(MixedPanel, ModelSpec, PriorSettings)> {
    let mut settings = prior.clone();
    settings.p = model.p;
    let ss = ModelSpec::new(MeanKind::SteadyState, VolatilityKind::Constant);
    match model.kind {
        EvalModelKind::Mixed { spec } => Ok((vintage.trim_leading()?, spec, settings)),
        EvalModelKind::QuarterlyBenchmark => {
            let q = balanced(&vintage.to_quarterly_clock(&AggregationScheme::default())?)?;
            Ok((q, ss, settings))
        }
        EvalModelKind::MonthlyBenchmark => {
            let m = balanced(&vintage.monthly_only())?;
            let k = m.n();
            settings.ss_mean.truncate(k);
            settings.ss_sd.truncate(k);
            if let Some(s) = settings.scales.as_mut() {
                s.truncate(k);
            }
            Ok((m, ss, settings))
        }
    }
}

/// Estimates `model` on the vintage of `origin` and simulates its
/// predictive distribution.
pub fn estimate_and_forecast(
    model: &EvalModel,
    vintage: &MixedPanel,
    origin: Month,
    settings: &EvalSettings,
    stream: RngStream,
) -> Result<PredictiveDraws> {
    let (panel, spec, prior_settings) = estimation_setup(model, vintage, &settings.prior)?;
    let prior = model_prior(spec, &panel, &prior_settings)?;
    let mut sampler = settings.sampler.clone();
    sampler.seed = stream.seed;
    let chain = run_chain(&panel, &prior, &sampler, stream.child(0))?;
    forecast(&chain.states, &panel, origin, settings.horizons, stream.child(1))
}

/// Per-variable first horizon: monthly variables already published for
/// the month before the origin start at `h = 1`.
fn first_horizons(vintage: &MixedPanel, origin: Month) -> Vec<usize> {
    let prev = origin.add_months(-1);
    vintage
        .variables()
        .iter()
        .enumerate()
        .map(|(j, v)| match v.frequency {
            Frequency::Quarterly => 0,
            Frequency::Monthly => usize::from(
                vintage.index_of(prev).and_then(|t| vintage.value(t, j)).is_some(),
            ),
        })
        .collect()
}

/// Scores one model's predictive draws at one origin.
pub fn score_draws(
    model: &EvalModel,
    draws: &PredictiveDraws,
    vintages: &VintageSet,
    origin: Month,
    settings: &EvalSettings,
) -> Result<Vec<ScoreRecord>> {
    let vintage = vintages.at(origin)?;
    let start = first_horizons(vintage, origin);
    let mut out = Vec::new();
    let mut push_set = |set: &str, freq: Frequency, vars: Vec<usize>, h: usize, univariate: bool| -> Result<()> {
        if vars.is_empty() {
            return Ok(());
        }
        let y: Option<Vec<f64>> = vars
            .iter()
            .map(|&j| vintages.realized(&draws.variables[j].id, draws.target_month(j, h), settings.vintage))
            .collect();
        let Some(y) = y else { return Ok(()) };
        let y = DVector::from_vec(y);
        let summary = summarize(&draws.samples(&vars, h)?)?;
        let lpds = match settings.lpds_form.score(&y, &summary.mean, &summary.cov) {
            Ok(v) if !summary.singular => Some(v),
            _ => {
                log::warn!("{} at {origin}: singular predictive covariance for {set}, h = {h}", model.name);
                None
            }
        };
        out.push(ScoreRecord {
            model: model.name.clone(),
            set: set.to_string(),
            frequency: freq,
            horizon: h,
            origin,
            lpds,
            error: univariate.then(|| y[0] - summary.mean[0]),
        });
        Ok(())
    };
    let of_freq = |f: Frequency| -> Vec<usize> {
        (0..draws.n()).filter(|&j| draws.variables[j].frequency == f).collect()
    };
    let quarterly = of_freq(Frequency::Quarterly);
    let monthly = of_freq(Frequency::Monthly);
    if model.scores_quarterly() {
        for h in 0..=settings.horizons.quarterly {
            push_set(QUARTERLY_SET, Frequency::Quarterly, quarterly.clone(), h, false)?;
            for &j in &quarterly {
                push_set(&draws.variables[j].id, Frequency::Quarterly, vec![j], h, true)?;
            }
        }
    }
    if model.scores_monthly() && draws.clock == Frequency::Monthly {
        for h in 0..=settings.horizons.monthly {
            if h >= 1 {
                push_set(MONTHLY_SET, Frequency::Monthly, monthly.clone(), h, false)?;
            }
            for &j in &monthly {
                let id = &draws.variables[j].id;
                let jv = vintage.position(id).unwrap_or(j);
                if h >= start[jv] {
                    push_set(id, Frequency::Monthly, vec![j], h, true)?;
                }
            }
        }
    }
    Ok(out)
}

/// Estimates every model at every origin, scores the forecasts and
/// aggregates the scores. Estimation failures are logged and skipped.
pub fn recursive_evaluate(
    vintages: &VintageSet,
    origins: &[Month],
    models: &[EvalModel],
    settings: &EvalSettings,
) -> Result<EvalReport> {
    for &o in origins {
        vintages.at(o)?;
    }
    let jobs: Vec<(usize, usize)> = (0..origins.len())
        .flat_map(|o| (0..models.len()).map(move |m| (o, m)))
        .collect();
    let results: Vec<(usize, usize, Result<Vec<ScoreRecord>>)> = jobs
        .par_iter()
        .map(|&(o, m)| {
            let origin = origins[o];
            let stream = RngStream::new(settings.sampler.seed, (o * models.len() + m) as u64);
            let res = vintages.at(origin).and_then(|v| {
                let draws = estimate_and_forecast(&models[m], v, origin, settings, stream)?;
                score_draws(&models[m], &draws, vintages, origin, settings)
            });
            (o, m, res)
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (o, m, res) in results {
        match res {
            Ok(r) => records.extend(r),
            Err(e) => {
                log::warn!("{} at {}: {e}", models[m].name, origins[o]);
                failures.push(EstimationFailure {
                    model: models[m].name.clone(),
                    origin: origins[o],
                    message: e.to_string(),
                });
            }
        }
    }
    let names: Vec<String> = models.iter().map(|m| m.name.clone()).collect();
    Ok(build_report(
        names,
        origins.to_vec(),
        records,
        failures,
        &settings.quarterly_benchmark,
        &settings.monthly_benchmark,
    ))
}

/// Comparison of two models' scores on the origins both have.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub origins: usize,
    pub rel_lpds: Option<f64>,
    pub rel_rmse: Option<f64>,
    pub dm_lpds: Option<DmResult>,
    pub dm_rmse: Option<DmResult>,
}

fn cell_records<'a>(
    records: &'a [ScoreRecord],
    model: &str,
    set: &str,
    h: usize,
) -> BTreeMap<Month, &'a ScoreRecord> {
    records
        .iter()
        .filter(|r| r.model == model && r.set == set && r.horizon == h)
        .map(|r| (r.origin, r))
        .collect()
}

/// Relative metrics of `model` against `benchmark` for one set and horizon.
pub fn compare(records: &[ScoreRecord], model: &str, benchmark: &str, set: &str, h: usize) -> Comparison {
    let a = cell_records(records, model, set, h);
    let b = cell_records(records, benchmark, set, h);
    let common: Vec<(&ScoreRecord, &ScoreRecord)> =
        a.iter().filter_map(|(o, ra)| b.get(o).map(|rb| (*ra, *rb))).collect();
    let lp: Vec<(f64, f64)> = common
        .iter()
        .filter_map(|(x, y)| Some((x.lpds?, y.lpds?)))
        .collect();
    let er: Vec<(f64, f64)> = common
        .iter()
        .filter_map(|(x, y)| Some((x.error?, y.error?)))
        .collect();
    let dm_h = h.max(1);
    let rel_lpds = (!lp.is_empty())
        .then(|| lp.iter().map(|(x, y)| x - y).sum::<f64>() / lp.len() as f64);
    let dm_lpds = dm_test(&lp.iter().map(|(x, y)| x - y).collect::<Vec<_>>(), dm_h).ok();
    let (ea, eb): (Vec<f64>, Vec<f64>) = er.iter().copied().unzip();
    let rel_rmse = relative_rmse(&ea, &eb).ok();
    let dm_rmse = dm_test(&er.iter().map(|(x, y)| x * x - y * y).collect::<Vec<_>>(), dm_h).ok();
    Comparison {
        origins: common.len(),
        rel_lpds,
        rel_rmse,
        dm_lpds: if lp.is_empty() { None } else { dm_lpds },
        dm_rmse: if er.is_empty() { None } else { dm_rmse },
    }
}

/// Aggregates raw score records into report cells.
pub fn build_report(
    models: Vec<String>,
    origins: Vec<Month>,
    records: Vec<ScoreRecord>,
    failures: Vec<EstimationFailure>,
    quarterly_benchmark: &str,
    monthly_benchmark: &str,
) -> EvalReport {
    let keys: BTreeSet<(String, String, usize, Frequency)> = records
        .iter()
        .map(|r| (r.model.clone(), r.set.clone(), r.horizon, r.frequency))
        .collect();
    let mut cells = Vec::new();
    for model in &models {
        for (m, set, h, freq) in keys.iter().filter(|k| &k.0 == model) {
            let own = cell_records(&records, m, set, *h);
            let lp: Vec<f64> = own.values().filter_map(|r| r.lpds).collect();
            let er: Vec<f64> = own.values().filter_map(|r| r.error).collect();
            let benchmark = match freq {
                Frequency::Quarterly => quarterly_benchmark,
                Frequency::Monthly => monthly_benchmark,
            };
            let cmp = compare(&records, m, benchmark, set, *h);
            cells.push(EvalCell {
                model: m.clone(),
                set: set.clone(),
                horizon: *h,
                benchmark: benchmark.to_string(),
                origins: own.len(),
                lpds: (!lp.is_empty()).then(|| lp.iter().sum::<f64>() / lp.len() as f64),
                rmse: rmse(&er).ok(),
                rel_lpds: cmp.rel_lpds,
                rel_rmse: cmp.rel_rmse,
                dm_lpds: cmp.dm_lpds,
                dm_rmse: cmp.dm_rmse,
            });
        }
    }
    EvalReport {
        models,
        origins,
        records,
        failures,
        cells,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl EvalReport {
    pub fn cell(&self, model: &str, set: &str, h: usize) -> Option<&EvalCell> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.set == set && c.horizon == h)
    }

    /// Sets in the order joint quarterly, joint monthly, then variables.
    pub fn sets(&self) -> Vec<String> {
        let mut sets: Vec<String> = Vec::new();
        for c in &self.cells {
            if !sets.contains(&c.set) {
                sets.push(c.set.clone());
            }
        }
        let rank = |s: &str| match s {
            QUARTERLY_SET => 0,
            MONTHLY_SET => 1,
            _ => 2,
        };
        sets.sort_by_key(|s| rank(s));
        sets
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "model", "set", "horizon", "benchmark", "origins", "lpds", "rmse", "rel_lpds",
            "rel_rmse", "dm_lpds_stat", "dm_lpds_p", "dm_rmse_stat", "dm_rmse_p",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.model.clone(),
                c.set.clone(),
                c.horizon.to_string(),
                c.benchmark.clone(),
                c.origins.to_string(),
                opt(c.lpds),
                opt(c.rmse),
                opt(c.rel_lpds),
                opt(c.rel_rmse),
                opt(c.dm_lpds.and_then(|d| d.statistic)),
                opt(c.dm_lpds.and_then(|d| d.p_value)),
                opt(c.dm_rmse.and_then(|d| d.statistic)),
                opt(c.dm_rmse.and_then(|d| d.p_value)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Text tables, one per set: model rows, horizon columns, relative LPDS
    /// then relative RMSE, with `*` (10%) and `**` (1%) marking DM
    /// rejections. Benchmarks are omitted from the rows.
    pub fn render_tables(&self) -> String {
        let mut out = String::new();
        for set in self.sets() {
            let in_set: Vec<&EvalCell> = self.cells.iter().filter(|c| c.set == set).collect();
            let horizons: BTreeSet<usize> = in_set.iter().map(|c| c.horizon).collect();
            let benchmarks: BTreeSet<&str> = in_set.iter().map(|c| c.benchmark.as_str()).collect();
            let rows: Vec<&String> = self
                .models
                .iter()
                .filter(|m| !benchmarks.contains(m.as_str()) && in_set.iter().any(|c| &c.model == *m))
                .collect();
            let bench = benchmarks.iter().copied().collect::<Vec<_>>().join(", ");
            let _ = writeln!(out, "{set}: forecast evaluation (benchmark {bench})");
            let _ = write!(out, "{:<12}", "Model");
            for h in &horizons {
                let _ = write!(out, "{:>11}", format!("h = {h}"));
            }
            out.push('\n');
            for (title, rmse_block) in [("Relative LPDS (model - benchmark)", false), ("Relative RMSE (model / benchmark)", true)] {
                if rmse_block && in_set.iter().all(|c| c.rel_rmse.is_none()) {
                    continue;
                }
                let _ = writeln!(out, "{title}");
                for m in &rows {
                    let _ = write!(out, "  {:<10}", m);
                    for h in &horizons {
                        let cell = in_set.iter().find(|c| &c.model == *m && c.horizon == *h);
                        let text = cell
                            .and_then(|c| {
                                let (v, dm) = if rmse_block {
                                    (c.rel_rmse, c.dm_rmse)
                                } else {
                                    (c.rel_lpds, c.dm_lpds)
                                };
                                v.map(|v| format!("{v:.2}{}", dm.map(|d| d.stars()).unwrap_or("")))
                            })
                            .unwrap_or_else(|| "-".into());
                        let _ = write!(out, "{text:>11}");
                    }
                    out.push('\n');
                }
            }
            out.push('\n');
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "{} estimation failures skipped", self.failures.len());
        }
        out
    }
}
