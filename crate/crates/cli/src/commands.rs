use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use mfbvar::aggregation::triangular_weights;
use mfbvar::dgp::simulate_dgp;
use mfbvar::eval::{recursive_evaluate, EvalModel, EvalSettings, VintageSet};
use mfbvar::forecast::{forecast, quantile, Horizons};
use mfbvar::gibbs::{read_draws, run_chain, write_draws, ChainDiagnostics, ChainState};
use mfbvar::priors::{model_prior, ModelSpec, PriorSettings};
use mfbvar::stats::RngStream;
use mfbvar::tsdata::{
    apply_transform, assemble_panel, load_series_csv, read_panel_csv, truncate_to_vintage, write_panel_csv,
    CsvSchema, Frequency, MixedPanel, Month, TransformKind, TransformSpec,
};

use crate::config::{pattern, DataConfig, RunConfig};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(dir.join(name), &text)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

fn load_panel(data: &DataConfig) -> Result<MixedPanel> {
    match (&data.panel, data.series.is_empty()) {
        (Some(path), true) => {
            let f = File::open(path).with_context(|| format!("opening panel {}", path.display()))?;
            Ok(read_panel_csv(BufReader::new(f), &data.quarterly)?)
        }
        (None, false) => {
            let (mut monthly, mut quarterly) = (Vec::new(), Vec::new());
            for s in &data.series {
                let mut schema = CsvSchema::new(&s.id);
                schema.frequency = s.frequency;
                let raw = load_series_csv(&s.path, &schema)
                    .with_context(|| format!("loading series {} from {}", s.id, s.path.display()))?;
                let spec = match s.transform {
                    TransformKind::None => TransformSpec { kind: TransformKind::None, scale: s.scale },
                    TransformKind::LogDiff => TransformSpec::log_diff(s.scale)?,
                };
                let series = apply_transform(&raw, &spec)?;
                match series.frequency {
                    Frequency::Monthly => monthly.push(series),
                    Frequency::Quarterly => quarterly.push(series),
                }
            }
            Ok(assemble_panel(&monthly, &quarterly)?)
        }
        _ => bail!("[data] needs exactly one of `panel` or `[[data.series]]`"),
    }
}

fn data_source(data: &DataConfig) -> String {
    match &data.panel {
        Some(p) => p.display().to_string(),
        None => data.series.iter().map(|s| s.path.display().to_string()).collect::<Vec<_>>().join(";"),
    }
}

fn data_section(cfg: &RunConfig) -> Result<&DataConfig> {
    cfg.data.as_ref().ok_or_else(|| anyhow!("config has no [data] section"))
}

#[derive(Serialize)]
struct SimulationRecord<'a> {
    seed: u64,
    t: usize,
    start: &'a str,
    spectral_radius: f64,
    dgp: &'a mfbvar::dgp::DgpSpec,
}

/// Writes `panel_full.csv`, `panel.csv` (ragged edge), `truth.csv` and
/// `params.json`.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let sim = cfg.simulate.as_ref().ok_or_else(|| anyhow!("config has no [simulate] section"))?;
    sim.dgp.validate()?;
    let radius = sim.dgp.spectral_radius()?;
    if radius >= 1.0 && !sim.allow_explosive {
        bail!("requested DGP is explosive (spectral radius {radius:.4}); set allow_explosive = true to simulate anyway");
    }
    let start: Month = sim.start.parse().context("simulate.start")?;
    let scheme = triangular_weights();
    let mut rng = RngStream::new(cfg.seed, 0).rng();
    let res = simulate_dgp(&sim.dgp, sim.t, start, &scheme, &mut rng)?;
    fs::create_dir_all(out)?;
    write_panel_csv(&res.panel, create(out, "panel_full.csv")?)?;
    let ragged = truncate_to_vintage(&res.panel, res.panel.end().add_months(1), &pattern(&sim.delays))?;
    write_panel_csv(&ragged, create(out, "panel.csv")?)?;
    let mut w = csv::Writer::from_writer(create(out, "truth.csv")?);
    let mut header = vec!["date".to_string()];
    header.extend(sim.dgp.ids.iter().cloned());
    header.push("h".into());
    w.write_record(&header)?;
    for t in 0..sim.t {
        let mut rec = vec![res.panel.month_at(t).to_string()];
        rec.extend(res.truth.row(t).iter().map(|v| v.to_string()));
        rec.push(res.h[t].to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    write_json(
        out,
        "params.json",
        &SimulationRecord {
            seed: cfg.seed,
            t: sim.t,
            start: &sim.start,
            spectral_radius: radius,
            dgp: &sim.dgp,
        },
    )?;
    log::info!("simulated {} months into {}", sim.t, out.display());
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    model: &'a str,
    seed: u64,
    panel: String,
    periods: usize,
    variables: Vec<String>,
    prior: &'a PriorSettings,
    sampler: &'a mfbvar::gibbs::SamplerConfig,
    kept_draws: usize,
    diagnostics: &'a ChainDiagnostics,
    draws_sha256: String,
}

/// Runs the sampler and writes `draws.jsonl`, `steady_state.csv`,
/// `steady_state_draws.csv`, `volatility.csv` (CSV models) and
/// `manifest.json`. Returns the manifest hash.
pub fn estimate(cfg: &RunConfig, out: &Path) -> Result<String> {
    let data = data_section(cfg)?;
    let panel = load_panel(data)?.trim_leading()?;
    let model = ModelSpec::from_name(&cfg.prior.model)?;
    let settings = cfg.prior.settings();
    let prior = model_prior(model, &panel, &settings)?;
    let sampler = cfg.sampler.config(cfg.seed);
    let chain = run_chain(&panel, &prior, &sampler, RngStream::new(cfg.seed, 0))
        .with_context(|| format!("estimating {}", model.name()))?;
    fs::create_dir_all(out)?;
    write_draws(&chain.states, create(out, "draws.jsonl")?)?;
    write_steady_state(&chain.states, &panel, out)?;
    if chain.states.first().is_some_and(|s| s.volatility.is_some()) {
        write_volatility(&chain.states, &panel, out)?;
    }
    let manifest = Manifest {
        model: model.name(),
        seed: cfg.seed,
        panel: data_source(data),
        periods: panel.len(),
        variables: panel.ids(),
        prior: &settings,
        sampler: &sampler,
        kept_draws: chain.states.len(),
        diagnostics: &chain.diagnostics,
        draws_sha256: sha256_file(&out.join("draws.jsonl"))?,
    };
    let hash = write_json(out, "manifest.json", &manifest)?;
    log::info!("{} kept draws written to {}", chain.states.len(), out.display());
    Ok(hash)
}

fn write_steady_state(states: &[ChainState], panel: &MixedPanel, out: &Path) -> Result<()> {
    let ids = panel.ids();
    let draws: Vec<Vec<f64>> = states
        .iter()
        .map(|s| s.steady_state().map(|v| v.iter().copied().collect()).unwrap_or_default())
        .collect();
    let mut raw = csv::Writer::from_writer(create(out, "steady_state_draws.csv")?);
    raw.write_record(["draw", "variable", "value"])?;
    for (d, v) in draws.iter().enumerate() {
        for (j, x) in v.iter().enumerate() {
            raw.write_record([d.to_string(), ids[j].clone(), x.to_string()])?;
        }
    }
    raw.flush()?;
    let mut w = csv::Writer::from_writer(create(out, "steady_state.csv")?);
    w.write_record(["variable", "mean", "sd", "q05", "q50", "q95"])?;
    for (j, id) in ids.iter().enumerate() {
        let mut col: Vec<f64> = draws.iter().filter_map(|v| v.get(j).copied()).collect();
        if col.is_empty() {
            continue;
        }
        write_summary_row(&mut w, id.clone(), &mut col)?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary_row<W: Write>(w: &mut csv::Writer<W>, label: String, col: &mut [f64]) -> Result<()> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    col.sort_by(f64::total_cmp);
    w.write_record([
        label,
        mean.to_string(),
        var.sqrt().to_string(),
        quantile(col, 0.05).to_string(),
        quantile(col, 0.5).to_string(),
        quantile(col, 0.95).to_string(),
    ])?;
    Ok(())
}

/// Posterior summaries of `exp(h_t / 2)` per estimation period.
fn write_volatility(states: &[ChainState], panel: &MixedPanel, out: &Path) -> Result<()> {
    let periods = states[0].volatility.as_ref().map_or(0, |v| v.h.len());
    let offset = panel.len() - periods;
    let mut w = csv::Writer::from_writer(create(out, "volatility.csv")?);
    w.write_record(["date", "mean", "sd", "q05", "q50", "q95"])?;
    for t in 0..periods {
        let mut col: Vec<f64> = states
            .iter()
            .filter_map(|s| s.volatility.as_ref().map(|v| (0.5 * v.h[t]).exp()))
            .collect();
        write_summary_row(&mut w, panel.month_at(t + offset).to_string(), &mut col)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the draw file and writes `forecast.csv` and `forecast_draws.csv`.
pub fn forecast_cmd(cfg: &RunConfig, draws_path: &Path, out: &Path) -> Result<()> {
    let data = data_section(cfg)?;
    let panel = load_panel(data)?.trim_leading()?;
    let f = File::open(draws_path).with_context(|| format!("opening {}", draws_path.display()))?;
    let states = read_draws(BufReader::new(f))?;
    let origin = match &cfg.forecast.origin {
        Some(s) => s.parse().context("forecast.origin")?,
        None => panel.end().add_months(1),
    };
    let horizons = Horizons {
        monthly: cfg.forecast.monthly_horizon,
        quarterly: cfg.forecast.quarterly_horizon,
    };
    let draws = forecast(&states, &panel, origin, horizons, RngStream::new(cfg.seed, 1))?;
    fs::create_dir_all(out)?;
    draws.write_summary_csv(create(out, "forecast.csv")?)?;
    draws.write_draws_csv(create(out, "forecast_draws.csv")?)?;
    log::info!("{} predictive paths from origin {origin}", draws.len());
    Ok(())
}

fn eval_model(name: &str, p: usize, q_lags: usize, m_lags: usize) -> Result<EvalModel> {
    match name {
        "VAR-Q" => Ok(EvalModel::quarterly_benchmark(q_lags)),
        "VAR-M" => Ok(EvalModel::monthly_benchmark(m_lags)),
        other => Ok(EvalModel::mixed(ModelSpec::from_name(other)?, p)),
    }
}

/// Recursive evaluation; writes `report.csv`, `report.txt` and `scores.csv`.
pub fn evaluate(cfg: &RunConfig, out: &Path) -> Result<String> {
    let data = data_section(cfg)?;
    let ev = cfg.evaluate.as_ref().ok_or_else(|| anyhow!("config has no [evaluate] section"))?;
    let panel = load_panel(data)?;
    let origins = ev.origins()?;
    let vintages = VintageSet::from_truncation(&panel, &data.pattern(), &origins)?;
    let models: Vec<EvalModel> = match &ev.models {
        Some(names) => names
            .iter()
            .map(|n| eval_model(n, cfg.prior.p, ev.quarterly_lags, ev.monthly_lags))
            .collect::<Result<_>>()?,
        None => EvalModel::standard_set(cfg.prior.p, ev.quarterly_lags, ev.monthly_lags),
    };
    let settings = EvalSettings {
        horizons: Horizons {
            monthly: cfg.forecast.monthly_horizon,
            quarterly: cfg.forecast.quarterly_horizon,
        },
        sampler: cfg.sampler.config(cfg.seed),
        prior: cfg.prior.settings(),
        vintage: ev.vintage(),
        lpds_form: ev.lpds_form(),
        quarterly_benchmark: ev
            .quarterly_benchmark
            .clone()
            .unwrap_or_else(|| EvalModel::quarterly_benchmark(ev.quarterly_lags).name),
        monthly_benchmark: ev
            .monthly_benchmark
            .clone()
            .unwrap_or_else(|| EvalModel::monthly_benchmark(ev.monthly_lags).name),
    };
    let report = recursive_evaluate(&vintages, &origins, &models, &settings)?;
    fs::create_dir_all(out)?;
    report.write_csv(create(out, "report.csv")?)?;
    let text = report.render_tables();
    fs::write(out.join("report.txt"), &text)?;
    let mut w = csv::Writer::from_writer(create(out, "scores.csv")?);
    w.write_record(["model", "set", "horizon", "origin", "lpds", "error"])?;
    for r in &report.records {
        w.write_record([
            r.model.clone(),
            r.set.clone(),
            r.horizon.to_string(),
            r.origin.to_string(),
            r.lpds.map(|v| v.to_string()).unwrap_or_default(),
            r.error.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    if !report.failures.is_empty() {
        write_json(out, "failures.json", &report.failures)?;
    }
    Ok(text)
}

pub fn default_output() -> PathBuf {
    PathBuf::from("out")
}
