//! Calendar periods, series ingestion and the mixed-frequency panel.
//!
//! All dates live on a monthly grid. Quarterly observations are stored at
//! the last month of their quarter (March, June, September, December) so
//! that the aggregation window of a quarterly value ends at the month it is
//! indexed by.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aggregation::AggregationScheme;
use crate::error::{Error, Result};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Month {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Validation(format!("month {month} out of range 1..=12")));
        }
        Ok(Self { year, month })
    }

    /// Last month of the given quarter (1..=4).
    pub fn quarter_end(year: i32, quarter: u32) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Validation(format!("quarter {quarter} out of range 1..=4")));
        }
        Ok(Self { year, month: quarter * 3 })
    }

    /// Months since year 0; strictly increasing in calendar order.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        Self {
            year: ordinal.div_euclid(12) as i32,
            month: ordinal.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn add_months(self, k: i64) -> Self {
        Self::from_ordinal(self.ordinal() + k)
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(self, other: Month) -> i64 {
        self.ordinal() - other.ordinal()
    }

    pub fn is_quarter_end(self) -> bool {
        self.month.is_multiple_of(3)
    }

    pub fn quarter(self) -> u32 {
        (self.month - 1) / 3 + 1
    }

    /// Last month of the quarter containing `self`.
    pub fn to_quarter_end(self) -> Month {
        Month {
            year: self.year,
            month: self.quarter() * 3,
        }
    }

    /// Parses `YYYY-MM` (monthly) or `YYYYQn` (quarterly, mapped to its last month).
    pub fn parse_period(s: &str) -> Result<(Month, Frequency)> {
        let s = s.trim();
        let bad = |msg: &str| Error::Validation(format!("malformed date `{s}`: {msg}"));
        if let Some((y, q)) = s.split_once(['Q', 'q']) {
            let year: i32 = y.parse().map_err(|_| bad("bad year"))?;
            let quarter: u32 = q.parse().map_err(|_| bad("bad quarter"))?;
            let m = Month::quarter_end(year, quarter).map_err(|_| bad("quarter must be 1..4"))?;
            return Ok((m, Frequency::Quarterly));
        }
        let (y, m) = s.split_once('-').ok_or_else(|| bad("expected YYYY-MM or YYYYQn"))?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad("expected YYYY-MM or YYYYQn"));
        }
        let year: i32 = y.parse().map_err(|_| bad("bad year"))?;
        let month: u32 = m.parse().map_err(|_| bad("bad month"))?;
        let m = Month::new(year, month).map_err(|_| bad("month must be 01..12"))?;
        Ok((m, Frequency::Monthly))
    }

    pub fn quarter_label(self) -> String {
        format!("{}Q{}", self.year, self.quarter())
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Month::parse_period(s).map(|(m, _)| m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Monthly,
    Quarterly,
}

impl Frequency {
    /// Length of one period in months.
    pub fn step(self) -> i64 {
        match self {
            Frequency::Monthly => 1,
            Frequency::Quarterly => 3,
        }
    }
}

/// How a monthly series is turned into a quarterly figure when a panel is
/// pre-aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TemporalAggregation {
    /// Growth rates: triangular weights over five months.
    #[default]
    Triangular,
    /// Levels and rates: mean of the three months in the quarter.
    Average,
}

/// A univariate series on a monthly or quarterly calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: String,
    pub frequency: Frequency,
    pub aggregation: TemporalAggregation,
    dates: Vec<Month>,
    values: Vec<Option<f64>>,
}

impl Series {
    pub fn new(
        id: impl Into<String>,
        frequency: Frequency,
        dates: Vec<Month>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        let id = id.into();
        if dates.len() != values.len() {
            return Err(Error::Validation(format!(
                "series `{id}`: {} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Validation(format!(
                    "series `{id}`: dates not strictly increasing at {}",
                    w[1]
                )));
            }
        }
        if frequency == Frequency::Quarterly {
            if let Some(d) = dates.iter().find(|d| !d.is_quarter_end()) {
                return Err(Error::Validation(format!(
                    "series `{id}`: quarterly value at non quarter-end month {d}"
                )));
            }
        }
        let values = values
            .into_iter()
            .map(|v| v.filter(|x| x.is_finite()))
            .collect();
        Ok(Self {
            id,
            frequency,
            aggregation: TemporalAggregation::default(),
            dates,
            values,
        })
    }

    /// Builds a series on a contiguous calendar starting at `start`.
    pub fn contiguous(
        id: impl Into<String>,
        frequency: Frequency,
        start: Month,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        let dates = (0..values.len() as i64)
            .map(|k| start.add_months(k * frequency.step()))
            .collect();
        Self::new(id, frequency, dates, values)
    }

    pub fn with_aggregation(mut self, aggregation: TemporalAggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[Month] {
        &self.dates
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, date: Month) -> Option<f64> {
        self.dates
            .binary_search(&date)
            .ok()
            .and_then(|i| self.values[i])
    }

    pub fn first_observed(&self) -> Option<Month> {
        self.dates
            .iter()
            .zip(&self.values)
            .find(|(_, v)| v.is_some())
            .map(|(d, _)| *d)
    }

    pub fn last_observed(&self) -> Option<Month> {
        self.dates
            .iter()
            .zip(&self.values)
            .rev()
            .find(|(_, v)| v.is_some())
            .map(|(d, _)| *d)
    }

    /// Keeps only dates up to and including `last`.
    pub fn truncated(&self, last: Month) -> Series {
        let k = self.dates.partition_point(|d| *d <= last);
        Series {
            id: self.id.clone(),
            frequency: self.frequency,
            aggregation: self.aggregation,
            dates: self.dates[..k].to_vec(),
            values: self.values[..k].to_vec(),
        }
    }
}

/// Column mapping for a two-column `date,value` file.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub id: String,
    pub date_column: String,
    pub value_column: String,
    /// Forces the frequency; inferred from the date format when `None`.
    pub frequency: Option<Frequency>,
}

impl CsvSchema {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            date_column: "date".into(),
            value_column: "value".into(),
            frequency: None,
        }
    }

    pub fn with_frequency(mut self, frequency: Frequency) -> Self {
        self.frequency = Some(frequency);
        self
    }
}

const MISSING_MARKERS: [&str; 6] = ["", "NA", "N/A", "NaN", "nan", "."];

/// Reads a `date,value` CSV file into a [`Series`].
pub fn load_series_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Series> {
    let file = std::fs::File::open(path.as_ref())?;
    read_series(file, schema)
}

pub fn read_series<R: Read>(reader: R, schema: &CsvSchema) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            location: "header".into(),
            message: format!("missing column `{name}`"),
        })
    };
    let date_col = col(&schema.date_column)?;
    let value_col = col(&schema.value_column)?;

    let mut rows: Vec<(Month, Option<f64>)> = Vec::new();
    let mut freq: Option<Frequency> = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2; // 1-based, after header
        let raw_date = rec.get(date_col).unwrap_or("");
        let (date, f) = Month::parse_period(raw_date).map_err(|e| Error::Parse {
            location: format!("row {row}"),
            message: e.to_string(),
        })?;
        match freq {
            None => freq = Some(f),
            Some(prev) if prev != f => {
                return Err(Error::Parse {
                    location: format!("row {row}"),
                    message: "mixed date formats in one file".into(),
                })
            }
            _ => {}
        }
        let raw = rec.get(value_col).unwrap_or("");
        let value = if MISSING_MARKERS.contains(&raw) {
            None
        } else {
            raw.parse::<f64>().ok().filter(|v| v.is_finite())
        };
        rows.push((date, value));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Validation(format!(
            "series `{}`: duplicate date {}",
            schema.id, w[0].0
        )));
    }
    let frequency = schema
        .frequency
        .or(freq)
        .unwrap_or(Frequency::Monthly);
    let (dates, values) = rows.into_iter().unzip();
    Series::new(schema.id.clone(), frequency, dates, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    None,
    LogDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub scale: f64,
}

impl TransformSpec {
    pub fn none() -> Self {
        Self {
            kind: TransformKind::None,
            scale: 1.0,
        }
    }

    pub fn log_diff(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Validation(format!("transform scale must be > 0, got {scale}")));
        }
        Ok(Self {
            kind: TransformKind::LogDiff,
            scale,
        })
    }

    /// Annualized month-on-month growth, `1200 Δln`.
    pub fn monthly_growth() -> Self {
        Self {
            kind: TransformKind::LogDiff,
            scale: 1200.0,
        }
    }

    /// Annualized quarter-on-quarter growth, `400 Δln`.
    pub fn quarterly_growth() -> Self {
        Self {
            kind: TransformKind::LogDiff,
            scale: 400.0,
        }
    }
}

/// `scale · (ln x_t − ln x_{t−1})` for log differences; identity otherwise.
///
/// A period whose predecessor is absent or missing becomes missing.
pub fn apply_transform(s: &Series, spec: &TransformSpec) -> Result<Series> {
    match spec.kind {
        TransformKind::None => Ok(s.clone()),
        TransformKind::LogDiff => {
            if !(spec.scale > 0.0) {
                return Err(Error::Validation(format!(
                    "transform scale must be > 0, got {}",
                    spec.scale
                )));
            }
            if s.len() < 2 {
                return Err(Error::Validation(format!(
                    "series `{}`: log difference needs at least two observations",
                    s.id
                )));
            }
            for (d, v) in s.dates.iter().zip(&s.values) {
                if let Some(x) = v {
                    if *x <= 0.0 {
                        return Err(Error::Domain(format!(
                            "series `{}`: non-positive level {x} at {d} under log difference",
                            s.id
                        )));
                    }
                }
            }
            let step = s.frequency.step();
            let mut values = Vec::with_capacity(s.len() - 1);
            for i in 1..s.len() {
                let adjacent = s.dates[i].months_since(s.dates[i - 1]) == step;
                let v = match (adjacent, s.values[i - 1], s.values[i]) {
                    (true, Some(a), Some(b)) => Some(spec.scale * (b.ln() - a.ln())),
                    _ => None,
                };
                values.push(v);
            }
            Ok(Series {
                id: s.id.clone(),
                frequency: s.frequency,
                aggregation: s.aggregation,
                dates: s.dates[1..].to_vec(),
                values,
            })
        }
    }
}

/// Publication delay per series, in months.
///
/// A delay of `k` means that on the forecast date in month `M` the latest
/// available observation refers to month `M − 1 − k`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PublicationPattern {
    pub delays: BTreeMap<String, u32>,
}

impl PublicationPattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_delay(mut self, id: impl Into<String>, months: u32) -> Self {
        self.delays.insert(id.into(), months);
        self
    }

    pub fn delay(&self, id: &str) -> u32 {
        self.delays.get(id).copied().unwrap_or(0)
    }

    /// Last month whose value for `id` is public on the forecast date `asof`.
    pub fn last_available(&self, id: &str, asof: Month) -> Month {
        asof.add_months(-1 - self.delay(id) as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub id: String,
    pub frequency: Frequency,
    pub aggregation: TemporalAggregation,
}

/// Aligned observations on a common time grid.
///
/// Columns are ordered with the `n_m` high-frequency variables first and the
/// `n_q` quarterly variables last. On a monthly clock the quarterly block
/// holds values only at quarter-end months. Panels pre-aggregated to a
/// quarterly clock have `n_q = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPanel {
    start: Month,
    clock: Frequency,
    variables: Vec<VariableInfo>,
    n_m: usize,
    data: Vec<Vec<Option<f64>>>,
}

impl MixedPanel {
    pub fn new(
        start: Month,
        clock: Frequency,
        variables: Vec<VariableInfo>,
        n_m: usize,
        data: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let n = variables.len();
        if n_m > n {
            return Err(Error::Validation(format!("n_m = {n_m} exceeds {n} variables")));
        }
        if clock == Frequency::Quarterly && (n_m != n || !start.is_quarter_end()) {
            return Err(Error::Validation(
                "quarterly-clock panels hold only clock-frequency variables and start at a quarter end".into(),
            ));
        }
        for (t, row) in data.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Validation(format!(
                    "row {t} has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let mut panel = Self {
            start,
            clock,
            variables,
            n_m,
            data,
        };
        for t in 0..panel.len() {
            let m = panel.month_at(t);
            for j in n_m..n {
                match panel.data[t][j] {
                    Some(v) if !v.is_finite() => panel.data[t][j] = None,
                    Some(_) if !m.is_quarter_end() => {
                        return Err(Error::Validation(format!(
                            "quarterly variable `{}` observed at non quarter-end month {m}",
                            panel.variables[j].id
                        )))
                    }
                    _ => {}
                }
            }
            for v in panel.data[t].iter_mut() {
                if v.is_some_and(|x| !x.is_finite()) {
                    *v = None;
                }
            }
        }
        Ok(panel)
    }

    /// Number of time periods.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn n_m(&self) -> usize {
        self.n_m
    }

    pub fn n_q(&self) -> usize {
        self.variables.len() - self.n_m
    }

    pub fn clock(&self) -> Frequency {
        self.clock
    }

    pub fn start(&self) -> Month {
        self.start
    }

    /// Month of the final period.
    pub fn end(&self) -> Month {
        self.month_at(self.len().saturating_sub(1))
    }

    pub fn month_at(&self, t: usize) -> Month {
        self.start.add_months(t as i64 * self.clock.step())
    }

    pub fn index_of(&self, month: Month) -> Option<usize> {
        let d = month.months_since(self.start);
        let step = self.clock.step();
        if d < 0 || d % step != 0 {
            return None;
        }
        let t = (d / step) as usize;
        (t < self.len()).then_some(t)
    }

    pub fn variables(&self) -> &[VariableInfo] {
        &self.variables
    }

    pub fn ids(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.id.clone()).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.id == id)
    }

    pub fn value(&self, t: usize, j: usize) -> Option<f64> {
        self.data[t][j]
    }

    pub fn row(&self, t: usize) -> &[Option<f64>] {
        &self.data[t]
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.data
    }

    /// Index of the last period up to which every high-frequency variable is
    /// observed at every period, or `None` if the first period is incomplete.
    pub fn balanced_through(&self) -> Option<usize> {
        let complete = |t: usize| self.data[t][..self.n_m].iter().all(Option::is_some);
        let k = (0..self.len()).take_while(|&t| complete(t)).count();
        k.checked_sub(1)
    }

    pub fn last_observed(&self, j: usize) -> Option<usize> {
        (0..self.len()).rev().find(|&t| self.data[t][j].is_some())
    }

    /// Sub-panel over periods `from..to`.
    pub fn slice(&self, from: usize, to: usize) -> MixedPanel {
        let to = to.min(self.len());
        let from = from.min(to);
        MixedPanel {
            start: self.month_at(from),
            clock: self.clock,
            variables: self.variables.clone(),
            n_m: self.n_m,
            data: self.data[from..to].to_vec(),
        }
    }

    /// Drops leading periods until every high-frequency variable is observed.
    pub fn trim_leading(&self) -> Result<MixedPanel> {
        let first = (0..self.len())
            .find(|&t| self.data[t][..self.n_m].iter().all(Option::is_some))
            .ok_or_else(|| Error::Validation("no period with all high-frequency variables observed".into()))?;
        Ok(self.slice(first, self.len()))
    }

    /// Monthly variables only.
    pub fn monthly_only(&self) -> MixedPanel {
        MixedPanel {
            start: self.start,
            clock: self.clock,
            variables: self.variables[..self.n_m].to_vec(),
            n_m: self.n_m,
            data: self.data.iter().map(|r| r[..self.n_m].to_vec()).collect(),
        }
    }

    /// All variables converted to a quarterly clock. Monthly growth rates
    /// use the triangular weights, level variables the three-month mean.
    pub fn to_quarterly_clock(&self, scheme: &AggregationScheme) -> Result<MixedPanel> {
        if self.clock != Frequency::Monthly {
            return Err(Error::Validation("panel is already on a quarterly clock".into()));
        }
        let first_q = (0..self.len())
            .find(|&t| t >= 4 && self.month_at(t).is_quarter_end())
            .ok_or_else(|| Error::Validation("panel too short for quarterly aggregation".into()))?;
        let mut data = Vec::new();
        let mut t = first_q;
        while t < self.len() {
            let mut row = Vec::with_capacity(self.n());
            for (j, var) in self.variables.iter().enumerate() {
                let v = if j >= self.n_m {
                    self.data[t][j]
                } else {
                    match var.aggregation {
                        TemporalAggregation::Triangular => {
                            let window: Option<Vec<f64>> =
                                (0..5).map(|k| self.data[t - k][j]).collect();
                            window.map(|w| scheme.apply(&w))
                        }
                        TemporalAggregation::Average => {
                            let window: Option<Vec<f64>> =
                                (0..3).map(|k| self.data[t - k][j]).collect();
                            window.map(|w| w.iter().sum::<f64>() / 3.0)
                        }
                    }
                };
                row.push(v);
            }
            data.push(row);
            t += 3;
        }
        let n = self.n();
        MixedPanel::new(
            self.month_at(first_q),
            Frequency::Quarterly,
            self.variables.clone(),
            n,
            data,
        )
    }

    /// Copy with every value after `last` (per variable) removed.
    pub(crate) fn with_cutoffs(&self, cutoffs: &[Month], end: Month) -> MixedPanel {
        let len = (0..self.len())
            .take_while(|&t| self.month_at(t) <= end)
            .count();
        let mut data = self.data[..len].to_vec();
        for (t, row) in data.iter_mut().enumerate() {
            let m = self.month_at(t);
            for (j, v) in row.iter_mut().enumerate() {
                if m > cutoffs[j] {
                    *v = None;
                }
            }
        }
        MixedPanel {
            start: self.start,
            clock: self.clock,
            variables: self.variables.clone(),
            n_m: self.n_m,
            data,
        }
    }
}

/// Aligns monthly and quarterly series on the monthly grid spanning the
/// union of their dates.
pub fn assemble_panel(monthly: &[Series], quarterly: &[Series]) -> Result<MixedPanel> {
    if monthly.is_empty() && quarterly.is_empty() {
        return Err(Error::Validation("no series to assemble".into()));
    }
    for s in monthly {
        if s.frequency != Frequency::Monthly {
            return Err(Error::Validation(format!("series `{}` is not monthly", s.id)));
        }
    }
    for s in quarterly {
        if s.frequency != Frequency::Quarterly {
            return Err(Error::Validation(format!("series `{}` is not quarterly", s.id)));
        }
    }
    let all: Vec<&Series> = monthly.iter().chain(quarterly).collect();
    let mut ids: Vec<&str> = all.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Validation(format!("duplicate series id `{}`", w[0])));
    }

    let mut lo: Option<Month> = None;
    let mut hi: Option<Month> = None;
    let mut common_lo: Option<Month> = None;
    let mut common_hi: Option<Month> = None;
    for s in &all {
        let (Some(first), Some(last)) = (s.first_observed(), s.last_observed()) else {
            return Err(Error::Validation(format!("series `{}` has no observations", s.id)));
        };
        // a quarterly value covers the whole quarter ending at its month
        let first_cover = if s.frequency == Frequency::Quarterly {
            first.add_months(-2)
        } else {
            first
        };
        lo = Some(lo.map_or(first_cover, |m| m.min(first_cover)));
        hi = Some(hi.map_or(last, |m| m.max(last)));
        common_lo = Some(common_lo.map_or(first_cover, |m| m.max(first_cover)));
        common_hi = Some(common_hi.map_or(last, |m| m.min(last)));
    }
    let (lo, hi) = (lo.unwrap(), hi.unwrap());
    if common_lo.unwrap() > common_hi.unwrap() {
        return Err(Error::Validation(
            "series samples do not overlap (empty intersection)".into(),
        ));
    }
    let len = hi.months_since(lo) as usize + 1;
    let n = all.len();
    let mut data = vec![vec![None; n]; len];
    for (j, s) in all.iter().enumerate() {
        for (d, v) in s.dates().iter().zip(s.values()) {
            let t = d.months_since(lo) as usize;
            data[t][j] = *v;
        }
    }
    let variables = all
        .iter()
        .map(|s| VariableInfo {
            id: s.id.clone(),
            frequency: s.frequency,
            aggregation: s.aggregation,
        })
        .collect();
    MixedPanel::new(lo, Frequency::Monthly, variables, monthly.len(), data)
}

/// The panel as seen on the forecast date in month `asof`: each series ends
/// at `asof − 1 − delay`, and the grid ends at `asof − 1`.
pub fn truncate_to_vintage(
    p: &MixedPanel,
    asof: Month,
    pattern: &PublicationPattern,
) -> Result<MixedPanel> {
    if asof <= p.start() {
        return Err(Error::Validation(format!(
            "vintage date {asof} precedes the panel start {}",
            p.start()
        )));
    }
    let cutoffs: Vec<Month> = p
        .variables()
        .iter()
        .map(|v| pattern.last_available(&v.id, asof))
        .collect();
    Ok(p.with_cutoffs(&cutoffs, asof.add_months(-1)))
}

/// Writes a monthly-clock panel as wide CSV: `date,<id>,…` with empty
/// cells for missing values.
pub fn write_panel_csv<W: std::io::Write>(panel: &MixedPanel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_string()];
    header.extend(panel.ids());
    w.write_record(&header)?;
    for t in 0..panel.len() {
        let mut rec = vec![panel.month_at(t).to_string()];
        rec.extend(panel.row(t).iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a wide monthly panel. Columns named in `quarterly` become the
/// low-frequency block (placed after the monthly columns) and may only hold
/// values at quarter-end months.
pub fn read_panel_csv<R: Read>(reader: R, quarterly: &[String]) -> Result<MixedPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("date") {
        return Err(Error::Parse {
            location: "header".into(),
            message: "first column must be `date`".into(),
        });
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    for q in quarterly {
        if !ids.contains(q) {
            return Err(Error::Validation(format!("quarterly column `{q}` not in panel")));
        }
    }
    let order: Vec<usize> = (0..ids.len())
        .filter(|&j| !quarterly.contains(&ids[j]))
        .chain((0..ids.len()).filter(|&j| quarterly.contains(&ids[j])))
        .collect();
    let mut start = None;
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let location = format!("row {}", i + 2);
        let date: Month = rec.get(0).unwrap_or("").parse().map_err(|e: Error| Error::Parse {
            location: location.clone(),
            message: e.to_string(),
        })?;
        let first = *start.get_or_insert(date);
        if date.months_since(first) != i as i64 {
            return Err(Error::Parse {
                location,
                message: format!("dates must be consecutive months, found {date}"),
            });
        }
        let row = order
            .iter()
            .map(|&j| {
                let raw = rec.get(j + 1).unwrap_or("");
                if MISSING_MARKERS.contains(&raw) {
                    Ok(None)
                } else {
                    raw.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                        location: location.clone(),
                        message: format!("`{raw}` is not a number in column `{}`", ids[j]),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        data.push(row);
    }
    let start = start.ok_or_else(|| Error::Validation("panel file has no rows".into()))?;
    let n_m = ids.len() - quarterly.len();
    let variables = order
        .iter()
        .enumerate()
        .map(|(k, &j)| VariableInfo {
            id: ids[j].clone(),
            frequency: if k < n_m { Frequency::Monthly } else { Frequency::Quarterly },
            aggregation: TemporalAggregation::Triangular,
        })
        .collect();
    MixedPanel::new(start, Frequency::Monthly, variables, n_m, data)
}
