//! Per-entity traffic time series: aggregation from flow records at a
//! chosen granularity, correlation statistics, and traffic-concentration
//! curves.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::records::FlowRecord;

/// Traffic volume of one entity in fixed-width, epoch-aligned bins.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub entity_id: String,
    pub t0: i64,
    pub bin_width: i64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(entity_id: impl Into<String>, t0: i64, bin_width: i64, values: Vec<f64>) -> Result<Self> {
        if bin_width <= 0 {
            return Err(Error::InvalidArgument("bin_width must be > 0".into()));
        }
        if t0.rem_euclid(bin_width) != 0 {
            return Err(Error::InvalidArgument(format!(
                "t0 {t0} is not aligned to bin_width {bin_width}"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("series must have at least one bin".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!("bad series value {v}")));
        }
        Ok(TimeSeries {
            entity_id: entity_id.into(),
            t0,
            bin_width,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum consecutive groups of `factor` bins into one coarser series.
    /// The length must divide evenly and `t0` stay aligned.
    pub fn coarsen(&self, factor: usize) -> Result<TimeSeries> {
        if factor == 0 || self.values.len() % factor != 0 {
            return Err(Error::InvalidArgument(format!(
                "cannot coarsen {} bins by factor {factor}",
                self.values.len()
            )));
        }
        let values = self
            .values
            .chunks(factor)
            .map(|c| c.iter().sum())
            .collect();
        TimeSeries::new(
            self.entity_id.clone(),
            self.t0,
            self.bin_width * factor as i64,
            values,
        )
    }
}

/// Which record field names the aggregation entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateKey {
    Cell,
    User,
    App,
}

impl AggregateKey {
    fn of<'a>(&self, rec: &'a FlowRecord) -> &'a str {
        match self {
            AggregateKey::Cell => &rec.cell_id,
            AggregateKey::User => &rec.user_id,
            AggregateKey::App => &rec.app_id,
        }
    }
}

impl std::str::FromStr for AggregateKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cell" => Ok(AggregateKey::Cell),
            "user" => Ok(AggregateKey::User),
            "app" => Ok(AggregateKey::App),
            other => Err(Error::InvalidArgument(format!(
                "unknown aggregation key '{other}' (expected cell, user, or app)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    BytesTotal,
    BytesDown,
    BytesUp,
    FlowCount,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bytes_total" => Ok(Metric::BytesTotal),
            "bytes_down" => Ok(Metric::BytesDown),
            "bytes_up" => Ok(Metric::BytesUp),
            "flow_count" => Ok(Metric::FlowCount),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric '{other}' (expected bytes_total, bytes_down, bytes_up, or flow_count)"
            ))),
        }
    }
}

impl Metric {
    fn bytes_of(&self, rec: &FlowRecord) -> Option<f64> {
        match self {
            Metric::BytesTotal => Some(rec.bytes_total() as f64),
            Metric::BytesDown => Some(rec.bytes_down as f64),
            Metric::BytesUp => Some(rec.bytes_up as f64),
            Metric::FlowCount => None,
        }
    }
}

/// How bytes of a flow spanning several bins are assigned to them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attribution {
    /// Split proportionally to the overlap duration with each bin. This
    /// conserves totals and makes coarsening exact.
    #[default]
    Proportional,
    /// Assign everything to the bin containing `t_start`.
    StartBin,
}

/// Aggregate records into one series per entity over `[t_begin, t_end)`.
///
/// Bins with no traffic hold zero. A zero-duration flow lands wholly in
/// the bin containing its start; `FlowCount` increments only that bin.
/// Flows partially outside the span contribute only their overlapping
/// share.
pub fn aggregate(
    records: &[FlowRecord],
    key: AggregateKey,
    metric: Metric,
    bin_width: i64,
    span: (i64, i64),
) -> Result<BTreeMap<String, TimeSeries>> {
    aggregate_with(records, key, metric, bin_width, span, Attribution::Proportional)
}

pub fn aggregate_with(
    records: &[FlowRecord],
    key: AggregateKey,
    metric: Metric,
    bin_width: i64,
    span: (i64, i64),
    attribution: Attribution,
) -> Result<BTreeMap<String, TimeSeries>> {
    let (t_begin, t_end) = span;
    if bin_width <= 0 {
        return Err(Error::InvalidArgument("bin_width must be > 0".into()));
    }
    if t_begin >= t_end {
        return Err(Error::InvalidArgument("span must be non-empty".into()));
    }
    if t_begin.rem_euclid(bin_width) != 0 || t_end.rem_euclid(bin_width) != 0 {
        return Err(Error::InvalidArgument(format!(
            "span [{t_begin}, {t_end}) is not aligned to bin_width {bin_width}"
        )));
    }
    let n_bins = ((t_end - t_begin) / bin_width) as usize;

    let mut bins: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in records {
        let in_span = if rec.t_start == rec.t_end {
            rec.t_start >= t_begin && rec.t_start < t_end
        } else {
            rec.t_start < t_end && rec.t_end > t_begin
        };
        if !in_span {
            continue;
        }
        let entity = key.of(rec);
        let series = bins
            .entry(entity.to_string())
            .or_insert_with(|| vec![0.0; n_bins]);

        match metric.bytes_of(rec) {
            None => {
                // flow_count: only the start bin, and only if it is in span
                if rec.t_start >= t_begin && rec.t_start < t_end {
                    series[((rec.t_start - t_begin) / bin_width) as usize] += 1.0;
                }
            }
            Some(value) => {
                let start_bin_in_span = rec.t_start >= t_begin && rec.t_start < t_end;
                let whole_to_start = rec.t_start == rec.t_end
                    || matches!(attribution, Attribution::StartBin);
                if whole_to_start {
                    if start_bin_in_span {
                        series[((rec.t_start - t_begin) / bin_width) as usize] += value;
                    }
                    continue;
                }
                let duration = (rec.t_end - rec.t_start) as f64;
                let lo = rec.t_start.max(t_begin);
                let hi = rec.t_end.min(t_end);
                let first = ((lo - t_begin) / bin_width) as usize;
                let last = (((hi - 1) - t_begin) / bin_width) as usize;
                for bin in first..=last {
                    let bs = t_begin + bin as i64 * bin_width;
                    let be = bs + bin_width;
                    let ov = (rec.t_end.min(be) - rec.t_start.max(bs)) as f64;
                    series[bin] += value * ov / duration;
                }
            }
        }
    }

    bins.into_iter()
        .map(|(id, values)| {
            let ts = TimeSeries::new(id.clone(), t_begin, bin_width, values)?;
            Ok((id, ts))
        })
        .collect()
}

/// Autocorrelation at lags `0..=max_lag`: the value at lag `k` is the
/// Pearson correlation of `x_t` against `x_{t+k}` over the bins the two
/// shifted copies share, identical to `cross_correlation(ts, ts, k)`.
/// Windowing keeps every value in `[-1, 1]`, makes `r(0)` exactly 1, and
/// scores an exactly periodic series at 1 on its period lag. A lag whose
/// overlap window is constant on either side yields an error even when
/// the full series is not constant.
pub fn autocorrelation(ts: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    let n = ts.values.len();
    if max_lag >= n {
        return Err(Error::InvalidArgument(format!(
            "max_lag {max_lag} must be below series length {n}"
        )));
    }
    let mean = ts.values.iter().sum::<f64>() / n as f64;
    if ts.values.iter().all(|v| (v - mean).abs() == 0.0) {
        return Err(Error::UndefinedStatistic(format!(
            "series {} has zero variance",
            ts.entity_id
        )));
    }
    std::iter::once(Ok(1.0))
        .chain((1..=max_lag).map(|k| cross_correlation(ts, ts, k as i64)))
        .collect()
}

/// Cross-correlation of `a_t` against `b_{t+lag}`, aligned in absolute
/// time: the Pearson correlation of the two series restricted to the
/// bins they share after shifting `b` by `lag`.
pub fn cross_correlation(a: &TimeSeries, b: &TimeSeries, lag: i64) -> Result<f64> {
    if a.bin_width != b.bin_width {
        return Err(Error::InvalidArgument(format!(
            "incompatible bin widths {} and {}",
            a.bin_width, b.bin_width
        )));
    }
    // both t0 are aligned, so the difference is a whole number of bins
    let offset = (a.t0 - b.t0) / a.bin_width + lag;
    let (na, nb) = (a.values.len() as i64, b.values.len() as i64);
    let i_lo = 0.max(-offset);
    let i_hi = na.min(nb - offset);
    if i_hi - i_lo < 2 {
        return Err(Error::InsufficientData(format!(
            "overlap at lag {lag} is {} bins, need at least 2",
            (i_hi - i_lo).max(0)
        )));
    }
    let xs = &a.values[i_lo as usize..i_hi as usize];
    let ys = &b.values[(i_lo + offset) as usize..(i_hi + offset) as usize];
    match crate::corr::pearson(xs, ys) {
        Err(Error::UndefinedStatistic(_)) => Err(Error::UndefinedStatistic(format!(
            "zero variance on the {}-bin overlap at lag {lag}",
            i_hi - i_lo
        ))),
        other => other,
    }
}

/// Cumulative traffic share of the top-p fraction of entities, entities
/// sorted by descending total.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationCurve {
    points: Vec<(f64, f64)>,
}

impl ConcentrationCurve {
    /// Validates curve invariants: starts at (0,0), ends at (1,1), both
    /// coordinates nondecreasing.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("concentration curve: {msg}")));
        match (points.first(), points.last()) {
            (Some(&(0.0, 0.0)), Some(&(1.0, 1.0))) => {}
            _ => return bad("must start at (0,0) and end at (1,1)"),
        }
        for w in points.windows(2) {
            if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                return bad("coordinates must be nondecreasing");
            }
        }
        Ok(ConcentrationCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// Build the concentration curve for per-entity totals. Ties in totals
/// break by entity id so the curve is deterministic.
pub fn concentration(totals: &BTreeMap<String, f64>) -> Result<ConcentrationCurve> {
    if let Some((id, v)) = totals.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidArgument(format!("bad total {v} for {id}")));
    }
    if !totals.values().any(|v| *v > 0.0) {
        return Err(Error::InvalidArgument(
            "concentration needs at least one positive total".into(),
        ));
    }
    let mut sorted: Vec<(&String, f64)> = totals.iter().map(|(k, v)| (k, *v)).collect();
    sorted.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));

    let n = sorted.len() as f64;
    let mut cum = Vec::with_capacity(sorted.len());
    let mut acc = 0.0;
    for (_, v) in &sorted {
        acc += v;
        cum.push(acc);
    }
    let total = acc;
    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push((0.0, 0.0));
    for (k, c) in cum.iter().enumerate() {
        points.push(((k + 1) as f64 / n, c / total));
    }
    // the final point is exactly (1,1): k+1 == n and c == total
    ConcentrationCurve::new(points)
}

/// Traffic share of the top-p fraction, linearly interpolated between
/// curve points.
pub fn top_share(curve: &ConcentrationCurve, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("p {p} out of range (0, 1]")));
    }
    let pts = curve.points();
    let idx = pts.partition_point(|(x, _)| *x < p);
    // idx > 0 because p > 0 and pts[0].0 == 0
    let (x1, y1) = pts[idx - 1];
    if idx == pts.len() {
        return Ok(y1);
    }
    let (x2, y2) = pts[idx];
    if x2 == x1 {
        return Ok(y2);
    }
    Ok(y1 + (y2 - y1) * (p - x1) / (x2 - x1))
}

/// Write series as `entity_id,t0,bin_width,v0,v1,...` rows under a header
/// naming every bin column. All series must share span and granularity.
pub fn write_series_csv<W: Write>(series: &BTreeMap<String, TimeSeries>, out: &mut W) -> Result<()> {
    let mut iter = series.values();
    let first = match iter.next() {
        Some(ts) => ts,
        None => {
            writeln!(out, "entity_id,t0,bin_width")?;
            return Ok(());
        }
    };
    for ts in series.values() {
        if ts.len() != first.len() || ts.t0 != first.t0 || ts.bin_width != first.bin_width {
            return Err(Error::InvalidArgument(
                "series export requires a common span and bin width".into(),
            ));
        }
    }
    let cols: Vec<String> = (0..first.len()).map(|i| format!("v{i}")).collect();
    writeln!(out, "entity_id,t0,bin_width,{}", cols.join(","))?;
    for ts in series.values() {
        let vals: Vec<String> = ts.values.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{},{},{}", ts.entity_id, ts.t0, ts.bin_width, vals.join(","))?;
    }
    Ok(())
}

pub fn read_series_csv<R: BufRead>(source: R) -> Result<BTreeMap<String, TimeSeries>> {
    let mut out = BTreeMap::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let text = line.trim_end_matches('\r');
        if text.is_empty() || (i == 0 && text.starts_with("entity_id,")) {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() < 4 {
            return Err(Error::Schema(format!(
                "series row {} needs entity_id,t0,bin_width and at least one value",
                i + 1
            )));
        }
        let parse_err = |what: &str| Error::Schema(format!("series row {}: bad {what}", i + 1));
        let t0: i64 = fields[1].parse().map_err(|_| parse_err("t0"))?;
        let bin_width: i64 = fields[2].parse().map_err(|_| parse_err("bin_width"))?;
        let values = fields[3..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err("value")))
            .collect::<Result<Vec<f64>>>()?;
        let ts = TimeSeries::new(fields[0], t0, bin_width, values)?;
        out.insert(ts.entity_id.clone(), ts);
    }
    Ok(out)
}

/// Write a concentration curve as `p,s` rows.
pub fn write_concentration_csv<W: Write>(curve: &ConcentrationCurve, out: &mut W) -> Result<()> {
    writeln!(out, "p,s")?;
    for (p, s) in curve.points() {
        writeln!(out, "{p},{s}")?;
    }
    Ok(())
}
