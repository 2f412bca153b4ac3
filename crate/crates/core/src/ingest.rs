//! Empirical pipeline for trade files: parse, drop split-like jumps,
//! process each trading day on its own, average days, and cut decay
//! functions back to the lags that carry signal.
//!
//! Tick files are UTF-8 CSV with the header `date,time_s,price`: an ISO
//! date, seconds since midnight (may be fractional), and a positive price.
//! Parsed timestamps are seconds since the Unix epoch.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::correlation::{decay_function, equal_time_rho, returns};
use crate::decomposition::DecompositionInput;
use crate::error::{Error, Result};
use crate::series::{
    resample_to_grid, CurveKind, DecayFunction, EppsCurve, EppsPoint, Tick, TickSeries,
};

pub mod fixture;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Session open, seconds since midnight.
    pub session_start: f64,
    /// Session close, seconds since midnight.
    pub session_end: f64,
    pub split_filter_fraction: f64,
    pub dt0: u64,
    pub max_decay_lag: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            session_start: 9.5 * 3600.0,
            session_end: 16.0 * 3600.0,
            split_filter_fraction: 0.05,
            dt0: 120,
            max_decay_lag: 30,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_filter_fraction > 0.0 && self.split_filter_fraction < 1.0) {
            return Err(Error::InvalidParams(format!(
                "split filter fraction must lie in (0, 1), got {}",
                self.split_filter_fraction
            )));
        }
        if self.session_start.is_nan()
            || self.session_end.is_nan()
            || self.session_start >= self.session_end
        {
            return Err(Error::InvalidParams(format!(
                "session start {} must precede session end {}",
                self.session_start, self.session_end
            )));
        }
        if self.dt0 < 1 {
            return Err(Error::InvalidParams("dt0 must be at least 1 s".into()));
        }
        Ok(())
    }

    fn in_session(&self, time_s: f64) -> bool {
        time_s >= self.session_start && time_s <= self.session_end
    }
}

pub fn epoch_day(date: NaiveDate) -> i64 {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    (date - epoch).num_days()
}

pub fn date_of(epoch_seconds: f64) -> NaiveDate {
    let day = (epoch_seconds / SECONDS_PER_DAY as f64).floor() as i64;
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch") + chrono::Duration::days(day)
}

pub fn parse_ticks(
    path: impl AsRef<Path>,
    instrument: &str,
    cfg: &SessionConfig,
) -> Result<TickSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_ticks_from_reader(file, path, instrument, cfg)
}

/// Like [`parse_ticks`]; `label` names the source in errors.
pub fn parse_ticks_from_reader<R: Read>(
    reader: R,
    label: impl AsRef<Path>,
    instrument: &str,
    cfg: &SessionConfig,
) -> Result<TickSeries> {
    let label = label.as_ref();
    let malformed = |line: u64, reason: String| Error::MalformedRow {
        path: label.to_owned(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["date", "time_s", "price"] {
        return Err(malformed(
            1,
            format!("expected header date,time_s,price, got {header:?}"),
        ));
    }

    let mut events = Vec::new();
    let mut last: Option<f64> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| malformed(line, format!("bad date {:?}: {e}", &record[0])))?;
        let time_s: f64 = record[1]
            .parse()
            .map_err(|_| malformed(line, format!("bad time_s {:?}", &record[1])))?;
        let price: f64 = record[2]
            .parse()
            .map_err(|_| malformed(line, format!("bad price {:?}", &record[2])))?;
        if !(time_s.is_finite() && (0.0..SECONDS_PER_DAY as f64).contains(&time_s)) {
            return Err(malformed(line, format!("time_s {time_s} outside one day")));
        }
        if !(price.is_finite() && price > 0.0) {
            return Err(malformed(line, format!("price {price} is not positive")));
        }
        let time = (epoch_day(date) * SECONDS_PER_DAY) as f64 + time_s;
        if last.is_some_and(|t| time < t) {
            return Err(Error::NonMonotoneTimestamps {
                path: label.to_owned(),
                line,
            });
        }
        last = Some(time);
        if cfg.in_session(time_s) {
            events.push(Tick { time, value: price });
        }
    }
    if events.is_empty() {
        return Err(Error::EmptyAfterFiltering(label.to_owned()));
    }
    TickSeries::from_prices(instrument, events.into_iter().map(|t| (t.time, t.value)))
}

/// Outcome of [`filter_splits_with_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFilterReport {
    pub retained: TickSeries,
    /// Indices (into the input) of the dropped ticks.
    pub dropped: Vec<usize>,
}

/// Drops every tick whose log-price differs from the last retained tick by
/// more than `ln(1 + fraction)`.
pub fn filter_splits(ticks: &TickSeries, fraction: f64) -> TickSeries {
    filter_splits_with_report(ticks, fraction).retained
}

pub fn filter_splits_with_report(ticks: &TickSeries, fraction: f64) -> SplitFilterReport {
    let bound = fraction.ln_1p().abs();
    let mut kept = Vec::with_capacity(ticks.len());
    let mut dropped = Vec::new();
    let mut anchor: Option<f64> = None;
    for (i, tick) in ticks.events().iter().enumerate() {
        let lp = ticks.log_price(i);
        match anchor {
            Some(prev) if (lp - prev).abs() > bound => dropped.push(i),
            _ => {
                kept.push(*tick);
                anchor = Some(lp);
            }
        }
    }
    SplitFilterReport {
        retained: ticks.with_events(kept),
        dropped,
    }
}

/// Groups ticks by calendar day (UTC day of the epoch timestamp).
pub fn split_by_day(ticks: &TickSeries) -> BTreeMap<NaiveDate, TickSeries> {
    let mut days: BTreeMap<NaiveDate, Vec<Tick>> = BTreeMap::new();
    for tick in ticks.events() {
        days.entry(date_of(tick.time)).or_default().push(*tick);
    }
    days.into_iter()
        .map(|(d, events)| (d, ticks.with_events(events)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyStats {
    pub date: NaiveDate,
    pub rho0: f64,
    pub decay_ab: DecayFunction,
    pub decay_aa: DecayFunction,
    pub decay_bb: DecayFunction,
    /// Number of `dt0` returns.
    pub n_obs: usize,
    /// Measured correlation per requested `dt`, `None` where it failed.
    pub epps: Vec<(u64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedDay {
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub stats: Vec<DailyStats>,
    pub skipped: Vec<SkippedDay>,
}

/// Per-day statistics for every day present in either series (or only the
/// listed `days`). Days without usable data are reported, not fatal.
pub fn daily_pipeline(
    ticks_a: &TickSeries,
    ticks_b: &TickSeries,
    cfg: &SessionConfig,
    days: Option<&[NaiveDate]>,
    dt_grid: &[u64],
) -> Result<PipelineOutput> {
    cfg.validate()?;
    if let Some(&dt) = dt_grid
        .iter()
        .find(|&&dt| dt == 0 || !dt.is_multiple_of(cfg.dt0))
    {
        return Err(Error::GridMismatch(format!(
            "dt={dt} s is not a positive multiple of dt0={} s",
            cfg.dt0
        )));
    }
    let by_day_a = split_by_day(ticks_a);
    let by_day_b = split_by_day(ticks_b);
    let dates: Vec<NaiveDate> = match days {
        Some(d) => d.to_vec(),
        None => by_day_a
            .keys()
            .chain(by_day_b.keys())
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect(),
    };

    let results: Vec<std::result::Result<DailyStats, SkippedDay>> = dates
        .par_iter()
        .map(|&date| {
            let skip = |reason: String| SkippedDay { date, reason };
            let a = by_day_a
                .get(&date)
                .ok_or_else(|| skip(format!("{} has no ticks", ticks_a.instrument_id())))?;
            let b = by_day_b
                .get(&date)
                .ok_or_else(|| skip(format!("{} has no ticks", ticks_b.instrument_id())))?;
            one_day(date, a, b, cfg, dt_grid).map_err(|e| skip(e.to_string()))
        })
        .collect();

    let mut out = PipelineOutput {
        stats: Vec::new(),
        skipped: Vec::new(),
    };
    for r in results {
        match r {
            Ok(s) => out.stats.push(s),
            Err(s) => {
                log::info!("skipping {}: {}", s.date, s.reason);
                out.skipped.push(s)
            }
        }
    }
    if out.stats.is_empty() {
        return Err(Error::NoUsableDays);
    }
    Ok(out)
}

/// First grid point `open + k·dt0` with a tick of both series strictly before it.
pub(crate) fn anchor_grid(open: i64, dt0: u64, first_a: f64, first_b: f64) -> i64 {
    let first = first_a.max(first_b);
    let dt0 = dt0 as i64;
    let mut k = ((first - open as f64) / dt0 as f64).ceil().max(0.0) as i64;
    while (open + k * dt0) as f64 <= first {
        k += 1;
    }
    open + k * dt0
}

fn one_day(
    date: NaiveDate,
    a: &TickSeries,
    b: &TickSeries,
    cfg: &SessionConfig,
    dt_grid: &[u64],
) -> Result<DailyStats> {
    let a = filter_splits(a, cfg.split_filter_fraction);
    let b = filter_splits(b, cfg.split_filter_fraction);
    let (Some(fa), Some(fb)) = (a.events().first(), b.events().first()) else {
        return Err(Error::EmptyInput);
    };
    let midnight = epoch_day(date) * SECONDS_PER_DAY;
    let open = midnight + cfg.session_start.ceil() as i64;
    let close = midnight + cfg.session_end.floor() as i64;
    let t0 = anchor_grid(open, cfg.dt0, fa.time, fb.time);
    if t0 > close {
        return Err(Error::InvalidGrid(
            "no grid point left in the session".into(),
        ));
    }
    let n = ((close - t0) as u64 / cfg.dt0 + 1) as usize;
    let grid_a = resample_to_grid(&a, t0, cfg.dt0, n)?;
    let grid_b = resample_to_grid(&b, t0, cfg.dt0, n)?;

    let ra = returns(&grid_a, cfg.dt0, cfg.dt0)?;
    let rb = returns(&grid_b, cfg.dt0, cfg.dt0)?;
    let rho0 = equal_time_rho(&ra, &rb)?;
    let n_obs = ra.len();
    let max_lag = cfg.max_decay_lag.min(n_obs.saturating_sub(1) / 2);
    let decay_ab = decay_function(&ra, &rb, max_lag)?;
    let decay_aa = decay_function(&ra, &ra, max_lag)?;
    let decay_bb = decay_function(&rb, &rb, max_lag)?;

    let epps = dt_grid
        .iter()
        .map(|&dt| {
            let rho = returns(&grid_a, dt, cfg.dt0)
                .and_then(|x| Ok((x, returns(&grid_b, dt, cfg.dt0)?)))
                .and_then(|(x, y)| equal_time_rho(&x, &y))
                .ok();
            (dt, rho)
        })
        .collect();

    Ok(DailyStats {
        date,
        rho0,
        decay_ab,
        decay_aa,
        decay_bb,
        n_obs,
        epps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredPoint {
    pub dt: u64,
    pub rho: Option<f64>,
    pub n_days: usize,
    /// Standard error of the day mean; `None` for fewer than two days.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedStats {
    pub input: DecompositionInput,
    pub measured: Vec<MeasuredPoint>,
    /// Days contributing to each `|lag|`, from 0 to the longest day.
    pub lag_days: Vec<usize>,
    pub n_days: usize,
}

impl AveragedStats {
    pub fn measured_curve(&self) -> Result<EppsCurve> {
        let points = self
            .measured
            .iter()
            .filter_map(|p| p.rho.map(|rho| EppsPoint { dt: p.dt, rho }))
            .collect();
        EppsCurve::new(CurveKind::Measured, points)
    }
}

/// Equal-weight day averages of `rho0`, each decay function (per lag, over
/// the days that have it), and every measured `ρ(dt)`.
pub fn average_stats(stats: &[DailyStats]) -> Result<AveragedStats> {
    let first = stats.first().ok_or(Error::EmptyInput)?;
    let dt0 = first.decay_ab.dt0();
    let longest = stats
        .iter()
        .map(|s| s.decay_ab.max_lag())
        .max()
        .unwrap_or(0);

    let average_decay = |pick: fn(&DailyStats) -> &DecayFunction| {
        let l = longest as i64;
        let values = (-l..=l)
            .map(|x| {
                let (sum, n) = stats
                    .iter()
                    .map(pick)
                    .filter(|f| x.unsigned_abs() as usize <= f.max_lag())
                    .fold((0.0, 0usize), |(s, n), f| (s + f.get(x), n + 1));
                sum / n as f64
            })
            .collect();
        DecayFunction::new(dt0, values)
    };
    let f_ab = average_decay(|s| &s.decay_ab)?;
    let f_aa = average_decay(|s| &s.decay_aa)?;
    let f_bb = average_decay(|s| &s.decay_bb)?;
    let lag_days = (0..=longest)
        .map(|x| stats.iter().filter(|s| s.decay_ab.max_lag() >= x).count())
        .collect();
    let rho0 = stats.iter().map(|s| s.rho0).sum::<f64>() / stats.len() as f64;

    let measured = first
        .epps
        .iter()
        .enumerate()
        .map(|(i, &(dt, _))| {
            let values: Vec<f64> = stats
                .iter()
                .filter_map(|s| s.epps.get(i).and_then(|p| p.1))
                .collect();
            let n = values.len();
            let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
            let stderr = mean.filter(|_| n > 1).map(|m| {
                let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            });
            MeasuredPoint {
                dt,
                rho: mean,
                n_days: n,
                stderr,
            }
        })
        .collect();

    Ok(AveragedStats {
        input: DecompositionInput::new(rho0, f_ab, f_aa, f_bb)?,
        measured,
        lag_days,
        n_days: stats.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Cross,
    Auto,
}

/// Zeroes the noisy tail of a decay function, each lag side on its own.
///
/// Cross decays keep lags before the first value `≤ 0`. Auto decays keep
/// the initial negative overshoot and cut where the function first comes
/// back up to `≥ 0`; without an overshoot they follow the cross rule.
pub fn truncate_decay(f: &DecayFunction, kind: DecayKind) -> DecayFunction {
    let l = f.max_lag();
    let mut values = f.values().to_vec();
    for sign in [1i64, -1] {
        let side: Vec<f64> = (1..=l as i64).map(|x| f.get(sign * x)).collect();
        let cut = match kind {
            DecayKind::Cross => side.iter().position(|&v| v <= 0.0),
            DecayKind::Auto => match side.iter().position(|&v| v < 0.0) {
                Some(k) => side[k + 1..]
                    .iter()
                    .position(|&v| v >= 0.0)
                    .map(|j| k + 1 + j),
                None => side.iter().position(|&v| v <= 0.0),
            },
        };
        if let Some(c) = cut {
            for x in (c + 1)..=l {
                values[(l as i64 + sign * x as i64) as usize] = 0.0;
            }
        }
    }
    DecayFunction::new(f.dt0(), values).expect("truncation keeps f(0) = 1")
}
