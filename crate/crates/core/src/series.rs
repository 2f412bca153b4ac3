//! Domain types shared by every stage of the pipeline, plus previous-tick
//! resampling onto a regular grid.
//!
//! Times are seconds (as `f64` for irregular ticks, `i64` for grid points).
//! Everything downstream of resampling works with log-prices.

use crate::error::{Error, Result};

/// How the `value` column of a [`TickSeries`] is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceScale {
    /// Plain positive prices; logs are taken on resampling.
    Price,
    /// Values are already log-prices (simulator output).
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub time: f64,
    pub value: f64,
}

/// Irregularly spaced trades of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    instrument_id: String,
    scale: PriceScale,
    events: Vec<Tick>,
}

impl TickSeries {
    pub fn new(
        instrument_id: impl Into<String>,
        scale: PriceScale,
        events: Vec<Tick>,
    ) -> Result<Self> {
        for (i, tick) in events.iter().enumerate() {
            if !tick.time.is_finite() || !tick.value.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "non-finite tick at index {i}"
                )));
            }
            if scale == PriceScale::Price && tick.value <= 0.0 {
                return Err(Error::InvalidSeries(format!(
                    "non-positive price {} at index {i}",
                    tick.value
                )));
            }
            if i > 0 && tick.time < events[i - 1].time {
                return Err(Error::InvalidSeries(format!(
                    "timestamps decrease at index {i}"
                )));
            }
        }
        Ok(Self {
            instrument_id: instrument_id.into(),
            scale,
            events,
        })
    }

    pub fn from_prices(
        instrument_id: impl Into<String>,
        events: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        let events = events
            .into_iter()
            .map(|(time, value)| Tick { time, value })
            .collect();
        Self::new(instrument_id, PriceScale::Price, events)
    }

    pub fn from_log_prices(
        instrument_id: impl Into<String>,
        events: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        let events = events
            .into_iter()
            .map(|(time, value)| Tick { time, value })
            .collect();
        Self::new(instrument_id, PriceScale::Log, events)
    }

    pub fn instrument_id(&self) -> &str {
        &self.instrument_id
    }

    pub fn scale(&self) -> PriceScale {
        self.scale
    }

    pub fn events(&self) -> &[Tick] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Log-price of the `i`-th event.
    pub fn log_price(&self, i: usize) -> f64 {
        let v = self.events[i].value;
        match self.scale {
            PriceScale::Price => v.ln(),
            PriceScale::Log => v,
        }
    }

    /// Same instrument and scale, different events. The caller keeps the
    /// invariants (used by filters that only drop events).
    pub(crate) fn with_events(&self, events: Vec<Tick>) -> Self {
        Self {
            instrument_id: self.instrument_id.clone(),
            scale: self.scale,
            events,
        }
    }
}

/// Log-prices on a uniform integer-second grid `t0 + k*dt0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularSeries {
    t0: i64,
    dt0: u64,
    values: Vec<f64>,
}

impl RegularSeries {
    pub fn new(t0: i64, dt0: u64, values: Vec<f64>) -> Result<Self> {
        if dt0 < 1 {
            return Err(Error::InvalidGrid("dt0 must be at least 1 s".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 grid points, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self { t0, dt0, values })
    }

    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn dt0(&self) -> u64 {
        self.dt0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time span `T` covered by the grid, in seconds.
    pub fn span(&self) -> u64 {
        (self.values.len() as u64 - 1) * self.dt0
    }

    pub fn time_at(&self, k: usize) -> i64 {
        self.t0 + k as i64 * self.dt0 as i64
    }

    /// Renders the grid back as log-price ticks, each placed half a step
    /// before the grid point it determines, so that resampling on the same
    /// grid reproduces `values` exactly.
    pub fn to_ticks(&self, instrument_id: impl Into<String>) -> TickSeries {
        let half = self.dt0 as f64 / 2.0;
        let events = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &value)| Tick {
                time: self.time_at(k) as f64 - half,
                value,
            })
            .collect();
        TickSeries {
            instrument_id: instrument_id.into(),
            scale: PriceScale::Log,
            events,
        }
    }
}

/// Log-returns over windows of `dt` seconds whose start points advance by
/// `stride` seconds. `values[k]` ends at `t0 + dt + k*stride`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub(crate) t0: i64,
    pub(crate) dt: u64,
    pub(crate) stride: u64,
    pub(crate) values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(t0: i64, dt: u64, stride: u64, values: Vec<f64>) -> Result<Self> {
        if dt == 0 || stride == 0 {
            return Err(Error::InvalidGrid("dt and stride must be positive".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite return at index {i}"
            )));
        }
        Ok(Self {
            t0,
            dt,
            stride,
            values,
        })
    }

    /// Start of the first return window.
    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn dt(&self) -> u64 {
        self.dt
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Normalized lagged correlation `f(x*dt0)` for `x` in `-max_lag..=max_lag`.
/// Lags outside the stored range read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFunction {
    dt0: u64,
    max_lag: usize,
    values: Vec<f64>,
}

impl DecayFunction {
    /// `values` runs from lag `-max_lag` to `+max_lag`; its midpoint must be
    /// exactly 1.
    pub fn new(dt0: u64, values: Vec<f64>) -> Result<Self> {
        if dt0 < 1 {
            return Err(Error::InvalidGrid("dt0 must be at least 1 s".into()));
        }
        if values.len() % 2 != 1 {
            return Err(Error::InvalidSeries(
                "decay function needs a symmetric lag range".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("non-finite decay value".into()));
        }
        let max_lag = values.len() / 2;
        if values[max_lag] != 1.0 {
            return Err(Error::InvalidSeries(format!(
                "decay function must equal 1 at lag 0, got {}",
                values[max_lag]
            )));
        }
        Ok(Self {
            dt0,
            max_lag,
            values,
        })
    }

    /// `f(x) = δ_{x,0}` over `-max_lag..=max_lag`.
    pub fn delta(dt0: u64, max_lag: usize) -> Self {
        let mut values = vec![0.0; 2 * max_lag + 1];
        values[max_lag] = 1.0;
        Self {
            dt0,
            max_lag,
            values,
        }
    }

    /// Builds `f` from a function of the lag index.
    pub fn from_fn(dt0: u64, max_lag: usize, f: impl Fn(i64) -> f64) -> Result<Self> {
        let m = max_lag as i64;
        Self::new(dt0, (-m..=m).map(f).collect())
    }

    pub fn dt0(&self) -> u64 {
        self.dt0
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, lag: i64) -> f64 {
        if lag.unsigned_abs() as usize > self.max_lag {
            return 0.0;
        }
        self.values[(lag + self.max_lag as i64) as usize]
    }

    pub fn lags(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let m = self.max_lag as i64;
        (-m..=m).zip(self.values.iter().copied())
    }

    /// Largest `|x|` with a nonzero value (0 if only `f(0)` is nonzero).
    pub fn support(&self) -> usize {
        self.lags()
            .filter(|&(_, v)| v != 0.0)
            .map(|(x, _)| x.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Measured,
    Predicted,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EppsPoint {
    pub dt: u64,
    pub rho: f64,
}

/// Correlation coefficient as a function of sampling scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EppsCurve {
    kind: CurveKind,
    points: Vec<EppsPoint>,
}

impl EppsCurve {
    pub fn new(kind: CurveKind, points: Vec<EppsPoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !(-1.0..=1.0).contains(&p.rho) {
                return Err(Error::InvalidSeries(format!(
                    "rho={} at dt={} outside [-1, 1]",
                    p.rho, p.dt
                )));
            }
            if i > 0 && p.dt <= points[i - 1].dt {
                return Err(Error::InvalidSeries(
                    "curve dt values must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { kind, points })
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn points(&self) -> &[EppsPoint] {
        &self.points
    }
}

/// Previous-tick resampling: `values[k]` is the log-price of the latest tick
/// with timestamp strictly less than `t0 + k*dt0`.
pub fn resample_to_grid(ticks: &TickSeries, t0: i64, dt0: u64, n: usize) -> Result<RegularSeries> {
    if dt0 < 1 || n < 2 {
        return Err(Error::InvalidGrid(format!(
            "need dt0 >= 1 and n >= 2, got dt0={dt0}, n={n}"
        )));
    }
    let events = ticks.events();
    if events.first().is_none_or(|e| e.time >= t0 as f64) {
        return Err(Error::NoPriorTick { t0 });
    }

    let mut values = Vec::with_capacity(n);
    let mut next = 0;
    for k in 0..n {
        let t = (t0 + k as i64 * dt0 as i64) as f64;
        while next < events.len() && events[next].time < t {
            next += 1;
        }
        values.push(ticks.log_price(next - 1));
    }
    RegularSeries::new(t0, dt0, values)
}
