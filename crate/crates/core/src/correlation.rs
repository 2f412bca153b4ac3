//! Return construction and moment-based correlation estimators.
//!
//! Averages are plain time averages over the terms that exist at each lag
//! (no padding), and standard deviations use the `1/n` normalization over
//! the full series. Cross sums skip exact zeros of the leading series,
//! which keeps sparse previous-tick returns cheap without changing any sum.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{DecayFunction, EppsPoint, RegularSeries, ReturnSeries};

/// Log-returns `ln p(t) - ln p(t - dt)` with window starts every `stride`
/// seconds.
pub fn returns(series: &RegularSeries, dt: u64, stride: u64) -> Result<ReturnSeries> {
    let dt0 = series.dt0();
    if dt == 0 || !dt.is_multiple_of(dt0) {
        return Err(Error::GridMismatch(format!(
            "dt={dt} s is not a positive multiple of dt0={dt0} s"
        )));
    }
    if stride == 0 || !stride.is_multiple_of(dt0) {
        return Err(Error::GridMismatch(format!(
            "stride={stride} s is not a positive multiple of dt0={dt0} s"
        )));
    }
    let span = series.span();
    if dt >= span {
        return Err(Error::WindowTooLarge { dt, span });
    }
    let v = series.values();
    let width = (dt / dt0) as usize;
    let step = (stride / dt0) as usize;
    let count = ((span - dt) / stride + 1) as usize;
    let values = (0..count)
        .map(|k| v[k * step + width] - v[k * step])
        .collect();
    ReturnSeries::new(series.t0(), dt, stride, values)
}

/// Raw moments of a pair of return series.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub mean_a: f64,
    pub mean_b: f64,
    pub second_a: f64,
    pub second_b: f64,
    pub max_lag: usize,
    /// `⟨rA(t) rB(t + x·stride)⟩` for `x` in `-max_lag..=max_lag`.
    pub cross: Vec<f64>,
    pub n_terms: Vec<usize>,
}

impl MomentSet {
    pub fn compute(ra: &ReturnSeries, rb: &ReturnSeries, max_lag: usize) -> Result<Self> {
        check_compatible(ra, rb)?;
        let a = ra.values();
        let b = rb.values();
        let nz = nonzero_indices(a);
        let m = max_lag as i64;
        let blocks: Vec<(i64, i64)> = (-m..=m)
            .step_by(LAG_BLOCK)
            .map(|lo| (lo, (lo + LAG_BLOCK as i64 - 1).min(m)))
            .collect();
        let lagged: Vec<(f64, usize)> = blocks
            .into_par_iter()
            .flat_map_iter(|(lo, hi)| cross_sums(a, &nz, b, lo, hi))
            .collect();
        let mut cross = Vec::with_capacity(lagged.len());
        let mut n_terms = Vec::with_capacity(lagged.len());
        for (lag, (sum, n)) in (-m..=m).zip(lagged) {
            if n == 0 {
                return Err(Error::InsufficientOverlap { lag, overlap: 0 });
            }
            cross.push(sum / n as f64);
            n_terms.push(n);
        }
        let (mean_a, second_a) = mean_and_second(a)?;
        let (mean_b, second_b) = mean_and_second(b)?;
        Ok(Self {
            mean_a,
            mean_b,
            second_a,
            second_b,
            max_lag,
            cross,
            n_terms,
        })
    }

    pub fn cross_at(&self, lag: i64) -> f64 {
        self.cross[(lag + self.max_lag as i64) as usize]
    }

    pub fn var_a(&self) -> f64 {
        self.second_a - self.mean_a * self.mean_a
    }

    pub fn var_b(&self) -> f64 {
        self.second_b - self.mean_b * self.mean_b
    }
}

/// Normalized lagged covariance `C(τ)`. `tau` is in seconds and must be a
/// multiple of the series stride; positive `tau` pairs `rA(t)` with a later
/// `rB(t + τ)`.
pub fn lagged_correlation(ra: &ReturnSeries, rb: &ReturnSeries, tau: i64) -> Result<f64> {
    check_compatible(ra, rb)?;
    let stride = ra.stride() as i64;
    if tau % stride != 0 {
        return Err(Error::GridMismatch(format!(
            "tau={tau} s is not a multiple of the stride {stride} s"
        )));
    }
    let lag = tau / stride;
    let a = ra.values();
    let b = rb.values();
    let (sum, overlap) = cross_sum(a, &nonzero_indices(a), b, lag);
    if overlap < 2 {
        return Err(Error::InsufficientOverlap { lag, overlap });
    }
    let (mean_a, second_a) = mean_and_second(a)?;
    let (mean_b, second_b) = mean_and_second(b)?;
    let var_a = nonzero_variance(mean_a, second_a)?;
    let var_b = nonzero_variance(mean_b, second_b)?;
    Ok((sum / overlap as f64 - mean_a * mean_b) / (var_a * var_b).sqrt())
}

/// Equal-time correlation coefficient, `C(0)`.
pub fn equal_time_rho(ra: &ReturnSeries, rb: &ReturnSeries) -> Result<f64> {
    lagged_correlation(ra, rb, 0)
}

/// `f(x) = ⟨rA(t) rB(t + x·dt)⟩ / ⟨rA(t) rB(t)⟩` for non-overlapping
/// windows (`stride == dt`). The normalization is the raw lag-zero cross
/// moment, not `σA σB`.
pub fn decay_function(
    ra: &ReturnSeries,
    rb: &ReturnSeries,
    max_lag: usize,
) -> Result<DecayFunction> {
    check_compatible(ra, rb)?;
    if ra.stride() != ra.dt() {
        return Err(Error::GridMismatch(format!(
            "decay functions need non-overlapping windows, got dt={} s, stride={} s",
            ra.dt(),
            ra.stride()
        )));
    }
    let n = ra.len().min(rb.len());
    if 2 * max_lag >= n {
        return Err(Error::InvalidParams(format!(
            "max_lag={max_lag} must stay below half of the {n} available returns"
        )));
    }
    let moments = MomentSet::compute(ra, rb, max_lag)?;
    decay_from_moments(&moments, ra.dt())
}

pub fn decay_from_moments(moments: &MomentSet, dt0: u64) -> Result<DecayFunction> {
    let c0 = moments.cross_at(0);
    if c0 == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    DecayFunction::new(dt0, moments.cross.iter().map(|c| c / c0).collect())
}

/// Measured equal-time correlation of two grids at each `dt`, with windows
/// advancing by `stride`.
pub fn measure_epps(
    a: &RegularSeries,
    b: &RegularSeries,
    dts: &[u64],
    stride: u64,
) -> Result<Vec<EppsPoint>> {
    dts.iter()
        .map(|&dt| {
            let ra = returns(a, dt, stride)?;
            let rb = returns(b, dt, stride)?;
            Ok(EppsPoint {
                dt,
                rho: equal_time_rho(&ra, &rb)?,
            })
        })
        .collect()
}

/// Least-squares fit of `A·exp(-|x|·dt0 / τ)` to a decay function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub amplitude: f64,
    /// Time constant `τ` in seconds.
    pub time_constant: f64,
    pub rss: f64,
}

/// Fits both lag sides over `min_lag..=max_lag`. The amplitude is solved in
/// closed form for each trial `τ`; `τ` is located by a log-spaced scan and
/// refined with golden-section search.
pub fn fit_exponential_decay(f: &DecayFunction, min_lag: usize, max_lag: usize) -> Result<ExpFit> {
    if min_lag > max_lag || max_lag > f.max_lag() {
        return Err(Error::InvalidParams(format!(
            "fit range {min_lag}..={max_lag} outside stored lags 0..={}",
            f.max_lag()
        )));
    }
    let dt0 = f.dt0() as f64;
    let points: Vec<(f64, f64)> = (min_lag..=max_lag)
        .flat_map(|x| {
            let t = x as f64 * dt0;
            let x = x as i64;
            let both = [(t, f.get(x)), (t, f.get(-x))];
            both.into_iter().take(if x == 0 { 1 } else { 2 })
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidParams(
            "need at least two points to fit".into(),
        ));
    }

    let profile = |tau: f64| {
        let (mut yg, mut gg) = (0.0, 0.0);
        for &(t, y) in &points {
            let g = (-t / tau).exp();
            yg += y * g;
            gg += g * g;
        }
        let amplitude = yg / gg;
        let rss: f64 = points
            .iter()
            .map(|&(t, y)| {
                let r = y - amplitude * (-t / tau).exp();
                r * r
            })
            .sum();
        (amplitude, rss)
    };

    let lo = (0.1 * dt0).ln();
    let hi = (100.0 * dt0 * max_lag.max(1) as f64).ln();
    const SCAN: usize = 400;
    let grid: Vec<f64> = (0..=SCAN)
        .map(|i| lo + (hi - lo) * i as f64 / SCAN as f64)
        .collect();
    let best = (0..=SCAN)
        .min_by(|&i, &j| {
            profile(grid[i].exp())
                .1
                .total_cmp(&profile(grid[j].exp()).1)
        })
        .expect("non-empty scan");

    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(SCAN)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if profile(c.exp()).1 < profile(d.exp()).1 {
            b = d;
        } else {
            a = c;
        }
    }
    let tau = ((a + b) / 2.0).exp();
    let (amplitude, rss) = profile(tau);
    Ok(ExpFit {
        amplitude,
        time_constant: tau,
        rss,
    })
}

fn check_compatible(ra: &ReturnSeries, rb: &ReturnSeries) -> Result<()> {
    if ra.dt() != rb.dt() || ra.stride() != rb.stride() || ra.t0() != rb.t0() {
        return Err(Error::GridMismatch(format!(
            "return series disagree: (t0, dt, stride) = ({}, {}, {}) vs ({}, {}, {})",
            ra.t0(),
            ra.dt(),
            ra.stride(),
            rb.t0(),
            rb.dt(),
            rb.stride()
        )));
    }
    Ok(())
}

fn nonzero_indices(x: &[f64]) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// `Σ x[i]·y[i+lag]` over every `i` where both indices are valid, summed in
/// ascending `i`, and the number of such `i`.
fn cross_sum(x: &[f64], x_nonzero: &[usize], y: &[f64], lag: i64) -> (f64, usize) {
    let start = (-lag).max(0);
    let end = (y.len() as i64 - lag).min(x.len() as i64);
    if end <= start {
        return (0.0, 0);
    }
    let (start, end) = (start as usize, end as usize);
    let lo = x_nonzero.partition_point(|&i| i < start);
    let hi = x_nonzero.partition_point(|&i| i < end);
    let mut sum = 0.0;
    for &i in &x_nonzero[lo..hi] {
        sum += x[i] * y[(i as i64 + lag) as usize];
    }
    (sum, end - start)
}

const LAG_BLOCK: usize = 256;

/// [`cross_sum`] for every lag in `lo..=hi`. Each lag still accumulates in
/// ascending `i`, so the sums match the single-lag version bit for bit.
fn cross_sums(x: &[f64], x_nonzero: &[usize], y: &[f64], lo: i64, hi: i64) -> Vec<(f64, usize)> {
    let width = (hi - lo + 1) as usize;
    let mut sums = vec![0.0; width];
    let ny = y.len() as i64;
    for &i in x_nonzero {
        let i = i as i64;
        // y index i + lag must lie in 0..ny
        let first = lo.max(-i);
        let last = hi.min(ny - 1 - i);
        if first > last {
            continue;
        }
        let xi = x[i as usize];
        let ys = &y[(i + first) as usize..=(i + last) as usize];
        let acc = &mut sums[(first - lo) as usize..=(last - lo) as usize];
        for (s, yv) in acc.iter_mut().zip(ys) {
            *s += xi * yv;
        }
    }
    (lo..=hi)
        .zip(sums)
        .map(|(lag, sum)| {
            let start = (-lag).max(0);
            let end = (ny - lag).min(x.len() as i64);
            (sum, (end - start).max(0) as usize)
        })
        .collect()
}

fn mean_and_second(x: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len() as f64;
    let (sum, sum_sq) = x.iter().fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
    Ok((sum / n, sum_sq / n))
}

fn nonzero_variance(mean: f64, second: f64) -> Result<f64> {
    let var = second - mean * mean;
    if var <= 4.0 * f64::EPSILON * second {
        return Err(Error::ZeroVariance);
    }
    Ok(var)
}
