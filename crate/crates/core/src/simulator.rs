//! Toy model of two asynchronously observed prices: a per-second ±1 random
//! walk sampled by two independent Poisson processes, plus a Monte Carlo
//! estimate of the return cross-moment that the closed-form solution
//! predicts.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, stream)`,
//! so each generated component is reproducible on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::series::{resample_to_grid, PriceScale, RegularSeries, Tick, TickSeries};

/// Stream ids for the components of one simulation.
pub mod stream {
    pub const WALK: u64 = 0;
    pub const SAMPLER_A: u64 = 1;
    pub const SAMPLER_B: u64 = 2;
    /// Monte Carlo chunks use `MC_BASE + chunk_index`.
    pub const MC_BASE: u64 = 1 << 32;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Event rate of each sampler, per second.
    pub lambda: f64,
    /// Simulated seconds.
    pub horizon: u64,
    /// Initial walk level.
    pub w0: i64,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(lambda: f64, horizon: u64, seed: u64) -> Result<Self> {
        let params = Self {
            lambda,
            horizon,
            w0: 0,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParams(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.horizon == 0 || (self.horizon as f64) < 1.0 / self.lambda {
            return Err(Error::InvalidParams(format!(
                "horizon {} must be at least 1 s and at least 1/lambda = {}",
                self.horizon,
                1.0 / self.lambda
            )));
        }
        Ok(())
    }
}

/// `levels[t] = levels[t-1] + steps[t-1]` for integer seconds `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreWalk {
    steps: Vec<i8>,
    levels: Vec<i64>,
}

impl CoreWalk {
    pub fn from_levels(levels: Vec<i64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidSeries("walk needs at least 2 levels".into()));
        }
        let steps = levels
            .windows(2)
            .map(|w| match w[1] - w[0] {
                1 => Ok(1),
                -1 => Ok(-1),
                d => Err(Error::InvalidSeries(format!("walk step {d} is not ±1"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { steps, levels })
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    pub fn levels(&self) -> &[i64] {
        &self.levels
    }

    pub fn horizon(&self) -> u64 {
        self.steps.len() as u64
    }

    /// Walk level at the last whole second at or before `t`.
    pub fn level_at(&self, t: f64) -> i64 {
        self.levels[t.floor() as usize]
    }
}

pub fn gen_core_walk(params: &ModelParams) -> Result<CoreWalk> {
    if params.horizon == 0 {
        return Err(Error::InvalidParams("horizon must be at least 1 s".into()));
    }
    let mut rng = stream_rng(params.seed, stream::WALK);
    let n = params.horizon as usize;
    let mut steps = Vec::with_capacity(n);
    let mut levels = Vec::with_capacity(n + 1);
    let mut level = params.w0;
    levels.push(level);
    for _ in 0..n {
        let step: i8 = if rng.random::<bool>() { 1 } else { -1 };
        level += step as i64;
        steps.push(step);
        levels.push(level);
    }
    Ok(CoreWalk { steps, levels })
}

/// Poisson event times on `(0, horizon]` with i.i.d. exponential gaps.
pub fn gen_poisson_times(lambda: f64, horizon: f64, seed: u64, stream: u64) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, stream);
    poisson_times(lambda, horizon, &mut rng)
}

pub fn poisson_times<R: Rng + ?Sized>(lambda: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    let exp = Exp::new(lambda)
        .map_err(|_| Error::InvalidParams(format!("lambda must be positive, got {lambda}")))?;
    let mut times = Vec::with_capacity((lambda * horizon * 1.1) as usize + 8);
    let mut t = 0.0;
    loop {
        let next = t + rng.sample(exp);
        if next <= t {
            // zero-length gap; redraw to keep times strictly increasing
            continue;
        }
        if next > horizon {
            break;
        }
        times.push(next);
        t = next;
    }
    Ok(times)
}

/// Observes the walk at each event: the tick at time `ω` carries the
/// log-price `W(⌊ω⌋)`.
pub fn sample_walk(
    walk: &CoreWalk,
    events: &[f64],
    instrument_id: impl Into<String>,
) -> Result<TickSeries> {
    let horizon = walk.horizon();
    let mut ticks = Vec::with_capacity(events.len());
    for &time in events {
        if !(time >= 0.0 && time <= horizon as f64) {
            return Err(Error::EventBeyondHorizon { time, horizon });
        }
        ticks.push(Tick {
            time,
            value: walk.level_at(time) as f64,
        });
    }
    TickSeries::new(instrument_id, PriceScale::Log, ticks)
}

/// One run of the model: the shared walk and both sampled series.
#[derive(Debug, Clone)]
pub struct SimulatedPair {
    pub walk: CoreWalk,
    pub ticks_a: TickSeries,
    pub ticks_b: TickSeries,
}

impl SimulatedPair {
    /// Both series on a shared `dt0` grid. The grid starts at the first
    /// multiple of `dt0` strictly after both first ticks and runs to the
    /// horizon.
    pub fn to_grid(&self, dt0: u64) -> Result<(RegularSeries, RegularSeries)> {
        if dt0 == 0 {
            return Err(Error::InvalidGrid("dt0 must be at least 1".into()));
        }
        let (Some(fa), Some(fb)) = (self.ticks_a.events().first(), self.ticks_b.events().first())
        else {
            return Err(Error::EmptyInput);
        };
        let t0 = crate::ingest::anchor_grid(0, dt0, fa.time, fb.time);
        let horizon = self.walk.horizon() as i64;
        if t0 > horizon {
            return Err(Error::InvalidGrid(format!(
                "no grid point of {dt0} s after the first ticks within the horizon {horizon}"
            )));
        }
        let n = ((horizon - t0) / dt0 as i64) as usize + 1;
        let a = resample_to_grid(&self.ticks_a, t0, dt0, n)?;
        let b = resample_to_grid(&self.ticks_b, t0, dt0, n)?;
        Ok((a, b))
    }
}

pub fn simulate_pair(params: &ModelParams) -> Result<SimulatedPair> {
    params.validate()?;
    let walk = gen_core_walk(params)?;
    let horizon = params.horizon as f64;
    let times_a = gen_poisson_times(params.lambda, horizon, params.seed, stream::SAMPLER_A)?;
    let times_b = gen_poisson_times(params.lambda, horizon, params.seed, stream::SAMPLER_B)?;
    let ticks_a = sample_walk(&walk, &times_a, "A")?;
    let ticks_b = sample_walk(&walk, &times_b, "B")?;
    Ok(SimulatedPair {
        walk,
        ticks_a,
        ticks_b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// `None` when fewer than two trials were run.
    pub std_error: Option<f64>,
    pub n_trials: usize,
}

const MC_CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of `E|[γA(t-Δt), γA(t)] ∩ [γB(t-Δt), γB(t)]|`.
///
/// For each sampler the age at `t` and the age at `t - dt` are independent
/// exponential(λ) draws (memorylessness). When the age at `t` exceeds `dt`
/// no event fell inside the window and the interval is empty.
pub fn overlap_expectation_mc(
    lambda: f64,
    dt: f64,
    n_trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if n_trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    let exp = Exp::new(lambda)
        .map_err(|_| Error::InvalidParams(format!("lambda must be positive, got {lambda}")))?;

    let n_chunks = n_trials.div_ceil(MC_CHUNK);
    let partials: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, stream::MC_BASE + chunk as u64);
            let len = MC_CHUNK.min(n_trials - chunk * MC_CHUNK);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..len {
                let a = window_interval(&mut rng, exp, dt);
                let b = window_interval(&mut rng, exp, dt);
                let overlap = match (a, b) {
                    (Some((sa, ea)), Some((sb, eb))) => (ea.min(eb) - sa.max(sb)).max(0.0),
                    _ => 0.0,
                };
                sum += overlap;
                sum_sq += overlap * overlap;
            }
            (sum, sum_sq)
        })
        .collect();

    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(s, q), &(ps, pq)| (s + ps, q + pq));
    let n = n_trials as f64;
    let mean = sum / n;
    let std_error = (n_trials > 1).then(|| {
        let var = (sum_sq - n * mean * mean).max(0.0) / (n - 1.0);
        (var / n).sqrt()
    });
    Ok(McEstimate {
        mean,
        std_error,
        n_trials,
    })
}

/// `[γ(t-dt), γ(t)]` relative to `t = 0`, or `None` if it is empty.
fn window_interval<R: Rng>(rng: &mut R, exp: Exp<f64>, dt: f64) -> Option<(f64, f64)> {
    let age_end = rng.sample(exp);
    let age_start = rng.sample(exp);
    (age_end < dt).then(|| (-dt - age_start, -age_end))
}
