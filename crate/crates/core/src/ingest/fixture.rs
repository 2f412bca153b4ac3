//! Synthetic TAQ-style trade files built from the simulator, for tests and
//! demos of the empirical pipeline.

use std::io::{self, Write};

use chrono::NaiveDate;

use crate::error::Result;
use crate::simulator::{simulate_pair, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaqRow {
    pub date: NaiveDate,
    pub time_s: f64,
    pub price: f64,
}

/// Parameters for one synthetic trading day per date.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTaq {
    pub lambda: f64,
    /// First simulated second of each day, since midnight.
    pub start_s: u64,
    /// Last simulated second of each day, since midnight.
    pub end_s: u64,
    pub price0: f64,
    /// Log-price change per walk step.
    pub log_step: f64,
    pub seed: u64,
}

impl Default for SyntheticTaq {
    fn default() -> Self {
        Self {
            lambda: 1.0 / 60.0,
            start_s: 9 * 3600,
            end_s: 16 * 3600 + 1800,
            price0: 50.0,
            log_step: 5e-4,
            seed: 1,
        }
    }
}

/// Rows for instruments A and B. Day `i` uses seed `seed + i`, so adding
/// dates never changes earlier days.
pub fn synthetic_taq_pair(
    spec: &SyntheticTaq,
    dates: &[NaiveDate],
) -> Result<(Vec<TaqRow>, Vec<TaqRow>)> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, &date) in dates.iter().enumerate() {
        let params = ModelParams {
            lambda: spec.lambda,
            horizon: spec.end_s - spec.start_s,
            w0: 0,
            seed: spec.seed.wrapping_add(i as u64),
        };
        let pair = simulate_pair(&params)?;
        for (ticks, rows) in [(&pair.ticks_a, &mut a), (&pair.ticks_b, &mut b)] {
            rows.extend(ticks.events().iter().map(|t| TaqRow {
                date,
                time_s: spec.start_s as f64 + t.time,
                price: spec.price0 * (spec.log_step * t.value).exp(),
            }));
        }
    }
    Ok((a, b))
}

/// Multiplies the prices of `len` consecutive rows of `date`, starting at
/// the `first`-th row of that day, by `factor`. Returns the affected
/// indices into `rows`.
pub fn inject_price_block(
    rows: &mut [TaqRow],
    date: NaiveDate,
    first: usize,
    len: usize,
    factor: f64,
) -> Vec<usize> {
    let idx: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.date == date)
        .map(|(i, _)| i)
        .skip(first)
        .take(len)
        .collect();
    for &i in &idx {
        rows[i].price *= factor;
    }
    idx
}

pub fn write_taq<W: Write>(mut w: W, rows: &[TaqRow]) -> io::Result<()> {
    writeln!(w, "date,time_s,price")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.6}",
            r.date.format("%Y-%m-%d"),
            r.time_s,
            r.price
        )?;
    }
    w.flush()
}

/// The two-day fixture bundled with the test suite: prices of instrument A
/// are halved for five consecutive trades on the second day.
pub struct SplitFixture {
    pub rows_a: Vec<TaqRow>,
    pub rows_b: Vec<TaqRow>,
    /// `(date, time_s)` of every halved trade of A.
    pub injected: Vec<(NaiveDate, f64)>,
}

pub fn two_day_split_fixture() -> Result<SplitFixture> {
    let dates = [
        NaiveDate::from_ymd_opt(2024, 3, 4).expect("valid date"),
        NaiveDate::from_ymd_opt(2024, 3, 5).expect("valid date"),
    ];
    let spec = SyntheticTaq {
        seed: 20_240_304,
        ..SyntheticTaq::default()
    };
    let (mut rows_a, rows_b) = synthetic_taq_pair(&spec, &dates)?;
    let idx = inject_price_block(&mut rows_a, dates[1], 150, 5, 0.5);
    let injected = idx
        .iter()
        .map(|&i| (rows_a[i].date, rows_a[i].time_s))
        .collect();
    Ok(SplitFixture {
        rows_a,
        rows_b,
        injected,
    })
}
