use chrono::NaiveDate;
use epps_core::ingest::fixture::{synthetic_taq_pair, write_taq, SyntheticTaq, TaqRow};
use epps_core::ingest::parse_ticks_from_reader;
use epps_core::*;

fn dates(n: usize) -> Vec<NaiveDate> {
    let first = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
    first.iter_days().take(n).collect()
}

fn load(rows: &[TaqRow], id: &str, cfg: &SessionConfig) -> TickSeries {
    let mut buf = Vec::new();
    write_taq(&mut buf, rows).unwrap();
    parse_ticks_from_reader(buf.as_slice(), "mem", id, cfg).unwrap()
}

/// Lags kept on each side of the truncated, day-averaged cross decay.
fn truncated_support(spec: &SyntheticTaq, n_days: usize, cfg: &SessionConfig) -> (usize, usize) {
    let (a, b) = synthetic_taq_pair(spec, &dates(n_days)).unwrap();
    let (a, b) = (load(&a, "A", cfg), load(&b, "B", cfg));
    let out = daily_pipeline(&a, &b, cfg, None, &[cfg.dt0]).unwrap();
    assert_eq!(out.stats.len(), n_days);
    let avg = average_stats(&out.stats).unwrap();
    let t = truncate_decay(avg.input.f_ab(), DecayKind::Cross);
    let m = t.max_lag() as i64;
    let side = |sign: i64| (1..=m).take_while(|&x| t.get(sign * x) != 0.0).count();
    (side(1), side(-1))
}

fn half_minute() -> SessionConfig {
    SessionConfig {
        dt0: 30,
        ..SessionConfig::default()
    }
}

#[test]
fn truncated_cross_decay_support_default_fixture() {
    let (pos, neg) = truncated_support(&SyntheticTaq::default(), 10, &half_minute());
    assert!((2..=10).contains(&pos), "positive side support {pos}");
    assert!((2..=10).contains(&neg), "negative side support {neg}");
}

#[test]
fn truncated_cross_decay_support_ensemble_median() {
    let mut sides: Vec<usize> = (1..=12u64)
        .flat_map(|s| {
            let spec = SyntheticTaq {
                seed: s * 1000,
                ..SyntheticTaq::default()
            };
            let (p, n) = truncated_support(&spec, 10, &half_minute());
            [p, n]
        })
        .collect();
    sides.sort_unstable();
    let median = sides[sides.len() / 2];
    assert!(
        (2..=10).contains(&median),
        "median support {median}, all {sides:?}"
    );
}

#[test]
fn identical_days_give_identical_stats() {
    let cfg = SessionConfig::default();
    let d = dates(2);
    let (a, b) = synthetic_taq_pair(&SyntheticTaq::default(), &d[..1]).unwrap();
    let shift = |rows: &[TaqRow]| {
        let mut all = rows.to_vec();
        all.extend(rows.iter().map(|r| TaqRow { date: d[1], ..*r }));
        all
    };
    let (a, b) = (load(&shift(&a), "A", &cfg), load(&shift(&b), "B", &cfg));
    let out = daily_pipeline(&a, &b, &cfg, None, &[120, 600]).unwrap();
    assert_eq!(out.stats.len(), 2);
    let (s0, s1) = (&out.stats[0], &out.stats[1]);
    assert_eq!(s0.rho0.to_bits(), s1.rho0.to_bits());
    assert_eq!(s0.decay_ab, s1.decay_ab);
    assert_eq!(s0.epps, s1.epps);

    let avg = average_stats(&out.stats).unwrap();
    assert_eq!(avg.input.rho0(), s0.rho0);
    assert_eq!(avg.input.f_ab(), &s0.decay_ab);
    assert!(avg
        .measured
        .iter()
        .all(|p| p.n_days == 2 && p.stderr == Some(0.0)));
}

#[test]
fn day_without_trades_in_one_instrument_is_skipped() {
    let cfg = SessionConfig::default();
    let d = dates(3);
    let (a, b) = synthetic_taq_pair(&SyntheticTaq::default(), &d).unwrap();
    let b: Vec<TaqRow> = b.into_iter().filter(|r| r.date != d[1]).collect();
    let (a, b) = (load(&a, "A", &cfg), load(&b, "B", &cfg));
    let out = daily_pipeline(&a, &b, &cfg, None, &[120]).unwrap();
    assert_eq!(
        out.stats.iter().map(|s| s.date).collect::<Vec<_>>(),
        [d[0], d[2]]
    );
    assert_eq!(out.skipped.len(), 1);
    assert_eq!(out.skipped[0].date, d[1]);
    assert!(
        out.skipped[0].reason.contains('B'),
        "{}",
        out.skipped[0].reason
    );
}

#[test]
fn restricting_days_selects_them() {
    let cfg = SessionConfig::default();
    let d = dates(3);
    let (a, b) = synthetic_taq_pair(&SyntheticTaq::default(), &d).unwrap();
    let (a, b) = (load(&a, "A", &cfg), load(&b, "B", &cfg));
    let all = daily_pipeline(&a, &b, &cfg, None, &[120]).unwrap();
    let one = daily_pipeline(&a, &b, &cfg, Some(&d[2..]), &[120]).unwrap();
    assert_eq!(one.stats, all.stats[2..]);
}

#[test]
fn grid_mismatch_is_rejected() {
    let cfg = SessionConfig::default();
    let (a, b) = synthetic_taq_pair(&SyntheticTaq::default(), &dates(1)).unwrap();
    let (a, b) = (load(&a, "A", &cfg), load(&b, "B", &cfg));
    let err = daily_pipeline(&a, &b, &cfg, None, &[120, 150]).unwrap_err();
    assert!(matches!(err, Error::GridMismatch(_)), "{err}");
}

#[test]
fn pipeline_is_deterministic() {
    let cfg = SessionConfig::default();
    let (a, b) = synthetic_taq_pair(&SyntheticTaq::default(), &dates(4)).unwrap();
    let run = || {
        let (a, b) = (load(&a, "A", &cfg), load(&b, "B", &cfg));
        daily_pipeline(&a, &b, &cfg, None, &[120, 240, 1200]).unwrap()
    };
    let (x, y) = (run(), run());
    assert_eq!(x.stats.len(), y.stats.len());
    for (s, t) in x.stats.iter().zip(&y.stats) {
        assert_eq!(s.rho0.to_bits(), t.rho0.to_bits());
        let bits = |f: &DecayFunction| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&s.decay_ab), bits(&t.decay_ab));
        assert_eq!(bits(&s.decay_aa), bits(&t.decay_aa));
        assert_eq!(bits(&s.decay_bb), bits(&t.decay_bb));
        assert_eq!(s.epps, t.epps);
    }
}

#[test]
fn simulated_grid_starts_after_both_first_ticks() {
    let params = ModelParams {
        lambda: 1.0 / 60.0,
        horizon: 20_000,
        w0: 3,
        seed: 11,
    };
    let pair = simulate_pair(&params).unwrap();
    for dt0 in [1, 7, 60] {
        let (a, b) = pair.to_grid(dt0).unwrap();
        let first = pair.ticks_a.events()[0]
            .time
            .max(pair.ticks_b.events()[0].time);
        assert!(a.t0() as f64 > first && (a.t0() - dt0 as i64) as f64 <= first);
        assert_eq!(a.t0() % dt0 as i64, 0);
        assert_eq!(a.values().len(), b.values().len());
        assert!(a.time_at(a.values().len() - 1) <= 20_000);
        assert!(a.time_at(a.values().len() - 1) + dt0 as i64 > 20_000);
        // the walk level is an integer and the tick carries it exactly
        assert!(a.values().iter().all(|v| v.fract() == 0.0));
    }
    let short = simulate_pair(&ModelParams {
        horizon: 100,
        ..params
    })
    .unwrap();
    assert!(short.to_grid(1000).is_err());
}
