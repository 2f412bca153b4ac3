use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use epps_core::ingest::fixture::{synthetic_taq_pair, write_taq, SyntheticTaq};
use epps_core::*;
use serde_json::{json, Value};

use crate::output::{create_dir, num, opt, write_csv, write_meta};
use crate::{
    AnalysisArgs, Command, Common, DecayMode, DecomposeArgs, ExactArgs, ModelArgs, SimulateArgs,
    TickFormat,
};

const SIM_GRID: [u64; 5] = [1, 10, 60, 300, 1800];
const TICK_GRID: [u64; 6] = [120, 240, 600, 1200, 1800, 3600];
const EXACT_GRID: [u64; 7] = [1, 5, 15, 60, 300, 1800, 7200];

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Epps(a) => epps(a),
        Command::Decompose(a) => decompose(a),
        Command::Exact(a) => exact(a),
    }
}

fn model_params(model: &ModelArgs, seed: u64) -> Result<ModelParams> {
    let params = ModelParams {
        lambda: model.lambda,
        horizon: model.horizon,
        w0: model.w0,
        seed,
    };
    params.validate()?;
    Ok(params)
}

fn model_json(p: &ModelParams) -> Value {
    json!({ "lambda": p.lambda, "horizon": p.horizon, "w0": p.w0, "seed": p.seed })
}

fn check_grid(grid: &[u64], dt0: u64) -> Result<()> {
    if grid.is_empty() {
        bail!("--dt-grid is empty");
    }
    if let Some(&dt) = grid.iter().find(|&&dt| dt == 0 || !dt.is_multiple_of(dt0)) {
        return Err(Error::GridMismatch(format!(
            "dt={dt} s is not a positive multiple of dt0={dt0} s"
        ))
        .into());
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        bail!("--dt-grid must be strictly increasing");
    }
    Ok(())
}

fn grid_or(common: &Common, default: &[u64], dt0: u64) -> Result<Vec<u64>> {
    let grid = common.dt_grid.clone().unwrap_or_else(|| default.to_vec());
    check_grid(&grid, dt0)?;
    Ok(grid)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let out = &args.common.out;
    create_dir(out)?;
    let params = model_params(&args.model, args.common.seed)?;
    let (files, extra) = match args.format {
        TickFormat::Log => {
            let pair = simulate_pair(&params)?;
            let mut files = Vec::new();
            for (name, ticks) in [
                ("ticks_a.csv", &pair.ticks_a),
                ("ticks_b.csv", &pair.ticks_b),
            ] {
                let rows: Vec<Vec<String>> = ticks
                    .events()
                    .iter()
                    .map(|t| vec![num(t.time), num(t.value)])
                    .collect();
                files.push(write_csv(out, name, &["time_s", "log_price"], &rows)?);
            }
            (files, json!({}))
        }
        TickFormat::Taq => {
            let spec = SyntheticTaq {
                lambda: params.lambda,
                seed: params.seed,
                ..SyntheticTaq::default()
            };
            let dates: Vec<NaiveDate> = args
                .start_date
                .iter_days()
                .take(args.days as usize)
                .collect();
            let (a, b) = synthetic_taq_pair(&spec, &dates)?;
            let mut files = Vec::new();
            for (name, rows) in [("ticks_a.csv", &a), ("ticks_b.csv", &b)] {
                let path = out.join(name);
                let file = std::fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                write_taq(std::io::BufWriter::new(file), rows)
                    .with_context(|| format!("writing {}", path.display()))?;
                files.push(path);
            }
            let extra = json!({
                "days": args.days,
                "start_date": args.start_date.to_string(),
                "session_seconds": [spec.start_s, spec.end_s],
                "price0": spec.price0,
                "log_step": spec.log_step,
            });
            (files, extra)
        }
    };
    let format = match args.format {
        TickFormat::Log => "log",
        TickFormat::Taq => "taq",
    };
    let mut params_json = model_json(&params);
    params_json["format"] = json!(format);
    if let (Value::Object(p), Value::Object(e)) = (&mut params_json, extra) {
        p.extend(e);
    }
    write_meta(out, "simulate", "simulate", params_json, &files)
}

struct Measured {
    dt: u64,
    rho: Option<f64>,
    n_days: Option<usize>,
    stderr: Option<f64>,
}

/// dt0-scale statistics and measured curve, from either source.
struct Analysis {
    dt0: u64,
    input: DecompositionInput,
    measured: Vec<Measured>,
    from_ticks: bool,
    params: Value,
}

fn tick_paths(args: &AnalysisArgs) -> Option<(&Path, &Path)> {
    match (&args.ticks.ticks_a, &args.ticks.ticks_b) {
        (Some(a), Some(b)) => Some((a.as_path(), b.as_path())),
        _ => None,
    }
}

/// `sim_max_lag` is the decay length needed for a simulated source; tick
/// files use `--max-lag`.
fn analyse(args: &AnalysisArgs, sim_max_lag: impl Fn(&[u64], u64) -> usize) -> Result<Analysis> {
    let common = &args.common;
    if let Some((path_a, path_b)) = tick_paths(args) {
        let t = &args.ticks;
        let cfg = SessionConfig {
            session_start: t.session_start,
            session_end: t.session_end,
            split_filter_fraction: t.split_fraction,
            dt0: common.dt0.unwrap_or(120),
            max_decay_lag: t.max_lag,
        };
        cfg.validate()?;
        let grid = grid_or(common, &TICK_GRID, cfg.dt0)?;
        let a = parse_ticks(path_a, "A", &cfg)?;
        let b = parse_ticks(path_b, "B", &cfg)?;
        let out = daily_pipeline(&a, &b, &cfg, t.days.as_deref(), &grid)?;
        for s in &out.skipped {
            log::warn!("skipped {}: {}", s.date, s.reason);
        }
        let avg = average_stats(&out.stats)?;
        let measured = avg
            .measured
            .iter()
            .map(|p| Measured {
                dt: p.dt,
                rho: p.rho,
                n_days: Some(p.n_days),
                stderr: p.stderr,
            })
            .collect();
        let params = json!({
            "source": "ticks",
            "ticks_a": path_a,
            "ticks_b": path_b,
            "dt0": cfg.dt0,
            "dt_grid": grid,
            "session": [cfg.session_start, cfg.session_end],
            "split_fraction": cfg.split_filter_fraction,
            "max_lag": cfg.max_decay_lag,
            "days_used": out.stats.iter().map(|s| s.date.to_string()).collect::<Vec<_>>(),
            "days_skipped": out.skipped.iter().map(|s| json!({"date": s.date.to_string(), "reason": s.reason})).collect::<Vec<_>>(),
        });
        return Ok(Analysis {
            dt0: cfg.dt0,
            input: avg.input,
            measured,
            from_ticks: true,
            params,
        });
    }

    let dt0 = common.dt0.unwrap_or(1);
    if dt0 == 0 {
        bail!("--dt0 must be at least 1");
    }
    let grid = grid_or(common, &SIM_GRID, dt0)?;
    let params = model_params(&args.model, common.seed)?;
    let pair = simulate_pair(&params)?;
    let (a, b) = pair.to_grid(dt0)?;
    let measured = measure_epps(&a, &b, &grid, dt0)?
        .into_iter()
        .map(|p| Measured {
            dt: p.dt,
            rho: Some(p.rho),
            n_days: None,
            stderr: None,
        })
        .collect();
    let ra = returns(&a, dt0, dt0)?;
    let rb = returns(&b, dt0, dt0)?;
    let max_lag = sim_max_lag(&grid, dt0).min((ra.len() - 1) / 2);
    let input = DecompositionInput::new(
        equal_time_rho(&ra, &rb)?,
        decay_function(&ra, &rb, max_lag)?,
        decay_function(&ra, &ra, max_lag)?,
        decay_function(&rb, &rb, max_lag)?,
    )?;
    let mut params = model_json(&params);
    params["source"] = json!("simulation");
    params["dt0"] = json!(dt0);
    params["dt_grid"] = json!(grid);
    Ok(Analysis {
        dt0,
        input,
        measured,
        from_ticks: false,
        params,
    })
}

fn epps(args: AnalysisArgs) -> Result<()> {
    create_dir(&args.common.out)?;
    let an = analyse(&args, |_, _| 0)?;
    let rows: Vec<Vec<String>> = an
        .measured
        .iter()
        .map(|m| {
            vec![
                m.dt.to_string(),
                opt(m.rho),
                m.n_days.map(|n| n.to_string()).unwrap_or_default(),
                opt(m.stderr),
            ]
        })
        .collect();
    let out = &args.common.out;
    let file = write_csv(out, "epps.csv", &["dt_s", "rho", "n_days", "stderr"], &rows)?;
    write_meta(out, "epps", "epps", an.params, &[file])
}

fn decompose(args: DecomposeArgs) -> Result<()> {
    let out = args.analysis.common.out.clone();
    create_dir(&out)?;
    // the kernel at dt reaches lag dt/dt0 - 1
    let an = analyse(&args.analysis, |grid, dt0| {
        grid.iter()
            .map(|&dt| (dt / dt0) as usize)
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    })?;
    let mode = args.decay.unwrap_or(if an.from_ticks {
        DecayMode::Truncated
    } else {
        DecayMode::Raw
    });
    let input = match mode {
        DecayMode::Raw => an.input.clone(),
        DecayMode::Truncated => an.input.with_decays(
            truncate_decay(an.input.f_ab(), DecayKind::Cross),
            truncate_decay(an.input.f_aa(), DecayKind::Auto),
            truncate_decay(an.input.f_bb(), DecayKind::Auto),
        )?,
    };
    let reach = input.f_ab().max_lag() as u64;
    let mut rows = Vec::new();
    for m in &an.measured {
        let dt = m.dt;
        if dt / an.dt0 > reach + 1 {
            log::info!(
                "dt={dt} s needs lags beyond the measured {reach}; missing lags count as zero"
            );
        }
        let predicted = match predict_rho(&input, dt) {
            Ok(r) => Some(r),
            Err(e @ Error::NonPositiveKernel { .. }) => {
                log::warn!("no prediction at dt={dt} s: {e}");
                None
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(vec![dt.to_string(), opt(m.rho), opt(predicted)]);
    }
    let main = write_csv(
        &out,
        "decompose.csv",
        &["dt_s", "rho_measured", "rho_predicted"],
        &rows,
    )?;
    let decay_rows: Vec<Vec<String>> = input
        .f_ab()
        .lags()
        .map(|(x, f)| {
            vec![
                x.to_string(),
                num(f),
                num(input.f_aa().get(x)),
                num(input.f_bb().get(x)),
            ]
        })
        .collect();
    let decay = write_csv(
        &out,
        "decay.csv",
        &["lag", "f_ab", "f_aa", "f_bb"],
        &decay_rows,
    )?;

    let mut params = an.params;
    params["decay"] = json!(match mode {
        DecayMode::Raw => "raw",
        DecayMode::Truncated => "truncated",
    });
    params["rho0"] = json!(input.rho0());
    write_meta(&out, "decompose", "decompose", params, &[main, decay])
}

fn exact(args: ExactArgs) -> Result<()> {
    let common = &args.common;
    let dt0 = common.dt0.unwrap_or(1);
    if dt0 == 0 {
        bail!("--dt0 must be at least 1");
    }
    let grid = grid_or(common, &EXACT_GRID, dt0)?;
    create_dir(&common.out)?;
    let lambda = args.lambda;
    let rows: Vec<Vec<String>> = grid
        .iter()
        .map(|&dt| {
            let dt = dt as f64;
            vec![
                num(dt),
                num(exact_model_rho(lambda, dt)),
                num(exact_ratio(lambda, dt, dt0 as f64)),
                num(exp_ratio_approx(lambda, dt, dt0 as f64)),
            ]
        })
        .collect();
    let file: PathBuf = write_csv(
        &common.out,
        "exact.csv",
        &["dt_s", "rho_exact", "ratio_exact", "ratio_approx"],
        &rows,
    )?;
    let params = json!({ "lambda": lambda, "dt0": dt0, "dt_grid": grid, "seed": common.seed });
    write_meta(&common.out, "exact", "exact", params, &[file])
}
