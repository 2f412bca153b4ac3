//! Correlations across sampling scales.
//!
//! A `dt`-return is the sum of `n = dt/dt0` consecutive `dt0`-returns, so
//! its second moments are triangular-kernel sums of `dt0` lagged moments.
//! [`predict_rho`] uses that to extrapolate `ρ(dt0)` to any multiple of
//! `dt0`. The rest of the module is the closed-form solution for the
//! Poisson-sampled random walk and its small-`λ·dt0` approximation.

use crate::error::{Error, Result};
use crate::series::DecayFunction;

/// Short-scale statistics needed to predict the correlation at coarser
/// scales.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionInput {
    rho0: f64,
    dt0: u64,
    f_ab: DecayFunction,
    f_aa: DecayFunction,
    f_bb: DecayFunction,
}

impl DecompositionInput {
    pub fn new(
        rho0: f64,
        f_ab: DecayFunction,
        f_aa: DecayFunction,
        f_bb: DecayFunction,
    ) -> Result<Self> {
        let dt0 = f_ab.dt0();
        if f_aa.dt0() != dt0 || f_bb.dt0() != dt0 {
            return Err(Error::GridMismatch(format!(
                "decay functions disagree on dt0: {}, {}, {}",
                dt0,
                f_aa.dt0(),
                f_bb.dt0()
            )));
        }
        if !rho0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "rho0 must be finite, got {rho0}"
            )));
        }
        Ok(Self {
            rho0,
            dt0,
            f_ab,
            f_aa,
            f_bb,
        })
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn dt0(&self) -> u64 {
        self.dt0
    }

    pub fn f_ab(&self) -> &DecayFunction {
        &self.f_ab
    }

    pub fn f_aa(&self) -> &DecayFunction {
        &self.f_aa
    }

    pub fn f_bb(&self) -> &DecayFunction {
        &self.f_bb
    }

    /// Same statistics with the decay functions replaced.
    pub fn with_decays(
        &self,
        f_ab: DecayFunction,
        f_aa: DecayFunction,
        f_bb: DecayFunction,
    ) -> Result<Self> {
        Self::new(self.rho0, f_ab, f_aa, f_bb)
    }
}

/// `Σ_{x=-n+1}^{n-1} (n - |x|) f(x)`, summed in ascending `x`. Lags beyond
/// the stored range contribute nothing.
pub fn kernel_sum(f: &DecayFunction, n: u64) -> f64 {
    let n = n as i64;
    let reach = (n - 1).min(f.max_lag() as i64);
    (-reach..=reach)
        .map(|x| (n - x.abs()) as f64 * f.get(x))
        .sum()
}

/// Kernel sums behind one prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSums {
    pub cross: f64,
    pub auto_a: f64,
    pub auto_b: f64,
}

impl KernelSums {
    pub fn compute(input: &DecompositionInput, dt: u64) -> Result<Self> {
        let n = ratio_of_scales(dt, input.dt0)?;
        let sums = Self {
            cross: kernel_sum(&input.f_ab, n),
            auto_a: kernel_sum(&input.f_aa, n),
            auto_b: kernel_sum(&input.f_bb, n),
        };
        for sum in [sums.auto_a, sums.auto_b] {
            if sum.is_nan() || sum <= 0.0 {
                return Err(Error::NonPositiveKernel { dt, sum });
            }
        }
        Ok(sums)
    }

    /// `ρ(dt) / ρ(dt0)`.
    pub fn ratio(&self) -> f64 {
        self.cross / (self.auto_a * self.auto_b).sqrt()
    }
}

/// Predicted `ρ(dt)` from `dt0`-scale statistics. The result is not clamped;
/// values outside `[-1, 1]` are logged as a warning with the kernel sums.
pub fn predict_rho(input: &DecompositionInput, dt: u64) -> Result<f64> {
    let sums = KernelSums::compute(input, dt)?;
    let rho = sums.ratio() * input.rho0;
    if !(-1.0..=1.0).contains(&rho) {
        log::warn!(
            "predicted rho={rho} at dt={dt} s is outside [-1, 1] (rho0={}, kernels {:?})",
            input.rho0,
            sums
        );
    }
    Ok(rho)
}

fn ratio_of_scales(dt: u64, dt0: u64) -> Result<u64> {
    if dt == 0 || !dt.is_multiple_of(dt0) {
        return Err(Error::GridMismatch(format!(
            "dt={dt} s is not a positive multiple of dt0={dt0} s"
        )));
    }
    Ok(dt / dt0)
}

/// Largest `λ·dt0` for which [`exp_ratio_approx`] is used without a warning.
pub const APPROX_LAMBDA_DT0_LIMIT: f64 = 0.05;

/// Small-`λ·dt0` closed form of `ρ(dt)/ρ(dt0)` for an exponential
/// cross-decay and delta autocorrelations.
pub fn exp_ratio_approx(lambda: f64, dt: f64, dt0: f64) -> f64 {
    if lambda * dt0 > APPROX_LAMBDA_DT0_LIMIT {
        log::warn!(
            "lambda*dt0 = {} exceeds {APPROX_LAMBDA_DT0_LIMIT}; approximation degrades",
            lambda * dt0
        );
    }
    2.0 / (lambda * dt0) + 2.0 / (lambda * lambda * dt * dt0) * (-lambda * dt).exp_m1()
}

/// Exact `ρ(dt) = 1 + (e^{-λ dt} - 1)/(λ dt)` for the Poisson-sampled
/// Brownian walk.
pub fn exact_model_rho(lambda: f64, dt: f64) -> f64 {
    let y = lambda * dt;
    if y < 1e-3 {
        // Σ_{k≥1} (-1)^{k+1} y^k / (k+1)!
        let mut term = y / 2.0;
        let mut sum = 0.0;
        for k in 1..12 {
            sum += term;
            term *= -y / (k as f64 + 2.0);
        }
        sum
    } else {
        1.0 + (-y).exp_m1() / y
    }
}

/// `ρ(dt) / ρ(dt0)` from [`exact_model_rho`].
pub fn exact_ratio(lambda: f64, dt: f64, dt0: f64) -> f64 {
    if dt == dt0 {
        return 1.0;
    }
    exact_model_rho(lambda, dt) / exact_model_rho(lambda, dt0)
}

/// Densities of the minimum and the maximum of two independent
/// exponential(λ) variables, evaluated at `x`.
pub fn minmax_exponential_density(x: f64, lambda: f64) -> Result<(f64, f64)> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeArgument(x));
    }
    let min = 2.0 * lambda * (-2.0 * lambda * x).exp();
    // e^{-λx} - e^{-2λx} = e^{-λx}(1 - e^{-λx})
    let max = -2.0 * lambda * (-lambda * x).exp() * (-lambda * x).exp_m1();
    Ok((min, max))
}
