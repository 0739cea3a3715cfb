//! Time-stepping kernels shared by every dynamical module.
//!
//! All state variables are advanced with fixed-step explicit Euler. The
//! closed-form relaxations here are the exact solutions of the two scalar
//! ODE shapes that appear throughout the model, and double as test oracles.
//! Time is measured in abstract time units; every rate constant is per unit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default integration step in time units.
pub const DEFAULT_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum NumericError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("elapsed time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("rate must be non-negative, got {0}")]
    NegativeRate(f64),
}

/// Fixed step plus accumulated simulation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStep {
    pub dt: f64,
    pub t: f64,
}

impl TimeStep {
    pub fn new(dt: f64) -> Result<Self, NumericError> {
        if !dt.is_finite() {
            return Err(NumericError::NonFinite("dt"));
        }
        if dt <= 0.0 {
            return Err(NumericError::NonPositiveStep(dt));
        }
        Ok(Self { dt, t: 0.0 })
    }

    /// Advances the clock by one step and returns the new time.
    pub fn advance(&mut self) -> f64 {
        self.t += self.dt;
        self.t
    }

    /// Number of whole steps needed to cover `duration`.
    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.dt).round().max(0.0) as usize
    }
}

impl Default for TimeStep {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, t: 0.0 }
    }
}

/// One explicit Euler step: `x + dxdt * dt`.
pub fn euler_step(x: f64, dxdt: f64, dt: f64) -> Result<f64, NumericError> {
    if !x.is_finite() {
        return Err(NumericError::NonFinite("x"));
    }
    if !dxdt.is_finite() {
        return Err(NumericError::NonFinite("dxdt"));
    }
    if !dt.is_finite() {
        return Err(NumericError::NonFinite("dt"));
    }
    if dt <= 0.0 {
        return Err(NumericError::NonPositiveStep(dt));
    }
    Ok(x + dxdt * dt)
}

fn check_rate_time(rate: f64, t: f64) -> Result<(), NumericError> {
    if !rate.is_finite() {
        return Err(NumericError::NonFinite("rate"));
    }
    if rate < 0.0 {
        return Err(NumericError::NegativeRate(rate));
    }
    if t.is_nan() {
        return Err(NumericError::NonFinite("t"));
    }
    if t < 0.0 {
        return Err(NumericError::NegativeTime(t));
    }
    Ok(())
}

/// Exact solution of `dx/dt = rate * (target - x)` after time `t`.
///
/// `t = f64::INFINITY` is accepted and returns `target` for any positive rate.
pub fn exp_relax(x0: f64, target: f64, rate: f64, t: f64) -> Result<f64, NumericError> {
    check_rate_time(rate, t)?;
    if x0 == target {
        return Ok(target);
    }
    Ok(target + (x0 - target) * decay_factor(rate, t))
}

/// Exact solution of `dx/dt = -rate * x` after time `t`.
pub fn exp_decay(x0: f64, rate: f64, t: f64) -> Result<f64, NumericError> {
    check_rate_time(rate, t)?;
    if x0 == 0.0 {
        return Ok(0.0);
    }
    Ok(x0 * decay_factor(rate, t))
}

// e^{-rate t}, with 0 * inf treated as no decay.
fn decay_factor(rate: f64, t: f64) -> f64 {
    if rate == 0.0 {
        1.0
    } else {
        (-rate * t).exp()
    }
}

/// Clamps `x` into `[lo, hi]`, mapping NaN to `lo`.
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x.is_nan() {
        lo
    } else {
        x.max(lo).min(hi)
    }
}

/// Relative error `|a - b| / |b|`, falling back to absolute error near zero.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = b.abs();
    if scale < 1e-300 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
