//! Single-neuron dynamics: charge accumulation and firing, per-dendrite EPSP
//! traces, channel fatigue and recovery, and the LTP/LTD stimulus signals
//! handed to the synapse model.
//!
//! Two execution modes share one parameter set. In event mode presynaptic
//! spikes arrive as discrete impulses ([`epsp_spike`]) and the neuron fires
//! by integrating charge past `c0`. In rate mode inputs are continuous
//! frequencies ([`epsp_step`]) and the firing rate is read directly from
//! [`rate_transfer`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{clamp, exp_decay};
use crate::ParamError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuronError {
    #[error("drive must be non-negative, got {0}")]
    NegativeDrive(f64),
    #[error("elapsed time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("contract violation: {0}")]
    Contract(&'static str),
}

/// Neuron constants. The original model reuses `c_i` names across
/// equations; each constant here carries a distinct name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeuronParams {
    /// Firing threshold on accumulated charge.
    pub c0: f64,
    /// Maximum charge rate.
    pub c1: f64,
    /// Drive sensitivity of the charge rate.
    pub c2: f64,
    /// EPSP growth per unit of `w_eff * f_in`.
    pub c3_epsp: f64,
    /// EPSP decay rate.
    pub c4_epsp: f64,
    /// LTP gain.
    pub c5: f64,
    /// Channel recovery rate.
    pub c6_chan: f64,
    /// Channel activation ceiling.
    pub c7: f64,
    /// LTD gain.
    pub c8: f64,
    /// Partial-fatigue coefficient for subthreshold EPSPs.
    pub k_fatigue: f64,
    /// Refractory duration after a spike.
    pub refractory: f64,
    /// Time constant of the firing-rate estimator.
    pub rate_tau: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3_epsp: 1.0,
            c4_epsp: 0.1,
            c5: 1.0,
            c6_chan: 5.0,
            c7: 1.0,
            c8: 1.0,
            k_fatigue: 0.1,
            refractory: 1.0,
            rate_tau: 5.0,
        }
    }
}

impl NeuronParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("neuron.c0", self.c0),
            ("neuron.c1", self.c1),
            ("neuron.c2", self.c2),
            ("neuron.c3_epsp", self.c3_epsp),
            ("neuron.c4_epsp", self.c4_epsp),
            ("neuron.c5", self.c5),
            ("neuron.c6_chan", self.c6_chan),
            ("neuron.c7", self.c7),
            ("neuron.c8", self.c8),
            ("neuron.k_fatigue", self.k_fatigue),
            ("neuron.rate_tau", self.rate_tau),
        ];
        for (name, value) in positive {
            ParamError::positive(name, value)?;
        }
        if !(self.refractory >= 0.0 && self.refractory.is_finite()) {
            return Err(ParamError::new("neuron.refractory", "must be >= 0", self.refractory));
        }
        if self.c3_epsp / self.c4_epsp < 10.0 {
            return Err(ParamError::new(
                "neuron.c3_epsp",
                "c3_epsp / c4_epsp must be >= 10",
                self.c3_epsp,
            ));
        }
        if self.c6_chan < 10.0 * self.c4_epsp {
            return Err(ParamError::new(
                "neuron.c6_chan",
                "c6_chan must be >= 10 * c4_epsp",
                self.c6_chan,
            ));
        }
        Ok(())
    }

    /// Saturation firing rate `c1 / c0`.
    pub fn max_rate(&self) -> f64 {
        self.c1 / self.c0
    }
}

/// Neuromodulator (`m`, scales drive) and hormone (`h`, scales learning).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationContext {
    pub m: f64,
    pub h: f64,
}

impl Default for ModulationContext {
    fn default() -> Self {
        Self { m: 1.0, h: 1.0 }
    }
}

impl ModulationContext {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(ParamError::new("modulation.m", "must be >= 0", self.m));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(ParamError::new("modulation.h", "must be >= 0", self.h));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DendriteState {
    /// EPSP trace.
    pub p: f64,
    /// Channel activation in `[0, c7]`.
    pub a: f64,
    /// Index of the synapse feeding this dendrite.
    pub synapse_id: usize,
}

impl DendriteState {
    /// A dendrite at rest with fully recovered channels.
    pub fn at_rest(synapse_id: usize, params: &NeuronParams) -> Self {
        Self { p: 0.0, a: params.c7, synapse_id }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    pub q: f64,
    /// Exponential-kernel estimate of the firing frequency.
    pub f: f64,
    pub fired: bool,
    pub refractory: f64,
    pub dendrites: Vec<DendriteState>,
}

/// Emitted when charge crosses threshold. Carries the post-spike rate
/// estimate that scales the LTP signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiringEvent {
    pub f_post: f64,
}

impl NeuronState {
    pub fn new(dendrites: Vec<DendriteState>) -> Self {
        Self { q: 0.0, f: 0.0, fired: false, refractory: 0.0, dendrites }
    }

    /// A neuron at rest with `n` dendrites on synapses `0..n`.
    pub fn with_dendrites(n: usize, params: &NeuronParams) -> Self {
        Self::new((0..n).map(|i| DendriteState::at_rest(i, params)).collect())
    }

    pub fn is_refractory(&self) -> bool {
        self.refractory > 0.0
    }
}

/// Total drive `m * sum(p_i * a_i)`.
pub fn drive(neuron: &NeuronState, modulation: &ModulationContext) -> f64 {
    modulation.m * neuron.dendrites.iter().map(|d| d.p * d.a).sum::<f64>()
}

/// Advances charge by `c1 * (1 - e^{-c2 sigma}) * dt`.
///
/// A refractory neuron only counts down its refractory timer.
pub fn charge_step(
    neuron: &mut NeuronState,
    sigma: f64,
    dt: f64,
    params: &NeuronParams,
) -> Result<(), NeuronError> {
    if !(sigma >= 0.0) {
        return Err(NeuronError::NegativeDrive(sigma));
    }
    if neuron.is_refractory() {
        neuron.refractory = (neuron.refractory - dt).max(0.0);
        return Ok(());
    }
    neuron.q += params.c1 * (1.0 - (-params.c2 * sigma).exp()) * dt;
    Ok(())
}

/// Fires when `q > c0`: resets charge, fully fatigues every channel, starts
/// the refractory timer and bumps the rate estimator.
pub fn fire_check(neuron: &mut NeuronState, params: &NeuronParams) -> Option<FiringEvent> {
    if neuron.q > params.c0 {
        neuron.q = 0.0;
        for d in &mut neuron.dendrites {
            d.a = 0.0;
        }
        neuron.refractory = params.refractory;
        neuron.f += 1.0 / params.rate_tau;
        neuron.fired = true;
        Some(FiringEvent { f_post: neuron.f })
    } else {
        neuron.fired = false;
        None
    }
}

/// Injects charge directly, as with an external current or a facilitating
/// bias fiber.
pub fn inject(neuron: &mut NeuronState, charge: f64) {
    neuron.q = (neuron.q + charge).max(0.0);
}

/// Lets the rate estimator relax toward zero over `dt`.
pub fn rate_decay(neuron: &mut NeuronState, dt: f64, params: &NeuronParams) {
    neuron.f = exp_decay(neuron.f, 1.0 / params.rate_tau, dt).unwrap_or(0.0);
}

/// Euler step of `dp/dt = c3 * w_eff * f_in - c4 * p`, clamped at zero.
pub fn epsp_step(d: &mut DendriteState, w_eff: f64, f_in: f64, dt: f64, params: &NeuronParams) {
    let dp = params.c3_epsp * w_eff * f_in - params.c4_epsp * d.p;
    d.p = (d.p + dp * dt).max(0.0);
}

/// A single presynaptic spike: the impulse form of the EPSP drive term.
pub fn epsp_spike(d: &mut DendriteState, w_eff: f64, params: &NeuronParams) {
    d.p += params.c3_epsp * w_eff;
}

/// EPSP after time `t` of constant input starting from rest.
pub fn epsp_closed_form(
    w_eff: f64,
    f_in: f64,
    t: f64,
    params: &NeuronParams,
) -> Result<f64, NeuronError> {
    if !(t >= 0.0) {
        return Err(NeuronError::NegativeTime(t));
    }
    let plateau = params.c3_epsp * w_eff * f_in / params.c4_epsp;
    Ok(plateau * (1.0 - (-params.c4_epsp * t).exp()))
}

/// Channel recovery toward `c7`, with partial fatigue `k_fatigue * p` when
/// the dendrite carries a subthreshold EPSP.
pub fn channel_step(d: &mut DendriteState, subthreshold_epsp: bool, dt: f64, params: &NeuronParams) {
    let mut da = params.c6_chan * (params.c7 - d.a);
    if subthreshold_epsp {
        da -= params.k_fatigue * d.p;
    }
    d.a = clamp(d.a + da * dt, 0.0, params.c7);
}

/// LTP stimulus `c5 * p * f_post`. Only defined for a neuron that fired.
pub fn ltp_signal(d: &DendriteState, f_post: f64, params: &NeuronParams) -> Result<f64, NeuronError> {
    if !(f_post > 0.0) {
        return Err(NeuronError::Contract("ltp_signal requires a fired neuron (f_post > 0)"));
    }
    Ok(params.c5 * d.p * f_post)
}

/// LTD stimulus `c8 * p * (c7 - a)`. Only defined for a neuron that did not
/// fire this step.
pub fn ltd_signal(
    neuron: &NeuronState,
    dendrite: usize,
    params: &NeuronParams,
) -> Result<f64, NeuronError> {
    if neuron.fired {
        return Err(NeuronError::Contract("ltd_signal requires a neuron that did not fire"));
    }
    let d = neuron
        .dendrites
        .get(dendrite)
        .ok_or(NeuronError::Contract("dendrite index out of range"))?;
    Ok(ltd_stimulus(d, params))
}

/// Raw LTD stimulus for a single dendrite, without the firing check.
pub fn ltd_stimulus(d: &DendriteState, params: &NeuronParams) -> f64 {
    params.c8 * d.p * (params.c7 - d.a).max(0.0)
}

/// Steady firing frequency under constant drive: the reciprocal of the
/// time needed to charge from zero to `c0`.
pub fn rate_transfer(sigma: f64, params: &NeuronParams) -> f64 {
    let sigma = sigma.max(0.0);
    params.c1 * (1.0 - (-params.c2 * sigma).exp()) / params.c0
}

/// Probability that the encoded object is present given total evidence
/// `sigma`: `1 - e^{-c_prob sigma}`.
pub fn object_probability(sigma: f64, c_prob: f64) -> f64 {
    1.0 - (-c_prob * sigma.max(0.0)).exp()
}
