//! Single-synapse protocols: spike-timing window, Hebbian product law,
//! frequency dependence of LTP/LTD, and forgetting under rehearsal.

use serde::{Deserialize, Serialize};

use crate::neuron::{self, DendriteState, NeuronState};
use crate::numerics::{linear_fit, relative_error};
use crate::synapse::{self, effective_strength, SynapseState};
use crate::ModelParams;

use super::{ExperimentError, ProtocolResult};

/// Pairing intervals `±k / rate` for `k = 1..=10`: the LTP side in units
/// of the EPSP decay time, the LTD side in units of channel recovery time.
pub fn stdp_delta_ts(params: &ModelParams) -> Vec<f64> {
    let mut out: Vec<f64> = (1..=10).map(|k| -(k as f64) / params.neuron.c6_chan).rev().collect();
    out.extend((1..=10).map(|k| k as f64 / params.neuron.c4_epsp));
    out
}

fn force_fire(n: &mut NeuronState, params: &ModelParams) -> f64 {
    neuron::inject(n, 2.0 * params.neuron.c0);
    neuron::fire_check(n, &params.neuron).expect("injected charge exceeds threshold").f_post
}

/// One pre spike and one forced post spike `delta_t` apart. Returns the
/// plasticity stimulus and the resulting change in effective strength.
fn stdp_pair(delta_t: f64, params: &ModelParams) -> (f64, f64) {
    let np = &params.neuron;
    let sp = &params.synapse;
    let mut syn = SynapseState::new(sp);
    let w0 = effective_strength(&syn);
    let mut post = NeuronState::with_dendrites(1, np);
    if delta_t > 0.0 {
        // the postsynaptic cell is held below threshold until the forced spike
        let dt = params.dt.min(0.01 / np.c4_epsp);
        neuron::epsp_spike(&mut post.dendrites[0], w0, np);
        for _ in 0..(delta_t / dt).round() as usize {
            neuron::epsp_step(&mut post.dendrites[0], w0, 0.0, dt, np);
        }
        let f_post = force_fire(&mut post, params);
        let s_p = neuron::ltp_signal(&post.dendrites[0], f_post, np).expect("post fired");
        synapse::ltp_update(&mut syn, s_p, 1.0, dt, sp);
        (s_p, effective_strength(&syn) - w0)
    } else {
        let dt = params.dt.min(0.01 / np.c6_chan);
        force_fire(&mut post, params);
        neuron::fire_check(&mut post, np);
        for _ in 0..(-delta_t / dt).round() as usize {
            neuron::channel_step(&mut post.dendrites[0], false, dt, np);
        }
        neuron::epsp_spike(&mut post.dendrites[0], w0, np);
        let s_d = neuron::ltd_signal(&post, 0, np).expect("post silent");
        synapse::ltd_update(&mut syn, s_d, dt, sp);
        (s_d, effective_strength(&syn) - w0)
    }
}

/// Spike-timing window. Positive `delta_t` pairs pre before post (LTP),
/// negative post before pre (LTD). The summary holds the decay exponents of
/// `|dw_eff|` fitted on each side.
pub fn stdp_protocol(delta_ts: &[f64], params: &ModelParams) -> Result<ProtocolResult, ExperimentError> {
    params.validate()?;
    if delta_ts.is_empty() || delta_ts.iter().any(|&d| d == 0.0 || !d.is_finite()) {
        return Err(ExperimentError::Precondition("delta_ts must be non-empty, finite and nonzero".into()));
    }
    let mut res = ProtocolResult::new("stdp", 0, params, &["delta_t", "branch", "stimulus", "dw_eff"]);
    res.setting("delta_ts", delta_ts);
    let (mut ltp, mut ltd) = ((vec![], vec![]), (vec![], vec![]));
    for &d in delta_ts {
        let (s, dw) = stdp_pair(d, params);
        let side = if d > 0.0 { &mut ltp } else { &mut ltd };
        if dw != 0.0 {
            side.0.push(d.abs());
            side.1.push(dw.abs().ln());
        }
        res.push(vec![d.into(), (if d > 0.0 { "ltp" } else { "ltd" }).into(), s.into(), dw.into()]);
    }
    for (name, (x, y)) in [("ltp_exponent", ltp), ("ltd_exponent", ltd)] {
        if let Some((slope, _)) = linear_fit(&x, &y) {
            res.summary.push((name.to_string(), -slope));
        }
    }
    Ok(res)
}

/// LTP stimulus of one synapse under constant pre and post rates. The
/// synapse is held at its initial strength so the trace shows the
/// stimulus alone.
pub fn hebb_protocol(f_pre: f64, f_post: f64, duration: f64, params: &ModelParams) -> Result<ProtocolResult, ExperimentError> {
    params.validate()?;
    let np = &params.neuron;
    if !(duration >= 5.0 / np.c4_epsp) {
        return Err(ExperimentError::Precondition(format!(
            "duration {duration} shorter than 5 / c4_epsp = {}",
            5.0 / np.c4_epsp
        )));
    }
    if !(f_pre >= 0.0 && f_post >= 0.0) {
        return Err(ExperimentError::Precondition("frequencies must be non-negative".into()));
    }
    let w = effective_strength(&SynapseState::new(&params.synapse));
    let mut res = ProtocolResult::new("hebb", 0, params, &["t", "s_p"]);
    res.setting("f_pre", f_pre);
    res.setting("f_post", f_post);
    res.setting("duration", duration);
    let steps = (duration / params.dt).round() as usize;
    let stride = steps.div_ceil(200).max(1);
    let mut d = DendriteState::at_rest(0, np);
    res.push(vec![0.0.into(), 0.0.into()]);
    let mut s_p = 0.0;
    for i in 1..=steps {
        neuron::epsp_step(&mut d, w, f_pre, params.dt, np);
        s_p = np.c5 * d.p * f_post;
        if i % stride == 0 || i == steps {
            res.push(vec![(i as f64 * params.dt).into(), s_p.into()]);
        }
    }
    let predicted = np.c5 * (np.c3_epsp / np.c4_epsp) * w * f_pre * f_post;
    res.summary.push(("s_p_final".into(), s_p));
    res.summary.push(("s_p_predicted".into(), predicted));
    res.summary.push(("relative_error".into(), relative_error(s_p, predicted)));
    Ok(res)
}

/// Final stimulus against the product law over every `(f_pre, f_post)`
/// pair.
pub fn hebb_grid(f_pres: &[f64], f_posts: &[f64], duration: f64, params: &ModelParams) -> Result<ProtocolResult, ExperimentError> {
    let mut res = ProtocolResult::new("hebb", 0, params, &["f_pre", "f_post", "s_p_final", "s_p_predicted", "relative_error"]);
    res.setting("f_pre", f_pres);
    res.setting("f_post", f_posts);
    res.setting("duration", duration);
    let mut worst: f64 = 0.0;
    for &a in f_pres {
        for &b in f_posts {
            let r = hebb_protocol(a, b, duration, params)?;
            let get = |k| r.summary_value(k).unwrap_or(f64::NAN);
            worst = worst.max(get("relative_error"));
            res.push(vec![a.into(), b.into(), get("s_p_final").into(), get("s_p_predicted").into(), get("relative_error").into()]);
        }
    }
    res.summary.push(("max_relative_error".into(), worst));
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencyArgs {
    pub freqs: Vec<f64>,
    pub duration: f64,
    /// Bisection steps used to locate the LTD/LTP crossover.
    pub bisection_steps: usize,
}

impl Default for FrequencyArgs {
    fn default() -> Self {
        Self { freqs: vec![0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0], duration: 20.0, bisection_steps: 30 }
    }
}

/// Drives one synapse with a periodic spike train at `f_in` and lets the
/// postsynaptic neuron integrate and fire. While the neuron's rate
/// estimate is positive the synapse receives LTP. While it is silent the
/// EPSP partially fatigues the channels and the synapse receives LTD, the
/// same split the network learner uses.
/// Returns the net change in effective strength and the spike count.
fn frequency_run(f_in: f64, duration: f64, params: &ModelParams) -> (f64, usize) {
    let np = &params.neuron;
    let sp = &params.synapse;
    let dt = params.dt;
    let mut syn = SynapseState::new(sp);
    let w0 = effective_strength(&syn);
    let mut post = NeuronState::with_dendrites(1, np);
    let mut phase = 1.0;
    let mut spikes = 0;
    for _ in 0..(duration / dt).round() as usize {
        let w = effective_strength(&syn);
        if f_in > 0.0 && phase >= 1.0 {
            neuron::epsp_spike(&mut post.dendrites[0], w, np);
            phase -= 1.0;
        }
        phase += f_in * dt;
        let sigma = neuron::drive(&post, &Default::default());
        neuron::charge_step(&mut post, sigma, dt, np).expect("drive is non-negative");
        let fired = neuron::fire_check(&mut post, np).is_some();
        spikes += usize::from(fired);
        let d = post.dendrites[0];
        if post.f > 0.0 {
            synapse::ltp_update(&mut syn, np.c5 * d.p * post.f, 1.0, dt, sp);
        }
        let silent = post.f < params.competition.eps_silent;
        if !fired && silent {
            synapse::ltd_update(&mut syn, neuron::ltd_stimulus(&d, np), dt, sp);
        }
        neuron::epsp_step(&mut post.dendrites[0], w, 0.0, dt, np);
        neuron::channel_step(&mut post.dendrites[0], silent && d.p > 0.0, dt, np);
        neuron::rate_decay(&mut post, dt, np);
    }
    (effective_strength(&syn) - w0, spikes)
}

/// Net plasticity as a function of input frequency, with the LTD to LTP
/// crossover located by bisection between the last depressing and the
/// first potentiating frequency of the sweep.
pub fn frequency_protocol(args: &FrequencyArgs, params: &ModelParams) -> Result<ProtocolResult, ExperimentError> {
    params.validate()?;
    if args.freqs.is_empty() || args.freqs.iter().any(|f| !(*f >= 0.0)) || !(args.duration > 0.0) {
        return Err(ExperimentError::Precondition("need non-negative frequencies and a positive duration".into()));
    }
    let mut res = ProtocolResult::new("freq", 0, params, &["f_in", "spikes", "dw_eff", "class"]);
    res.setting("freqs", &args.freqs);
    res.setting("duration", args.duration);
    let mut freqs = args.freqs.clone();
    freqs.sort_by(f64::total_cmp);
    let mut last_ltd = None;
    let mut first_ltp = None;
    for &f in &freqs {
        let (dw, spikes) = frequency_run(f, args.duration, params);
        let class = if dw > 0.0 {
            if first_ltp.is_none() {
                first_ltp = Some(f);
            }
            "LTP"
        } else if dw < 0.0 {
            if first_ltp.is_none() {
                last_ltd = Some(f);
            }
            "LTD"
        } else {
            "none"
        };
        res.push(vec![f.into(), spikes.into(), dw.into(), class.into()]);
    }
    if let (Some(mut lo), Some(mut hi)) = (last_ltd, first_ltp) {
        for _ in 0..args.bisection_steps {
            let mid = 0.5 * (lo + hi);
            if frequency_run(mid, args.duration, params).0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        res.summary.push(("crossover".into(), 0.5 * (lo + hi)));
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForgettingArgs {
    pub rehearsal_counts: Vec<usize>,
    pub horizon: f64,
    /// LTP stimulus of one rehearsal pulse.
    pub pulse_strength: f64,
    pub pulse_duration: f64,
    /// Idle time between pulses.
    pub spacing: f64,
    pub sample_interval: f64,
    /// LTP stimulus applied for one step at every sample, modelling recall
    /// during testing. Zero disables it.
    pub recall_strength: f64,
}

impl Default for ForgettingArgs {
    fn default() -> Self {
        Self {
            rehearsal_counts: vec![0, 1, 5, 20],
            horizon: 400.0,
            pulse_strength: 1.0,
            pulse_duration: 1.0,
            spacing: 5.0,
            sample_interval: 1.0,
            recall_strength: 0.0,
        }
    }
}

/// Log-linear interpolation of the first crossing of one half.
fn half_life(samples: &[(f64, f64)]) -> Option<f64> {
    samples.windows(2).find_map(|w| {
        let ((t0, r0), (t1, r1)) = (w[0], w[1]);
        if r0 > 0.5 && r1 <= 0.5 && r1 > 0.0 {
            Some(t0 + (t1 - t0) * (0.5f64.ln() - r0.ln()) / (r1.ln() - r0.ln()))
        } else {
            None
        }
    })
}

/// Retention after `k` spaced rehearsals. The summary reports measured
/// and predicted half-lives per `k`.
pub fn forgetting_protocol(args: &ForgettingArgs, params: &ModelParams) -> Result<ProtocolResult, ExperimentError> {
    params.validate()?;
    if !(args.horizon > 0.0 && args.sample_interval > 0.0 && args.pulse_duration >= 0.0 && args.spacing >= 0.0) {
        return Err(ExperimentError::Precondition("horizon and sample interval must be positive".into()));
    }
    let sp = &params.synapse;
    let dt = params.dt;
    let mut res = ProtocolResult::new("forget", 0, params, &["k", "t", "retention"]);
    res.setting("rehearsal_counts", &args.rehearsal_counts);
    res.setting("horizon", args.horizon);
    res.setting("pulse_strength", args.pulse_strength);
    res.setting("pulse_duration", args.pulse_duration);
    res.setting("spacing", args.spacing);
    res.setting("sample_interval", args.sample_interval);
    res.setting("recall_strength", args.recall_strength);
    for &k in &args.rehearsal_counts {
        let mut syn = SynapseState::new(sp);
        for i in 0..k {
            if i > 0 {
                syn.idle(args.spacing, sp);
            }
            for _ in 0..(args.pulse_duration / dt).round() as usize {
                synapse::ltp_update(&mut syn, args.pulse_strength, 1.0, dt, sp);
            }
        }
        let w0 = effective_strength(&syn);
        let predicted = sp.half_life(syn.r);
        let per_sample = (args.sample_interval / dt).round().max(1.0) as usize;
        let samples = (args.horizon / args.sample_interval).round() as usize;
        let mut curve = vec![(0.0, 1.0)];
        res.push(vec![k.into(), 0.0.into(), 1.0.into()]);
        for j in 1..=samples {
            for _ in 0..per_sample {
                synapse::passive_decay(&mut syn, dt, sp);
                synapse::prune_check(&mut syn, sp);
            }
            if args.recall_strength > 0.0 {
                synapse::ltp_update(&mut syn, args.recall_strength, 1.0, dt, sp);
            }
            let t = (j * per_sample) as f64 * dt;
            let retention = effective_strength(&syn) / w0;
            curve.push((t, retention));
            res.push(vec![k.into(), t.into(), retention.into()]);
        }
        res.summary.push((format!("half_life_{k}"), half_life(&curve).unwrap_or(f64::NAN)));
        res.summary.push((format!("half_life_predicted_{k}"), predicted));
    }
    Ok(res)
}
