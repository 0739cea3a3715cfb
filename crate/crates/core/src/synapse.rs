//! Four-variable synapse: LTP strength `w` with persistence `r`, LTD
//! devaluation `w_d` with recovery rate `r_d`.
//!
//! Without LTP stimulus `w` decays passively at rate `k_decay * |ln r|`, so
//! a synapse whose persistence has been driven toward 1 by rehearsal barely
//! forgets. Without LTD stimulus `w_d` relaxes back toward 1 at rate
//! `k_recover * |ln r_d|`. The strength seen by the neuron is `w * w_d`.

use serde::{Deserialize, Serialize};

use crate::numerics::{clamp, exp_relax};
use crate::ParamError;

/// Lower bound kept on the multiplicative LTD variables.
pub const LTD_FLOOR: f64 = 1e-6;
/// Largest representable persistence; `r` stays strictly below 1.
pub const R_CEIL: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynapseParams {
    /// LTP strength gain.
    pub k_w: f64,
    /// Strength ceiling.
    pub w_max: f64,
    /// Persistence gain.
    pub k_r: f64,
    /// Passive decay coefficient.
    pub k_decay: f64,
    /// Devaluation gain.
    pub k_wd: f64,
    /// Devaluation-persistence gain.
    pub k_rd: f64,
    /// Devaluation recovery coefficient.
    pub k_recover: f64,
    /// Strength of a freshly attached synapse.
    pub w_init: f64,
    /// Below this strength a synapse breaks.
    pub w_prune: f64,
    /// Persistence of a fresh synapse.
    pub r_init: f64,
    /// Devaluation recovery rate of a fresh synapse.
    pub r_d_init: f64,
}

impl Default for SynapseParams {
    fn default() -> Self {
        Self {
            k_w: 1.0,
            w_max: 1.0,
            k_r: 0.1,
            k_decay: 0.05,
            k_wd: 1.0,
            k_rd: 0.5,
            k_recover: 0.5,
            w_init: 0.1,
            w_prune: 0.01,
            r_init: 0.5,
            r_d_init: 0.5,
        }
    }
}

impl SynapseParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [
            ("synapse.k_w", self.k_w),
            ("synapse.w_max", self.w_max),
            ("synapse.k_r", self.k_r),
            ("synapse.k_decay", self.k_decay),
            ("synapse.k_wd", self.k_wd),
            ("synapse.k_rd", self.k_rd),
            ("synapse.k_recover", self.k_recover),
            ("synapse.w_init", self.w_init),
            ("synapse.w_prune", self.w_prune),
        ] {
            ParamError::positive(name, value)?;
        }
        if !(self.w_init > self.w_prune) {
            return Err(ParamError::new("synapse.w_init", "must exceed w_prune", self.w_init));
        }
        if !(self.w_max > self.w_init) {
            return Err(ParamError::new("synapse.w_max", "must exceed w_init", self.w_max));
        }
        for (name, value) in [("synapse.r_init", self.r_init), ("synapse.r_d_init", self.r_d_init)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(ParamError::new(name, "must lie in (0, 1)", value));
            }
        }
        Ok(())
    }

    /// Passive decay rate of a synapse with persistence `r`.
    pub fn decay_rate(&self, r: f64) -> f64 {
        self.k_decay * -r.ln()
    }

    /// Time for `w` to halve under pure passive decay.
    pub fn half_life(&self, r: f64) -> f64 {
        std::f64::consts::LN_2 / self.decay_rate(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynapseState {
    pub w: f64,
    pub r: f64,
    pub w_d: f64,
    pub r_d: f64,
    pub alive: bool,
}

impl SynapseState {
    pub fn new(params: &SynapseParams) -> Self {
        Self {
            w: params.w_init,
            r: params.r_init,
            w_d: 1.0,
            r_d: params.r_d_init,
            alive: true,
        }
    }

    /// Both passive processes over an idle interval, in closed form.
    pub fn idle(&mut self, elapsed: f64, params: &SynapseParams) {
        if !self.alive || elapsed <= 0.0 {
            return;
        }
        passive_decay(self, elapsed, params);
        let rate = params.k_recover * -self.r_d.ln();
        self.w_d = clamp(
            exp_relax(self.w_d, 1.0, rate, elapsed).unwrap_or(self.w_d),
            LTD_FLOOR,
            1.0,
        );
    }

    fn clamp_ranges(&mut self, params: &SynapseParams) {
        self.w = clamp(self.w, 0.0, params.w_max);
        self.r = clamp(self.r, LTD_FLOOR, R_CEIL);
        self.w_d = clamp(self.w_d, LTD_FLOOR, 1.0);
        self.r_d = clamp(self.r_d, LTD_FLOOR, R_CEIL);
    }
}

/// Euler step of the LTP equations: `w` saturates toward `w_max` and `r`
/// toward 1, both at rate proportional to `s_p * h`.
pub fn ltp_update(s: &mut SynapseState, s_p: f64, h: f64, dt: f64, params: &SynapseParams) {
    if !s.alive {
        return;
    }
    let drive = s_p.max(0.0) * h.max(0.0);
    if drive == 0.0 {
        return;
    }
    s.w += params.k_w * drive * (params.w_max - s.w) * dt;
    s.r += params.k_r * drive * (1.0 - s.r) * dt;
    s.clamp_ranges(params);
}

/// Passive decay of `w` over `dt`, using the exact per-step solution
/// `w * e^{k_decay ln(r) dt}` so `w` stays positive for any step.
pub fn passive_decay(s: &mut SynapseState, dt: f64, params: &SynapseParams) {
    if !s.alive {
        return;
    }
    s.w *= (params.k_decay * s.r.ln() * dt).exp();
    s.clamp_ranges(params);
}

/// Euler step of the LTD equations: `w_d` and `r_d` shrink
/// multiplicatively with `s_d`.
pub fn ltd_update(s: &mut SynapseState, s_d: f64, dt: f64, params: &SynapseParams) {
    if !s.alive || s_d <= 0.0 {
        return;
    }
    s.w_d -= params.k_wd * s_d * s.w_d * dt;
    s.r_d -= params.k_rd * s_d * s.r_d * dt;
    s.clamp_ranges(params);
}

/// Euler step of devaluation recovery toward 1.
pub fn ltd_recovery(s: &mut SynapseState, dt: f64, params: &SynapseParams) {
    if !s.alive {
        return;
    }
    s.w_d += -params.k_recover * s.r_d.ln() * (1.0 - s.w_d) * dt;
    s.clamp_ranges(params);
}

/// Strength seen by the postsynaptic neuron: `w * w_d`, zero once broken.
pub fn effective_strength(s: &SynapseState) -> f64 {
    if s.alive {
        s.w * s.w_d
    } else {
        0.0
    }
}

/// Breaks the synapse permanently once `w < w_prune`. Returns whether it
/// is still alive.
pub fn prune_check(s: &mut SynapseState, params: &SynapseParams) -> bool {
    if s.alive && s.w < params.w_prune {
        s.alive = false;
    }
    s.alive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::relative_error;
    use proptest::prelude::*;

    fn params() -> SynapseParams {
        SynapseParams::default()
    }

    #[test]
    fn validation() {
        params().validate().unwrap();
        let mut p = params();
        p.w_prune = 0.2;
        assert_eq!(p.validate().unwrap_err().name, "synapse.w_init");
        let mut p = params();
        p.k_decay = -1.0;
        assert_eq!(p.validate().unwrap_err().name, "synapse.k_decay");
    }

    #[test]
    fn ltp_examples() {
        let p = params();
        let s0 = SynapseState::new(&p);
        let mut s = s0;
        ltp_update(&mut s, 0.0, 1.0, 0.1, &p);
        assert_eq!(s, s0);

        let mut sat = SynapseState { w: p.w_max, ..s0 };
        ltp_update(&mut sat, 3.0, 1.0, 0.1, &p);
        assert_eq!(sat.w, p.w_max);

        let mut s = s0;
        let mut prev_gain = f64::INFINITY;
        let mut prev_w = s.w;
        for _ in 0..20 {
            ltp_update(&mut s, 1.0, 1.0, 0.1, &p);
            let gain = s.w - prev_w;
            assert!(gain > 0.0 && gain < prev_gain);
            prev_gain = gain;
            prev_w = s.w;
        }
        assert!(s.r > s0.r);
    }

    #[test]
    fn learning_curve_matches_closed_form() {
        let p = params();
        let (s_p, h) = (0.8, 1.5);
        let k = p.k_w * s_p * h;
        let dt = 0.01 / k;
        let mut s = SynapseState::new(&p);
        let w0 = s.w;
        let steps = (3.0 / k / dt).round() as usize;
        for _ in 0..steps {
            ltp_update(&mut s, s_p, h, dt, &p);
        }
        let t = steps as f64 * dt;
        let exact = p.w_max * (1.0 - (-k * t).exp()) + w0 * (-k * t).exp();
        assert!(relative_error(s.w, exact) < 1e-3);
    }

    #[test]
    fn passive_decay_examples() {
        let p = SynapseParams { k_decay: 1.0, ..params() };
        let mut s = SynapseState { r: (-1.0f64).exp(), w: 0.6, ..SynapseState::new(&p) };
        passive_decay(&mut s, 1.0, &p);
        assert!(relative_error(s.w, 0.6 * (-1.0f64).exp()) < 1e-12);

        let mut nearly_one = SynapseState { r: R_CEIL, w: 0.6, ..s };
        passive_decay(&mut nearly_one, 100.0, &p);
        assert!(relative_error(nearly_one.w, 0.6) < 1e-9);

        let mut fast = SynapseState { r: 0.5, w: 0.6, ..s };
        let mut slow = SynapseState { r: 0.9, w: 0.6, ..s };
        for _ in 0..50 {
            passive_decay(&mut fast, 0.1, &p);
            passive_decay(&mut slow, 0.1, &p);
            assert!(fast.w < slow.w);
        }
    }

    #[test]
    fn half_life_matches_measurement() {
        let p = params();
        let r = 0.8;
        let mut s = SynapseState { r, w: 0.9, ..SynapseState::new(&p) };
        let dt = 0.01;
        let mut t = 0.0;
        while s.w > 0.45 {
            passive_decay(&mut s, dt, &p);
            t += dt;
        }
        assert!(relative_error(t, p.half_life(r)) < 0.02);
    }

    #[test]
    fn ltd_examples() {
        let p = params();
        let s0 = SynapseState::new(&p);
        let mut s = s0;
        ltd_update(&mut s, 0.0, 0.1, &p);
        assert_eq!(s, s0);

        let s_d = 0.4;
        let dt = 0.01 / (p.k_wd * s_d);
        let mut s = s0;
        let steps = 100;
        for _ in 0..steps {
            ltd_update(&mut s, s_d, dt, &p);
        }
        let exact = (-p.k_wd * s_d * steps as f64 * dt).exp();
        assert!(relative_error(s.w_d, exact) < 1e-2);
        assert!(s.r_d < s0.r_d);
    }

    #[test]
    fn ltd_mirrors_ltp() {
        // reciprocal stimulation: strength rises while devaluation falls
        let p = params();
        let mut s = SynapseState::new(&p);
        for _ in 0..10 {
            let (w, wd) = (s.w, s.w_d);
            ltp_update(&mut s, 1.0, 1.0, 0.1, &p);
            ltd_update(&mut s, 1.0, 0.1, &p);
            assert!(s.w > w && s.w_d < wd);
        }
    }

    #[test]
    fn recovery_examples() {
        let p = params();
        let mut s = SynapseState::new(&p);
        ltd_recovery(&mut s, 0.1, &p);
        assert_eq!(s.w_d, 1.0);

        let mut frozen = SynapseState { w_d: 0.5, r_d: R_CEIL, ..SynapseState::new(&p) };
        ltd_recovery(&mut frozen, 1.0, &p);
        assert!((frozen.w_d - 0.5).abs() < 1e-9);

        let mut s = SynapseState { w_d: 0.3, r_d: 0.4, ..SynapseState::new(&p) };
        let rate = -p.k_recover * 0.4f64.ln();
        let dt = 0.01 / rate;
        let steps = 300;
        for _ in 0..steps {
            ltd_recovery(&mut s, dt, &p);
        }
        let oracle = exp_relax(0.3, 1.0, rate, steps as f64 * dt).unwrap();
        assert!(relative_error(s.w_d, oracle) < 1e-3);
    }

    #[test]
    fn devaluation_recovers_fully() {
        let p = params();
        let mut s = SynapseState::new(&p);
        for _ in 0..20 {
            ltd_update(&mut s, 0.5, 0.1, &p);
        }
        assert!(s.w_d < 0.5);
        let rate = -p.k_recover * s.r_d.ln();
        let horizon = 5.0 / rate;
        let dt = 0.01 / rate;
        for _ in 0..(horizon / dt).ceil() as usize * 4 {
            ltd_recovery(&mut s, dt, &p);
        }
        assert!((s.w_d - 1.0).abs() < 1e-6);
    }

    #[test]
    fn effective_strength_examples() {
        let p = params();
        let s = SynapseState { w: 0.8, w_d: 1.0, ..SynapseState::new(&p) };
        assert_eq!(effective_strength(&s), 0.8);
        assert_eq!(effective_strength(&SynapseState { w: 0.0, ..s }), 0.0);
        assert!((effective_strength(&SynapseState { w_d: 0.5, ..s }) - 0.4).abs() < 1e-15);
        assert_eq!(effective_strength(&SynapseState { alive: false, ..s }), 0.0);
    }

    #[test]
    fn prune_examples() {
        let p = params();
        let mut s = SynapseState { w: p.w_prune * 0.99, ..SynapseState::new(&p) };
        assert!(!prune_check(&mut s, &p));
        s.w = p.w_max;
        assert!(!prune_check(&mut s, &p), "pruning is permanent");
        let mut s = SynapseState { w: p.w_prune * 1.01, ..SynapseState::new(&p) };
        assert!(prune_check(&mut s, &p));
    }

    #[test]
    fn unreinforced_synapse_lifetime() {
        let p = params();
        let expected = (p.w_init / p.w_prune).ln() / (p.k_decay * p.r_init.ln().abs());
        let dt = 0.01;
        let mut s = SynapseState::new(&p);
        let mut t = 0.0;
        while prune_check(&mut s, &p) {
            passive_decay(&mut s, dt, &p);
            t += dt;
        }
        assert!((t - expected).abs() <= dt + 1e-9, "t={t} expected={expected}");
    }

    #[test]
    fn idle_matches_stepping() {
        let p = params();
        let mut a = SynapseState { w: 0.7, r: 0.8, w_d: 0.4, r_d: 0.3, alive: true };
        let mut b = a;
        a.idle(10.0, &p);
        for _ in 0..100_000 {
            passive_decay(&mut b, 1e-4, &p);
            ltd_recovery(&mut b, 1e-4, &p);
        }
        assert!(relative_error(a.w, b.w) < 1e-9);
        assert!(relative_error(a.w_d, b.w_d) < 1e-4);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Ltp(f64, f64),
        Decay,
        Ltd(f64),
        Recover,
        Prune,
        Idle(f64),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0.0..20.0f64, 0.0..3.0f64).prop_map(|(s, h)| Op::Ltp(s, h)),
            Just(Op::Decay),
            (0.0..20.0f64).prop_map(Op::Ltd),
            Just(Op::Recover),
            Just(Op::Prune),
            (0.0..50.0f64).prop_map(Op::Idle),
        ]
    }

    proptest! {
        #[test]
        fn invariants_hold_under_any_sequence(ops in proptest::collection::vec(op(), 1..200), dt in 0.001..0.5f64) {
            let p = params();
            let mut s = SynapseState::new(&p);
            for o in ops {
                match o {
                    Op::Ltp(sp, h) => ltp_update(&mut s, sp, h, dt, &p),
                    Op::Decay => passive_decay(&mut s, dt, &p),
                    Op::Ltd(sd) => ltd_update(&mut s, sd, dt, &p),
                    Op::Recover => ltd_recovery(&mut s, dt, &p),
                    Op::Prune => { prune_check(&mut s, &p); }
                    Op::Idle(t) => s.idle(t, &p),
                }
                prop_assert!(s.w >= 0.0 && s.w <= p.w_max);
                prop_assert!(s.r > 0.0 && s.r < 1.0);
                prop_assert!(s.w_d > 0.0 && s.w_d <= 1.0);
                prop_assert!(s.r_d > 0.0 && s.r_d < 1.0);
                let e = effective_strength(&s);
                prop_assert!(e >= 0.0 && e <= p.w_max);
            }
        }
    }
}
