//! Retrograde-messenger competition between dendrites that share an axonal
//! branch.
//!
//! When a neuron fires, messengers released at its synapses depress the
//! EPSP of every rival dendrite on the same presynaptic branch. Stronger
//! neurons fire more, depress their rivals harder and so fire more still;
//! iterated, the group settles on a single active neuron. No inhibitory
//! units are involved.

use serde::{Deserialize, Serialize};

use crate::neuron::{self, DendriteState, ModulationContext, NeuronParams};
use crate::ParamError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompetitionParams {
    /// Messenger gain: maximum depression rate of an EPSP trace.
    pub k_retro: f64,
    /// Saturation of messenger release with rival frequency.
    pub k_sat: f64,
    /// Frequencies below this count as silent.
    pub eps_silent: f64,
}

impl Default for CompetitionParams {
    fn default() -> Self {
        Self { k_retro: 3.0, k_sat: 1.0, eps_silent: 1e-3 }
    }
}

impl CompetitionParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        ParamError::positive("competition.k_retro", self.k_retro)?;
        ParamError::positive("competition.k_sat", self.k_sat)?;
        ParamError::positive("competition.eps_silent", self.eps_silent)
    }

    /// Messenger quantity released onto a dendrite whose rivals fire at a
    /// combined frequency `sigma`.
    pub fn messenger(&self, sigma: f64) -> f64 {
        self.k_retro * (1.0 - (-self.k_sat * sigma.max(0.0)).exp())
    }
}

/// Dendrites fed by one presynaptic line, as `(neuron, dendrite)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxonalBranchGroup {
    pub source: usize,
    pub members: Vec<(usize, usize)>,
}

/// Depresses each member's EPSP by `messenger(sum of OTHER members' rates)`.
///
/// `rates[i]` is the firing rate of the neuron owning `states[i]`; both
/// slices are aligned with `group.members`. Rates are read before any trace
/// is touched, so member order never changes the result.
pub fn retrograde_depress(
    group: &AxonalBranchGroup,
    rates: &[f64],
    states: &mut [DendriteState],
    dt: f64,
    params: &CompetitionParams,
) {
    debug_assert_eq!(rates.len(), group.members.len());
    debug_assert_eq!(states.len(), group.members.len());
    let total: f64 = rates.iter().map(|r| r.max(0.0)).sum();
    for (state, &own) in states.iter_mut().zip(rates) {
        let rivals = total - own.max(0.0);
        let dp = params.messenger(rivals) * dt;
        state.p = (state.p - dp).max(0.0);
    }
}

/// Index of the fastest-firing neuron, provided it is not silent. Ties go to
/// the lowest index.
pub fn winner(slot_rates: &[f64], params: &CompetitionParams) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in slot_rates.iter().enumerate() {
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((i, r));
        }
    }
    best.filter(|&(_, r)| r >= params.eps_silent).map(|(i, _)| i)
}

/// Attribute-slot predicate: at most one rate exceeds `eps`.
pub fn slot_satisfied(slot_rates: &[f64], eps: f64) -> bool {
    slot_rates.iter().filter(|&&r| r > eps).count() <= 1
}

/// Settings for [`run_contest`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContestSettings {
    pub dt: f64,
    pub max_steps: usize,
    /// Slot tolerance as a fraction of the current maximum rate.
    pub relative_eps: f64,
}

impl Default for ContestSettings {
    fn default() -> Self {
        Self { dt: 0.01, max_steps: 500, relative_eps: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContestOutcome {
    pub winner: Option<usize>,
    pub rates: Vec<f64>,
    pub converged: bool,
    /// Step at which the slot first satisfied the attribute-slot predicate.
    pub steps: usize,
}

/// Rate-mode contest among neurons that all receive the same input lines.
///
/// `strengths[i][j]` is neuron `i`'s effective strength on line `j`, and
/// `input_rates[j]` the presynaptic frequency of line `j`. Each step
/// integrates the EPSPs, applies retrograde depression within every
/// line's branch group using the previous step's rates, then reads new
/// rates from the transfer function. Channels are held at `c7`.
pub fn run_contest(
    strengths: &[Vec<f64>],
    input_rates: &[f64],
    neuron_params: &NeuronParams,
    params: &CompetitionParams,
    modulation: &ModulationContext,
    settings: &ContestSettings,
) -> ContestOutcome {
    let n = strengths.len();
    let lines = input_rates.len();
    let mut neurons: Vec<neuron::NeuronState> = (0..n)
        .map(|_| neuron::NeuronState::with_dendrites(lines, neuron_params))
        .collect();
    let mut rates = vec![0.0; n];
    let groups: Vec<AxonalBranchGroup> = (0..lines)
        .map(|j| AxonalBranchGroup { source: j, members: (0..n).map(|i| (i, j)).collect() })
        .collect();
    let mut scratch = vec![DendriteState { p: 0.0, a: 0.0, synapse_id: 0 }; n];

    for step in 1..=settings.max_steps {
        for (nrn, w) in neurons.iter_mut().zip(strengths) {
            for (j, d) in nrn.dendrites.iter_mut().enumerate() {
                neuron::epsp_step(d, w[j], input_rates[j], settings.dt, neuron_params);
            }
        }
        for g in &groups {
            for (k, &(i, j)) in g.members.iter().enumerate() {
                scratch[k] = neurons[i].dendrites[j];
            }
            retrograde_depress(g, &rates, &mut scratch, settings.dt, params);
            for (k, &(i, j)) in g.members.iter().enumerate() {
                neurons[i].dendrites[j] = scratch[k];
            }
        }
        for (r, nrn) in rates.iter_mut().zip(&neurons) {
            *r = neuron::rate_transfer(neuron::drive(nrn, modulation), neuron_params);
        }
        let max = rates.iter().cloned().fold(0.0, f64::max);
        if max >= params.eps_silent && slot_satisfied(&rates, settings.relative_eps * max) {
            return ContestOutcome {
                winner: winner(&rates, params),
                rates,
                converged: true,
                steps: step,
            };
        }
    }
    ContestOutcome {
        winner: winner(&rates, params),
        rates,
        converged: false,
        steps: settings.max_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(p: f64) -> DendriteState {
        DendriteState { p, a: 1.0, synapse_id: 0 }
    }

    #[test]
    fn single_member_is_not_depressed() {
        let g = AxonalBranchGroup { source: 0, members: vec![(0, 0)] };
        let mut s = [d(1.0)];
        retrograde_depress(&g, &[5.0], &mut s, 0.1, &CompetitionParams::default());
        assert_eq!(s[0].p, 1.0);
    }

    #[test]
    fn silent_rivals_do_not_depress() {
        let g = AxonalBranchGroup { source: 0, members: vec![(0, 0), (1, 0), (2, 0)] };
        let mut s = [d(1.0), d(1.0), d(1.0)];
        retrograde_depress(&g, &[3.0, 0.0, 0.0], &mut s, 0.1, &CompetitionParams::default());
        assert_eq!(s[0].p, 1.0);
        assert!(s[1].p < 1.0 && s[2].p < 1.0);
    }

    #[test]
    fn two_member_depression_value() {
        let g = AxonalBranchGroup { source: 0, members: vec![(0, 0), (1, 0)] };
        let mut s = [d(1.0), d(1.0)];
        let params = CompetitionParams { k_retro: 1.0, k_sat: 1.0, eps_silent: 1e-3 };
        retrograde_depress(&g, &[0.0, 3.0], &mut s, 0.1, &params);
        assert!((s[0].p - (1.0 - 0.1 * (1.0 - (-3.0f64).exp()))).abs() < 1e-12);
        assert!((1.0 - s[0].p - 0.095_021_29).abs() < 1e-8);
        assert_eq!(s[1].p, 1.0);
    }

    #[test]
    fn depression_clamps_at_zero() {
        let g = AxonalBranchGroup { source: 0, members: vec![(0, 0), (1, 0)] };
        let mut s = [d(0.01), d(0.01)];
        retrograde_depress(&g, &[10.0, 10.0], &mut s, 1.0, &CompetitionParams::default());
        assert_eq!(s[0].p, 0.0);
        assert_eq!(s[1].p, 0.0);
    }

    #[test]
    fn winner_examples() {
        let p = CompetitionParams::default();
        assert_eq!(winner(&[0.0, 1e-4], &p), None);
        assert_eq!(winner(&[], &p), None);
        assert_eq!(winner(&[0.1, 5.0, 0.2], &p), Some(1));
        assert_eq!(winner(&[2.0, 2.0], &p), Some(0));
    }

    #[test]
    fn slot_examples() {
        assert!(slot_satisfied(&[0.0, 0.0, 0.0], 0.01));
        assert!(slot_satisfied(&[0.0, 0.7, 0.0], 0.01));
        assert!(!slot_satisfied(&[0.3, 0.7, 0.0], 0.01));
        assert!(slot_satisfied(&[0.005, 0.7], 0.01));
    }

    #[test]
    fn two_neuron_contest_picks_stronger() {
        let np = NeuronParams::default();
        let out = run_contest(
            &[vec![0.2, 0.2], vec![0.3, 0.25]],
            &[0.5, 0.5],
            &np,
            &CompetitionParams::default(),
            &ModulationContext::default(),
            &ContestSettings::default(),
        );
        assert!(out.converged);
        assert_eq!(out.winner, Some(1));
        assert!(out.rates[0] <= 0.05 * out.rates[1]);
    }
}
