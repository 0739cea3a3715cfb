//! Rate-mode simulation of the layered network: presentation, learning,
//! recruitment and retrieval scoring.

use crate::competition::{self, AxonalBranchGroup};
use crate::neuron::{self, DendriteState, ModulationContext, NeuronState};
use crate::synapse;

use super::{Attachment, Dendrite, GrowthError, InputPattern, Network, NeuronId};

/// Outcome of presenting a pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeResult {
    /// Winner of each top-layer slot.
    pub winners: Vec<Option<NeuronId>>,
    /// Winner of every slot of every hidden layer, bottom to top.
    pub layer_winners: Vec<Vec<Option<NeuronId>>>,
    /// Final firing rate of every hidden neuron, per layer.
    pub firing_map: Vec<Vec<f64>>,
    pub converged: bool,
    /// Step from which every slot stayed resolved.
    pub steps_used: usize,
}

impl EncodeResult {
    /// The fastest-firing top-layer winner.
    pub fn winner(&self) -> Option<NeuronId> {
        self.winners
            .iter()
            .flatten()
            .copied()
            .fold(None, |best: Option<NeuronId>, id| match best {
                Some(b) if self.rate(b) >= self.rate(id) => Some(b),
                _ => Some(id),
            })
    }

    pub fn rate(&self, id: NeuronId) -> f64 {
        self.firing_map
            .get(id.layer.wrapping_sub(1))
            .and_then(|l| l.get(id.index))
            .copied()
            .unwrap_or(0.0)
    }

    /// Fraction of neurons active above `eps` in each layer.
    pub fn active_fraction(&self, eps: f64) -> Vec<f64> {
        self.firing_map
            .iter()
            .map(|l| l.iter().filter(|&&r| r > eps).count() as f64 / l.len().max(1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub recruited: Vec<NeuronId>,
    /// A slot needed a recruit but had no free neuron; the pattern merged
    /// into the best available neuron instead.
    pub capacity_exhausted: bool,
    /// Presentation of the pattern after learning.
    pub encode: EncodeResult,
}

/// Transient state of one presentation. Every presentation starts at rest.
pub(crate) struct Activity {
    pub states: Vec<Vec<NeuronState>>,
    pub rates: Vec<Vec<f64>>,
    groups: Vec<Vec<AxonalBranchGroup>>,
}

impl Activity {
    fn at_rest(net: &Network) -> Self {
        let np = &net.params.neuron;
        let states = net
            .layers
            .iter()
            .map(|units| {
                units
                    .iter()
                    .map(|u| {
                        NeuronState::new(
                            u.dendrites.iter().map(|d| DendriteState::at_rest(d.synapse, np)).collect(),
                        )
                    })
                    .collect()
            })
            .collect();
        let rates = net.layers.iter().map(|units| vec![0.0; units.len()]).collect();
        let groups = (1..=net.depth()).map(|l| net.branch_groups(l)).collect();
        Self { states, rates, groups }
    }
}

impl Network {
    fn input_rates(&self, pattern: &InputPattern) -> Vec<f64> {
        let mut rates = vec![0.0; self.input_line_count()];
        for (slot, v) in pattern.slots.iter().enumerate() {
            if let Some(v) = v {
                rates[self.input_line(slot, v.line)] = v.freq;
            }
        }
        rates
    }

    fn window(&self, pattern: &InputPattern) -> usize {
        ((pattern.duration / self.params.dt).round() as usize).max(1)
    }

    /// One synchronous step of every layer, bottom-up. Competition within a
    /// layer uses that layer's rates from the previous step.
    pub(crate) fn step(&self, act: &mut Activity, input: &[f64], modulation: &ModulationContext) {
        let np = &self.params.neuron;
        let cp = &self.params.competition;
        let dt = self.params.dt;
        for l in 0..self.depth() {
            let (lower, upper) = act.rates.split_at_mut(l);
            let lower_rates: &[f64] = if l == 0 { input } else { &lower[l - 1] };
            let prev_rates = upper[0].clone();
            let states = &mut act.states[l];
            for (u, unit) in self.layers[l].iter().enumerate() {
                if !unit.alive {
                    continue;
                }
                for (d, dend) in states[u].dendrites.iter_mut().zip(&unit.dendrites) {
                    let w_eff = synapse::effective_strength(&self.synapses[dend.synapse]);
                    neuron::epsp_step(d, w_eff, lower_rates[dend.line], dt, np);
                }
            }
            let mut member_rates = Vec::new();
            let mut scratch = Vec::new();
            for g in &act.groups[l] {
                member_rates.clear();
                scratch.clear();
                for &(u, k) in &g.members {
                    member_rates.push(prev_rates[u]);
                    scratch.push(states[u].dendrites[k]);
                }
                competition::retrograde_depress(g, &member_rates, &mut scratch, dt, cp);
                for (&(u, k), s) in g.members.iter().zip(&scratch) {
                    states[u].dendrites[k] = *s;
                }
            }
            let rates = &mut act.rates[l];
            for (u, unit) in self.layers[l].iter().enumerate() {
                if !unit.alive {
                    rates[u] = 0.0;
                    continue;
                }
                let silent = prev_rates[u] < cp.eps_silent;
                for d in &mut states[u].dendrites {
                    neuron::channel_step(d, silent && d.p > 0.0, dt, np);
                }
                let sigma = neuron::drive(&states[u], modulation) + unit.bias;
                rates[u] = neuron::rate_transfer(sigma, np);
            }
        }
    }

    /// Winner of each slot of hidden layer `l` (0-based).
    fn slot_winners(&self, l: usize, rates: &[f64]) -> Vec<Option<usize>> {
        self.shapes[l]
            .members
            .iter()
            .map(|members| {
                let slot_rates: Vec<f64> = members.iter().map(|&u| rates[u]).collect();
                competition::winner(&slot_rates, &self.params.competition).map(|i| members[i])
            })
            .collect()
    }

    fn all_slots_resolved(&self, act: &Activity) -> bool {
        let eps_floor = self.params.competition.eps_silent;
        self.shapes.iter().zip(&act.rates).all(|(shape, rates)| {
            shape.members.iter().all(|members| {
                let slot_rates: Vec<f64> = members.iter().map(|&u| rates[u]).collect();
                let max = slot_rates.iter().cloned().fold(0.0, f64::max);
                competition::slot_satisfied(&slot_rates, eps_floor.max(self.config.relative_eps * max))
            })
        })
    }

    fn encode_from(&self, act: &Activity, converged: bool, steps_used: usize) -> EncodeResult {
        let layer_winners: Vec<Vec<Option<NeuronId>>> = (0..self.depth())
            .map(|l| {
                self.slot_winners(l, &act.rates[l])
                    .into_iter()
                    .map(|w| w.map(|index| NeuronId { layer: l + 1, index }))
                    .collect()
            })
            .collect();
        EncodeResult {
            winners: layer_winners.last().cloned().unwrap_or_default(),
            layer_winners,
            firing_map: act.rates.clone(),
            converged,
            steps_used,
        }
    }

    /// Runs the dynamics for the pattern's presentation time, continuing up
    /// to `max_steps` while some slot still has more than one active neuron.
    /// Synapses are not modified.
    pub fn present(
        &self,
        pattern: &InputPattern,
        modulation: &ModulationContext,
        max_steps: usize,
    ) -> Result<EncodeResult, GrowthError> {
        self.check_pattern(pattern)?;
        modulation.validate()?;
        let input = self.input_rates(pattern);
        let window = self.window(pattern).min(max_steps.max(1));
        let mut act = Activity::at_rest(self);
        let mut resolved_since = None;
        let mut step = 0;
        loop {
            step += 1;
            self.step(&mut act, &input, modulation);
            let resolved = self.all_slots_resolved(&act);
            match (resolved, resolved_since) {
                (true, None) => resolved_since = Some(step),
                (false, _) => resolved_since = None,
                _ => {}
            }
            if (step >= window && resolved) || step >= max_steps.max(1) {
                break;
            }
        }
        Ok(self.encode_from(&act, resolved_since.is_some(), resolved_since.unwrap_or(step)))
    }

    /// Presents with the default modulation and step cap.
    pub fn encode(&self, pattern: &InputPattern) -> Result<EncodeResult, GrowthError> {
        self.present(pattern, &ModulationContext::default(), self.config.max_steps)
    }

    fn run_window(&self, pattern: &InputPattern, modulation: &ModulationContext) -> Activity {
        let input = self.input_rates(pattern);
        let mut act = Activity::at_rest(self);
        for _ in 0..self.window(pattern) {
            self.step(&mut act, &input, modulation);
        }
        act
    }

    /// Lines of slot `slot` in hidden layer `l` (0-based) that carry the
    /// pattern: active input lines for the first layer, lower-slot winners
    /// above it.
    fn active_field_lines(&self, l: usize, slot: usize, pattern: &InputPattern, act: &Activity) -> Vec<usize> {
        let field = &self.shapes[l].fields[slot];
        if l == 0 {
            field
                .iter()
                .filter_map(|&s| {
                    pattern.slots[s]
                        .filter(|v| v.freq > 0.0)
                        .map(|v| self.input_line(s, v.line))
                })
                .collect()
        } else {
            let winners = self.slot_winners(l - 1, &act.rates[l - 1]);
            field.iter().filter_map(|&s| winners[s]).collect()
        }
    }

    /// Share of a neuron's total effective strength sitting on `lines`.
    pub(crate) fn match_fraction(&self, l: usize, u: usize, lines: &[usize]) -> f64 {
        let mut on = 0.0;
        let mut total = 0.0;
        for d in &self.layers[l][u].dendrites {
            let w = synapse::effective_strength(&self.synapses[d.synapse]);
            total += w;
            if lines.contains(&d.line) {
                on += w;
            }
        }
        if total > 0.0 { on / total } else { 0.0 }
    }

    fn recruit(&mut self, id: NeuronId, lines: &[usize]) {
        let exact = self.config.attachment == Attachment::Exact;
        let sp = self.params.synapse;
        let unit = &mut self.layers[id.layer - 1][id.index];
        if exact {
            for d in unit.dendrites.drain(..) {
                self.synapses[d.synapse].alive = false;
            }
            for &line in lines {
                self.synapses.push(synapse::SynapseState::new(&sp));
                unit.dendrites.push(Dendrite { line, synapse: self.synapses.len() - 1 });
            }
        }
        unit.committed = true;
    }

    /// Presents the pattern with plasticity on.
    ///
    /// Working bottom-up, every slot that receives the pattern picks a
    /// target: the neuron with the largest positive supervised bias, if any,
    /// else the committed neuron most similar to the active lines (share
    /// of its effective strength sitting on them) if that share reaches
    /// `recruit_threshold`, otherwise a free neuron, which is recruited and
    /// wired onto the active lines. With no free neuron left the pattern
    /// merges into the most similar committed neuron and
    /// `capacity_exhausted` is set. Targets attach spare dendrites to active
    /// lines they miss and are facilitated by `recruit_bias` for the rest of
    /// the call, so they win their slots. Over the presentation window slot
    /// winners receive LTP on their active synapses, silent neurons with an
    /// EPSP receive LTD, and every other synapse decays passively. Broken
    /// synapses are pruned last.
    pub fn learn(&mut self, pattern: &InputPattern, modulation: &ModulationContext) -> Result<LearnReport, GrowthError> {
        self.check_pattern(pattern)?;
        modulation.validate()?;
        let threshold = self.config.recruit_threshold;
        let mut recruited = Vec::new();
        let mut capacity_exhausted = false;
        let mut saved_bias = Vec::new();

        for l in 0..self.depth() {
            let act = self.run_window(pattern, modulation);
            let winners = self.slot_winners(l, &act.rates[l]);
            for slot in 0..self.shapes[l].members.len() {
                let lines = self.active_field_lines(l, slot, pattern, &act);
                if lines.is_empty() {
                    continue;
                }
                let best = self.most_similar(l, slot, &lines);
                let supervised = self.shapes[l].members[slot]
                    .iter()
                    .copied()
                    .filter(|&u| self.layers[l][u].alive && self.layers[l][u].bias > 0.0)
                    .max_by(|&a, &b| self.layers[l][a].bias.total_cmp(&self.layers[l][b].bias).then(b.cmp(&a)));
                let target = match (supervised, best) {
                    (Some(u), _) => {
                        self.layers[l][u].committed = true;
                        Some(u)
                    }
                    (None, Some((u, m))) if m >= threshold => Some(u),
                    _ => {
                        let free = winners[slot]
                            .filter(|&u| !self.layers[l][u].committed)
                            .or_else(|| {
                                self.shapes[l].members[slot]
                                    .iter()
                                    .copied()
                                    .find(|&u| self.layers[l][u].alive && !self.layers[l][u].committed)
                            });
                        match free {
                            Some(index) => {
                                let id = NeuronId { layer: l + 1, index };
                                self.recruit(id, &lines);
                                recruited.push(id);
                                Some(index)
                            }
                            None => {
                                capacity_exhausted = true;
                                best.filter(|&(_, m)| m > 0.0).map(|(u, _)| u)
                            }
                        }
                    }
                };
                let Some(index) = target else { continue };
                let id = NeuronId { layer: l + 1, index };
                for &line in &lines {
                    self.attach(id, line)?;
                }
                saved_bias.push((id, self.layers[l][index].bias));
                self.layers[l][index].bias += self.config.recruit_bias;
            }
        }

        self.plasticity_window(pattern, modulation);
        for (id, bias) in saved_bias.into_iter().rev() {
            self.layers[id.layer - 1][id.index].bias = bias;
        }
        self.prune();
        let encode = self.present(pattern, modulation, self.config.max_steps)?;
        Ok(LearnReport { recruited, capacity_exhausted, encode })
    }

    /// Committed neuron of a slot with the largest match to `lines`; ties go
    /// to the lowest index.
    fn most_similar(&self, l: usize, slot: usize, lines: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for &u in &self.shapes[l].members[slot] {
            let unit = &self.layers[l][u];
            if !unit.alive || !unit.committed {
                continue;
            }
            let m = self.match_fraction(l, u, lines);
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((u, m));
            }
        }
        best
    }

    fn plasticity_window(&mut self, pattern: &InputPattern, modulation: &ModulationContext) {
        let np = self.params.neuron;
        let sp = self.params.synapse;
        let eps = self.params.competition.eps_silent;
        let dt = self.params.dt;
        let input = self.input_rates(pattern);
        let mut act = Activity::at_rest(self);
        for _ in 0..self.window(pattern) {
            self.step(&mut act, &input, modulation);
            for l in 0..self.depth() {
                let mut is_winner = vec![false; self.layers[l].len()];
                for w in self.slot_winners(l, &act.rates[l]).into_iter().flatten() {
                    is_winner[w] = true;
                }
                for (u, unit) in self.layers[l].iter().enumerate() {
                    let f = act.rates[l][u];
                    for (d, dend) in act.states[l][u].dendrites.iter().zip(&unit.dendrites) {
                        let s = &mut self.synapses[dend.synapse];
                        if is_winner[u] && d.p > 0.0 {
                            let s_p = np.c5 * d.p * f;
                            synapse::ltp_update(s, s_p, modulation.h, dt, &sp);
                        } else {
                            synapse::passive_decay(s, dt, &sp);
                        }
                        if f < eps && d.p > 0.0 {
                            synapse::ltd_update(s, neuron::ltd_stimulus(d, &np), dt, &sp);
                        } else {
                            synapse::ltd_recovery(s, dt, &sp);
                        }
                    }
                }
            }
        }
    }

    /// Time-averaged lead of `target` over its strongest slot rival during
    /// one presentation, as a fraction of `c1/c0`, clipped to `[0, 1]`.
    pub fn retrieval_score(&self, pattern: &InputPattern, target: NeuronId) -> Result<f64, GrowthError> {
        self.check_pattern(pattern)?;
        let unit = self.unit(target)?;
        if !unit.alive {
            return Ok(0.0);
        }
        let l = target.layer - 1;
        let rivals: Vec<usize> =
            self.shapes[l].members[unit.slot].iter().copied().filter(|&u| u != target.index).collect();
        let input = self.input_rates(pattern);
        let modulation = ModulationContext::default();
        let mut act = Activity::at_rest(self);
        let window = self.window(pattern);
        let mut total = 0.0;
        for _ in 0..window {
            self.step(&mut act, &input, &modulation);
            let rates = &act.rates[l];
            let rival = rivals.iter().map(|&u| rates[u]).fold(0.0, f64::max);
            total += ((rates[target.index] - rival) / self.params.neuron.max_rate()).clamp(0.0, 1.0);
        }
        Ok(total / window as f64)
    }
}
