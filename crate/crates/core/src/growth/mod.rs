//! Self-organizing layered network.
//!
//! Layer 0 is a set of input lines grouped into attribute slots. Every
//! hidden layer is partitioned into slots as well; a hidden slot covers a
//! fixed receptive field of `fan_in` consecutive slots of the layer below,
//! and its neurons may only attach dendrites to lines inside that field.
//! Neurons of one slot share those lines, so retrograde competition makes
//! them mutually exclusive: the slot ends up with one active neuron that
//! encodes the combination of lower-slot values it sees.
//!
//! All neurons start free, with dendrites on random lines of their field.
//! Presenting a pattern runs rate-mode dynamics; learning additionally
//! strengthens slot winners, lets idle synapses decay, prunes broken ones,
//! and recruits a free neuron wherever no committed neuron answers well
//! enough. The top-layer winner is the pattern's coding neuron and its
//! strongest synapses form the coding tree.

mod dynamics;
mod persist;
mod tree;

pub use dynamics::{EncodeResult, LearnReport};
pub use persist::{NetworkFile, NETWORK_MAGIC, NETWORK_SCHEMA_VERSION};
pub use tree::{CodingTree, Retrieval, TreeBranch, TreeNode};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::competition::AxonalBranchGroup;
use crate::synapse::SynapseState;
use crate::{ModelParams, ParamError};

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("invalid growth configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("pattern does not match the input layout: {0}")]
    PatternMismatch(String),
    #[error("no neuron {0}")]
    UnknownNeuron(NeuronId),
    #[error("neuron {0} is dead")]
    DeadNeuron(NeuronId),
    #[error("elapsed time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("network file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a recruited neuron's dendrites find the pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attachment {
    /// Rewire the recruit's dendrites onto exactly the active lines.
    Exact,
    /// Keep the recruit's random dendrites; only those that happen to sit on
    /// active lines get strengthened.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub neurons: usize,
    /// Lower-layer slots per receptive field.
    pub fan_in: usize,
    /// Dendrites per neuron, all attached at initialization.
    pub d_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthConfig {
    /// Number of lines in each input slot. Feedback fibers are modelled as
    /// extra slots here.
    pub slot_sizes: Vec<usize>,
    /// Hidden layers, bottom to top.
    pub layers: Vec<LayerConfig>,
    /// Frequency of an active input line.
    pub input_rate: f64,
    /// Share of a committed winner's effective strength that must sit on the
    /// active lines for the pattern to merge into it instead of recruiting.
    pub recruit_threshold: f64,
    /// Drive bias that lets a fresh recruit win the presentation that
    /// recruited it.
    pub recruit_bias: f64,
    /// Presentation time of one pattern.
    pub presentation: f64,
    /// Step cap for `present` when the slots have not yet resolved.
    pub max_steps: usize,
    /// Slot tolerance as a fraction of the slot's maximum rate.
    pub relative_eps: f64,
    pub attachment: Attachment,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            slot_sizes: vec![2, 3, 3, 4, 2, 4, 3, 3],
            layers: vec![
                LayerConfig { neurons: 64, fan_in: 2, d_max: 4 },
                LayerConfig { neurons: 16, fan_in: 4, d_max: 8 },
            ],
            input_rate: 0.5,
            recruit_threshold: 0.7,
            recruit_bias: 3.0,
            presentation: 5.0,
            max_steps: 500,
            relative_eps: 0.05,
            attachment: Attachment::Exact,
        }
    }
}

impl GrowthConfig {
    /// A single hidden layer whose one slot sees every input slot.
    pub fn single_layer(slot_sizes: Vec<usize>, neurons: usize, d_max: usize) -> Self {
        let fan_in = slot_sizes.len();
        Self {
            slot_sizes,
            layers: vec![LayerConfig { neurons, fan_in, d_max }],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GrowthError> {
        if self.slot_sizes.is_empty() || self.slot_sizes.contains(&0) {
            return Err(GrowthError::Config("every input slot needs at least one line".into()));
        }
        if self.layers.is_empty() {
            return Err(GrowthError::Config("at least one hidden layer is required".into()));
        }
        ParamError::positive("growth.input_rate", self.input_rate)?;
        ParamError::positive("growth.recruit_threshold", self.recruit_threshold)?;
        if self.recruit_threshold > 1.0 {
            return Err(ParamError::new("growth.recruit_threshold", "must be <= 1", self.recruit_threshold).into());
        }
        if !(self.recruit_bias >= 0.0 && self.recruit_bias.is_finite()) {
            return Err(ParamError::new("growth.recruit_bias", "must be >= 0", self.recruit_bias).into());
        }
        ParamError::positive("growth.presentation", self.presentation)?;
        ParamError::positive("growth.relative_eps", self.relative_eps)?;
        if self.max_steps == 0 {
            return Err(GrowthError::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// A hidden neuron, addressed by 1-based layer and index within the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NeuronId {
    pub layer: usize,
    pub index: usize,
}

impl std::fmt::Display for NeuronId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}#{}", self.layer, self.index)
    }
}

/// The active line of one input slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotValue {
    /// Index of the line within its slot.
    pub line: usize,
    pub freq: f64,
}

/// A stimulus: at most one active line per input slot. A `None` slot is
/// silent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPattern {
    pub slots: Vec<Option<SlotValue>>,
    pub duration: f64,
}

impl InputPattern {
    pub fn new(values: &[Option<usize>], freq: f64, duration: f64) -> Self {
        Self {
            slots: values.iter().map(|v| v.map(|line| SlotValue { line, freq })).collect(),
            duration,
        }
    }

    /// Active line index per slot.
    pub fn values(&self) -> Vec<Option<usize>> {
        self.slots.iter().map(|s| s.map(|v| v.line)).collect()
    }

    pub fn is_silent(&self) -> bool {
        self.slots.iter().all(|s| s.is_none_or(|v| v.freq <= 0.0))
    }
}

/// One attachment of a neuron onto a line of the layer below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dendrite {
    pub line: usize,
    pub synapse: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub slot: usize,
    pub dendrites: Vec<Dendrite>,
    /// Has been recruited as a coding neuron.
    pub committed: bool,
    pub alive: bool,
    /// Supervised facilitation (positive) or inhibition (negative) added to
    /// the drive.
    pub bias: f64,
}

/// Static geometry of one hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerShape {
    /// Lower-layer slots covered by each slot of this layer.
    pub fields: Vec<Vec<usize>>,
    /// Neuron indices in each slot of this layer.
    pub members: Vec<Vec<usize>>,
    pub d_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub config: GrowthConfig,
    pub params: ModelParams,
    pub rng_seed: u64,
    /// Hidden layers; `layers[0]` is layer 1.
    pub layers: Vec<Vec<Unit>>,
    pub shapes: Vec<LayerShape>,
    /// Synapse arena; broken synapses stay in place with `alive == false`.
    pub synapses: Vec<SynapseState>,
}

impl Network {
    /// Builds a network of free neurons, each with `d_max` dendrites on
    /// distinct random lines of its receptive field, all at `w_init`.
    pub fn new(config: GrowthConfig, params: ModelParams, seed: u64) -> Result<Self, GrowthError> {
        config.validate()?;
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lower_slots: Vec<usize> = config.slot_sizes.clone();
        let mut shapes = Vec::with_capacity(config.layers.len());
        let mut layers = Vec::with_capacity(config.layers.len());
        let mut synapses = Vec::new();
        // line index ranges of each lower slot
        let mut lower_lines: Vec<Vec<usize>> = slot_line_ranges(&lower_slots);

        for (li, lc) in config.layers.iter().enumerate() {
            if lc.fan_in == 0 || lc.neurons == 0 {
                return Err(GrowthError::Config(format!("layer {} needs neurons and fan_in", li + 1)));
            }
            let n_lower = lower_slots.len();
            let n_slots = n_lower.div_ceil(lc.fan_in);
            if lc.neurons < n_slots {
                return Err(GrowthError::Config(format!(
                    "layer {} has {} neurons for {} slots",
                    li + 1,
                    lc.neurons,
                    n_slots
                )));
            }
            let fields: Vec<Vec<usize>> = (0..n_slots)
                .map(|k| (k * lc.fan_in..((k + 1) * lc.fan_in).min(n_lower)).collect())
                .collect();
            if lc.d_max < lc.fan_in.min(n_lower) {
                return Err(GrowthError::Config(format!(
                    "layer {}: d_max {} cannot cover a receptive field of {} slots",
                    li + 1,
                    lc.d_max,
                    lc.fan_in
                )));
            }
            let mut members = vec![Vec::new(); n_slots];
            let mut units = Vec::with_capacity(lc.neurons);
            for idx in 0..lc.neurons {
                let slot = idx * n_slots / lc.neurons;
                members[slot].push(idx);
                let field_lines: Vec<usize> =
                    fields[slot].iter().flat_map(|&s| lower_lines[s].iter().copied()).collect();
                if lc.d_max > field_lines.len() {
                    return Err(GrowthError::Config(format!(
                        "layer {}: d_max {} exceeds the {} lines available to slot {}",
                        li + 1,
                        lc.d_max,
                        field_lines.len(),
                        slot
                    )));
                }
                let mut picks: Vec<usize> =
                    sample(&mut rng, field_lines.len(), lc.d_max).into_iter().map(|i| field_lines[i]).collect();
                picks.sort_unstable();
                let dendrites = picks
                    .into_iter()
                    .map(|line| {
                        synapses.push(SynapseState::new(&params.synapse));
                        Dendrite { line, synapse: synapses.len() - 1 }
                    })
                    .collect();
                units.push(Unit { slot, dendrites, committed: false, alive: true, bias: 0.0 });
            }
            lower_lines = members.clone();
            lower_slots = members.iter().map(Vec::len).collect();
            shapes.push(LayerShape { fields, members, d_max: lc.d_max });
            layers.push(units);
        }
        Ok(Self { config, params, rng_seed: seed, layers, shapes, synapses })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Line count of each input slot.
    pub fn input_slots(&self) -> &[usize] {
        &self.config.slot_sizes
    }

    pub fn input_line_count(&self) -> usize {
        self.config.slot_sizes.iter().sum()
    }

    /// Global index of `line` within input slot `slot`.
    pub fn input_line(&self, slot: usize, line: usize) -> usize {
        self.config.slot_sizes[..slot].iter().sum::<usize>() + line
    }

    /// Lines feeding `layer` (1-based), grouped by lower slot.
    pub fn lower_slot_lines(&self, layer: usize) -> Vec<Vec<usize>> {
        if layer == 1 {
            slot_line_ranges(&self.config.slot_sizes)
        } else {
            self.shapes[layer - 2].members.clone()
        }
    }

    pub fn unit(&self, id: NeuronId) -> Result<&Unit, GrowthError> {
        id.layer
            .checked_sub(1)
            .and_then(|l| self.layers.get(l))
            .and_then(|units| units.get(id.index))
            .ok_or(GrowthError::UnknownNeuron(id))
    }

    fn unit_mut(&mut self, id: NeuronId) -> Result<&mut Unit, GrowthError> {
        id.layer
            .checked_sub(1)
            .and_then(|l| self.layers.get_mut(l))
            .and_then(|units| units.get_mut(id.index))
            .ok_or(GrowthError::UnknownNeuron(id))
    }

    /// Builds a pattern at the configured input rate and presentation time.
    pub fn pattern(&self, values: &[Option<usize>]) -> InputPattern {
        InputPattern::new(values, self.config.input_rate, self.config.presentation)
    }

    pub fn check_pattern(&self, pattern: &InputPattern) -> Result<(), GrowthError> {
        let sizes = &self.config.slot_sizes;
        if pattern.slots.len() != sizes.len() {
            return Err(GrowthError::PatternMismatch(format!(
                "{} slots given, network has {}",
                pattern.slots.len(),
                sizes.len()
            )));
        }
        for (i, (v, &size)) in pattern.slots.iter().zip(sizes).enumerate() {
            if let Some(v) = v {
                if v.line >= size {
                    return Err(GrowthError::PatternMismatch(format!(
                        "slot {i} has {size} lines, line {} requested",
                        v.line
                    )));
                }
                if !(v.freq >= 0.0 && v.freq.is_finite()) {
                    return Err(GrowthError::PatternMismatch(format!("slot {i} frequency {}", v.freq)));
                }
            }
        }
        if !(pattern.duration >= 0.0) {
            return Err(GrowthError::NegativeTime(pattern.duration));
        }
        Ok(())
    }

    /// Count of alive, unrecruited neurons per hidden layer.
    pub fn free_pool(&self) -> Vec<usize> {
        self.layers
            .iter()
            .map(|units| units.iter().filter(|u| u.alive && !u.committed).count())
            .collect()
    }

    /// Committed neurons of the top layer.
    pub fn coding_neurons(&self) -> Vec<NeuronId> {
        let layer = self.depth();
        self.layers[layer - 1]
            .iter()
            .enumerate()
            .filter(|(_, u)| u.alive && u.committed)
            .map(|(index, _)| NeuronId { layer, index })
            .collect()
    }

    /// Branch groups of every line feeding `layer`, over live dendrites of
    /// live neurons.
    pub fn branch_groups(&self, layer: usize) -> Vec<AxonalBranchGroup> {
        let n_lines: usize = if layer == 1 { self.input_line_count() } else { self.layers[layer - 2].len() };
        let mut groups: Vec<AxonalBranchGroup> =
            (0..n_lines).map(|source| AxonalBranchGroup { source, members: Vec::new() }).collect();
        for (u, unit) in self.layers[layer - 1].iter().enumerate() {
            if !unit.alive {
                continue;
            }
            for (k, d) in unit.dendrites.iter().enumerate() {
                if self.synapses[d.synapse].alive {
                    groups[d.line].members.push((u, k));
                }
            }
        }
        groups.retain(|g| !g.members.is_empty());
        groups
    }

    /// Sets a constant drive bias on each target until [`Self::clear_bias`].
    pub fn supervised_bias(&mut self, targets: &[NeuronId], facilitation: f64) -> Result<(), GrowthError> {
        for &id in targets {
            self.unit(id)?;
        }
        for &id in targets {
            self.unit_mut(id)?.bias = facilitation;
        }
        Ok(())
    }

    pub fn clear_bias(&mut self) {
        for unit in self.layers.iter_mut().flatten() {
            unit.bias = 0.0;
        }
    }

    /// Removes a neuron: its synapses break and its axon falls silent.
    pub fn kill(&mut self, id: NeuronId) -> Result<(), GrowthError> {
        let dendrites = std::mem::take(&mut self.unit_mut(id)?.dendrites);
        for d in dendrites {
            self.synapses[d.synapse].alive = false;
        }
        let unit = self.unit_mut(id)?;
        unit.alive = false;
        unit.committed = false;
        Ok(())
    }

    /// Passive decay and devaluation recovery of every synapse over an idle
    /// interval, followed by pruning. Recruits nothing.
    pub fn decay_epoch(&mut self, elapsed: f64) -> Result<(), GrowthError> {
        if !(elapsed >= 0.0) {
            return Err(GrowthError::NegativeTime(elapsed));
        }
        if elapsed == 0.0 {
            return Ok(());
        }
        let sp = self.params.synapse;
        for s in &mut self.synapses {
            s.idle(elapsed, &sp);
        }
        self.prune();
        Ok(())
    }

    /// Breaks synapses below `w_prune`, detaches them, and returns neurons
    /// left without dendrites to the free pool.
    pub fn prune(&mut self) {
        let sp = self.params.synapse;
        for s in &mut self.synapses {
            crate::synapse::prune_check(s, &sp);
        }
        let synapses = &self.synapses;
        for unit in self.layers.iter_mut().flatten() {
            unit.dendrites.retain(|d| synapses[d.synapse].alive);
            if unit.dendrites.is_empty() {
                unit.committed = false;
            }
        }
    }

    /// Attaches a fresh dendrite of `id` onto `line` at `w_init`.
    pub fn attach(&mut self, id: NeuronId, line: usize) -> Result<bool, GrowthError> {
        let unit = self.unit(id)?;
        if !unit.alive {
            return Err(GrowthError::DeadNeuron(id));
        }
        let d_max = self.shapes[id.layer - 1].d_max;
        if unit.dendrites.len() >= d_max || unit.dendrites.iter().any(|d| d.line == line) {
            return Ok(false);
        }
        if !self.field_lines(id)?.contains(&line) {
            return Ok(false);
        }
        self.synapses.push(SynapseState::new(&self.params.synapse));
        let synapse = self.synapses.len() - 1;
        self.unit_mut(id)?.dendrites.push(Dendrite { line, synapse });
        Ok(true)
    }

    /// Lines inside the receptive field of `id`.
    pub fn field_lines(&self, id: NeuronId) -> Result<Vec<usize>, GrowthError> {
        let unit = self.unit(id)?;
        let lower = self.lower_slot_lines(id.layer);
        Ok(self.shapes[id.layer - 1].fields[unit.slot]
            .iter()
            .flat_map(|&s| lower[s].iter().copied())
            .collect())
    }

    /// Effective strength of the live synapse from `line` onto `id`, if any.
    pub fn strength(&self, id: NeuronId, line: usize) -> Option<f64> {
        let unit = self.unit(id).ok()?;
        unit.dendrites
            .iter()
            .find(|d| d.line == line)
            .map(|d| crate::synapse::effective_strength(&self.synapses[d.synapse]))
    }
}

fn slot_line_ranges(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&n| {
            let r = (start..start + n).collect();
            start += n;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests;
