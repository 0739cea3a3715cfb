//! Network-level memory protocols: interference between overlapping
//! patterns and savings on relearning.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::growth::{GrowthConfig, InputPattern, Network, NeuronId};
use crate::neuron::ModulationContext;
use crate::ModelParams;

use super::{ExperimentError, ProtocolResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    AThenB,
    BThenA,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferenceArgs {
    pub overlaps: Vec<f64>,
    pub order: Order,
    pub slots: usize,
    pub slot_size: usize,
    pub neurons: usize,
    pub d_max: usize,
    /// Epochs for the pattern learned first; more epochs consolidate it.
    pub first_epochs: usize,
    pub second_epochs: usize,
}

impl Default for InterferenceArgs {
    fn default() -> Self {
        Self {
            overlaps: vec![0.0, 0.25, 0.5, 0.75],
            order: Order::AThenB,
            slots: 4,
            slot_size: 4,
            neurons: 16,
            d_max: 8,
            first_epochs: 5,
            second_epochs: 2,
        }
    }
}

/// Single-layer network whose one slot sees every input slot. Only exact
/// matches merge, so two distinct patterns get distinct coding neurons.
fn memory_network(slots: usize, slot_size: usize, neurons: usize, d_max: usize, params: &ModelParams, seed: u64) -> Result<Network, ExperimentError> {
    let mut cfg = GrowthConfig::single_layer(vec![slot_size; slots], neurons, d_max);
    cfg.recruit_threshold = 1.0;
    Ok(Network::new(cfg, *params, seed)?)
}

fn random_values(rng: &mut ChaCha8Rng, slots: usize, slot_size: usize) -> Vec<Option<usize>> {
    (0..slots).map(|_| Some(rng.gen_range(0..slot_size))).collect()
}

/// `b` shares `shared` randomly chosen slots with `a` and differs on the rest.
fn overlapping(rng: &mut ChaCha8Rng, a: &[Option<usize>], shared: usize, slot_size: usize) -> Vec<Option<usize>> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.shuffle(rng);
    let mut b = a.to_vec();
    for &s in &idx[shared..] {
        let old = a[s].unwrap_or(0);
        b[s] = Some((old + rng.gen_range(1..slot_size)) % slot_size);
    }
    b
}

fn train(net: &mut Network, p: &InputPattern, epochs: usize) -> Result<Option<NeuronId>, ExperimentError> {
    let m = ModulationContext::default();
    let mut id = None;
    for _ in 0..epochs {
        id = net.learn(p, &m)?.encode.winner();
    }
    Ok(id)
}

fn score(net: &Network, p: &InputPattern, id: Option<NeuronId>) -> Result<f64, ExperimentError> {
    match id {
        Some(id) => Ok(net.retrieval_score(p, id)?),
        None => Ok(0.0),
    }
}

/// Learns A and B in the given order with B sharing `overlap` of A's slots,
/// then scores retrieval of each by its own coding neuron. Baselines learn
/// each pattern alone in a fresh network with the same seed.
pub fn interference_protocol(args: &InterferenceArgs, params: &ModelParams, seed: u64) -> Result<ProtocolResult, ExperimentError> {
    params.validate()?;
    if args.overlaps.iter().any(|o| !(0.0..=1.0).contains(o)) {
        return Err(ExperimentError::Precondition("overlap must lie in [0, 1]".into()));
    }
    if args.slot_size < 2 || args.slots == 0 {
        return Err(ExperimentError::Precondition("need at least one slot of two lines".into()));
    }
    let mut res = ProtocolResult::new("interfere", seed, params, &["overlap", "score_a", "score_b", "baseline_a", "baseline_b"]);
    res.setting("args", args);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_vals = random_values(&mut rng, args.slots, args.slot_size);
    for &overlap in &args.overlaps {
        let shared = (overlap * args.slots as f64).round() as usize;
        let mut prng = ChaCha8Rng::seed_from_u64(seed ^ (shared as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let b_vals = overlapping(&mut prng, &a_vals, shared, args.slot_size);
        let build = || memory_network(args.slots, args.slot_size, args.neurons, args.d_max, params, seed);
        let mut net = build()?;
        let (pa, pb) = (net.pattern(&a_vals), net.pattern(&b_vals));
        let (first, second) = match args.order {
            Order::AThenB => (&pa, &pb),
            Order::BThenA => (&pb, &pa),
        };
        let id_first = train(&mut net, first, args.first_epochs)?;
        let id_second = train(&mut net, second, args.second_epochs)?;
        let (id_a, id_b) = match args.order {
            Order::AThenB => (id_first, id_second),
            Order::BThenA => (id_second, id_first),
        };
        let (epochs_a, epochs_b) = match args.order {
            Order::AThenB => (args.first_epochs, args.second_epochs),
            Order::BThenA => (args.second_epochs, args.first_epochs),
        };
        let mut alone = build()?;
        let base_a = train(&mut alone, &pa, epochs_a)?;
        let baseline_a = score(&alone, &pa, base_a)?;
        let mut alone = build()?;
        let base_b = train(&mut alone, &pb, epochs_b)?;
        let baseline_b = score(&alone, &pb, base_b)?;
        res.push(vec![
            overlap.into(),
            score(&net, &pa, id_a)?.into(),
            score(&net, &pb, id_b)?.into(),
            baseline_a.into(),
            baseline_b.into(),
        ]);
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SavingsArgs {
    pub slots: usize,
    pub slot_size: usize,
    pub neurons: usize,
    pub d_max: usize,
    /// Learning-rate hormone during training.
    pub h: f64,
    /// Retrieval score that counts as successful recall.
    pub criterion: f64,
    pub max_epochs: usize,
    /// Idle time per decay increment while waiting for recall to fail.
    pub decay_step: f64,
    pub max_decay: f64,
    /// Idle time for the run where every synapse is expected to break.
    pub long_decay: f64,
    /// Extra rehearsal epochs before a fixed decay, for the consolidation sweep.
    pub consolidation: Vec<usize>,
    /// Idle time used in the consolidation sweep.
    pub sweep_decay: f64,
}

impl Default for SavingsArgs {
    fn default() -> Self {
        Self {
            slots: 4,
            slot_size: 4,
            neurons: 16,
            d_max: 8,
            h: 0.2,
            criterion: 0.8,
            max_epochs: 50,
            decay_step: 2.0,
            max_decay: 2000.0,
            long_decay: 5000.0,
            consolidation: vec![0, 1, 2, 4, 8],
            sweep_decay: 40.0,
        }
    }
}

struct Learner<'a> {
    args: &'a SavingsArgs,
    modulation: ModulationContext,
}

impl Learner<'_> {
    fn recalls(&self, net: &Network, p: &InputPattern, id: Option<NeuronId>) -> Result<bool, ExperimentError> {
        let Some(id) = id else { return Ok(false) };
        Ok(net.encode(p)?.winner() == Some(id) && net.retrieval_score(p, id)? >= self.args.criterion)
    }

    /// Epochs until recall succeeds, capped at `max_epochs`.
    fn to_criterion(&self, net: &mut Network, p: &InputPattern) -> Result<(usize, Option<NeuronId>), ExperimentError> {
        for epoch in 1..=self.args.max_epochs {
            let id = net.learn(p, &self.modulation)?.encode.winner();
            if self.recalls(net, p, id)? {
                return Ok((epoch, id));
            }
        }
        Ok((self.args.max_epochs, net.encode(p)?.winner()))
    }

    /// Idle time until recall fails.
    fn decay_to_failure(&self, net: &mut Network, p: &InputPattern, id: Option<NeuronId>) -> Result<f64, ExperimentError> {
        let mut t = 0.0;
        while t < self.args.max_decay && self.recalls(net, p, id)? {
            net.decay_epoch(self.args.decay_step)?;
            t += self.args.decay_step;
        }
        Ok(t)
    }
}

/// Learns a pattern to criterion, lets it decay until recall fails and
/// relearns it. Relearning is compared with the initial epochs and with a
/// novel pattern learned from the same decayed state. Extra rows repeat
/// the run after a decay long enough to break every synapse, and sweep
/// consolidation epochs before a fixed decay.
pub fn savings_protocol(args: &SavingsArgs, params: &ModelParams, seed: u64) -> Result<ProtocolResult, ExperimentError> {
    params.validate()?;
    if !(args.criterion > 0.0 && args.criterion <= 1.0) || args.max_epochs == 0 || !(args.decay_step > 0.0) {
        return Err(ExperimentError::Precondition("criterion in (0, 1], max_epochs and decay_step positive".into()));
    }
    let mut res = ProtocolResult::new(
        "savings",
        seed,
        params,
        &["scenario", "consolidation", "decay_time", "initial_epochs", "relearn_epochs", "novel_epochs", "savings"],
    );
    res.setting("args", args);
    let learner = Learner { args, modulation: ModulationContext { m: 1.0, h: args.h } };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = random_values(&mut rng, args.slots, args.slot_size);
    let novel_vals: Vec<Option<usize>> =
        vals.iter().map(|v| v.map(|x| (x + rng.gen_range(1..args.slot_size)) % args.slot_size)).collect();
    let fresh = || memory_network(args.slots, args.slot_size, args.neurons, args.d_max, params, seed);

    let mut scenario = |name: &str, consolidation: usize, decay: Option<f64>| -> Result<(), ExperimentError> {
        let mut net = fresh()?;
        let p = net.pattern(&vals);
        let novel = net.pattern(&novel_vals);
        let (initial, id) = learner.to_criterion(&mut net, &p)?;
        for _ in 0..consolidation {
            net.learn(&p, &learner.modulation)?;
        }
        let decay_time = match decay {
            Some(t) => {
                net.decay_epoch(t)?;
                t
            }
            None => learner.decay_to_failure(&mut net, &p, id)?,
        };
        let mut control = net.clone();
        let (novel_epochs, _) = learner.to_criterion(&mut control, &novel)?;
        let (relearn, _) = learner.to_criterion(&mut net, &p)?;
        res.push(vec![
            name.into(),
            consolidation.into(),
            decay_time.into(),
            initial.into(),
            relearn.into(),
            novel_epochs.into(),
            (initial as f64 - relearn as f64).into(),
        ]);
        Ok(())
    };
    scenario("default", 0, None)?;
    scenario("long_decay", 0, Some(args.long_decay))?;
    for &c in &args.consolidation {
        scenario("consolidation", c, Some(args.sweep_decay))?;
    }
    Ok(res)
}
