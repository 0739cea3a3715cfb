use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::growth::{GrowthConfig, Network, NeuronId};
use crate::neuron::ModulationContext;
use crate::ModelParams;

use super::{ExperimentError, ProtocolResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowArgs {
    /// Random patterns drawn from the seed.
    pub patterns: usize,
    /// Interleaved passes over the pattern set.
    pub epochs: usize,
}

impl Default for GrowArgs {
    fn default() -> Self {
        Self { patterns: 10, epochs: 6 }
    }
}

/// Random full patterns, one line per slot.
pub fn random_patterns(slot_sizes: &[usize], count: usize, seed: u64) -> Vec<Vec<Option<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7061_7474_6572_6e73);
    (0..count).map(|_| slot_sizes.iter().map(|&s| Some(rng.gen_range(0..s))).collect()).collect()
}

fn id_text(id: Option<NeuronId>) -> String {
    id.map_or_else(|| "-".to_string(), |id| id.to_string())
}

/// Grows a network on `args.patterns` random patterns over interleaved
/// epochs, then checks every pattern: repeated presentation agrees, the
/// coding neuron is unshared, retrieval reconstructs the input, and each
/// one-slot-silenced variant still reaches the same coding neuron.
pub fn grow_protocol(
    args: &GrowArgs,
    config: &GrowthConfig,
    params: &ModelParams,
    seed: u64,
) -> Result<(ProtocolResult, Network), ExperimentError> {
    let mut net = Network::new(config.clone(), *params, seed)?;
    let values = random_patterns(&config.slot_sizes, args.patterns, seed);
    let m = ModulationContext::default();
    let mut coding = vec![None; values.len()];
    for _ in 0..args.epochs {
        for (i, v) in values.iter().enumerate() {
            coding[i] = net.learn(&net.pattern(v), &m)?.encode.winner();
        }
    }
    let mut res = ProtocolResult::new(
        "grow",
        seed,
        params,
        &[
            "pattern",
            "values",
            "coding_neuron",
            "deterministic",
            "converged",
            "unique",
            "roundtrip",
            "degraded_correct",
            "degraded_total",
            "score",
        ],
    );
    res.setting("args", args);
    res.setting("growth", config);
    let (mut rt, mut deg, mut deg_total) = (0usize, 0usize, 0usize);
    for (i, v) in values.iter().enumerate() {
        let p = net.pattern(v);
        let first = net.encode(&p)?;
        let deterministic = (0..3).all(|_| net.encode(&p).map(|e| e == first).unwrap_or(false));
        let winner = first.winner();
        let unique = winner.is_some() && coding.iter().filter(|c| **c == winner).count() == 1;
        let roundtrip = net.retrieve(&p)?.reconstruction.values() == *v;
        let mut ok = 0;
        for s in 0..v.len() {
            let mut q = v.clone();
            q[s] = None;
            if net.retrieve(&net.pattern(&q))?.winner == winner {
                ok += 1;
            }
        }
        rt += usize::from(roundtrip);
        deg += ok;
        deg_total += v.len();
        let score = match winner {
            Some(id) => net.retrieval_score(&p, id)?,
            None => 0.0,
        };
        let text: Vec<String> = v.iter().map(|x| x.map_or("-".into(), |x| x.to_string())).collect();
        res.push(vec![
            i.into(),
            text.join("-").as_str().into(),
            id_text(winner).as_str().into(),
            usize::from(deterministic).into(),
            usize::from(first.converged).into(),
            usize::from(unique).into(),
            usize::from(roundtrip).into(),
            ok.into(),
            v.len().into(),
            score.into(),
        ]);
    }
    res.summary.push(("roundtrip".into(), rt as f64));
    res.summary.push(("degraded_fraction".into(), deg as f64 / deg_total.max(1) as f64));
    Ok((res, net))
}
