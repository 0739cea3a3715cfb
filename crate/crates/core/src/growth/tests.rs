use super::*;
use crate::neuron::ModulationContext;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn flat(slots: usize, size: usize, neurons: usize) -> Network {
    let cfg = GrowthConfig::single_layer(vec![size; slots], neurons, slots);
    Network::new(cfg, ModelParams::default(), 1).unwrap()
}

fn m() -> ModulationContext {
    ModulationContext::default()
}

fn learn_n(net: &mut Network, values: &[Option<usize>], n: usize) -> LearnReport {
    let p = net.pattern(values);
    let mut last = None;
    for _ in 0..n {
        last = Some(net.learn(&p, &m()).unwrap());
    }
    last.unwrap()
}

fn all(v: &[usize]) -> Vec<Option<usize>> {
    v.iter().map(|&x| Some(x)).collect()
}

#[test]
fn same_seed_same_network() {
    let a = Network::new(GrowthConfig::default(), ModelParams::default(), 9).unwrap();
    let b = Network::new(GrowthConfig::default(), ModelParams::default(), 9).unwrap();
    let c = Network::new(GrowthConfig::default(), ModelParams::default(), 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn full_d_max_connects_everything() {
    let cfg = GrowthConfig::single_layer(vec![2, 3], 4, 5);
    let net = Network::new(cfg, ModelParams::default(), 3).unwrap();
    for unit in &net.layers[0] {
        let mut lines: Vec<usize> = unit.dendrites.iter().map(|d| d.line).collect();
        lines.sort_unstable();
        assert_eq!(lines, vec![0, 1, 2, 3, 4]);
    }
    assert!(net.synapses.iter().all(|s| s.w == net.params.synapse.w_init));
}

#[test]
fn d_max_beyond_field_is_rejected() {
    let cfg = GrowthConfig::single_layer(vec![2, 3], 4, 6);
    assert!(matches!(Network::new(cfg, ModelParams::default(), 0), Err(GrowthError::Config(_))));
}

#[test]
fn attachment_is_uniform() {
    // 1000 expected draws per line
    let lines = 10;
    let cfg = GrowthConfig::single_layer(vec![lines], 1000 * lines, 1);
    let net = Network::new(cfg, ModelParams::default(), 42).unwrap();
    let mut counts = vec![0usize; lines];
    for unit in &net.layers[0] {
        counts[unit.dendrites[0].line] += 1;
    }
    let expected = 1000.0;
    let sigma = (1000.0 * (1.0 - 1.0 / lines as f64)).sqrt();
    let mut chi2 = 0.0;
    for &c in &counts {
        assert!((c as f64 - expected).abs() < 3.0 * sigma, "{counts:?}");
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    // 99.9th percentile of chi-square with 9 degrees of freedom
    assert!(chi2 < 27.88, "chi2 = {chi2}");
}

#[test]
fn silent_pattern_has_no_winner() {
    let net = flat(4, 3, 8);
    let e = net.encode(&net.pattern(&[None; 4])).unwrap();
    assert!(e.converged);
    assert_eq!(e.winner(), None);
    assert!(e.winners.iter().all(Option::is_none));
}

#[test]
fn present_is_pure() {
    let mut net = flat(4, 3, 8);
    learn_n(&mut net, &all(&[0, 1, 2, 0]), 2);
    let before = net.clone();
    let p = net.pattern(&all(&[0, 1, 2, 1]));
    let a = net.encode(&p).unwrap();
    let b = net.encode(&p).unwrap();
    assert_eq!(a, b);
    assert_eq!(net, before);
}

#[test]
fn pattern_layout_is_checked() {
    let net = flat(4, 3, 8);
    assert!(matches!(net.encode(&net.pattern(&[Some(0); 3])), Err(GrowthError::PatternMismatch(_))));
    assert!(matches!(net.encode(&net.pattern(&[Some(3); 4])), Err(GrowthError::PatternMismatch(_))));
}

#[test]
fn novel_pattern_recruits_and_wins() {
    let mut net = flat(8, 3, 16);
    let r = learn_n(&mut net, &all(&[0; 8]), 1);
    assert_eq!(r.recruited.len(), 1);
    let id = r.recruited[0];
    assert!(net.unit(id).unwrap().committed);
    assert_eq!(net.free_pool(), vec![15]);
    assert_eq!(net.encode(&net.pattern(&all(&[0; 8]))).unwrap().winner(), Some(id));

    let r = learn_n(&mut net, &all(&[1; 8]), 1);
    assert_eq!(r.recruited.len(), 1);
    assert_ne!(r.recruited[0], id);
}

#[test]
fn near_duplicate_merges() {
    let mut net = flat(8, 3, 16);
    let a = learn_n(&mut net, &all(&[0; 8]), 3).encode.winner().unwrap();
    let r = learn_n(&mut net, &all(&[0, 0, 0, 0, 0, 0, 0, 2]), 1);
    assert!(r.recruited.is_empty());
    assert_eq!(r.encode.winner(), Some(a));
}

#[test]
fn exhausted_pool_merges_into_most_similar() {
    let mut net = flat(4, 3, 2);
    let a = learn_n(&mut net, &all(&[0, 0, 0, 0]), 2).encode.winner().unwrap();
    let b = learn_n(&mut net, &all(&[1, 1, 1, 1]), 2).encode.winner().unwrap();
    assert_ne!(a, b);
    let r = learn_n(&mut net, &all(&[0, 0, 2, 2]), 1);
    assert!(r.capacity_exhausted);
    assert!(r.recruited.is_empty());
    assert_eq!(net.free_pool(), vec![0]);
}

#[test]
fn rehearsal_speeds_convergence() {
    let mut net = flat(6, 3, 12);
    learn_n(&mut net, &all(&[0, 0, 0, 0, 0, 0]), 3);
    learn_n(&mut net, &all(&[1, 1, 1, 1, 1, 1]), 3);
    let target = all(&[0, 0, 0, 1, 1, 1]);
    learn_n(&mut net, &target, 1);
    let p = net.pattern(&target);
    let early = net.encode(&p).unwrap();
    learn_n(&mut net, &target, 49);
    let late = net.encode(&p).unwrap();
    assert!(late.converged);
    assert!(late.steps_used < early.steps_used, "{} vs {}", late.steps_used, early.steps_used);
}

#[test]
fn retrieve_round_trips_and_generalizes() {
    let mut net = flat(8, 3, 16);
    let v = all(&[0, 1, 2, 0, 1, 2, 0, 1]);
    let id = learn_n(&mut net, &v, 3).encode.winner().unwrap();
    let r = net.retrieve(&net.pattern(&v)).unwrap();
    assert_eq!(r.winner, Some(id));
    assert_eq!(r.reconstruction.values(), v);
    let mut degraded = v.clone();
    degraded[3] = None;
    let r = net.retrieve(&net.pattern(&degraded)).unwrap();
    assert_eq!(r.winner, Some(id));
    assert_eq!(r.reconstruction.values(), v);
}

#[test]
fn single_layer_tree_has_depth_one_and_covers_pattern() {
    let mut net = flat(4, 3, 8);
    let v = all(&[2, 0, 1, 2]);
    let id = learn_n(&mut net, &v, 2).encode.winner().unwrap();
    let tree = net.coding_tree(id).unwrap();
    assert_eq!(tree.depth(), 1);
    assert_eq!(tree.leaves(), vec![(0, 2), (1, 0), (2, 1), (3, 2)]);
}

#[test]
fn shared_subpattern_shares_tree_node() {
    let mut net = Network::new(GrowthConfig::default(), ModelParams::default(), 5).unwrap();
    let a = all(&[0, 1, 0, 0, 0, 0, 0, 0]);
    let b = all(&[0, 1, 1, 1, 1, 1, 1, 1]);
    for _ in 0..4 {
        learn_n(&mut net, &a, 1);
        learn_n(&mut net, &b, 1);
    }
    let ra = net.retrieve(&net.pattern(&a)).unwrap();
    let rb = net.retrieve(&net.pattern(&b)).unwrap();
    let (ta, tb) = (ra.winner.unwrap(), rb.winner.unwrap());
    assert_ne!(ta, tb);
    let na = net.coding_tree(ta).unwrap();
    let nb = net.coding_tree(tb).unwrap();
    assert_eq!(na.depth(), 2);
    let first = |t: &CodingTree| match &t.children[0].child {
        TreeNode::Neuron(sub) => sub.root,
        TreeNode::Line { .. } => panic!("expected a neuron"),
    };
    assert_eq!(first(&na), first(&nb));
    assert_ne!(na.neurons()[2..], nb.neurons()[2..]);
    assert_eq!(ra.reconstruction.values(), a);
    assert_eq!(rb.reconstruction.values(), b);
}

#[test]
fn coding_tree_rejects_dead_root() {
    let mut net = flat(4, 3, 8);
    let id = NeuronId { layer: 1, index: 0 };
    net.kill(id).unwrap();
    assert!(matches!(net.coding_tree(id), Err(GrowthError::DeadNeuron(_))));
    assert!(matches!(net.coding_tree(NeuronId { layer: 1, index: 99 }), Err(GrowthError::UnknownNeuron(_))));
}

#[test]
fn decay_epoch_zero_is_identity() {
    let mut net = flat(4, 3, 8);
    learn_n(&mut net, &all(&[0, 0, 0, 0]), 1);
    let before = net.clone();
    net.decay_epoch(0.0).unwrap();
    assert_eq!(net, before);
    assert!(net.decay_epoch(-1.0).is_err());
}

#[test]
fn rehearsed_memory_outlives_weak_one() {
    let mut net = flat(6, 3, 12);
    let weak = all(&[0; 6]);
    let strong = all(&[1; 6]);
    let w = learn_n(&mut net, &weak, 1).encode.winner().unwrap();
    let s = learn_n(&mut net, &strong, 20).encode.winner().unwrap();
    let sp = net.params.synapse;
    let r_weak = net.synapses[net.unit(w).unwrap().dendrites[0].synapse].r;
    let r_strong = net.synapses[net.unit(s).unwrap().dendrites[0].synapse].r;
    assert!(sp.half_life(r_strong) > sp.half_life(r_weak));
    // long enough to break every synapse of the weak memory
    let horizon = sp.half_life(r_weak) * (1.0 / sp.w_prune).log2() * 1.5;
    net.decay_epoch(horizon).unwrap();
    assert_ne!(net.encode(&net.pattern(&weak)).unwrap().winner(), Some(w));
    assert!(!net.unit(w).unwrap().committed);
    assert_eq!(net.encode(&net.pattern(&strong)).unwrap().winner(), Some(s));
}

#[test]
fn zero_bias_changes_nothing() {
    let mut net = flat(4, 3, 8);
    learn_n(&mut net, &all(&[0, 0, 0, 0]), 2);
    let p = net.pattern(&all(&[0, 0, 0, 0]));
    let before = net.encode(&p).unwrap();
    let ids: Vec<NeuronId> = (0..8).map(|index| NeuronId { layer: 1, index }).collect();
    net.supervised_bias(&ids, 0.0).unwrap();
    assert_eq!(net.encode(&p).unwrap(), before);
}

#[test]
fn strong_bias_beats_stronger_rival() {
    let mut net = flat(4, 3, 8);
    let v = all(&[0, 0, 0, 0]);
    let a = learn_n(&mut net, &v, 3).encode.winner().unwrap();
    let b = learn_n(&mut net, &all(&[0, 0, 1, 1]), 1).encode.winner().unwrap();
    assert_ne!(a, b);
    let p = net.pattern(&v);
    assert_eq!(net.encode(&p).unwrap().winner(), Some(a));
    net.supervised_bias(&[b], 20.0).unwrap();
    assert_eq!(net.encode(&p).unwrap().winner(), Some(b));
    net.supervised_bias(&[a], -5.0).unwrap();
    net.clear_bias();
    assert_eq!(net.encode(&p).unwrap().winner(), Some(a));
}

#[test]
fn bias_during_learning_forms_association() {
    let mut net = flat(8, 3, 16);
    let word = [Some(0), Some(1), Some(2), Some(0), None, None, None, None];
    let picture = [None, None, None, None, Some(2), Some(1), Some(0), Some(2)];
    let w = learn_n(&mut net, &word, 3).encode.winner().unwrap();
    assert_eq!(net.encode(&net.pattern(&picture)).unwrap().winner(), None);
    net.supervised_bias(&[w], 2.0).unwrap();
    learn_n(&mut net, &picture, 3);
    net.clear_bias();
    assert_eq!(net.encode(&net.pattern(&picture)).unwrap().winner(), Some(w));
    assert_eq!(net.encode(&net.pattern(&word)).unwrap().winner(), Some(w));
}

#[test]
fn dead_winner_is_replaced_by_most_similar() {
    let mut net = flat(8, 3, 16);
    let a = all(&[0; 8]);
    let near = all(&[0, 0, 0, 0, 0, 1, 1, 1]);
    let far = all(&[2, 2, 2, 2, 2, 2, 2, 2]);
    let na = learn_n(&mut net, &a, 3).encode.winner().unwrap();
    let nn = learn_n(&mut net, &near, 3).encode.winner().unwrap();
    learn_n(&mut net, &far, 3);
    assert_ne!(na, nn);
    let p = net.pattern(&a);
    let before = net.retrieve(&p).unwrap().reconstruction.values();
    net.kill(na).unwrap();
    let r = net.retrieve(&p).unwrap();
    assert_eq!(r.winner, Some(nn));
    let agree = |x: &[Option<usize>]| x.iter().zip(&a).filter(|(u, v)| u == v).count();
    assert_eq!(agree(&before), 8);
    assert_eq!(agree(&r.reconstruction.values()), 5);
}

#[test]
fn orthogonal_patterns_get_separate_winners() {
    for seed in 0..100u64 {
        let cfg = GrowthConfig::single_layer(vec![3; 6], 8, 6);
        let mut net = Network::new(cfg, ModelParams::default(), seed).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<usize> = (0..6).map(|_| rng.gen_range(0..3)).collect();
        let b: Vec<usize> = a.iter().map(|&x| (x + rng.gen_range(1..3)) % 3).collect();
        let wa = learn_n(&mut net, &all(&a), 1).encode.winner();
        let wb = learn_n(&mut net, &all(&b), 1).encode.winner();
        assert!(wa.is_some() && wb.is_some());
        assert_ne!(wa, wb, "seed {seed}");
        assert_eq!(net.encode(&net.pattern(&all(&a))).unwrap().winner(), wa);
    }
}

#[test]
fn converged_layers_are_sparse() {
    let mut net = Network::new(GrowthConfig::default(), ModelParams::default(), 2).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let pats: Vec<Vec<Option<usize>>> = (0..4)
        .map(|_| net.config.slot_sizes.iter().map(|&s| Some(rng.gen_range(0..s))).collect())
        .collect();
    for _ in 0..3 {
        for p in &pats {
            learn_n(&mut net, p, 1);
        }
    }
    for p in &pats {
        let e = net.encode(&net.pattern(p)).unwrap();
        assert!(e.converged);
        for (l, frac) in e.active_fraction(0.05 * net.params.neuron.max_rate()).iter().enumerate() {
            let bound = net.shapes[l].members.len() as f64 / net.layers[l].len() as f64;
            assert!(*frac <= bound + 1e-12, "layer {l}: {frac} > {bound}");
        }
    }
}

#[test]
fn save_and_load_round_trip() {
    let mut net = flat(4, 3, 8);
    learn_n(&mut net, &all(&[0, 1, 2, 0]), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    net.save(&path).unwrap();
    assert_eq!(Network::load(&path).unwrap(), net);

    let text = net.to_json().unwrap();
    let bad_magic = text.replacen(NETWORK_MAGIC, "something-else", 1);
    assert!(matches!(Network::from_json(&bad_magic), Err(GrowthError::Format(_))));
    let bad_version = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    let err = Network::from_json(&bad_version).unwrap_err();
    assert!(err.to_string().contains("99"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn learned_net_answers_deterministically(seed in 0u64..1000, values in prop::collection::vec(prop::option::of(0usize..3), 4)) {
        let mut net = Network::new(GrowthConfig::single_layer(vec![3; 4], 6, 4), ModelParams::default(), seed).unwrap();
        learn_n(&mut net, &all(&[0, 1, 2, 0]), 1);
        learn_n(&mut net, &all(&[2, 2, 1, 1]), 1);
        let p = net.pattern(&values);
        let a = net.encode(&p).unwrap();
        let b = net.encode(&p).unwrap();
        prop_assert_eq!(&a, &b);
        if a.converged {
            for rates in &a.firing_map {
                let max = rates.iter().cloned().fold(0.0, f64::max);
                let eps = net.params.competition.eps_silent.max(net.config.relative_eps * max);
                prop_assert!(crate::competition::slot_satisfied(rates, eps));
            }
        }
    }
}
