use super::*;
use crate::numerics::relative_error;

fn params() -> ModelParams {
    ModelParams::default()
}

#[test]
fn sig_formatting() {
    assert_eq!(format_sig(0.5), "0.500000000");
    assert_eq!(format_sig(-1234.5), "-1234.50000");
    assert_eq!(format_sig(1e-5), "1.00000000e-5");
    assert_eq!(format_sig(9.9999999999), "10.0000000");
    assert_eq!(format_sig(2.5e12), "2.50000000e12");
    assert_eq!(format_sig(0.0), "0.00000000");
}

#[test]
fn csv_header_then_rows() {
    let r = hebb_grid(&[0.5], &[1.0], 50.0, &params()).unwrap();
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("f_pre,f_post,s_p_final,s_p_predicted,relative_error"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn stdp_signs_and_monotone_envelopes() {
    let p = params();
    let r = stdp_protocol(&stdp_delta_ts(&p), &p).unwrap();
    let dt = r.column("delta_t").unwrap();
    let dw = r.column("dw_eff").unwrap();
    let mut ltp: Vec<(f64, f64)> = dt.iter().zip(&dw).filter(|(t, _)| **t > 0.0).map(|(t, w)| (*t, *w)).collect();
    let mut ltd: Vec<(f64, f64)> = dt.iter().zip(&dw).filter(|(t, _)| **t < 0.0).map(|(t, w)| (-t, *w)).collect();
    assert!(ltp.iter().all(|(_, w)| *w > 0.0));
    assert!(ltd.iter().all(|(_, w)| *w < 0.0));
    for side in [&mut ltp, &mut ltd] {
        side.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(side.windows(2).all(|w| w[1].1.abs() < w[0].1.abs()));
    }
    assert!(relative_error(r.summary_value("ltp_exponent").unwrap(), p.neuron.c4_epsp) < 0.02);
    assert!(relative_error(r.summary_value("ltd_exponent").unwrap(), p.neuron.c6_chan) < 0.02);
}

#[test]
fn stdp_rejects_zero_interval() {
    assert!(stdp_protocol(&[1.0, 0.0], &params()).is_err());
    assert!(stdp_protocol(&[], &params()).is_err());
}

#[test]
fn hebb_silent_pre_gives_nothing() {
    let r = hebb_protocol(0.0, 1.0, 50.0, &params()).unwrap();
    assert!(r.column("s_p").unwrap().iter().all(|&s| s == 0.0));
}

#[test]
fn hebb_linear_in_pre_rate_and_near_product_law() {
    let p = params();
    let one = hebb_protocol(0.3, 0.7, 50.0, &p).unwrap().summary_value("s_p_final").unwrap();
    let two = hebb_protocol(0.6, 0.7, 50.0, &p).unwrap().summary_value("s_p_final").unwrap();
    assert!(relative_error(two, 2.0 * one) < 1e-12);
    let g = hebb_grid(&[0.1, 0.5, 1.0], &[0.1, 0.5, 1.0], 50.0, &p).unwrap();
    assert_eq!(g.rows.len(), 9);
    assert!(g.summary_value("max_relative_error").unwrap() < 0.05);
}

#[test]
fn hebb_needs_settling_time() {
    assert!(matches!(hebb_protocol(1.0, 1.0, 10.0, &params()), Err(ExperimentError::Precondition(_))));
}

#[test]
fn frequency_sweep_changes_sign() {
    let r = frequency_protocol(&FrequencyArgs::default(), &params()).unwrap();
    let f = r.column("f_in").unwrap();
    let dw = r.column("dw_eff").unwrap();
    let spikes = r.column("spikes").unwrap();
    assert_eq!(dw[0], 0.0);
    assert!(f[0] == 0.0);
    // non-firing low frequencies depress, firing high frequencies potentiate
    assert!(dw[1] < 0.0 && spikes[1] == 0.0);
    assert!(*dw.last().unwrap() > 0.0 && *spikes.last().unwrap() > 0.0);
    let x = r.summary_value("crossover").unwrap();
    assert!(x > f[1] && x < *f.last().unwrap());
}

#[test]
fn forgetting_follows_decay_law() {
    let p = params();
    let r = forgetting_protocol(&ForgettingArgs::default(), &p).unwrap();
    assert_eq!(r.rows[0][2], Cell::Num(1.0));
    let mut last = 0.0;
    for k in [0, 1, 5, 20] {
        let measured = r.summary_value(&format!("half_life_{k}")).unwrap();
        let predicted = r.summary_value(&format!("half_life_predicted_{k}")).unwrap();
        assert!(relative_error(measured, predicted) < 0.02, "k={k}: {measured} vs {predicted}");
        assert!(measured > last);
        last = measured;
    }
}

#[test]
fn recall_during_testing_slows_forgetting() {
    let p = params();
    let base = ForgettingArgs { rehearsal_counts: vec![1], horizon: 50.0, ..Default::default() };
    let recall = ForgettingArgs { recall_strength: 0.2, ..base.clone() };
    let a = forgetting_protocol(&base, &p).unwrap().column("retention").unwrap();
    let b = forgetting_protocol(&recall, &p).unwrap().column("retention").unwrap();
    assert!(b.last().unwrap() > a.last().unwrap());
}

#[test]
fn interference_orderings() {
    let r = interference_protocol(&InterferenceArgs::default(), &params(), 3).unwrap();
    let a = r.column("score_a").unwrap();
    let b = r.column("score_b").unwrap();
    let base_a = r.column("baseline_a").unwrap();
    let base_b = r.column("baseline_b").unwrap();
    assert!((a[0] - base_a[0]).abs() < 0.02);
    assert!((b[0] - base_b[0]).abs() < 0.02);
    assert!(a[3] < a[0]);
    assert!(b[3] < b[0]);
}

#[test]
fn interference_rejects_bad_overlap() {
    let args = InterferenceArgs { overlaps: vec![1.5], ..Default::default() };
    assert!(interference_protocol(&args, &params(), 0).is_err());
}

#[test]
fn savings_scenarios() {
    let r = savings_protocol(&SavingsArgs::default(), &params(), 1).unwrap();
    let initial = r.column("initial_epochs").unwrap();
    let relearn = r.column("relearn_epochs").unwrap();
    let novel = r.column("novel_epochs").unwrap();
    assert_eq!(r.rows[0][0], Cell::from("default"));
    assert!(relearn[0] < initial[0]);
    assert!(relearn[0] < novel[0]);
    // long decay breaks every synapse: relearning is no easier than new learning
    assert_eq!(r.rows[1][0], Cell::from("long_decay"));
    assert!(relearn[1] >= novel[1]);
    let sweep = r.column("savings").unwrap()[2..].to_vec();
    assert!(sweep.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn protocols_are_deterministic() {
    let p = params();
    let a = interference_protocol(&InterferenceArgs::default(), &p, 9).unwrap();
    let b = interference_protocol(&InterferenceArgs::default(), &p, 9).unwrap();
    assert_eq!(a, b);
    let a = savings_protocol(&SavingsArgs::default(), &p, 9).unwrap();
    let b = savings_protocol(&SavingsArgs::default(), &p, 9).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}
