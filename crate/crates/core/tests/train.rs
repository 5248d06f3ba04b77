mod common;

use branchwise::gnn::{gcnn_forward, AdamConfig};
use branchwise::milp::{normalize_instance, RawMilp, RowSense, Sense};
use branchwise::train::{
    collect_sb_data, distill_terms, imitation_pretrain, imitation_terms, ppo_samples, ppo_terms,
    ppo_update, read_dataset, top1_agreement, write_dataset, collect_trajectories, CollectConfig,
    ImitationConfig, PpoConfig, PpoHyper, PpoSample, SbSample,
};
use common::{fd_check, random_params, random_state, tiny_integer_milp};

const FD_TOL: f64 = 1e-5;

fn pick_action(state: &branchwise::gnn::BipartiteState) -> usize {
    state.mask.iter().position(|&b| b).unwrap()
}

#[test]
fn loss_gradients_match_finite_differences() {
    for seed in 0..6 {
        let state = random_state(seed, 5, 3);
        let params = random_params(seed + 10, 6);
        let a = pick_action(&state);
        let (pi, v, _) = gcnn_forward(&state, &params).unwrap();

        let (err, checked, total) = fd_check(&state, &params, |pi, v| imitation_terms(pi, v, a, 0.7));
        assert!(err < FD_TOL && checked * 10 >= total * 9, "imitation seed {seed}: {err}");
        let (err, checked, total) = fd_check(&state, &params, |pi, _| distill_terms(pi, a));
        assert!(err < FD_TOL && checked * 10 >= total * 9, "distill seed {seed}: {err}");

        // Unclipped region: pi_old equals the current probability.
        let hp = PpoHyper::default();
        let mask = state.mask.clone();
        let pi_old = pi[a];
        let adv = 0.3 - v;
        let (err, checked, total) =
            fd_check(&state, &params, |p, val| ppo_terms(p, &mask, val, a, pi_old, adv, 0.3, &hp));
        assert!(err < FD_TOL && checked * 10 >= total * 9, "ppo seed {seed}: {err}");
        // Clipped region: the surrogate is flat in the ratio.
        let (err, _, _) =
            fd_check(&state, &params, |p, val| ppo_terms(p, &mask, val, a, pi_old / 3.0, 1.0, 0.3, &hp));
        assert!(err < FD_TOL, "clipped ppo seed {seed}: {err}");
    }
}

#[test]
fn surrogate_equals_mean_advantage_at_snapshot() {
    let params = random_params(5, 8);
    let hp = PpoHyper { c1: 0.0, c2: 0.0, ..PpoHyper::default() };
    let mut sum_obj = 0.0;
    let mut sum_adv = 0.0;
    for seed in 0..20 {
        let state = random_state(100 + seed, 6, 4);
        let (pi, _, _) = gcnn_forward(&state, &params).unwrap();
        let a = pick_action(&state);
        let adv = (seed as f64 - 9.5) / 3.0;
        sum_obj += ppo_terms(&pi, &state.mask, 0.0, a, pi[a], adv, 0.0, &hp).policy;
        sum_adv += adv;
    }
    assert!((sum_obj / 20.0 - sum_adv / 20.0).abs() < 1e-12);
}

#[test]
fn imitation_fits_one_sample() {
    let state = random_state(3, 6, 4);
    let action = state.mask.iter().rposition(|&b| b).unwrap();
    let sample = SbSample {
        id: 0,
        instance: "toy".into(),
        node: 0,
        state: state.clone(),
        sb_scores: Default::default(),
        action,
        reward: 0.0,
        children_refs: None,
        is_leaf: true,
        excluded: false,
        value_target: 0.25,
    };
    let cfg = ImitationConfig { epochs: 400, batch_size: 1, adam: AdamConfig { lr: 1e-2, ..Default::default() }, seed: 1 };
    let (params, curve) = imitation_pretrain(&[sample.clone()], &random_params(2, 8), &cfg).unwrap();
    let (pi, v, _) = gcnn_forward(&state, &params).unwrap();
    assert!(pi[action] > 0.99, "pi {}", pi[action]);
    assert!((v - 0.25).abs() < 0.05);
    assert!(*curve.last().unwrap() < 0.011);
    let agree = top1_agreement(&[sample], &params).unwrap();
    assert_eq!(agree.rate, 1.0);
}

#[test]
fn imitation_rejects_empty_data() {
    let err = imitation_pretrain(&[], &random_params(0, 4), &ImitationConfig::default()).unwrap_err();
    assert_eq!(err, branchwise::train::TrainError::EmptyDataset);
}

#[test]
fn collection_labels_are_strong_branching_argmax() {
    let instances: Vec<_> = (0..12).map(tiny_integer_milp).collect();
    let report = collect_sb_data(&instances, &CollectConfig::default());
    assert!(report.skipped.is_empty());
    assert!(!report.samples.is_empty());
    for (i, s) in report.samples.iter().enumerate() {
        assert_eq!(s.id, i);
        let best = s.sb_scores.iter().fold((usize::MAX, f64::NEG_INFINITY), |acc, (&j, &v)| {
            if v > acc.1 { (j, v) } else { acc }
        });
        assert_eq!(s.action, best.0);
        assert!(s.state.mask[s.action]);
        assert!(s.value_target >= -1e-9, "value target {}", s.value_target);
        if let Some((l, r)) = s.children_refs {
            assert!(l > i && r > i);
            assert_eq!(report.samples[l].instance, s.instance);
        }
    }
    let mut buf = Vec::new();
    write_dataset(&report.samples, &mut buf).unwrap();
    let back = read_dataset(&buf[..]).unwrap();
    assert_eq!(back, report.samples);
}

#[test]
fn integral_root_yields_no_samples() {
    let raw = RawMilp::new("int", Sense::Minimize, vec![1.0, 1.0])
        .row(vec![(0, 1.0), (1, 1.0)], RowSense::Ge, 2.0)
        .bounds(0, 0.0, 1.0)
        .bounds(1, 0.0, 1.0)
        .integer(0)
        .integer(1);
    let inst = normalize_instance(&raw).unwrap();
    let report = collect_sb_data(&[inst], &CollectConfig::default());
    assert!(report.samples.is_empty() && report.skipped.is_empty());
}

#[test]
fn truncated_dataset_is_a_schema_error() {
    let instances: Vec<_> = (0..3).map(tiny_integer_milp).collect();
    let report = collect_sb_data(&instances, &CollectConfig::default());
    assert!(report.samples.len() >= 2);
    let mut buf = Vec::new();
    write_dataset(&report.samples, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let cut: String = text.lines().take(1).map(|l| format!("{l}\n")).collect();
    assert!(matches!(read_dataset(cut.as_bytes()), Err(branchwise::train::TrainError::Schema { .. })));
}

#[test]
fn ppo_round_trip_on_rollouts() {
    let instances: Vec<_> = (20..28).map(tiny_integer_milp).collect();
    let params = random_params(7, 8);
    let trajs = collect_trajectories(&instances, &params, 50, 3).unwrap();
    let samples: Vec<PpoSample> = ppo_samples(&trajs, &params, 0.99).unwrap();
    assert!(!samples.is_empty());
    for s in &samples {
        assert!(s.target >= -1e-9);
        assert!(s.pi_old > 0.0 && s.pi_old <= 1.0);
        let (pi, v, _) = gcnn_forward(&s.state, &params).unwrap();
        assert!((pi[s.action] - s.pi_old).abs() < 1e-12);
        assert!((s.advantage - (s.target - v)).abs() < 1e-12);
    }
    let cfg = PpoConfig { adam: AdamConfig { lr: 0.0, ..Default::default() }, ..Default::default() };
    let (same, report) = ppo_update(&samples, &params, &cfg).unwrap();
    assert_eq!(same, params);
    assert_eq!(report.objective.len(), cfg.epochs);
    let (moved, report) = ppo_update(&samples, &params, &PpoConfig::default()).unwrap();
    assert!(moved.is_finite() && moved != params);
    assert!(report.objective.iter().all(|o| o.is_finite()));
}
