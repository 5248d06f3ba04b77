mod common;

use branchwise::gnn::var_feat;
use branchwise::train::{
    mcts_backup, mcts_refine, mcts_search, simulate_transition, ucb_select, Evaluator, MctsConfig,
    RefineConfig, Side, TrainError,
};
use common::{expectimax_best, toy_state, ToyEvaluator};

fn config(n_sims: usize, max_depth: usize, k: usize, seed: u64) -> MctsConfig {
    MctsConfig { k, max_depth, n_sims, seed, ..MctsConfig::default() }
}

#[test]
fn transition_edits_only_the_acted_variable() {
    let s = toy_state(3);
    for side in [Side::Left, Side::Right] {
        let t = simulate_transition(&s, 2, side).unwrap();
        assert!(!t.mask[2]);
        assert_eq!(t.var(2)[var_feat::FRAC], 0.0);
        match side {
            Side::Left => {
                assert_eq!(t.var(2)[var_feat::VALUE], 2.0);
                assert_eq!(t.var(2)[var_feat::AT_LB], 1.0);
            }
            Side::Right => {
                assert_eq!(t.var(2)[var_feat::VALUE], 3.0);
                assert_eq!(t.var(2)[var_feat::AT_UB], 1.0);
            }
        }
        for q in 0..2 {
            assert!(t.var(q).iter().zip(s.var(q)).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
    let mut s2 = toy_state(3);
    s2.var_mut(0)[var_feat::VALUE] = 2.4;
    let t = simulate_transition(&s2, 0, Side::Left).unwrap();
    assert_eq!(t.var(0)[var_feat::VALUE], 2.0);
    let t2 = simulate_transition(&t, 0, Side::Left).unwrap_err();
    assert_eq!(t2, TrainError::ActionNotMasked(0));
}

#[test]
fn initialization_and_zero_simulations() {
    let s = toy_state(4);
    let eval = ToyEvaluator::random(1, 4);
    let stats = mcts_search(&s, &eval, &config(0, 3, 10, 7)).unwrap();
    let root = stats.root();
    assert_eq!(root.actions, vec![0, 1, 2, 3]);
    assert_eq!(root.n, vec![1; 4]);
    assert_eq!(stats.nodes.len(), 1);
    for (i, &a) in root.actions.iter().enumerate() {
        let l = eval.value(&simulate_transition(&s, a, Side::Left).unwrap());
        let r = eval.value(&simulate_transition(&s, a, Side::Right).unwrap());
        let q = root.q[i];
        assert!((q - 0.99 * l).abs() < 1e-12 || (q - 0.99 * r).abs() < 1e-12);
    }
    let (pi, _) = eval.evaluate(&s).unwrap();
    assert_eq!(root.prior, pi);
}

#[test]
fn top_k_restriction() {
    let s = toy_state(6);
    let eval = ToyEvaluator::random(2, 6);
    let stats = mcts_search(&s, &eval, &config(0, 3, 2, 1)).unwrap();
    let mut by_prior: Vec<usize> = (0..6).collect();
    by_prior.sort_by(|&a, &b| eval.logits[b].total_cmp(&eval.logits[a]));
    let mut want = by_prior[..2].to_vec();
    want.sort_unstable();
    assert_eq!(stats.root().actions, want);
}

#[test]
fn depth_zero_picks_best_initial_q() {
    let s = toy_state(5);
    let eval = ToyEvaluator::random(3, 5);
    let stats = mcts_search(&s, &eval, &config(50, 0, 10, 4)).unwrap();
    let root = stats.root();
    assert_eq!(root.n, vec![1; 5]);
    let best = root.q.iter().enumerate().fold(0, |b, (i, &q)| if q > root.q[b] { i } else { b });
    assert_eq!(stats.best_action, root.actions[best]);
}

#[test]
fn ucb_examples() {
    let s = toy_state(2);
    let eval = ToyEvaluator::random(4, 2);
    let mut node = mcts_search(&s, &eval, &config(0, 1, 10, 0)).unwrap().nodes.remove(0);
    node.q = vec![0.5, 0.5];
    node.n = vec![3, 3];
    node.prior = vec![0.9, 0.1];
    assert_eq!(ucb_select(&node, 2.0), 0);
    node.prior = vec![0.1, 0.9];
    assert_eq!(ucb_select(&node, 2.0), 1);

    node.q = vec![1.0, 1.2];
    node.n = vec![9, 1];
    node.prior = vec![0.5, 0.5];
    let b0 = 2.0 * 0.5 * (11f64.ln() / 10.0).sqrt();
    let b1 = 2.0 * 0.5 * (11f64.ln() / 2.0).sqrt();
    assert!((b0 - 0.4897).abs() < 1e-3 && (b1 - 1.0950).abs() < 1e-3);
    let scores = branchwise::train::ucb_score(&node, 2.0);
    assert!((scores[0] - (1.0 + b0)).abs() < 1e-12);
    assert!((scores[1] - (1.2 + b1)).abs() < 1e-12);
    assert_eq!(ucb_select(&node, 2.0), 1);

    node.q = vec![2.0, 1.0];
    node.prior = vec![0.0, 1.0];
    node.n = vec![100, 1];
    assert_eq!(ucb_select(&node, 0.0), 0);
    node.q = vec![1.0, 1.0];
    assert_eq!(ucb_select(&node, 0.0), 0);
}

#[test]
fn backup_examples() {
    let s = toy_state(2);
    let eval = ToyEvaluator::random(5, 2);
    let mut nodes = mcts_search(&s, &eval, &config(0, 2, 10, 0)).unwrap().nodes;
    nodes[0].q = vec![1.0, 0.0];
    nodes[0].n = vec![1, 1];
    mcts_backup(&mut nodes, &[(0, 0)], &[2.0], 0.99);
    assert_eq!(nodes[0].q[0], 1.5);
    assert_eq!(nodes[0].n[0], 2);
    mcts_backup(&mut nodes, &[(0, 0)], &[1.5], 0.99);
    assert_eq!(nodes[0].q[0], 1.5);

    // Two-step path: the first step reaches a state valued 0.5, the second
    // one valued 1.0.
    let mut two = nodes.clone();
    two[0].q = vec![0.0, 0.0];
    two[0].n = vec![1, 1];
    two[0].q[1] = 0.2;
    mcts_backup(&mut two, &[(0, 0), (0, 1)], &[0.5, 1.0], 0.99);
    let root_return = 0.5 + 0.99 * 1.0;
    assert!((two[0].q[0] - root_return / 2.0).abs() < 1e-12);
    assert!((two[0].q[1] - (0.2 + (1.0 - 0.2) / 2.0)).abs() < 1e-12);
}

#[test]
fn backup_contracts_toward_constant_return() {
    let s = toy_state(1);
    let eval = ToyEvaluator::random(6, 1);
    let mut nodes = mcts_search(&s, &eval, &config(0, 1, 10, 0)).unwrap().nodes;
    nodes[0].q = vec![-3.0];
    let mut gap = f64::INFINITY;
    for _ in 0..50 {
        mcts_backup(&mut nodes, &[(0, 0)], &[4.0], 0.99);
        let g = (nodes[0].q[0] - 4.0).abs();
        assert!(g <= gap);
        gap = g;
    }
}

#[test]
fn visit_conservation() {
    for seed in 0..10 {
        let s = toy_state(5);
        let eval = ToyEvaluator::random(seed, 5);
        let stats = mcts_search(&s, &eval, &config(137, 3, 3, seed)).unwrap();
        let root = stats.root();
        assert_eq!(root.n.iter().map(|n| n - 1).sum::<u64>(), 137);
        assert!(stats.nodes.iter().all(|n| n.actions.len() <= 3 && n.n.iter().all(|&v| v >= 1)));
        let again = mcts_search(&s, &eval, &config(137, 3, 3, seed)).unwrap();
        assert_eq!(again, stats);
    }
}

#[test]
fn matches_expectimax_on_toy_trees() {
    let mut agree = 0;
    for trial in 0..100 {
        let s = toy_state(2);
        let eval = ToyEvaluator::random(1000 + trial, 2);
        let (want, _) = expectimax_best(&eval, &s, 10, 3, 0.99);
        let stats = mcts_search(&s, &eval, &config(1000, 3, 10, trial)).unwrap();
        if stats.best_action == want {
            agree += 1;
        }
    }
    println!("expectimax agreement {agree}/100");
    assert!(agree >= 95, "agreement {agree}/100");
}

#[test]
fn refine_errors_and_no_op() {
    let s = toy_state(3);
    let eval = ToyEvaluator::random(8, 3);
    let few = mcts_search(&s, &eval, &config(5, 3, 10, 0)).unwrap();
    let params = common::random_params(3, 8);
    let err = mcts_refine(&params, &[few], &RefineConfig::default()).unwrap_err();
    assert_eq!(err, TrainError::NoQualifyingStates { threshold: 10 });

    let many = mcts_search(&s, &eval, &config(200, 3, 10, 0)).unwrap();
    let mut cfg = RefineConfig::default();
    cfg.adam.lr = 0.0;
    let (same, _) = mcts_refine(&params, &[many], &cfg).unwrap();
    assert_eq!(same, params);
}

#[test]
fn refine_fits_a_single_target() {
    let state = common::random_state(21, 5, 3);
    let eval = ToyEvaluator::random(9, 5);
    let stats = mcts_search(&state, &eval, &config(200, 1, 10, 3)).unwrap();
    let target = stats.best_action;
    let params = common::random_params(4, 8);
    let cfg = RefineConfig { epochs: 300, adam: branchwise::gnn::AdamConfig { lr: 1e-2, ..Default::default() }, ..Default::default() };
    let (refined, curve) = mcts_refine(&params, &[stats], &cfg).unwrap();
    assert!(curve.windows(2).filter(|w| w[1] > w[0] + 1e-12).count() <= curve.len() / 10);
    let pick = branchwise::branching::policy_select(&state, &refined).unwrap().var;
    assert_eq!(pick, target);
}
