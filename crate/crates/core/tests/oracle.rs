use ordlab_core::oracle::*;
use ordlab_core::*;

#[test]
fn hybrid_threshold_zero_never_switches() {
    let g = gen_isotropic(20, 4, 8, 5).unwrap();
    let c = &g.collection;
    let policy = OrderingPolicy::Hybrid {
        rule: HybridRule::MaxDistance,
        threshold: 0.0,
        seed: 5,
    };
    let run = run_policy(c, policy, RunOptions::steps(8)).unwrap();
    assert_eq!(run.hybrid.unwrap().greedy_steps(8), 8);
    let report = check_hybrid_phase_contract(&run, 0.0, c).unwrap();
    assert!(report.passed(), "{report}");
    assert_eq!(report.instances_checked, 8);
}

#[test]
fn hybrid_threshold_above_ceiling_is_pure_random() {
    let g = gen_isotropic(20, 4, 8, 6).unwrap();
    let c = &g.collection;
    for rule in [HybridRule::MaxDistance, HybridRule::MaxResidual] {
        let threshold = 1.01 * c.norm_ref().powi(2) * c.radius().powi(2).max(1.0);
        let policy = OrderingPolicy::Hybrid {
            rule,
            threshold,
            seed: 9,
        };
        let run = run_policy(c, policy, RunOptions::steps(8)).unwrap();
        assert_eq!(run.hybrid.unwrap().greedy_steps(8), 0);
        let random =
            run_policy(c, OrderingPolicy::random_without(9), RunOptions::steps(8)).unwrap();
        assert_eq!(run.state.order(), random.state.order());
        assert!(check_hybrid_phase_contract(&run, threshold, c)
            .unwrap()
            .passed());
    }
}

#[test]
fn hybrid_contract_detects_a_wrong_threshold() {
    let g = gen_isotropic(20, 4, 8, 7).unwrap();
    let c = &g.collection;
    let policy = OrderingPolicy::Hybrid {
        rule: HybridRule::MaxDistance,
        threshold: 0.0,
        seed: 1,
    };
    let run = run_policy(c, policy, RunOptions::steps(8)).unwrap();
    // Claiming a huge threshold makes every greedy step a violation.
    let report = check_hybrid_phase_contract(&run, 10.0, c).unwrap();
    assert_eq!(report.violations, 8);
    assert!(report.first_violation.unwrap().starts_with("step 1"));
}

#[test]
fn rank_bound_margin_is_recomputable() {
    let (d, t, trials, seed) = (6, 5, 12, 3);
    let report = check_rank_dminus1_loss_bound(d, t, trials, seed).unwrap();
    let bound = 1.0 / (std::f64::consts::E * t as f64);
    let mut worst = f64::INFINITY;
    for i in 0..trials {
        let g = gen_rank_dminus1(d, t, seed + i as u64).unwrap();
        let run = run_policy(
            &g.collection,
            OrderingPolicy::greedy(GreedyRule::MaxDistance),
            RunOptions::steps(t),
        )
        .unwrap();
        worst = worst.min(bound - avg_loss(&g.collection, run.state.iterate()).unwrap());
    }
    assert!((report.worst_margin - worst).abs() < 1e-12);
    assert_eq!(
        report,
        check_rank_dminus1_loss_bound(d, t, trials, seed).unwrap()
    );
}

#[test]
fn brute_force_agrees_with_simulator_on_every_permutation() {
    let g = gen_rank_dminus1(4, 4, 8).unwrap();
    let c = &g.collection;
    let oracle = OracleCollection::new(c).unwrap();
    let best = brute_force_best_ordering(c, c.start(), Objective::FinalAvgLoss).unwrap();
    let mut min = f64::INFINITY;
    for a in 0..4 {
        for b in 0..4 {
            for e in 0..4 {
                let mut order = vec![a, b, e];
                order.sort_unstable();
                order.dedup();
                if order.len() < 3 {
                    continue;
                }
                let f = 6 - a - b - e;
                let order = [a, b, e, f];
                let ours = replay(c, &order).unwrap();
                let theirs = oracle.replay(c.start(), &order);
                assert!((ours.iterate() - &theirs).amax() < 1e-10);
                min = min.min(avg_loss(c, ours.iterate()).unwrap());
            }
        }
    }
    assert!((best.value - min).abs() < 1e-12);
}
