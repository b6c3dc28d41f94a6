use nnembed::knapsack::{build_model, oracle_nn, oracle_true};
use nnembed::model::{Sense, VarKind};
use nnembed::verify::fixed_input_model;
use nnembed::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// At an optimum of the big-M model with fixed input, every sigma equals
    /// the forward-pass activation and every indicator matches its sign.
    #[test]
    fn classic_activations_match_forward_pass(x in 0.0f64..10.0, maximize in any::<bool>()) {
        let net = square_fixture();
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let (m, h) = fixed_input_model(&net, x, Encoding::Classic, sense, BigM::PerNode, (0.0, 10.0)).unwrap();
        let r = solve_milp(&m, &MilpConfig::default()).unwrap();
        let trace = net.forward_trace(x);
        for (l, layer) in h.sigma.iter().enumerate() {
            for (j, s) in layer.iter().enumerate() {
                prop_assert!((r.x[s.0] - trace.post[l][j]).abs() <= 1e-6);
                let pre = trace.pre[l][j];
                if pre.abs() > 1e-6 {
                    prop_assert_eq!(r.x[h.y[l][j].0].round() == 1.0, pre > 0.0);
                }
            }
        }
        prop_assert!((r.x[h.output.0] - trace.output).abs() <= 1e-6);
    }

    /// The LP relaxation bounds the integer optimum from above.
    #[test]
    fn relaxation_dominates(n in 1usize..6, seed in 0u64..1000, classic in any::<bool>()) {
        let net = square_fixture();
        let enc = if classic { Encoding::Classic } else { Encoding::ReluPlus };
        let inst = KnapsackInstance::generate(n, seed).unwrap();
        let km = build_model(&inst, &net, enc, BigM::PerNode).unwrap();
        let lp = solve_lp(&km.model, true).unwrap();
        let ip = solve_milp(&km.model, &MilpConfig::default()).unwrap();
        prop_assert_eq!(lp.status, LpStatus::Optimal);
        prop_assert!(lp.objective >= ip.objective - 1e-6);
    }

    /// Replacing squares by the network moves the optimum by at most the
    /// network's worst integer error times the penalties.
    #[test]
    fn oracle_error_budget(n in 1usize..5, seed in 0u64..1000) {
        let net = square_fixture();
        let mut inst = KnapsackInstance::generate(n, seed).unwrap();
        inst.m.iter_mut().for_each(|m| *m = (*m).min(5));
        let err = (0..=5).map(|k| (net.forward(k as f64) - (k * k) as f64).abs()).fold(0.0, f64::max);
        let budget: f64 = inst.p.iter().map(|&p| p as f64 * err).sum();
        let nn = oracle_nn(&inst, &net).unwrap();
        let truth = oracle_true(&inst).unwrap();
        prop_assert!((nn.objective - truth.objective).abs() <= budget + 1e-9);
        prop_assert!(inst.true_objective(&nn.x) as f64 >= truth.objective - 2.0 * budget - 1e-9);
    }
}

#[test]
fn knapsack_model_counts() {
    let net = square_fixture();
    let inst = KnapsackInstance::generate(10, 3).unwrap();
    for (enc, cont, bin, rows) in [(Encoding::ReluPlus, 140, 0, 141), (Encoding::Classic, 140, 130, 401)] {
        let km = build_model(&inst, &net, enc, BigM::PerNode).unwrap();
        let st = km.model.stats();
        assert_eq!(
            (st.integer, st.continuous, st.binary, st.constraints),
            (10, cont, bin, rows)
        );
        assert!(km.x.iter().all(|v| km.model.var(*v).kind == VarKind::Integer));
    }
}
