use proptest::prelude::*;

use super::*;

fn net(n_in: usize, n_hidden: usize, n_out: usize, seed: u64) -> Network<f64> {
    let topo = Topology::new(n_in, n_hidden, n_out, Connectivity::FullRecurrent).unwrap();
    let init = NetworkInit {
        seed,
        ..NetworkInit::default()
    };
    Network::random(topo, 0.01, Activation::Tanh, &init).unwrap()
}

#[test]
fn init_six_five_three() {
    let n = net(6, 5, 3, 42);
    assert_eq!(n.n(), 14);
    assert!(n.weights().iter().all(|w| w.abs() <= 5.0));
    for j in 6..14 {
        let t = n.time_constant(j);
        assert!((0.01..=1.0).contains(&t), "T_{j} = {t}");
        assert!(n.scale(j) > 0.0 && n.scale(j) <= 1.0);
    }
    assert!(n.biases().iter().all(|&b| b == 0.0));
    // input neurons receive nothing
    for j in 0..6 {
        assert!((0..14).all(|i| n.weight(i, j) == 0.0));
    }
}

#[test]
fn init_degenerate_weight_range() {
    let topo = Topology::new(2, 2, 1, Connectivity::FullRecurrent).unwrap();
    let init = NetworkInit {
        weight_range: [0.0, 0.0],
        ..NetworkInit::default()
    };
    let n = Network::<f64>::random(topo, 0.01, Activation::Tanh, &init).unwrap();
    assert!(n.weights().iter().all(|&w| w == 0.0));
}

#[test]
fn init_is_deterministic() {
    assert_eq!(net(6, 5, 3, 7), net(6, 5, 3, 7));
    assert_ne!(net(6, 5, 3, 7), net(6, 5, 3, 8));
}

#[test]
fn init_rejects_bad_topology() {
    assert!(Topology::with_total(3, 2, 2, Connectivity::FullRecurrent).is_err());
}

#[test]
fn weighted_sum_zero_weights_is_bias() {
    let topo = Topology::new(1, 1, 1, Connectivity::FullRecurrent).unwrap();
    let mut n = Network::<f64>::zeros(topo, 0.01, Activation::Tanh).unwrap();
    n.set_bias(2, 0.3);
    assert_eq!(n.weighted_sum(&[0.7, -0.2, 0.9], 2), 0.3);
}

#[test]
fn weighted_sum_single_connection() {
    let topo = Topology::new(1, 0, 1, Connectivity::FullRecurrent).unwrap();
    let mut n = Network::<f64>::zeros(topo, 0.01, Activation::Tanh).unwrap();
    n.set_weight(0, 1, 2.0).unwrap();
    assert_eq!(n.weighted_sum(&[1.0, 0.0], 1), 2.0);
}

#[test]
fn weighted_sum_matches_hand_summation() {
    let topo = Topology::new(1, 2, 1, Connectivity::FullRecurrent).unwrap();
    let init = NetworkInit {
        seed: 3,
        ..NetworkInit::default()
    };
    let mut n = Network::<f64>::random(topo, 0.01, Activation::Tanh, &init).unwrap();
    n.set_bias(3, -0.25);
    let y = [0.5, -0.1, 0.8, 0.3];
    let expected = n.weight(0, 3) * y[0] + n.weight(1, 3) * y[1] + n.weight(2, 3) * y[2] + n.weight(3, 3) * y[3]
        - 0.25;
    assert!((n.weighted_sum(&y, 3) - expected).abs() < 1e-14);
}

#[test]
fn static_neuron_zero_net_stays_zero() {
    let topo = Topology::new(1, 0, 1, Connectivity::FullRecurrent).unwrap();
    let n = Network::<f64>::zeros(topo, 0.01, Activation::Tanh).unwrap();
    assert_eq!(n.scale(1), 1.0);
    let s = n.propagate_step(&NetState::rest(2), &[0.0]).unwrap();
    assert_eq!(s.state.y[1], 0.0);
}

#[test]
fn single_neuron_half_scale_step() {
    let topo = Topology::new(1, 0, 1, Connectivity::FullRecurrent).unwrap();
    let mut n = Network::<f64>::zeros(topo, 0.01, Activation::Tanh).unwrap();
    n.set_weight(0, 1, 2.0).unwrap();
    n.set_time_constant(1, 0.02, 10.0);
    assert_eq!(n.scale(1), 0.5);
    let s = n.propagate_step(&NetState::rest(2), &[1.0]).unwrap();
    // 0.5 * tanh(2) + 0.5 * 0
    assert!((s.state.y[1] - 0.482_013_790_037_908_5).abs() < 1e-15);
    assert!((s.state.y[1] - 0.4820138).abs() < 1e-7);
    assert_eq!(s.record.y, vec![1.0, 0.0]);
    assert_eq!(s.record.x[1], 2.0);
    assert_eq!(s.state.step, 1);
}

#[test]
fn zero_net_is_a_fixed_point() {
    let topo = Topology::new(2, 3, 1, Connectivity::FullRecurrent).unwrap();
    let n = Network::<f64>::zeros(topo, 0.01, Activation::Tanh).unwrap();
    let mut st = NetState::rest(6);
    for _ in 0..100 {
        st = n.propagate_step(&st, &[0.0, 0.0]).unwrap().state;
        assert!(st.y.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn rejects_non_finite_and_misshaped_inputs() {
    let n = net(2, 1, 1, 1);
    let st = NetState::rest(4);
    assert!(matches!(n.propagate_step(&st, &[f64::NAN, 0.0]), Err(crate::Error::NumericInput(_))));
    assert!(matches!(n.propagate_step(&st, &[0.0]), Err(crate::Error::Shape { .. })));
}

#[test]
fn set_weight_outside_topology_fails() {
    let mut n = net(2, 1, 1, 1);
    assert!(n.set_weight(3, 0, 1.0).is_err());
}

#[test]
fn generic_over_f32() {
    let topo = Topology::new(1, 0, 1, Connectivity::FullRecurrent).unwrap();
    let mut n = Network::<f32>::zeros(topo, 0.01, Activation::Tanh).unwrap();
    n.set_weight(0, 1, 2.0).unwrap();
    n.set_time_constant(1, 0.02, 10.0);
    let s = n.propagate_step(&NetState::rest(2), &[1.0]).unwrap();
    assert!((s.state.y[1] - 0.482_013_8).abs() < 1e-6);
}

#[test]
fn json_rejects_nonzero_forbidden_weight() {
    let n = net(2, 1, 1, 5);
    let mut doc = n.to_doc();
    doc.weights[0] = 1.0; // 0 -> 0, into an input neuron
    assert!(Network::from_doc(doc).is_err());
}

#[test]
fn json_layout_is_row_major() {
    let topo = Topology::new(1, 0, 1, Connectivity::FullRecurrent).unwrap();
    let mut n = Network::<f64>::zeros(topo, 0.01, Activation::Sigmoid).unwrap();
    n.set_weight(0, 1, 2.5).unwrap();
    let v: serde_json::Value = serde_json::from_str(&n.to_json().unwrap()).unwrap();
    assert_eq!(v["weights"], serde_json::json!([0.0, 2.5, 0.0, 0.0]));
    assert_eq!(v["activation"], "sigmoid");
    assert_eq!(v["topology"]["n_in"], 1);
}

proptest! {
    #[test]
    fn json_round_trip(seed in any::<u64>(), n_hidden in 0usize..4) {
        let n = net(2, n_hidden, 2, seed);
        let back = Network::<f64>::from_json(&n.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, n);
    }

    #[test]
    fn tanh_outputs_stay_bounded(
        seed in any::<u64>(),
        inputs in proptest::collection::vec(-50.0f64..50.0, 40),
    ) {
        let n = net(2, 3, 2, seed);
        let mut st = NetState::rest(7);
        for pair in inputs.chunks(2) {
            st = n.propagate_step(&st, pair).unwrap().state;
            for j in 2..7 {
                prop_assert!(st.y[j].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn unit_scale_reduces_to_discrete_recurrent_net(
        seed in any::<u64>(),
        y0 in proptest::collection::vec(-1.0f64..1.0, 5),
        u in proptest::collection::vec(-1.0f64..1.0, 2),
    ) {
        let mut n = net(2, 2, 1, seed);
        for j in 2..5 {
            n.set_time_constant(j, 0.01, 10.0);
        }
        let st = NetState { x: vec![0.0; 5], y: y0.clone(), step: 0 };
        let next = n.propagate_step(&st, &u).unwrap().state;
        let mut y = y0;
        y[..2].copy_from_slice(&u);
        for j in 2..5 {
            let mut x = n.bias(j);
            for i in 0..5 {
                x += n.weight(i, j) * y[i];
            }
            prop_assert_eq!(next.y[j], x.tanh());
        }
    }

    #[test]
    fn propagation_is_deterministic(seed in any::<u64>(), u in proptest::collection::vec(-1.0f64..1.0, 2)) {
        let n = net(2, 2, 2, seed);
        let st = NetState::rest(6);
        let a = n.propagate_step(&st, &u).unwrap();
        let b = n.propagate_step(&st, &u).unwrap();
        prop_assert_eq!(a, b);
    }
}
