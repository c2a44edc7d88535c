#[path = "support/oracle.rs"]
mod oracle;
#[path = "support/gradcheck.rs"]
mod gradcheck;

use gradcheck::{max_gradient_error, random_net};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relmas_core::agent::ddpg::{critic_input, critic_q};
use relmas_core::agent::lstm::{Head, LstmNet, NetShape};

#[test]
fn bptt_matches_central_differences() {
    for seed in 0..20 {
        let e = max_gradient_error(seed);
        assert!(e < 1e-4, "seed {seed}: {e}");
    }
}

#[test]
fn forward_matches_scalar_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for head in [Head::Tanh, Head::Linear] {
        for _ in 0..10 {
            let (net, seq) = random_net(&mut rng, head);
            let s = net.shape();
            let reference = oracle::ScalarLstm {
                input: s.input,
                hidden: s.hidden,
                output: s.output,
                tanh_head: head == Head::Tanh,
                p: net.params(),
            }
            .forward(&seq);
            let fast = net.forward(&seq).unwrap().outputs();
            for (a, b) in fast.iter().flatten().zip(reference.iter().flatten()) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn critic_q_matches_scalar_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (f, g, h) = (8, 3, 6);
    let critic = LstmNet::init(NetShape::new(f + g, h, 1, Head::Linear).unwrap(), &mut rng);
    let state: Vec<Vec<f64>> = (0..4).map(|_| (0..f).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let actions: Vec<Vec<f64>> = (0..3).map(|_| (0..g).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let (q, _) = critic_q(&critic, &state, &actions).unwrap();
    let reference = oracle::ScalarLstm { input: f + g, hidden: h, output: 1, tanh_head: false, p: critic.params() }
        .forward(&critic_input(&state, &actions, g));
    assert!((q - reference.last().unwrap()[0]).abs() < 1e-12);
    let zero = LstmNet::zeros(critic.shape());
    assert_eq!(critic_q(&zero, &state, &actions).unwrap().0, 0.0);
}
