//! Central-difference check of the LSTM backward pass.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relmas_core::agent::lstm::{Head, LstmNet, NetShape};

pub fn random_net(rng: &mut ChaCha8Rng, head: Head) -> (LstmNet, Vec<Vec<f64>>) {
    let hidden = 2 * rng.random_range(1..=4);
    let input = rng.random_range(1..=5);
    let output = rng.random_range(1..=3);
    let len = rng.random_range(1..=6);
    let mut net = LstmNet::init(NetShape::new(input, hidden, output, head).unwrap(), rng);
    // spread weights so gates leave their linear regime
    for p in net.params_mut() {
        *p *= 1.5;
    }
    let seq = (0..len).map(|_| (0..input).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (net, seq)
}

pub fn loss(net: &LstmNet, seq: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
    let out = net.forward(seq).unwrap().outputs();
    out.iter().zip(w).map(|(y, w)| y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).sum()
}

/// Relative error with a floor on the denominator so that gradients that
/// are zero up to rounding do not dominate.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn max_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let head = if seed % 2 == 0 { Head::Tanh } else { Head::Linear };
    let (net, seq) = random_net(&mut rng, head);
    let out_w: Vec<Vec<f64>> =
        (0..seq.len()).map(|_| (0..net.shape().output).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let cache = net.forward(&seq).unwrap();
    let (grads, input_grads) = net.backward(&cache, &out_w);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..net.params().len() {
        let mut plus = net.clone();
        plus.params_mut()[i] += eps;
        let mut minus = net.clone();
        minus.params_mut()[i] -= eps;
        let numeric = (loss(&plus, &seq, &out_w) - loss(&minus, &seq, &out_w)) / (2.0 * eps);
        worst = worst.max(rel_err(grads[i], numeric));
    }
    for t in 0..seq.len() {
        for j in 0..seq[t].len() {
            let mut plus = seq.clone();
            plus[t][j] += eps;
            let mut minus = seq.clone();
            minus[t][j] -= eps;
            let numeric = (loss(&net, &plus, &out_w) - loss(&net, &minus, &out_w)) / (2.0 * eps);
            worst = worst.max(rel_err(input_grads[t][j], numeric));
        }
    }
    worst
}
