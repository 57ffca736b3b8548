mod common;

use common::*;
use spiking_actor::net::DenseNet;
use spiking_actor::neuron::NeuronParams;

#[test]
fn random_nets_pass_finite_difference_certification() {
    let (rel, abs) = gradient_certification(20);
    assert!(rel < 1e-4, "relative {rel:e}");
    assert!(abs < 1e-6, "absolute {abs:e}");
}

#[test]
fn gradients_near_threshold_are_certified() {
    // Every hidden unit sits within 0.01 of threshold, where the soft curve bends hardest.
    let mut net = DenseNet::init(&[3, 8, 8, 2], 7, NeuronParams::default()).unwrap();
    for layer in &mut net.layers_mut()[..2] {
        layer.weights_mut().iter_mut().for_each(|w| *w *= 0.01);
        layer.biases_mut().fill(1.0);
    }
    let (rel, _) = max_gradient_error(&net, &[0.2, 0.5, 0.9], &[1.0, -0.5]);
    assert!(rel < 1e-4, "{rel:e}");
}
