use crate::net::{DenseNet, ParamGrads};

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: i32,
    m: ParamGrads,
    v: ParamGrads,
}

impl Adam {
    pub fn new(net: &DenseNet, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: ParamGrads::zeros_like(net),
            v: ParamGrads::zeros_like(net),
        }
    }

    /// Descend along `grads`.
    pub fn step(&mut self, net: &mut DenseNet, grads: &ParamGrads) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut update = grads.clone();
        for ((ul, (ml, vl)), gl) in update
            .layers
            .iter_mut()
            .zip(self.m.layers.iter_mut().zip(self.v.layers.iter_mut()))
            .zip(&grads.layers)
        {
            let pairs = ul
                .weights
                .iter_mut()
                .zip(ml.weights.iter_mut().zip(vl.weights.iter_mut()))
                .zip(&gl.weights)
                .chain(
                    ul.biases
                        .iter_mut()
                        .zip(ml.biases.iter_mut().zip(vl.biases.iter_mut()))
                        .zip(&gl.biases),
                );
            for ((u, (m, v)), g) in pairs {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                *u = self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
            }
        }
        net.apply_step(&update);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Dense;
    use crate::neuron::NeuronParams;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let layer = Dense::from_parts(2, 1, vec![1.0, -1.0], vec![0.0]).unwrap();
        let mut net = DenseNet::from_layers(vec![layer], NeuronParams::default()).unwrap();
        let mut opt = Adam::new(&net, 0.01);
        let g = ParamGrads::from_flat(&net, &[3.0, -0.5, 0.0]);
        opt.step(&mut net, &g);
        let w = net.layers()[0].weights();
        assert!((w[0] - 0.99).abs() < 1e-9);
        assert!((w[1] + 0.99).abs() < 1e-9);
        assert_eq!(net.layers()[0].biases()[0], 0.0);
    }

    #[test]
    fn minimizes_a_quadratic() {
        // loss = sum (w - 2)^2 over a linear layer's parameters
        let mut net = DenseNet::from_layers(vec![Dense::zeros(3, 2)], NeuronParams::default()).unwrap();
        let mut opt = Adam::new(&net, 0.05);
        for _ in 0..2000 {
            let flat: Vec<f64> = net
                .layers()
                .iter()
                .flat_map(|l| l.weights().iter().chain(l.biases()))
                .map(|w| 2.0 * (w - 2.0))
                .collect();
            let g = ParamGrads::from_flat(&net, &flat);
            opt.step(&mut net, &g);
        }
        for l in net.layers() {
            for w in l.weights().iter().chain(l.biases()) {
                assert!((w - 2.0).abs() < 1e-3, "{w}");
            }
        }
    }
}
