use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::mlp::{Grads, Mlp};

/// SGD with heavy-ball momentum; weight decay is folded into the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState<T> {
    velocity: Grads<T>,
    pub lr: T,
    pub momentum: T,
    pub weight_decay: T,
}

impl<T: Scalar> OptimState<T> {
    pub fn new(net: &Mlp<T>, lr: T, momentum: T, weight_decay: T) -> Result<Self> {
        if !(lr >= T::zero() && momentum >= T::zero() && weight_decay >= T::zero()) {
            return Err(Error::BadTrainConfig(
                "optimizer hyperparameters must be non-negative".into(),
            ));
        }
        Ok(OptimState {
            velocity: net.zero_grads(),
            lr,
            momentum,
            weight_decay,
        })
    }

    pub fn velocity(&self) -> &Grads<T> {
        &self.velocity
    }
}

/// `v ← μ·v + g + wd·θ;  θ ← θ − lr·v`
pub fn sgd_step<T: Scalar>(
    net: &mut Mlp<T>,
    grads: &Grads<T>,
    state: &mut OptimState<T>,
) -> Result<()> {
    if !grads.matches(net) || !state.velocity.matches(net) {
        return Err(Error::ShapeMismatch(
            "gradients or optimizer state do not match network".into(),
        ));
    }
    let (lr, mu, wd) = (state.lr, state.momentum, state.weight_decay);
    for (k, layer) in net.layers_mut().iter_mut().enumerate() {
        let params = layer.weight.as_mut_slice();
        let vel = state.velocity.weights[k].as_mut_slice();
        let g = grads.weights[k].as_slice();
        for ((p, v), &gv) in params.iter_mut().zip(vel).zip(g) {
            *v = mu * *v + gv + wd * *p;
            *p -= lr * *v;
        }
        let vel = &mut state.velocity.biases[k];
        for ((p, v), &gv) in layer.bias.iter_mut().zip(vel).zip(&grads.biases[k]) {
            *v = mu * *v + gv + wd * *p;
            *p -= lr * *v;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::tensornet::{Activation, Dense};

    fn scalar_net(w: f64) -> Mlp<f64> {
        Mlp::from_layers(vec![Dense {
            weight: Matrix::from_vec(1, 1, vec![w]).unwrap(),
            bias: vec![0.0],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    fn scalar_grad(g: f64) -> Grads<f64> {
        Grads {
            weights: vec![Matrix::from_vec(1, 1, vec![g]).unwrap()],
            biases: vec![vec![0.0]],
        }
    }

    #[test]
    fn plain_sgd() {
        let mut net = scalar_net(2.0);
        let mut st = OptimState::new(&net, 0.1, 0.0, 0.0).unwrap();
        sgd_step(&mut net, &scalar_grad(3.0), &mut st).unwrap();
        assert_eq!(net.layers()[0].weight[(0, 0)], 2.0 - 0.1 * 3.0);
    }

    #[test]
    fn zero_grad_no_decay_is_noop() {
        let mut net = scalar_net(1.5);
        let before = net.clone();
        let mut st = OptimState::new(&net, 0.1, 0.9, 0.0).unwrap();
        sgd_step(&mut net, &scalar_grad(0.0), &mut st).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn momentum_two_steps_by_hand() {
        // w0 = 1, lr = 0.1, mu = 0.9, wd = 0.01, grads 2 then -1.
        // v1 = 2 + 0.01*1 = 2.01;             w1 = 1 - 0.201 = 0.799
        // v2 = 0.9*2.01 - 1 + 0.01*0.799;     w2 = w1 - 0.1*v2
        let mut net = scalar_net(1.0);
        let mut st = OptimState::new(&net, 0.1, 0.9, 0.01).unwrap();
        sgd_step(&mut net, &scalar_grad(2.0), &mut st).unwrap();
        let w1 = 1.0 - 0.1 * (2.0 + 0.01 * 1.0);
        assert_eq!(net.layers()[0].weight[(0, 0)], w1);
        sgd_step(&mut net, &scalar_grad(-1.0), &mut st).unwrap();
        let v2 = 0.9 * (2.0 + 0.01 * 1.0) + -1.0 + 0.01 * w1;
        assert_eq!(net.layers()[0].weight[(0, 0)], w1 - 0.1 * v2);
    }

    #[test]
    fn mismatched_grads_rejected() {
        let mut net = scalar_net(1.0);
        let mut st = OptimState::new(&net, 0.1, 0.9, 0.0).unwrap();
        let g = Grads {
            weights: vec![Matrix::zeros(2, 1)],
            biases: vec![vec![0.0; 2]],
        };
        assert!(matches!(
            sgd_step(&mut net, &g, &mut st),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(OptimState::new(&net, -0.1, 0.9, 0.0).is_err());
    }
}
