use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::SchemaMismatch(format!(
                "unknown activation {other:?}"
            ))),
        }
    }
}

/// Affine map `y = W x + b` followed by an activation. `weight` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Dense<T> {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Uniform init scaled by fan-in: bound `sqrt(6 / fan_in)` ahead of a relu,
    /// `sqrt(3 / fan_in)` otherwise. Biases start at zero.
    pub fn init<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let gain = match activation {
            Activation::Relu => 6.0,
            Activation::Identity => 3.0,
        };
        let bound = (gain / in_dim as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| T::lit(rng.random_range(-bound..bound)))
            .collect();
        Dense {
            weight: Matrix::from_vec(out_dim, in_dim, data).expect("sized above"),
            bias: vec![T::zero(); out_dim],
            activation,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Dense {
            weight: Matrix::zeros(out_dim, in_dim),
            bias: vec![T::zero(); out_dim],
            activation,
        }
    }
}

/// Feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Dense<T>>,
}

/// Intermediates recorded by [`Mlp::forward`] and consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Tape<T> {
    inputs: Vec<Matrix<T>>,
    pre_activations: Vec<Matrix<T>>,
    shapes: Vec<(usize, usize)>,
}

/// Parameter gradients, congruent with the owning network.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn from_layers(layers: Vec<Dense<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch(
                "network needs at least one layer".into(),
            ));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "layer dims do not chain: {} -> {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        for l in &layers {
            if l.bias.len() != l.out_dim() {
                return Err(Error::ShapeMismatch("bias length != out dim".into()));
            }
        }
        Ok(Mlp { layers })
    }

    /// Random network with the given widths; every layer but the last is relu.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "need input and output widths");
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|k| {
                let act = if k + 1 < n {
                    Activation::Relu
                } else {
                    Activation::Identity
                };
                Dense::init(widths[k], widths[k + 1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.rows() * l.weight.cols() + l.bias.len())
            .sum()
    }

    /// Architecture string, e.g. `32x64:relu,64x16:identity`.
    pub fn arch(&self) -> String {
        self.layers
            .iter()
            .map(|l| format!("{}x{}:{}", l.in_dim(), l.out_dim(), l.activation))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn forward(&self, batch: &Matrix<T>) -> Result<(Matrix<T>, Tape<T>)> {
        self.check_input(batch)?;
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.layers.len()),
            pre_activations: Vec::with_capacity(self.layers.len()),
            shapes: self.shapes(),
        };
        let mut x = batch.clone();
        for layer in &self.layers {
            let z = affine(layer, &x);
            let y = activate(layer.activation, &z);
            tape.inputs.push(x);
            tape.pre_activations.push(z);
            x = y;
        }
        Ok((x, tape))
    }

    /// Forward pass without recording a tape.
    pub fn infer(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(batch)?;
        let mut x = affine(&self.layers[0], batch);
        x = activate(self.layers[0].activation, &x);
        for layer in &self.layers[1..] {
            x = activate(layer.activation, &affine(layer, &x));
        }
        Ok(x)
    }

    pub fn backward(
        &self,
        tape: &Tape<T>,
        output_grad: &Matrix<T>,
    ) -> Result<(Grads<T>, Matrix<T>)> {
        if tape.shapes != self.shapes() || tape.inputs.len() != self.layers.len() {
            return Err(Error::TapeMismatch);
        }
        let n = tape.inputs[0].rows();
        if output_grad.shape() != (n, self.out_dim()) {
            return Err(Error::ShapeMismatch(format!(
                "output grad {:?}, expected ({n}, {})",
                output_grad.shape(),
                self.out_dim()
            )));
        }
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        let mut g = output_grad.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                let z = &tape.pre_activations[k];
                for (gv, &zv) in g.as_mut_slice().iter_mut().zip(z.as_slice()) {
                    if zv <= T::zero() {
                        *gv = T::zero();
                    }
                }
            }
            let input = &tape.inputs[k];
            let (out_dim, in_dim) = layer.weight.shape();
            let mut dw = Matrix::zeros(out_dim, in_dim);
            let mut db = vec![T::zero(); out_dim];
            for s in 0..n {
                let gs = g.row(s);
                let xs = input.row(s);
                for o in 0..out_dim {
                    let go = gs[o];
                    if go == T::zero() {
                        continue;
                    }
                    db[o] += go;
                    for (w, &xv) in dw.row_mut(o).iter_mut().zip(xs) {
                        *w += go * xv;
                    }
                }
            }
            let mut dx = Matrix::zeros(n, in_dim);
            for s in 0..n {
                let gs = g.row(s);
                let dxs = dx.row_mut(s);
                for (o, &go) in gs.iter().enumerate() {
                    if go == T::zero() {
                        continue;
                    }
                    for (d, &w) in dxs.iter_mut().zip(layer.weight.row(o)) {
                        *d += go * w;
                    }
                }
            }
            weights.push(dw);
            biases.push(db);
            g = dx;
        }
        weights.reverse();
        biases.reverse();
        Ok((Grads { weights, biases }, g))
    }

    pub fn zero_grads(&self) -> Grads<T> {
        Grads {
            weights: self
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            biases: self
                .layers
                .iter()
                .map(|l| vec![T::zero(); l.out_dim()])
                .collect(),
        }
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn params_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[T]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ShapeMismatch(format!(
                "{} params for a network of {}",
                params.len(),
                self.n_params()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weight.as_slice().len();
            l.weight
                .as_mut_slice()
                .copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| l.weight.shape()).collect()
    }

    fn check_input(&self, batch: &Matrix<T>) -> Result<()> {
        if batch.cols() != self.in_dim() || batch.rows() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "batch {:?} for network input width {}",
                batch.shape(),
                self.in_dim()
            )));
        }
        if !batch.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        Ok(())
    }
}

impl<T: Scalar> Grads<T> {
    pub fn flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &Grads<T>) -> Result<()> {
        if !self.congruent(other) {
            return Err(Error::ShapeMismatch("gradient shapes differ".into()));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, &y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, c: T) {
        for w in &mut self.weights {
            for x in w.as_mut_slice() {
                *x *= c;
            }
        }
        for b in &mut self.biases {
            for x in b {
                *x *= c;
            }
        }
    }

    pub(crate) fn congruent(&self, other: &Grads<T>) -> bool {
        self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.shape() == b.shape())
            && self
                .biases
                .iter()
                .zip(&other.biases)
                .all(|(a, b)| a.len() == b.len())
    }

    pub(crate) fn matches(&self, net: &Mlp<T>) -> bool {
        self.weights.len() == net.layers.len()
            && self
                .weights
                .iter()
                .zip(&net.layers)
                .all(|(w, l)| w.shape() == l.weight.shape())
            && self
                .biases
                .iter()
                .zip(&net.layers)
                .all(|(b, l)| b.len() == l.bias.len())
    }
}

// z[s][o] = b[o] + sum_i W[o][i] x[s][i], summed in index order.
fn affine<T: Scalar>(layer: &Dense<T>, x: &Matrix<T>) -> Matrix<T> {
    let n = x.rows();
    let out_dim = layer.out_dim();
    let mut z = Matrix::zeros(n, out_dim);
    for s in 0..n {
        let xs = x.row(s);
        for (o, zo) in z.row_mut(s).iter_mut().enumerate() {
            let mut acc = layer.bias[o];
            for (&w, &xv) in layer.weight.row(o).iter().zip(xs) {
                acc += w * xv;
            }
            *zo = acc;
        }
    }
    z
}

fn activate<T: Scalar>(act: Activation, z: &Matrix<T>) -> Matrix<T> {
    match act {
        Activation::Identity => z.clone(),
        Activation::Relu => z.map(|v| if v > T::zero() { v } else { T::zero() }),
    }
}
